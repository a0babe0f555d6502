import math

import numpy as np
import pytest
from scipy.integrate import quad

from smml1d import (
    SupportError,
    density_mass_ratio,
    differential_entropy,
    interval_integrals,
)

BETA = math.sqrt(5.0)
HALF_NORMAL_MEAN = BETA * math.sqrt(2.0 / math.pi)


class TestIntervalIntegrals:
    def test_half_line_normal(self, nn):
        """Mass and centroid of (0, inf) have closed forms for the normal."""
        _, marginal = nn
        ii = interval_integrals(marginal, 0.0, math.inf)
        assert ii.log_mass == pytest.approx(math.log(0.5), abs=1e-13)
        assert ii.centroid == pytest.approx(HALF_NORMAL_MEAN, rel=1e-12)

    def test_full_line_lomax(self, eg):
        _, marginal = eg
        ii = interval_integrals(marginal, 0.0, math.inf)
        assert abs(ii.log_mass) < 1e-12
        assert ii.centroid == pytest.approx(1.0, rel=1e-12)  # Lomax mean b/(a-1)

    def test_far_interval_does_not_underflow(self, nn):
        """(30, 31): the mass is ~1e-198 but its log must come out finite,
        equal to log r(30) plus the log of the rescaled integral."""
        _, marginal = nn
        ii = interval_integrals(marginal, 30.0, 31.0)
        assert math.isfinite(ii.log_mass)
        scaled, _ = quad(lambda x: math.exp(-(x * x - 900.0) / 10.0), 30.0, 31.0,
                         epsabs=0.0, epsrel=1e-13)
        expected = float(marginal.log_pdf(30.0)) + math.log(scaled)
        assert ii.log_mass == pytest.approx(expected, abs=1e-11)

    def test_additivity(self, nn):
        _, marginal = nn
        whole = interval_integrals(marginal, -1.3, 2.9)
        left = interval_integrals(marginal, -1.3, 0.7)
        right = interval_integrals(marginal, 0.7, 2.9)
        total = math.exp(left.log_mass) + math.exp(right.log_mass)
        assert math.exp(whole.log_mass) == pytest.approx(total, rel=1e-10)

    @pytest.mark.parametrize("cuts", [(-2.0, 1.0), (-31.5, -4.2, 0.3, 8.8, 33.0)])
    def test_partition_mass_sums_to_one(self, nn, cuts):
        _, marginal = nn
        bounds = (-math.inf, *cuts, math.inf)
        logs = [interval_integrals(marginal, lo, hi).log_mass
                for lo, hi in zip(bounds, bounds[1:])]
        top = max(logs)
        total = math.exp(top) * math.fsum(math.exp(lq - top) for lq in logs)
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_symmetric_interval_centroid_is_zero(self, nn):
        _, marginal = nn
        for half in (0.5, 2.0, 7.7):
            ii = interval_integrals(marginal, -half, half)
            assert abs(ii.centroid) < 1e-12

    def test_scaled_path_matches_naive_quadrature(self, nn, eg):
        """Where the mass is representable, scipy integrating the raw density
        must agree with the log-domain path."""
        for (_, marginal), (lo, hi) in (
            (nn, (-1.0, 2.5)), (nn, (3.0, 9.0)), (eg, (0.5, 4.0)), (eg, (10.0, 300.0)),
        ):
            naive, _ = quad(lambda x: float(np.exp(marginal.log_pdf(x))), lo, hi,
                            epsabs=0.0, epsrel=1e-12)
            ii = interval_integrals(marginal, lo, hi)
            assert math.exp(ii.log_mass) == pytest.approx(naive, rel=1e-10)

    def test_centroid_strictly_inside(self, nn):
        _, marginal = nn
        rng = np.random.default_rng(5)
        for _ in range(25):
            lo, hi = np.sort(rng.uniform(-12.0, 12.0, size=2))
            if hi - lo < 1e-3:
                continue
            ii = interval_integrals(marginal, lo, hi)
            assert lo < ii.centroid < hi

    def test_ref_point_is_interval_argmax(self, nn):
        _, marginal = nn
        assert interval_integrals(marginal, 1.0, 4.0).ref_point == 1.0
        assert interval_integrals(marginal, -4.0, -1.0).ref_point == -1.0
        assert interval_integrals(marginal, -1.0, 4.0).ref_point == 0.0

    def test_bad_intervals(self, nn, eg):
        _, marginal = nn
        with pytest.raises(ValueError):
            interval_integrals(marginal, 2.0, 2.0)
        with pytest.raises(ValueError):
            interval_integrals(marginal, 3.0, 1.0)
        _, lomax = eg
        with pytest.raises(SupportError):
            interval_integrals(lomax, -2.0, -1.0)


class TestDensityMassRatio:
    def test_whole_support_denominator(self, nn, eg):
        _, marginal = nn
        expected = 1.0 / (BETA * math.sqrt(2 * math.pi))
        assert density_mass_ratio(marginal, 0.0, -math.inf, math.inf) == pytest.approx(
            expected, rel=1e-12)
        _, lomax = eg
        assert density_mass_ratio(lomax, 0.0, 0.0, math.inf) == pytest.approx(2.0, rel=1e-12)

    @pytest.mark.parametrize(
        "lo, hi",
        [
            (41.1964, 62.1447),  # tail interval with mass around 1e-76
            (93.45, 120.0),      # density itself underflows float64 here
        ],
    )
    def test_deep_tail_ratio_against_mpmath(self, nn, lo, hi):
        """Deep-tail ratio against a 50-digit oracle built from the exact
        normal tail masses (erfc in extended precision)."""
        mpmath = pytest.importorskip("mpmath")
        _, marginal = nn
        got = density_mass_ratio(marginal, lo, lo, hi)
        mp = mpmath.mp
        old = mp.dps
        try:
            mp.dps = 50
            beta = mpmath.sqrt(5)
            def sf(x):
                return mpmath.erfc(x / (beta * mpmath.sqrt(2))) / 2
            dens = mpmath.exp(-mpmath.mpf(lo) ** 2 / 10) / mpmath.sqrt(10 * mpmath.pi)
            expected = dens / (sf(lo) - sf(hi))
        finally:
            mp.dps = old
        assert got == pytest.approx(float(expected), rel=1e-10)

    def test_ratio_finite_when_parts_underflow(self, nn):
        _, marginal = nn
        assert float(np.exp(marginal.log_pdf(93.45))) == 0.0
        ratio = density_mass_ratio(marginal, 93.45, 93.45, math.inf)
        assert math.isfinite(ratio) and ratio > 0.0

    def test_point_outside_support(self, eg):
        _, marginal = eg
        with pytest.raises(SupportError):
            density_mass_ratio(marginal, -1.0, 0.0, math.inf)


class TestDifferentialEntropy:
    def test_normal_closed_form(self, nn):
        _, marginal = nn
        expected = 0.5 * math.log(2 * math.pi * math.e * 5.0)
        assert differential_entropy(marginal) == pytest.approx(expected, abs=1e-10)

    def test_lomax_closed_form(self, eg):
        _, marginal = eg
        expected = 1.0 + 1.0 / 2.0 + math.log(1.0 / 2.0)
        assert differential_entropy(marginal) == pytest.approx(expected, abs=1e-10)

    def test_positive_for_wide_density(self, nn):
        _, marginal = nn
        assert differential_entropy(marginal) > 0.0
