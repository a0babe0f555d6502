import math

import numpy as np
import pytest
from scipy.integrate import quad

from smml1d import (
    LOCAL_MINIMUM,
    NOT_CRITICAL,
    SADDLE,
    CutPointVector,
    SolverOptions,
    SupportError,
    classify_critical_point,
    codebook_from_cutpoints,
    continuity_gaps,
    curve_samples,
    gradient,
    jacobian,
    marginal_entropy,
    message_length,
    multi_start_solve,
    newton_solve,
)
from smml1d.estimator import solve_sweep

BETA = math.sqrt(5.0)
HALF_NORMAL_MEAN = BETA * math.sqrt(2.0 / math.pi)

# High-precision redundancy values at the optima, computed independently with
# mpmath (closed-form normal/Lomax interval moments + multiprecision root
# finding, 60 significant digits).
NORMAL_REDUNDANCY = {
    1: 0.2968787934239418,
    2: 0.1848522962209069,
    3: 0.1756409557598873,
    4: 0.17531318312966,
    5: 0.17531261431506,
    6: 0.1753120749683,
}
NORMAL_SIX_CUT_SECOND_MINIMUM = 0.17531261431506
EXP_REDUNDANCY = {
    1: 0.058912861229508,
    2: 0.057904507855295,
    3: 0.057900816329763,
    4: 0.057900803640766,
    5: 0.057900803597306,
}


@pytest.fixture(scope="module")
def nn_sweep6(nn):
    family, marginal = nn
    return solve_sweep(family, marginal, 1, 6)


@pytest.fixture(scope="module")
def eg_sweep5(eg):
    family, marginal = eg
    return solve_sweep(family, marginal, 1, 5)


def _random_configs(marginal, rng, count, n_range=(1, 5)):
    """Well-separated random cut-point sets drawn through the quantile map."""
    out = []
    while len(out) < count:
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        p = np.sort(rng.uniform(0.08, 0.92, size=n))
        cuts = np.array([marginal.quantile(v) for v in p])
        if n == 1 or np.min(np.diff(cuts)) > 0.05:
            out.append(cuts)
    return out


class TestCutPointVector:
    def test_rejects_duplicates(self):
        with pytest.raises(ValueError):
            CutPointVector((1.0, 1.0))

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            CutPointVector((2.0, 1.0))

    def test_rejects_empty_and_nonfinite(self):
        with pytest.raises(ValueError):
            CutPointVector(())
        with pytest.raises(ValueError):
            CutPointVector((0.0, math.inf))


class TestCodeBook:
    def test_single_cut_at_zero(self, nn):
        family, marginal = nn
        book = codebook_from_cutpoints(family, marginal, [0.0])
        assert book.log_q[0] == pytest.approx(math.log(0.5), abs=1e-13)
        assert book.log_q[1] == pytest.approx(math.log(0.5), abs=1e-13)
        assert book.theta_hat[1] == pytest.approx(HALF_NORMAL_MEAN, rel=1e-12)
        assert book.theta_hat[0] == -book.theta_hat[1]

    def test_lomax_single_cut(self, eg):
        """Masses from the closed-form CDF, centroids from scipy as oracle."""
        family, marginal = eg
        cut = 4.49
        book = codebook_from_cutpoints(family, marginal, [cut])
        assert math.exp(book.log_q[0]) == pytest.approx(1.0 - 5.49 ** -2, rel=1e-12)
        dens = lambda x: 2.0 * (1.0 + x) ** -3.0
        mass0, _ = quad(dens, 0.0, cut, epsabs=0, epsrel=1e-13)
        mom0, _ = quad(lambda x: x * dens(x), 0.0, cut, epsabs=0, epsrel=1e-13)
        assert book.centroids[0] == pytest.approx(mom0 / mass0, rel=1e-11)
        assert book.theta_hat[0] == pytest.approx(-mass0 / mom0, rel=1e-11)
        assert book.theta_hat[1] == pytest.approx(-1.0 / (2 * cut + 1.0), rel=1e-11)

    def test_masses_sum_to_one(self, nn):
        family, marginal = nn
        book = codebook_from_cutpoints(family, marginal, [-5.0, -1.0, 0.5, 9.0])
        assert math.fsum(math.exp(lq) for lq in book.log_q) == pytest.approx(1.0, abs=1e-9)
        assert all(math.isfinite(lq) for lq in book.log_q)

    def test_centroid_containment(self, nn):
        family, marginal = nn
        cuts = [-7.0, -2.0, 0.3, 4.4]
        book = codebook_from_cutpoints(family, marginal, cuts)
        bounds = (-math.inf, *cuts, math.inf)
        for (lo, hi), c in zip(zip(bounds, bounds[1:]), book.centroids):
            assert lo < c < hi

    def test_invalid_cuts(self, nn, eg):
        family, marginal = nn
        with pytest.raises(ValueError):
            codebook_from_cutpoints(family, marginal, [1.0, 1.0])
        family_e, marginal_e = eg
        with pytest.raises(SupportError):
            codebook_from_cutpoints(family_e, marginal_e, [-1.0, 2.0])


class TestMessageLength:
    def test_normal_single_cut_value(self, nn):
        family, marginal = nn
        book = codebook_from_cutpoints(family, marginal, [0.0])
        red = message_length(family, marginal, book) - marginal_entropy(marginal)
        assert red == pytest.approx(NORMAL_REDUNDANCY[1], abs=1e-11)

    def test_normal_six_cut_table_row(self, nn):
        # the printed cuts are rounded to 4 decimals; quadratic slack in the
        # objective keeps the value within ~1e-9 of the optimum
        family, marginal = nn
        cuts = [-10.8840, -5.9797, -1.9203, 1.9203, 5.9797, 10.8840]
        book = codebook_from_cutpoints(family, marginal, cuts)
        red = message_length(family, marginal, book) - marginal_entropy(marginal)
        assert red == pytest.approx(NORMAL_REDUNDANCY[6], abs=2e-9)

    def test_lomax_single_cut_table_row(self, eg):
        # cut printed to 2 decimals; the curvature there makes the value
        # accurate to ~1e-7 only
        family, marginal = eg
        book = codebook_from_cutpoints(family, marginal, [4.49])
        red = message_length(family, marginal, book) - marginal_entropy(marginal)
        assert red == pytest.approx(EXP_REDUNDANCY[1], abs=5e-7)


class TestGradient:
    def test_symmetric_single_cut_is_stationary(self, nn):
        family, marginal = nn
        book = codebook_from_cutpoints(family, marginal, [0.0])
        assert gradient(family, marginal, book)[0] == 0.0

    def test_table_cuts_nearly_stationary(self, nn):
        family, marginal = nn
        cuts = [-10.8840, -5.9797, -1.9203, 1.9203, 5.9797, 10.8840]
        book = codebook_from_cutpoints(family, marginal, cuts)
        assert np.max(np.abs(gradient(family, marginal, book))) <= 5e-4

    @pytest.mark.parametrize("pair_name", ["nn", "eg"])
    def test_matches_finite_differences_of_length(self, pair_name, request):
        """r(a_j) * G_j must equal the length's centered difference quotient."""
        family, marginal = request.getfixturevalue(pair_name)
        rng = np.random.default_rng(42)
        h = 1e-5
        for cuts in _random_configs(marginal, rng, 6):
            book = codebook_from_cutpoints(family, marginal, cuts)
            grad = gradient(family, marginal, book)
            dens = np.exp(np.asarray(marginal.log_pdf(cuts), dtype=float))
            for j in range(cuts.size):
                up, dn = cuts.copy(), cuts.copy()
                up[j] += h
                dn[j] -= h
                fd = (
                    message_length(family, marginal, codebook_from_cutpoints(family, marginal, up))
                    - message_length(family, marginal, codebook_from_cutpoints(family, marginal, dn))
                ) / (2 * h)
                assert dens[j] * grad[j] == pytest.approx(fd, rel=1e-4)


class TestJacobian:
    def test_off_tridiagonal_structurally_zero(self, nn):
        family, marginal = nn
        book = codebook_from_cutpoints(family, marginal, [-3.0, -1.0, 0.5, 2.0, 5.0])
        dense = jacobian(family, marginal, book).to_dense()
        n = dense.shape[0]
        for j in range(n):
            for k in range(n):
                if abs(j - k) > 1:
                    assert dense[j, k] == 0.0

    def test_single_cut_closed_form(self, nn):
        family, marginal = nn
        book = codebook_from_cutpoints(family, marginal, [0.0])
        r0 = 1.0 / (BETA * math.sqrt(2 * math.pi))
        expected = 2 * HALF_NORMAL_MEAN - 2 * (r0 / 0.5) * (1 + 2 * 5.0 / math.pi)
        J = jacobian(family, marginal, book)
        assert J.diag[0] == pytest.approx(expected, rel=1e-11)
        assert expected > 0  # the zero-cut configuration is a genuine minimum

    @pytest.mark.parametrize("pair_name", ["nn", "eg"])
    def test_matches_finite_differences_of_gradient(self, pair_name, request):
        family, marginal = request.getfixturevalue(pair_name)
        rng = np.random.default_rng(17)
        h = 1e-5
        for cuts in _random_configs(marginal, rng, 5, n_range=(2, 5)):
            book = codebook_from_cutpoints(family, marginal, cuts)
            dense = jacobian(family, marginal, book).to_dense()
            scale = np.max(np.abs(dense))
            for k in range(cuts.size):
                up, dn = cuts.copy(), cuts.copy()
                up[k] += h
                dn[k] -= h
                fd = (
                    gradient(family, marginal, codebook_from_cutpoints(family, marginal, up))
                    - gradient(family, marginal, codebook_from_cutpoints(family, marginal, dn))
                ) / (2 * h)
                for j in range(cuts.size):
                    if abs(j - k) > 1:
                        assert abs(fd[j]) < 1e-7 * max(1.0, scale)
                    else:
                        assert fd[j] == pytest.approx(dense[j, k], rel=1e-4, abs=1e-8 * scale)


class TestNewtonSolve:
    def test_two_cuts_converges_to_symmetric_optimum(self, nn):
        family, marginal = nn
        report = newton_solve(family, marginal, [-2.2, 1.8])
        assert report.converged
        assert report.classification == LOCAL_MINIMUM
        np.testing.assert_allclose(report.cuts, [-1.97396226317, 1.97396226317], atol=1e-9)
        assert report.redundancy == pytest.approx(NORMAL_REDUNDANCY[2], abs=1e-12)

    def test_lomax_three_cuts(self, eg):
        family, marginal = eg
        report = newton_solve(family, marginal, [5.0, 70.0, 1000.0])
        assert report.converged
        np.testing.assert_allclose(
            report.cuts, [4.4216069824, 80.1738648054, 1380.63384714], rtol=1e-9)
        assert report.redundancy == pytest.approx(EXP_REDUNDANCY[3], abs=1e-12)

    def test_six_cut_second_minimum(self, nn):
        """A second basin: local minimum that is not the best six-cut book."""
        family, marginal = nn
        start = [-5.9978, -1.9362, 1.9044, 5.9619, 10.8610, 17.5118]
        report = newton_solve(family, marginal, start)
        assert report.converged
        assert report.classification == LOCAL_MINIMUM
        assert report.redundancy == pytest.approx(NORMAL_SIX_CUT_SECOND_MINIMUM, abs=1e-11)
        assert report.redundancy > NORMAL_REDUNDANCY[6]

    def test_converged_respects_tolerance_field(self, nn):
        family, marginal = nn
        opts = SolverOptions(tol=1e-10)
        report = newton_solve(family, marginal, [-2.2, 1.8], opts)
        assert report.converged
        assert report.final_grad_norm <= 1e-10
        assert report.grad_norm_trace[-1] == report.final_grad_norm

    def test_unattainable_tolerance_reports_failure(self, nn):
        family, marginal = nn
        opts = SolverOptions(tol=1e-18, max_iter=40)
        report = newton_solve(family, marginal, [-2.2, 1.8], opts)
        assert not report.converged
        assert report.final_grad_norm > 1e-18
        assert report.diagnostic  # names the reason instead of raising

    def test_infeasible_start_raises(self, nn):
        family, marginal = nn
        with pytest.raises(ValueError):
            newton_solve(family, marginal, [1.0, 1.0])

    def test_report_gap_nonnegative_at_minima(self, nn_sweep6):
        for reports in nn_sweep6.values():
            for rep in reports:
                assert rep.redundancy >= 0.0


class TestClassification:
    def test_single_cut_minimum(self, nn):
        family, marginal = nn
        book = codebook_from_cutpoints(family, marginal, [0.0])
        assert classify_critical_point(family, marginal, book, 0.0) == LOCAL_MINIMUM

    def test_gate_on_gradient_norm(self, nn):
        family, marginal = nn
        book = codebook_from_cutpoints(family, marginal, [1.0])
        assert classify_critical_point(family, marginal, book, 0.1) == NOT_CRITICAL

    def test_symmetric_five_cut_saddle(self, nn):
        """The symmetric five-cut stationary book is a saddle, which is why
        the five-cut minima come in an asymmetric mirror pair."""
        family, marginal = nn
        p = [i / 6 for i in range(1, 6)]
        report = newton_solve(family, marginal, [marginal.quantile(v) for v in p])
        assert report.converged
        assert report.classification == SADDLE


class TestMultiStart:
    def test_five_cuts_mirror_pair(self, nn_sweep6):
        reports = nn_sweep6[5]
        assert len(reports) == 2
        first, second = (np.asarray(r.cuts) for r in reports)
        np.testing.assert_allclose(first, -second[::-1], atol=1e-9)
        assert reports[0].redundancy == pytest.approx(reports[1].redundancy, abs=1e-10)

    def test_six_cuts_best_and_second_minimum(self, nn_sweep6):
        reports = nn_sweep6[6]
        best = reports[0]
        assert best.redundancy == pytest.approx(NORMAL_REDUNDANCY[6], abs=1e-11)
        others = [r for r in reports[1:]
                  if abs(r.redundancy - NORMAL_SIX_CUT_SECOND_MINIMUM) < 1e-9]
        assert others, "the second six-cut minimum should be found and ranked worse"
        assert all(r.redundancy > best.redundancy for r in others)

    def test_lomax_solutions_unique(self, eg_sweep5):
        for n, reports in eg_sweep5.items():
            assert len(reports) == 1, f"n={n} should have a unique minimum"

    def test_matches_single_call(self, eg):
        family, marginal = eg
        direct = multi_start_solve(family, marginal, 2)
        assert len(direct) == 1
        np.testing.assert_allclose(direct[0].cuts, [4.42187055929, 80.5547698108], rtol=1e-9)

    def test_rejects_bad_n(self, nn):
        family, marginal = nn
        with pytest.raises(ValueError):
            multi_start_solve(family, marginal, 0)


class TestContinuityGaps:
    def test_equals_gradient_magnitude(self, nn):
        family, marginal = nn
        rng = np.random.default_rng(23)
        for cuts in _random_configs(marginal, rng, 5):
            book = codebook_from_cutpoints(family, marginal, cuts)
            gaps = continuity_gaps(family, marginal, book)
            np.testing.assert_allclose(
                gaps, np.abs(gradient(family, marginal, book)), atol=1e-12)

    def test_zero_at_symmetric_cut(self, nn):
        family, marginal = nn
        book = codebook_from_cutpoints(family, marginal, [0.0])
        assert continuity_gaps(family, marginal, book)[0] == 0.0

    def test_small_at_converged_solutions(self, nn_sweep6):
        for reports in nn_sweep6.values():
            for rep in reports:
                assert max(rep.continuity_gaps) <= 10 * SolverOptions().tol


class TestCurveSamples:
    def test_two_part_density_continuous_across_cuts(self, nn, nn_sweep6):
        family, marginal = nn
        best = nn_sweep6[6][0]
        for cut in best.cuts:
            table = curve_samples(family, marginal, best.codebook, cut - 1e-9, cut + 1e-9, 2)
            assert abs(table.two_part[1] - table.two_part[0]) <= 1e-6

    def test_tail_decay(self, nn, nn_sweep6):
        family, marginal = nn
        best = nn_sweep6[6][0]
        table = curve_samples(family, marginal, best.codebook, 30.0, 45.0, 50)
        assert np.all(np.abs(table.one_part) < 1e-30)
        assert np.all(np.abs(table.two_part) < 1e-30)
        assert np.all(table.density < 1e-30)
        assert abs(table.one_part[-1]) < 1e-80 and table.density[-1] < 1e-80

    def test_trapezoid_integrals_match(self, nn, nn_sweep6):
        """Trapezoid sums of the sampled densities reproduce both code
        lengths; the length and entropy functions act as the oracle."""
        family, marginal = nn
        best = nn_sweep6[6][0]
        table = curve_samples(family, marginal, best.codebook, -25.0, 30.0, 6001)
        one = np.trapezoid(table.one_part, table.x)
        two = np.trapezoid(table.two_part, table.x)
        assert one == pytest.approx(marginal_entropy(marginal), abs=1e-3)
        assert two == pytest.approx(best.message_length, abs=1e-3)

    def test_interval_membership_is_right_closed(self, nn, nn_sweep6):
        family, marginal = nn
        best = nn_sweep6[6][0]
        cut = best.cuts[2]
        table = curve_samples(family, marginal, best.codebook, cut, cut + 1e-12, 2)
        # x exactly at a cut belongs to the interval on its right
        lq = best.codebook.log_q
        th = best.codebook.theta_hat
        lp = family.log_partition(th[3])
        expected = -table.density[0] * (
            lq[3] + cut * th[3] - lp + float(family.log_carrier(cut))
        )
        assert table.two_part[0] == pytest.approx(expected, rel=1e-12)

    def test_argument_validation(self, nn, nn_sweep6):
        family, marginal = nn
        best = nn_sweep6[6][0]
        with pytest.raises(ValueError):
            curve_samples(family, marginal, best.codebook, 1.0, 1.0, 10)
        with pytest.raises(ValueError):
            curve_samples(family, marginal, best.codebook, 0.0, 1.0, 1)


class TestGlobalStructure:
    def test_mirror_symmetry_of_solutions(self, nn, nn_sweep6):
        family, marginal = nn
        rep = nn_sweep6[4][0]
        mirrored = sorted(-c for c in rep.cuts)
        mrep = newton_solve(family, marginal, mirrored)
        assert mrep.converged
        assert mrep.message_length == pytest.approx(rep.message_length, abs=1e-10)

    def test_best_length_non_increasing(self, nn_sweep6, eg_sweep5):
        for sweep in (nn_sweep6, eg_sweep5):
            lengths = [sweep[n][0].message_length for n in sorted(sweep)]
            for a, b in zip(lengths, lengths[1:]):
                assert b <= a + 1e-10
