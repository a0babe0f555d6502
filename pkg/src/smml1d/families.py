"""Exponential-family models and their closed-form Bayes marginals.

The data density is ``f(x | t) = exp(x*t - log_partition(t)) * carrier(x)``
on an open support interval, with natural parameter ``t`` ranging over an
open parameter interval.  A conjugate prior induces a marginal density ``r``
over the data; the pair (:class:`FamilyModel`, :class:`MarginalModel`) is
everything the cut-point machinery needs.  The family supplies the
log-partition function and the mean/variance maps, the marginal supplies
``log r``, its CDF and its quantile function.

Two built-in pairs:

    make_normal_normal(alpha)
        N(t, 1) data with a N(0, alpha^2) prior on the mean; the marginal is
        N(0, 1 + alpha^2).
    make_exponential_gamma(alpha, beta)
        Exponential data (rate -t) with a Gamma(alpha, beta) prior on the
        rate; the marginal is Lomax.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtr, ndtri

__all__ = [
    "FamilyModel",
    "MarginalModel",
    "ParameterError",
    "SupportError",
    "make_normal_normal",
    "make_exponential_gamma",
    "mu_inverse_numeric",
]

_LOG_2PI = math.log(2.0 * math.pi)


class ParameterError(ValueError):
    """A model hyper-parameter lies outside its admissible range."""


class SupportError(ValueError):
    """A point lies outside the data support, parameter space, or map image."""


@dataclass(frozen=True)
class FamilyModel:
    """A 1-dimensional exponential family in natural parametrization.

    ``log_carrier`` must accept numpy arrays; the remaining callables are
    scalar maps.  ``mean`` is the derivative of ``log_partition`` (it sends a
    natural parameter to the corresponding expectation parameter) and
    ``variance`` is the derivative of ``mean``, strictly positive on the whole
    parameter interval.
    """

    support_lo: float
    support_hi: float
    param_lo: float
    param_hi: float
    log_partition: Callable[[float], float]
    log_carrier: Callable[[np.ndarray], np.ndarray]
    mean: Callable[[float], float]
    variance: Callable[[float], float]
    mean_inverse: Callable[[float], float] | None = None

    def invert_mean(self, m: float) -> float:
        """Map an expectation value back to its natural parameter."""
        if self.mean_inverse is not None:
            return self.mean_inverse(m)
        return mu_inverse_numeric(self, m)


@dataclass(frozen=True)
class MarginalModel:
    """Marginal distribution of the data after integrating out the prior.

    ``log_pdf`` must accept numpy arrays; ``cdf`` and ``quantile`` are scalar
    maps.  ``mode`` is the maximizer of the density over the closed support
    (it anchors the scaled quadrature).  The density is strictly positive on
    the open support and has a finite first moment; the constructors below
    enforce the parameter ranges that guarantee this.
    """

    log_pdf: Callable[[np.ndarray], np.ndarray]
    cdf: Callable[[float], float]
    quantile: Callable[[float], float]
    mode: float
    support_lo: float
    support_hi: float
    prior_params: tuple[float, ...]
    name: str

    def pdf(self, x):
        return np.exp(self.log_pdf(x))


def make_normal_normal(alpha: float) -> tuple[FamilyModel, MarginalModel]:
    """Normal data with unit variance and a centered normal prior on the mean.

    ``alpha`` is the prior standard deviation.  The marginal is normal with
    mean 0 and standard deviation sqrt(1 + alpha^2).
    """
    alpha = float(alpha)
    if not (math.isfinite(alpha) and alpha > 0.0):
        raise ParameterError(f"alpha must be a positive real, got {alpha!r}")
    beta = math.hypot(1.0, alpha)
    log_norm = math.log(beta) + 0.5 * _LOG_2PI

    family = FamilyModel(
        support_lo=-math.inf,
        support_hi=math.inf,
        param_lo=-math.inf,
        param_hi=math.inf,
        log_partition=lambda t: 0.5 * t * t,
        log_carrier=lambda x: -0.5 * np.asarray(x, dtype=float) ** 2 - 0.5 * _LOG_2PI,
        mean=lambda t: t,
        variance=lambda t: 1.0,
        mean_inverse=lambda m: m,
    )

    def log_pdf(x):
        x = np.asarray(x, dtype=float)
        return -0.5 * (x / beta) ** 2 - log_norm

    def quantile(p: float) -> float:
        if not 0.0 < p < 1.0:
            raise SupportError(f"quantile needs 0 < p < 1, got {p!r}")
        return beta * float(ndtri(p))

    marginal = MarginalModel(
        log_pdf=log_pdf,
        cdf=lambda x: float(ndtr(x / beta)),
        quantile=quantile,
        mode=0.0,
        support_lo=-math.inf,
        support_hi=math.inf,
        prior_params=(alpha,),
        name="normal-normal",
    )
    return family, marginal


def make_exponential_gamma(alpha: float, beta: float) -> tuple[FamilyModel, MarginalModel]:
    """Exponential data with a gamma prior on the rate.

    The prior has shape ``alpha`` and rate ``beta``; the marginal is Lomax
    with density ``(alpha/beta) * (1 + x/beta)^(-alpha-1)`` on (0, inf).
    ``alpha`` must exceed 1 so the marginal has a finite mean, without which
    the expected code length of the estimator diverges.
    """
    alpha = float(alpha)
    beta = float(beta)
    if not (math.isfinite(alpha) and alpha > 1.0):
        raise ParameterError(
            f"alpha must exceed 1 (the marginal needs a finite mean), got {alpha!r}"
        )
    if not (math.isfinite(beta) and beta > 0.0):
        raise ParameterError(f"beta must be a positive real, got {beta!r}")
    log_ab = math.log(alpha / beta)

    def _mean_inverse(m: float) -> float:
        if not m > 0.0:
            raise SupportError(f"mean values are positive, got {m!r}")
        return -1.0 / m

    family = FamilyModel(
        support_lo=0.0,
        support_hi=math.inf,
        param_lo=-math.inf,
        param_hi=0.0,
        log_partition=lambda t: -math.log(-t),
        log_carrier=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        mean=lambda t: -1.0 / t,
        variance=lambda t: 1.0 / (t * t),
        mean_inverse=_mean_inverse,
    )

    def log_pdf(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = log_ab - (alpha + 1.0) * np.log1p(x / beta)
        return np.where(x >= 0.0, out, -np.inf)

    def cdf(x: float) -> float:
        if x <= 0.0:
            return 0.0
        return -math.expm1(-alpha * math.log1p(x / beta))

    def quantile(p: float) -> float:
        if not 0.0 < p < 1.0:
            raise SupportError(f"quantile needs 0 < p < 1, got {p!r}")
        return beta * math.expm1(-math.log1p(-p) / alpha)

    marginal = MarginalModel(
        log_pdf=log_pdf,
        cdf=cdf,
        quantile=quantile,
        mode=0.0,
        support_lo=0.0,
        support_hi=math.inf,
        prior_params=(alpha, beta),
        name="exponential-gamma",
    )
    return family, marginal


def mu_inverse_numeric(
    family: FamilyModel,
    m: float,
    *,
    rel_tol: float = 1e-12,
    max_iter: int = 200,
) -> float:
    """Invert the mean map by safeguarded Newton with a bisection fallback.

    Returns ``t`` with ``|mean(t) - m| <= rel_tol * max(1, |m|)``.  Works for
    any family whose mean map is strictly increasing (variance positive);
    raises :class:`SupportError` when ``m`` falls outside the open image of
    the mean map.
    """
    m = float(m)
    if not math.isfinite(m):
        raise SupportError(f"mean target must be finite, got {m!r}")

    lo_b, hi_b = family.param_lo, family.param_hi
    if math.isfinite(lo_b) and math.isfinite(hi_b):
        t0 = 0.5 * (lo_b + hi_b)
    elif math.isfinite(lo_b):
        t0 = lo_b + 1.0
    elif math.isfinite(hi_b):
        t0 = hi_b - 1.0
    else:
        t0 = 0.0

    def _march(start: float, upward: bool) -> float:
        # Walk toward one end of the parameter interval until mean(t) brackets m.
        t, step = start, 1.0
        bound = hi_b if upward else lo_b
        for _ in range(max_iter):
            v = family.mean(t)
            if (v >= m) if upward else (v <= m):
                return t
            if math.isfinite(bound):
                nxt = t + 0.9 * (bound - t)
                if nxt == t:
                    break
                t = nxt
            else:
                t = t + step if upward else t - step
                step *= 2.0
                if not math.isfinite(t):
                    break
        raise SupportError(f"value {m!r} is outside the image of the mean map")

    t_hi = _march(t0, upward=True)
    t_lo = _march(t0, upward=False)

    tol = rel_tol * max(1.0, abs(m))
    lo, hi = t_lo, t_hi
    t = 0.5 * (lo + hi)
    for _ in range(max_iter):
        err = family.mean(t) - m
        if abs(err) <= tol:
            return t
        if err > 0.0:
            hi = t
        else:
            lo = t
        t_new = t - err / family.variance(t)
        if not (lo < t_new < hi) or not math.isfinite(t_new):
            t_new = 0.5 * (lo + hi)
        if t_new == t:
            t_new = 0.5 * (lo + hi)
            if t_new == t:
                break
        t = t_new
    if abs(family.mean(t) - m) <= tol:
        return t
    raise ArithmeticError(f"mean inversion stalled for target {m!r}")
