"""Coverage probability, area spectral efficiency and the ASE optimiser.

Coverage integrals are evaluated with the serving distance ``r`` outermost so
that the inter-cluster transform, which depends on ``r`` only, is computed once
per outer node.  The cluster-centre distance ``nu0`` is integrated over
``[0, 8 sigma]`` (Rayleigh tail mass 1.3e-14) and ``r`` over
``[0, 20 sigma]`` (at most 12 standard deviations past the largest ``nu0``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .geometry import (
    ContentStrategy,
    KClosest,
    NetworkParams,
    Uniform,
    _rayleigh,
    _rice,
    _rice_cdf_pair,
    check_strategy,
    marginal_serving_pdf,
    order_statistic_coefficient,
)
from .interference import (
    _kclosest_sum,
    inter_exact,
    inter_limit,
    intra_iid_approx,
    intra_uniform_exact,
    intra_uniform_limit,
    kclosest_kernels,
)
from .mathkernel import QuadratureSpec, integrate, sinc_factor

__all__ = [
    "CoverageResult",
    "AseResult",
    "coverage_uniform_exact",
    "coverage_uniform_approx",
    "coverage_closed_form",
    "ase_closed_form",
    "coverage_kclosest_exact",
    "coverage_kclosest_approx",
    "coverage",
    "ase",
    "optimize_mbar",
    "COVERAGE_METHODS",
]

NU0_SPAN = 8.0
R_SPAN = 20.0

_OUTER = QuadratureSpec(rel_tol=1e-7, abs_tol=1e-10, max_subdivisions=2000)
_MIDDLE = QuadratureSpec(rel_tol=1e-8, abs_tol=1e-12, max_subdivisions=2000)


@dataclass(frozen=True)
class CoverageResult:
    value: float
    method_tag: str
    params: NetworkParams
    strategy: ContentStrategy = field(default_factory=Uniform)

    def __post_init__(self):
        if not -1e-9 <= self.value <= 1 + 1e-9:
            raise ValueError(f"coverage {self.value} outside [0, 1]")
        object.__setattr__(self, "value", float(min(max(self.value, 0.0), 1.0)))


@dataclass(frozen=True)
class AseResult:
    """ASE in bits/s/Hz/m^2: ``m_bar * lambda_c * log2(1 + beta) * P_c``."""

    value: float
    m_bar_used: float
    coverage: CoverageResult


def _inter_fn(params, transforms):
    if transforms == "limit":
        return lambda s: inter_limit(params, s)
    if transforms == "exact":
        return lambda s: inter_exact(params, s)
    raise ValueError(f"transforms must be 'limit' or 'exact', got {transforms!r}")


def _double_integral(params: NetworkParams, conditional_term, inter):
    """``int_r L_inter(beta r^a) int_nu0 conditional_term(r, nu0) f_V0(nu0) dnu0 dr``.

    ``conditional_term(r, nu0)`` returns ``L_intra * f_R(r | nu0)`` on the
    broadcast grid of its arguments.
    """
    sig, s2 = params.sigma, params.sigma_sq
    a, beta = params.alpha, params.beta

    def over_r(r):
        s = beta * r ** a
        L_inter = np.asarray(inter(s))

        def over_nu0(nu0):
            nu0 = nu0[:, None]
            return conditional_term(r[None, :], nu0) * _rayleigh(nu0, s2)

        inner = integrate(over_nu0, 0.0, NU0_SPAN * sig, _MIDDLE)
        return L_inter * inner

    return integrate(over_r, 0.0, R_SPAN * sig, _OUTER)


def coverage_uniform_exact(params: NetworkParams, transforms: str = "limit") -> CoverageResult:
    """Coverage for uniform content, conditioned on the cluster-centre distance.

    ``transforms='limit'`` uses the M >> m_bar exponential transforms,
    ``'exact'`` the truncated-Poisson sums.
    """
    inter = _inter_fn(params, transforms)
    intra = intra_uniform_limit if transforms == "limit" else intra_uniform_exact
    beta, a, s2 = params.beta, params.alpha, params.sigma_sq

    def term(r, nu0):
        return intra(params, beta * r ** a, nu0) * _rice(r, nu0, s2)

    value = _double_integral(params, term, inter)
    return CoverageResult(value, "exact" if transforms == "limit" else "exact-sum", params, Uniform())


def coverage_uniform_approx(params: NetworkParams) -> CoverageResult:
    """Single-integral coverage with serving and interferer distances treated
    as independent Rayleigh(2 sigma^2)."""
    return CoverageResult(_single_integral(params, Uniform()), "iid-approx", params, Uniform())


def _single_integral(params: NetworkParams, strategy) -> float:
    beta, a = params.beta, params.alpha
    serving = marginal_serving_pdf(params, strategy)

    def f(r):
        s = beta * r ** a
        return intra_iid_approx(params, s) * inter_limit(params, s) * serving.pdf(r)

    return integrate(f, 0.0, R_SPAN * params.sigma, _OUTER)


def coverage_closed_form(params: NetworkParams) -> CoverageResult:
    """``1 / ((4 pi lambda_c sigma^2 m + m - 1) beta^(2/a) C(a) + 1)``."""
    m = params.m_bar
    c = sinc_factor(params.alpha)
    denom = (4.0 * math.pi * params.lambda_c * params.sigma_sq * m + m - 1.0) \
        * params.beta ** (2.0 / params.alpha) * c + 1.0
    return CoverageResult(1.0 / denom, "closed-form", params, Uniform())


def ase_closed_form(params: NetworkParams) -> AseResult:
    """Closed-form ASE, including the ``log2(1 + beta)`` rate factor."""
    cov = coverage_closed_form(params)
    return _ase_from(cov)


def _serving_os_pdf(params: NetworkParams, k: int, r, nu0):
    # k-th order statistic of M conditionally i.i.d. Rician distances.
    M = params.M
    F, Q = _rice_cdf_pair(r, nu0, params.sigma)
    log_c = order_statistic_coefficient(M, k)
    with np.errstate(divide="ignore"):
        logs = log_c + special.xlogy(k - 1, F) + special.xlogy(M - k, Q)
    return np.exp(logs) * _rice(r, nu0, params.sigma_sq), F, Q


def coverage_kclosest_exact(params: NetworkParams, k: int, transforms: str = "limit") -> CoverageResult:
    """Coverage for k-closest content with the exact intra-cluster double sum.

    ``transforms`` selects the inter-cluster transform form only.
    """
    strategy = KClosest(k)
    check_strategy(params, strategy)
    if params.m_bar < 1:
        raise ValueError("m_bar must be >= 1")
    inter = _inter_fn(params, transforms)
    beta, a = params.beta, params.alpha
    M = params.M

    def term(r, nu0):
        r, nu0 = np.broadcast_arrays(r, nu0)
        s = beta * r ** a
        f_r, _, _ = _serving_os_pdf(params, k, r, nu0)
        K_in, K_out = kclosest_kernels(params, s, r, nu0, strict=False)
        return _kclosest_sum(K_in, K_out, M, k, params.m_bar) * f_r

    value = _double_integral(params, term, inter)
    return CoverageResult(value, "kclosest-exact", params, strategy)


def coverage_kclosest_approx(params: NetworkParams, k: int, variant: int = 1) -> CoverageResult:
    """Approximate k-closest coverage.

    variant 1 keeps the ordered serving density given ``nu0`` but uses the
    uniform-content intra-cluster transform; variant 2 additionally drops the
    ``nu0`` conditioning altogether.
    """
    strategy = KClosest(k)
    check_strategy(params, strategy)
    if variant == 1:
        beta, a = params.beta, params.alpha

        def term(r, nu0):
            f_r, _, _ = _serving_os_pdf(params, k, r, nu0)
            return intra_uniform_limit(params, beta * r ** a, nu0) * f_r

        value = _double_integral(params, term, lambda s: inter_limit(params, s))
        return CoverageResult(value, "kclosest-approx-1", params, strategy)
    if variant == 2:
        return CoverageResult(_single_integral(params, strategy), "kclosest-approx-2", params, strategy)
    raise ValueError(f"variant must be 1 or 2, got {variant}")


COVERAGE_METHODS = ("exact", "exact-sum", "approx", "closed-form", "approx-1", "approx-2")


def coverage(params: NetworkParams, strategy: ContentStrategy = Uniform(), method: str = "exact") -> CoverageResult:
    """Dispatch on strategy and method name.

    Uniform: ``exact`` (limit transforms), ``exact-sum``, ``approx``, ``closed-form``.
    KClosest: ``exact``, ``exact-sum``, ``approx-1``, ``approx-2``.
    """
    check_strategy(params, strategy)
    if isinstance(strategy, Uniform):
        if method == "exact":
            return coverage_uniform_exact(params)
        if method == "exact-sum":
            return coverage_uniform_exact(params, transforms="exact")
        if method == "approx":
            return coverage_uniform_approx(params)
        if method == "closed-form":
            return coverage_closed_form(params)
    else:
        if method == "exact":
            return coverage_kclosest_exact(params, strategy.k)
        if method == "exact-sum":
            return coverage_kclosest_exact(params, strategy.k, transforms="exact")
        if method in ("approx-1", "approx"):
            return coverage_kclosest_approx(params, strategy.k, 1)
        if method == "approx-2":
            return coverage_kclosest_approx(params, strategy.k, 2)
    raise ValueError(f"method {method!r} not available for {strategy!r}")


def _ase_from(cov: CoverageResult) -> AseResult:
    p = cov.params
    value = p.m_bar * p.lambda_c * math.log2(1.0 + p.beta) * cov.value
    return AseResult(value, p.m_bar, cov)


def ase(params: NetworkParams, strategy: ContentStrategy = Uniform(), method: str = "exact") -> AseResult:
    return _ase_from(coverage(params, strategy, method))


def optimize_mbar(params: NetworkParams, strategy: ContentStrategy = Uniform(), method: str = "exact",
                  mbar_range=None, executor=None):
    """Exhaustive integer search of ``m_bar`` maximising the ASE.

    ``mbar_range`` defaults to ``1..M``.  Ties go to the smaller ``m_bar``.
    Returns ``(m_star, best AseResult, list of AseResult over the range)``.
    An optional ``concurrent.futures`` executor evaluates points in parallel;
    the result does not depend on it.
    """
    values = list(range(1, params.M + 1)) if mbar_range is None else sorted(int(m) for m in mbar_range)
    if not values:
        raise ValueError("empty m_bar range")

    def one(m):
        return ase(params.replace(m_bar=float(m)), strategy, method)

    curve = list(executor.map(one, values)) if executor is not None else [one(m) for m in values]
    best = 0
    for i, res in enumerate(curve):
        if res.value > curve[best].value:
            best = i
    return values[best], curve[best], curve
