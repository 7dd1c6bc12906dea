"""Laplace transforms of intra- and inter-cluster interference.

All transforms broadcast over their array arguments (``s``, ``nu0``, ``r``).
Rayleigh fading turns each interferer at distance ``w`` into the factor
``1 / (1 + s w^-alpha)``; the helpers below integrate either that factor or its
complement ``s / (s + w^alpha)`` against a Rician distance density.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import special

from .geometry import (
    KClosest,
    NetworkParams,
    TRUNCATION_EPS,
    DegenerateTruncationError,
    _rice,
    _rice_cdf_pair,
)
from .mathkernel import (
    QuadratureSpec,
    integrate,
    regularized_incomplete_beta,
    sinc_factor,
)

__all__ = [
    "LaplaceEvaluator",
    "laplace_evaluator",
    "truncated_poisson_pmf",
    "truncated_binomial_pmf",
    "intra_uniform_exact",
    "intra_uniform_limit",
    "intra_iid_approx",
    "intra_lower_bound",
    "inter_exact",
    "inter_limit",
    "inter_lower_bound",
    "intra_kclosest_exact",
    "intra_kclosest_limit",
    "kclosest_kernels",
]

# Half-width, in standard deviations, of the window kept around a Rician offset.
_SPAN = 12.0

INNER_QUADRATURE = QuadratureSpec(rel_tol=1e-9, abs_tol=1e-13, max_subdivisions=4000)
OUTER_QUADRATURE = QuadratureSpec(rel_tol=1e-8, abs_tol=1e-12, max_subdivisions=4000)


# ---------------------------------------------------------------------------
# Count distributions
# ---------------------------------------------------------------------------

def truncated_poisson_pmf(mean: float, cap: int) -> np.ndarray:
    """Masses of a Poisson(mean) count conditioned on being ``<= cap``."""
    if mean < 0:
        raise ValueError(f"Poisson mean must be >= 0, got {mean}")
    n = np.arange(cap + 1)
    if mean == 0:
        return (n == 0).astype(float)
    log_w = n * math.log(mean) - special.gammaln(n + 1)
    w = np.exp(log_w - log_w.max())
    return w / w.sum()


def truncated_binomial_pmf(n: int, p: float, g: int) -> np.ndarray:
    """Binomial(n, p) masses on ``l = 0..g`` conditioned on ``L <= g``.

    The normalizer is ``P(L <= g) = I_{1-p}(n - g, g + 1)``; zero powers follow
    the ``0^0 = 1`` convention.
    """
    l = np.arange(g + 1)
    log_c = special.gammaln(n + 1) - special.gammaln(l + 1) - special.gammaln(n - l + 1)
    w = np.exp(log_c + special.xlogy(l, p) + special.xlogy(n - l, 1.0 - p))
    norm = regularized_incomplete_beta(1.0 - p, n - g, g + 1)
    return w / norm


# ---------------------------------------------------------------------------
# Rician-weighted integrals
# ---------------------------------------------------------------------------

def _interf_weight(w, s, alpha):
    # s w^-a / (1 + s w^-a), written to stay finite at w = 0 and s = 0.
    return s / (s + w ** alpha)


def _pass_weight(w, s, alpha):
    # 1 / (1 + s w^-a)
    wa = w ** alpha
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(s > 0, wa / (s + wa), 1.0)


def _rice_integral(weight, s, alpha, nu, sigma_sq, lo=0.0, hi=np.inf, spec=INNER_QUADRATURE):
    """``int_lo^hi weight(w; s) Ricepdf(w, nu; sigma_sq) dw`` broadcast over
    ``s``, ``nu``, ``lo`` and ``hi``.  The range is clipped to ``nu +- 12 sd``."""
    s, nu, lo, hi = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (s, nu, lo, hi)))
    sd = math.sqrt(sigma_sq)
    a = np.maximum(np.maximum(lo, nu - _SPAN * sd), 0.0)
    b = np.minimum(hi, nu + _SPAN * sd)
    width = np.maximum(b - a, 0.0)
    bshape = s.shape

    def f(t):
        t = t.reshape((-1,) + (1,) * len(bshape))
        w = a + width * t
        return weight(w, s, alpha) * _rice(w, nu, sigma_sq) * width

    return integrate(f, 0.0, 1.0, spec)


def _check_mbar(params: NetworkParams):
    if params.m_bar < 1:
        raise ValueError(
            f"m_bar={params.m_bar} < 1: the intra-cluster interferer count has "
            "negative Poisson mean m_bar - 1")


def _as_out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


# ---------------------------------------------------------------------------
# Uniform content availability, intra-cluster
# ---------------------------------------------------------------------------

def intra_uniform_exact(params: NetworkParams, s, nu0):
    """Truncated-Poisson sum over the number of intra-cluster interferers.

    ``sum_{k=0}^{M-1} A^k P(K = k | K <= M-1)`` with ``A`` the mean pass factor
    of one interferer and ``K ~ Poisson(m_bar - 1)``.
    """
    _check_mbar(params)
    s = np.asarray(s, dtype=float)
    J = _rice_integral(_interf_weight, s, params.alpha, nu0, params.sigma_sq)
    coeff = truncated_poisson_pmf(params.m_bar - 1.0, params.M - 1)
    return _as_out(np.clip(P.polyval(1.0 - J, coeff), 0.0, 1.0))


def intra_uniform_limit(params: NetworkParams, s, nu0):
    """``exp(-(m_bar - 1) E[s w^-a / (1 + s w^-a)])``, the M >> m_bar form."""
    _check_mbar(params)
    J = _rice_integral(_interf_weight, s, params.alpha, nu0, params.sigma_sq)
    return _as_out(np.exp(-(params.m_bar - 1.0) * J))


def intra_iid_approx(params: NetworkParams, s):
    """Limit form with interferer distances taken i.i.d. Rayleigh(2 sigma^2),
    i.e. without conditioning on the cluster-centre distance."""
    _check_mbar(params)
    J = _rice_integral(_interf_weight, s, params.alpha, 0.0, 2.0 * params.sigma_sq)
    return _as_out(np.exp(-(params.m_bar - 1.0) * J))


def intra_lower_bound(params: NetworkParams, s):
    """Closed-form lower bound ``exp(-(m_bar-1)/(4 sigma^2) s^(2/a) C(a))``."""
    _check_mbar(params)
    s = np.asarray(s, dtype=float)
    c = sinc_factor(params.alpha)
    return _as_out(np.exp(-(params.m_bar - 1.0) / (4.0 * params.sigma_sq)
                          * s ** (2.0 / params.alpha) * c))


# ---------------------------------------------------------------------------
# Inter-cluster
# ---------------------------------------------------------------------------

def _inter(params: NetworkParams, s, cluster_term, spec=OUTER_QUADRATURE):
    s = np.asarray(s, dtype=float)
    if params.lambda_c == 0:
        return _as_out(np.ones_like(s))
    flat = np.atleast_1d(s).ravel()
    out = np.ones_like(flat)
    live = flat > 0
    if np.any(live):
        sl = flat[live]
        scale = params.sigma + float(np.median(sl ** (1.0 / params.alpha)))
        outer = QuadratureSpec(spec.rel_tol, spec.abs_tol, spec.max_subdivisions, tail_scale=scale)

        def f(nu):
            h = _rice_integral(_interf_weight, sl[None, :], params.alpha, nu[:, None], params.sigma_sq)
            return cluster_term(h) * nu[:, None]

        G = integrate(f, 0.0, np.inf, outer)
        out[live] = np.exp(-2.0 * math.pi * params.lambda_c * G)
    return _as_out(out.reshape(s.shape))


def inter_exact(params: NetworkParams, s):
    """Inter-cluster transform with Poisson(m_bar) active counts truncated at M."""
    q = truncated_poisson_pmf(params.m_bar, params.M)
    j = np.arange(len(q))

    def term(h):
        # sum_j q_j (1 - (1-h)^j), free of cancellation for small h
        lg = np.log1p(-np.minimum(h, 1.0 - 1e-16))[..., None]
        return np.sum(q * -np.expm1(j * lg), axis=-1)

    return _inter(params, s, term)


def inter_limit(params: NetworkParams, s):
    """Inter-cluster transform in the M >> m_bar regime."""
    m = params.m_bar
    return _inter(params, s, lambda h: -np.expm1(-m * h))


def inter_lower_bound(params: NetworkParams, s):
    """Closed-form lower bound ``exp(-pi lambda_c m_bar s^(2/a) C(a))``."""
    s = np.asarray(s, dtype=float)
    c = sinc_factor(params.alpha)
    return _as_out(np.exp(-math.pi * params.lambda_c * params.m_bar
                          * s ** (2.0 / params.alpha) * c))


# ---------------------------------------------------------------------------
# k-closest content availability, intra-cluster
# ---------------------------------------------------------------------------

def kclosest_kernels(params: NetworkParams, s, r, nu0, strict=True):
    """Mean pass factors of one interferer closer (``K_in``) and farther
    (``K_out``) than the serving distance ``r``.

    With ``strict`` a degenerate truncation raises; otherwise the affected
    kernel takes its point-mass limit ``1 / (1 + s r^-a)``, which is only ever
    multiplied by a vanishing serving-distance weight.
    """
    s, r, nu0 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (s, r, nu0)))
    F, Q = _rice_cdf_pair(r, nu0, params.sigma)
    F = np.asarray(F, dtype=float).reshape(s.shape)
    Q = np.asarray(Q, dtype=float).reshape(s.shape)
    bad_in = F < TRUNCATION_EPS
    bad_out = Q < TRUNCATION_EPS
    if strict and (np.any(bad_in) or np.any(bad_out)):
        raise DegenerateTruncationError("F_S(r | nu0) is numerically 0 or 1")
    a = params.alpha
    A_in = _rice_integral(_pass_weight, s, a, nu0, params.sigma_sq, 0.0, r)
    A_out = _rice_integral(_pass_weight, s, a, nu0, params.sigma_sq, r, np.inf)
    point = _pass_weight(r, s, a)
    with np.errstate(divide="ignore", invalid="ignore"):
        K_in = np.where(bad_in, point, A_in / F)
        K_out = np.where(bad_out, point, A_out / Q)
    return np.clip(K_in, 0.0, 1.0), np.clip(K_out, 0.0, 1.0)


def _kclosest_coefficients(M: int, k: int, m_bar: float) -> np.ndarray:
    """``C[l, j]`` multiplying ``K_in^l K_out^j`` in the double sum."""
    p = 0.0 if M == 1 else (k - 1) / (M - 1)
    pn = truncated_poisson_pmf(m_bar - 1.0, M - 1)
    C = np.zeros((k, M))
    for n in range(M):
        g = min(n, k - 1)
        b = truncated_binomial_pmf(n, p, g)
        for l in range(g + 1):
            C[l, n - l] += pn[n] * b[l]
    return C


def _kclosest_sum(K_in, K_out, M, k, m_bar):
    C = _kclosest_coefficients(M, k, m_bar)
    return np.clip(P.polyval2d(K_in, K_out, C), 0.0, 1.0)


def intra_kclosest_exact(params: NetworkParams, k: int, s, r, nu0):
    """Intra-cluster transform for k-closest content given ``(r, nu0)``.

    Double sum over the interferer count ``n ~ Poisson(m_bar - 1 | <= M-1)`` and
    the number ``l`` of them closer than the serving device, taken as
    Binomial(n, (k-1)/(M-1)) truncated at ``min(n, k-1)``.
    """
    _check_mbar(params)
    if not 1 <= k <= params.M:
        raise ValueError(f"k={k} outside [1, M={params.M}]")
    K_in, K_out = kclosest_kernels(params, s, r, nu0, strict=True)
    return _as_out(_kclosest_sum(K_in, K_out, params.M, k, params.m_bar))


def intra_kclosest_limit(params: NetworkParams, k: int, s, r, nu0):
    """M >> m_bar forms for the best (k = 1) and worst (k = M) link: every
    interferer lies beyond, respectively inside, the serving distance."""
    _check_mbar(params)
    if k not in (1, params.M):
        raise ValueError("the limit form exists only for k = 1 or k = M")
    if params.m_bar > params.M / 4:
        warnings.warn(f"limit form used with m_bar={params.m_bar} > M/4={params.M / 4}; "
                      "it assumes m_bar << M", RuntimeWarning, stacklevel=2)
    K_in, K_out = kclosest_kernels(params, s, r, nu0, strict=True)
    K = K_out if k == 1 else K_in
    # k = M = 1 leaves no interferers at all.
    if params.M == 1:
        K = np.ones_like(K)
    return _as_out(np.exp(-(params.m_bar - 1.0) * (1.0 - K)))


# ---------------------------------------------------------------------------
# Evaluator objects
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LaplaceEvaluator:
    """An interference Laplace transform bound to fixed parameters.

    ``evaluate(s, nu0=None, r=None)`` forwards whichever conditioning the
    underlying transform needs.
    """

    params: NetworkParams
    method_tag: str
    fn: Callable
    needs: tuple = ()

    def evaluate(self, s, nu0=None, r=None):
        kw = {"nu0": nu0, "r": r}
        missing = [n for n in self.needs if kw[n] is None]
        if missing:
            raise TypeError(f"{self.method_tag} needs conditioning on {missing}")
        return self.fn(s, *(kw[n] for n in self.needs))

    __call__ = evaluate


def laplace_evaluator(params: NetworkParams, component: str, method_tag: str,
                      strategy=None) -> LaplaceEvaluator:
    """Build an evaluator.

    component: ``"intra"`` or ``"inter"``.
    method_tag: ``exact-sum``, ``poisson-limit``, ``iid-approx``, ``lower-bound``,
    ``kclosest-exact`` or ``kclosest-limit`` (the last two need a KClosest
    strategy).
    """
    p = params
    if component == "inter":
        table = {
            "exact-sum": (lambda s: inter_exact(p, s), ()),
            "poisson-limit": (lambda s: inter_limit(p, s), ()),
            "lower-bound": (lambda s: inter_lower_bound(p, s), ()),
        }
    elif component == "intra":
        table = {
            "exact-sum": (lambda s, nu0: intra_uniform_exact(p, s, nu0), ("nu0",)),
            "poisson-limit": (lambda s, nu0: intra_uniform_limit(p, s, nu0), ("nu0",)),
            "iid-approx": (lambda s: intra_iid_approx(p, s), ()),
            "lower-bound": (lambda s: intra_lower_bound(p, s), ()),
        }
        if isinstance(strategy, KClosest):
            k = strategy.k
            table["kclosest-exact"] = (
                lambda s, nu0, r: intra_kclosest_exact(p, k, s, r, nu0), ("nu0", "r"))
            table["kclosest-limit"] = (
                lambda s, nu0, r: intra_kclosest_limit(p, k, s, r, nu0), ("nu0", "r"))
    else:
        raise ValueError(f"unknown component {component!r}")
    if method_tag not in table:
        raise ValueError(f"method {method_tag!r} not available for {component}")
    fn, needs = table[method_tag]
    return LaplaceEvaluator(params, method_tag, fn, needs)
