"""Network parameters and the distance distributions of the clustered model.

Lengths are metres and the cluster density is per square metre throughout.
Every Rayleigh/Rician helper takes the *variance* parameter explicitly, so the
member-to-device distances (variance sigma^2 around the offset) and the
unconditioned link distance (variance 2 sigma^2) cannot be mixed up.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Union

import numpy as np
from scipy import special

from .mathkernel import marcum_q1_pair, regularized_incomplete_beta

__all__ = [
    "NetworkParams",
    "Uniform",
    "KClosest",
    "ContentStrategy",
    "ConditionalPdf",
    "DegenerateTruncationError",
    "reference_params",
    "check_strategy",
    "rayleigh_pdf",
    "rician_pdf",
    "intra_member_pdf",
    "inter_member_pdf",
    "serving_pdf",
    "marginal_serving_pdf",
    "truncated_interferer_pdfs",
    "cluster_center_distance_pdf",
    "order_statistic_coefficient",
    "TRUNCATION_EPS",
]

KM2 = 1e6  # m^2 per km^2


@dataclass(frozen=True)
class NetworkParams:
    """Physical and system parameters.

    lambda_c : cluster-centre density, clusters per m^2
    sigma    : scattering standard deviation of members around a centre, m
    N        : devices per cluster (even)
    M        : transmit-capable devices per cluster, defaults to N // 2
    m_bar    : mean number of simultaneously active transmitters per cluster
    alpha    : path-loss exponent (> 2)
    beta     : SIR threshold, linear
    p_d      : transmit power; the SIR is interference limited so it is 1
    """

    lambda_c: float
    sigma: float
    N: int = 80
    M: int | None = None
    m_bar: float = 1.0
    alpha: float = 4.0
    beta: float = 1.0
    p_d: float = 1.0

    def __post_init__(self):
        if self.M is None:
            object.__setattr__(self, "M", self.N // 2)
        if not self.lambda_c > 0:
            raise ValueError(f"lambda_c must be > 0, got {self.lambda_c}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if int(self.N) != self.N or self.N < 2 or self.N % 2:
            raise ValueError(f"N must be an even integer >= 2, got {self.N}")
        if int(self.M) != self.M or not 1 <= self.M <= self.N:
            raise ValueError(f"M must be an integer in [1, N], got {self.M}")
        if not self.m_bar > 0:
            raise ValueError(f"m_bar must be > 0, got {self.m_bar}")
        if not self.alpha > 2:
            raise ValueError(f"alpha must exceed 2, got {self.alpha}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if self.p_d != 1:
            raise ValueError("p_d is fixed to 1 in the interference-limited model")

    @property
    def sigma_sq(self) -> float:
        return self.sigma ** 2

    @property
    def lambda_c_km2(self) -> float:
        return self.lambda_c * KM2

    def replace(self, **changes) -> "NetworkParams":
        # changing N alone re-derives M = N // 2
        if "N" in changes and "M" not in changes:
            changes["M"] = None
        return replace(self, **changes)


def reference_params(**overrides) -> NetworkParams:
    """The desk-scale reference configuration used by the demos and tests.

    sigma = 10 m, 150 clusters/km^2, 0 dB threshold, alpha = 4, N = 80, M = 40.
    """
    base = dict(lambda_c=150 / KM2, sigma=10.0, N=80, M=40, m_bar=5.0, alpha=4.0, beta=1.0)
    if "N" in overrides and "M" not in overrides:
        base["M"] = overrides["N"] // 2
    base.update(overrides)
    return NetworkParams(**base)


@dataclass(frozen=True)
class Uniform:
    """Serving device drawn uniformly from the cluster's transmitters."""

    def label(self) -> str:
        return "uniform"


@dataclass(frozen=True)
class KClosest:
    """Serving device is the k-th closest transmitter of the cluster."""

    k: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")

    def label(self) -> str:
        return f"k{self.k}"


ContentStrategy = Union[Uniform, KClosest]


def check_strategy(params: NetworkParams, strategy: ContentStrategy) -> None:
    if isinstance(strategy, KClosest):
        if strategy.k > params.M:
            raise ValueError(f"k={strategy.k} exceeds M={params.M}")
    elif not isinstance(strategy, Uniform):
        raise TypeError(f"unknown content strategy {strategy!r}")


class DegenerateTruncationError(ValueError):
    """The truncation point carries (numerically) zero or full probability."""


# F_S(r | nu0) outside [eps, 1 - eps] is treated as a degenerate truncation.
TRUNCATION_EPS = 1e-12


@dataclass(frozen=True)
class ConditionalPdf:
    """A density/CDF pair together with what it was conditioned on.

    ``sf`` is the survival function when an accurate complement is available.
    Conditioning values may be arrays; they then broadcast against ``x``.
    """

    pdf: Callable
    cdf: Callable
    support: tuple
    conditioning: dict = field(default_factory=dict)
    sf: Callable | None = None

    def survival(self, x):
        if self.sf is not None:
            return self.sf(x)
        return 1.0 - self.cdf(x)


# ---------------------------------------------------------------------------
# Elementary densities
# ---------------------------------------------------------------------------

def _rayleigh(a, sigma_sq):
    return a / sigma_sq * np.exp(-a * a / (2.0 * sigma_sq))


def _rice(a, b, sigma_sq):
    # exp(-(a^2+b^2)/2s) I0(ab/s) = exp(-(a-b)^2/2s) i0e(ab/s): no overflow.
    return a / sigma_sq * np.exp(-(a - b) ** 2 / (2.0 * sigma_sq)) * special.i0e(a * b / sigma_sq)


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def rayleigh_pdf(a, sigma_sq):
    """Rayleigh density ``(a/s) exp(-a^2 / 2s)`` with variance parameter ``s``."""
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0) or not sigma_sq > 0:
        raise ValueError("rayleigh_pdf needs a > 0 and sigma_sq > 0")
    return _out(_rayleigh(a, sigma_sq))


def rician_pdf(a, b, sigma_sq):
    """Rician density of ``|b + G|`` with ``G ~ N(0, sigma_sq I_2)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a <= 0) or np.any(b < 0) or not sigma_sq > 0:
        raise ValueError("rician_pdf needs a > 0, b >= 0 and sigma_sq > 0")
    return _out(_rice(a, b, sigma_sq))


def _rice_cdf_pair(a, b, sigma):
    """(F, 1 - F) of the Rician distance at ``a`` with offset ``b``."""
    a = np.maximum(np.asarray(a, dtype=float), 0.0)
    q, p = marcum_q1_pair(b / sigma, a / sigma)
    return p, q


# ---------------------------------------------------------------------------
# Member distance distributions
# ---------------------------------------------------------------------------

def _cond(v):
    # conditioning values may be scalars or arrays broadcasting against x
    v = np.asarray(v, dtype=float)
    return float(v) if v.ndim == 0 else v


def _member_pdf(params: NetworkParams, offset, name: str) -> ConditionalPdf:
    offset = _cond(offset)
    if not np.all(np.asarray(offset) >= 0):
        raise ValueError(f"{name} must be >= 0, got {offset}")
    s2 = params.sigma_sq
    sig = params.sigma

    def pdf(x):
        x = np.asarray(x, dtype=float)
        return _out(np.where(x > 0, _rice(np.maximum(x, 0.0), offset, s2), 0.0))

    def cdf(x):
        return _out(_rice_cdf_pair(x, offset, sig)[0])

    def sf(x):
        return _out(_rice_cdf_pair(x, offset, sig)[1])

    return ConditionalPdf(pdf, cdf, (0.0, math.inf), {name: offset}, sf)


def intra_member_pdf(params: NetworkParams, nu0: float) -> ConditionalPdf:
    """Distance to a uniformly chosen member of the typical device's own cluster,
    given the distance ``nu0`` to that cluster's centre."""
    return _member_pdf(params, nu0, "nu0")


def inter_member_pdf(params: NetworkParams, nu: float) -> ConditionalPdf:
    """Distance to a member of another cluster whose centre is at distance ``nu``."""
    return _member_pdf(params, nu, "nu")


def cluster_center_distance_pdf(params: NetworkParams) -> ConditionalPdf:
    """Distance from the typical device to its own cluster centre: Rayleigh(sigma^2)."""
    s2 = params.sigma_sq

    def pdf(x):
        x = np.asarray(x, dtype=float)
        return _out(np.where(x > 0, _rayleigh(np.maximum(x, 0.0), s2), 0.0))

    def cdf(x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return _out(-np.expm1(-x * x / (2.0 * s2)))

    def sf(x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return _out(np.exp(-x * x / (2.0 * s2)))

    return ConditionalPdf(pdf, cdf, (0.0, math.inf), {}, sf)


def order_statistic_coefficient(M: int, k: int) -> float:
    """log of M! / ((k-1)! (M-k)!)."""
    return special.gammaln(M + 1) - special.gammaln(k) - special.gammaln(M - k + 1)


def _order_statistic(base_pdf, base_cdf_pair, M, k):
    log_c = order_statistic_coefficient(M, k)

    def pdf(x):
        x = np.asarray(x, dtype=float)
        F, Q = base_cdf_pair(x)
        f = base_pdf(x)
        # xlogy keeps the 0^0 = 1 convention at k = 1 and k = M.
        with np.errstate(divide="ignore"):
            logs = log_c + special.xlogy(k - 1, F) + special.xlogy(M - k, Q)
        return _out(np.where(f > 0, np.exp(logs) * f, 0.0))

    def cdf(x):
        F, _ = base_cdf_pair(np.asarray(x, dtype=float))
        # P(S_(k) <= x) = P(Bin(M, F) >= k) = I_F(k, M - k + 1)
        return _out(regularized_incomplete_beta(np.clip(F, 0.0, 1.0), k, M - k + 1))

    def sf(x):
        _, Q = base_cdf_pair(np.asarray(x, dtype=float))
        # P(Bin(M, F) <= k - 1) = I_{1-F}(M - k + 1, k)
        return _out(regularized_incomplete_beta(np.clip(Q, 0.0, 1.0), M - k + 1, k))

    return pdf, cdf, sf


def serving_pdf(params: NetworkParams, strategy: ContentStrategy, nu0: float) -> ConditionalPdf:
    """Serving-link distance given ``nu0``: Rician for uniform content, the
    k-th order statistic of M i.i.d. Rician distances for k-closest."""
    check_strategy(params, strategy)
    base = intra_member_pdf(params, nu0)
    if isinstance(strategy, Uniform):
        return base
    nu0 = _cond(nu0)
    M, k = params.M, strategy.k
    sig = params.sigma

    def pair(x):
        return _rice_cdf_pair(x, nu0, sig)

    def base_pdf(x):
        return np.where(x > 0, _rice(np.maximum(x, 0.0), nu0, params.sigma_sq), 0.0)

    pdf, cdf, sf = _order_statistic(base_pdf, pair, M, k)
    return ConditionalPdf(pdf, cdf, (0.0, math.inf), {"nu0": nu0, "k": k, "M": M}, sf)


def marginal_serving_pdf(params: NetworkParams, strategy: ContentStrategy) -> ConditionalPdf:
    """Serving distance with the correlation through ``nu0`` ignored: members
    treated as i.i.d. Rayleigh(2 sigma^2), ordered for k-closest."""
    check_strategy(params, strategy)
    s2 = 2.0 * params.sigma_sq

    def base_pdf(x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, _rayleigh(np.maximum(x, 0.0), s2), 0.0)

    def pair(x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        e = x * x / (2.0 * s2)
        return -np.expm1(-e), np.exp(-e)

    if isinstance(strategy, Uniform):
        return ConditionalPdf(lambda x: _out(base_pdf(x)), lambda x: _out(pair(x)[0]),
                              (0.0, math.inf), {}, lambda x: _out(pair(x)[1]))
    pdf, cdf, sf = _order_statistic(base_pdf, pair, params.M, strategy.k)
    return ConditionalPdf(pdf, cdf, (0.0, math.inf), {"k": strategy.k, "M": params.M}, sf)


def truncated_interferer_pdfs(params: NetworkParams, nu0: float, r: float):
    """Densities of intra-cluster interferer distances closer / farther than
    the serving distance ``r`` (k-closest content), given ``nu0``.

    Raises :class:`DegenerateTruncationError` when ``F_S(r | nu0)`` is within
    ``TRUNCATION_EPS`` of 0 or 1.
    """
    r, nu0 = _cond(r), _cond(nu0)
    if not np.all(np.asarray(r) > 0):
        raise ValueError(f"r must be > 0, got {r}")
    if not np.all(np.asarray(nu0) >= 0):
        raise ValueError(f"nu0 must be >= 0, got {nu0}")
    s2, sig = params.sigma_sq, params.sigma
    F_r, Q_r = (_cond(v) for v in _rice_cdf_pair(r, nu0, sig))
    if np.any(np.asarray(F_r) < TRUNCATION_EPS) or np.any(np.asarray(Q_r) < TRUNCATION_EPS):
        raise DegenerateTruncationError(
            f"F_S(r={r} | nu0={nu0}) = {F_r} is too close to 0 or 1")

    def in_pdf(w):
        w = np.asarray(w, dtype=float)
        inside = (w > 0) & (w < r)
        return _out(np.where(inside, _rice(np.clip(w, 0.0, r), nu0, s2) / F_r, 0.0))

    def in_cdf(w):
        w = np.clip(np.asarray(w, dtype=float), 0.0, r)
        return _out(np.minimum(_rice_cdf_pair(w, nu0, sig)[0] / F_r, 1.0))

    def out_pdf(w):
        w = np.asarray(w, dtype=float)
        return _out(np.where(w > r, _rice(np.maximum(w, r), nu0, s2) / Q_r, 0.0))

    def out_cdf(w):
        w = np.maximum(np.asarray(w, dtype=float), r)
        return _out(np.clip(1.0 - _rice_cdf_pair(w, nu0, sig)[1] / Q_r, 0.0, 1.0))

    def out_sf(w):
        w = np.maximum(np.asarray(w, dtype=float), r)
        return _out(np.minimum(_rice_cdf_pair(w, nu0, sig)[1] / Q_r, 1.0))

    cond = {"nu0": nu0, "r": r, "F_r": F_r}
    return (ConditionalPdf(in_pdf, in_cdf, (0.0, r), cond),
            ConditionalPdf(out_pdf, out_cdf, (r, math.inf), cond, out_sf))
