"""Brute-force simulator of the clustered D2D network.

The typical device sits at the origin.  Its own cluster centre is drawn as
``N(0, sigma^2 I)`` (so the centre distance is Rayleigh(sigma^2)), other
cluster centres form a homogeneous PPP on the disk of radius
``region_half_side`` around the origin, and every cluster carries
Gaussian-scattered members.  Members of a kept cluster are kept wherever they
fall.

Each trial draws from its own counter-based Philox streams keyed by
``(seed, trial_index)``, so a trial's outcome does not depend on which worker
runs it or in what order.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .geometry import (
    ContentStrategy,
    KClosest,
    NetworkParams,
    Uniform,
    check_strategy,
    inter_member_pdf,
    intra_member_pdf,
    serving_pdf,
    truncated_interferer_pdfs,
)

__all__ = [
    "SimulationConfig",
    "NetworkRealization",
    "CoverageEstimate",
    "DistanceSample",
    "trial_rng",
    "truncated_poisson_rvs",
    "sample_network",
    "simulate_coverage",
    "simulate_distance_distribution",
    "ks_statistic",
    "reference_cdf",
    "distance_ks_suite",
    "WIDE_REGION_HALF_SIDE",
]

# A 50 km x 50 km square, for runs that want a window far beyond the guard.
WIDE_REGION_HALF_SIDE = 25_000.0


@dataclass(frozen=True)
class SimulationConfig:
    """Monte Carlo settings.

    Interfering clusters are drawn on the disk inscribed in the square of
    half-side ``region_half_side``.  ``None`` picks twice the edge-effect guard
    ``20 sigma + 3 / sqrt(lambda_c)``; an explicit value must be at least the
    guard.
    """

    region_half_side: float | None = None
    trials: int = 100_000
    seed: int = 0
    strategy: ContentStrategy = field(default_factory=Uniform)
    confidence_level: float = 0.95
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 < self.confidence_level < 1:
            raise ValueError("confidence_level must lie in (0, 1)")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @staticmethod
    def guard(params: NetworkParams) -> float:
        g = 20.0 * params.sigma
        if params.lambda_c > 0:
            g += 3.0 / math.sqrt(params.lambda_c)
        return g

    def half_side(self, params: NetworkParams) -> float:
        guard = self.guard(params)
        if self.region_half_side is None:
            return 2.0 * guard
        if self.region_half_side < guard:
            raise ValueError(
                f"region_half_side={self.region_half_side:g} m is below the "
                f"edge-effect guard {guard:g} m")
        return float(self.region_half_side)


@dataclass
class NetworkRealization:
    """One sampled network, positions relative to the typical device.

    ``devices[0]`` and ``active_tx[0]`` belong to the representative cluster,
    whose centre is ``representative_center``; entries ``1..`` follow
    ``cluster_centers``.  ``tx_index[c]`` lists the transmit-capable members
    of cluster ``c``; ``active_tx[c]`` indexes into ``devices[c]`` and
    ``fading[c]`` follows ``active_tx[c]``.  With ``full=True`` every cluster
    holds ``N`` members (the typical device is the last member of the
    representative cluster).  Otherwise the representative cluster holds its
    ``M`` transmitters and interfering clusters only their active members,
    with ``tx_index`` set to ``None``.
    """

    representative_center: np.ndarray
    cluster_centers: np.ndarray
    devices: list
    tx_index: list
    active_tx: list
    serving_index: int
    h_serving: float
    fading: list
    alpha: float

    @property
    def serving_distance(self) -> float:
        return float(np.hypot(*self.devices[0][self.serving_index]))

    @property
    def nu0(self) -> float:
        return float(np.hypot(*self.representative_center))

    def interference_terms(self):
        """Per-cluster lists of received interference powers."""
        out = []
        for c, (pts, act, h) in enumerate(zip(self.devices, self.active_tx, self.fading)):
            d = np.hypot(pts[act, 0], pts[act, 1])
            out.append(h * d ** -self.alpha)
        return out

    def interference(self):
        """``(intra, inter)`` aggregate interference."""
        terms = self.interference_terms()
        intra = float(terms[0].sum())
        inter = float(sum(t.sum() for t in terms[1:]))
        return intra, inter

    def sir(self) -> float:
        signal = self.h_serving * self.serving_distance ** -self.alpha
        intra, inter = self.interference()
        total = intra + inter
        return math.inf if total == 0 else signal / total


def trial_rng(seed: int, trial_index: int, stream: int = 0, block: int = 0) -> np.random.Generator:
    """Independent counter-based stream for one trial.

    ``stream`` 0 drives the representative cluster, ``stream`` 1 the
    interfering clusters in blocks of ``_BLOCK`` centres.
    """
    key = [seed & 0xFFFFFFFFFFFFFFFF, 0]
    return np.random.Generator(np.random.Philox(key=key, counter=[0, block, stream, trial_index]))


def truncated_poisson_rvs(rng: np.random.Generator, mean: float, cap: int, size=None):
    """Poisson(mean) draws conditioned on ``<= cap``.

    Rejection while ``mean <= cap`` (acceptance is then at least one half);
    beyond that, inverse-CDF draws from the truncated masses, since rejection
    would almost never accept.
    """
    if mean > cap:
        n = np.arange(cap + 1)
        logw = n * math.log(mean) - np.cumsum(np.log(np.maximum(n, 1)))
        w = np.exp(logw - logw.max())
        u = rng.random(size)
        x = np.minimum(np.searchsorted(np.cumsum(w) / w.sum(), u, side="right"), cap)
        return int(x) if size is None else x
    x = rng.poisson(mean, size)
    if size is None:
        while x > cap:
            x = rng.poisson(mean)
        return int(x)
    x = np.asarray(x)
    bad = x > cap
    while np.any(bad):
        x[bad] = rng.poisson(mean, int(bad.sum()))
        bad = x > cap
    return x


def _pick_serving(rng, d, strategy):
    if isinstance(strategy, Uniform):
        return int(rng.integers(len(d)))
    # stable sort breaks exact ties by index order
    return int(np.argsort(d, kind="stable")[strategy.k - 1])


def _representative(params, strategy, rng, full):
    # The typical device is one of the cluster's receivers, so with full=True
    # the M transmit-capable members are drawn from the other N - 1 and the
    # origin is appended as the last member.
    sig, M, N = params.sigma, params.M, params.N
    x0 = rng.normal(0.0, sig, 2)
    if full:
        members = x0 + rng.normal(0.0, sig, (N - 1, 2))
        tx = np.sort(rng.permutation(N - 1)[:M])
        pts = np.vstack([members, [[0.0, 0.0]]])
    else:
        pts = x0 + rng.normal(0.0, sig, (M, 2))
        tx = np.arange(M)
    d_tx = np.hypot(pts[tx, 0], pts[tx, 1])
    j = _pick_serving(rng, d_tx, strategy)
    others = np.delete(tx, j)
    n_intra = truncated_poisson_rvs(rng, params.m_bar - 1.0, M - 1) if params.m_bar > 1 else 0
    active = np.sort(rng.permutation(others)[:n_intra])
    h0 = float(rng.exponential())
    h = rng.exponential(size=n_intra)
    return x0, pts, tx, int(tx[j]), active, h0, h


_BLOCK = 512


def _interferers(params, radius, seed, trial_index, full):
    """Interfering clusters with centres inside the disk of radius ``radius``.

    Centres are generated outwards: ``pi lambda_c |x|^2`` of successive centres
    are the arrival times of a unit-rate Poisson process.  Each block of
    ``_BLOCK`` centres, together with its members and fading, comes from its
    own stream, so a larger radius reproduces every cluster of a smaller one.
    Yields ``(centre, member points, tx index, active index, fading)`` per block
    as arrays over the block's clusters.
    """
    if params.lambda_c <= 0:
        return
    sig, M, N = params.sigma, params.M, params.N
    t_max = math.pi * params.lambda_c * radius * radius
    t0 = 0.0
    block = 0
    while t0 <= t_max:
        rng = trial_rng(seed, trial_index, 1, block)
        t = t0 + np.cumsum(rng.exponential(size=_BLOCK))
        theta = rng.uniform(0.0, 2.0 * math.pi, _BLOCK)
        counts = truncated_poisson_rvs(rng, params.m_bar, M, _BLOCK)
        rho = np.sqrt(t / (math.pi * params.lambda_c))
        centers = np.column_stack([rho * np.cos(theta), rho * np.sin(theta)])
        keep = int(np.searchsorted(t, t_max, side="right"))
        if full:
            offs = rng.normal(0.0, sig, (_BLOCK, N, 2))
            order = np.argsort(rng.random((_BLOCK, N)), axis=1)
            h = rng.exponential(size=(_BLOCK, M))
            yield centers[:keep], counts[:keep], offs[:keep], order[:keep], h[:keep]
        else:
            total = int(counts.sum())
            pts = np.repeat(centers, counts, axis=0) + rng.normal(0.0, sig, (total, 2))
            h = rng.exponential(size=total)
            n_keep = int(counts[:keep].sum())
            yield centers[:keep], counts[:keep], pts[:n_keep], None, h[:n_keep]
        t0 = float(t[-1])
        block += 1


def sample_network(params: NetworkParams, cfg: SimulationConfig, trial_index: int,
                   full: bool = False) -> NetworkRealization:
    """Draw the network seen by the typical device in trial ``trial_index``.

    ``full=False`` materialises only the active members of interfering
    clusters, which is all the SIR depends on; ``full=True`` draws all ``N``
    members and the transmitter/receiver split of every cluster.
    """
    strategy = cfg.strategy
    check_strategy(params, strategy)
    if params.m_bar < 1:
        raise ValueError("m_bar must be >= 1")
    radius = cfg.half_side(params)
    rng = trial_rng(cfg.seed, trial_index)
    x0, pts, tx, serving, active0, h0, h_intra = _representative(params, strategy, rng, full)
    devices, tx_index, active, fading = [pts], [tx], [active0], [h_intra]
    all_centers = []
    M = params.M
    for centers, counts, a, b, h in _interferers(params, radius, cfg.seed, trial_index, full):
        all_centers.append(centers)
        if full:
            for c in range(len(centers)):
                txc = np.sort(b[c, :M])
                devices.append(centers[c] + a[c])
                tx_index.append(txc)
                active.append(np.sort(b[c, :counts[c]]))
                fading.append(h[c, :counts[c]])
        else:
            splits = np.cumsum(counts)[:-1]
            for pc, hc in zip(np.split(a, splits), np.split(h, splits)):
                devices.append(pc)
                tx_index.append(None)
                active.append(np.arange(len(pc)))
                fading.append(hc)
    centers = np.vstack(all_centers) if all_centers else np.empty((0, 2))
    return NetworkRealization(x0, centers, devices, tx_index, active, serving, h0, fading, params.alpha)


def _trial_covered(params, strategy, radius, seed, i):
    rng = trial_rng(seed, i)
    _, pts, _, serving, act, h0, h = _representative(params, strategy, rng, False)
    a = params.alpha
    d2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
    intra = float(np.dot(h, d2[act] ** (-a / 2.0)))
    inter = 0.0
    for _, _, p, _, hb in _interferers(params, radius, seed, i, False):
        inter += float(np.dot(hb, (p[:, 0] ** 2 + p[:, 1] ** 2) ** (-a / 2.0)))
    signal = h0 * d2[serving] ** (-a / 2.0)
    total = intra + inter
    return total == 0 or signal > params.beta * total


@dataclass(frozen=True)
class CoverageEstimate:
    p_hat: float
    ci_half_width: float
    trials: int
    successes: int

    @property
    def standard_error(self) -> float:
        return math.sqrt(self.p_hat * (1.0 - self.p_hat) / self.trials)


def simulate_coverage(params: NetworkParams, cfg: SimulationConfig) -> CoverageEstimate:
    """Fraction of trials with SIR above ``beta`` and its Wald interval.

    Deterministic for a given seed whatever ``cfg.workers`` is.
    """
    strategy = cfg.strategy
    check_strategy(params, strategy)
    if params.m_bar < 1:
        raise ValueError("m_bar must be >= 1")
    L = cfg.half_side(params)

    def run(chunk):
        return sum(_trial_covered(params, strategy, L, cfg.seed, i) for i in chunk)

    n = cfg.trials
    if cfg.workers == 1:
        successes = run(range(n))
    else:
        bounds = np.linspace(0, n, 4 * cfg.workers + 1).astype(int)
        chunks = [range(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]
        with ThreadPoolExecutor(cfg.workers) as pool:
            successes = sum(pool.map(run, chunks))
    p = float(successes) / n
    z = float(stats.norm.ppf(0.5 + cfg.confidence_level / 2.0))
    half = z * math.sqrt(p * (1.0 - p) / n)
    return CoverageEstimate(p, half, n, int(successes))


# ---------------------------------------------------------------------------
# Distance distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DistanceSample:
    """Sampled distances falling in one conditioning bin.

    ``cond`` maps conditioning variable names (``nu0``, ``nu``, ``r``) to the
    per-sample values, so the analytic reference for the bin is the average of
    the conditional CDFs over those values.
    """

    which: str
    bin: tuple
    samples: np.ndarray
    cond: dict
    flagged: bool = False

    def ecdf(self, x):
        s = np.sort(self.samples)
        return np.searchsorted(s, x, side="right") / len(s)


_WHICH = ("serving", "intra", "intra-in", "intra-out", "inter")


def simulate_distance_distribution(params: NetworkParams, strategy: ContentStrategy, which: str,
                                   cfg: SimulationConfig, bins=None, samples_per_bin: int = 100_000,
                                   min_samples: int = 1_000, max_draws: int = 4_000_000):
    """Collect one distance per draw, grouped into conditioning bins.

    ``serving``, ``intra`` (uniform content: another transmitter of the same
    cluster), ``intra-in`` and ``intra-out`` (k-closest: a transmitter closer /
    farther than the serving one) are binned on ``nu0`` and also record the
    serving distance ``r``; ``inter`` is binned on the
    distance ``nu`` of an interfering cluster centre, drawn uniformly up to the
    last bin edge (capped at the window).  ``bins`` is a list of
    ``(lo, hi)`` intervals; ``None`` means a single unbounded bin.  Draws are
    vectorised from one ``seed``-keyed stream.  Bins with fewer than
    ``min_samples`` samples are flagged and returned empty.
    """
    if which not in _WHICH:
        raise ValueError(f"which must be one of {_WHICH}")
    check_strategy(params, strategy)
    if which in ("intra-in", "intra-out") and not isinstance(strategy, KClosest):
        raise ValueError(f"{which} distances are defined for k-closest content only")
    if which == "intra" and not isinstance(strategy, Uniform):
        raise ValueError("intra distances are defined for uniform content only")
    if bins is None:
        bins = [(0.0, math.inf)]
    rng = trial_rng(cfg.seed, 2 ** 63)
    sig, M = params.sigma, params.M
    key = "nu" if which == "inter" else "nu0"
    got = {b: [] for b in bins}
    conds = {b: {key: [], "r": []} for b in bins}
    counts = {b: 0 for b in bins}
    drawn = 0
    batch = 50_000
    nu_max = min(max(b[1] for b in bins), cfg.half_side(params))
    while drawn < max_draws and min(counts.values()) < samples_per_bin:
        if which == "inter":
            # Centre distance uniform up to the last bin edge; one member per centre.
            nu = nu_max * rng.random(batch)
            phi = rng.uniform(0.0, 2.0 * math.pi, batch)
            c = np.column_stack([nu * np.cos(phi), nu * np.sin(phi)])
            y = c + rng.normal(0.0, sig, (batch, 2))
            dist = np.hypot(y[:, 0], y[:, 1])
            cond_v, rr = nu, np.full(batch, np.nan)
        else:
            x0 = rng.normal(0.0, sig, (batch, 1, 2))
            pts = x0 + rng.normal(0.0, sig, (batch, M, 2))
            d = np.hypot(pts[..., 0], pts[..., 1])
            nu0 = np.hypot(x0[:, 0, 0], x0[:, 0, 1])
            rows = np.arange(batch)
            if isinstance(strategy, Uniform):
                j = rng.integers(M, size=batch)
                rr = d[rows, j]
            else:
                ds = np.sort(d, axis=1)
                rr = ds[:, strategy.k - 1]
            if which == "serving":
                dist = rr
                valid = np.ones(batch, bool)
            elif which == "intra":
                # another transmitter of the same cluster, uniformly chosen
                other = (j + 1 + rng.integers(max(M - 1, 1), size=batch)) % M
                dist = d[rows, other]
                valid = np.full(batch, M > 1)
            else:
                k = strategy.k
                if which == "intra-in":
                    lo_i, n_side = 0, k - 1
                else:
                    lo_i, n_side = k, M - k
                valid = np.full(batch, n_side > 0)
                pick = lo_i + (rng.integers(max(n_side, 1), size=batch) if n_side > 0 else 0)
                dist = ds[rows, np.minimum(pick, M - 1)] if n_side > 0 else np.full(batch, np.nan)
            dist, nu0, rr = dist[valid], nu0[valid], rr[valid]
            cond_v = nu0
        drawn += batch
        for b in bins:
            m = (cond_v >= b[0]) & (cond_v < b[1])
            if not np.any(m):
                continue
            take = min(int(m.sum()), samples_per_bin - counts[b])
            if take <= 0:
                continue
            idx = np.flatnonzero(m)[:take]
            got[b].append(dist[idx])
            conds[b][key].append(cond_v[idx])
            conds[b]["r"].append(rr[idx])
            counts[b] += take
    out = []
    for b in bins:
        if counts[b] < min_samples:
            warnings.warn(f"bin {b} has only {counts[b]} samples; skipped", RuntimeWarning)
            out.append(DistanceSample(which, b, np.empty(0), {}, flagged=True))
            continue
        cond = {key: np.concatenate(conds[b][key])}
        if which in ("intra-in", "intra-out"):
            cond["r"] = np.concatenate(conds[b]["r"])
        out.append(DistanceSample(which, b, np.concatenate(got[b]), cond))
    return out


def ks_statistic(sample: DistanceSample, conditional_cdf) -> float:
    """Kolmogorov-Smirnov distance between a binned sample and its analytic
    conditional law.

    Each sample is pushed through ``conditional_cdf(x, **cond)`` at its own
    conditioning values; under the analytic law the results are Uniform(0, 1)
    however the conditioning values are spread inside the bin.
    """
    if len(sample.samples) == 0:
        raise ValueError("empty sample")
    u = np.asarray(conditional_cdf(sample.samples, **sample.cond), dtype=float)
    return float(stats.kstest(u, "uniform").statistic)


def reference_cdf(params: NetworkParams, strategy: ContentStrategy, which: str):
    """Analytic conditional CDF matching :func:`simulate_distance_distribution`,
    as a callable ``cdf(x, **cond)`` vectorised over samples and conditions."""
    if which == "serving":
        return lambda x, nu0, r=None: serving_pdf(params, strategy, nu0).cdf(x)
    if which == "intra":
        return lambda x, nu0, r=None: intra_member_pdf(params, nu0).cdf(x)
    if which == "inter":
        return lambda x, nu, r=None: inter_member_pdf(params, nu).cdf(x)
    if which in ("intra-in", "intra-out"):
        pos = 0 if which == "intra-in" else 1
        return lambda x, nu0, r: truncated_interferer_pdfs(params, nu0, r)[pos].cdf(x)
    raise ValueError(f"which must be one of {_WHICH}")


def distance_ks_suite(params: NetworkParams, cfg: SimulationConfig, k: int = 5,
                      samples_per_bin: int = 100_000):
    """KS distances of every distance distribution over three conditioning bins.

    Returns rows ``(which, strategy label, bin, n_samples, ks)``; flagged bins
    carry ``ks = nan``.
    """
    sig = params.sigma
    nu0_bins = [(0.5 * sig, 0.7 * sig), (0.9 * sig, 1.1 * sig), (1.8 * sig, 2.2 * sig)]
    nu_bins = [(0.0, 2.0 * sig), (5.0 * sig, 5.5 * sig), (15.0 * sig, 15.5 * sig)]
    cases = [
        ("serving", Uniform(), nu0_bins),
        ("intra", Uniform(), nu0_bins),
        ("serving", KClosest(k), nu0_bins),
        ("intra-in", KClosest(k), nu0_bins),
        ("intra-out", KClosest(k), nu0_bins),
        ("inter", Uniform(), nu_bins),
    ]
    rows = []
    for which, strategy, bins in cases:
        ref = reference_cdf(params, strategy, which)
        for sample in simulate_distance_distribution(params, strategy, which, cfg, bins,
                                                     samples_per_bin=samples_per_bin):
            ks = math.nan if sample.flagged else ks_statistic(sample, ref)
            rows.append((which, strategy.label(), sample.bin, len(sample.samples), ks))
    return rows
