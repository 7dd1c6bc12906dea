"""Independent reference computations used by the tests.

Nothing here calls into the package's quadrature or special functions; the
oracles lean on scipy.integrate.quad, fixed Gauss-Legendre grids, plain
series and brute-force sampling instead.
"""
import math

import numpy as np
from scipy import integrate, special, stats


def i0_series(x, terms=30):
    return sum((x / 2.0) ** (2 * k) / math.factorial(k) ** 2 for k in range(terms))


def marcum_quad(a, b):
    # defining integral, scaled Bessel form to avoid overflow
    f = lambda t: t * math.exp(-0.5 * (t - a) ** 2) * special.i0e(a * t)
    hi = max(a, b) + 40.0
    if b >= hi:
        return 0.0
    return integrate.quad(f, b, hi, epsabs=0.0, epsrel=1e-12, limit=200)[0]


def beta_binomial_sum(x, a, b):
    n = a + b - 1
    return sum(math.comb(n, j) * x ** j * (1 - x) ** (n - j) for j in range(a, n + 1))


def gl(lo, hi, n, pieces=1):
    x, w = special.roots_legendre(n)
    edges = np.linspace(lo, hi, pieces + 1)
    X, W = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        X.append((x + 1) * (b - a) / 2 + a)
        W.append(w * (b - a) / 2)
    return np.concatenate(X), np.concatenate(W)


def rice_pdf(x, nu, sigma):
    return stats.rice.pdf(x, nu / sigma, scale=sigma)


def coverage_uniform_gl(sigma, lambda_c, m_bar, alpha=4.0, beta=1.0):
    """Uniform-content coverage with the exponential transforms on fixed
    Gauss-Legendre grids (no adaptivity)."""
    def g(s, nus):
        out = np.zeros((len(s), len(nus)))
        for j, n in enumerate(nus):
            w, ww = gl(max(0.0, n - 14 * sigma), n + 14 * sigma, 64, 8)
            out[:, j] = ((s[:, None] / (s[:, None] + w ** alpha)) * rice_pdf(w, n, sigma) * ww).sum(1)
        return out

    r, wr = gl(0.0, 20 * sigma, 48, 10)
    s = beta * r ** alpha
    t, wt = gl(0.0, 1.0, 48, 12)
    nu = sigma * t / (1 - t)
    jac = sigma / (1 - t) ** 2
    L_inter = np.exp(-2 * math.pi * lambda_c * ((1 - np.exp(-m_bar * g(s, nu))) * nu * jac * wt).sum(1))
    n0, w0 = gl(0.0, 8 * sigma, 48, 6)
    L_intra = np.exp(-(m_bar - 1) * g(s, n0))
    inner = (L_intra * rice_pdf(r[:, None], n0[None, :], sigma)
             * stats.rayleigh.pdf(n0, scale=sigma) * w0).sum(1)
    return float((L_inter * inner * wr).sum())


def trapezoid_interference_term(s, nu, sigma, alpha=4.0, n=1_000_000):
    """int_0^inf s u^-a / (1 + s u^-a) Rice(u; nu, sigma) du on a uniform grid."""
    u = np.linspace(max(0.0, nu - 14 * sigma), nu + 14 * sigma, n)
    f = s / (s + u ** alpha) * rice_pdf(u, nu, sigma)
    return float(integrate.trapezoid(f, u))


# --- Monte Carlo expectation oracles ---------------------------------------

def truncated_poisson_draws(rng, mean, cap, size):
    x = rng.poisson(mean, size)
    bad = x > cap
    while bad.any():
        x[bad] = rng.poisson(mean, bad.sum())
        bad = x > cap
    return x


def mc_intra_uniform(sigma, nu0, m_bar, M, s, alpha=4.0, trials=100_000, seed=1):
    """E[exp(-s I_intra)] given nu0: interferer count ~ Poisson(m_bar - 1 | <= M-1),
    distances Rician, fading averaged out per interferer."""
    rng = np.random.default_rng(seed)
    n = truncated_poisson_draws(rng, m_bar - 1, M - 1, trials)
    vals = np.ones(trials)
    nmax = n.max()
    pts = np.array([nu0, 0.0]) + rng.normal(0, sigma, (trials, nmax, 2))
    w = np.hypot(pts[..., 0], pts[..., 1])
    fac = 1.0 / (1.0 + s * w ** -alpha)
    mask = np.arange(nmax)[None, :] < n[:, None]
    vals = np.prod(np.where(mask, fac, 1.0), axis=1)
    return vals.mean(), vals.std(ddof=1) / math.sqrt(trials)


def mc_inter(sigma, lambda_c, m_bar, M, s, alpha=4.0, radius=1000.0, trials=10_000, seed=2):
    """E[exp(-s I_inter)] from brute-force PPP draws on a disk."""
    rng = np.random.default_rng(seed)
    vals = np.empty(trials)
    for t in range(trials):
        nc = rng.poisson(lambda_c * math.pi * radius ** 2)
        rho = radius * np.sqrt(rng.random(nc))
        phi = rng.uniform(0, 2 * math.pi, nc)
        cnt = truncated_poisson_draws(rng, m_bar, M, nc)
        c = np.repeat(np.column_stack([rho * np.cos(phi), rho * np.sin(phi)]), cnt, axis=0)
        p = c + rng.normal(0, sigma, c.shape)
        d = np.hypot(p[:, 0], p[:, 1])
        vals[t] = np.exp(-np.log1p(s * d ** -alpha).sum())
    return vals.mean(), vals.std(ddof=1) / math.sqrt(trials)


def _sample_rice(rng, nu0, sigma, size):
    p = np.array([nu0, 0.0]) + rng.normal(0, sigma, (size, 2))
    return np.hypot(p[:, 0], p[:, 1])


def _rice_below(rng, nu0, sigma, r, size):
    out = np.empty(0)
    while len(out) < size:
        x = _sample_rice(rng, nu0, sigma, 4 * size)
        out = np.concatenate([out, x[x < r]])
    return out[:size]


def _rice_above(rng, nu0, sigma, r, size):
    out = np.empty(0)
    while len(out) < size:
        x = _sample_rice(rng, nu0, sigma, 4 * size)
        out = np.concatenate([out, x[x > r]])
    return out[:size]


def mc_kclosest_binomial(sigma, nu0, r, m_bar, M, k, s, alpha=4.0, trials=100_000, seed=3):
    """The displayed k-closest double sum as a sampling experiment: n from the
    truncated Poisson, l closer interferers from Binomial(n, p) truncated at
    min(n, k-1), distances by rejection."""
    rng = np.random.default_rng(seed)
    p = 0.0 if M == 1 else (k - 1) / (M - 1)
    n = truncated_poisson_draws(rng, m_bar - 1, M - 1, trials)
    g = np.minimum(n, k - 1)
    l = rng.binomial(n, p)
    bad = l > g
    while bad.any():
        l[bad] = rng.binomial(n[bad], p)
        bad = l > g
    lmax, omax = max(int(l.max()), 1), max(int((n - l).max()), 1)
    win = _rice_below(rng, nu0, sigma, r, trials * lmax).reshape(trials, lmax)
    wout = _rice_above(rng, nu0, sigma, r, trials * omax).reshape(trials, omax)
    fin = np.where(np.arange(lmax)[None] < l[:, None], 1 / (1 + s * win ** -alpha), 1.0)
    fout = np.where(np.arange(omax)[None] < (n - l)[:, None], 1 / (1 + s * wout ** -alpha), 1.0)
    vals = fin.prod(1) * fout.prod(1)
    return vals.mean(), vals.std(ddof=1) / math.sqrt(trials)


def mc_kclosest_geometric(sigma, nu0, r, m_bar, M, k, s, alpha=4.0, trials=100_000, seed=4):
    """The cluster geometry given the serving distance: k-1 transmitters
    below r, M-k above, and n interferers picked uniformly among those M-1."""
    rng = np.random.default_rng(seed)
    below = _rice_below(rng, nu0, sigma, r, trials * max(k - 1, 1)).reshape(trials, -1)[:, :k - 1]
    above = _rice_above(rng, nu0, sigma, r, trials * max(M - k, 1)).reshape(trials, -1)[:, :M - k]
    others = np.concatenate([below, above], axis=1)
    n = truncated_poisson_draws(rng, m_bar - 1, M - 1, trials)
    rank = np.argsort(np.argsort(rng.random((trials, M - 1)), axis=1), axis=1)
    fac = np.where(rank < n[:, None], 1.0 / (1.0 + s * others ** -alpha), 1.0)
    vals = fac.prod(1)
    return vals.mean(), vals.std(ddof=1) / math.sqrt(trials)


def kclosest_hypergeometric(K_in, K_out, M, k, m_bar):
    """The k-closest double sum with the number of closer interferers drawn
    without replacement: Hypergeom(population M-1, k-1 marked, n drawn)."""
    pn = stats.poisson.pmf(np.arange(M), m_bar - 1)
    pn /= pn.sum()
    total = 0.0
    for n in range(M):
        l = np.arange(0, min(n, k - 1) + 1)
        h = stats.hypergeom.pmf(l, M - 1, k - 1, n)
        total += pn[n] * np.sum(h * K_in ** l * K_out ** (n - l))
    return total
