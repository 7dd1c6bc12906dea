"""Distances inside a Thomas cluster.

A cluster member sits at a Gaussian offset from its centre, so its distance to
a receiver at the origin is Rician.  Averaging over a Rayleigh centre distance
gives back a Rayleigh law with twice the variance.  The script draws members,
compares histograms against the analytic densities and prints KS distances.

    python3 demos/distance_laws.py
"""
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from scipy import stats

from clusterd2d.geometry import (KClosest, intra_member_pdf, rayleigh_pdf, reference_params,
                                 serving_pdf)

p = reference_params()
sig = p.sigma
rng = np.random.default_rng(0)

# conditioned on the cluster centre at distance nu0
nu0 = 2 * sig
pts = rng.normal(0.0, sig, size=(100_000, 2)) + [nu0, 0.0]
d = np.hypot(*pts.T)
print("KS rician   :", round(stats.kstest(d, intra_member_pdf(p, nu0).cdf).statistic, 4))

# unconditioned: the centre itself is Gaussian around the receiver
centres = rng.normal(0.0, sig, size=(100_000, 2))
d_all = np.hypot(*(centres + rng.normal(0.0, sig, size=(100_000, 2))).T)
print("KS rayleigh :", round(stats.kstest(d_all, stats.rayleigh(scale=sig * np.sqrt(2)).cdf).statistic, 4))

# nearest of M members, again given nu0
members = rng.normal(0.0, sig, size=(20_000, p.M, 2)) + [nu0, 0.0]
nearest = np.sort(np.hypot(members[..., 0], members[..., 1]), axis=1)[:, 0]
k1 = serving_pdf(p, KClosest(1), nu0)
print("KS nearest  :", round(stats.kstest(nearest, k1.cdf).statistic, 4))

x = np.linspace(0.01, 6 * sig, 400)
fig, ax = plt.subplots(figsize=(5, 3.5))
ax.hist(d, bins=80, density=True, alpha=0.4, label="member, given centre")
ax.plot(x, intra_member_pdf(p, nu0).pdf(x), "C0")
ax.hist(d_all, bins=80, density=True, alpha=0.4, label="member, averaged")
ax.plot(x, rayleigh_pdf(x, 2 * sig ** 2), "C1")
ax.hist(nearest, bins=80, density=True, alpha=0.4, label="nearest of M")
ax.plot(x, k1.pdf(x), "C2")
ax.set_xlabel("distance [m]")
ax.legend()
fig.tight_layout()
out = os.path.join(os.path.dirname(os.path.abspath(__file__)), "distance_laws.svg")
fig.savefig(out)
print("wrote", out)
