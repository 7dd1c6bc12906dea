"""Where should the content live?

When the requested file is held by the k-th closest transmitter of the cluster,
the serving link gets longer as k grows.  This script compares k = 1, uniform
placement and k = M on coverage and on area spectral efficiency, then finds the
number of simultaneous transmitters that maximises the latter.

    python3 demos/content_placement.py
"""
from clusterd2d.geometry import KClosest, Uniform, reference_params
from clusterd2d.metrics import ase, coverage, optimize_mbar

p = reference_params(m_bar=4.0)
strategies = {"k=1": KClosest(1), "uniform": Uniform(), f"k={p.M}": KClosest(p.M)}

print("strategy  coverage  ASE [bit/s/Hz/km^2]")
for name, s in strategies.items():
    c = coverage(p, s).value
    a = ase(p, s).value * 1e6
    print(f"{name:8s}  {c:.4f}    {a:.2f}")

# Coverage and ASE order the same way here: the ASE prefactor does not depend
# on where the content is.

# The optimum trades more links per cluster against more interference.  The
# closed form is fast enough to scan every m_bar up to M.
m_star, best, curve = optimize_mbar(p, Uniform(), "closed-form")
print(f"closed form: m_bar* = {m_star}, ASE = {best.value * 1e6:.2f}")
for name, s in (("uniform", Uniform()), ("k=1", KClosest(1))):
    m_star, best, _ = optimize_mbar(p, s, "exact", mbar_range=range(1, 9))
    print(f"exact, {name}: m_bar* = {m_star} over 1..8, ASE = {best.value * 1e6:.2f}")
