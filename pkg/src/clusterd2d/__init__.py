"""Coverage and area spectral efficiency of clustered device-to-device
networks: distance distributions, interference Laplace transforms, coverage
integrals, an ASE optimiser and a brute-force simulator to check them."""

from .geometry import (
    KClosest,
    NetworkParams,
    Uniform,
    reference_params,
)
from .metrics import (
    ase,
    coverage,
    coverage_closed_form,
    coverage_kclosest_approx,
    coverage_kclosest_exact,
    coverage_uniform_approx,
    coverage_uniform_exact,
    optimize_mbar,
)
from .montecarlo import SimulationConfig, sample_network, simulate_coverage

__all__ = [
    "KClosest",
    "NetworkParams",
    "Uniform",
    "reference_params",
    "ase",
    "coverage",
    "coverage_closed_form",
    "coverage_kclosest_approx",
    "coverage_kclosest_exact",
    "coverage_uniform_approx",
    "coverage_uniform_exact",
    "optimize_mbar",
    "SimulationConfig",
    "sample_network",
    "simulate_coverage",
]
