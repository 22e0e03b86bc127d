"""Cross-route consistency checks behind the `verify` CLI subcommand.

Each check compares two independent computational routes to the same
quantity (closed form versus eigendecomposition, path formulas versus
many-body state evolution, spectral averages versus quadrature) and reports
the residual against a fixed threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import enumerate_sector, make_config, nonequivalent_double_well
from .freedyn import density_variance, normalized_fluctuation
from .manybody import (
    bipartite_parity_check,
    build_hamiltonian,
    contact_interaction,
    density_operator,
    diagonalize,
    evolve_observable,
    first_order_prediction,
    time_avg_variance,
)
from .onebody import averaged_coefficients, hardwall_chain, propagator


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.residual < self.threshold

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status}  {self.name}: residual {self.residual:.3e} "
            f"(threshold {self.threshold:.1e})"
        )


def check_two_mode_exactness() -> CheckResult:
    """F reproduces the DOI exactly in any two-mode system."""
    prop = propagator(hardwall_chain(2))
    avg = averaged_coefficients(prop, 1)
    worst = 0.0
    for cls in nonequivalent_double_well(8, 0):
        report = normalized_fluctuation(cls.config, avg)
        worst = max(worst, abs(report.fluctuation - report.doi))
    return CheckResult("two-mode F equals DOI", worst, 1e-12)


def check_propagator_closed_form(n_modes: int = 12) -> CheckResult:
    """Eigendecomposition coefficients against the open-chain sine sum."""
    prop = propagator(hardwall_chain(n_modes))
    k = np.arange(1, n_modes + 1)
    modes = np.arange(1, n_modes + 1)
    sines = np.sin(np.pi * np.outer(k, modes) / (n_modes + 1))
    worst = 0.0
    for t in np.linspace(0.0, 7.0, 29):
        phases = np.exp(2j * t * np.cos(np.pi * k / (n_modes + 1)))
        closed = 2.0 / (n_modes + 1) * np.einsum("kl,km,k->lm", sines, sines, phases)
        worst = max(worst, float(np.max(np.abs(closed - prop.coefficients(t)))))
    return CheckResult("hard-wall propagator closed form", worst, 1e-10)


def check_density_variance_vs_evolution() -> CheckResult:
    """Path-formula variance against exact state-vector evolution (U = 0)."""
    hop = hardwall_chain(3)
    prop = propagator(hop)
    basis = enumerate_sector(3, (2, 1))
    config = make_config([[1, 1], [1, 0], [0, 0]])
    spec = diagonalize(build_hamiltonian(hop, contact_interaction(0.0), basis), config)
    times = np.linspace(0.0, 10.0, 50)
    obs = density_operator(basis, 1)
    first, second = evolve_observable(spec, obs, times)
    exact = second - first**2
    formula = density_variance(config, prop, 1, times)
    worst = float(np.max(np.abs(exact - formula)))
    return CheckResult("density variance vs state evolution", worst, 1e-10)


def check_bipartite_symmetry() -> CheckResult:
    """Sign-of-U invariance of densities on the untilted chain."""
    hop = hardwall_chain(2)
    basis = enumerate_sector(2, (2, 2))
    parity = bipartite_parity_check(hop, basis, strength=0.7)
    worst = parity.residual if parity.is_bipartite else np.inf
    config = make_config([[2, 0], [0, 2]])
    times = np.linspace(0.0, 10.0, 40)
    obs = density_operator(basis, 1)
    series = {}
    for strength in (0.7, -0.7):
        spec = diagonalize(
            build_hamiltonian(hop, contact_interaction(strength), basis), config
        )
        series[strength], _ = evolve_observable(spec, obs, times)
    worst = max(worst, float(np.max(np.abs(series[0.7] - series[-0.7]))))
    return CheckResult("bipartite U -> -U symmetry", worst, 1e-10)


def check_perturbation_slope() -> CheckResult:
    """First-order kernel against a finite-difference interaction slope."""
    tilt = np.array([0.0, 4.0])
    hop = hardwall_chain(2, tilt=tilt)
    prop = propagator(hop)
    config = make_config([[4, 2], [1, 1]])
    basis = enumerate_sector(2, tuple(int(v) for v in config.species_totals))
    obs = density_operator(basis, 1)
    t = 1.0
    du = 1e-4

    def exact(strength: float) -> float:
        spec = diagonalize(
            build_hamiltonian(hop, contact_interaction(strength), basis), config
        )
        first, _ = evolve_observable(spec, obs, [t])
        return float(first[0])

    slope_fd = (exact(du) - exact(-du)) / (2 * du)
    slope_kernel = first_order_prediction(config, 1, t, 1.0, prop) - exact(0.0)
    residual = abs(slope_fd - slope_kernel) / abs(slope_kernel)
    return CheckResult("perturbation kernel vs finite difference", residual, 1e-3)


def check_time_average_vs_quadrature() -> CheckResult:
    """Spectral infinite-time average against a long-window quadrature."""
    hop = hardwall_chain(2)
    basis = enumerate_sector(2, (4, 4))
    config = make_config([[4, 0], [0, 4]])
    spec = diagonalize(
        build_hamiltonian(hop, contact_interaction(0.3), basis), config
    )
    obs = density_operator(basis, 1)
    spectral = time_avg_variance(spec, obs)
    times = np.linspace(0.0, 1e3, 200_001)
    first, second = evolve_observable(spec, obs, times)
    variance = second - first**2
    quadrature = float(np.trapezoid(variance, times) / times[-1])
    residual = abs(spectral - quadrature) / abs(quadrature)
    return CheckResult("spectral time average vs quadrature", residual, 1e-3)


ALL_CHECKS = (
    check_two_mode_exactness,
    check_propagator_closed_form,
    check_density_variance_vs_evolution,
    check_bipartite_symmetry,
    check_perturbation_slope,
    check_time_average_vs_quadrature,
)


def run_all() -> list[CheckResult]:
    return [check() for check in ALL_CHECKS]
