"""Independent oracles used by the tests.

These deliberately avoid the package's path-formula and ladder-operator code:
two-particle expectation values come from permanents of single-particle
amplitude matrices, and long-time averages from windowed quadrature.
"""

import itertools
import math

import numpy as np


def permanent(matrix: np.ndarray) -> complex:
    """Ryser-free brute force; fine for the tiny matrices used in tests."""
    n = matrix.shape[0]
    total = 0.0 + 0.0j
    for perm in itertools.permutations(range(n)):
        term = 1.0 + 0.0j
        for row, col in enumerate(perm):
            term *= matrix[row, col]
        total += term
    return total


def two_boson_states(n_modes: int, n_species: int):
    """Occupation tuples over (mode, species) slots holding two bosons."""
    slots = n_modes * n_species
    states = []
    for a in range(slots):
        for b in range(a, slots):
            occ = [0] * slots
            occ[a] += 1
            occ[b] += 1
            states.append(tuple(occ))
    return states


def _slot_list(occ):
    out = []
    for slot, count in enumerate(occ):
        out.extend([slot] * count)
    return out


def two_boson_amplitude(c_slots: np.ndarray, occ_in, occ_out) -> complex:
    """<out| U x U |in> for two bosons via the permanent of the slot-level
    single-particle amplitude matrix."""
    ins = _slot_list(occ_in)
    outs = _slot_list(occ_out)
    mat = np.array([[c_slots[o, i] for i in ins] for o in outs])
    norm = math.sqrt(
        math.prod(math.factorial(v) for v in occ_in)
        * math.prod(math.factorial(v) for v in occ_out)
    )
    return permanent(mat) / norm


def two_boson_coincidence(c_matrix: np.ndarray, n_species: int, occ_in) -> float:
    """<N_1 N_2> after evolving a two-boson state; species are evolved by the
    same mode-space matrix and never mixed."""
    n_modes = c_matrix.shape[0]
    slots = n_modes * n_species
    c_slots = np.zeros((slots, slots), dtype=complex)
    for s in range(n_species):
        for l in range(n_modes):
            for m in range(n_modes):
                c_slots[l * n_species + s, m * n_species + s] = c_matrix[l, m]
    value = 0.0
    for occ_out in two_boson_states(n_modes, n_species):
        amp = two_boson_amplitude(c_slots, occ_in, occ_out)
        mode_totals = [
            sum(occ_out[l * n_species + s] for s in range(n_species))
            for l in range(n_modes)
        ]
        value += abs(amp) ** 2 * mode_totals[0] * mode_totals[1]
    return value


def bartlett_time_average(sample_fn, horizon: float, n_samples: int) -> np.ndarray:
    """Triangular-window estimate of an infinite-time average; the window
    suppresses finite-horizon leakage of oscillating terms to O(1/(w T)^2)."""
    times = np.linspace(0.0, horizon, n_samples)
    weights = 1.0 - times / horizon
    values = sample_fn(times)
    return np.tensordot(weights, values, axes=(0, 0)) / weights.sum()
