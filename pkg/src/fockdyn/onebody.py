"""Single-particle hopping models and their evolution coefficients.

The propagator exposes c[l, m](t) = <l| exp(-i H0 t) |m> for a Hermitian
hopping matrix H0 (hbar = 1, energies in units of the hopping scale J).
Infinite-time averages of |c_lm(t) c_ln(t)|^2 are evaluated spectrally: the
product expands into phases exp(-i (E_k1 + E_k2 - E_k3 - E_k4) t), and only
frequency combinations that vanish (within a degeneracy tolerance) survive
the average.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import DecompositionFailure, DimensionMismatch, NonHermitianInput

HERMITICITY_TOL = 1e-12
FREQUENCY_GROUP_TOL = 1e-9  # in units of the hopping energy


class HoppingModel:
    """Hermitian single-particle Hamiltonian with a reference energy scale."""

    __slots__ = ("matrix", "energy_scale")

    def __init__(self, matrix: np.ndarray, energy_scale: float = 1.0):
        mat = np.asarray(matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionMismatch(f"hopping matrix must be square, got {mat.shape}")
        if np.max(np.abs(mat - mat.conj().T)) > HERMITICITY_TOL:
            raise NonHermitianInput("hopping matrix is not Hermitian")
        if np.max(np.abs(mat.imag)) == 0.0:
            mat = mat.real.astype(float)
        mat = mat.copy()
        mat.setflags(write=False)
        self.matrix = mat
        self.energy_scale = float(energy_scale)

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0]


def hardwall_chain(
    n_modes: int, hopping: float = 1.0, tilt: Optional[Sequence[float]] = None
) -> HoppingModel:
    """Nearest-neighbor chain with open ends: off-diagonal -J, diagonal the
    optional per-mode on-site energies."""
    if n_modes < 1:
        raise DimensionMismatch("need at least one mode")
    mat = np.zeros((n_modes, n_modes))
    for i in range(n_modes - 1):
        mat[i, i + 1] = mat[i + 1, i] = -hopping
    if tilt is not None:
        tilt = np.asarray(tilt, dtype=float)
        if tilt.shape != (n_modes,):
            raise DimensionMismatch(
                f"tilt must have one entry per mode, got shape {tilt.shape}"
            )
        mat[np.diag_indices(n_modes)] = tilt
    return HoppingModel(mat, energy_scale=abs(hopping) if hopping else 1.0)


class Propagator:
    """Eigendecomposition-backed evaluation of c(t) = exp(-i H0 t).

    The decomposition is computed once; coefficient matrices for arbitrary
    times are assembled on demand and evaluation is reentrant.
    """

    __slots__ = ("eigenvalues", "eigenvectors", "energy_scale")

    def __init__(self, model: HoppingModel):
        try:
            evals, evecs = np.linalg.eigh(model.matrix)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - eigh on Hermitian
            raise DecompositionFailure(str(exc)) from exc
        recon = (evecs * evals) @ evecs.conj().T
        err = np.max(np.abs(recon - model.matrix))
        if err > 1e-10:
            raise DecompositionFailure(f"eigendecomposition residual {err:.3e}")
        evals.setflags(write=False)
        evecs.setflags(write=False)
        self.eigenvalues = evals
        self.eigenvectors = evecs
        self.energy_scale = model.energy_scale

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.shape[0]

    def coefficients(self, t: float) -> np.ndarray:
        """c(t) as an (L, L) complex matrix."""
        phases = np.exp(-1j * self.eigenvalues * t)
        return (self.eigenvectors * phases) @ self.eigenvectors.conj().T

    def coefficients_many(self, times) -> np.ndarray:
        """c(t) stacked over a time grid, shape (T, L, L)."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        phases = np.exp(-1j * np.outer(times, self.eigenvalues))
        return np.einsum("lk,tk,mk->tlm", self.eigenvectors, phases,
                         self.eigenvectors.conj(), optimize=True)

    def row(self, site: int, times) -> np.ndarray:
        """c[site, :](t) over a time grid, shape (T, L); site is 1-based."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        phases = np.exp(-1j * np.outer(times, self.eigenvalues))
        u = self.eigenvectors[site - 1]
        return (phases * u) @ self.eigenvectors.conj().T


def propagator(model: HoppingModel) -> Propagator:
    """Diagonalize a hopping model once for repeated c(t) evaluation."""
    return Propagator(model)


@dataclass(frozen=True)
class TwoPathAmplitude:
    """Amplitude of one two-particle path,
    C^{mn}_{ijkl}(t) = c*_im c*_jn c_km c_ln."""

    value: complex

    def __post_init__(self):
        if abs(self.value) > 1.0 + 1e-12:
            raise DimensionMismatch(f"path amplitude modulus {abs(self.value)} > 1")


def two_path_amplitude(
    prop: Propagator, t: float, m: int, n: int, i: int, j: int, k: int, l: int
) -> TwoPathAmplitude:
    """C^{mn}_{ijkl}(t); all mode indices 1-based."""
    c = prop.coefficients(t)
    value = (
        np.conj(c[i - 1, m - 1])
        * np.conj(c[j - 1, n - 1])
        * c[k - 1, m - 1]
        * c[l - 1, n - 1]
    )
    return TwoPathAmplitude(value=complex(value))


class AveragedCoefficients:
    """Infinite-time averages of |c_lm(t) c_ln(t)|^2 for one site l, with
    unweighted mean and standard deviation over the pairs m != n."""

    __slots__ = ("site", "table", "mu_c", "w_c", "min_offdiag", "max_offdiag")

    def __init__(self, site: int, table: np.ndarray):
        table = np.asarray(table, dtype=float)
        table.setflags(write=False)
        self.site = int(site)
        self.table = table
        L = table.shape[0]
        off = ~np.eye(L, dtype=bool)
        values = table[off]
        self.mu_c = float(values.mean())
        self.w_c = float(values.std())
        self.min_offdiag = float(values.min())
        self.max_offdiag = float(values.max())

    @property
    def n_modes(self) -> int:
        return self.table.shape[0]

    @property
    def ratio(self) -> float:
        return self.w_c / self.mu_c


def averaged_coefficients(
    prop: Propagator, site: int, tol: Optional[float] = None
) -> AveragedCoefficients:
    """Time-averaged four-point coefficients for one site (1-based).

    Pair frequencies E_k1 + E_k2 that agree within tol (default
    1e-9 * energy scale) are grouped as degenerate and their amplitudes
    summed coherently before squaring, which makes the average exact for any
    spectrum, including the mirror-symmetric hard-wall one where
    E_k + E_{L+1-k} = 0 produces massive sum degeneracies.
    """
    L = prop.n_modes
    if not 1 <= site <= L:
        raise DimensionMismatch(f"site {site} outside 1..{L}")
    if tol is None:
        tol = FREQUENCY_GROUP_TOL * prop.energy_scale
    E = prop.eigenvalues
    V = prop.eigenvectors
    # u[m, k] multiplies exp(-i E_k t) in c_{site,m}(t)
    u = V[site - 1][None, :] * V.conj()
    sums = (E[:, None] + E[None, :]).ravel()
    order = np.argsort(sums, kind="stable")
    sorted_sums = sums[order]
    starts = np.flatnonzero(
        np.concatenate(([True], np.diff(sorted_sums) > tol))
    )
    # amplitude of exp(-i (E_k1 + E_k2) t) in c_lm c_ln, for every (m, n)
    amps = (u[:, None, :, None] * u[None, :, None, :]).reshape(L, L, L * L)
    grouped = np.add.reduceat(amps[:, :, order], starts, axis=2)
    table = np.sum(np.abs(grouped) ** 2, axis=2)
    return AveragedCoefficients(site=site, table=table)


class CoefficientStats(NamedTuple):
    mu_c: float
    w_c: float
    ratio: float


def coefficient_stats(n_modes: int, site: int, hopping: float = 1.0) -> CoefficientStats:
    """mu_C, W_C and their ratio for the hard-wall chain of given length."""
    prop = propagator(hardwall_chain(n_modes, hopping))
    avg = averaged_coefficients(prop, site)
    return CoefficientStats(mu_c=avg.mu_c, w_c=avg.w_c, ratio=avg.ratio)


def fit_mu_c(n_modes: int) -> float:
    """Large-L fit of the coefficient mean for the hard-wall chain."""
    L = float(n_modes)
    return 1.00 / L**2 - 1.94 / L**3 + 2.38 / L**4


def fit_w_c(n_modes: int) -> float:
    """Large-L fit of the coefficient standard deviation."""
    L = float(n_modes)
    return 0.11 / L**2 + 2.92 / L**3 - 22.50 / L**4


def fit_ratio(n_modes: int) -> float:
    """Large-L expansion of W_C / mu_C, approaching 0.11 from above."""
    L = float(n_modes)
    return 0.11 + 3.13 / L - 16.71 / L**2 - 39.87 / L**3
