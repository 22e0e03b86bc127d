"""Interacting species-blind Bose-Hubbard dynamics.

Builds sparse sector Hamiltonians H = H0 + V (identical hopping and identical
intra/inter-species contact interaction for every species), diagonalizes them
densely, and evaluates exact time evolution, exact infinite-time averages of
observable variances, and the first-order interaction correction

    O1(t, U) = O1(t, 0) + (U t) P(t) + O((U t)^2),

whose two-particle kernel D^{mn}_{op}(t) is a time-ordered quadrature over
single-particle evolution coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sparse
from numpy.polynomial.legendre import leggauss

from .errors import (
    BasisMismatch,
    ConvergenceFailure,
    DimensionMismatch,
    DimensionOverflow,
    NonHermitianInput,
    QuadratureNonConvergence,
)
from .fock import FockConfiguration, SectorBasis
from .onebody import HoppingModel, Propagator

DENSE_CAP = 5000
GAP_GROUP_TOL = 1e-9  # in units of the hopping energy
_SYM_TOL = 1e-12


class InteractionModel:
    """Two-body interaction: contact of strength U by default, or a general
    rank-4 coefficient array V[i,j,k,l] (Hermitian, symmetric under i<->j
    and k<->l)."""

    __slots__ = ("strength", "coefficients")

    def __init__(self, strength: float = 0.0, coefficients: Optional[np.ndarray] = None):
        self.strength = float(strength)
        if coefficients is None:
            self.coefficients = None
            return
        coeff = np.asarray(coefficients, dtype=complex)
        if coeff.ndim != 4 or len(set(coeff.shape)) != 1:
            raise DimensionMismatch(f"expected an L^4 array, got shape {coeff.shape}")
        if np.max(np.abs(coeff - coeff.conj().transpose(2, 3, 0, 1))) > _SYM_TOL:
            raise NonHermitianInput("interaction coefficients are not Hermitian")
        if (
            np.max(np.abs(coeff - coeff.transpose(1, 0, 2, 3))) > _SYM_TOL
            or np.max(np.abs(coeff - coeff.transpose(0, 1, 3, 2))) > _SYM_TOL
        ):
            raise NonHermitianInput(
                "interaction coefficients must be symmetric under i<->j and k<->l"
            )
        coeff = coeff.copy()
        coeff.setflags(write=False)
        self.coefficients = coeff

    @property
    def is_contact(self) -> bool:
        return self.coefficients is None


def contact_interaction(strength: float) -> InteractionModel:
    """On-mode contact interaction, V_ijkl = (U/2) delta_ij delta_jk delta_kl."""
    return InteractionModel(strength=strength)


@dataclass(frozen=True)
class ManyBodyOperator:
    """Sparse Hermitian operator over a sector basis."""

    basis: SectorBasis
    matrix: sparse.csr_matrix

    def __post_init__(self):
        diff = self.matrix - self.matrix.conj().T
        if diff.nnz and np.max(np.abs(diff.data)) > _SYM_TOL:
            raise NonHermitianInput("many-body matrix is not Hermitian")

    @property
    def dimension(self) -> int:
        return self.basis.dimension


def _hopping_matrix(hop: HoppingModel, basis: SectorBasis) -> sparse.csr_matrix:
    L, S = basis.n_modes, basis.n_species
    if hop.n_modes != L:
        raise DimensionMismatch("hopping model and basis disagree on the mode count")
    J = hop.matrix
    occ = basis.occupations
    dim = basis.dimension
    rows: list[int] = []
    cols: list[int] = []
    vals: list[complex] = []
    diag = occ.sum(axis=2).astype(complex) @ np.diag(J).astype(complex)
    pairs = [(i, j) for i in range(L) for j in range(L) if i != j and J[i, j] != 0]
    for a in range(dim):
        state = occ[a]
        for s in range(S):
            for i, j in pairs:
                nj = state[j, s]
                if nj == 0:
                    continue
                amp = J[i, j] * np.sqrt((state[i, s] + 1) * nj)
                moved = state.copy()
                moved[j, s] -= 1
                moved[i, s] += 1
                rows.append(basis.rank(moved))
                cols.append(a)
                vals.append(amp)
    mat = sparse.csr_matrix((vals, (rows, cols)), shape=(dim, dim), dtype=complex)
    mat += sparse.diags(diag, format="csr")
    return mat


def _contact_diagonal(strength: float, basis: SectorBasis) -> sparse.csr_matrix:
    totals = basis.occupations.sum(axis=2)
    diag = 0.5 * strength * np.sum(totals * (totals - 1), axis=1)
    return sparse.diags(diag.astype(complex), format="csr")


def _general_interaction(coeff: np.ndarray, basis: SectorBasis) -> sparse.csr_matrix:
    # V = sum_{ijkl,s,r} V_ijkl adag_{i,s} adag_{j,r} a_{k,s} a_{l,r}
    L, S = basis.n_modes, basis.n_species
    if coeff.shape[0] != L:
        raise DimensionMismatch("interaction array and basis disagree on the mode count")
    occ = basis.occupations
    dim = basis.dimension
    rows: list[int] = []
    cols: list[int] = []
    vals: list[complex] = []
    nz = np.argwhere(np.abs(coeff) > 0)
    for a in range(dim):
        state = occ[a]
        for s in range(S):
            for r in range(S):
                for i, j, k, l in nz:
                    n_l = state[l, r]
                    if n_l == 0:
                        continue
                    amp = np.sqrt(n_l)
                    st1_k = state[k, s] - (1 if (k == l and s == r) else 0)
                    if st1_k <= 0:
                        continue
                    amp *= np.sqrt(st1_k)
                    moved = state.copy()
                    moved[l, r] -= 1
                    moved[k, s] -= 1
                    amp *= np.sqrt(moved[j, r] + 1)
                    moved[j, r] += 1
                    amp *= np.sqrt(moved[i, s] + 1)
                    moved[i, s] += 1
                    rows.append(basis.rank(moved))
                    cols.append(a)
                    vals.append(coeff[i, j, k, l] * amp)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(dim, dim), dtype=complex)


def build_hamiltonian(
    hop: HoppingModel, inter: InteractionModel, basis: SectorBasis
) -> ManyBodyOperator:
    """Sector Hamiltonian H0 + V; species-blind by construction."""
    mat = _hopping_matrix(hop, basis)
    if inter.is_contact:
        if inter.strength != 0.0:
            mat = mat + _contact_diagonal(inter.strength, basis)
    else:
        mat = mat + _general_interaction(inter.coefficients, basis)
    return ManyBodyOperator(basis=basis, matrix=mat.tocsr())


def density_operator(basis: SectorBasis, site: int) -> ManyBodyOperator:
    """Total density of one mode (1-based) as a diagonal sector operator."""
    if not 1 <= site <= basis.n_modes:
        raise DimensionMismatch(f"site {site} outside 1..{basis.n_modes}")
    diag = basis.occupations[:, site - 1, :].sum(axis=1).astype(complex)
    return ManyBodyOperator(basis=basis, matrix=sparse.diags(diag, format="csr"))


def species_number_operator(basis: SectorBasis, species: int) -> ManyBodyOperator:
    """Particle number of one species (1-based); conserved by every
    species-blind operator."""
    if not 1 <= species <= basis.n_species:
        raise DimensionMismatch(f"species {species} outside 1..{basis.n_species}")
    diag = basis.occupations[:, :, species - 1].sum(axis=1).astype(complex)
    return ManyBodyOperator(basis=basis, matrix=sparse.diags(diag, format="csr"))


def onebody_operator(basis: SectorBasis, matrix: np.ndarray) -> ManyBodyOperator:
    """Species-blind one-particle observable sum_{ij,s} A_ij adag_{i,s} a_{j,s}."""
    A = np.asarray(matrix, dtype=complex)
    if np.max(np.abs(A - A.conj().T)) > _SYM_TOL:
        raise NonHermitianInput("one-body observable matrix is not Hermitian")
    return ManyBodyOperator(basis=basis, matrix=_hopping_matrix(HoppingModel(A), basis))


def twobody_operator(basis: SectorBasis, coefficients: np.ndarray) -> ManyBodyOperator:
    """Species-blind two-particle observable from rank-4 coefficients."""
    coeff = np.asarray(coefficients, dtype=complex)
    mat = _general_interaction(coeff, basis)
    return ManyBodyOperator(basis=basis, matrix=mat.tocsr())


class SpectralDecomposition:
    """Eigenpairs of a sector Hamiltonian, optionally bound to an initial
    state through the overlap weights c_j = <E_j | Psi(0)>."""

    __slots__ = ("basis", "energies", "vectors", "weights", "energy_scale")

    def __init__(self, basis, energies, vectors, weights=None, energy_scale=1.0):
        self.basis = basis
        energies.setflags(write=False)
        vectors.setflags(write=False)
        self.energies = energies
        self.vectors = vectors
        self.weights = weights
        self.energy_scale = float(energy_scale)

    @property
    def dimension(self) -> int:
        return self.energies.shape[0]

    def bind(self, initial) -> "SpectralDecomposition":
        """Attach an initial state (FockConfiguration or state vector)."""
        if isinstance(initial, FockConfiguration):
            vec = np.zeros(self.dimension, dtype=complex)
            vec[self.basis.rank(initial)] = 1.0
        else:
            vec = np.asarray(initial, dtype=complex)
            if vec.shape != (self.dimension,):
                raise BasisMismatch("initial vector length does not match the basis")
        weights = self.vectors.conj().T @ vec
        weights.setflags(write=False)
        return SpectralDecomposition(
            self.basis, self.energies, self.vectors, weights, self.energy_scale
        )

    def state_at(self, times) -> np.ndarray:
        """Evolved state vectors, shape (T, dim)."""
        if self.weights is None:
            raise BasisMismatch("no initial state bound to this decomposition")
        times = np.atleast_1d(np.asarray(times, dtype=float))
        phases = np.exp(-1j * np.outer(times, self.energies))
        return (phases * self.weights) @ self.vectors.T


def diagonalize(
    op: ManyBodyOperator,
    initial=None,
    dense_cap: int = DENSE_CAP,
    energy_scale: float = 1.0,
) -> SpectralDecomposition:
    """Full dense eigendecomposition of a sector operator.

    Eigenvector phases follow a deterministic convention: the first
    component of significant modulus is made real and positive.
    """
    dim = op.dimension
    if dim > dense_cap:
        raise DimensionOverflow(f"dimension {dim} exceeds dense cap {dense_cap}")
    dense = op.matrix.toarray()
    try:
        energies, vectors = np.linalg.eigh(dense)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    scale = max(np.max(np.abs(energies)), 1e-300)
    residual = np.max(np.abs(dense @ vectors - vectors * energies))
    if residual > 1e-8 * scale:
        raise ConvergenceFailure(f"eigenpair residual {residual:.3e}")
    # deterministic phase: first significant component real positive
    for j in range(dim):
        col = vectors[:, j]
        idx = np.argmax(np.abs(col) > 1e-8)
        pivot = col[idx]
        if pivot != 0:
            vectors[:, j] = col * (np.conj(pivot) / abs(pivot))
    spec = SpectralDecomposition(
        op.basis, energies, vectors, energy_scale=energy_scale
    )
    return spec.bind(initial) if initial is not None else spec


def evolve_observable(
    spec: SpectralDecomposition, obs: ManyBodyOperator, times
) -> tuple[np.ndarray, np.ndarray]:
    """<O(t)> and <O^2(t)> along a time grid for the bound initial state."""
    if not spec.basis.same_sector(obs.basis):
        raise BasisMismatch("observable and decomposition live in different sectors")
    psi = spec.state_at(times)
    opsi = (obs.matrix @ psi.T).T
    first = np.real(np.einsum("ti,ti->t", psi.conj(), opsi))
    second = np.real(np.einsum("ti,ti->t", opsi.conj(), opsi))
    return first, second


def time_avg_variance(
    spec: SpectralDecomposition, obs: ManyBodyOperator, tol: Optional[float] = None
) -> float:
    """Exact infinite-time average of Var O(t) from the spectral data.

    Energy gaps equal within tol (default 1e-9 * energy scale) are grouped
    and their amplitudes summed coherently, which keeps the average exact in
    the presence of energy or gap degeneracies:

        avg Var = sum_{E_j ~ E_k} cbar_j c_k (O^2)_jk - sum_gaps |B_gap|^2,
        B_gap   = sum_{(j,k) in gap group} cbar_j c_k O_jk.
    """
    if spec.weights is None:
        raise BasisMismatch("no initial state bound to this decomposition")
    if not spec.basis.same_sector(obs.basis):
        raise BasisMismatch("observable and decomposition live in different sectors")
    if tol is None:
        tol = GAP_GROUP_TOL * spec.energy_scale
    V = spec.vectors
    O_eig = V.conj().T @ obs.matrix.toarray() @ V
    O2_eig = O_eig @ O_eig
    c = spec.weights
    pair_w = np.outer(c.conj(), c)
    gaps = (spec.energies[:, None] - spec.energies[None, :]).ravel()
    order = np.argsort(gaps, kind="stable")
    sorted_gaps = gaps[order]
    starts = np.flatnonzero(np.concatenate(([True], np.diff(sorted_gaps) > tol)))
    first_amp = (pair_w * O_eig).ravel()[order]
    group_sums = np.add.reduceat(first_amp, starts)
    osc_power = float(np.sum(np.abs(group_sums) ** 2))
    zero_mask = np.abs(gaps) <= tol
    stationary_second = float(np.real(np.sum((pair_w * O2_eig).ravel()[zero_mask.ravel()])))
    return stationary_second - osc_power


@dataclass(frozen=True)
class PerturbationKernel:
    """Two-particle path amplitudes D[m,n,o,p](t) of the first-order
    interaction correction, with quadrature metadata."""

    time: float
    table: np.ndarray  # indexed [m, n, o, p]
    rule: str
    nodes: int

    def __post_init__(self):
        self.table.setflags(write=False)


def _kernel_fixed(prop: Propagator, t: float, nodes: int) -> np.ndarray:
    x, w = leggauss(nodes)
    tp = 0.5 * t * (x + 1.0)
    wt = 0.5 * t * w
    c_fwd = prop.coefficients_many(tp)          # c(t'), axes (q, s, m)
    c_rem = prop.coefficients_many(t - tp)      # c(t - t'), axes (q, p, s)
    densities = np.abs(c_fwd) ** 2              # |c_sn(t')|^2, axes (q, s, n)
    inner = np.einsum("q,qps,qsm,qsn->pmn", wt, c_rem, c_fwd, densities,
                      optimize=True) / t
    c_t = prop.coefficients(t)
    return np.einsum("om,pmn->mnop", c_t.conj(), inner, optimize=True)


def perturbation_kernel(
    prop: Propagator,
    t: float,
    initial_nodes: int = 64,
    target: float = 1e-9,
    max_nodes: int = 4096,
) -> PerturbationKernel:
    """D^{mn}_{op}(t) by Gauss-Legendre quadrature with node doubling until
    the table changes by less than the target."""
    L = prop.n_modes
    if t == 0.0:
        table = np.zeros((L,) * 4, dtype=complex)
        for m in range(L):
            table[m, m, m, m] = 1.0
        return PerturbationKernel(time=0.0, table=table, rule="exact-t0", nodes=0)
    nodes = initial_nodes
    table = _kernel_fixed(prop, t, nodes)
    while True:
        if 2 * nodes > max_nodes:
            raise QuadratureNonConvergence(
                f"kernel quadrature did not reach {target} with {nodes} nodes"
            )
        refined = _kernel_fixed(prop, t, 2 * nodes)
        change = np.max(np.abs(refined - table))
        table = refined
        nodes *= 2
        if change < target:
            return PerturbationKernel(
                time=t, table=table, rule="gauss-legendre", nodes=nodes
            )


def perturbation_term(
    config: FockConfiguration,
    obs_matrix: np.ndarray,
    prop: Propagator,
    t: float,
    kernel: Optional[PerturbationKernel] = None,
) -> float:
    """<P(t)>: slope of a one-particle expectation value in (U t) for contact
    interactions, assembled from ladder and crossed kernel entries."""
    L = config.n_modes
    A = np.asarray(obs_matrix, dtype=complex)
    if A.shape != (L, L) or prop.n_modes != L:
        raise DimensionMismatch("configuration, observable and propagator disagree on L")
    if kernel is None:
        kernel = perturbation_kernel(prop, t)
    elif kernel.time != t:
        raise DimensionMismatch("kernel was computed for a different time")
    D = kernel.table
    totals = config.mode_totals.astype(float)
    ladder_weight = np.outer(totals, totals) - np.diag(totals)
    occ = config.occupations
    crossed_weight = (occ @ occ.T).astype(float)
    np.fill_diagonal(crossed_weight, 0.0)
    ladder = np.einsum("op,mnop,mn->", A, D, ladder_weight, optimize=True)
    crossed = np.einsum("op,nmop,mn->", A, D, crossed_weight, optimize=True)
    return float(2.0 * np.imag(ladder + crossed))


def first_order_prediction(
    config: FockConfiguration,
    site: int,
    t: float,
    strength: float,
    prop: Propagator,
    kernel: Optional[PerturbationKernel] = None,
) -> float:
    """<N_site(t, U)> to first order: free value plus U t <P(t)>."""
    L = config.n_modes
    if not 1 <= site <= L:
        raise DimensionMismatch(f"site {site} outside 1..{L}")
    row = prop.row(site, t)[0]
    free = float(np.abs(row) ** 2 @ config.mode_totals)
    obs = np.zeros((L, L))
    obs[site - 1, site - 1] = 1.0
    return free + strength * t * perturbation_term(config, obs, prop, t, kernel=kernel)


@dataclass(frozen=True)
class BipartiteCheck:
    """Result of the attractive/repulsive symmetry detection."""

    is_bipartite: bool
    signs: Optional[np.ndarray]
    residual: Optional[float]


def _two_coloring(J: np.ndarray) -> Optional[np.ndarray]:
    L = J.shape[0]
    if np.max(np.abs(np.diag(J))) > _SYM_TOL:
        return None
    adj = [np.flatnonzero(np.abs(J[i]) > _SYM_TOL) for i in range(L)]
    color = np.full(L, -1, dtype=np.int64)
    for start in range(L):
        if color[start] >= 0:
            continue
        color[start] = 0
        queue = [start]
        while queue:
            i = queue.pop()
            for j in adj[i]:
                if j == i:
                    continue
                if color[j] < 0:
                    color[j] = 1 - color[i]
                    queue.append(j)
                elif color[j] == color[i]:
                    return None
    return color


def bipartite_parity_check(
    hop: HoppingModel, basis: SectorBasis, strength: float = 1.0
) -> BipartiteCheck:
    """Detect the sublattice parity that maps H(U) to -H(-U).

    When the hopping graph is two-colorable with zero diagonal, the diagonal
    operator Pi with sign (-1)^(particles on the B sublattice) satisfies
    Pi H(U) Pi = -H(-U); the returned residual is the max-norm of
    Pi H(U) Pi + H(-U) for contact interactions of the given strength.
    """
    color = _two_coloring(np.asarray(hop.matrix))
    if color is None:
        return BipartiteCheck(is_bipartite=False, signs=None, residual=None)
    occupancy_b = basis.occupations[:, color == 1, :].sum(axis=(1, 2))
    signs = np.where(occupancy_b % 2 == 0, 1.0, -1.0)
    h_plus = build_hamiltonian(hop, contact_interaction(strength), basis).matrix
    h_minus = build_hamiltonian(hop, contact_interaction(-strength), basis).matrix
    pi = sparse.diags(signs.astype(complex), format="csr")
    residual_matrix = pi @ h_plus @ pi + h_minus
    residual = (
        float(np.max(np.abs(residual_matrix.data))) if residual_matrix.nnz else 0.0
    )
    signs = signs.astype(np.int64)
    signs.setflags(write=False)
    return BipartiteCheck(is_bipartite=True, signs=signs, residual=residual)
