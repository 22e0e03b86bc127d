"""Fock states of multi-species bosons and their degree of indistinguishability.

A configuration is an L x S matrix of occupation numbers N[l, s]: bosons of
species s sitting in mode l.  The degree of indistinguishability (DOI) weighs
same-species crossed two-particle paths against all ladder paths,

    I = sum_s sum_{m != n} N[m,s] N[n,s]  /  sum_{m != n} N_m N_n,

with N_m the total population of mode m.  I = 1 iff a single species occupies
at least two modes; I is undefined (0/0) when one mode holds all particles.

The module also provides the fixed-(N_s) sector basis used for many-body
matrices, with deterministic rank/unrank, and the enumeration of
non-equivalent two-mode configurations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DimensionOverflow,
    EmptyConfiguration,
    InconsistentDensities,
    InvalidImbalance,
    NegativeOccupation,
    NormalizationError,
    UndefinedDOI,
)

DEFAULT_SECTOR_CAP = 200_000


class FockConfiguration:
    """Immutable occupation matrix with cached mode/species totals."""

    __slots__ = ("occupations", "mode_totals", "species_totals", "total")

    def __init__(self, occupations: np.ndarray):
        occ = np.asarray(occupations, dtype=np.int64)
        if occ.ndim != 2:
            raise DimensionMismatch(f"occupations must be 2-D, got shape {occ.shape}")
        if np.any(occ < 0):
            raise NegativeOccupation(f"negative occupation in {occ.tolist()}")
        if occ.sum() == 0:
            raise EmptyConfiguration("configuration holds no particles")
        occ = occ.copy()
        occ.setflags(write=False)
        self.occupations = occ
        self.mode_totals = occ.sum(axis=1)
        self.mode_totals.setflags(write=False)
        self.species_totals = occ.sum(axis=0)
        self.species_totals.setflags(write=False)
        self.total = int(occ.sum())

    @property
    def n_modes(self) -> int:
        return self.occupations.shape[0]

    @property
    def n_species(self) -> int:
        return self.occupations.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, FockConfiguration):
            return NotImplemented
        return self.occupations.shape == other.occupations.shape and bool(
            np.array_equal(self.occupations, other.occupations)
        )

    def __hash__(self) -> int:
        return hash((self.occupations.shape, self.occupations.tobytes()))

    def __repr__(self) -> str:
        return f"FockConfiguration({self.occupations.tolist()})"

    def to_json(self) -> str:
        return json.dumps(
            {
                "L": self.n_modes,
                "S": self.n_species,
                "occupations": self.occupations.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "FockConfiguration":
        data = json.loads(text)
        occ = np.asarray(data["occupations"], dtype=np.int64)
        if occ.shape != (data["L"], data["S"]):
            raise DimensionMismatch(
                f"occupations shape {occ.shape} does not match L={data['L']}, S={data['S']}"
            )
        return make_config(occ)


def make_config(occupations) -> FockConfiguration:
    """Validate an L x S occupation matrix and cache its totals."""
    return FockConfiguration(occupations)


@dataclass(frozen=True)
class MultiplicityTables:
    """Two-particle path multiplicities of a configuration.

    ladder[m, n]  = N_m N_n          (paths common to every configuration
                                      with the same density distribution)
    crossed[m, n] = sum_s N[m,s] N[n,s]   (same-species exchange paths)

    Diagonals are present; consumers restrict sums to m != n.
    """

    ladder: np.ndarray
    crossed: np.ndarray

    def offdiag_sums(self) -> tuple[int, int]:
        lad = int(self.ladder.sum() - np.trace(self.ladder))
        cro = int(self.crossed.sum() - np.trace(self.crossed))
        return lad, cro


def multiplicity_tables(config: FockConfiguration) -> MultiplicityTables:
    """Ladder and crossed multiplicity matrices of a configuration."""
    occ = config.occupations
    totals = config.mode_totals
    ladder = np.outer(totals, totals)
    crossed = occ @ occ.T
    ladder.setflags(write=False)
    crossed.setflags(write=False)
    return MultiplicityTables(ladder=ladder, crossed=crossed)


def doi(config: FockConfiguration) -> float:
    """Degree of indistinguishability of a Fock configuration.

    Raises UndefinedDOI when all particles sit in a single mode, where the
    defining ratio is 0/0.
    """
    totals = config.mode_totals
    denom = int(totals.sum()) ** 2 - int(np.dot(totals, totals))
    if denom == 0:
        raise UndefinedDOI("all particles occupy a single mode")
    occ = config.occupations
    gram = occ @ occ.T
    numer = int(gram.sum() - np.trace(gram))
    return numer / denom


@dataclass(frozen=True)
class TwoModeParams:
    """Two-mode, two-species configuration in imbalance coordinates.

    N is the total particle number, M = N_1 - N_2 the mode population
    imbalance and delta_l = N[l, up] - N[l, down] the species imbalance of
    mode l.
    """

    N: int
    M: int
    delta1: int
    delta2: int

    def __post_init__(self):
        if abs(self.M) > self.N or (self.N - self.M) % 2:
            raise InvalidImbalance(f"M={self.M} incompatible with N={self.N}")
        n1 = (self.N + self.M) // 2
        n2 = (self.N - self.M) // 2
        for delta, nl, name in ((self.delta1, n1, "delta1"), (self.delta2, n2, "delta2")):
            if abs(delta) > nl or (delta - nl) % 2:
                raise InvalidImbalance(f"{name}={delta} incompatible with N_l={nl}")

    def to_config(self) -> FockConfiguration:
        n1 = (self.N + self.M) // 2
        n2 = (self.N - self.M) // 2
        occ = [
            [(n1 + self.delta1) // 2, (n1 - self.delta1) // 2],
            [(n2 + self.delta2) // 2, (n2 - self.delta2) // 2],
        ]
        return make_config(occ)


def two_mode_params(config: FockConfiguration) -> TwoModeParams:
    """Extract (N, M, delta1, delta2) from an L=2, S=2 configuration."""
    if config.n_modes != 2 or config.n_species != 2:
        raise DimensionMismatch("two-mode parameters require L=2 and S=2")
    occ = config.occupations
    return TwoModeParams(
        N=config.total,
        M=int(config.mode_totals[0] - config.mode_totals[1]),
        delta1=int(occ[0, 0] - occ[0, 1]),
        delta2=int(occ[1, 0] - occ[1, 1]),
    )


def two_mode_doi(params: TwoModeParams) -> float:
    """Closed-form DOI of a two-mode, two-species configuration:
    1/2 + 2*delta1*delta2 / (N^2 - M^2)."""
    denom = params.N**2 - params.M**2
    if denom == 0:
        raise UndefinedDOI("one of the two modes is empty")
    return 0.5 + 2.0 * params.delta1 * params.delta2 / denom


class SuperposedFock:
    """Normalized superposition of Fock configurations sharing one density
    profile; species contents may differ between terms."""

    __slots__ = ("terms",)

    def __init__(self, terms: Sequence[tuple[complex, FockConfiguration]]):
        terms = [(complex(w), cfg) for w, cfg in terms]
        if not terms:
            raise EmptyConfiguration("superposition has no terms")
        norm = sum(abs(w) ** 2 for w, _ in terms)
        if abs(norm - 1.0) > 1e-12:
            raise NormalizationError(f"weights square-sum to {norm!r}, expected 1")
        ref = terms[0][1].mode_totals
        for _, cfg in terms[1:]:
            if cfg.mode_totals.shape != ref.shape or not np.array_equal(
                cfg.mode_totals, ref
            ):
                raise InconsistentDensities(
                    "superposition terms differ in their total density distribution"
                )
        self.terms = tuple(terms)


def doi_superposition(state: SuperposedFock) -> float:
    """Additive DOI of a superposition: sum_j |c_j|^2 I_j."""
    return sum(abs(w) ** 2 * doi(cfg) for w, cfg in state.terms)


# ---------------------------------------------------------------------------
# Sector basis: all configurations with fixed per-species particle numbers.
# ---------------------------------------------------------------------------


def _vectors_count(n: int, length: int) -> int:
    """Number of occupation vectors of given length summing to n."""
    return math.comb(n + length - 1, length - 1)


def _rank_vector(vec: Sequence[int], n: int) -> int:
    """Rank of an occupation vector among all vectors with the same length
    and total, in ascending lexicographic order."""
    rank = 0
    remaining = n
    length = len(vec)
    for pos in range(length - 1):
        k = length - pos - 1
        c = int(vec[pos])
        # vectors with a smaller entry at this position (hockey-stick sum)
        rank += math.comb(remaining + k, k) - math.comb(remaining - c + k, k)
        remaining -= c
    return rank


def _unrank_vector(rank: int, n: int, length: int) -> list[int]:
    """Inverse of _rank_vector."""
    vec = [0] * length
    remaining = n
    for pos in range(length - 1):
        k = length - pos - 1
        c = 0
        while True:
            below = _vectors_count(remaining - c, k)
            if rank < below:
                break
            rank -= below
            c += 1
        vec[pos] = c
        remaining -= c
    vec[length - 1] = remaining
    return vec


class SectorBasis:
    """Deterministic enumeration of all configurations with fixed species
    particle numbers.

    Per species, occupation vectors are ordered lexicographically ascending;
    species are combined as mixed-radix digits with species 0 most
    significant.  rank/unrank are exact inverses for every member.
    """

    __slots__ = ("n_modes", "species_counts", "dimension", "occupations", "_dims")

    def __init__(self, n_modes: int, species_counts: Sequence[int], cap: int = DEFAULT_SECTOR_CAP):
        if n_modes < 1:
            raise DimensionMismatch("need at least one mode")
        counts = [int(c) for c in species_counts]
        if any(c < 0 for c in counts) or sum(counts) < 1:
            raise EmptyConfiguration("species counts must be non-negative with positive sum")
        self.n_modes = int(n_modes)
        self.species_counts = tuple(counts)
        self._dims = [_vectors_count(c, n_modes) for c in counts]
        dim = math.prod(self._dims)
        if dim > cap:
            raise DimensionOverflow(
                f"sector dimension {dim} exceeds cap {cap}; dense methods unavailable"
            )
        self.dimension = dim
        per_species = [
            np.array([_unrank_vector(i, c, n_modes) for i in range(d)], dtype=np.int64)
            for c, d in zip(counts, self._dims)
        ]
        digits = np.unravel_index(np.arange(dim), self._dims)
        occ = np.stack(
            [per_species[s][digits[s]] for s in range(len(counts))], axis=2
        )
        occ.setflags(write=False)
        self.occupations = occ  # shape (dimension, L, S)

    @property
    def n_species(self) -> int:
        return len(self.species_counts)

    def state(self, index: int) -> FockConfiguration:
        return FockConfiguration(self.occupations[index])

    def rank(self, occupations) -> int:
        """Ordinal of a configuration (matrix or FockConfiguration) in this sector."""
        if isinstance(occupations, FockConfiguration):
            occupations = occupations.occupations
        occ = np.asarray(occupations, dtype=np.int64)
        if occ.shape != (self.n_modes, self.n_species):
            raise DimensionMismatch(
                f"occupation shape {occ.shape} does not match sector "
                f"({self.n_modes}, {self.n_species})"
            )
        if not np.array_equal(occ.sum(axis=0), self.species_counts):
            raise DimensionMismatch("species totals do not match this sector")
        index = 0
        for s, (count, d) in enumerate(zip(self.species_counts, self._dims)):
            index = index * d + _rank_vector(occ[:, s], count)
        return index

    def __len__(self) -> int:
        return self.dimension

    def __iter__(self) -> Iterator[FockConfiguration]:
        for i in range(self.dimension):
            yield self.state(i)

    def same_sector(self, other: "SectorBasis") -> bool:
        return (
            self.n_modes == other.n_modes
            and self.species_counts == other.species_counts
        )


def sector_dimension(n_modes: int, species_counts: Sequence[int]) -> int:
    """prod_s C(N_s + L - 1, L - 1) without materializing the basis."""
    return math.prod(_vectors_count(int(c), n_modes) for c in species_counts)


def enumerate_sector(
    n_modes: int, species_counts: Sequence[int], cap: int = DEFAULT_SECTOR_CAP
) -> SectorBasis:
    """Build the full basis of the fixed-(N_s) sector."""
    return SectorBasis(n_modes, species_counts, cap=cap)


# ---------------------------------------------------------------------------
# Non-equivalent configuration classes.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DoubleWellClass:
    """Representative of a class of equivalent two-mode configurations."""

    config: FockConfiguration
    delta1: int
    delta2: int
    doi: Optional[float]

    @property
    def label(self) -> str:
        return f"d1={self.delta1:+d},d2={self.delta2:+d}"


def nonequivalent_double_well(N: int, M: int) -> list[DoubleWellClass]:
    """One representative per non-equivalent two-species double-well class.

    Classes are orbits of (delta1, delta2) under species relabeling
    (delta -> -delta) and, when the density is balanced (M = 0), mode
    exchange (delta1 <-> delta2).  Representatives are the orbit maxima,
    which for M = 0 gives the familiar chart delta1 in [0, N/2],
    |delta2| <= delta1.  The DOI entry is None when one mode is empty.
    """
    if N < 1 or abs(M) > N or (N - M) % 2:
        raise InvalidImbalance(f"no double-well sector with N={N}, M={M}")
    n1 = (N + M) // 2
    n2 = (N - M) // 2
    balanced = n1 == n2
    seen: set[tuple[int, int]] = set()
    classes: list[DoubleWellClass] = []
    for d1 in range(-n1, n1 + 1, 2):
        for d2 in range(-n2, n2 + 1, 2):
            orbit = {(d1, d2), (-d1, -d2)}
            if balanced:
                orbit |= {(d2, d1), (-d2, -d1)}
            rep = max(orbit)
            if rep in seen:
                continue
            seen.add(rep)
            params = TwoModeParams(N=N, M=M, delta1=rep[0], delta2=rep[1])
            config = params.to_config()
            try:
                value: Optional[float] = two_mode_doi(params)
            except UndefinedDOI:
                value = None
            classes.append(
                DoubleWellClass(config=config, delta1=rep[0], delta2=rep[1], doi=value)
            )
    classes.sort(key=lambda c: (c.delta1, c.delta2))
    return classes


def canonical_species_order(config: FockConfiguration) -> FockConfiguration:
    """Representative of a configuration under species relabeling: columns
    sorted descending by (species total, occupation vector)."""
    occ = config.occupations
    order = sorted(
        range(config.n_species),
        key=lambda s: (int(config.species_totals[s]), tuple(occ[:, s])),
        reverse=True,
    )
    return FockConfiguration(occ[:, order])


def nonequivalent_species_splits(
    mode_totals: Sequence[int], n_species: int = 2
) -> list[FockConfiguration]:
    """All ways to assign species to a fixed density profile, one
    representative per species-relabeling class, deterministically ordered."""
    totals = [int(n) for n in mode_totals]
    if any(n < 0 for n in totals) or sum(totals) < 1:
        raise EmptyConfiguration("mode totals must be non-negative with positive sum")
    splits_per_mode = [
        [np.array(_unrank_vector(i, n, n_species), dtype=np.int64)
         for i in range(_vectors_count(n, n_species))]
        for n in totals
    ]
    reps: dict[bytes, FockConfiguration] = {}

    # depth-first assembly of per-mode species splits
    def walk(prefix: list[np.ndarray]):
        if len(prefix) == len(totals):
            config = canonical_species_order(FockConfiguration(np.vstack(prefix)))
            reps.setdefault(config.occupations.tobytes(), config)
            return
        for split in splits_per_mode[len(prefix)]:
            walk(prefix + [split[None, :]])

    walk([])
    return [reps[key] for key in sorted(reps)]
