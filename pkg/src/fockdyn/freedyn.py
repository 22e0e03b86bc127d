"""Non-interacting observables: two-particle expectation values, on-site
density variances, and the normalized time-averaged fluctuation.

For a species-blind two-particle observable with coefficients O[i,j,k,l]
(operator sum_{ijkl,s,r} O_ijkl adag_{i,s} adag_{j,r} a_{k,s} a_{l,r}), the
free-evolution expectation value in a Fock state splits into ladder paths,
weighted by N_m (N_n - delta_mn), and same-species crossed paths, weighted
by sum_s N[m,s] N[n,s].  The on-site density variance is the special case

    Var N_l(t) = sum_{m != n, s} |c_lm(t) c_ln(t)|^2 N[m,s] (N[n,s] + 1),

and its infinite-time average, rescaled between the fully distinguishable
and the single-species references, reproduces the DOI up to the spread of
the averaged coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateNormalization, DimensionMismatch, NonHermitianInput
from .fock import FockConfiguration, doi, multiplicity_tables
from .onebody import AveragedCoefficients, Propagator

OBS_HERMITICITY_TOL = 1e-12


class TwoParticleObservable:
    """Dense rank-4 coefficient array of a species-blind two-particle
    observable; Hermiticity (O_ijkl = conj(O_klij)) is enforced."""

    __slots__ = ("coefficients",)

    def __init__(self, coefficients: np.ndarray):
        coeff = np.asarray(coefficients, dtype=complex)
        if coeff.ndim != 4 or len(set(coeff.shape)) != 1:
            raise DimensionMismatch(f"expected an L^4 array, got shape {coeff.shape}")
        if np.max(np.abs(coeff - coeff.conj().transpose(2, 3, 0, 1))) > OBS_HERMITICITY_TOL:
            raise NonHermitianInput("observable coefficients are not Hermitian")
        coeff = coeff.copy()
        coeff.setflags(write=False)
        self.coefficients = coeff

    @property
    def n_modes(self) -> int:
        return self.coefficients.shape[0]


def coincidence_observable(n_modes: int, mode_a: int, mode_b: int) -> TwoParticleObservable:
    """N_a N_b for two distinct modes (1-based).  Because the modes differ,
    no normal-ordering correction arises: O_ijkl = delta_ia delta_jb
    delta_ka delta_lb."""
    if mode_a == mode_b:
        raise DimensionMismatch("coincidence observable needs two distinct modes")
    coeff = np.zeros((n_modes,) * 4)
    coeff[mode_a - 1, mode_b - 1, mode_a - 1, mode_b - 1] = 1.0
    return TwoParticleObservable(coeff)


def pair_counter(n_modes: int, mode: int) -> TwoParticleObservable:
    """N_l (N_l - 1): counts ordered particle pairs within one mode."""
    coeff = np.zeros((n_modes,) * 4)
    i = mode - 1
    coeff[i, i, i, i] = 1.0
    return TwoParticleObservable(coeff)


def onebody_square(matrix: np.ndarray) -> tuple[TwoParticleObservable, np.ndarray]:
    """Split the square of a species-blind one-particle observable into a
    two-particle part and a one-particle remainder.

    For O1 with Hermitian matrix A, normal ordering gives
    O1^2 = O2[A_ik A_jl] + O1[A @ A]; the returned pair is (O2, A @ A).
    """
    A = np.asarray(matrix, dtype=complex)
    coeff = np.einsum("ik,jl->ijkl", A, A)
    return TwoParticleObservable(coeff), A @ A


def expectation_1po(
    config: FockConfiguration, matrix: np.ndarray, prop: Propagator, t: float
) -> float:
    """Free-evolution expectation of a one-particle observable,
    sum_m (c^dag A c)_mm N_m."""
    A = np.asarray(matrix, dtype=complex)
    if A.shape != (config.n_modes, config.n_modes):
        raise DimensionMismatch("observable matrix does not match the mode count")
    c = prop.coefficients(t)
    weights = np.einsum("im,ij,jm->m", c.conj(), A, c, optimize=True)
    return float(np.real(weights @ config.mode_totals))


def expectation_2po(
    config: FockConfiguration,
    obs: TwoParticleObservable,
    prop: Propagator,
    t: float,
) -> float:
    """Free-evolution expectation of a two-particle observable as a sum over
    ladder and crossed two-particle paths."""
    L = config.n_modes
    if obs.n_modes != L or prop.n_modes != L:
        raise DimensionMismatch("configuration, observable and propagator disagree on L")
    c = prop.coefficients(t)
    O = obs.coefficients
    ladder_amp = np.einsum("ijkl,im,jn,km,ln->mn", O, c.conj(), c.conj(), c, c,
                           optimize=True)
    crossed_amp = np.einsum("ijkl,jm,in,km,ln->mn", O, c.conj(), c.conj(), c, c,
                            optimize=True)
    tables = multiplicity_tables(config)
    totals = config.mode_totals.astype(float)
    ladder_weight = np.outer(totals, totals) - np.diag(totals)
    crossed_weight = tables.crossed.astype(float)
    np.fill_diagonal(crossed_weight, 0.0)
    value = np.sum(ladder_amp * ladder_weight) + np.sum(crossed_amp * crossed_weight)
    return float(np.real(value))


def density_variance(config: FockConfiguration, prop: Propagator, site: int, t):
    """Variance of the total density of one mode (1-based site) under free
    evolution; accepts a scalar or an array of times."""
    L = config.n_modes
    if prop.n_modes != L:
        raise DimensionMismatch("configuration and propagator disagree on L")
    if not 1 <= site <= L:
        raise DimensionMismatch(f"site {site} outside 1..{L}")
    occ = config.occupations
    crossed = (occ @ occ.T).astype(float)
    weight = crossed + config.mode_totals.astype(float)[:, None]
    np.fill_diagonal(weight, 0.0)
    times = np.asarray(t, dtype=float)
    row = prop.row(site, np.atleast_1d(times))
    probs = np.abs(row) ** 2
    values = np.einsum("tm,tn,mn->t", probs, probs, weight, optimize=True)
    return float(values[0]) if times.ndim == 0 else values


@dataclass(frozen=True)
class FluctuationReport:
    """Time-averaged density fluctuation of one site, its distinguishable
    and single-species references, and the DOI comparison."""

    site: int
    delta_bar: float
    delta0: float
    delta1: float
    fluctuation: float
    doi: float
    bound_approx: float
    bound_rigorous: float


def fi_deviation_bounds(
    config: FockConfiguration, avg: AveragedCoefficients
) -> tuple[float, float]:
    """Bounds on |F - I| from the spread of the averaged coefficients.

    The first is the width estimate (W_C / mu_C) min(I, 1 - I) and holds for
    narrow distributions; the second, (max C - min C) / min C times the same
    factor, is a strict guarantee.
    """
    value = doi(config)
    margin = min(value, 1.0 - value)
    approx = avg.w_c / avg.mu_c * margin
    rigorous = (avg.max_offdiag - avg.min_offdiag) / avg.min_offdiag * margin
    return approx, rigorous


def normalized_fluctuation(
    config: FockConfiguration, avg: AveragedCoefficients
) -> FluctuationReport:
    """Normalized time-averaged density variance F of a configuration.

    F = sum_{m != n} Cbar_mn crossed_mn / sum_{m != n} Cbar_mn ladder_mn,
    identically (Delta_bar - Delta_0) / (Delta_1 - Delta_0) with the
    references evaluated in the crossed -> 0 and crossed -> ladder limits.
    """
    L = config.n_modes
    if avg.n_modes != L:
        raise DimensionMismatch("configuration and coefficient table disagree on L")
    value = doi(config)  # raises UndefinedDOI before any further work
    tables = multiplicity_tables(config)
    C = avg.table.copy()
    np.fill_diagonal(C, 0.0)
    ladder = tables.ladder.astype(float)
    crossed = tables.crossed.astype(float)
    totals = config.mode_totals.astype(float)
    delta0 = float(np.sum(C * totals[:, None]))
    ladder_sum = float(np.sum(C * ladder))
    crossed_sum = float(np.sum(C * crossed))
    if ladder_sum == 0.0:
        raise DegenerateNormalization("reference fluctuations coincide")
    fluct = crossed_sum / ladder_sum
    approx, rigorous = fi_deviation_bounds(config, avg)
    return FluctuationReport(
        site=avg.site,
        delta_bar=delta0 + crossed_sum,
        delta0=delta0,
        delta1=delta0 + ladder_sum,
        fluctuation=fluct,
        doi=value,
        bound_approx=approx,
        bound_rigorous=rigorous,
    )


def fluctuation_batch(occupations: np.ndarray, avg: AveragedCoefficients):
    """Vectorized (I, F) over a batch of occupation matrices (B, L, S).

    Every configuration must have at least two populated modes; callers
    filter undefined-DOI samples beforehand.
    """
    occ = np.asarray(occupations, dtype=float)
    totals = occ.sum(axis=2)
    crossed = np.einsum("bls,bms->blm", occ, occ, optimize=True)
    ladder = totals[:, :, None] * totals[:, None, :]
    L = occ.shape[1]
    off = ~np.eye(L, dtype=bool)
    crossed_sum = crossed[:, off].sum(axis=1)
    ladder_sum = ladder[:, off].sum(axis=1)
    C = avg.table.copy()
    np.fill_diagonal(C, 0.0)
    doi_values = crossed_sum / ladder_sum
    fluct = np.einsum("blm,lm->b", crossed, C) / np.einsum("blm,lm->b", ladder, C)
    return doi_values, fluct
