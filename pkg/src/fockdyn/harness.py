"""Experiment orchestration: seeded uniform Fock sampling, fluctuation-DOI
scans, and interacting double/triple-well sweeps.

Sampling draws occupation matrices uniformly over the stars-and-bars space
{N[l,s] >= 0, sum = N} by unranking a uniform integer, with one counter-based
RNG stream per sample index (keyed by seed and index) so the sequence is
reproducible and independent of evaluation order.  All experiment outputs are
plain tables written as headered CSV with 17-significant-digit e-notation;
identical parameters and seed reproduce them bit-identically.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from ._version import __version__
from .errors import DimensionMismatch, UsageError
from .fock import (
    FockConfiguration,
    _unrank_vector,
    _vectors_count,
    doi,
    enumerate_sector,
    nonequivalent_double_well,
    nonequivalent_species_splits,
)
from .freedyn import fluctuation_batch, normalized_fluctuation
from .manybody import (
    build_hamiltonian,
    contact_interaction,
    density_operator,
    diagonalize,
    evolve_observable,
    first_order_prediction,
    perturbation_kernel,
    time_avg_variance,
)
from .onebody import (
    AveragedCoefficients,
    averaged_coefficients,
    hardwall_chain,
    propagator,
)

FLOAT_FORMAT = "{:.16e}"


@dataclass(frozen=True)
class SampleSpec:
    """Parameters of a uniform Fock-state sample."""

    n_modes: int
    total: int
    n_species: int
    count: int
    seed: int

    def __post_init__(self):
        if self.count < 1:
            raise DimensionMismatch("sample count must be at least 1")
        if self.n_modes < 1 or self.n_species < 1 or self.total < 1:
            raise DimensionMismatch("need L >= 1, S >= 1, N >= 1")


def _draw_below(rng: np.random.Generator, bound: int) -> int:
    """Uniform integer in [0, bound) from raw generator bytes."""
    bits = bound.bit_length()
    nbytes = (bits + 7) // 8
    shift = 8 * nbytes - bits
    while True:
        value = int.from_bytes(rng.bytes(nbytes), "little") >> shift
        if value < bound:
            return value


def sample_occupations(
    spec: SampleSpec, reject_single_mode: bool = True
) -> tuple[np.ndarray, int]:
    """Uniform occupation matrices, shape (count, L, S), plus the number of
    rejected draws.

    With reject_single_mode (the default) configurations whose particles all
    sit in one mode, where the DOI is undefined, are redrawn within the same
    per-index stream; pass False to sample the raw stars-and-bars space.
    """
    L, S, N = spec.n_modes, spec.n_species, spec.total
    slots = L * S
    dim = _vectors_count(N, slots)
    out = np.empty((spec.count, L, S), dtype=np.int64)
    rejections = 0
    for index in range(spec.count):
        rng = np.random.default_rng([spec.seed, index])
        while True:
            rank = _draw_below(rng, dim)
            occ = np.asarray(_unrank_vector(rank, N, slots), dtype=np.int64).reshape(L, S)
            if reject_single_mode and np.count_nonzero(occ.sum(axis=1)) < 2:
                rejections += 1
                continue
            break
        out[index] = occ
    return out, rejections


def sample_configs(
    spec: SampleSpec, reject_single_mode: bool = True
) -> Iterator[FockConfiguration]:
    """Stream of validated configurations drawn per sample_occupations."""
    occ, _ = sample_occupations(spec, reject_single_mode=reject_single_mode)
    for matrix in occ:
        yield FockConfiguration(matrix)


# ---------------------------------------------------------------------------
# Tables and experiment records.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Table:
    header: tuple[str, ...]
    rows: tuple[tuple, ...]

    def to_csv(self) -> str:
        lines = [",".join(self.header)]
        for row in self.rows:
            cells = [
                FLOAT_FORMAT.format(x) if isinstance(x, float) else str(x)
                for x in row
            ]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def write_atomic(path: str, text: str) -> None:
    """Write text via a temporary file and rename, so readers never observe
    a partial file."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class ExperimentRecord:
    """Reproducible run output: parameters, seed, tables and provenance."""

    name: str
    parameters: dict
    seed: int
    tables: dict[str, Table]
    version: str = __version__
    wall_clock: float = 0.0

    def write(self, out_dir: str) -> dict[str, str]:
        """Write every table and a JSON manifest; returns path -> sha256."""
        os.makedirs(out_dir, exist_ok=True)
        digests: dict[str, str] = {}
        for table_name, table in sorted(self.tables.items()):
            text = table.to_csv()
            path = os.path.join(out_dir, f"{self.name}_{table_name}.csv")
            write_atomic(path, text)
            digests[os.path.basename(path)] = hashlib.sha256(
                text.encode()
            ).hexdigest()
        manifest = {
            "name": self.name,
            "parameters": self.parameters,
            "seed": self.seed,
            "version": self.version,
            "wall_clock_seconds": self.wall_clock,
            "outputs": digests,
        }
        write_atomic(
            os.path.join(out_dir, f"{self.name}_manifest.json"),
            json.dumps(manifest, indent=2, sort_keys=True) + "\n",
        )
        return digests


# ---------------------------------------------------------------------------
# Fluctuation-versus-DOI scan.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Histogram2D:
    """Density histogram over the (DOI, fluctuation) unit square with
    per-series marginal projections."""

    x_edges: np.ndarray
    y_edges: np.ndarray
    counts: np.ndarray
    marginals: dict[int, tuple[np.ndarray, np.ndarray]]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class FiScanSeries:
    n_species: int
    doi: np.ndarray
    fluctuation: np.ndarray
    approx_ok: np.ndarray
    rigorous_ok: np.ndarray
    rejections: int


@dataclass(frozen=True)
class FiScanResult:
    parameters: dict
    series: dict[int, FiScanSeries]
    histogram: Histogram2D
    coefficients: AveragedCoefficients

    def rigorous_violations(self) -> int:
        return int(sum(np.sum(~s.rigorous_ok) for s in self.series.values()))

    def approx_fraction(self) -> float:
        ok = sum(int(np.sum(s.approx_ok)) for s in self.series.values())
        n = sum(s.doi.size for s in self.series.values())
        return ok / n

    def to_record(self, seed: int) -> ExperimentRecord:
        tables: dict[str, Table] = {}
        for s, series in sorted(self.series.items()):
            rows = tuple(
                (i, float(series.doi[i]), float(series.fluctuation[i]),
                 int(series.approx_ok[i]), int(series.rigorous_ok[i]))
                for i in range(series.doi.size)
            )
            tables[f"samples_S{s}"] = Table(
                header=("sample", "doi", "fluctuation", "approx_ok", "rigorous_ok"),
                rows=rows,
            )
            marg_x, marg_y = self.histogram.marginals[s]
            edges = self.histogram.x_edges
            tables[f"marginals_S{s}"] = Table(
                header=("bin_lo", "bin_hi", "count_doi", "count_fluctuation"),
                rows=tuple(
                    (float(edges[b]), float(edges[b + 1]), int(marg_x[b]), int(marg_y[b]))
                    for b in range(marg_x.size)
                ),
            )
        hist_rows = []
        for ix in range(self.histogram.counts.shape[0]):
            for iy in range(self.histogram.counts.shape[1]):
                hist_rows.append(
                    (
                        float(self.histogram.x_edges[ix]),
                        float(self.histogram.x_edges[ix + 1]),
                        float(self.histogram.y_edges[iy]),
                        float(self.histogram.y_edges[iy + 1]),
                        int(self.histogram.counts[ix, iy]),
                    )
                )
        tables["histogram"] = Table(
            header=("doi_lo", "doi_hi", "fluct_lo", "fluct_hi", "count"),
            rows=tuple(hist_rows),
        )
        tables["bound_curves"] = self._bound_curves()
        return ExperimentRecord(
            name="fi_scan", parameters=self.parameters, seed=seed, tables=tables
        )

    def _bound_curves(self) -> Table:
        grid = np.linspace(0.0, 1.0, 201)
        ratio = self.coefficients.ratio
        spread = (
            self.coefficients.max_offdiag - self.coefficients.min_offdiag
        ) / self.coefficients.min_offdiag
        rows = []
        for value in grid:
            margin = min(value, 1.0 - value)
            rows.append(
                (
                    float(value),
                    float(value - ratio * margin),
                    float(value + ratio * margin),
                    float(value - spread * margin),
                    float(value + spread * margin),
                )
            )
        return Table(
            header=("doi", "approx_lo", "approx_hi", "rigorous_lo", "rigorous_hi"),
            rows=tuple(rows),
        )


def fi_scan(
    n_modes: int,
    total: int,
    species_list: Sequence[int],
    samples_per_species: int,
    seed: int,
    site: int = 1,
    bins: int = 100,
) -> FiScanResult:
    """(DOI, fluctuation) scatter for uniformly sampled Fock states, one
    series per species count, sharing a single coefficient table per site."""
    prop = propagator(hardwall_chain(n_modes))
    avg = averaged_coefficients(prop, site)
    series: dict[int, FiScanSeries] = {}
    all_doi: list[np.ndarray] = []
    all_fluct: list[np.ndarray] = []
    edges = np.linspace(0.0, 1.0, bins + 1)
    marginals: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for s in species_list:
        spec = SampleSpec(
            n_modes=n_modes, total=total, n_species=s,
            count=samples_per_species, seed=seed + s,
        )
        occ, rejections = sample_occupations(spec, reject_single_mode=True)
        doi_values, fluct = fluctuation_batch(occ, avg)
        deviation = np.abs(fluct - doi_values)
        margin = np.minimum(doi_values, 1.0 - doi_values)
        approx_ok = deviation <= avg.ratio * margin
        spread = (avg.max_offdiag - avg.min_offdiag) / avg.min_offdiag
        rigorous_ok = deviation <= spread * margin
        series[s] = FiScanSeries(
            n_species=s,
            doi=doi_values,
            fluctuation=fluct,
            approx_ok=approx_ok,
            rigorous_ok=rigorous_ok,
            rejections=rejections,
        )
        marginals[s] = (
            np.histogram(doi_values, bins=edges)[0],
            np.histogram(fluct, bins=edges)[0],
        )
        all_doi.append(doi_values)
        all_fluct.append(fluct)
    counts = np.histogram2d(
        np.concatenate(all_doi), np.concatenate(all_fluct), bins=(edges, edges)
    )[0].astype(np.int64)
    histogram = Histogram2D(
        x_edges=edges, y_edges=edges, counts=counts, marginals=marginals
    )
    parameters = {
        "L": n_modes,
        "N": total,
        "S_list": list(species_list),
        "samples_per_S": samples_per_species,
        "site": site,
        "bins": bins,
        "seed": seed,
        "rejections": {s: series[s].rejections for s in series},
    }
    return FiScanResult(
        parameters=parameters, series=series, histogram=histogram, coefficients=avg
    )


# ---------------------------------------------------------------------------
# Interacting sweeps reproducing the double/triple-well experiments.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    """Parameter set of one interacting sweep."""

    name: str
    n_modes: int
    total: int
    imbalance: Optional[int]  # L = 2 classes from (N, M)
    density: Optional[tuple[int, ...]]  # explicit density profile (L = 3)
    tilt: float
    u_series: tuple[float, ...]
    u_grid: tuple[float, ...]
    t_grid: tuple[float, ...]
    t_star: float
    site: int = 1
    first_order: bool = False


def _default_scenarios() -> dict[str, Scenario]:
    t_series = tuple(np.linspace(0.0, 10.0, 201))
    t_short = tuple(np.linspace(0.0, 2.0, 201))
    u_dense = tuple(np.linspace(0.0, 1.0, 21))
    u_wide = (0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0)
    return {
        "fig3": Scenario(
            name="fig3", n_modes=2, total=8, imbalance=0, density=None, tilt=0.0,
            u_series=(0.0, 0.3), u_grid=(0.0,) + u_wide, t_grid=t_series, t_star=1.0,
        ),
        "fig4a": Scenario(
            name="fig4a", n_modes=2, total=8, imbalance=4, density=None, tilt=4.0,
            u_series=(0.3,), u_grid=u_dense, t_grid=t_short, t_star=1.0,
            first_order=True,
        ),
        "fig4b": Scenario(
            name="fig4b", n_modes=2, total=8, imbalance=0, density=None, tilt=3.0,
            u_series=(0.3,), u_grid=u_dense, t_grid=t_short, t_star=1.0,
            first_order=True,
        ),
        "fig5a": Scenario(
            name="fig5a", n_modes=2, total=8, imbalance=0, density=None, tilt=0.0,
            u_series=(), u_grid=(0.0,) + u_wide, t_grid=t_series, t_star=1.0,
        ),
        "fig5b": Scenario(
            name="fig5b", n_modes=3, total=9, imbalance=None, density=(3, 3, 3),
            tilt=0.0, u_series=(), u_grid=(0.0,) + u_wide, t_grid=t_series,
            t_star=1.0,
        ),
    }


def scenario_parameters(name: str, **overrides) -> Scenario:
    """Named scenario with keyword overrides (N, M, tilt, grids, site)."""
    defaults = _default_scenarios()
    if name not in defaults:
        raise UsageError(
            f"unknown scenario {name!r}; choose from {sorted(defaults)}"
        )
    base = defaults[name]
    fields = {key: getattr(base, key) for key in base.__dataclass_fields__}
    for key, value in overrides.items():
        if key not in fields:
            raise UsageError(f"unknown scenario parameter {key!r}")
        if value is not None:
            fields[key] = value
    return Scenario(**fields)


def _scenario_classes(scenario: Scenario) -> list[tuple[str, FockConfiguration, float]]:
    """(label, configuration, DOI) for every non-equivalent class."""
    if scenario.density is not None:
        configs = nonequivalent_species_splits(scenario.density, n_species=2)
        out = []
        for config in configs:
            label = "up=" + "-".join(str(int(v)) for v in config.occupations[:, 0])
            out.append((label, config, doi(config)))
        return out
    classes = nonequivalent_double_well(scenario.total, scenario.imbalance)
    return [
        (cls.label, cls.config, cls.doi)
        for cls in classes
        if cls.doi is not None
    ]


def _tilt_vector(scenario: Scenario) -> Optional[np.ndarray]:
    if scenario.tilt == 0.0:
        return None
    # tilt F N_2 on the second mode of the double well
    tilt = np.zeros(scenario.n_modes)
    tilt[1] = scenario.tilt
    return tilt


def interaction_sweep(scenario, seed: int = 0, **overrides) -> ExperimentRecord:
    """Time series and interaction sweeps of the on-site density for every
    non-equivalent configuration of a scenario.

    Produces a "timeseries" table (one block per interaction strength in
    u_series) and a "usweep" table of the density at t_star together with
    the infinite-time average of its variance; the U = 0 rows of the sweep
    use the exact non-interacting formulas.
    """
    if isinstance(scenario, str):
        scenario = scenario_parameters(scenario, **overrides)
    elif overrides:
        raise UsageError("overrides require a scenario name")
    start = time.perf_counter()
    hop = hardwall_chain(scenario.n_modes, 1.0, _tilt_vector(scenario))
    prop = propagator(hop)
    classes = _scenario_classes(scenario)
    site = scenario.site
    times = np.asarray(scenario.t_grid)
    kernels = {}
    if scenario.first_order:
        kernels = {
            float(t): perturbation_kernel(prop, float(t))
            for t in np.concatenate((times, [scenario.t_star]))
        }

    bases: dict[tuple[int, ...], object] = {}

    def basis_for(config: FockConfiguration):
        key = tuple(int(v) for v in config.species_totals)
        if key not in bases:
            bases[key] = enumerate_sector(scenario.n_modes, key)
        return bases[key]

    spectra: dict[tuple, object] = {}

    def spectrum_for(config: FockConfiguration, strength: float):
        basis = basis_for(config)
        key = (tuple(int(v) for v in config.species_totals), strength)
        if key not in spectra:
            hamiltonian = build_hamiltonian(
                hop, contact_interaction(strength), basis
            )
            spectra[key] = diagonalize(hamiltonian, energy_scale=1.0)
        return spectra[key].bind(config)

    ts_header = ["U", "config", "doi", "t", "n_mean", "n_var"]
    if scenario.first_order:
        ts_header.append("n_pred")
    ts_rows = []
    for strength in scenario.u_series:
        for label, config, doi_value in classes:
            spec = spectrum_for(config, strength)
            obs = density_operator(basis_for(config), site)
            first, second = evolve_observable(spec, obs, times)
            variance = second - first**2
            for i, t in enumerate(times):
                row = [
                    float(strength), label, float(doi_value), float(t),
                    float(first[i]), float(variance[i]),
                ]
                if scenario.first_order:
                    row.append(
                        first_order_prediction(
                            config, site, float(t), float(strength), prop,
                            kernel=kernels[float(t)],
                        )
                    )
                ts_rows.append(tuple(row))

    us_header = ["U", "config", "doi", "n_at_tstar", "timeavg_var"]
    if scenario.first_order:
        us_header.append("n_pred_at_tstar")
    us_rows = []
    avg = averaged_coefficients(prop, site)
    for strength in scenario.u_grid:
        for label, config, doi_value in classes:
            if strength == 0.0:
                row_t = prop.row(site, scenario.t_star)[0]
                n_star = float(np.abs(row_t) ** 2 @ config.mode_totals)
                tavg = normalized_fluctuation(config, avg).delta_bar
            else:
                spec = spectrum_for(config, strength)
                obs = density_operator(basis_for(config), site)
                first, second = evolve_observable(spec, obs, [scenario.t_star])
                n_star = float(first[0])
                tavg = time_avg_variance(spec, obs)
            row = [float(strength), label, float(doi_value), n_star, float(tavg)]
            if scenario.first_order:
                row.append(
                    first_order_prediction(
                        config, site, scenario.t_star, float(strength), prop,
                        kernel=kernels.get(float(scenario.t_star)),
                    )
                )
            us_rows.append(tuple(row))

    record = ExperimentRecord(
        name=scenario.name,
        parameters={
            "L": scenario.n_modes,
            "N": scenario.total,
            "M": scenario.imbalance,
            "density": list(scenario.density) if scenario.density else None,
            "tilt": scenario.tilt,
            "u_series": list(scenario.u_series),
            "u_grid": list(scenario.u_grid),
            "t_star": scenario.t_star,
            "site": site,
            "classes": [label for label, _, _ in classes],
        },
        seed=seed,
        tables={
            "timeseries": Table(header=tuple(ts_header), rows=tuple(ts_rows)),
            "usweep": Table(header=tuple(us_header), rows=tuple(us_rows)),
        },
    )
    record.wall_clock = time.perf_counter() - start
    return record
