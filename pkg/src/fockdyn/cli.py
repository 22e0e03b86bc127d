"""Command-line interface.

Units are fixed globally: hbar = 1, energies in units of the hopping scale J,
times in units of 1/J.  Every subcommand writes its outputs atomically and
drops a JSON manifest (parameters, seed, version, output digests) next to
them, so a run can be replayed bit-identically from its recorded argv.

Exit codes: 0 success, 1 validation/usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from typing import Optional, Sequence

import numpy as np

from ._version import __version__
from .errors import NumericalError, UsageError, ValidationError
from .fock import FockConfiguration, doi
from .freedyn import normalized_fluctuation
from .harness import (
    FLOAT_FORMAT,
    Table,
    fi_scan,
    interaction_sweep,
    scenario_parameters,
    write_atomic,
)
from .manybody import (
    build_hamiltonian,
    contact_interaction,
    density_operator,
    diagonalize,
    evolve_observable,
)
from .onebody import (
    averaged_coefficients,
    coefficient_stats,
    fit_mu_c,
    fit_w_c,
    hardwall_chain,
    propagator,
)
from .fock import enumerate_sector

OUTPUT_DIR_ENV = "FOCKDYN_OUTPUT_DIR"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part != ""]


def _float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part != ""]


def _load_config(path: str) -> FockConfiguration:
    with open(path) as handle:
        return FockConfiguration.from_json(handle.read())


def _read_config_file(path: str) -> list[str]:
    """KEY=VALUE lines to a flag list; flags given on the command line win
    because they come later in the parsed argv."""
    flags: list[str] = []
    with open(path) as handle:
        for raw in handle:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"malformed config line {line!r}; expected KEY=VALUE")
            key, value = line.split("=", 1)
            flags.extend([f"--{key.strip().replace('_', '-')}", value.strip()])
    return flags


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="fockdyn",
        description=(
            "Indistinguishability measures and many-body dynamics of "
            "multi-species bosons (hbar = 1, energies in J, times in 1/J)."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, parents=[], add_help=True)
        p.add_argument(
            "--out-dir",
            default=None,
            help=f"output directory (default: ${OUTPUT_DIR_ENV} or '.')",
        )
        p.add_argument(
            "--config-file",
            default=None,
            help="KEY=VALUE file with defaults; command-line flags win",
        )
        return p

    p = add("doi", "degree of indistinguishability of a configuration")
    p.add_argument("--config", required=True, help="configuration JSON file")
    p.add_argument("--csv", action="store_true",
                   help="also write a (config-id, N, I) CSV row")

    p = add("fluct", "normalized time-averaged density fluctuation report")
    p.add_argument("--config", required=True, help="configuration JSON file")
    p.add_argument("--site", type=int, default=1,
                   help="mode whose density is monitored (1-based)")

    p = add("coeff-stats", "time-averaged coefficient statistics of the chain")
    p.add_argument("--L", type=_int_list, required=True,
                   help="comma-separated chain lengths")
    p.add_argument("--site", type=int, default=2,
                   help="reference mode (1-based)")

    p = add("fi-scan", "fluctuation-versus-DOI scan over uniform Fock samples")
    p.add_argument("--L", type=int, default=12, help="number of modes")
    p.add_argument("--N", type=int, default=24, help="total particle number")
    p.add_argument("--S", type=_int_list, default=[2, 3, 4],
                   help="comma-separated species counts")
    p.add_argument("--samples", type=int, default=100_000,
                   help="samples per species count")
    p.add_argument("--seed", type=int, default=0, help="RNG seed")
    p.add_argument("--site", type=int, default=1,
                   help="mode whose density fluctuation is evaluated (1-based)")
    p.add_argument("--bins", type=int, default=100, help="histogram bins per axis")

    p = add("evolve", "exact density evolution of one configuration")
    p.add_argument("--config", required=True, help="configuration JSON file")
    p.add_argument("--U", type=float, default=0.0,
                   help="contact interaction strength in units of J")
    p.add_argument("--tilt", type=_float_list, default=None,
                   help="comma-separated on-site energies in units of J")
    p.add_argument("--tmax", type=float, default=10.0,
                   help="final time in units of 1/J")
    p.add_argument("--steps", type=int, default=201, help="time grid points")
    p.add_argument("--site", type=int, default=1,
                   help="mode whose density is recorded (1-based)")

    p = add("sweep-u", "interaction sweeps over non-equivalent configurations")
    p.add_argument("--scenario", required=True,
                   choices=["fig3", "fig4a", "fig4b", "fig5a", "fig5b"],
                   help="named parameter set")
    p.add_argument("--N", type=int, default=None, help="total particle number")
    p.add_argument("--M", type=int, default=None,
                   help="mode population imbalance N1 - N2")
    p.add_argument("--tilt", type=float, default=None,
                   help="tilt on the second mode in units of J")
    p.add_argument("--u-grid", type=_float_list, default=None,
                   help="comma-separated interaction strengths in units of J")
    p.add_argument("--t-star", type=float, default=None,
                   help="sweep evaluation time in units of 1/J")
    p.add_argument("--site", type=int, default=None,
                   help="monitored mode (1-based)")
    p.add_argument("--seed", type=int, default=0, help="recorded seed")

    add("verify", "run the cross-route oracle checks")
    return parser


def _out_dir(args) -> str:
    return args.out_dir or os.environ.get(OUTPUT_DIR_ENV) or "."


def _write_manifest(out_dir: str, name: str, argv, parameters: dict,
                    outputs: dict[str, str], seed: int, elapsed: float) -> None:
    manifest = {
        "subcommand": name,
        "argv": list(argv),
        "parameters": parameters,
        "seed": seed,
        "version": __version__,
        "wall_clock_seconds": elapsed,
        "outputs": outputs,
    }
    write_atomic(
        os.path.join(out_dir, f"{name}_manifest.json"),
        json.dumps(manifest, indent=2, sort_keys=True) + "\n",
    )


def _write_table(out_dir: str, filename: str, table: Table) -> dict[str, str]:
    text = table.to_csv()
    write_atomic(os.path.join(out_dir, filename), text)
    return {filename: hashlib.sha256(text.encode()).hexdigest()}


def _cmd_doi(args, argv) -> int:
    config = _load_config(args.config)
    value = doi(config)
    print(FLOAT_FORMAT.format(value))
    if args.csv:
        out_dir = _out_dir(args)
        config_id = os.path.splitext(os.path.basename(args.config))[0]
        table = Table(header=("config", "N", "doi"),
                      rows=((config_id, config.total, float(value)),))
        outputs = _write_table(out_dir, "doi.csv", table)
        _write_manifest(out_dir, "doi", argv,
                        {"config": args.config}, outputs, 0, 0.0)
    return 0


def _cmd_fluct(args, argv) -> int:
    start = time.perf_counter()
    config = _load_config(args.config)
    prop = propagator(hardwall_chain(config.n_modes))
    avg = averaged_coefficients(prop, args.site)
    report = normalized_fluctuation(config, avg)
    payload = {
        "site": report.site,
        "doi": report.doi,
        "fluctuation": report.fluctuation,
        "delta_bar": report.delta_bar,
        "delta0": report.delta0,
        "delta1": report.delta1,
        "bound_approx": report.bound_approx,
        "bound_rigorous": report.bound_rigorous,
    }
    out_dir = _out_dir(args)
    json_text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    write_atomic(os.path.join(out_dir, "fluct.json"), json_text)
    table = Table(
        header=("doi", "fluctuation", "delta_bar", "delta0", "delta1",
                "bound_approx", "bound_rigorous"),
        rows=((report.doi, report.fluctuation, report.delta_bar, report.delta0,
               report.delta1, report.bound_approx, report.bound_rigorous),),
    )
    outputs = _write_table(out_dir, "fluct.csv", table)
    outputs["fluct.json"] = hashlib.sha256(json_text.encode()).hexdigest()
    _write_manifest(out_dir, "fluct", argv,
                    {"config": args.config, "site": args.site}, outputs, 0,
                    time.perf_counter() - start)
    print(f"I={report.doi:.12g} F={report.fluctuation:.12g}")
    return 0


def _cmd_coeff_stats(args, argv) -> int:
    start = time.perf_counter()
    rows = []
    for length in args.L:
        stats = coefficient_stats(length, args.site)
        rows.append(
            (length, args.site, stats.mu_c, stats.w_c, stats.ratio,
             fit_mu_c(length), fit_w_c(length))
        )
        print(
            f"L={length} site={args.site} mu_C={stats.mu_c:.6e} "
            f"W_C={stats.w_c:.6e} ratio={stats.ratio:.4f}"
        )
    table = Table(
        header=("L", "site", "mu_C", "W_C", "ratio", "fit_mu", "fit_W"),
        rows=tuple(rows),
    )
    out_dir = _out_dir(args)
    outputs = _write_table(out_dir, "coeff_stats.csv", table)
    _write_manifest(out_dir, "coeff-stats", argv,
                    {"L": args.L, "site": args.site}, outputs, 0,
                    time.perf_counter() - start)
    return 0


def _cmd_fi_scan(args, argv) -> int:
    start = time.perf_counter()
    result = fi_scan(args.L, args.N, args.S, args.samples, args.seed,
                     site=args.site, bins=args.bins)
    record = result.to_record(args.seed)
    out_dir = _out_dir(args)
    outputs = record.write(out_dir)
    _write_manifest(out_dir, "fi-scan", argv, record.parameters, outputs,
                    args.seed, time.perf_counter() - start)
    violations = result.rigorous_violations()
    print(
        f"samples={sum(s.doi.size for s in result.series.values())} "
        f"rigorous_violations={violations} "
        f"approx_fraction={result.approx_fraction():.4f}"
    )
    return 0


def _cmd_evolve(args, argv) -> int:
    start = time.perf_counter()
    config = _load_config(args.config)
    hop = hardwall_chain(config.n_modes, 1.0, args.tilt)
    basis = enumerate_sector(
        config.n_modes, tuple(int(v) for v in config.species_totals)
    )
    spec = diagonalize(
        build_hamiltonian(hop, contact_interaction(args.U), basis), config
    )
    obs = density_operator(basis, args.site)
    times = np.linspace(0.0, args.tmax, args.steps)
    first, second = evolve_observable(spec, obs, times)
    variance = second - first**2
    rows = tuple(
        (float(times[i]), float(first[i]), float(variance[i]))
        for i in range(times.size)
    )
    table = Table(header=("t", "n_mean", "n_var"), rows=rows)
    out_dir = _out_dir(args)
    outputs = _write_table(out_dir, "evolve.csv", table)
    _write_manifest(
        out_dir, "evolve", argv,
        {"config": args.config, "U": args.U, "tilt": args.tilt,
         "tmax": args.tmax, "steps": args.steps, "site": args.site},
        outputs, 0, time.perf_counter() - start,
    )
    print(f"wrote evolve.csv ({times.size} rows)")
    return 0


def _cmd_sweep_u(args, argv) -> int:
    start = time.perf_counter()
    overrides = {}
    if args.N is not None:
        overrides["total"] = args.N
    if args.M is not None:
        overrides["imbalance"] = args.M
    if args.tilt is not None:
        overrides["tilt"] = args.tilt
    if args.u_grid is not None:
        overrides["u_grid"] = tuple(args.u_grid)
    if args.t_star is not None:
        overrides["t_star"] = args.t_star
    if args.site is not None:
        overrides["site"] = args.site
    scenario = scenario_parameters(args.scenario, **overrides)
    record = interaction_sweep(scenario, seed=args.seed)
    out_dir = _out_dir(args)
    outputs = record.write(out_dir)
    _write_manifest(out_dir, "sweep-u", argv, record.parameters, outputs,
                    args.seed, time.perf_counter() - start)
    print(f"wrote {len(outputs)} tables for scenario {scenario.name}")
    return 0


def _cmd_verify(args, argv) -> int:
    from .checks import run_all

    results = run_all()
    for result in results:
        print(result.line())
    return 0 if all(r.passed for r in results) else 1


_COMMANDS = {
    "doi": _cmd_doi,
    "fluct": _cmd_fluct,
    "coeff-stats": _cmd_coeff_stats,
    "fi-scan": _cmd_fi_scan,
    "evolve": _cmd_evolve,
    "sweep-u": _cmd_sweep_u,
    "verify": _cmd_verify,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Dispatch a command line; returns the process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.subcommand is None:
            parser.parse_args(["--help"])
        if getattr(args, "config_file", None):
            prefix = _read_config_file(args.config_file)
            args = parser.parse_args([args.subcommand] + prefix + argv[1:])
        return _COMMANDS[args.subcommand](args, argv)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("run 'fockdyn --help' for usage", file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
