"""Config parsing, CSV emission and the command-line interface.

Config files are plain ``key = value`` lines; ``#`` starts a comment.  A run
is specified either by a ``preset`` (AA, AN, NA, NN) or by explicit model
parameters; the two spellings are mutually exclusive except for ``chi``,
which may override a preset's drive strength.  Unset keys take the
documented defaults (detunings 1, couplings/decays/baths 0, initial
occupations 1, t_max 10, samples 1001, abs_tol 1e-10, rel_tol 1e-9,
threshold 1e-4).

All CSV output is UTF-8 with a header row, 17 significant digits and a
deterministic byte stream for identical inputs; complex moments are split
into ``re_<name>`` / ``im_<name>`` column pairs.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .dynamics import IntegrationError, NoSteadyStateError, Trajectory
from .model import (
    MOMENT_NAMES,
    Moment,
    Scenario,
    SystemParams,
    initial_state,
    preset_params,
    validate_params,
)
from .oracle import ClosureReport, FockBasisSpec, PositivityError, closure_report
from .runner import SignMatrix, SweepSurface, WitnessSeries, chi_sweep, run_scenario, table_matrix
from .witnesses import InternalConsistencyError, WitnessRecord

__all__ = ["ConfigError", "parse_config", "format_config", "emit_csv", "main"]

_PARAM_KEYS = (
    "delta_a", "delta_b", "delta_c", "g_a", "g_b", "chi",
    "gamma_a", "gamma_b", "gamma_c", "n_a", "n_b", "n_c",
)
_RUN_KEYS = ("init_na", "init_nb", "init_nc", "t_max", "samples",
             "abs_tol", "rel_tol", "threshold")
_ALL_KEYS = ("preset",) + _PARAM_KEYS + _RUN_KEYS

_RUN_DEFAULTS = {
    "init_na": 1.0, "init_nb": 1.0, "init_nc": 1.0,
    "t_max": 10.0, "samples": 1001,
    "abs_tol": 1e-10, "rel_tol": 1e-9, "threshold": 1e-4,
}


class ConfigError(ValueError):
    """Config file problem; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


def _parse_lines(text: str):
    """Yield (line_number, key, raw_value) for every assignment line."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        yield lineno, key, value


def parse_config(text: str) -> Scenario:
    """Resolve a config file into a fully specified scenario."""
    seen: dict[str, tuple[int, str]] = {}
    for lineno, key, value in _parse_lines(text):
        if key not in _ALL_KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} (first set on line {seen[key][0]})", lineno)
        seen[key] = (lineno, value)

    if "preset" in seen:
        for key in _PARAM_KEYS:
            if key != "chi" and key in seen:
                raise ConfigError(
                    f"explicit {key!r} conflicts with 'preset'", seen[key][0]
                )

    def number(key: str, default: float) -> float:
        if key not in seen:
            return default
        lineno, value = seen[key]
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"malformed number {value!r} for {key!r}", lineno) from None

    def integer(key: str, default: int) -> int:
        if key not in seen:
            return default
        lineno, value = seen[key]
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"malformed integer {value!r} for {key!r}", lineno) from None

    if "preset" in seen:
        lineno, label = seen["preset"]
        try:
            params = preset_params(label, number("chi", 0.0))
        except ValueError as exc:
            raise ConfigError(str(exc), lineno) from None
    else:
        params = SystemParams(
            delta_a=number("delta_a", 1.0),
            delta_b=number("delta_b", 1.0),
            delta_c=number("delta_c", 1.0),
            g_a=number("g_a", 0.0),
            g_b=number("g_b", 0.0),
            chi=number("chi", 0.0),
            gamma_a=number("gamma_a", 0.0),
            gamma_b=number("gamma_b", 0.0),
            gamma_c=number("gamma_c", 0.0),
            n_a=number("n_a", 0.0),
            n_b=number("n_b", 0.0),
            n_c=number("n_c", 0.0),
        )
    problems = validate_params(params)
    if problems:
        raise ConfigError("; ".join(problems))

    try:
        return Scenario(
            params=params,
            initial=initial_state(
                number("init_na", _RUN_DEFAULTS["init_na"]),
                number("init_nb", _RUN_DEFAULTS["init_nb"]),
                number("init_nc", _RUN_DEFAULTS["init_nc"]),
            ),
            t_max=number("t_max", _RUN_DEFAULTS["t_max"]),
            sample_count=integer("samples", _RUN_DEFAULTS["samples"]),
            abs_tol=number("abs_tol", _RUN_DEFAULTS["abs_tol"]),
            rel_tol=number("rel_tol", _RUN_DEFAULTS["rel_tol"]),
            threshold=number("threshold", _RUN_DEFAULTS["threshold"]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def format_config(scenario: Scenario) -> str:
    """Echo a scenario as explicit-parameter config text (parse round trips)."""
    p = scenario.params
    init = scenario.initial.values
    occ = [init[s].real for s in (Moment.AdA, Moment.BdB, Moment.CdC)]
    rest = init.copy()
    for s in (Moment.AdA, Moment.BdB, Moment.CdC):
        rest[s] = 0.0
    if np.abs(rest).max() > 0:
        raise ValueError("only occupation-only initial states can be echoed")
    lines = [f"{key} = {_fmt(getattr(p, key))}" for key in _PARAM_KEYS]
    lines += [
        f"init_na = {_fmt(occ[0])}",
        f"init_nb = {_fmt(occ[1])}",
        f"init_nc = {_fmt(occ[2])}",
        f"t_max = {_fmt(scenario.t_max)}",
        f"samples = {scenario.sample_count}",
        f"abs_tol = {_fmt(scenario.abs_tol)}",
        f"rel_tol = {_fmt(scenario.rel_tol)}",
        f"threshold = {_fmt(scenario.threshold)}",
    ]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _write_rows(dest, header: list[str], rows) -> None:
    def dump(fh):
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")

    if hasattr(dest, "write"):
        dump(dest)
    else:
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            dump(fh)


def write_trajectory(traj: Trajectory, dest) -> None:
    header = ["tau"]
    for name in MOMENT_NAMES:
        header += [f"re_{name}", f"im_{name}"]
    rows = (
        [_fmt(tau)]
        + [part for z in state for part in (_fmt(z.real), _fmt(z.imag))]
        for tau, state in zip(traj.taus, traj.states)
    )
    _write_rows(dest, header, rows)


def write_witness_series(series: WitnessSeries, dest, columns: list[str] | None = None) -> None:
    names = series.column_names()
    if columns is not None:
        unknown = sorted(set(columns) - set(names))
        if unknown:
            raise KeyError(f"unknown witness column(s): {', '.join(unknown)}")
        names = [n for n in series.column_names() if n in set(columns)]
    picked = [series.column(n) for n in names]
    rows = (
        [_fmt(tau)] + [_fmt(col[i]) for col in picked]
        for i, tau in enumerate(series.taus)
    )
    _write_rows(dest, ["tau"] + names, rows)


def write_sign_matrix(matrix: SignMatrix, dest) -> None:
    header = ["config", "chi", "witness", "cell", "min_value", "argmin_tau"]
    rows = (
        [
            c.config,
            _fmt(c.chi),
            f"{c.row}_{c.cell.replace('|', '_')}",
            "tick" if c.tick else "cross",
            _fmt(c.min_value),
            _fmt(c.argmin_tau),
        ]
        for c in matrix.cells
    )
    _write_rows(dest, header, rows)


def write_sweep(surface: SweepSurface, dest) -> None:
    header = ["chi", "tau", surface.witness, "status"]
    rows = (
        [_fmt(chi), _fmt(tau), _fmt(surface.values[i, j]), surface.status[i]]
        for i, chi in enumerate(surface.chis)
        for j, tau in enumerate(surface.taus)
    )
    _write_rows(dest, header, rows)


def write_closure_report(report: ClosureReport, dest) -> None:
    header = ["tau"]
    for name in report.correlator_names:
        header += [
            f"re_{name}_exact", f"im_{name}_exact",
            f"re_{name}_closed", f"im_{name}_closed",
        ]
    wnames = WitnessRecord.column_names()
    for name in wnames:
        header += [f"{name}_exact", f"{name}_closed"]

    def rows():
        for i, tau in enumerate(report.taus):
            row = [_fmt(tau)]
            for name in report.correlator_names:
                e, c = report.exact[name][i], report.closed[name][i]
                row += [_fmt(e.real), _fmt(e.imag), _fmt(c.real), _fmt(c.imag)]
            ve = report.witness_exact[i].column_values()
            vc = report.witness_closed[i].column_values()
            for j in range(len(wnames)):
                row += [_fmt(ve[j]), _fmt(vc[j])]
            yield row

    _write_rows(dest, header, rows())


def emit_csv(obj, dest) -> None:
    """Serialize any runner/oracle product to CSV (dispatch on type)."""
    if isinstance(obj, Trajectory):
        write_trajectory(obj, dest)
    elif isinstance(obj, WitnessSeries):
        write_witness_series(obj, dest)
    elif isinstance(obj, SignMatrix):
        write_sign_matrix(obj, dest)
    elif isinstance(obj, SweepSurface):
        write_sweep(obj, dest)
    elif isinstance(obj, ClosureReport):
        write_closure_report(obj, dest)
    else:
        raise TypeError(f"no CSV writer for {type(obj).__name__}")


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------

class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _add_common(sub):
    sub.add_argument("--config", type=Path, help="config file path")
    sub.add_argument("--preset", help="configuration label (AA, AN, NA, NN)")
    sub.add_argument("--chi", type=float, help="drive strength override")
    sub.add_argument("--tmax", type=float, help="time span override")
    sub.add_argument("--samples", type=int, help="sample count override")
    sub.add_argument("--threshold", type=float, help="tick threshold override")
    sub.add_argument("--out", type=Path, help="output CSV path (default stdout)")


def _build_parser() -> _Parser:
    parser = _Parser(prog="cavens", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="one scenario -> witness time-series CSV")
    _add_common(sim)
    sim.add_argument("--witnesses", help="comma list of witness columns (default all)")
    sim.add_argument("--moments", action="store_true",
                     help="emit the raw moment trajectory instead of witnesses")

    tab = subs.add_parser("table", help="sign matrix over all configurations")
    _add_common(tab)
    tab.add_argument("--chi-grid", default="0,0.2",
                     help="comma list of drive strengths (default 0,0.2)")

    swp = subs.add_parser("sweep", help="drive-strength sweep of one witness")
    _add_common(swp)
    swp.add_argument("--chi-grid", required=True, help="comma list of drive strengths")
    swp.add_argument("--witness", required=True, help="witness column to sweep")

    orc = subs.add_parser("oracle-check", help="closure-error report against the oracle")
    _add_common(orc)
    orc.add_argument("--nmax", type=int, default=6, help="Fock truncation per mode")
    return parser


def _resolve_scenario(args, require_source: bool = True) -> Scenario:
    if args.config is not None:
        scenario = parse_config(Path(args.config).read_text(encoding="utf-8"))
    elif args.preset is not None:
        scenario = Scenario(params=preset_params(args.preset, 0.0))
    elif require_source:
        raise _UsageError("either --config or --preset is required")
    else:
        scenario = Scenario(params=SystemParams())
    if args.preset is not None and args.config is not None:
        scenario = replace(scenario, params=preset_params(args.preset, scenario.params.chi))
    if args.chi is not None:
        scenario = scenario.with_params(chi=args.chi)
    if args.tmax is not None:
        scenario = replace(scenario, t_max=args.tmax)
    if args.samples is not None:
        scenario = replace(scenario, sample_count=args.samples)
    if args.threshold is not None:
        scenario = replace(scenario, threshold=args.threshold)
    return scenario


def _parse_grid(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise _UsageError(f"malformed chi grid {text!r}") from None


def _emit(obj, out: Path | None) -> None:
    if out is None:
        emit_csv(obj, sys.stdout)
    else:
        emit_csv(obj, out)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "simulate":
            scenario = _resolve_scenario(args)
            traj, series = run_scenario(scenario)
            if args.moments:
                _emit(traj, args.out)
            elif args.witnesses:
                columns = [c.strip() for c in args.witnesses.split(",") if c.strip()]
                if args.out is None:
                    write_witness_series(series, sys.stdout, columns)
                else:
                    write_witness_series(series, args.out, columns)
            else:
                _emit(series, args.out)
        elif args.command == "table":
            defaults = _resolve_scenario(args, require_source=False)
            matrix = table_matrix(
                t_max=defaults.t_max,
                threshold=defaults.threshold,
                sample_count=defaults.sample_count,
                abs_tol=defaults.abs_tol,
                rel_tol=defaults.rel_tol,
                chis=tuple(_parse_grid(args.chi_grid)),
            )
            _emit(matrix, args.out)
        elif args.command == "sweep":
            scenario = _resolve_scenario(args)
            label = args.preset
            if label is None:
                raise _UsageError("sweep requires --preset")
            surface = chi_sweep(
                label,
                _parse_grid(args.chi_grid),
                args.witness,
                t_max=scenario.t_max,
                sample_count=scenario.sample_count,
                abs_tol=scenario.abs_tol,
                rel_tol=scenario.rel_tol,
            )
            _emit(surface, args.out)
        elif args.command == "oracle-check":
            scenario = _resolve_scenario(args)
            report = closure_report(scenario, FockBasisSpec(args.nmax))
            _emit(report, args.out)
            if args.out is not None:
                for name, err in report.max_abs_error.items():
                    print(f"max |exact - closed| {name}: {err:.3e}")
        return 0
    # numeric failures first: LinAlgError subclasses ValueError
    except (IntegrationError, NoSteadyStateError, PositivityError,
            InternalConsistencyError, np.linalg.LinAlgError) as exc:
        print(f"cavens: numeric failure: {exc}", file=sys.stderr)
        return 2
    except (_UsageError, ConfigError, KeyError, ValueError, OSError) as exc:
        print(f"cavens: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
