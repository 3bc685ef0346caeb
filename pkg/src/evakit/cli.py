"""Command-line interface.

Subcommands: synth, fit-gev, fit-pot, sweep, seasonal, empirical, report.
All output is machine-readable (binary store, JSON rows, or the report file
set); plotting is left to external tooling.

Exit codes: 0 success, 1 configuration error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .distributions import DomainError
from .pipeline import (REFERENCE_TAIL_PROBABILITY, ConfigError, PipelineConfig,
                       analyze_cell, load_config, run_pipeline, _row_record,
                       _row_sort_key)
from .storage import CsvError, StoreError, read_store, write_store
from .synth import generate_cell, preset, spec_from_json


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; our contract reserves 2 for I/O."""

    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_periods(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"cannot parse return periods {text!r}")


def _emit_rows(rows, out_path: str | None) -> None:
    records = [_row_record(r) for r in sorted(rows, key=_row_sort_key)]
    text = json.dumps(records, indent=2) + "\n"
    if out_path is None or out_path == "-":
        sys.stdout.write(text)
    else:
        with open(out_path, "w", newline="\n") as f:
            f.write(text)


def _run_single_method(args, methods: tuple[str, ...],
                       q_max: float, q_min: float, k: int) -> int:
    cfg = PipelineConfig(input=args.input, output="(unused)", methods=methods,
                         q_max=q_max, q_min=q_min, n_thresholds=k,
                         periods=_parse_periods(args.periods))
    cfg.validate()
    rows = []
    for series in read_store(args.input):
        rows.extend(analyze_cell(series, cfg))
    _emit_rows(rows, args.out)
    return 0


# ------------------------------------------------------------- subcommands

def _cmd_synth(args) -> int:
    if args.spec is not None:
        with open(args.spec) as f:
            spec = spec_from_json(f.read())
    else:
        spec = preset(args.preset)
    n_cells = args.cells if args.cells is not None else spec.n_cells
    cells = [generate_cell(spec, args.years, seed=args.seed, cell_index=i,
                           start_year=args.start_year)
             for i in range(n_cells)]
    write_store(args.out, cells)
    return 0


def _cmd_fit_gev(args) -> int:
    return _run_single_method(args, ("gev",), 1e-3, 1e-5, 10)


def _cmd_fit_pot(args) -> int:
    if not 0.0 < args.q < 1.0:
        raise ConfigError(f"--q must be in (0, 1), got {args.q}")
    return _run_single_method(args, ("pot",), args.q, args.q, 1)


def _cmd_sweep(args) -> int:
    return _run_single_method(args, ("pot",), args.q_max, args.q_min, args.k)


def _cmd_seasonal(args) -> int:
    method = f"seasonal-{args.approach}"
    return _run_single_method(args, (method,), args.q_max, args.q_min, args.k)


def _cmd_empirical(args) -> int:
    return _run_single_method(args, ("empirical",), 1e-3, 1e-5, 10)


def _cmd_report(args) -> int:
    overrides = {
        "input": args.input,
        "output": args.output,
        "methods": args.methods,
        "q_max": args.q_max,
        "q_min": args.q_min,
        "n_thresholds": args.n_thresholds,
        "periods": args.periods,
        "reference_q": args.reference_q,
        "workers": args.workers,
        "seed": args.seed,
    }
    cfg = load_config(args.config, overrides)
    for path in run_pipeline(cfg):
        print(path)
    return 0


# ------------------------------------------------------------------- parser

def _add_input(p: _Parser) -> None:
    p.add_argument("--input", "-i", required=True, help="binary store to read")
    p.add_argument("--out", "-o", default=None,
                   help="output path for JSON rows (default: stdout)")
    p.add_argument("--periods", default="10,100,1000",
                   help="comma-separated return periods in years")


def _add_schedule(p: _Parser) -> None:
    p.add_argument("--q-max", type=float, default=1e-3,
                   help="largest tail probability of the schedule")
    p.add_argument("--q-min", type=float, default=1e-5,
                   help="smallest tail probability of the schedule")
    p.add_argument("--k", type=int, default=10,
                   help="number of log-spaced schedule entries")


def build_parser() -> _Parser:
    parser = _Parser(prog="evakit",
                     description="Extreme value analysis of huge ensembles "
                                 "of daily series.")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic ensemble store")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--preset", help="named mixture preset")
    g.add_argument("--spec", help="mixture spec JSON file")
    p.add_argument("--years", type=int, required=True)
    p.add_argument("--cells", type=int, default=None,
                   help="number of cells (default: all cells in the spec)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start-year", type=int, default=2001)
    p.add_argument("--out", "-o", required=True, help="store file to write")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("fit-gev", help="GEV fit to annual maxima, per cell")
    _add_input(p)
    p.set_defaults(func=_cmd_fit_gev)

    p = sub.add_parser("fit-pot", help="point-process fit at one threshold")
    _add_input(p)
    p.add_argument("--q", type=float, default=REFERENCE_TAIL_PROBABILITY,
                   help="tail probability of the threshold")
    p.set_defaults(func=_cmd_fit_pot)

    p = sub.add_parser("sweep", help="point-process fits across the schedule")
    _add_input(p)
    _add_schedule(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("seasonal", help="season-stratified fits")
    _add_input(p)
    _add_schedule(p)
    p.add_argument("--approach", type=int, choices=(1, 2), default=2,
                   help="1 = full-year thresholds, 2 = per-season thresholds")
    p.set_defaults(func=_cmd_seasonal)

    p = sub.add_parser("empirical", help="empirical AEP from annual maxima")
    _add_input(p)
    p.set_defaults(func=_cmd_empirical)

    p = sub.add_parser("report", help="full per-cell pipeline with report files")
    p.add_argument("--config", default=None, help="key=value manifest file")
    p.add_argument("--input", "-i", default=None)
    p.add_argument("--output", default=None, help="report output directory")
    p.add_argument("--methods", default=None,
                   help="comma-separated subset of gev,pot,seasonal-1,"
                        "seasonal-2,empirical")
    p.add_argument("--q-max", dest="q_max", default=None)
    p.add_argument("--q-min", dest="q_min", default=None)
    p.add_argument("--n-thresholds", dest="n_thresholds", default=None)
    p.add_argument("--periods", default=None)
    p.add_argument("--reference-q", dest="reference_q", default=None)
    p.add_argument("--workers", default=None,
                   help="worker processes (default: $EVAKIT_WORKERS or 1)")
    p.add_argument("--seed", default=None)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError) as e:
        print(f"evakit: error: {e}", file=sys.stderr)
        return 1
    except (StoreError, CsvError, OSError) as e:
        print(f"evakit: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
