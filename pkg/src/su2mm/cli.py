"""Command-line experiment runner.

Every subcommand accepts ``--config FILE``, a flat ``key = value`` file whose
keys are the long flag names (dashes or underscores).  Values given on the
command line override the file, which overrides built-in defaults.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from . import experiments as ex
from .analysis import peak_amplitude_error, time_mae
from .encoding import TruncationConfig
from .model import ORDERINGS, build_hamiltonian
from .pauli import DimensionError, ResourceError, dumps
from .reference import EchoSeries, echo_fft
from .spectral import DEFAULT_L, DEFAULT_N_GRID
from .trotter import MODES, STRATEGIES, build_trotter_circuit, circuit_metrics

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_INPUT = 4
EXIT_RESOURCE = 5


class InputError(Exception):
    """An input file is missing, unreadable or malformed."""


# -- serialization ------------------------------------------------------------------

def _json_value(v, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return "null"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return "null"
        text = format(v, ".17g")
        return text if any(c in text for c in ".en") else text + ".0"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_value(x, indent, level + 1)}" for k, x in v.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        if len(v) == 0:
            return "[]"
        if all(not isinstance(x, (dict, list, tuple, np.ndarray)) for x in v):
            return "[" + ", ".join(_json_value(x, indent, level + 1) for x in v) + "]"
        items = [pad + _json_value(x, indent, level + 1) for x in v]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def dumps_json(obj) -> str:
    """JSON with every float written to 17 significant digits."""
    return _json_value(obj, 2, 0) + "\n"


def _csv_cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".6g")
    return str(v)


def table_csv(table: ex.Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_csv_cell(v) for v in row])
    return buf.getvalue()


def envelope(command: str, params: dict, data) -> dict:
    return {"metadata": {"command": command, "version": __version__, "params": params}, "data": data}


def table_json(table: ex.Table, command: str, params: dict) -> str:
    data = {"name": table.name, "columns": list(table.columns),
            "rows": [list(r) for r in table.rows], "meta": table.meta}
    return dumps_json(envelope(command, params, data))


def _emit(text: str, output: str | None) -> None:
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


def _emit_table(table: ex.Table, args: argparse.Namespace) -> None:
    params = _params(args)
    text = table_json(table, args.command, params) if args.format == "json" else table_csv(table)
    _emit(text, args.output)


def _params(args: argparse.Namespace) -> dict:
    skip = {"func", "config", "output", "format"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _read_json(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc
    return obj.get("data", obj) if isinstance(obj, dict) else obj


def _read_series(path: str) -> EchoSeries:
    """Echo series from a CSV (t, value[, stderr, source]) or JSON table file."""
    if path.endswith(".json"):
        data = _read_json(path)
        try:
            cols = data["columns"]
            rows = data["rows"]
            t = [r[cols.index("t")] for r in rows]
            v = [r[cols.index("value")] for r in rows]
        except (KeyError, ValueError, TypeError) as exc:
            raise InputError(f"{path} is not an echo table") from exc
        return EchoSeries(t, v)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return EchoSeries([float(r["t"]) for r in rows], [float(r["value"]) for r in rows])
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"{path} is not an echo CSV (need columns t, value)") from exc


# -- subcommands --------------------------------------------------------------------

def cmd_spectrum(args: argparse.Namespace) -> None:
    _emit_table(ex.spectrum(args.lam, args.m, args.n_states, args.L, args.n_grid), args)


def cmd_echo_exact(args: argparse.Namespace) -> None:
    if args.source == "radial":
        series = ex.radial_echo(args.lam, args.T, args.dt, args.m)
    else:
        series = ex.truncated_echo(args.K, args.lam, args.T, args.dt, args.m)
    _emit_table(ex.echo_table(series), args)


def cmd_build_hamiltonian(args: argparse.Namespace) -> None:
    cfg = TruncationConfig(K=args.K, lam=args.lam, m=args.m)
    ops = build_hamiltonian(cfg, args.ordering)
    part = {"full": ops.h_full, "free": ops.h_free, "interaction": ops.h_int}[args.part]
    meta = dict(ops.metadata)
    meta["part"] = args.part
    meta["n_terms"] = len(part)
    meta["weight_histogram"] = {str(k): v for k, v in part.weight_histogram().items()}
    if args.format == "text":
        header = "".join(f"# {k}: {v}\n" for k, v in meta.items())
        _emit(header + dumps(part), args.output)
        return
    rows = [(label, float(c.real)) for label, c in part.items()]
    _emit_table(ex.Table("hamiltonian", ("label", "coeff"), rows, meta), args)


def cmd_trotter_metrics(args: argparse.Namespace) -> None:
    rows = []
    for K in args.K:
        ops = build_hamiltonian(TruncationConfig(K=K, lam=args.lam))
        c = build_trotter_circuit(ops, args.dt * args.steps, args.steps, args.mode, args.strategy)
        m = circuit_metrics(c)
        rows.append((K, m.depth, m.twoq_depth, m.twoq_count))
        if args.emit_circuit:
            Path(f"{args.emit_circuit}_K{K}.txt").write_text(c.to_text())
    _emit_table(ex.Table("metrics", ("K", "depth", "twoq_depth", "twoq_count"), rows,
                         {"mode": args.mode, "strategy": args.strategy, "steps": args.steps}), args)


def cmd_simulate(args: argparse.Namespace) -> None:
    rec = ex.simulate(args.K, args.lam, args.dt, args.steps, args.shots, args.p2q, args.fold,
                      args.seed, args.observable, args.m, args.histogram)
    if args.format == "json":
        _emit(dumps_json(envelope("simulate", _params(args), rec)), args.output)
        return
    rows = []
    for f, fr in rec["folds"].items():
        for j, t in enumerate(rec["times"]):
            rows.append((t, fr["values"][j], fr["stderr"][j], f"shots_raw_f{f}",
                         fr["gauge_violation_rate"][j]))
    _emit_table(ex.Table("simulate", ("t", "value", "stderr", "source", "gauge_violation_rate"), rows), args)


def cmd_mitigate(args: argparse.Namespace) -> None:
    record = _read_json(args.input)
    if not isinstance(record, dict) or "folds" not in record:
        raise InputError(f"{args.input} is not a simulate record")
    try:
        report = ex.mitigate_zne(record) if args.method == "zne" else ex.mitigate_postselect(record)
    except KeyError as exc:
        raise InputError(f"{args.input} lacks field {exc}") from exc
    _emit(dumps_json(envelope("mitigate", _params(args), report)), args.output)


def cmd_analyze(args: argparse.Namespace) -> None:
    series = _read_series(args.input)
    fft, peaks = ex.spectrum_fft_table(series)
    if args.reference:
        ref = _read_series(args.reference)
        table = ex.Table("comparison", ("time_mae", "peak_amplitude_error_pct"),
                         [(time_mae(series, ref), peak_amplitude_error(echo_fft(ref), echo_fft(series),
                                                                        args.n_peaks))])
    elif args.peaks and not args.fft:
        table = peaks
    elif args.peaks:
        if args.output in (None, "-"):
            _emit_table(fft, args)
            _emit_table(peaks, args)
            return
        _emit_table(fft, args)
        stem = Path(args.output)
        args = argparse.Namespace(**{**vars(args), "output": str(stem.with_name(stem.stem + "_peaks" + stem.suffix))})
        table = peaks
    else:
        table = fft
    _emit_table(table, args)


def cmd_reproduce(args: argparse.Namespace) -> None:
    tables = ex.reproduce(args.target, args.shots, args.seeds)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = _params(args)
    for table in tables:
        if args.format == "json":
            (out / f"{table.name}.json").write_text(table_json(table, "reproduce", params))
        else:
            (out / f"{table.name}.csv").write_text(table_csv(table))
        print(out / f"{table.name}.{args.format}")


# -- parser -------------------------------------------------------------------------

def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in str(text).replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="su2mm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"su2mm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, func, help_: str, fmt: str = "csv",
                formats: tuple[str, ...] = ("csv", "json")) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="flat key = value file")
        p.add_argument("--output", "-o", help="output file (default stdout)")
        p.add_argument("--format", choices=formats, default=fmt)
        p.set_defaults(func=func)
        return p

    def physics(p: argparse.ArgumentParser, lam: float = 10.0) -> None:
        p.add_argument("--lambda", dest="lam", type=float, default=lam, help="'t Hooft coupling")
        p.add_argument("--m", type=float, default=1.0, help="mass")

    p = command("spectrum", cmd_spectrum, "radial spectrum and vacuum overlaps")
    physics(p)
    p.add_argument("--n-states", type=int, default=6)
    p.add_argument("--L", type=float, default=DEFAULT_L)
    p.add_argument("--n-grid", type=int, default=DEFAULT_N_GRID)

    p = command("echo-exact", cmd_echo_exact, "exact echo of the free vacuum")
    physics(p, 20.0)
    p.add_argument("--source", choices=("truncated", "radial"), default="truncated")
    p.add_argument("--K", type=int, default=2)
    p.add_argument("--T", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=0.05)

    p = command("build-hamiltonian", cmd_build_hamiltonian, "Pauli decomposition of the Hamiltonian",
                fmt="text", formats=("text", "csv", "json"))
    physics(p)
    p.add_argument("--K", type=int, default=2)
    p.add_argument("--ordering", choices=ORDERINGS, default="truncate")
    p.add_argument("--part", choices=("full", "free", "interaction"), default="full")

    p = command("trotter-metrics", cmd_trotter_metrics, "depth and entangler metrics of Trotter circuits")
    p.add_argument("--K", type=_int_list, default=[2, 3])
    p.add_argument("--lambda", dest="lam", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=1)
    p.add_argument("--mode", choices=MODES, default="interaction")
    p.add_argument("--strategy", choices=STRATEGIES, default="grouped")
    p.add_argument("--emit-circuit", help="write circuits to PREFIX_K<k>.txt")

    p = command("simulate", cmd_simulate, "noisy shot simulation of Trotter circuits", fmt="json")
    physics(p)
    p.add_argument("--K", type=int, default=2)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=5)
    p.add_argument("--shots", type=int, default=250)
    p.add_argument("--p2q", type=float, default=1e-3)
    p.add_argument("--fold", type=_int_list, default=[1], help="odd folding factors, e.g. 1,3")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--observable", choices=("echo", "number"), default="echo")
    p.add_argument("--histogram", action="store_true", help="include raw shot histograms")

    p = command("mitigate", cmd_mitigate, "ZNE or post-selection on a simulate record", fmt="json")
    p.add_argument("--input", required=True)
    p.add_argument("--method", choices=("zne", "postselect"), default="zne")

    p = command("analyze", cmd_analyze, "Fourier analysis of an echo file")
    p.add_argument("--input", required=True)
    p.add_argument("--fft", action="store_true", help="write the spectrum (default)")
    p.add_argument("--peaks", action="store_true", help="write the peak table")
    p.add_argument("--reference", help="second echo file: report time MAE and peak error")
    p.add_argument("--n-peaks", type=int, default=3)

    p = command("reproduce", cmd_reproduce, "regenerate the data behind a table or figure")
    p.add_argument("--target", choices=ex.TARGETS, required=True)
    p.add_argument("--output-dir", default="results")
    p.add_argument("--shots", type=int)
    p.add_argument("--seeds", type=_int_list, default=[0])
    return parser


def load_config(path: str) -> dict[str, str]:
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        cp.read_string("[config]\n" + text)
    except configparser.Error as exc:
        raise InputError(f"malformed config {path}: {exc}") from exc
    return {k.replace("-", "_"): v for k, v in cp["config"].items()}


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Install config-file values as defaults of the chosen subcommand."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    values = load_config(known.config)
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    name = next((a for a in argv if a in sub.choices), None)
    if name is None:
        return
    p = sub.choices[name]
    actions = {a.dest: a for a in p._actions}
    aliases = {"lambda": "lam"}
    defaults = {}
    for key, raw in values.items():
        dest = aliases.get(key, key)
        if dest not in actions or dest in ("config", "help"):
            raise ValueError(f"unknown config key {key!r} for {name}")
        action = actions[dest]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[dest] = raw.strip().lower() in ("1", "true", "yes", "on")
            continue
        try:
            val = action.type(raw) if action.type else raw
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise ValueError(f"config key {key!r}: {exc}") from exc
        if action.choices is not None and val not in action.choices:
            raise ValueError(f"config key {key!r}: {val!r} not in {list(action.choices)}")
        defaults[dest] = val
    p.set_defaults(**defaults)
    for dest in defaults:
        actions[dest].required = False


def run(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ResourceError, DimensionError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ValueError as exc:
        print(f"error: invalid parameter: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ArithmeticError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def main() -> None:
    sys.exit(run())
