"""Command-line front end.

Exit codes: 0 on success, 1 on usage errors (bad flags, missing input
files), 2 on runtime errors.  Every file is written atomically and carries
the tool version, the resolved configuration and the seed.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .bench import (
    ExperimentConfig, envelope, method_comparison_report, run_workload,
    sweep_threshold, to_csv_text, to_json_text, write_atomic,
)
from .builders import ConfigError, SchedulerConfig, memory_circuit, schedule_cycle
from .circuit import CircuitError, circuit_stats, parse_circuit, render_text
from .codes import format_steane, get_code, load_code_file
from .noise import CHANNELS, NoiseModel, instrument
from .temporal import METHODS, HmmParams, compare_methods, fit_default_params, simulate_streams, streams_from_circuit

SWEEP_COLUMNS = ["d", "p_phys", "p_log", "ci_low", "ci_high", "source"]
COMPARE_COLUMNS = ["mode", "syndrome_fidelity", "prep_success_rate", "n_anc", "ancilla_ratio",
                   "round_depth", "depth_ratio", "p_log", "ci_low", "ci_high", "suppression", "failures"]


class UsageError(Exception):
    """Bad command line or missing input."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _env_seed() -> int:
    raw = os.environ.get("HFT_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"HFT_SEED must be an integer, got {raw!r}") from None


def _globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(None), help="master seed (env HFT_SEED)")
    p.add_argument("--out", default=d(None), help="output file (default: stdout)")
    p.add_argument("--format", choices=("json", "csv", "text"), default=d(None),
                   help="output format (default: from --out extension)")
    p.add_argument("--threads", type=int, default=d(None), help="worker threads")


def _scheduler_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--code", default="steane")
    p.add_argument("--mode", choices=("standard", "cat", "steane"), default="standard")
    p.add_argument("--readout", choices=("sequential", "batched"), default="sequential")
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--verify", type=int, default=2)
    p.add_argument("--max-attempts", type=int, default=3)
    p.add_argument("--swap", action="store_true", help="steane-mode swap policy")
    p.add_argument("--recovery", choices=("feedforward", "frame", "none"), default="feedforward")
    p.add_argument("--no-confirm", action="store_true",
                   help="correct every round immediately instead of on repeated syndromes")


def _noise_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--noise", help="noise model JSON file")
    p.add_argument("--pphys", type=float, help="proportional noise shortcut")
    p.add_argument("--channels", help=f"comma-separated subset of {','.join(CHANNELS)}")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="hft", description="Steane-code syndrome extraction simulator.")
    ap.add_argument("--version", action="version", version=f"hft {__version__}")
    _globals(ap, suppress=False)
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    common = _Parser(add_help=False)
    _globals(common, suppress=True)

    p = sub.add_parser("codes", parents=[common], help="inspect codes")
    p.add_argument("action", choices=("show",))
    p.add_argument("name", nargs="?", default="steane", help="code name or JSON file")

    p = sub.add_parser("circuit", parents=[common], help="build, render or count circuits")
    p.add_argument("action", choices=("build", "render", "stats"))
    p.add_argument("--input", help="read a circuit text file instead of building one")
    p.add_argument("--encode", action="store_true", help="prepend the encoder")
    p.add_argument("--max-columns", type=int, default=120)
    _scheduler_flags(p)
    _noise_flags(p)

    p = sub.add_parser("run", parents=[common], help="run an experiment config")
    p.add_argument("--config", required=True, help="experiment JSON")

    p = sub.add_parser("sweep", parents=[common], help="threshold sweep")
    p.add_argument("--d", type=int, action="append", help="distance (repeatable); default 3")
    p.add_argument("--pmin", type=float, default=1e-4)
    p.add_argument("--pmax", type=float, default=3e-2)
    p.add_argument("--points", type=int, default=12)
    p.add_argument("--shots", type=int, default=10_000)
    p.add_argument("--mode", choices=("standard", "cat", "steane"), default="steane")
    p.add_argument("--rounds", type=int, default=10)
    p.add_argument("--channels", default="gate1,gate2,meas")
    p.add_argument("--deep", action="store_true", help="10x shots")

    p = sub.add_parser("compare", parents=[common], help="compare extraction methods")
    p.add_argument("--pphys", type=float, default=1e-3)
    p.add_argument("--shots", type=int, default=10_000)
    p.add_argument("--rounds", type=int, default=10)
    p.add_argument("--verify", type=int, default=2)
    p.add_argument("--channels", default=",".join(CHANNELS))

    p = sub.add_parser("temporal", parents=[common], help="temporal decoder report")
    p.add_argument("--method", choices=METHODS + ("all",), default="all")
    p.add_argument("--rounds", type=int, default=16)
    p.add_argument("--shots", type=int, default=100)
    p.add_argument("--source", choices=("synthetic", "circuit"), default="synthetic")
    p.add_argument("--q-flip", type=float, default=0.05)
    p.add_argument("--r-obs", type=float, default=0.1)
    p.add_argument("--prior0", type=float, default=1.0)
    p.add_argument("--window", type=int, default=3)
    p.add_argument("--pphys", type=float, default=1e-3, help="noise level for --source circuit")
    p.add_argument("--mode", choices=("standard", "cat", "steane"), default="standard")
    p.add_argument("--detail", type=int, default=5, help="shots listed in full")
    return ap


# helpers ------------------------------------------------------------------------------------

def _channels(text: str | None):
    if text is None:
        return None
    ch = [c.strip() for c in text.split(",") if c.strip()]
    bad = set(ch) - set(CHANNELS)
    if bad:
        raise UsageError(f"unknown noise channels {sorted(bad)}")
    return ch


def _read_json(path: str) -> dict:
    if not os.path.exists(path):
        raise UsageError(f"file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as e:
            raise UsageError(f"{path}: invalid JSON ({e})") from None


def _code(name: str):
    if name.endswith(".json"):
        if not os.path.exists(name):
            raise UsageError(f"file not found: {name}")
        try:
            return load_code_file(name)
        except (KeyError, TypeError, ValueError) as e:
            raise UsageError(f"{name}: malformed code file ({type(e).__name__}: {e})") from None
    try:
        return get_code(name)
    except KeyError as e:
        raise UsageError(str(e.args[0])) from None


def _noise(args):
    if getattr(args, "noise", None):
        m = NoiseModel.from_json(_read_json(args.noise))
    elif getattr(args, "pphys", None) is not None:
        m = NoiseModel.from_pphys(args.pphys)
    else:
        m = None
    ch = _channels(getattr(args, "channels", None))
    if ch is not None:
        m = (m or NoiseModel()).with_channels(ch)
    return m


def _scheduler(args, rounds=None) -> SchedulerConfig:
    return SchedulerConfig(mode=args.mode, readout=args.readout, rounds=rounds or args.rounds,
                           verify=args.verify, max_prep_attempts=args.max_attempts,
                           swap_policy=args.swap, recovery=args.recovery, confirm=not args.no_confirm)


def _fmt(args, default: str) -> str:
    if args.format:
        return args.format
    if args.out:
        ext = os.path.splitext(args.out)[1].lower()
        return {".csv": "csv", ".json": "json", ".txt": "text"}.get(ext, default)
    return default


def _emit(args, text: str) -> None:
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)


def _table(rows: list[dict], columns: list[str]) -> str:
    def cell(v):
        if isinstance(v, float):
            return f"{v:.4g}"
        return "-" if v is None else str(v)

    body = [[cell(r.get(c)) for c in columns] for r in rows]
    widths = [max(len(c), *(len(b[i]) for b in body)) if body else len(c) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(b, widths)) for b in body]
    return "\n".join(lines) + "\n"


def _output(args, kind: str, config: dict, rows: list[dict], columns: list[str], default="json",
            extra: dict | None = None, text: str | None = None) -> None:
    fmt = _fmt(args, default)
    payload = rows if extra is None else {**extra, "rows": rows}
    if fmt == "json":
        _emit(args, to_json_text(envelope(kind, config, args.seed, payload)))
    elif fmt == "csv":
        meta = {"schema_version": 1, "tool": "hft", "version": __version__, "kind": kind,
                "seed": args.seed, "config": config}
        _emit(args, to_csv_text(rows, columns, meta))
    else:
        _emit(args, text if text is not None else _table(rows, columns))


# subcommands ------------------------------------------------------------------------------

def _cmd_codes(args) -> None:
    code = _code(args.name)
    fmt = _fmt(args, "text")
    if fmt == "json":
        _emit(args, to_json_text(envelope("code", {"name": args.name}, args.seed, {
            **code.to_json(), "name": code.name, "k": code.k,
            "logical_x": str(code.logical_x), "logical_z": str(code.logical_z)})))
        return
    if code.n == 7 and code.name == "steane":
        text = format_steane(code)
    else:
        lines = [f"{code.name}: [[{code.n},{code.k},{code.d}]]", "hz:"]
        lines += ["  " + " ".join(str(b) for b in row) for row in code.hz]
        lines.append("hx:")
        lines += ["  " + " ".join(str(b) for b in row) for row in code.hx]
        lines += [f"X_L = {code.logical_x}", f"Z_L = {code.logical_z}"]
        text = "\n".join(lines)
    _emit(args, text + "\n")


def _cmd_circuit(args) -> None:
    if args.input:
        if not os.path.exists(args.input):
            raise UsageError(f"file not found: {args.input}")
        with open(args.input, encoding="utf-8") as fh:
            try:
                circ = parse_circuit(fh.read())
            except CircuitError as e:
                raise UsageError(f"{args.input}: {e}") from None
    else:
        code = _code(args.code)
        noise = _noise(args)
        sched = _scheduler(args)
        if args.encode:
            circ = memory_circuit(code, sched, noise)
        else:
            circ = schedule_cycle(code, sched)
            if noise is not None:
                circ = instrument(circ, noise)
    if args.action == "build":
        _emit(args, circ.to_text())
    elif args.action == "render":
        _emit(args, render_text(circ, args.max_columns) + "\n")
    else:
        stats = circuit_stats(circ)
        if _fmt(args, "text") == "json":
            _emit(args, to_json_text(envelope("circuit_stats", vars_config(args), args.seed, stats)))
        else:
            _emit(args, "".join(f"{k}: {v}\n" for k, v in stats.items()))


def vars_config(args) -> dict:
    skip = {"out", "format", "threads", "command", "seed", "seed_explicit"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _cmd_run(args) -> None:
    raw = _read_json(args.config)
    try:
        cfg = ExperimentConfig.from_json(raw)
    except (ValueError, TypeError) as e:
        raise UsageError(f"{args.config}: {e}") from None
    if args.seed_explicit:
        cfg = ExperimentConfig(**{**cfg.__dict__, "seed": args.seed})
    args.seed = cfg.seed
    if args.threads:
        cfg = ExperimentConfig(**{**cfg.__dict__, "threads": args.threads})
    res = run_workload(cfg)
    row = res.to_json()
    _output(args, "run", cfg.to_json(), [row], list(row), default="json")


def _cmd_sweep(args) -> None:
    ds = args.d or [3]
    if any(d < 3 or d % 2 == 0 for d in ds):
        raise UsageError("--d must be odd and >= 3")
    if not 0 < args.pmin < args.pmax or args.points < 2:
        raise UsageError("need 0 < pmin < pmax and points >= 2")
    shots = args.shots * (10 if args.deep else 1)
    ps = [float(f"{p:.6g}") for p in np.geomspace(args.pmin, args.pmax, args.points)]
    channels = _channels(args.channels)
    sched = SchedulerConfig(mode=args.mode, rounds=args.rounds)
    pts = sweep_threshold("steane", ds, ps, shots, scheduler=sched, channels=channels,
                          seed=args.seed, threads=args.threads)
    rows = [asdict(p) for p in pts]
    config = {"d": ds, "p_list": ps, "shots": shots, "scheduler": sched.to_json(),
              "channels": channels, "model": {"A": 0.1, "p_th": 0.01}}
    _output(args, "sweep", config, rows, SWEEP_COLUMNS, default="csv")


def _cmd_compare(args) -> None:
    channels = _channels(args.channels)
    rep = method_comparison_report(args.pphys, args.shots, rounds=args.rounds, seed=args.seed,
                                   channels=channels, verify=args.verify, threads=args.threads)
    rows = rep.pop("rows")
    config = {"p_phys": args.pphys, "shots": args.shots, "rounds": args.rounds,
              "verify": args.verify, "channels": channels}
    _output(args, "compare", config, rows, COMPARE_COLUMNS, default="json", extra=rep)


def _temporal_text(rep: dict) -> str:
    lines = [f"params: {rep['params']}  window: {rep['window']}  rounds: {rep['rounds']}"]
    for s in rep["shots"]:
        lines.append(f"Shot {s['shot']}:")
        lines.append(f"  hidden truth: {s['hidden_truth']}")
        for m in METHODS:
            if m in s:
                lines.append(f"  {m:<8} corrected: {s[m]['corrected']}  confidence: {s[m]['confidence']}")
        if s["final_disagreement"]:
            lines.append("  ** methods disagree on the final syndrome **")
    lines.append("summary:")
    for m, v in rep["methods"].items():
        lines.append(f"  {m:<8} accuracy {v['accuracy']:.4f}  final {v['final_accuracy']:.4f}  "
                     f"mean confidence {v['mean_confidence']:.4f}  disagreement rounds {v['disagreement_rounds']}")
    return "\n".join(lines) + "\n"


def _cmd_temporal(args) -> None:
    if args.rounds < 1 or args.shots < 1:
        raise UsageError("--rounds and --shots must be positive")
    if args.source == "synthetic":
        params = HmmParams(args.q_flip, args.r_obs, args.prior0)
        streams = simulate_streams(params, args.rounds, 3, args.shots, seed=args.seed)
    else:
        code = get_code("steane")
        noise = NoiseModel.from_pphys(args.pphys)
        sched = SchedulerConfig(mode=args.mode, rounds=args.rounds)
        params = fit_default_params(noise, code=code, config=sched, seed=args.seed)
        streams = streams_from_circuit(code, sched, noise, args.shots, args.seed)
    rep = compare_methods(streams, params, args.window, args.detail)
    if args.method != "all":
        rep["methods"] = {args.method: rep["methods"][args.method]}
        for s in rep["shots"]:
            for m in METHODS:
                if m != args.method:
                    s.pop(m)
    config = {k: getattr(args, k) for k in ("method", "rounds", "shots", "source", "window", "mode", "pphys")}
    config["params"] = params.to_json()
    rows = [{"method": m, **v} for m, v in rep["methods"].items()]
    cols = ["method", "accuracy", "final_accuracy", "mean_confidence", "disagreement_rounds"]
    fmt = _fmt(args, "json")
    if fmt == "json":
        _emit(args, to_json_text(envelope("temporal", config, args.seed, rep)))
    else:
        _output(args, "temporal", config, rows, cols, text=_temporal_text(rep))


_COMMANDS = {"codes": _cmd_codes, "circuit": _cmd_circuit, "run": _cmd_run, "sweep": _cmd_sweep,
             "compare": _cmd_compare, "temporal": _cmd_temporal}


def main(argv=None) -> int:
    """Entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand; see hft --help")
        args.seed_explicit = args.seed is not None or "HFT_SEED" in os.environ
        if args.seed is None:
            args.seed = _env_seed()
        if args.threads is None:
            args.threads = os.cpu_count() or 1
        if args.threads < 1:
            raise UsageError("--threads must be positive")
        _COMMANDS[args.command](args)
        return 0
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001 - report any runtime failure as exit 2
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
