"""Command-line entry points: ``run``, ``sweep``, ``validate`` and ``oracle``.

Exit codes: 0 success, 1 configuration error, 2 runtime abort, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .config import ScenarioConfig, bundled, load_config
from .errors import UcranError, ValidationError
from .topology import Architecture

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3
DEFAULT_CONFIG = "hotspot_table.cfg"


def parse_seeds(text: str) -> tuple[int, ...]:
    """``"3"``, ``"1..5"`` or ``"1,4,9"``."""
    text = text.strip()
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
            if hi < lo:
                raise ValueError
            return tuple(range(lo, hi + 1))
        return tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed range {text!r} (expected N..M)") from None


def parse_arch(text: str) -> tuple[Architecture, ...]:
    text = text.lower()
    if text == "all":
        return tuple(Architecture)
    try:
        return (Architecture(text),)
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown architecture {text!r}") from None


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ucran", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, multi_seed: bool):
        sp.add_argument("--config", type=Path, default=None,
                        help=f"scenario file (default: bundled {DEFAULT_CONFIG})")
        sp.add_argument("--arch", type=parse_arch, default=None,
                        help="macro, cran, ucran or all")
        if multi_seed:
            sp.add_argument("--seeds", type=parse_seeds, default=None, help="seed range N..M")
        else:
            sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", type=Path, default=None, help="output directory")
        sp.add_argument("--format", choices=("csv", "txt"), default="csv")
        sp.add_argument("--backend", choices=("auto", "python", "compiled"), default="auto")

    common(sub.add_parser("run", help="one simulation run per architecture"), False)
    sw = sub.add_parser("sweep", help="load sweep over seeds and architectures")
    common(sw, True)
    sw.add_argument("--workers", type=int, default=1, help="parallel runs (processes)")
    sw.add_argument("--traces", action="store_true", help="also write one trace per run")

    v = sub.add_parser("validate", help="check a scenario file")
    v.add_argument("--config", type=Path, required=True)

    o = sub.add_parser("oracle", help="closed-form queueing results")
    osub = o.add_subparsers(dest="model", required=True)
    eb = osub.add_parser("erlang-b", help="blocking of an M/M/c/c loss system")
    eb.add_argument("--servers", type=int, required=True)
    eb.add_argument("--load", type=float, required=True, help="offered load in Erlangs")
    mm = osub.add_parser("mm1", help="M/M/1 sojourn, wait and occupancy")
    mm.add_argument("--lam", type=float, required=True)
    mm.add_argument("--mu", type=float, required=True)
    return p


def _load(args) -> ScenarioConfig:
    path = args.config if args.config is not None else bundled(DEFAULT_CONFIG)
    cfg = load_config(path)
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if changes:
        cfg = cfg.replace(scenario=changes)
    return cfg


def _archs(args, cfg: ScenarioConfig) -> tuple[Architecture, ...]:
    if args.arch is not None:
        return args.arch
    return (cfg.scenario.architecture,)


def cmd_run(args) -> int:
    from .engine import run
    from .report import MetricsReport, csv_text, emit_results, text_report
    cfg = _load(args)
    rows, artifacts = [], []
    for arch in _archs(args, cfg):
        c = cfg.replace(scenario={"architecture": arch})
        res = run(c, backend=args.backend)
        rows.extend(res.report.rows)
        artifacts.append((arch, res))
    report = MetricsReport(rows)
    if args.out is None:
        sys.stdout.write(csv_text(report) if args.format == "csv" else text_report(report))
        return EXIT_OK
    args.out.mkdir(parents=True, exist_ok=True)
    for arch, res in artifacts:
        res.trace.write(args.out / f"trace_{arch.value}.txt")
        (args.out / f"run_{arch.value}.json").write_text(json.dumps(res.record, indent=2) + "\n")
    if report.rows:
        path = emit_results(report, args.out, args.format)
        print(path)
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .engine import run_sweep
    from .report import csv_text, emit_results, text_report
    cfg = _load(args)
    archs = args.arch or cfg.sweep.architectures
    seeds = args.seeds or cfg.sweep.seeds
    on_run = None
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        if args.traces:
            tdir = args.out / "traces"
            tdir.mkdir(exist_ok=True)

            def on_run(c, res):
                name = (f"{c.scenario.architecture.value}_"
                        f"{c.traffic.load_fraction:g}_s{c.scenario.seed}.txt")
                res.trace.write(tdir / name)
    result = run_sweep(cfg, seeds=seeds, architectures=archs, backend=args.backend,
                       on_run=on_run, workers=args.workers if on_run is None else 1)
    if args.out is None:
        sys.stdout.write(csv_text(result.report) if args.format == "csv"
                         else text_report(result.report))
        return EXIT_OK
    path = emit_results(result.report, args.out, args.format, stem="sweep")
    record = {
        "code_version": __version__,
        "config": cfg.replace(sweep={"seeds": tuple(seeds),
                                     "architectures": tuple(archs)}).to_dict(),
        "runs": [{"architecture": a, "ue_count": u, "seed": s, "trace_digest": d}
                 for a, u, s, _, d in result.runs],
    }
    (args.out / "sweep_record.json").write_text(json.dumps(record, indent=2) + "\n")
    print(path)
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    from .topology import build_topology, validate_topology
    if cfg.scenario.scenario.value == "hotspot":
        problems = validate_topology(build_topology(cfg))
        if problems:
            raise ValidationError("; ".join(problems))
    print(f"{args.config}: ok ({cfg.scenario.scenario.value}, "
          f"{cfg.scenario.architecture.label}, max_ues={cfg.max_ues()})")
    return EXIT_OK


def cmd_oracle(args) -> int:
    from . import oracles
    if args.model == "erlang-b":
        print(f"erlang_b(servers={args.servers}, load={args.load:g}) = "
              f"{oracles.erlang_b(args.servers, args.load):.6g}")
    else:
        lam, mu = args.lam, args.mu
        print(f"sojourn_s = {oracles.mm1_sojourn(lam, mu):.6g}")
        print(f"wait_s = {oracles.mm1_wait(lam, mu):.6g}")
        print(f"in_system = {oracles.mm1_in_system(lam, mu):.6g}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "validate": cmd_validate, "oracle": cmd_oracle}


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors count as configuration errors
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UcranError, RuntimeError, ValueError, ArithmeticError) as exc:
        print(f"runtime abort: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
