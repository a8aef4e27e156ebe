"""Command-line entry point: ``tram compile | corpus | sweep``.

Exit codes: 0 success, 1 configuration error, 2 some circuits failed,
3 an output invariant was violated.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .circuit_ir import QasmError
from .device import DeviceError
from .pipeline import (
    BASELINE_LAYOUTS,
    ROUTERS,
    ConfigError,
    InvariantError,
    PipelineConfig,
    SWEEP_LIMIT,
    RunReport,
    bundled_corpus_dir,
    compile_paths,
    run_corpus,
    sweep_epsilon,
    sweep_weights,
)

EXIT_OK, EXIT_CONFIG, EXIT_FAILURES, EXIT_INVARIANT = 0, 1, 2, 3


def _common(p: argparse.ArgumentParser) -> None:
    d = PipelineConfig()
    p.add_argument("--device", default=d.device,
                   help="calibration JSON path, a bundled name (perth, guadalupe, brooklyn) "
                        "or 'auto' to pick a bundled device by circuit width")
    p.add_argument("--omega1", type=float, default=d.omega1, help="T2-similarity weight")
    p.add_argument("--omega2", type=float, default=d.omega2, help="calibration-success weight")
    p.add_argument("--phi", type=float, default=d.phi, help="heatmap time-weight sharpness")
    p.add_argument("--eta", type=float, default=d.eta, help="dwell-penalty weight in routing cost")
    p.add_argument("--mu", type=float, default=d.mu, help="lookahead weight")
    p.add_argument("--delta", type=float, default=d.delta, help="decay increment per SWAP")
    p.add_argument("--decay-reset", type=int, default=d.decay_reset,
                   help="reset decay every N inserted SWAPs (0: never)")
    p.add_argument("--epsilon", type=float, default=d.epsilon, help="T2 normalisation offset")
    p.add_argument("--refine-budget", type=int, default=None,
                   help="max accepted refinement moves (default 10 n^2)")
    p.add_argument("--router", choices=ROUTERS, default=d.router)
    p.add_argument("--simulate", action="store_true",
                   help="noisy fidelity for circuits of at most 5 qubits")
    p.add_argument("--seed", type=int, default=d.seed, help="reserved; results are deterministic")
    p.add_argument("--out", default=None, help="directory for routed QASM and reports")
    p.add_argument("--dwell-time", type=float, default=None, help="dwell time override (us)")
    p.add_argument("--dwell-mode", choices=("layer", "depth"), default=d.dwell_mode)
    p.add_argument("--baseline-layout", choices=BASELINE_LAYOUTS, default=d.baseline_layout)
    p.add_argument("--jobs", type=int, default=d.jobs, help="parallel compilations")
    p.add_argument("--format", choices=("table", "json"), default="table",
                   help="what to print on stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tram", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compile", help="compile one or more QASM files")
    _common(c)
    c.add_argument("--circuit", action="append", required=True, help="QASM file (repeatable)")

    k = sub.add_parser("corpus", help="compile every .qasm file in a directory")
    _common(k)
    k.add_argument("--dir", default=None, help="corpus directory (default: bundled corpus)")

    s = sub.add_parser("sweep", help="sweep the partition reward weights")
    _common(s)
    s.add_argument("--grid", default="0:1:0.25", help="start:stop:step for omega1 and omega2")
    s.add_argument("--dir", default=None, help="corpus directory (default: bundled corpus)")
    s.add_argument("--circuit", action="append", default=None, help="restrict to these files")
    s.add_argument("--epsilons", default=None,
                   help="comma-separated epsilons; reports partitions per epsilon instead")
    s.add_argument("--allow-large-sweep", action="store_true",
                   help=f"permit grids above {SWEEP_LIMIT} points")
    return parser


def config_from_args(args) -> PipelineConfig:
    circuits = tuple(getattr(args, "circuit", None) or ())
    return PipelineConfig(
        device=args.device, circuits=circuits, omega1=args.omega1, omega2=args.omega2,
        phi=args.phi, eta=args.eta, mu=args.mu, delta=args.delta,
        decay_reset=args.decay_reset, epsilon=args.epsilon,
        refine_budget=args.refine_budget, router=args.router, simulate=args.simulate,
        seed=args.seed, out=args.out, dwell_time=args.dwell_time, dwell_mode=args.dwell_mode,
        baseline_layout=args.baseline_layout, jobs=args.jobs,
        allow_large_sweep=getattr(args, "allow_large_sweep", False),
    )


def _setup_logging() -> None:
    level = os.environ.get("TRAM_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _report_exit(report: RunReport) -> int:
    if any(r["guard_trips"] for r in report.rows):
        logging.getLogger("tram").error("routing progress guard tripped")
        return EXIT_INVARIANT
    return EXIT_FAILURES if report.failures else EXIT_OK


def _emit(report: RunReport, fmt: str) -> None:
    sys.stdout.write(report.to_json() if fmt == "json" else report.to_table())


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.command == "compile":
            report = compile_paths(cfg, cfg.circuits)
            _emit(report, args.format)
            return _report_exit(report)
        if args.command == "corpus":
            report = run_corpus(cfg, args.dir)
            _emit(report, args.format)
            return _report_exit(report)
        # sweep
        if args.epsilons:
            eps = [float(x) for x in args.epsilons.split(",")]
            rows = sweep_epsilon(cfg, eps)
        else:
            if args.circuit:
                paths = args.circuit
            else:
                base = Path(args.dir) if args.dir else None
                paths = sorted((base or bundled_corpus_dir()).glob("*.qasm"))
            rows = sweep_weights(replace(cfg, out=None), args.grid, paths)
        text = json.dumps(rows, indent=2, sort_keys=True) + "\n"
        if cfg.out:
            out = Path(cfg.out)
            out.mkdir(parents=True, exist_ok=True)
            (out / "sweep.json").write_text(text)
        sys.stdout.write(text)
        return EXIT_OK
    except (ConfigError, DeviceError, QasmError, ValueError) as exc:
        print(f"tram: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantError as exc:
        print(f"tram: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
