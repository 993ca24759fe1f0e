"""Command line entry point: ``spfc converge|simulate|verify``.

Exit codes: 0 success, 1 invariant or check failure, 2 blow-up,
3 configuration or I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from .errors import BlowUpError, ConfigError, PreconditionError, SolverError
from .harness import load_config, run_convergence, run_simulation
from .io import SnapshotFormatError
from .verify import run_verify

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_BLOWUP = 2
EXIT_CONFIG = 3

log = logging.getLogger("spfc")


def parse_schedule(text: str) -> list[tuple[float, float]]:
    """``"1000:0.01,21000:0.02"`` -> ``[(1000.0, 0.01), (21000.0, 0.02)]``."""
    out = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        t, sep, dt = item.partition(":")
        if not sep:
            raise argparse.ArgumentTypeError(f"schedule entry {item!r} is not 't_end:dt'")
        try:
            out.append((float(t), float(dt)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"schedule entry {item!r} is not numeric") from None
    if not out:
        raise argparse.ArgumentTypeError("empty schedule")
    return out


def parse_floats(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def parse_ints(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def parse_seed(text: str) -> int:
    try:
        seed = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return seed


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage errors count as config errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spfc", description="SAV-BDF2 Fourier solver for the square phase field crystal equation")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="mode", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="flat JSON file with RunConfig fields")
    common.add_argument("--seed", type=parse_seed)
    common.add_argument("--out", dest="output_dir", help="output directory")
    common.add_argument("--n", type=int)
    common.add_argument("--dim", type=int)
    common.add_argument("--length", type=float)
    common.add_argument("--a", type=float)
    common.add_argument("--stabilization", type=float)
    common.add_argument("--dt-schedule", dest="dt_schedule", type=parse_schedule, help='"t_end:dt,t_end:dt"')
    common.add_argument("--snapshot-times", dest="snapshot_times", type=parse_floats, help='"t,t,..."')
    common.add_argument("--trace-cadence", dest="trace_cadence", type=int)

    conv = sub.add_parser("converge", parents=[common], help="temporal convergence study")
    conv.add_argument("--nt-values", dest="nt_values", type=parse_ints, help='"100,200,..."')
    conv.add_argument("--final-time", dest="final_time", type=float)

    sim = sub.add_parser("simulate", parents=[common], help="pattern formation run")
    sim.add_argument("--init-amplitude", dest="init_amplitude", type=float)
    sim.add_argument("--init-mean", dest="init_mean", type=float)
    sim.add_argument("--nucleation", type=float)
    sim.add_argument("--start", choices=("restart", "ghost"))

    ver = sub.add_parser("verify", parents=[common], help="oracle and invariant checks")
    ver.add_argument("--verify-sizes", dest="verify_sizes", type=parse_ints)
    ver.add_argument("--verify-states", dest="verify_states", type=int)
    return parser


_NOT_FIELDS = {"mode", "config", "verbose"}


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    return {k: v for k, v in vars(args).items() if k not in _NOT_FIELDS and v is not None}


def _converge(cfg) -> int:
    result = run_convergence(cfg)
    print(f"{'N_T':>6} {'dt':>12} {'err_l2':>12} {'err_linf':>12}")
    for r in result.rows:
        print(f"{r.n_t:6d} {r.dt:12.4e} {r.err_l2:12.4e} {r.err_linf:12.4e}")
    print(f"slope l2 = {result.slope_l2:.4f}  slope linf = {result.slope_linf:.4f}")
    bad = [r for r in result.rows if not (r.min_lhs_coefficient >= 1.0 and r.min_e_e1 >= cfg.grid().volume)]
    if bad:
        print(f"invariant failure at N_T = {[r.n_t for r in bad]}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def _simulate(cfg) -> int:
    result = run_simulation(cfg)
    print(f"{result.steps} steps, t = {result.state.time:g}")
    print(f"trace: {result.trace_path}")
    for p in result.snapshots:
        print(f"snapshot: {p}")
    for msg in result.failures:
        print(f"invariant failure: {msg}", file=sys.stderr)
    return EXIT_OK if result.ok else EXIT_INVARIANT


def _verify(cfg) -> int:
    report = run_verify(sizes=cfg.verify_sizes, seed=cfg.seed, states=cfg.verify_states)
    for line in report.lines():
        print(line)
    print(f"{len(report.checks) - len(report.failures())}/{len(report.checks)} checks passed in {report.seconds:.2f} s")
    return EXIT_OK if report.ok else EXIT_INVARIANT


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.mode, _overrides(args))
        if args.mode == "converge":
            code = _converge(cfg)
        elif args.mode == "simulate":
            code = _simulate(cfg)
        else:
            code = _verify(cfg)
        if cfg.mode != "verify":
            Path(cfg.output_dir, "config.json").write_text(json.dumps(cfg.to_dict(), indent=2) + "\n", encoding="utf-8")
        return code
    except BlowUpError as exc:
        print(f"spfc: blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except SolverError as exc:
        print(f"spfc: invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ConfigError, PreconditionError, SnapshotFormatError, OSError) as exc:
        print(f"spfc: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
