"""Command-line front end.

    aniso run <scenario.toml> [--set key=value]... [--out ROOT]
    aniso sweep <matrix.toml> [--workers W] [--out ROOT]
    aniso verify <suite> [--out ROOT]
    aniso twin <scenario.toml> --amps 1e-2,1e-3,1e-4 [--set ...] [--out ROOT]

Exit codes: 0 completed, 1 configuration error, 2 blow-up detected.
The ANISO_OUT environment variable supplies the default output root.
"""

from __future__ import annotations

import argparse
import json
import sys

from .integrate import BlowUpError
from .runner import execute, output_root, sweep, twin_run
from .scenarios import ScenarioError, load_scenario, load_toml
from .verify import run_suite

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BLOWUP = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aniso",
        description="Pseudo-spectral runs of the 2D Boussinesq system with "
        "direction-selective dissipation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one scenario")
    p_run.add_argument("scenario", help="scenario TOML file")
    p_run.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    p_run.add_argument("--out", default=None, help="output root (default: $ANISO_OUT or cwd)")

    p_sweep = sub.add_parser("sweep", help="run a scenario/parameter matrix")
    p_sweep.add_argument("matrix", help="matrix TOML file")
    p_sweep.add_argument("--workers", type=int, default=None)
    p_sweep.add_argument("--out", default=None)

    p_verify = sub.add_parser("verify", help="run a module property suite")
    p_verify.add_argument("suite", help="spectral|model|integration|norms|diagnostics|all")
    p_verify.add_argument("--out", default=None)

    p_twin = sub.add_parser("twin", help="continuous-dependence twin runs")
    p_twin.add_argument("scenario")
    p_twin.add_argument("--amps", required=True, help="comma-separated perturbation amplitudes")
    p_twin.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    p_twin.add_argument("--pert-seed", type=int, default=None)
    p_twin.add_argument("--out", default=None)

    return parser


def _load(path, overrides):
    try:
        return load_scenario(path, overrides)
    except ScenarioError:
        raise
    except FileNotFoundError:
        raise ScenarioError(str(path), "scenario file not found") from None
    except Exception as exc:  # malformed TOML and friends
        raise ScenarioError(str(path), f"cannot parse scenario: {exc}") from None


def _cmd_run(args) -> int:
    scenario = _load(args.scenario, args.overrides)
    outcome = execute(scenario, output_root(args.out))
    info = {
        "name": scenario.name,
        "exit_code": outcome.exit_code,
        "verdicts": outcome.verdicts,
    }
    print(json.dumps(info, sort_keys=True, default=str))
    return outcome.exit_code


def _cmd_sweep(args) -> int:
    try:
        matrix = load_toml(args.matrix)
    except FileNotFoundError:
        raise ScenarioError(args.matrix, "matrix file not found") from None
    except Exception as exc:
        raise ScenarioError(args.matrix, f"cannot parse matrix: {exc}") from None
    rows = sweep(matrix, output_root(args.out), args.workers)
    print(f"sweep complete: {len(rows)} cells")
    return EXIT_OK


def _cmd_verify(args) -> int:
    out_dir = output_root(args.out) / "verify"
    try:
        results = run_suite(args.suite, out_dir)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    payload = {
        "suite": args.suite,
        "checks": [{"name": r.name, "passed": r.passed, "detail": r.detail} for r in results],
        "passed": all(r.passed for r in results),
    }
    print(json.dumps(payload, sort_keys=True))
    return EXIT_OK if payload["passed"] else EXIT_CONFIG


def _cmd_twin(args) -> int:
    scenario = _load(args.scenario, args.overrides)
    try:
        amps = [float(a) for a in args.amps.split(",") if a]
    except ValueError:
        raise ScenarioError("--amps", f"cannot parse amplitude list {args.amps!r}") from None
    if not amps:
        raise ScenarioError("--amps", "need at least one amplitude")
    rows = twin_run(scenario, amps, pert_seed=args.pert_seed, out_root=output_root(args.out))
    ratios = [r["ratio"] for r in rows if r["ratio"] > 0]
    info = {
        "name": scenario.name,
        "rows": rows,
        "ratio_spread": (max(ratios) / min(ratios)) if ratios else 0.0,
    }
    print(json.dumps(info, sort_keys=True))
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "sweep": _cmd_sweep, "verify": _cmd_verify, "twin": _cmd_twin}
    try:
        return handlers[args.command](args)
    except ScenarioError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as exc:
        print(f"{exc}", file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":
    sys.exit(main())
