"""Command-line entry point (``fadoa``)."""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from ..array_model import AnglePair, ArrayGeometry
from ..errors import FadoaError
from ..fa_pipeline import estimate_fa_doa
from ..subspace import uniform_grid
from .config import ExperimentConfig
from .harness import correlation_map, run_sweep

log = logging.getLogger("fadoa")


def _angle(text: str) -> AnglePair:
    try:
        t, p = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected THETA,PHI in degrees, got {text!r}") from None
    return AnglePair(t, p)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat TOML experiment config")
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--seed", type=int, help="base RNG seed (unsigned 64-bit)")
    p.add_argument("--trials", type=int, help="Monte Carlo trials per sweep point")
    p.add_argument("--methods", help="comma list from fa,music2d,esprit,omp,crlb")
    p.add_argument("--fast", action="store_true", default=None, help="1 degree candidate grid for the FA method")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fadoa", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, var in (("sweep-snr", "snr_db"), ("sweep-snapshots", "snapshots")):
        p = sub.add_parser(name, help=f"RMSE/PoSR versus {var}")
        _common(p)
        p.add_argument("--values", help="comma list overriding the sweep values")
        p.add_argument("--trials-out", help="also write per-trial records here")
        p.add_argument("--timing", action="store_true", default=None, help="record mean runtime per trial")
        p.set_defaults(sweep_var=var)

    p = sub.add_parser("correlation-map", help="steering-vector correlation over an angle grid")
    _common(p)
    p.add_argument("--true-angle", type=_angle, default=AnglePair(86, 86), metavar="THETA,PHI")
    p.add_argument("--size", type=int, nargs=2, default=(10, 10), metavar=("NX", "NZ"))
    p.add_argument("--step", type=float, default=0.5, help="grid step in degrees")

    p = sub.add_parser("single-run", help="one scenario with a per-configuration trace")
    _common(p)
    p.add_argument("--snr", type=float)
    p.add_argument("--snapshots", type=int)

    sub.add_parser("selftest", help="run the built-in property checks")
    return parser


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    changes = dict(out=args.out, seed=args.seed, trials=args.trials, fast=args.fast)
    if args.methods:
        changes["methods"] = tuple(m for m in args.methods.split(",") if m)
    if getattr(args, "sweep_var", None):
        changes["sweep_var"] = args.sweep_var
        changes["trials_out"] = args.trials_out
        changes["timing"] = args.timing
        if args.values:
            key = "snr_values" if args.sweep_var == "snr_db" else "snapshot_values"
            changes[key] = tuple(float(v) for v in args.values.split(","))
    if getattr(args, "snr", None) is not None:
        changes["snr_db"] = args.snr
    if getattr(args, "snapshots", None) is not None:
        changes["snapshots"] = args.snapshots
    try:
        return cfg.replace(**changes)
    except (TypeError, ValueError) as exc:
        raise FadoaError(str(exc)) from exc


def cmd_sweep(args) -> int:
    cfg = _config(args)
    table = run_sweep(cfg, progress=lambda row: log.info("%s", row.to_csv()))
    if not cfg.out:
        sys.stdout.write(table.to_csv())
    return 0


def cmd_correlation_map(args) -> int:
    geometry = ArrayGeometry(*args.size)
    grid = uniform_grid(0.0, 90.0, args.step)
    eta = correlation_map(args.true_angle, geometry, grid, grid, args.out)
    if not args.out:
        tt, pp = np.meshgrid(grid, grid, indexing="ij")
        print("theta_deg,phi_deg,eta")
        for t, p, e in zip(tt.ravel(), pp.ravel(), eta.ravel()):
            print(f"{t:.6f},{p:.6f},{e:.9f}")
    return 0


def cmd_single_run(args) -> int:
    cfg = _config(args)
    scenario = cfg.scenario()
    geometry = cfg.geometry()
    est = estimate_fa_doa(scenario, geometry, cfg.virtual_angle(), params=cfg.search_params())
    print(f"sources: {', '.join(map(str, scenario.sources))}  snr={scenario.snr_db:g} dB  T={scenario.snapshots}")
    print(f"virtual angle: {est.virtual_angle}")
    for peak in est.prescan:
        print(f"prescan peak {peak.angle}{'  [end-fire]' if peak.end_fire else ''}")
    print("k,candidate_theta,candidate_phi,peak_theta,peak_phi,epsilon_deg")
    by_k = {e.k: e for e in est.trajectory}
    for s in est.scores:
        c = by_k[s.k].candidate_true_angle
        print(
            f"{s.k},{c.theta_deg:.3f},{c.phi_deg:.3f},"
            f"{s.measured_peak.theta_deg:.4f},{s.measured_peak.phi_deg:.4f},{s.epsilon:.6f}"
        )
    print(f"estimates: {', '.join(map(str, est.estimates))}" + ("  (padded)" if est.padded else ""))
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    return 0 if run_selftest() else 1


COMMANDS = {
    "sweep-snr": cmd_sweep,
    "sweep-snapshots": cmd_sweep,
    "correlation-map": cmd_correlation_map,
    "single-run": cmd_single_run,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (FadoaError, ValueError, OSError) as exc:
        print(f"fadoa: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
