"""Command-line front end.

  socpack simulate  --out DIR [pack/profile/estimator options]
  socpack verify    TRACE_DIR [--out DIR]
  socpack plot      TRACE_DIR [--out DIR]

Exit codes: 0 success (and all bounds PASS for verify), 2 any bound FAIL,
1 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import analysis, traceio
from .estimator import EstimatorParams, EstimatorState, HybridState, select_tau_d
from .pack import ConfigError, load_pack_json, save_pack_json
from .scenario import PackSpec, generate_pack, pulse_train_profile
from .sim import CurrentProfile, SimulationError, run


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="socpack",
                description="Hybrid min/max SOC estimation for series packs: "
                            "simulate, verify stability bounds, plot")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario and export CSV traces")
    sim.add_argument("--out", required=True, help="output directory")
    pack = sim.add_mutually_exclusive_group()
    pack.add_argument("--pack", help="pack configuration JSON")
    pack.add_argument("--cells", type=int, default=200,
                      help="generate a pack with this many cells (default 200)")
    sim.add_argument("--dispersion", type=float, default=0.10,
                     help="parameter dispersion fraction for generated packs")
    sim.add_argument("--soc0-center", type=float, default=0.5)
    sim.add_argument("--soc0-spread", type=float, default=0.02)
    sim.add_argument("--seed", type=int, default=0)
    prof = sim.add_mutually_exclusive_group()
    prof.add_argument("--profile", help="current profile CSV (t_s,i_pack_a)")
    prof.add_argument("--constant-current", type=float, metavar="A",
                      help="constant pack current in amperes")
    prof.add_argument("--pulse-train", action="store_true",
                      help="synthetic PHEV-like pulse train (default)")
    sim.add_argument("--t-end", type=float, default=600.0)
    sim.add_argument("--h", type=float, default=0.01, help="RK4 step (s)")
    sim.add_argument("--ell", type=float, default=2.0)
    sim.add_argument("--tau-d", default="mean",
                     help="'mean', 'minimax', or an explicit value in seconds")
    sim.add_argument("--epsilon", type=float, default=1e-3)
    sim.add_argument("--mu", type=float, default=0.95)
    sim.add_argument("--mode", choices=("min", "max"), default="min")
    sim.add_argument("--jump-policy", choices=("priority", "boundary"),
                     default="priority")
    sim.add_argument("--sigma0", type=int, default=0,
                     help="initial selected cell (1-based; 0 = 3N/4)")
    sim.add_argument("--soc-hat0", type=float, default=None,
                     help="initial SOC estimate (default 0 for min, 1 for max)")
    sim.add_argument("--auto-init", action="store_true",
                     help="re-initialize soc_hat/sigma from data when q(0,0) "
                          "is outside C u D")

    ver = sub.add_parser("verify", help="re-check every stability bound on an "
                                        "exported trace")
    ver.add_argument("trace_dir")
    ver.add_argument("--out", default=None, help="report directory "
                                                 "(default: the trace dir)")

    plo = sub.add_parser("plot", help="render SVG charts from an exported trace")
    plo.add_argument("trace_dir")
    plo.add_argument("--out", default=None)
    return p


def _cmd_simulate(args) -> int:
    if args.pack:
        cfg, x0 = load_pack_json(args.pack)
    else:
        spec = PackSpec(n_cells=args.cells, dispersion=args.dispersion,
                        soc0_center=args.soc0_center,
                        soc0_spread=args.soc0_spread, seed=args.seed)
        cfg, x0 = generate_pack(spec)
    n = cfg.n_cells
    if args.profile:
        profile = CurrentProfile.from_csv(args.profile)
    elif args.constant_current is not None:
        profile = CurrentProfile.constant(args.constant_current)
    else:
        profile = pulse_train_profile(args.t_end, seed=args.seed + 1)
    params = EstimatorParams(ell=args.ell, tau_d_s=select_tau_d(cfg, args.tau_d),
                             epsilon_v=args.epsilon, mu=args.mu, mode=args.mode,
                             jump_priority=(args.jump_policy == "priority"))
    sigma0 = args.sigma0 if args.sigma0 >= 1 else max(1, int(round(0.75 * n)))
    soc_hat0 = args.soc_hat0
    if soc_hat0 is None:
        soc_hat0 = 0.0 if args.mode == "min" else 1.0
    q0 = HybridState(plant=x0, est=EstimatorState(
        u_bar_rc=0.0, soc_hat=soc_hat0, sigma=sigma0))
    trace = run(cfg, params, q0, profile, args.t_end, args.h, seed=args.seed,
                auto_init=args.auto_init)
    series = analysis.reduce_trace(trace, cfg, params)
    paths = traceio.write_trace_dir(args.out, series)
    save_pack_json(os.path.join(args.out, "pack.json"), cfg, x0)
    profile.to_csv(os.path.join(args.out, "profile.csv"))
    err_end = abs(series.soc_hat[-1] - series.soc_extreme[-1])
    print(f"simulated {n} cells over {args.t_end:g} s "
          f"(h={args.h:g}, seed={args.seed}): {trace.jumps.n_jumps} jumps, "
          f"final |SOC_hat - SOC_{args.mode}| = {100 * err_end:.4f}% SOC")
    print("wrote " + ", ".join(sorted(paths.values())))
    return 0


def _cmd_verify(args) -> int:
    series = traceio.read_series(args.trace_dir)
    report = analysis.verify_series(series)
    out = args.out or args.trace_dir
    paths = traceio.write_report(out, report)
    for c in report.checks:
        status = "PASS" if c.passed else "FAIL"
        extra = f" ({c.note})" if c.note else ""
        print(f"{status} {c.name}: max violation {c.max_violation:.3e} "
              f"over {c.n_checked} samples{extra}")
    print("wrote " + ", ".join(sorted(paths.values())))
    if not report.passed:
        failing = ", ".join(c.name for c in report.checks if not c.passed)
        print(f"FAILED checks: {failing}", file=sys.stderr)
        return 2
    return 0


def _cmd_plot(args) -> int:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    series = traceio.read_series(args.trace_dir)
    out = args.out or args.trace_dir
    os.makedirs(out, exist_ok=True)
    mode = series.meta.get("mode", "min")
    t = series.t
    written = []

    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(t, 100.0 * series.soc_extreme, label=f"true SOC_{mode}", lw=1.2)
    ax.plot(t, 100.0 * series.soc_hat, label="estimate", lw=1.2, ls="--")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("SOC [%]")
    ax.legend()
    ax.set_title(f"Extreme-SOC estimate vs truth ({mode} mode)")
    path = os.path.join(out, "soc_estimate.svg")
    fig.savefig(path)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.semilogy(t, np.maximum(100.0 * np.abs(series.soc_hat - series.soc_extreme),
                              1e-12), lw=1.0)
    ax.set_xlabel("time [s]")
    ax.set_ylabel(f"|SOC_hat - SOC_{mode}| [% SOC]")
    ax.set_title("Estimation error")
    path = os.path.join(out, "estimation_error.svg")
    fig.savefig(path)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.step(t, series.argext, where="post", label=f"true arg{mode} cell", lw=1.0)
    ax.step(t, series.sigma, where="post", label="selected cell sigma",
            lw=1.0, ls="--")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("cell index")
    ax.legend()
    ax.set_title("Selected cell vs the true extreme cell")
    path = os.path.join(out, "sigma_tracking.svg")
    fig.savefig(path)
    plt.close(fig)
    written.append(path)

    print("wrote " + ", ".join(written))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_plot(args)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except (OSError, ValueError, ConfigError, SimulationError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
