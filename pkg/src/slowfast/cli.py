"""Command-line front end.

Exit codes: 0 success, 1 configuration or I/O error, 2 numerical failure
beyond the exclusion budget, 3 verification-suite failure. Seed precedence:
--seed flag, then the SLOWFAST_SEED environment variable, then the config key
experiment.seed.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import config as cfg
from . import harness
from .averaging import estimate_averaged_drift, write_drift_cache
from .errors import ConfigurationError, NumericalFailure
from .integrator import StreamSet, simulate_coupled

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_VERIFY = 3


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 1, not argparse's 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"config error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="slowfast",
        description="Spectral-Galerkin simulator and verification harness for "
                    "slow-fast stochastic reaction-diffusion systems with jumps.",
        epilog=cfg.config_reference() + "\n\nseed precedence: --seed > "
               "SLOWFAST_SEED > experiment.seed",
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)
    for name, help_text in (
            ("simulate", "run coupled trajectories, write trajectory CSVs"),
            ("average", "estimate the averaged drift at the initial state, "
                        "write the drift-cache CSV"),
            ("converge", "run the scale-grid convergence study, write the "
                         "report CSV/SVG/PNG"),
            ("verify", "run the statistical lemma checks")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the TOML config")
        p.add_argument("--threads", type=int, default=1,
                       help="worker processes for replica-level parallelism "
                            "(results are independent of this)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the master seed (decimal unsigned 64-bit)")
        p.add_argument("--output", default=None,
                       help="override experiment.output_dir")
        if name == "verify":
            p.add_argument("--select", default=None,
                           help="comma-separated subset of checks: "
                                + ",".join(cfg.VERIFY_CHECKS))
    return parser


def dispatch(command: str, rc: cfg.RunConfig, threads: int = 1,
             select: str | None = None) -> int:
    out_dir = rc.output_dir
    os.makedirs(out_dir, exist_ok=True)
    if command == "simulate":
        return _cmd_simulate(rc, out_dir)
    if command == "average":
        return _cmd_average(rc, out_dir)
    if command == "converge":
        return _cmd_converge(rc, out_dir, threads)
    if command == "verify":
        return _cmd_verify(rc, out_dir, select)
    raise ConfigurationError(f"unknown subcommand {command!r}")


def _cmd_simulate(rc: cfg.RunConfig, out_dir: str) -> int:
    dyn = cfg.build_dynamics(rc)
    save_modes = rc["simulation.save_modes"]
    for j, eps in enumerate(rc["simulation.epsilons"]):
        sim = cfg.build_sim_config(rc, dyn, eps)
        for r in range(rc["simulation.n_trajectories"]):
            rec = simulate_coupled(dyn, sim, StreamSet(rc.seed, r, j))
            stem = f"trajectory_eps{eps:g}_rep{r:03d}"
            harness.write_trajectory_csv(
                rec, os.path.join(out_dir, stem + ".csv"), save_modes)
            harness.write_trajectory_figure(
                rec, os.path.join(out_dir, "fig_" + stem + ".png"),
                title=f"epsilon = {eps:g}, replica {r}")
            print(f"wrote {stem}.csv (jumps: slow {rec.diagnostics['jumps1']}, "
                  f"fast {rec.diagnostics['jumps2']})")
    return EXIT_OK


def _cmd_average(rc: cfg.RunConfig, out_dir: str) -> int:
    dyn = cfg.build_dynamics(rc)
    dyn.require_averaging_margin()
    opts = cfg.build_averaging_options(rc, dyn)
    x = cfg.initial_field(rc["simulation.initial_u"], dyn.basis.n_modes,
                          "simulation.initial_u")
    est = estimate_averaged_drift(dyn, x, t0=0.0, t_avg=opts.t_avg,
                                  t_burn=opts.t_burn, dt=opts.dt,
                                  seed=rc.seed, n_batches=opts.n_batches)
    path = os.path.join(out_dir, "averaged_drift.csv")
    write_drift_cache(path, [est])
    _drift_figure(est, os.path.join(out_dir, "fig_averaged_drift.png"))
    print(f"averaged drift at x (modes): {est.value.coeffs}")
    print(f"stderr: {est.stderr:.3g}   window: {est.t_avg:g}   wrote {path}")
    return EXIT_OK


def _drift_figure(est, path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    k = np.arange(1, len(est.value) + 1)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(k - 0.18, est.x.coeffs, width=0.36, label="x")
    ax.bar(k + 0.18, est.value.coeffs, width=0.36, label="averaged drift")
    ax.set_xlabel("mode")
    ax.set_ylabel("coefficient")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def _cmd_converge(rc: cfg.RunConfig, out_dir: str, threads: int) -> int:
    report = harness.convergence_experiment(rc, threads=threads)
    csv_path = harness.emit_report(report, "csv",
                                   os.path.join(out_dir, "report.csv"))
    harness.emit_report(report, "svg-plot", os.path.join(out_dir, "report.svg"))
    harness.emit_report_figure(report, os.path.join(out_dir, "fig_report.png"))
    harness.write_diagnostics(report, os.path.join(out_dir, "diagnostics.json"))
    for i, eps in enumerate(report.epsilons):
        print(f"epsilon={eps:<8g} E sup diff = {report.e_sup_diff[i]:.6g} "
              f"(se {report.stderrs[i]:.2g})   P(> {report.eta:g}) = "
              f"{report.p_exceed[i]:.4g}")
    print(f"wrote {csv_path}")
    return EXIT_OK


def _cmd_verify(rc: cfg.RunConfig, out_dir: str, select: str | None) -> int:
    selection = None
    if select:
        selection = tuple(s.strip() for s in select.split(",") if s.strip())
    results = harness.verify_lemmas(rc, selection)
    print(harness.format_verify_table(results))
    harness.write_verify_csv(results, os.path.join(out_dir, "verify.csv"))
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rc = cfg.parse_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigurationError("--seed out of unsigned 64-bit range")
            rc = rc.with_seed(args.seed)
        if args.output is not None:
            rc = rc.with_output_dir(args.output)
        if args.threads < 1:
            raise ConfigurationError("--threads must be >= 1")
        return dispatch(args.command, rc, threads=args.threads,
                        select=getattr(args, "select", None))
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
