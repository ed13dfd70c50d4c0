"""Experiment orchestration: the convergence study over a scale grid, the
statistical lemma checks, and report emission (CSV, SVG, PNG figures).

The convergence study couples every true pair to the averaged equation
through shared slow-channel noise per replica (common random numbers), which
turns per-replica sup differences into paired comparisons. Replicas map to
streams by index, so the parallel degree cannot change any result; reduction
runs in replica order.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import config as cfg
from .averaging import solve_averaged
from .errors import ConfigurationError, NumericalFailure
from .integrator import (StreamSet, TrajectoryRecord, frozen_fast,
                         khasminskii_auxiliary, holder_increment_stats,
                         simulate_coupled)
from .noise import (RandomStream, check_a2_admissibility,
                    sample_jump_batch, sample_wiener_increment,
                    compensated_jump_integral)
from .spectral import FieldVector

MAX_FAILURE_FRACTION = 0.05


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


@dataclass
class ConvergenceReport:
    epsilons: list
    e_sup_diff: list
    stderrs: list
    p_exceed: list
    p_stderrs: list
    eta: float
    n_replicas: int
    wall_times: list
    diagnostics: dict = field(default_factory=dict)


@dataclass
class VerifySuiteResult:
    name: str
    statistic: float
    threshold: float
    passed: bool
    details: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# convergence experiment

_WORKER: dict = {}


def _init_worker(rc: cfg.RunConfig):
    _WORKER["rc"] = rc
    _WORKER["dyn"] = cfg.build_dynamics(rc)


def _replica_task(replica: int) -> dict:
    return _run_replica(_WORKER["rc"], _WORKER["dyn"], replica)


def _run_replica(rc: cfg.RunConfig, dyn, replica: int) -> dict:
    """One replica: averaged path once, then each true pair against it."""
    seed = rc.seed
    epsilons = rc["simulation.epsilons"]
    t_end = rc["simulation.t_end"]
    dt_slow = rc["simulation.dt_slow"]
    initial_u = cfg.initial_field(rc["simulation.initial_u"], dyn.basis.n_modes,
                                  "simulation.initial_u")
    opts = cfg.build_averaging_options(rc, dyn)
    out = {"replica": replica, "sup": {}, "wall": {}, "failed": {}, "jumps": 0}
    try:
        ubar = solve_averaged(dyn, t_end, dt_slow, initial_u,
                              StreamSet(seed, replica), opts)
    except NumericalFailure as exc:
        for eps in epsilons:
            out["failed"][eps] = f"averaged solve: {exc}"
        return out
    for j, eps in enumerate(epsilons):
        sim = cfg.build_sim_config(rc, dyn, eps)
        start = time.perf_counter()
        try:
            rec = simulate_coupled(dyn, sim, StreamSet(seed, replica, j))
        except NumericalFailure as exc:
            out["failed"][eps] = str(exc)
            continue
        out["wall"][eps] = time.perf_counter() - start
        diffs = np.linalg.norm(rec.u_path - ubar.u_path, axis=1)
        out["sup"][eps] = float(diffs.max())
        out["jumps"] += rec.diagnostics["jumps1"] + rec.diagnostics["jumps2"]
    return out


def convergence_experiment(rc: cfg.RunConfig, threads: int = 1) -> ConvergenceReport:
    """Estimate E sup ||u_eps - ubar|| and the exceedance probability per
    scale parameter over coupled Monte Carlo replicas.

    Failed replicas are excluded with accounting; more than 5% failures for
    any scale parameter fails the whole experiment.
    """
    dyn = cfg.build_dynamics(rc)
    dyn.require_averaging_margin()
    n_replicas = rc["experiment.n_replicas"]
    eta = rc["experiment.eta"]
    epsilons = sorted(rc["simulation.epsilons"], reverse=True)
    record_wall = rc["experiment.record_wall_times"]

    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads, initializer=_init_worker,
                                 initargs=(rc,)) as pool:
            results = list(pool.map(_replica_task, range(n_replicas)))
    else:
        results = [_run_replica(rc, dyn, r) for r in range(n_replicas)]
    results.sort(key=lambda r: r["replica"])

    e_sup, stderrs, p_exc, p_se, walls = [], [], [], [], []
    used, failed = {}, {}
    sups_by_eps = {}
    for eps in epsilons:
        sups = [r["sup"][eps] for r in results if eps in r["sup"]]
        n_failed = sum(1 for r in results if eps in r["failed"])
        used[eps] = len(sups)
        failed[eps] = n_failed
        if n_failed > MAX_FAILURE_FRACTION * n_replicas:
            raise NumericalFailure(
                f"{n_failed}/{n_replicas} replicas failed at epsilon={eps}, "
                f"exceeding the {MAX_FAILURE_FRACTION:.0%} exclusion budget")
        arr = np.asarray(sups)
        sups_by_eps[eps] = arr
        e_sup.append(float(arr.mean()))
        stderrs.append(float(arr.std(ddof=1) / math.sqrt(arr.size)))
        p = float(np.mean(arr > eta))
        p_exc.append(p)
        p_se.append(math.sqrt(p * (1.0 - p) / arr.size))
        if record_wall:
            walls.append(float(sum(r["wall"].get(eps, 0.0) for r in results)))
        else:
            walls.append(float("nan"))

    # one-sided paired comparisons across adjacent scales (shared slow noise)
    paired = []
    for a, b in zip(epsilons, epsilons[1:]):
        ok = [r for r in results if a in r["sup"] and b in r["sup"]]
        d = np.asarray([r["sup"][a] - r["sup"][b] for r in ok])
        paired.append({
            "eps_high": a, "eps_low": b,
            "mean_decrease": float(d.mean()),
            "stderr": float(d.std(ddof=1) / math.sqrt(d.size)) if d.size > 1 else 0.0,
        })

    diagnostics = {
        "attempted": {str(e): n_replicas for e in epsilons},
        "used": {str(e): used[e] for e in epsilons},
        "failed": {str(e): failed[e] for e in epsilons},
        "paired": paired,
        "seed": rc.seed,
    }
    return ConvergenceReport(
        epsilons=list(epsilons), e_sup_diff=e_sup, stderrs=stderrs,
        p_exceed=p_exc, p_stderrs=p_se, eta=eta, n_replicas=n_replicas,
        wall_times=walls, diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# report emission

REPORT_HEADER = "epsilon,e_sup_diff,stderr,p_exceed,p_stderr,wall_time_s"


def emit_report(report: ConvergenceReport, fmt: str, path: str) -> str:
    """Write the convergence report as `csv` or `svg-plot`; returns the path."""
    if fmt == "csv":
        lines = [REPORT_HEADER]
        for i, eps in enumerate(report.epsilons):
            lines.append(",".join(_fmt(x) for x in (
                eps, report.e_sup_diff[i], report.stderrs[i],
                report.p_exceed[i], report.p_stderrs[i], report.wall_times[i])))
        try:
            with open(path, "w", newline="") as fh:
                fh.write("\n".join(lines) + "\n")
        except OSError as exc:
            raise ConfigurationError(f"cannot write report: {exc}")
        return path
    if fmt == "svg-plot":
        try:
            with open(path, "w") as fh:
                fh.write(_report_svg(report))
        except OSError as exc:
            raise ConfigurationError(f"cannot write report: {exc}")
        return path
    raise ConfigurationError(f"unknown report format {fmt!r}; use csv or svg-plot")


def _report_svg(report: ConvergenceReport) -> str:
    """Log-log line plot of e_sup_diff vs epsilon; one polyline per series."""
    width, height, margin = 640, 480, 60
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
             f'y2="{height - margin}" stroke="black"/>',
             f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
             f'y2="{height - margin}" stroke="black"/>',
             f'<text x="{width // 2}" y="{height - margin // 4}" '
             f'text-anchor="middle" font-size="14">epsilon (log)</text>',
             f'<text x="{margin // 4}" y="{height // 2}" font-size="14" '
             f'transform="rotate(-90 {margin // 4} {height // 2})" '
             f'text-anchor="middle">E sup ||u_eps - ubar|| (log)</text>']
    pts = [(e, v) for e, v in zip(report.epsilons, report.e_sup_diff)
           if e > 0 and v > 0]
    if pts:
        lx = [math.log10(e) for e, _ in pts]
        ly = [math.log10(v) for _, v in pts]
        x0, x1 = min(lx), max(lx)
        y0, y1 = min(ly), max(ly)
        xspan = (x1 - x0) or 1.0
        yspan = (y1 - y0) or 1.0

        def sx(x):
            return margin + (x - x0) / xspan * (width - 2 * margin)

        def sy(y):
            return height - margin - (y - y0) / yspan * (height - 2 * margin)

        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(lx, ly))
        parts.append(f'<polyline points="{coords}" fill="none" '
                     f'stroke="steelblue" stroke-width="2"/>')
        for x, y, (e, v) in zip(lx, ly, pts):
            parts.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" '
                         f'fill="steelblue"/>')
            parts.append(f'<text x="{sx(x):.2f}" y="{sy(y) - 8:.2f}" '
                         f'font-size="11" text-anchor="middle">'
                         f'eps={e:g}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_report_figure(report: ConvergenceReport, path: str) -> str:
    """Matplotlib companion figure (PNG) of the convergence report."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    eps = np.asarray(report.epsilons)
    ax1.errorbar(eps, report.e_sup_diff, yerr=report.stderrs, marker="o",
                 capsize=3)
    ax1.set_xscale("log")
    ax1.set_yscale("log")
    ax1.set_xlabel("epsilon")
    ax1.set_ylabel("E sup ||u_eps - ubar||")
    ax1.set_title("coupled sup difference")
    ax1.grid(True, which="both", alpha=0.3)
    ax2.errorbar(eps, report.p_exceed, yerr=report.p_stderrs, marker="s",
                 color="firebrick", capsize=3)
    ax2.set_xscale("log")
    ax2.axhline(0.05, color="gray", ls="--", lw=1)
    ax2.set_xlabel("epsilon")
    ax2.set_ylabel(f"P(sup > {report.eta:g})")
    ax2.set_title("exceedance probability")
    ax2.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def write_trajectory_csv(record: TrajectoryRecord, path: str,
                         save_modes: bool = True) -> str:
    """Trajectory CSV: t, ||u||, ||v||, then optional per-mode columns."""
    u = record.u_path
    v = record.v_path
    n = (u.shape[1] if u is not None else v.shape[1])
    header = ["t", "||u||", "||v||"]
    if save_modes:
        if u is not None:
            header += [f"u_{k}" for k in range(1, n + 1)]
        if v is not None:
            header += [f"v_{k}" for k in range(1, n + 1)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i, t in enumerate(record.times):
            row = [_fmt(t),
                   _fmt(np.linalg.norm(u[i])) if u is not None else _fmt(float("nan")),
                   _fmt(np.linalg.norm(v[i])) if v is not None else _fmt(float("nan"))]
            if save_modes:
                if u is not None:
                    row += [_fmt(x) for x in u[i]]
                if v is not None:
                    row += [_fmt(x) for x in v[i]]
            w.writerow(row)
    return path


def write_trajectory_figure(record: TrajectoryRecord, path: str,
                            title: str = "") -> str:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4))
    if record.u_path is not None:
        ax.plot(record.times, np.linalg.norm(record.u_path, axis=1),
                label="||u(t)||")
    if record.v_path is not None:
        ax.plot(record.times, np.linalg.norm(record.v_path, axis=1),
                label="||v(t)||", alpha=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("L2 norm")
    if title:
        ax.set_title(title)
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def write_diagnostics(report: ConvergenceReport, path: str) -> str:
    with open(path, "w") as fh:
        json.dump(report.diagnostics, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# ---------------------------------------------------------------------------
# lemma verification suite

def verify_lemmas(rc: cfg.RunConfig, selection=None) -> list[VerifySuiteResult]:
    """Run the selected statistical checks; failures are results, not errors."""
    dyn = cfg.build_dynamics(rc)
    selection = tuple(selection) if selection else rc["verify.selection"]
    for name in selection:
        if name not in cfg.VERIFY_CHECKS:
            raise ConfigurationError(f"unknown check {name!r}",
                                     key_path="verify.selection")
    runners = {
        "a2": _check_a2,
        "wiener-cov": _check_wiener_cov,
        "martingale": _check_martingale,
        "mixing": _check_mixing,
        "holder": _check_holder,
        "auxiliary": _check_auxiliary,
    }
    results = []
    moment_results = None
    for name in cfg.VERIFY_CHECKS:
        if name not in selection:
            continue
        if name in ("moments", "fast-moment"):
            # both read the same Monte Carlo sweep; run it once
            if moment_results is None:
                moment_results = _moment_suite(rc, dyn)
            results.append(moment_results[name])
        else:
            results.extend(runners[name](rc, dyn))
    return results


def _check_a2(rc, dyn):
    out = []
    for channel, spec in ((1, dyn.wiener_slow), (2, dyn.wiener_fast)):
        rep = check_a2_admissibility(spec, dyn.basis)
        out.append(VerifySuiteResult(
            name=f"a2-channel{channel}", statistic=rep.ratio, threshold=1.0,
            passed=rep.admissible,
            details={"kappa": rep.kappa, "zeta": rep.zeta,
                     "n_modes": rep.n_modes}))
    return out


def _check_wiener_cov(rc, dyn):
    n_samples = rc["verify.n_samples"]
    dt = 0.25
    gen = RandomStream(rc.seed, 0, "W2", 99).generator()
    lam = dyn.wiener_fast.q_eigenvalues
    live = lam > 0
    incs = np.empty((n_samples, lam.size))
    for i in range(n_samples):
        incs[i] = sample_wiener_increment(dyn.wiener_fast, gen, dt).coeffs
    emp = incs.var(axis=0, ddof=1)
    target = lam ** 2 * dt
    rel = np.abs(emp[live] - target[live]) / target[live]
    stat = float(rel.max()) if live.any() else 0.0
    return [VerifySuiteResult(
        name="wiener-cov", statistic=stat, threshold=0.05, passed=stat <= 0.05,
        details={"n_samples": n_samples, "dt": dt,
                 "worst_mode": int(np.argmax(rel) + 1) if live.any() else 0})]


def _check_martingale(rc, dyn):
    """Mean of the compensated fast jump increment over many steps."""
    n_steps = min(rc["verify.n_samples"], 100000)
    dt, eps = 0.05, 0.5
    gen = RandomStream(rc.seed, 1, "N2", 99).generator()
    basis = dyn.basis
    u = FieldVector.unit(basis.n_modes, 1)
    v = FieldVector.unit(basis.n_modes, 1, 0.5)
    levy = dyn.levy_fast
    if levy.total_mass == 0:
        return [VerifySuiteResult("martingale", 0.0, 3.0, True,
                                  {"note": "no jump activity configured"})]
    acc = np.zeros(basis.n_modes)
    acc2 = np.zeros(basis.n_modes)
    for _ in range(n_steps):
        jumps = sample_jump_batch(levy, gen, dt, 1.0 / eps)
        inc = compensated_jump_integral(levy, jumps, dyn.cset, basis, 0.0,
                                        u, v, dt, 1.0 / eps).coeffs
        acc += inc
        acc2 += inc ** 2
    mean = acc / n_steps
    var = np.maximum(acc2 / n_steps - mean ** 2, 1e-300)
    se = np.sqrt(var / n_steps)
    stat = float(np.max(np.abs(mean) / se))
    return [VerifySuiteResult(
        name="martingale", statistic=stat, threshold=3.0, passed=stat <= 3.0,
        details={"n_steps": n_steps, "dt": dt, "epsilon": eps})]


def _mixing_pairs(rc, dyn, horizon, dt, n_pairs):
    """Coupled frozen-fast pairs from distinct starts, shared streams."""
    basis = dyn.basis
    x = cfg.initial_field(rc["simulation.initial_u"], basis.n_modes, "")
    y1 = FieldVector.zeros(basis.n_modes)
    y2 = FieldVector.unit(basis.n_modes, 1)
    n_steps = int(round(horizon / dt))
    diffs = np.zeros((n_pairs, n_steps + 1))
    for i in range(n_pairs):
        recs = []
        for y in (y1, y2):
            gw = RandomStream(rc.seed, i, "PW2", 7).generator()
            gn = RandomStream(rc.seed, i, "PN2", 7).generator()
            recs.append(frozen_fast(dyn, x, y, 0.0, n_steps * dt, dt, gw, gn))
        diffs[i] = np.linalg.norm(recs[0].v_path - recs[1].v_path, axis=1)
    return recs[0].times, diffs


def _check_mixing(rc, dyn):
    """Log-linear fit of the coupled-pair decay; slope must reach 75% of the
    declared margin alpha - L_b2 with a clean fit."""
    dyn.require_mixing()
    horizon = rc["verify.mixing_horizon"]
    n_pairs = rc["verify.mixing_pairs"]
    dt = dyn.fast_step_guard(1.0)
    n_steps = max(8, int(math.ceil(horizon / dt)))
    dt = horizon / n_steps
    times, diffs = _mixing_pairs(rc, dyn, horizon, dt, n_pairs)
    mean = diffs.mean(axis=0)
    keep = mean > 1e-14
    tt, yy = times[keep], np.log(mean[keep])
    slope, intercept = np.polyfit(tt, yy, 1)
    fitted = slope * tt + intercept
    ss_res = float(np.sum((yy - fitted) ** 2))
    ss_tot = float(np.sum((yy - yy.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    target = -0.75 * (dyn.alpha - dyn.cset.lipschitz.b2)
    passed = slope <= target and r2 >= 0.95
    return [VerifySuiteResult(
        name="mixing", statistic=float(slope), threshold=float(target),
        passed=passed,
        details={"r_squared": r2, "alpha": dyn.alpha,
                 "lipschitz_b2": dyn.cset.lipschitz.b2, "horizon": horizon})]


def _moment_runs(rc, dyn, epsilons):
    n_rep = rc["verify.n_replicas"]
    sup2 = {eps: [] for eps in epsilons}
    vbar = {eps: [] for eps in epsilons}
    for j, eps in enumerate(epsilons):
        sim = cfg.build_sim_config(rc, dyn, eps)
        for r in range(n_rep):
            rec = simulate_coupled(dyn, sim, StreamSet(rc.seed, r, 100 + j),
                                   record_modes=True)
            sup2[eps].append(rec.sup_norm_u ** 2)
            vbar[eps].append(float(np.mean(np.sum(rec.v_path ** 2, axis=1))))
    return sup2, vbar


def _moment_suite(rc, dyn) -> dict:
    epsilons = rc["verify.epsilons"]
    sup2, vbar = _moment_runs(rc, dyn, epsilons)
    means = [float(np.mean(sup2[eps])) for eps in epsilons]
    stat = max(means) / min(means)
    moments = VerifySuiteResult(
        name="moments", statistic=float(stat), threshold=2.0,
        passed=stat <= 2.0,
        details={"e_sup_u_sq": {str(e): m for e, m in zip(epsilons, means)},
                 "n_replicas": rc["verify.n_replicas"]})
    x = cfg.initial_field(rc["simulation.initial_u"], dyn.basis.n_modes, "")
    y = cfg.initial_field(rc["simulation.initial_v"], dyn.basis.n_modes, "")
    scale = 1.0 + x.norm() ** 2 + y.norm() ** 2
    cs = {str(eps): float(np.mean(vbar[eps])) / scale for eps in epsilons}
    cstat = max(cs.values())
    fast = VerifySuiteResult(
        name="fast-moment", statistic=float(cstat), threshold=float("inf"),
        passed=math.isfinite(cstat),
        details={"c_per_epsilon": cs,
                 "bound_form": "time-avg E||v||^2 <= c (1 + ||x||^2 + ||y||^2)"})
    return {"moments": moments, "fast-moment": fast}


def _check_holder(rc, dyn):
    n_rep = min(rc["verify.n_replicas"], 64)
    eps = max(rc["simulation.epsilons"])
    sim = cfg.build_sim_config(rc, dyn, eps)
    lags = [h for h in rc["verify.lags"]]
    if not lags:
        lags = [f * sim.t_end for f in (0.0, 0.125, 0.25, 0.5)]
    # align lags to the slow grid
    lags = sorted({round(h / sim.dt_slow) * sim.dt_slow for h in lags})
    records = [simulate_coupled(dyn, sim, StreamSet(rc.seed, r, 200))
               for r in range(n_rep)]
    rows = holder_increment_stats(records, lags)
    vals = [v for _, v in rows]
    worst = 0.0
    for i in range(1, len(vals)):
        # monotone nondecreasing within statistical noise
        drop = vals[i - 1] - vals[i]
        scale = max(vals[i - 1], 1e-300) / math.sqrt(n_rep)
        worst = max(worst, drop / scale)
    return [VerifySuiteResult(
        name="holder", statistic=float(worst), threshold=3.0,
        passed=worst <= 3.0,
        details={"table": {f"{h:g}": v for h, v in rows}})]


def _check_auxiliary(rc, dyn):
    """Coupled auxiliary-vs-true fast deviation must shrink with epsilon."""
    eps_grid = sorted((e for e in rc["simulation.epsilons"] if e < 1.0),
                      reverse=True)
    if len(eps_grid) < 2:
        eps_grid = [0.2, 0.05]
    kappa = rc["simulation.kappa"]
    n_rep = rc["verify.n_replicas"]
    means, ses = [], []
    for j, eps in enumerate(eps_grid):
        sim = cfg.build_sim_config(rc, dyn, eps)
        devs = np.empty(n_rep)
        for r in range(n_rep):
            streams = StreamSet(rc.seed, r, 300 + j)
            rec = simulate_coupled(dyn, sim, streams)
            aux = khasminskii_auxiliary(dyn, rec, sim, streams, kappa=kappa)
            devs[r] = float(np.linalg.norm(aux.v_path[-1] - rec.v_path[-1]))
        means.append(float(devs.mean()))
        ses.append(float(devs.std(ddof=1) / math.sqrt(n_rep)))
    drops = []
    for i in range(1, len(means)):
        se = math.hypot(ses[i - 1], ses[i])
        drops.append((means[i - 1] - means[i]) / se if se > 0 else math.inf)
    stat = min(drops)
    return [VerifySuiteResult(
        name="auxiliary", statistic=float(stat), threshold=1.0,
        passed=stat > 1.0,
        details={"epsilons": eps_grid, "means": means, "stderrs": ses,
                 "kappa": kappa})]


def write_verify_csv(results: list[VerifySuiteResult], path: str) -> str:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["check", "statistic", "threshold", "pass"])
        for res in results:
            w.writerow([res.name, _fmt(res.statistic), _fmt(res.threshold),
                        "pass" if res.passed else "fail"])
    return path


def format_verify_table(results: list[VerifySuiteResult]) -> str:
    lines = [f"{'check':<16} {'statistic':>14} {'threshold':>14} result"]
    for res in results:
        lines.append(f"{res.name:<16} {res.statistic:>14.6g} "
                     f"{res.threshold:>14.6g} "
                     f"{'pass' if res.passed else 'FAIL'}")
    return "\n".join(lines)
