"""Quasi-stationary statistics of the frozen fast equation and the averaged
slow equation built from them.

The averaged drift at a point x is the long-run time average of the slow
reaction term evaluated along one frozen-fast trajectory; the error of that
estimator decays like 1/T plus an almost-periodicity remainder, so a single
long window with batch-mean error bars is the estimator of record. Particle
clouds (independent endpoints after a burn-in of several relaxation times)
remain available for the evolution-family checks.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .integrator import (Dynamics, StreamSet, TrajectoryRecord,
                         _FastChannel, _Propagator, _SlowChannel,
                         _check_finite, _new_diag, frozen_fast)
from .noise import RandomStream
from .spectral import FieldVector


@dataclass(frozen=True)
class AveragingOptions:
    """Estimator controls for the averaged-equation solver."""

    t_avg: float
    t_burn: float
    dt: float
    n_batches: int = 8
    warm_start: bool = True

    def __post_init__(self):
        if self.t_avg <= 0 or self.t_burn < 0 or self.dt <= 0:
            raise ConfigurationError("t_avg > 0, t_burn >= 0, dt > 0 required")
        if self.n_batches < 8:
            raise ConfigurationError(
                f"stderr needs >= 8 disjoint sub-windows, got {self.n_batches}")


@dataclass
class AveragedDriftEstimate:
    x: FieldVector
    value: FieldVector
    t_burn: float
    t_avg: float
    stderr: float
    n_streams: int
    sup_norm_v: float = float("nan")


@dataclass
class MeasureSample:
    """Approximate i.i.d. draws of the quasi-stationary law at time t."""

    t: float
    particles: list
    x: FieldVector


class DriftEstimator:
    """Warm-startable ergodic-average estimator of the averaged drift.

    Owns its private fast noise channels and a persistent micro state, so
    consecutive evaluations chain into one long trajectory; the micro clock
    advances through real time, which is what the non-autonomous time average
    requires. The stream addressing is fixed by (seed, replica), making any
    solve that uses this estimator a deterministic function of the seed.
    """

    def __init__(self, dyn: Dynamics, options: AveragingOptions, seed: int,
                 replica: int = 0, t0: float = 0.0):
        dyn.require_mixing()
        self.dyn = dyn
        self.options = options
        self.gen_w = RandomStream(seed, replica, "EW2").generator()
        self.gen_n = RandomStream(seed, replica, "EN2").generator()
        self.clock = t0
        self.v = np.zeros(dyn.basis.n_modes)
        self._virgin = True
        self.diagnostics = _new_diag()

    def estimate(self, x_coeffs: np.ndarray) -> AveragedDriftEstimate:
        opts = self.options
        dyn = self.dyn
        basis = dyn.basis
        dt = opts.dt
        burn = opts.t_burn if (self._virgin or not opts.warm_start) else 0.0
        n_burn = int(round(burn / dt))
        n_avg = int(round(opts.t_avg / dt))
        if n_avg < opts.n_batches:
            raise ConfigurationError("averaging window shorter than batch count")

        chan = _FastChannel(dyn, dt, 1.0, self.gen_w, self.gen_n, self.diagnostics)
        prop = _Propagator(dyn, dyn.profile_fast, dyn.alpha, 1.0,
                           self.clock, dt, n_burn + n_avg, self.diagnostics)
        x_phys = basis.eval_matrix @ x_coeffs
        v = self.v
        t = self.clock
        for i in range(n_burn):
            v = prop.apply(i, chan.increment(v, t, x_phys))
            t += dt

        nodes = basis.nodes
        proj = basis.proj_matrix
        eval_matrix = basis.eval_matrix
        b1 = dyn.cset.b1
        total = np.zeros(basis.n_modes)
        batches = np.zeros((opts.n_batches, basis.n_modes))
        batch_len = n_avg // opts.n_batches
        sup_v = float(np.linalg.norm(v))
        for j in range(n_avg):
            v_phys = eval_matrix @ v
            vals = b1(t, nodes, x_phys, v_phys)
            modes = proj @ np.broadcast_to(np.asarray(vals, dtype=float), nodes.shape)
            total += modes
            batches[min(j // batch_len, opts.n_batches - 1)] += modes
            v = prop.apply(n_burn + j, chan.increment(v, t, x_phys, v_phys))
            t += dt
            nv = float(np.linalg.norm(v))
            if nv > sup_v:
                sup_v = nv
        _check_finite(v, t, "estimator fast")

        self.v = v
        self.clock = t
        self._virgin = False

        value = total / n_avg
        counts = np.full(opts.n_batches, batch_len, dtype=float)
        counts[-1] = n_avg - batch_len * (opts.n_batches - 1)
        means = batches / counts[:, None]
        se = np.std(means, axis=0, ddof=1) / math.sqrt(opts.n_batches)
        return AveragedDriftEstimate(
            x=FieldVector(x_coeffs), value=FieldVector(value),
            t_burn=burn, t_avg=opts.t_avg,
            stderr=float(np.sqrt(np.sum(se ** 2))), n_streams=1,
            sup_norm_v=sup_v)


def estimate_averaged_drift(dyn: Dynamics, x: FieldVector, t0: float,
                            t_avg: float, t_burn: float, dt: float,
                            seed: int, replica: int = 0,
                            n_batches: int = 8) -> AveragedDriftEstimate:
    """One-shot averaged-drift estimate at x over [t0, t0 + t_avg].

    A single frozen-fast trajectory starts at t0 - t_burn from zero; the
    window must cover at least ten relaxation times so the 1/T error term
    dominates the start-up bias.
    """
    t_relax = dyn.relaxation_time()
    if t_avg < 10.0 * t_relax:
        raise ConfigurationError(
            f"t_avg = {t_avg:.4g} below 10 * relaxation time = {10 * t_relax:.4g}")
    opts = AveragingOptions(t_avg=t_avg, t_burn=t_burn, dt=dt,
                            n_batches=n_batches, warm_start=False)
    est = DriftEstimator(dyn, opts, seed, replica, t0=t0 - t_burn)
    out = est.estimate(np.asarray(x.coeffs, dtype=float))
    # growth sanity per the declared linear-growth constant
    bound = 1.1 * dyn.cset.growth.b1 * (1.0 + out.x.norm() + out.sup_norm_v)
    if out.value.norm() > bound:
        raise ConfigurationError(
            f"averaged-drift estimate ||value|| = {out.value.norm():.4g} exceeds "
            f"the growth bound {bound:.4g}; check the declared constants")
    return out


def sample_quasi_stationary(dyn: Dynamics, x: FieldVector, t: float,
                            n_particles: int, t_relax: float, dt: float,
                            seed: int, substream: int = 0) -> MeasureSample:
    """Approximate draws of the quasi-stationary law at time t: independent
    frozen-fast endpoints started from zero at t - t_relax."""
    required = dyn.relaxation_time()
    if t_relax < required * (1 - 1e-12):
        raise ConfigurationError(
            f"t_relax = {t_relax:.4g} below the mixing requirement {required:.4g}")
    n_steps = int(round(t_relax / dt))
    if n_steps < 1:
        raise ConfigurationError("t_relax/dt must be at least one step")
    s = t - n_steps * dt
    y0 = FieldVector.zeros(dyn.basis.n_modes)
    particles = []
    for i in range(n_particles):
        gw = RandomStream(seed, i, "PW2", substream).generator()
        gn = RandomStream(seed, i, "PN2", substream).generator()
        rec = frozen_fast(dyn, x, y0, s, t, dt, gw, gn, record_path=False)
        particles.append(FieldVector(rec.v_path[-1]))
    return MeasureSample(t=t, particles=particles, x=x)


def transition_expectation(dyn: Dynamics, x: FieldVector, y: FieldVector,
                           s: float, t: float, phi, n_replicas: int, dt: float,
                           seed: int, substream: int = 0) -> tuple[float, float]:
    """Monte Carlo value of E phi(v^x(t; s, y)) with its standard error."""
    vals = np.empty(n_replicas)
    for i in range(n_replicas):
        gw = RandomStream(seed, i, "PW2", substream).generator()
        gn = RandomStream(seed, i, "PN2", substream).generator()
        rec = frozen_fast(dyn, x, y, s, t, dt, gw, gn, record_path=False)
        vals[i] = phi(FieldVector(rec.v_path[-1]))
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(n_replicas)) if n_replicas > 1 else 0.0
    return mean, se


def solve_averaged(dyn: Dynamics, t_end: float, dt_slow: float,
                   initial_u: FieldVector, streams: StreamSet,
                   options: AveragingOptions, exact_drift=None,
                   record_modes: bool = True) -> TrajectoryRecord:
    """Integrate the averaged slow equation on the slow grid.

    Identical stepping to the slow half of the coupled run, with the reaction
    term replaced by the averaged drift at the current state. The estimator
    micro-solver warm-starts across steps unless options say otherwise; an
    exact_drift callable (modes -> modes) replaces the estimator entirely.
    Slow noise channels come from the same stream set as the coupled runs, so
    paired comparisons are couplings.
    """
    dyn.require_averaging_margin()
    n_slow = int(round(t_end / dt_slow))
    if abs(n_slow * dt_slow - t_end) > 1e-9 * max(1.0, t_end):
        raise ConfigurationError("t_end/dt_slow must be an integer step count")
    gen_w1, gen_n1 = streams.slow_generators()
    diag = _new_diag()
    chan = _SlowChannel(dyn, dt_slow, gen_w1, gen_n1, diag)
    prop = _Propagator(dyn, dyn.profile_slow, 0.0, 1.0, 0.0, dt_slow, n_slow, diag)
    estimator = None
    if exact_drift is None:
        estimator = DriftEstimator(dyn, options, streams.seed, streams.replica)

    basis = dyn.basis
    u = np.array(initial_u.coeffs, dtype=float)
    times = dt_slow * np.arange(n_slow + 1)
    u_path = np.empty((n_slow + 1, basis.n_modes)) if record_modes else None
    if record_modes:
        u_path[0] = u
    sup_u = float(np.linalg.norm(u))
    stderr_sum = 0.0
    for n in range(n_slow):
        t_n = n * dt_slow
        if exact_drift is not None:
            drift = np.asarray(exact_drift(u), dtype=float)
        else:
            est = estimator.estimate(u)
            drift = est.value.coeffs
            stderr_sum += est.stderr
        u_phys = basis.eval_matrix @ u
        u = prop.apply(n, chan.increment_with_drift(u, t_n, u_phys, drift))
        _check_finite(u, t_n + dt_slow, "averaged slow")
        if record_modes:
            u_path[n + 1] = u
        sup_u = max(sup_u, float(np.linalg.norm(u)))

    if estimator is not None:
        diag["estimator_jumps2"] = estimator.diagnostics["jumps2"]
        diag["mean_drift_stderr"] = stderr_sum / max(n_slow, 1)
    return TrajectoryRecord(times=times, u_path=u_path, v_path=None,
                            sup_norm_u=sup_u, sup_norm_v=float("nan"),
                            diagnostics=diag)


def write_drift_cache(path, estimates) -> None:
    """CSV cache of averaged-drift evaluations for reuse across experiments."""
    estimates = list(estimates)
    if not estimates:
        raise ConfigurationError("nothing to cache")
    n = len(estimates[0].x)
    header = ([f"x_{k}" for k in range(1, n + 1)]
              + [f"bbar_{k}" for k in range(1, n + 1)] + ["t_avg", "stderr"])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for est in estimates:
            row = ([f"{c:.17g}" for c in est.x.coeffs]
                   + [f"{c:.17g}" for c in est.value.coeffs]
                   + [f"{est.t_avg:.17g}", f"{est.stderr:.17g}"])
            w.writerow(row)


def read_drift_cache(path) -> list[AveragedDriftEstimate]:
    out = []
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        n = sum(1 for h in header if h.startswith("x_"))
        for row in r:
            vals = [float(c) for c in row]
            out.append(AveragedDriftEstimate(
                x=FieldVector(np.array(vals[:n])),
                value=FieldVector(np.array(vals[n:2 * n])),
                t_burn=float("nan"), t_avg=vals[2 * n], stderr=vals[2 * n + 1],
                n_streams=1))
    return out
