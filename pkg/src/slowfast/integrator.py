"""Exponential-Euler time stepping in mild form.

All four processes the harness needs run through the same two step kernels:
the coupled pair, the frozen-fast equation (scale parameter 1, slow argument
held fixed), the block-frozen auxiliary fast process, and the averaged slow
equation (driven by the averaging module).

Convention: drift, diffusion, and jump terms are evaluated at the step's left
endpoint, the compensator of the accelerated jump channel is subtracted
explicitly, and the propagator of the linear part is then applied to the
whole bracket. Jump marks within a step all act on the left-endpoint state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .coefficients import CoefficientSet
from .errors import ConfigurationError, NumericalFailure
from .noise import LevyMeasureSpec, NoiseSpec, RandomStream
from .spectral import (FieldVector, SpectralBasis, TimeProfile,
                       gamma_step_integrals, mode_decay_factors,
                       assemble_drift_matrix, transport_sup_norm)

# fraction of the explicit-term stability budget the fast step may use
STIFFNESS_FRACTION = 0.2


class Dynamics:
    """Everything fixed for a run: basis, operator profiles, coefficients,
    and noise specifications, plus derived quantities the steppers reuse."""

    def __init__(self, basis: SpectralBasis, profile_slow: TimeProfile,
                 profile_fast: TimeProfile, cset: CoefficientSet,
                 wiener_slow: NoiseSpec, wiener_fast: NoiseSpec,
                 levy_slow: LevyMeasureSpec, levy_fast: LevyMeasureSpec):
        n = basis.n_modes
        if wiener_slow.q_eigenvalues.size < n or wiener_fast.q_eigenvalues.size < n:
            raise ConfigurationError(
                "noise spectra must cover all retained modes")
        self.basis = basis
        self.profile_slow = profile_slow
        self.profile_fast = profile_fast
        self.cset = cset
        self.wiener_slow = wiener_slow
        self.wiener_fast = wiener_fast
        self.levy_slow = levy_slow
        self.levy_fast = levy_fast

        self.alpha = cset.alpha
        self.lam1 = wiener_slow.q_eigenvalues[:n]
        self.lam2 = wiener_fast.q_eigenvalues[:n]
        self.sup_c1 = transport_sup_norm(basis, profile_slow)
        self.sup_c2 = transport_sup_norm(basis, profile_fast)
        self.unit_proj = basis.to_spectral(np.ones(basis.quadrature_points))

        self._wiener1_active = bool(self.lam1.max() > 0) and cset.f1_constant != 0.0
        self._wiener2_active = bool(self.lam2.max() > 0) and cset.f2_constant != 0.0
        self._jumps1_active = self._jump_channel_active(levy_slow, cset.g1_additive)
        self._jumps2_active = self._jump_channel_active(levy_fast, cset.g2_additive)
        self.comp1_vec = self._additive_compensator(levy_slow, cset.g1_additive)
        self.comp2_vec = self._additive_compensator(levy_fast, cset.g2_additive)

    @staticmethod
    def _jump_channel_active(levy, g_additive):
        if levy.total_mass <= 0:
            return False
        if g_additive is not None and all(g_additive(z) == 0.0 for z in levy.marks):
            return False
        return True

    def _additive_compensator(self, levy, g_additive):
        if g_additive is None or levy.total_mass <= 0:
            return None
        amp = sum(m * g_additive(z) for z, m in zip(levy.marks, levy.masses))
        return amp * self.unit_proj

    def mixing_margin(self) -> float:
        """Dissipativity margin of the frozen fast equation.

        The linear flow contracts at rate alpha + gamma_lower * alpha_1; the
        fast-argument Lipschitz constant of b2 and the transport norm can eat
        into it. Pair-coupling decay and relaxation times derive from this.
        """
        return (self.alpha
                + self.profile_fast.gamma_lower * self.basis.eigenvalues[0]
                - self.cset.lipschitz.b2_fast - self.sup_c2)

    def require_mixing(self):
        m = self.mixing_margin()
        if m <= 0:
            raise ConfigurationError(
                f"mixing margin {m:.4g} <= 0: the frozen fast equation is not "
                f"verifiably contracting (alpha too small)")
        return m

    def require_averaging_margin(self):
        """The averaging pipeline additionally demands a unit margin."""
        m = self.mixing_margin()
        if m <= 1.0:
            raise ConfigurationError(
                f"dissipativity margin violated: alpha + gamma_lower*alpha_1 = "
                f"{self.alpha + self.profile_fast.gamma_lower * self.basis.eigenvalues[0]:.4g} "
                f"must exceed L_b2_fast + sup||C2|| + 1 = "
                f"{self.cset.lipschitz.b2_fast + self.sup_c2 + 1.0:.4g}")
        return m

    def relaxation_time(self) -> float:
        """Burn-in horizon 8 / margin for quasi-stationary sampling."""
        return 8.0 / self.require_mixing()

    def fast_step_guard(self, epsilon: float) -> float:
        """Largest admissible fast step for the explicit (non-exponential) terms."""
        stiff = (self.profile_fast.gamma_upper * self.basis.eigenvalues[-1]
                 + self.alpha)
        return STIFFNESS_FRACTION * epsilon / stiff


@dataclass(frozen=True)
class SimConfig:
    """Per-run numerical parameters of the coupled simulation."""

    epsilon: float
    t_end: float
    dt_slow: float
    dt_fast: float
    initial_u: FieldVector
    initial_v: FieldVector
    theta: float = 0.0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ConfigurationError(f"epsilon must be positive, got {self.epsilon}")
        if self.t_end <= 0 or self.dt_slow <= 0 or self.dt_fast <= 0:
            raise ConfigurationError("t_end, dt_slow, dt_fast must be positive")
        if self.dt_fast > self.dt_slow * (1 + 1e-12):
            raise ConfigurationError(
                f"dt_fast={self.dt_fast} exceeds dt_slow={self.dt_slow}")
        if not 0.0 <= self.theta < 1.0:
            raise ConfigurationError(f"theta must lie in [0, 1), got {self.theta}")
        if abs(self.t_end / self.dt_slow - round(self.t_end / self.dt_slow)) > 1e-9:
            raise ConfigurationError(
                f"t_end/dt_slow = {self.t_end / self.dt_slow:.6g} is not an "
                f"integer number of steps")
        if abs(self.dt_slow / self.dt_fast - round(self.dt_slow / self.dt_fast)) > 1e-9:
            raise ConfigurationError(
                f"dt_slow/dt_fast = {self.dt_slow / self.dt_fast:.6g} is not an "
                f"integer number of substeps")

    @property
    def n_slow_steps(self) -> int:
        return int(round(self.t_end / self.dt_slow))

    @property
    def n_substeps(self) -> int:
        return int(round(self.dt_slow / self.dt_fast))


def validate_stiffness(dyn: Dynamics, config: SimConfig):
    guard = dyn.fast_step_guard(config.epsilon)
    if config.dt_fast > guard * (1 + 1e-9):
        raise ConfigurationError(
            f"dt_fast={config.dt_fast:.6g} violates the stiffness guard "
            f"{guard:.6g} for epsilon={config.epsilon}")


@dataclass
class TrajectoryRecord:
    """Paths recorded on the slow grid; cadlag convention, so values at each
    grid time include every jump of the step that produced them."""

    times: np.ndarray
    u_path: np.ndarray | None
    v_path: np.ndarray | None
    sup_norm_u: float
    sup_norm_v: float
    diagnostics: dict = field(default_factory=dict)


def _new_diag() -> dict:
    return {"jumps1": 0, "jumps2": 0, "exp_clamps": 0, "nan": False}


class _Propagator:
    """Per-step application of the linear evolution factor.

    Diagonal (mode-wise, exact gamma integrals) without transport; frozen
    left-endpoint matrix exponential with transport.
    """

    def __init__(self, dyn, profile, shift, epsilon, t0, dt, n_steps, diag):
        self.dt = dt
        self.epsilon = epsilon
        self.shift = shift
        self.profile = profile
        self.dyn = dyn
        self.t0 = t0
        if profile.ell is None:
            gints = gamma_step_integrals(profile, t0, dt, n_steps)
            if profile.gamma_constant is not None:
                fac, ncl = mode_decay_factors(dyn.basis, gints[0] if n_steps else
                                              profile.gamma_constant * dt,
                                              shift, dt, epsilon)
                self._table = fac[None, :]
                self._const = True
                total_clamped = ncl
            else:
                expo = (np.outer(gints, dyn.basis.eigenvalues)
                        + shift * dt) / epsilon
                clamped = expo > 700.0
                total_clamped = int(np.count_nonzero(clamped))
                self._table = np.where(clamped, 0.0, np.exp(-np.minimum(expo, 700.0)))
                self._const = False
            if total_clamped:
                diag["exp_clamps"] += total_clamped
        else:
            self._table = None
            self._cache = {}

    def apply(self, i, vec):
        if self._table is not None:
            row = self._table[0] if self._const else self._table[i]
            return row * vec
        mat = self._cache.get(i)
        if mat is None:
            t = self.t0 + i * self.dt
            m = assemble_drift_matrix(self.dyn.basis, self.profile, t, self.shift)
            mat = linalg.expm(m * (self.dt / self.epsilon))
            self._cache[i] = mat
        return mat @ vec


class _SlowChannel:
    """Per-step slow update bracket: drift + diffusion + compensated jumps."""

    def __init__(self, dyn: Dynamics, dt: float, gen_w, gen_n, diag):
        self.dyn = dyn
        self.dt = dt
        self.gen_w = gen_w
        self.gen_n = gen_n
        self.diag = diag
        self.lam_sqdt = dyn.lam1 * math.sqrt(dt)
        self.jump_lam = dyn.levy_slow.total_mass * dt

    def increment(self, u, t, u_phys, v_phys):
        basis = self.dyn.basis
        vals = self.dyn.cset.b1(t, basis.nodes, u_phys, v_phys)
        drift = basis.proj_matrix @ np.broadcast_to(
            np.asarray(vals, dtype=float), basis.nodes.shape)
        return self.increment_with_drift(u, t, u_phys, drift)

    def increment_with_drift(self, u, t, u_phys, drift_modes):
        """Same bracket with an externally supplied drift (averaged equation)."""
        dyn = self.dyn
        basis = dyn.basis
        cset = dyn.cset
        inc = u + self.dt * drift_modes
        if dyn._wiener1_active:
            dw = self.lam_sqdt * self.gen_w.standard_normal(basis.n_modes)
            if cset.f1_constant is not None:
                inc = inc + cset.f1_constant * dw
            else:
                fvals = np.asarray(cset.f1(t, basis.nodes, u_phys), dtype=float)
                inc = inc + basis.proj_matrix @ (fvals * (basis.eval_matrix @ dw))
        if dyn._jumps1_active:
            count = int(self.gen_n.poisson(self.jump_lam))
            if count:
                self.gen_n.random(count)            # jump times, left-endpoint rule
                uz = self.gen_n.random(count)
                marks = dyn.levy_slow.marks[
                    np.searchsorted(dyn.levy_slow._cumulative, uz)]
                self.diag["jumps1"] += count
                if cset.g1_additive is not None:
                    amp = float(sum(cset.g1_additive(z) for z in marks))
                    inc = inc + amp * dyn.unit_proj
                else:
                    for z in marks:
                        gv = np.asarray(cset.g1(t, basis.nodes, u_phys, z), dtype=float)
                        inc = inc + basis.proj_matrix @ np.broadcast_to(gv, basis.nodes.shape)
            if dyn.comp1_vec is not None:
                inc = inc - self.dt * dyn.comp1_vec
            else:
                total = np.zeros(basis.quadrature_points)
                for z, m in zip(dyn.levy_slow.marks, dyn.levy_slow.masses):
                    gv = np.asarray(cset.g1(t, basis.nodes, u_phys, z), dtype=float)
                    total = total + m * np.broadcast_to(gv, basis.nodes.shape)
                inc = inc - self.dt * (basis.proj_matrix @ total)
        return inc


class _FastChannel:
    """Per-substep fast update bracket at scale parameter epsilon."""

    def __init__(self, dyn: Dynamics, dt: float, epsilon: float, gen_w, gen_n, diag):
        self.dyn = dyn
        self.dt = dt
        self.epsilon = epsilon
        self.gen_w = gen_w
        self.gen_n = gen_n
        self.diag = diag
        self.drift_scale = dt / epsilon
        self.lam_sqdt_eps = dyn.lam2 * (math.sqrt(dt) / math.sqrt(epsilon))
        self.rate_scale = 1.0 / epsilon
        self.jump_lam = dyn.levy_fast.total_mass * self.rate_scale * dt
        if self.jump_lam > 1e7:
            raise ConfigurationError(
                f"expected fast jump count {self.jump_lam:.3g} per step exceeds "
                f"1e7; shrink dt_fast")

    def increment(self, v, t, u_phys, v_phys=None):
        dyn = self.dyn
        basis = dyn.basis
        cset = dyn.cset
        if v_phys is None:
            v_phys = basis.eval_matrix @ v
        vals = cset.b2(t, basis.nodes, u_phys, v_phys)
        inc = v + self.drift_scale * (basis.proj_matrix @ np.broadcast_to(
            np.asarray(vals, dtype=float), basis.nodes.shape))
        if dyn._wiener2_active:
            dw = self.lam_sqdt_eps * self.gen_w.standard_normal(basis.n_modes)
            if cset.f2_constant is not None:
                inc = inc + cset.f2_constant * dw
            else:
                fvals = np.asarray(cset.f2(t, basis.nodes, u_phys, v_phys), dtype=float)
                inc = inc + basis.proj_matrix @ (fvals * (basis.eval_matrix @ dw))
        if dyn._jumps2_active:
            count = int(self.gen_n.poisson(self.jump_lam))
            if count:
                self.gen_n.random(count)
                uz = self.gen_n.random(count)
                marks = dyn.levy_fast.marks[
                    np.searchsorted(dyn.levy_fast._cumulative, uz)]
                self.diag["jumps2"] += count
                if cset.g2_additive is not None:
                    amp = float(sum(cset.g2_additive(z) for z in marks))
                    inc = inc + amp * dyn.unit_proj
                else:
                    for z in marks:
                        gv = np.asarray(cset.g2(t, basis.nodes, u_phys, v_phys, z),
                                        dtype=float)
                        inc = inc + basis.proj_matrix @ np.broadcast_to(gv, basis.nodes.shape)
            if dyn.comp2_vec is not None:
                inc = inc - (self.dt * self.rate_scale) * dyn.comp2_vec
            else:
                total = np.zeros(basis.quadrature_points)
                for z, m in zip(dyn.levy_fast.marks, dyn.levy_fast.masses):
                    gv = np.asarray(cset.g2(t, basis.nodes, u_phys, v_phys, z),
                                    dtype=float)
                    total = total + m * np.broadcast_to(gv, basis.nodes.shape)
                inc = inc - (self.dt * self.rate_scale) * (basis.proj_matrix @ total)
        return inc


def _check_finite(vec, t, what):
    if not math.isfinite(float(vec.sum())):
        raise NumericalFailure(f"non-finite {what} state", t=t)


def step_slow(dyn: Dynamics, u: FieldVector, v: FieldVector, t: float, dt: float,
              gen_w1, gen_n1, diagnostics: dict | None = None) -> FieldVector:
    """One exponential-Euler step of the slow equation."""
    diag = diagnostics if diagnostics is not None else _new_diag()
    gen_w1 = gen_w1.generator() if isinstance(gen_w1, RandomStream) else gen_w1
    gen_n1 = gen_n1.generator() if isinstance(gen_n1, RandomStream) else gen_n1
    chan = _SlowChannel(dyn, dt, gen_w1, gen_n1, diag)
    prop = _Propagator(dyn, dyn.profile_slow, 0.0, 1.0, t, dt, 1, diag)
    u_phys = dyn.basis.eval_matrix @ u.coeffs
    v_phys = dyn.basis.eval_matrix @ v.coeffs
    out = prop.apply(0, chan.increment(u.coeffs, t, u_phys, v_phys))
    _check_finite(out, t + dt, "slow")
    return FieldVector(out)


def step_fast(dyn: Dynamics, u: FieldVector, v: FieldVector, t: float, dt: float,
              epsilon: float, gen_w2, gen_n2,
              diagnostics: dict | None = None) -> FieldVector:
    """One exponential-Euler substep of the fast equation."""
    if epsilon <= 0:
        raise ConfigurationError(f"epsilon must be positive, got {epsilon}")
    diag = diagnostics if diagnostics is not None else _new_diag()
    gen_w2 = gen_w2.generator() if isinstance(gen_w2, RandomStream) else gen_w2
    gen_n2 = gen_n2.generator() if isinstance(gen_n2, RandomStream) else gen_n2
    chan = _FastChannel(dyn, dt, epsilon, gen_w2, gen_n2, diag)
    prop = _Propagator(dyn, dyn.profile_fast, dyn.alpha, epsilon, t, dt, 1, diag)
    u_phys = dyn.basis.eval_matrix @ u.coeffs
    out = prop.apply(0, chan.increment(v.coeffs, t, u_phys))
    _check_finite(out, t + dt, "fast")
    return FieldVector(out)


@dataclass(frozen=True)
class StreamSet:
    """Channel addressing for one replica of a coupled run.

    The slow channels always use substream 0, so they are shared across every
    run of the same replica (true pairs at each scale and the averaged
    equation); the fast channels take the substream index so runs at different
    scales stay independent.
    """

    seed: int
    replica: int
    fast_substream: int = 0

    def slow_generators(self):
        return (RandomStream(self.seed, self.replica, "W1").generator(),
                RandomStream(self.seed, self.replica, "N1").generator())

    def fast_generators(self):
        return (RandomStream(self.seed, self.replica, "W2", self.fast_substream).generator(),
                RandomStream(self.seed, self.replica, "N2", self.fast_substream).generator())

    def estimator_generators(self):
        return (RandomStream(self.seed, self.replica, "EW2").generator(),
                RandomStream(self.seed, self.replica, "EN2").generator())


def simulate_coupled(dyn: Dynamics, config: SimConfig, streams: StreamSet,
                     record_modes: bool = True) -> TrajectoryRecord:
    """Run the coupled pair over [0, t_end] with the macro-micro loop.

    Each slow step evaluates its bracket at the left endpoint (u_n, v_n), then
    the fast equation runs dt_slow/dt_fast substeps with the slow state frozen
    at u_n. Deterministic given the stream set.
    """
    validate_stiffness(dyn, config)
    n_slow = config.n_slow_steps
    n_sub = config.n_substeps
    dt_s = config.dt_slow
    dt_f = config.dt_fast
    gen_w1, gen_n1 = streams.slow_generators()
    gen_w2, gen_n2 = streams.fast_generators()
    diag = _new_diag()

    slow_chan = _SlowChannel(dyn, dt_s, gen_w1, gen_n1, diag)
    fast_chan = _FastChannel(dyn, dt_f, config.epsilon, gen_w2, gen_n2, diag)
    slow_prop = _Propagator(dyn, dyn.profile_slow, 0.0, 1.0, 0.0, dt_s, n_slow, diag)
    fast_prop = _Propagator(dyn, dyn.profile_fast, dyn.alpha, config.epsilon,
                            0.0, dt_f, n_slow * n_sub, diag)

    basis = dyn.basis
    u = np.array(config.initial_u.coeffs, dtype=float)
    v = np.array(config.initial_v.coeffs, dtype=float)
    if u.size != basis.n_modes or v.size != basis.n_modes:
        raise ConfigurationError("initial conditions must have n_modes coefficients")

    times = dt_s * np.arange(n_slow + 1)
    u_path = np.empty((n_slow + 1, basis.n_modes)) if record_modes else None
    v_path = np.empty((n_slow + 1, basis.n_modes)) if record_modes else None
    if record_modes:
        u_path[0] = u
        v_path[0] = v
    sup_u = float(np.linalg.norm(u))
    sup_v = float(np.linalg.norm(v))

    eval_matrix = basis.eval_matrix
    for n in range(n_slow):
        t_n = n * dt_s
        u_phys = eval_matrix @ u
        v_phys = eval_matrix @ v
        u_next = slow_prop.apply(n, slow_chan.increment(u, t_n, u_phys, v_phys))
        base = n * n_sub
        for m in range(n_sub):
            t_sub = t_n + m * dt_f
            v = fast_prop.apply(base + m, fast_chan.increment(v, t_sub, u_phys))
        _check_finite(u_next, t_n + dt_s, "slow")
        _check_finite(v, t_n + dt_s, "fast")
        u = u_next
        if record_modes:
            u_path[n + 1] = u
            v_path[n + 1] = v
        sup_u = max(sup_u, float(np.linalg.norm(u)))
        sup_v = max(sup_v, float(np.linalg.norm(v)))

    return TrajectoryRecord(times=times, u_path=u_path, v_path=v_path,
                            sup_norm_u=sup_u, sup_norm_v=sup_v, diagnostics=diag)


def frozen_fast(dyn: Dynamics, x: FieldVector, y: FieldVector, s: float,
                t_end: float, dt: float, gen_w2, gen_n2,
                record_path: bool = True) -> TrajectoryRecord:
    """Path of the fast equation with the slow argument frozen at x and scale
    parameter 1, from time s to t_end."""
    if not s < t_end:
        raise ConfigurationError(f"frozen_fast requires s < t_end, got {s} >= {t_end}")
    n_steps = int(round((t_end - s) / dt))
    if abs(n_steps * dt - (t_end - s)) > 1e-9 * max(1.0, abs(t_end - s)):
        raise ConfigurationError("(t_end - s)/dt must be an integer step count")
    gen_w2 = gen_w2.generator() if isinstance(gen_w2, RandomStream) else gen_w2
    gen_n2 = gen_n2.generator() if isinstance(gen_n2, RandomStream) else gen_n2
    diag = _new_diag()
    chan = _FastChannel(dyn, dt, 1.0, gen_w2, gen_n2, diag)
    prop = _Propagator(dyn, dyn.profile_fast, dyn.alpha, 1.0, s, dt, n_steps, diag)
    u_phys = dyn.basis.eval_matrix @ x.coeffs
    v = np.array(y.coeffs, dtype=float)
    v_path = np.empty((n_steps + 1, dyn.basis.n_modes)) if record_path else None
    if record_path:
        v_path[0] = v
    sup_v = float(np.linalg.norm(v))
    for i in range(n_steps):
        v = prop.apply(i, chan.increment(v, s + i * dt, u_phys))
        if record_path:
            v_path[i + 1] = v
        sup_v = max(sup_v, float(np.linalg.norm(v)))
    _check_finite(v, t_end, "fast")
    if record_path:
        times = s + dt * np.arange(n_steps + 1)
    else:
        # endpoint-only record
        times = np.array([t_end])
        v_path = v[None, :]
    return TrajectoryRecord(times=times, u_path=None, v_path=v_path,
                            sup_norm_u=float("nan"), sup_norm_v=sup_v,
                            diagnostics=diag)


def khasminskii_delta(epsilon: float, kappa: float) -> float:
    """Block length kappa * epsilon * ln(1/epsilon) of the auxiliary process."""
    if not 0 < epsilon < 1:
        raise ConfigurationError(
            f"the block-length rule needs epsilon in (0, 1), got {epsilon}; "
            f"pass delta explicitly otherwise")
    if not 0 < kappa < 1:
        raise ConfigurationError(f"kappa must lie in (0, 1), got {kappa}")
    return kappa * epsilon * math.log(1.0 / epsilon)


def khasminskii_auxiliary(dyn: Dynamics, u_record: TrajectoryRecord,
                          config: SimConfig, streams: StreamSet,
                          kappa: float | None = None,
                          delta: float | None = None) -> TrajectoryRecord:
    """Auxiliary fast motion with the slow argument frozen per block.

    On each block [k delta, (k+1) delta) the fast stepper uses the recorded
    slow state at the block's start. delta is rounded to an integer multiple
    of dt_slow. Reuses the run's fast streams, so against the true fast path
    this is a coupling.
    """
    if u_record.u_path is None:
        raise ConfigurationError("khasminskii_auxiliary needs a recorded slow path")
    if delta is None:
        if kappa is None:
            raise ConfigurationError("pass either kappa or delta")
        delta = khasminskii_delta(config.epsilon, kappa)
    blocks = max(1, int(round(delta / config.dt_slow)))
    delta_r = blocks * config.dt_slow
    if delta_r < 2 * config.dt_fast:
        raise ConfigurationError(
            f"block length {delta_r:.6g} not resolvable: smaller than "
            f"2*dt_fast = {2 * config.dt_fast:.6g}")

    gen_w2, gen_n2 = streams.fast_generators()
    diag = _new_diag()
    diag["delta"] = delta_r
    n_slow = config.n_slow_steps
    n_sub = config.n_substeps
    dt_f = config.dt_fast
    chan = _FastChannel(dyn, dt_f, config.epsilon, gen_w2, gen_n2, diag)
    prop = _Propagator(dyn, dyn.profile_fast, dyn.alpha, config.epsilon,
                       0.0, dt_f, n_slow * n_sub, diag)

    basis = dyn.basis
    v = np.array(config.initial_v.coeffs, dtype=float)
    v_path = np.empty((n_slow + 1, basis.n_modes))
    v_path[0] = v
    sup_v = float(np.linalg.norm(v))
    u_phys = None
    current_block = -1
    for n in range(n_slow):
        block = n // blocks
        if block != current_block:
            u_phys = basis.eval_matrix @ u_record.u_path[block * blocks]
            current_block = block
        t_n = n * config.dt_slow
        base = n * n_sub
        for m in range(n_sub):
            v = prop.apply(base + m, chan.increment(v, t_n + m * dt_f, u_phys))
        _check_finite(v, t_n + config.dt_slow, "auxiliary fast")
        v_path[n + 1] = v
        sup_v = max(sup_v, float(np.linalg.norm(v)))

    return TrajectoryRecord(times=u_record.times.copy(), u_path=None,
                            v_path=v_path, sup_norm_u=float("nan"),
                            sup_norm_v=sup_v, diagnostics=diag)


def holder_increment_stats(records, lags) -> list[tuple[float, float]]:
    """Mean squared slow-path increments E||u(t+h) - u(t)||^2 per lag h,
    averaged over anchor times and over the given records."""
    if not isinstance(records, (list, tuple)):
        records = [records]
    rows = []
    for h in lags:
        total = 0.0
        count = 0
        for rec in records:
            if rec.u_path is None:
                raise ConfigurationError("holder stats require recorded slow paths")
            times = rec.times
            dt = times[1] - times[0] if times.size > 1 else 0.0
            if h == 0.0:
                total += 0.0
                count += len(times)
                continue
            if dt <= 0 or h > times[-1] - times[0] + 1e-12:
                raise ConfigurationError(f"lag {h} outside the recorded horizon")
            j = int(round(h / dt))
            if j < 1 or abs(j * dt - h) > 1e-9 * max(1.0, h):
                raise ConfigurationError(
                    f"lag {h} does not align with the recording grid dt={dt:.6g}")
            diffs = rec.u_path[j:] - rec.u_path[:-j]
            total += float(np.sum(diffs ** 2))
            count += diffs.shape[0]
        rows.append((float(h), total / count if count else 0.0))
    return rows
