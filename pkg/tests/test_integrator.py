import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

import slowfast as sf
from slowfast.errors import ConfigurationError, NumericalFailure
from util import DET_LINEAR, custom_cset, make_dynamics


def _det_dynamics(n_modes=8, **params):
    """Noise-free linear dynamics."""
    p = dict(DET_LINEAR)
    p.update(params)
    return make_dynamics(n_modes=n_modes, preset_params=p)


def test_step_slow_pure_decay():
    dyn = _det_dynamics()
    gen = np.random.default_rng(0)
    u = sf.FieldVector.unit(8, 1)
    v = sf.FieldVector.zeros(8)       # b1 = v vanishes
    out = sf.step_slow(dyn, u, v, 0.0, 0.1, gen, gen)
    assert out.coeffs[0] == pytest.approx(math.exp(-0.1), rel=1e-12)


def test_step_slow_constant_drift_oracle():
    # b1 = 1: u+ = e^{-dt} (u + dt * <1 projected>); mode-1 projection of the
    # constant field on (0, pi) is 2*sqrt(2/pi)
    dyn = make_dynamics(cset=custom_cset(
        b1=lambda t, xi, u, v: np.ones_like(u)))
    gen = np.random.default_rng(0)
    out = sf.step_slow(dyn, sf.FieldVector.zeros(8), sf.FieldVector.zeros(8),
                       0.0, 0.1, gen, gen)
    expect = math.exp(-0.1) * 0.1 * 2.0 * math.sqrt(2.0 / math.pi)
    assert out.coeffs[0] == pytest.approx(expect, rel=1e-11)
    assert out.coeffs[0] == pytest.approx(0.14440, abs=1e-5)


def test_gamma_lower_bound_must_be_positive():
    with pytest.raises(ConfigurationError):
        sf.TimeProfile.constant(0.0)


def test_step_fast_scalar_exponential():
    # b2 = f2 = g2 = 0 via frozen u = 0: factor e^{-(gamma*alpha_1 + alpha)dt/eps}
    dyn = _det_dynamics()
    gen = np.random.default_rng(0)
    out = sf.step_fast(dyn, sf.FieldVector.zeros(8), sf.FieldVector.unit(8, 1),
                       0.0, 0.01, 0.1, gen, gen)
    assert out.coeffs[0] == pytest.approx(math.exp(-0.2), rel=1e-12)


def test_step_fast_epsilon_one_matches_frozen_fast():
    dyn = make_dynamics(preset_params=dict(sigma2=0.3, c2=0.2))
    x = sf.FieldVector.unit(8, 1)
    y = sf.FieldVector.unit(8, 2, 0.5)
    gw = sf.RandomStream(9, 0, "W2").generator()
    gn = sf.RandomStream(9, 0, "N2").generator()
    stepped = sf.step_fast(dyn, x, y, 0.0, 0.002, 1.0, gw, gn)
    gw2 = sf.RandomStream(9, 0, "W2").generator()
    gn2 = sf.RandomStream(9, 0, "N2").generator()
    rec = sf.frozen_fast(dyn, x, y, 0.0, 0.002, 0.002, gw2, gn2)
    assert np.array_equal(stepped.coeffs, rec.v_path[-1])


def test_fast_fixed_point_matches_ode_steady_state():
    # deterministic b2 = x at eps = 1: v* -> x_k/(gamma2 alpha_k + alpha)
    dyn = _det_dynamics()
    gen = np.random.default_rng(0)
    x = sf.FieldVector.unit(8, 1)
    v = sf.FieldVector.zeros(8)
    dt = 0.002
    rec = sf.frozen_fast(dyn, x, v, 0.0, 12.0, dt,
                         np.random.default_rng(0), np.random.default_rng(0))
    assert rec.v_path[-1][0] == pytest.approx(0.5, rel=5e-3)


def test_simulate_coupled_matches_dense_ode_oracle():
    # zero noise: the Galerkin system is a linear ODE in 2N variables
    n = 4
    eps = 0.5
    dyn = _det_dynamics(n_modes=n)
    alpha_k = dyn.basis.eigenvalues

    def rhs(t, w):
        u, v = w[:n], w[n:]
        du = -alpha_k * u + v
        dv = (-(alpha_k + 1.0) * v + u) / eps
        return np.concatenate([du, dv])

    u0 = np.zeros(n)
    u0[0] = 1.0
    v0 = np.zeros(n)
    sol = solve_ivp(rhs, (0.0, 1.0), np.concatenate([u0, v0]),
                    rtol=1e-11, atol=1e-13, dense_output=True)
    ref = sol.y[:, -1]

    dt = 1.0 / 1600
    sim = sf.SimConfig(epsilon=eps, t_end=1.0, dt_slow=dt, dt_fast=dt,
                       initial_u=sf.FieldVector(u0), initial_v=sf.FieldVector(v0))
    rec = sf.simulate_coupled(dyn, sim, sf.StreamSet(0, 0, 0))
    got = np.concatenate([rec.u_path[-1], rec.v_path[-1]])
    rel = np.linalg.norm(got - ref) / np.linalg.norm(ref)
    assert rel <= 1e-3


def test_simulate_coupled_equals_manual_stepping_at_eps_one():
    # with dt_fast = dt_slow the macro-micro loop is the joint scheme
    dyn = make_dynamics(n_modes=4, preset_params=dict(sigma1=0.3, sigma2=0.2,
                                                      c1=0.2, c2=0.1))
    dt = 0.005
    sim = sf.SimConfig(epsilon=1.0, t_end=0.1, dt_slow=dt, dt_fast=dt,
                       initial_u=sf.FieldVector.unit(4, 1),
                       initial_v=sf.FieldVector.zeros(4))
    streams = sf.StreamSet(31, 2, 0)
    rec = sf.simulate_coupled(dyn, sim, streams)

    gw1, gn1 = streams.slow_generators()
    gw2, gn2 = streams.fast_generators()
    u = sf.FieldVector.unit(4, 1)
    v = sf.FieldVector.zeros(4)
    for i in range(sim.n_slow_steps):
        t = i * dt
        u_next = sf.step_slow(dyn, u, v, t, dt, gw1, gn1)
        v = sf.step_fast(dyn, u, v, t, dt, 1.0, gw2, gn2)
        u = u_next
    assert np.array_equal(rec.u_path[-1], u.coeffs)
    assert np.array_equal(rec.v_path[-1], v.coeffs)


def test_sup_norm_is_max_over_recorded_path():
    dyn = make_dynamics(n_modes=4)
    sim = sf.SimConfig(epsilon=0.5, t_end=0.2, dt_slow=0.01, dt_fast=0.005,
                       initial_u=sf.FieldVector.unit(4, 1),
                       initial_v=sf.FieldVector.zeros(4))
    rec = sf.simulate_coupled(dyn, sim, sf.StreamSet(1, 0, 0))
    assert rec.sup_norm_u == pytest.approx(
        float(np.linalg.norm(rec.u_path, axis=1).max()), rel=0, abs=0)


def test_sim_config_validation():
    u = sf.FieldVector.zeros(4)
    with pytest.raises(ConfigurationError):
        sf.SimConfig(epsilon=0.1, t_end=1.0, dt_slow=0.01, dt_fast=0.02,
                     initial_u=u, initial_v=u)          # dt_fast > dt_slow
    with pytest.raises(ConfigurationError):
        sf.SimConfig(epsilon=0.1, t_end=1.0, dt_slow=0.3, dt_fast=0.1,
                     initial_u=u, initial_v=u)          # T/dt_slow not integer
    with pytest.raises(ConfigurationError):
        sf.SimConfig(epsilon=0.1, t_end=1.0, dt_slow=0.01, dt_fast=0.0043,
                     initial_u=u, initial_v=u)          # dt_slow/dt_fast not integer
    with pytest.raises(ConfigurationError):
        sf.SimConfig(epsilon=0.1, t_end=1.0, dt_slow=0.01, dt_fast=0.005,
                     initial_u=u, initial_v=u, theta=1.0)


def test_stiffness_guard_enforced():
    dyn = make_dynamics(n_modes=8)
    sim = sf.SimConfig(epsilon=0.01, t_end=0.1, dt_slow=0.01, dt_fast=0.001,
                       initial_u=sf.FieldVector.unit(8, 1),
                       initial_v=sf.FieldVector.zeros(8))
    with pytest.raises(ConfigurationError):
        sf.simulate_coupled(dyn, sim, sf.StreamSet(0, 0, 0))


def test_khasminskii_single_block_equals_frozen_fast():
    dyn = make_dynamics(n_modes=4, preset_params=dict(sigma2=0.25, c2=0.1))
    dt = 0.005
    sim = sf.SimConfig(epsilon=1.0, t_end=0.2, dt_slow=0.01, dt_fast=dt,
                       initial_u=sf.FieldVector.unit(4, 1),
                       initial_v=sf.FieldVector.zeros(4))
    streams = sf.StreamSet(13, 0, 0)
    rec = sf.simulate_coupled(dyn, sim, streams)
    aux = sf.khasminskii_auxiliary(dyn, rec, sim, streams, delta=0.2)
    gw, gn = streams.fast_generators()
    frozen = sf.frozen_fast(dyn, sim.initial_u, sim.initial_v, 0.0, 0.2, dt,
                            gw, gn)
    assert np.array_equal(aux.v_path[-1], frozen.v_path[-1])
    stride = sim.n_substeps
    assert np.array_equal(aux.v_path, frozen.v_path[::stride])


def test_khasminskii_identical_when_b2_ignores_slow_state():
    cs = custom_cset(b2=lambda t, xi, u, v: -v, b2_fast=1.0,
                     f2_constant=0.3, g2_amp=0.2)
    dyn = make_dynamics(n_modes=4, cset=cs)
    sim = sf.SimConfig(epsilon=0.2, t_end=0.2, dt_slow=0.01, dt_fast=0.002,
                       initial_u=sf.FieldVector.unit(4, 1),
                       initial_v=sf.FieldVector.unit(4, 1, 0.3))
    streams = sf.StreamSet(17, 1, 0)
    rec = sf.simulate_coupled(dyn, sim, streams)
    aux = sf.khasminskii_auxiliary(dyn, rec, sim, streams, kappa=0.5)
    assert np.array_equal(aux.v_path, rec.v_path)


def test_khasminskii_rejects_unresolvable_block():
    # one-slow-step blocks are shorter than two fast steps here
    dyn = make_dynamics(n_modes=4)
    sim = sf.SimConfig(epsilon=1.0, t_end=0.2, dt_slow=0.002, dt_fast=0.002,
                       initial_u=sf.FieldVector.unit(4, 1),
                       initial_v=sf.FieldVector.zeros(4))
    rec = sf.simulate_coupled(dyn, sim, sf.StreamSet(0, 0, 0))
    with pytest.raises(ConfigurationError):
        sf.khasminskii_auxiliary(dyn, rec, sim, sf.StreamSet(0, 0, 0),
                                 delta=0.001)


def test_khasminskii_delta_rule():
    assert sf.khasminskii_delta(0.2, 0.5) == pytest.approx(
        0.5 * 0.2 * math.log(5.0), rel=1e-12)
    with pytest.raises(ConfigurationError):
        sf.khasminskii_delta(1.0, 0.5)
    with pytest.raises(ConfigurationError):
        sf.khasminskii_delta(0.2, 1.5)


def test_frozen_fast_pair_contraction_bound():
    # ||v(t;y1) - v(t;y2)|| / ||y1-y2|| <= 1.5 e^{-4} at t = 5/(alpha - L_b2)
    dyn = make_dynamics(n_modes=4,
                        preset_params=dict(sigma2=0.2, c2=0.1, alpha=3.0))
    horizon = 5.0 / (3.0 - 1.0)
    dt = horizon / 250
    x = sf.FieldVector.unit(4, 1)
    y1 = sf.FieldVector.zeros(4)
    y2 = sf.FieldVector.unit(4, 1, 1.0)
    recs = []
    for y in (y1, y2):
        gw = sf.RandomStream(3, 0, "PW2").generator()
        gn = sf.RandomStream(3, 0, "PN2").generator()
        recs.append(sf.frozen_fast(dyn, x, y, 0.0, horizon, dt, gw, gn))
    ratio = (np.linalg.norm(recs[0].v_path[-1] - recs[1].v_path[-1])
             / np.linalg.norm(y1.coeffs - y2.coeffs))
    assert ratio <= 1.5 * math.exp(-4.0)


def test_frozen_fast_zero_forcing_decays_in_mean():
    dyn = make_dynamics(n_modes=4, preset_params=dict(sigma2=0.2, c2=0.0))
    x = sf.FieldVector.zeros(4)
    y = sf.FieldVector.unit(4, 1)
    n_rep = 200
    ends = np.empty(n_rep)
    for r in range(n_rep):
        gw = sf.RandomStream(5, r, "PW2").generator()
        gn = sf.RandomStream(5, r, "PN2").generator()
        rec = sf.frozen_fast(dyn, x, y, 0.0, 4.0, 0.01, gw, gn,
                             record_path=False)
        ends[r] = rec.v_path[-1][0]
    se = ends.std(ddof=1) / math.sqrt(n_rep)
    assert abs(ends.mean()) <= max(3 * se, math.exp(-8.0) + 1e-6)


def test_holder_stats_zero_lag_and_closed_form():
    # pure decay: u(t) = e^{-alpha_1 t} u0, all coefficients zero elsewhere
    dyn = make_dynamics(n_modes=4, cset=custom_cset())
    sim = sf.SimConfig(epsilon=1.0, t_end=1.0, dt_slow=0.05, dt_fast=0.01,
                       initial_u=sf.FieldVector.unit(4, 1),
                       initial_v=sf.FieldVector.zeros(4))
    rec = sf.simulate_coupled(dyn, sim, sf.StreamSet(0, 0, 0))
    rows = sf.holder_increment_stats(rec, [0.0, 0.1, 0.2])
    assert rows[0] == (0.0, 0.0)
    for h, got in rows[1:]:
        j = int(round(h / 0.05))
        t = 0.05 * np.arange(0, sim.n_slow_steps + 1 - j)
        expected = float(np.mean(
            ((math.exp(-h) - 1.0) * np.exp(-t)) ** 2))
        assert got == pytest.approx(expected, rel=1e-10)


def test_holder_stats_rejects_misaligned_lag():
    dyn = make_dynamics(n_modes=4, cset=custom_cset())
    sim = sf.SimConfig(epsilon=1.0, t_end=0.5, dt_slow=0.05, dt_fast=0.01,
                       initial_u=sf.FieldVector.unit(4, 1),
                       initial_v=sf.FieldVector.zeros(4))
    rec = sf.simulate_coupled(dyn, sim, sf.StreamSet(0, 0, 0))
    with pytest.raises(ConfigurationError):
        sf.holder_increment_stats(rec, [0.013])
    with pytest.raises(ConfigurationError):
        sf.holder_increment_stats(rec, [2.0])


def test_step_size_robustness_of_slow_moment():
    # halving dt_fast moves E sup||u|| by <= 2% (slow channels shared)
    dyn = make_dynamics(n_modes=4, preset_params=dict(sigma1=0.3, sigma2=0.2,
                                                      c1=0.2, c2=0.1))
    eps = 0.1
    sups = {}
    for k, dt_fast in enumerate((0.001, 0.0005)):
        sim = sf.SimConfig(epsilon=eps, t_end=1.0, dt_slow=0.025,
                           dt_fast=dt_fast,
                           initial_u=sf.FieldVector.unit(4, 1),
                           initial_v=sf.FieldVector.zeros(4))
        vals = [sf.simulate_coupled(dyn, sim, sf.StreamSet(77, r, k)).sup_norm_u
                for r in range(64)]
        sups[dt_fast] = float(np.mean(vals))
    a, b = sups.values()
    assert abs(a - b) / a <= 0.02


def test_numerical_failure_carries_timestamp():
    # cubic blow-up under a coarse step
    cs = sf.preset("bistable", dict(well_depth=80.0, sigma1=0.0, sigma2=0.0,
                                    c1=0.0, c2=0.0, alpha=2.0))
    dyn = make_dynamics(n_modes=4, cset=cs)
    sim = sf.SimConfig(epsilon=1.0, t_end=3.0, dt_slow=0.5, dt_fast=0.01,
                       initial_u=sf.FieldVector.unit(4, 1, 4.0),
                       initial_v=sf.FieldVector.zeros(4))
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(NumericalFailure) as excinfo:
            sf.simulate_coupled(dyn, sim, sf.StreamSet(0, 0, 0))
    assert excinfo.value.t is not None


def test_mean_square_stability_across_epsilons():
    # sup_t of E||v||^2 stays bounded uniformly over the scale grid
    dyn = make_dynamics(n_modes=4, preset_params=dict(sigma1=0.2, sigma2=0.2,
                                                      c1=0.1, c2=0.1))
    sup_means = []
    for j, eps in enumerate((1.0, 0.1, 0.01)):
        guard = dyn.fast_step_guard(eps)
        n_sub = int(math.ceil(0.05 / guard))
        sim = sf.SimConfig(epsilon=eps, t_end=0.5, dt_slow=0.05,
                           dt_fast=0.05 / n_sub,
                           initial_u=sf.FieldVector.unit(4, 1),
                           initial_v=sf.FieldVector.zeros(4))
        acc = np.zeros(sim.n_slow_steps + 1)
        n_rep = 60
        for r in range(n_rep):
            rec = sf.simulate_coupled(dyn, sim, sf.StreamSet(55, r, 10 + j))
            acc += np.sum(rec.v_path ** 2, axis=1)
        sup_means.append(float((acc / n_rep).max()))
    assert max(sup_means) <= 4.0 * max(min(sup_means), 0.01)


def test_simulate_with_time_dependent_profiles():
    # periodic gamma2 and almost-periodic coefficients exercise the
    # per-step factor tables
    prof2 = sf.TimeProfile.offset_sine(2.0, 1.0)
    dyn = make_dynamics(n_modes=4, preset="almost-periodic-demo",
                        preset_params=dict(sigma2=0.2, c2=0.1),
                        profile2=prof2)
    sim = sf.SimConfig(epsilon=0.2, t_end=0.5, dt_slow=0.025, dt_fast=0.000625,
                       initial_u=sf.FieldVector.unit(4, 1),
                       initial_v=sf.FieldVector.zeros(4))
    rec1 = sf.simulate_coupled(dyn, sim, sf.StreamSet(91, 0, 0))
    rec2 = sf.simulate_coupled(dyn, sim, sf.StreamSet(91, 0, 0))
    assert np.all(np.isfinite(rec1.u_path))
    assert np.array_equal(rec1.u_path, rec2.u_path)
    assert np.array_equal(rec1.v_path, rec2.v_path)
