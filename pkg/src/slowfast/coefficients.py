"""Reaction and noise coefficient functions with preset families.

A CoefficientSet bundles the six pointwise functions of the coupled system
together with their declared Lipschitz/growth constants and the dissipativity
shift. The functions receive physical-grid arrays and must vectorize over xi.

Composition (Nemytskii) operators lift the pointwise functions to maps between
mode-coefficient vectors: transform to the grid, apply pointwise, project
back. Presets supply analytically tractable families used by the verification
harness; the linear one has a closed-form averaged drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, NumericalFailure
from .spectral import FieldVector, SpectralBasis

# statistical slack allowed when spot-checking declared constants
_CHECK_SLACK = 1.05


@dataclass(frozen=True)
class LipschitzRecord:
    """Declared joint Lipschitz constants, plus the fast-argument constant of
    b2 which the dissipativity margin needs separately."""
    b1: float
    b2: float
    f1: float
    f2: float
    g1: float
    g2: float
    b2_fast: float


@dataclass(frozen=True)
class GrowthRecord:
    b1: float
    b2: float
    f1: float
    f2: float
    g1: float
    g2: float


@dataclass(frozen=True)
class Periodicity:
    kind: str                      # "constant" | "periodic" | "almost_periodic"
    period: float | None = None
    frequencies: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("constant", "periodic", "almost_periodic"):
            raise ConfigurationError(f"unknown periodicity kind {self.kind!r}")
        if self.kind == "periodic" and (self.period is None or self.period <= 0):
            raise ConfigurationError("periodic presets need a positive period")


@dataclass(frozen=True)
class PresetFamily:
    name: str
    parameters: dict
    periodicity: Periodicity


@dataclass(frozen=True)
class CoefficientSet:
    """The six coefficient functions of the system plus declared metadata.

    Signatures (all vectorized over the grid arrays):
        b1(t, xi, u, v), b2(t, xi, u, v), f1(t, xi, u), f2(t, xi, u, v),
        g1(t, xi, u, z), g2(t, xi, u, v, z)        with scalar t and z.

    f?_constant and g?_additive are optional exact fast paths: set
    f1_constant when f1 is that constant, and g1_additive(z) when
    g1(t, xi, u, z) depends on z alone (then the jump field is
    g1_additive(z) times the constant-one field).
    """

    b1: Callable
    b2: Callable
    f1: Callable
    f2: Callable
    g1: Callable
    g2: Callable
    alpha: float
    lipschitz: LipschitzRecord
    growth: GrowthRecord
    check_box: float = 5.0
    f1_constant: float | None = None
    f2_constant: float | None = None
    g1_additive: Callable[[float], float] | None = None
    g2_additive: Callable[[float], float] | None = None
    family: PresetFamily | None = None

    def __post_init__(self):
        if self.alpha <= 0:
            raise ConfigurationError(f"alpha must be positive, got {self.alpha}")


def _project(basis: SpectralBasis, values: np.ndarray) -> FieldVector:
    values = np.broadcast_to(np.asarray(values, dtype=float), basis.nodes.shape)
    if not np.all(np.isfinite(values)):
        raise NumericalFailure("pointwise coefficient evaluation produced NaN/Inf")
    return FieldVector(basis.to_spectral(values))


def nemytskii_b1(cset: CoefficientSet, basis: SpectralBasis, t: float,
                 u: FieldVector, v: FieldVector) -> FieldVector:
    """Composition operator of b1: project b1(t, xi, u(xi), v(xi))."""
    up = basis.to_physical(u.coeffs)
    vp = basis.to_physical(v.coeffs)
    return _project(basis, cset.b1(t, basis.nodes, up, vp))


def nemytskii_b2(cset: CoefficientSet, basis: SpectralBasis, t: float,
                 u: FieldVector, v: FieldVector) -> FieldVector:
    up = basis.to_physical(u.coeffs)
    vp = basis.to_physical(v.coeffs)
    return _project(basis, cset.b2(t, basis.nodes, up, vp))


def nemytskii_f1(cset: CoefficientSet, basis: SpectralBasis, t: float,
                 u: FieldVector, h: FieldVector) -> FieldVector:
    """Multiplier form: project f1(t, xi, u(xi)) * h(xi)."""
    if cset.f1_constant is not None:
        return FieldVector(cset.f1_constant * h.coeffs)
    up = basis.to_physical(u.coeffs)
    hp = basis.to_physical(h.coeffs)
    return _project(basis, np.asarray(cset.f1(t, basis.nodes, up)) * hp)


def nemytskii_f2(cset: CoefficientSet, basis: SpectralBasis, t: float,
                 u: FieldVector, v: FieldVector, h: FieldVector) -> FieldVector:
    if cset.f2_constant is not None:
        return FieldVector(cset.f2_constant * h.coeffs)
    up = basis.to_physical(u.coeffs)
    vp = basis.to_physical(v.coeffs)
    hp = basis.to_physical(h.coeffs)
    return _project(basis, np.asarray(cset.f2(t, basis.nodes, up, vp)) * hp)


def nemytskii_g1(cset: CoefficientSet, basis: SpectralBasis, t: float,
                 u: FieldVector, z: float) -> FieldVector:
    """Jump amplitude field for mark z: project g1(t, xi, u(xi), z)."""
    up = basis.to_physical(u.coeffs)
    return _project(basis, cset.g1(t, basis.nodes, up, z))


def nemytskii_g2(cset: CoefficientSet, basis: SpectralBasis, t: float,
                 u: FieldVector, v: FieldVector, z: float) -> FieldVector:
    up = basis.to_physical(u.coeffs)
    vp = basis.to_physical(v.coeffs)
    return _project(basis, cset.g2(t, basis.nodes, up, vp, z))


def levy_drift_correction(cset: CoefficientSet, basis: SpectralBasis, levy,
                          t: float, u: FieldVector, v: FieldVector | None = None,
                          channel: int = 2) -> FieldVector:
    """Mark-measure integral of the jump field: sum_i mass_i * g(..., z_i).

    This is the compensator density of the jump term; integrators subtract
    dt * rate_scale times this vector.
    """
    if channel not in (1, 2):
        raise ConfigurationError(f"channel must be 1 or 2, got {channel}")
    if channel == 2 and v is None:
        raise ConfigurationError("channel 2 correction needs the fast state v")
    up = basis.to_physical(u.coeffs)
    vp = basis.to_physical(v.coeffs) if v is not None else None
    total = np.zeros(basis.quadrature_points)
    for z, mass in zip(levy.marks, levy.masses):
        if channel == 1:
            vals = cset.g1(t, basis.nodes, up, z)
        else:
            vals = cset.g2(t, basis.nodes, up, vp, z)
        total = total + mass * np.broadcast_to(np.asarray(vals, dtype=float),
                                               total.shape)
    return _project(basis, total)


def validate_coefficients(cset: CoefficientSet, marks=(1.0, -1.0),
                          n_samples: int = 1000, seed: int = 0) -> None:
    """Spot-check the declared Lipschitz and growth constants.

    Draws argument pairs uniformly on [-check_box, check_box] and verifies the
    declared constants with 5% slack, uniformly over the sampled marks.
    Raises ConfigurationError on the first violation.
    """
    rng = np.random.default_rng(seed)
    box = cset.check_box
    t = rng.uniform(-10.0, 10.0, n_samples)
    xi = rng.uniform(0.0, np.pi, n_samples)
    u1, u2, v1, v2 = rng.uniform(-box, box, (4, n_samples))
    lip, grw = cset.lipschitz, cset.growth

    def _chk(name, lhs, bound):
        lhs = np.asarray(lhs, dtype=float)
        bound = np.broadcast_to(np.asarray(bound, dtype=float), lhs.shape)
        bad = lhs > _CHECK_SLACK * bound + 1e-12
        if np.any(bad):
            i = int(np.argmax(bad))
            raise ConfigurationError(
                f"declared constant for {name} violated empirically: "
                f"|difference| {lhs[i]:.4g} > {_CHECK_SLACK} * {bound[i]:.4g}")

    _chk("b1 Lipschitz", np.abs(cset.b1(t, xi, u1, v1) - cset.b1(t, xi, u2, v2)),
         lip.b1 * (np.abs(u1 - u2) + np.abs(v1 - v2)))
    _chk("b2 Lipschitz", np.abs(cset.b2(t, xi, u1, v1) - cset.b2(t, xi, u2, v2)),
         lip.b2 * (np.abs(u1 - u2) + np.abs(v1 - v2)))
    _chk("b2 fast-argument Lipschitz",
         np.abs(cset.b2(t, xi, u1, v1) - cset.b2(t, xi, u1, v2)),
         lip.b2_fast * np.abs(v1 - v2) if lip.b2_fast > 0 else np.zeros(n_samples))
    _chk("f1 Lipschitz", np.abs(cset.f1(t, xi, u1) - cset.f1(t, xi, u2)),
         lip.f1 * np.abs(u1 - u2))
    _chk("f2 Lipschitz", np.abs(cset.f2(t, xi, u1, v1) - cset.f2(t, xi, u2, v2)),
         lip.f2 * (np.abs(u1 - u2) + np.abs(v1 - v2)))
    _chk("b1 growth", np.abs(cset.b1(t, xi, u1, v1)),
         grw.b1 * (1.0 + np.abs(u1) + np.abs(v1)))
    _chk("b2 growth", np.abs(cset.b2(t, xi, u1, v1)),
         grw.b2 * (1.0 + np.abs(u1) + np.abs(v1)))
    _chk("f1 growth", np.abs(cset.f1(t, xi, u1)), grw.f1 * (1.0 + np.abs(u1)))
    _chk("f2 growth", np.abs(cset.f2(t, xi, u1, v1)),
         grw.f2 * (1.0 + np.abs(u1) + np.abs(v1)))
    for z in marks:
        _chk(f"g1 Lipschitz (z={z})",
             np.abs(cset.g1(t, xi, u1, z) - cset.g1(t, xi, u2, z)),
             lip.g1 * np.abs(u1 - u2) if lip.g1 > 0 else np.zeros(n_samples))
        _chk(f"g2 Lipschitz (z={z})",
             np.abs(cset.g2(t, xi, u1, v1, z) - cset.g2(t, xi, u2, v2, z)),
             lip.g2 * (np.abs(u1 - u2) + np.abs(v1 - v2)) if lip.g2 > 0
             else np.zeros(n_samples))
        _chk(f"g1 growth (z={z})", np.abs(cset.g1(t, xi, u1, z)),
             grw.g1 * (1.0 + np.abs(u1)))
        _chk(f"g2 growth (z={z})", np.abs(cset.g2(t, xi, u1, v1, z)),
             grw.g2 * (1.0 + np.abs(u1) + np.abs(v1)))


PRESET_NAMES = ("linear-ou", "bistable", "almost-periodic-demo")

_SQRT2 = math.sqrt(2.0)


def preset(name: str, parameters: dict | None = None) -> CoefficientSet:
    """Build a named coefficient family.

    linear-ou:
        b1 = v, b2 = u - v_feedback * v, constant diffusions sigma1/sigma2,
        additive jumps c1*z / c2*z. The frozen fast equation is linear, so the
        averaged drift has the closed form x_k / (gamma2*alpha_k + alpha) when
        gamma2 is constant and v_feedback = 0.
    bistable:
        double-well slow reaction a*(u - u^3) + coupling*v over the same fast
        structure; constants declared on the validation box.
    almost-periodic-demo:
        b2 = sin(t)*u - sin(sqrt(2) t)*v/2, incommensurate frequencies, so no
        exact period exists.
    """
    params = dict(parameters or {})
    if name == "linear-ou":
        return _linear_ou(params)
    if name == "bistable":
        return _bistable(params)
    if name == "almost-periodic-demo":
        return _almost_periodic_demo(params)
    raise ConfigurationError(
        f"unknown coefficient preset {name!r}; choose one of {PRESET_NAMES}")


def _pop(params, key, default):
    return float(params.pop(key, default))


def _reject_unknown(params, name):
    if params:
        raise ConfigurationError(
            f"unknown parameter(s) for preset {name!r}: {sorted(params)}")


def _linear_ou(params: dict) -> CoefficientSet:
    sigma1 = _pop(params, "sigma1", 0.2)
    sigma2 = _pop(params, "sigma2", 0.2)
    c1 = _pop(params, "c1", 0.1)
    c2 = _pop(params, "c2", 0.1)
    alpha = _pop(params, "alpha", 1.0)
    vf = _pop(params, "v_feedback", 0.0)
    b1_u = _pop(params, "b1_u_gain", 0.0)
    b1_v = _pop(params, "b1_v_gain", 1.0)
    _reject_unknown(params, "linear-ou")

    def b1(t, xi, u, v):
        return b1_u * u + b1_v * v

    def b2(t, xi, u, v):
        return u - vf * v

    def f1(t, xi, u):
        return np.full_like(np.asarray(u, dtype=float), sigma1)

    def f2(t, xi, u, v):
        return np.full_like(np.asarray(u, dtype=float), sigma2)

    def g1(t, xi, u, z):
        return np.full_like(np.asarray(u, dtype=float), c1 * z)

    def g2(t, xi, u, v, z):
        return np.full_like(np.asarray(u, dtype=float), c2 * z)

    fam = PresetFamily("linear-ou",
                       dict(sigma1=sigma1, sigma2=sigma2, c1=c1, c2=c2,
                            alpha=alpha, v_feedback=vf,
                            b1_u_gain=b1_u, b1_v_gain=b1_v),
                       Periodicity("constant"))
    l_b1 = max(abs(b1_u), abs(b1_v))
    return CoefficientSet(
        b1=b1, b2=b2, f1=f1, f2=f2, g1=g1, g2=g2, alpha=alpha,
        lipschitz=LipschitzRecord(b1=l_b1, b2=max(1.0, abs(vf)), f1=0.0, f2=0.0,
                                  g1=0.0, g2=0.0, b2_fast=abs(vf)),
        growth=GrowthRecord(b1=l_b1, b2=max(1.0, abs(vf)), f1=sigma1, f2=sigma2,
                            g1=abs(c1), g2=abs(c2)),
        f1_constant=sigma1, f2_constant=sigma2,
        g1_additive=(lambda z: c1 * z), g2_additive=(lambda z: c2 * z),
        family=fam)


def _bistable(params: dict) -> CoefficientSet:
    a = _pop(params, "well_depth", 1.0)
    coupling = _pop(params, "coupling", 1.0)
    sigma1 = _pop(params, "sigma1", 0.2)
    sigma2 = _pop(params, "sigma2", 0.2)
    c1 = _pop(params, "c1", 0.1)
    c2 = _pop(params, "c2", 0.1)
    alpha = _pop(params, "alpha", 2.0)
    box = _pop(params, "check_box", 2.0)
    _reject_unknown(params, "bistable")

    def b1(t, xi, u, v):
        return a * (u - u ** 3) + coupling * v

    def b2(t, xi, u, v):
        return u + 0.0 * v

    def f1(t, xi, u):
        return np.full_like(np.asarray(u, dtype=float), sigma1)

    def f2(t, xi, u, v):
        return np.full_like(np.asarray(u, dtype=float), sigma2)

    def g1(t, xi, u, z):
        return np.full_like(np.asarray(u, dtype=float), c1 * z)

    def g2(t, xi, u, v, z):
        return np.full_like(np.asarray(u, dtype=float), c2 * z)

    # u - u^3 is Lipschitz only on the box; constants declared accordingly
    l_b1 = a * (1.0 + 3.0 * box ** 2) + abs(coupling)
    m_b1 = a * (1.0 + box ** 2) + abs(coupling)
    fam = PresetFamily("bistable",
                       dict(well_depth=a, coupling=coupling, sigma1=sigma1,
                            sigma2=sigma2, c1=c1, c2=c2, alpha=alpha,
                            check_box=box),
                       Periodicity("constant"))
    return CoefficientSet(
        b1=b1, b2=b2, f1=f1, f2=f2, g1=g1, g2=g2, alpha=alpha,
        lipschitz=LipschitzRecord(b1=l_b1, b2=1.0, f1=0.0, f2=0.0,
                                  g1=0.0, g2=0.0, b2_fast=0.0),
        growth=GrowthRecord(b1=m_b1, b2=1.0, f1=sigma1, f2=sigma2,
                            g1=abs(c1), g2=abs(c2)),
        check_box=box,
        f1_constant=sigma1, f2_constant=sigma2,
        g1_additive=(lambda z: c1 * z), g2_additive=(lambda z: c2 * z),
        family=fam)


def _almost_periodic_demo(params: dict) -> CoefficientSet:
    sigma1 = _pop(params, "sigma1", 0.2)
    sigma2 = _pop(params, "sigma2", 0.2)
    c1 = _pop(params, "c1", 0.1)
    c2 = _pop(params, "c2", 0.1)
    alpha = _pop(params, "alpha", 2.0)
    _reject_unknown(params, "almost-periodic-demo")

    def b1(t, xi, u, v):
        return v + 0.0 * u

    def b2(t, xi, u, v):
        return np.sin(t) * u - 0.5 * np.sin(_SQRT2 * t) * v

    def f1(t, xi, u):
        return np.full_like(np.asarray(u, dtype=float), sigma1)

    def f2(t, xi, u, v):
        return np.full_like(np.asarray(u, dtype=float), sigma2)

    def g1(t, xi, u, z):
        return np.full_like(np.asarray(u, dtype=float), c1 * z)

    def g2(t, xi, u, v, z):
        return np.full_like(np.asarray(u, dtype=float), c2 * z)

    fam = PresetFamily("almost-periodic-demo",
                       dict(sigma1=sigma1, sigma2=sigma2, c1=c1, c2=c2,
                            alpha=alpha),
                       Periodicity("almost_periodic", frequencies=(1.0, _SQRT2)))
    return CoefficientSet(
        b1=b1, b2=b2, f1=f1, f2=f2, g1=g1, g2=g2, alpha=alpha,
        lipschitz=LipschitzRecord(b1=1.0, b2=1.0, f1=0.0, f2=0.0,
                                  g1=0.0, g2=0.0, b2_fast=0.5),
        growth=GrowthRecord(b1=1.0, b2=1.0, f1=sigma1, f2=sigma2,
                            g1=abs(c1), g2=abs(c2)),
        f1_constant=sigma1, f2_constant=sigma2,
        g1_additive=(lambda z: c1 * z), g2_additive=(lambda z: c2 * z),
        family=fam)
