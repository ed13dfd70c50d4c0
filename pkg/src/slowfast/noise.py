"""Q-Wiener increments, compound-Poisson jump batches, and random streams.

Streams are counter-based (Philox keyed through SeedSequence spawn keys), so a
stream is fully addressed by (seed, replica, channel, substream) and can be
replayed bit-for-bit. That is what lets the coupled experiments share the slow
noise between the true and averaged equations while the fast channels stay
independent across scale parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigurationError
from .spectral import FieldVector, SpectralBasis
from . import coefficients as cf

# channel tags -> spawn-key codes; W = Wiener, N = Poisson, E* = the averaged
# drift estimator's private fast channels, P* = particle-cloud channels
CHANNEL_TAGS = {"W1": 0, "W2": 1, "N1": 2, "N2": 3,
                "EW2": 4, "EN2": 5, "PW2": 6, "PN2": 7}

_MAX_EXPECTED_JUMPS = 1e7


@dataclass(frozen=True)
class RandomStream:
    """Addressed, replayable random stream."""

    seed: int
    replica: int
    channel: str
    substream: int = 0

    def __post_init__(self):
        if self.channel not in CHANNEL_TAGS:
            raise ConfigurationError(
                f"unknown channel tag {self.channel!r}; "
                f"known: {sorted(CHANNEL_TAGS)}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigurationError("seed must fit in an unsigned 64-bit integer")

    def generator(self) -> np.random.Generator:
        key = (int(self.replica), CHANNEL_TAGS[self.channel], int(self.substream))
        ss = np.random.SeedSequence(int(self.seed), spawn_key=key)
        return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class NoiseSpec:
    """Spectrum of one Q-Wiener channel with its admissibility exponents."""

    q_eigenvalues: np.ndarray
    rho: float
    beta: float

    def __post_init__(self):
        lam = np.array(self.q_eigenvalues, dtype=float, copy=True)
        if lam.ndim != 1 or lam.size < 1:
            raise ConfigurationError("q_eigenvalues must be a 1-d array")
        if np.any(lam < 0) or not np.all(np.isfinite(lam)):
            raise ConfigurationError("q_eigenvalues must be finite and nonnegative")
        if not (self.rho > 2):
            raise ConfigurationError(f"rho must exceed 2 (or be inf), got {self.rho}")
        if not (self.beta > 0):
            raise ConfigurationError(f"beta must be positive, got {self.beta}")
        lam.setflags(write=False)
        object.__setattr__(self, "q_eigenvalues", lam)

    @classmethod
    def power_law(cls, n_modes: int, amplitude: float, q: float,
                  rho: float, beta: float) -> "NoiseSpec":
        """lambda_k = amplitude * k^(-q)."""
        k = np.arange(1, n_modes + 1, dtype=float)
        return cls(amplitude * k ** (-q), rho, beta)

    def admissibility_ratio(self) -> float:
        if math.isinf(self.rho):
            return self.beta
        return self.beta * (self.rho - 2.0) / self.rho


@dataclass(frozen=True)
class A2Report:
    kappa: float
    zeta: float
    ratio: float
    admissible: bool
    n_modes: int


def check_a2_admissibility(spec: NoiseSpec, basis: SpectralBasis) -> A2Report:
    """Partial sums kappa = sum lambda_k^rho ||e_k||_inf^2 and
    zeta = sum alpha_k^(-beta) ||e_k||_inf^2 over the retained modes, plus the
    exponent ratio beta*(rho-2)/rho. For the sine family ||e_k||_inf^2 = 2/L.
    """
    n = min(spec.q_eigenvalues.size, basis.n_modes)
    sup2 = basis.eigenfunction_sup ** 2
    lam = spec.q_eigenvalues[:n]
    if math.isinf(spec.rho):
        # limiting diagnostic: sup of the spectrum instead of a power sum
        kappa = float(lam.max() * sup2) if n else 0.0
    else:
        kappa = float(np.sum(lam ** spec.rho) * sup2)
    zeta = float(np.sum(basis.eigenvalues[:n] ** (-spec.beta)) * sup2)
    ratio = spec.admissibility_ratio()
    ok = ratio < 1.0 and math.isfinite(kappa) and math.isfinite(zeta)
    return A2Report(kappa=kappa, zeta=zeta, ratio=ratio, admissible=ok, n_modes=n)


class LevyMeasureSpec:
    """Finite-activity mark measure: point masses, or a density reduced to
    point masses on a quadrature grid."""

    def __init__(self, marks, masses):
        marks = np.array(marks, dtype=float)
        masses = np.array(masses, dtype=float)
        if marks.ndim != 1 or marks.shape != masses.shape:
            raise ConfigurationError("marks and masses must be matching 1-d arrays")
        if np.any(masses < 0) or not np.all(np.isfinite(masses)):
            raise ConfigurationError("mark masses must be finite and nonnegative")
        if not np.all(np.isfinite(marks)):
            raise ConfigurationError("mark values must be finite")
        marks.setflags(write=False)
        masses.setflags(write=False)
        self.marks = marks
        self.masses = masses
        self.total_mass = float(masses.sum())

    @classmethod
    def from_pairs(cls, pairs) -> "LevyMeasureSpec":
        if len(pairs) == 0:
            return cls(np.zeros(0), np.zeros(0))
        marks, masses = zip(*pairs)
        return cls(marks, masses)

    @classmethod
    def from_density(cls, density, support: tuple[float, float],
                     n_nodes: int = 64) -> "LevyMeasureSpec":
        a, b = support
        if not a < b:
            raise ConfigurationError("density support must be a proper interval")
        x, w = np.polynomial.legendre.leggauss(n_nodes)
        z = 0.5 * (b - a) * (x + 1.0) + a
        masses = 0.5 * (b - a) * w * np.asarray(density(z), dtype=float)
        if np.any(masses < 0):
            raise ConfigurationError("mark density must be nonnegative")
        return cls(z, masses)

    @cached_property
    def _cumulative(self) -> np.ndarray:
        if self.total_mass == 0.0:
            return np.zeros(0)
        return np.cumsum(self.masses) / self.total_mass

    def __repr__(self):
        return (f"LevyMeasureSpec({self.marks.size} marks, "
                f"total_mass={self.total_mass:g})")


def sample_wiener_increment(spec: NoiseSpec, stream, dt: float) -> FieldVector:
    """One Q-Wiener increment over dt: mode k gets lambda_k sqrt(dt) N(0,1)."""
    if dt <= 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    gen = stream.generator() if isinstance(stream, RandomStream) else stream
    z = gen.standard_normal(spec.q_eigenvalues.size)
    return FieldVector(spec.q_eigenvalues * math.sqrt(dt) * z)


def sample_jump_batch(levy: LevyMeasureSpec, stream, dt: float,
                      rate_scale: float) -> list[tuple[float, float]]:
    """Jumps of the compound Poisson channel over one step.

    The count is Poisson(total_mass * rate_scale * dt), times are uniform on
    (0, dt] (sorted), marks are i.i.d. from the normalized mark measure.
    """
    if dt <= 0 or rate_scale <= 0:
        raise ConfigurationError("dt and rate_scale must be positive")
    lam = levy.total_mass * rate_scale * dt
    if lam > _MAX_EXPECTED_JUMPS:
        raise ConfigurationError(
            f"expected jump count {lam:.3g} per step exceeds {_MAX_EXPECTED_JUMPS:g}; "
            f"shrink the step size")
    if levy.total_mass == 0.0:
        return []
    gen = stream.generator() if isinstance(stream, RandomStream) else stream
    count = int(gen.poisson(lam))
    if count == 0:
        return []
    times = np.sort(gen.random(count)) * dt
    marks = levy.marks[np.searchsorted(levy._cumulative, gen.random(count))]
    return list(zip(times.tolist(), marks.tolist()))


def compensated_jump_integral(levy: LevyMeasureSpec, jumps, cset, basis,
                              t: float, u: FieldVector,
                              v: FieldVector | None, dt: float,
                              rate_scale: float, channel: int = 2) -> FieldVector:
    """Jump sum minus compensator, with the state frozen at the step's left
    endpoint: sum_j G(t, u, v, z_j) - dt * rate_scale * int G dnu."""
    n = basis.n_modes
    acc = np.zeros(n)
    for _, z in jumps:
        if channel == 1:
            acc = acc + cf.nemytskii_g1(cset, basis, t, u, z).coeffs
        else:
            acc = acc + cf.nemytskii_g2(cset, basis, t, u, v, z).coeffs
    comp = cf.levy_drift_correction(cset, basis, levy, t, u, v, channel=channel)
    return FieldVector(acc - dt * rate_scale * comp.coeffs)
