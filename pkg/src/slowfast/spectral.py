"""Dirichlet sine eigenbasis on (0, L) and the time-dependent linear flow.

The linear part of each equation is gamma(t) * Laplacian plus an optional
first-order transport term, shifted by a nonnegative constant. With Dirichlet
boundary conditions everything is diagonal in the sine basis except the
transport coupling, which is assembled by quadrature on a Gauss-Legendre grid.

The same grid backs the field transforms. Gauss-Legendre is spectrally exact
here: with the default node count (8 per retained mode) the discrete Gram
matrix is orthonormal to machine precision and pointwise products of up to
three retained modes project exactly, which is what the nonlinear terms need.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, linalg

from .errors import ConfigurationError, NumericalFailure

# exp(-x) underflows float64 near x = 745; clamp a little earlier
EXP_CLAMP = 700.0

_GRAM_TOL = 1e-12


def dirichlet_eigenvalue(k: int, length: float) -> float:
    """Eigenvalue (k*pi/L)**2 of the negative Laplacian on (0, length)."""
    if k < 1:
        raise ConfigurationError(f"mode index must be >= 1, got {k}")
    if length <= 0:
        raise ConfigurationError(f"domain length must be positive, got {length}")
    return (k * np.pi / length) ** 2


class SpectralBasis:
    """Truncated sine basis e_k(xi) = sqrt(2/L) sin(k pi xi / L), k = 1..N.

    Holds the eigenvalues alpha_k, the quadrature grid, and the matrices that
    move fields between mode coefficients and physical grid values. The
    constructor verifies discrete orthonormality and refuses grids too coarse
    to transform round-trip at 1e-12.
    """

    def __init__(self, domain_length: float, n_modes: int,
                 quadrature_points: int | None = None):
        if domain_length <= 0:
            raise ConfigurationError(
                f"domain length must be positive, got {domain_length}")
        if n_modes < 1:
            raise ConfigurationError(f"n_modes must be >= 1, got {n_modes}")
        if quadrature_points is None:
            quadrature_points = max(8 * n_modes, 32)
        if quadrature_points < 2 * n_modes:
            raise ConfigurationError(
                f"quadrature_points must be >= 2*n_modes = {2 * n_modes}, "
                f"got {quadrature_points}")

        self.domain_length = float(domain_length)
        self.n_modes = int(n_modes)
        self.quadrature_points = int(quadrature_points)

        length = self.domain_length
        k = np.arange(1, self.n_modes + 1)
        self.eigenvalues = (k * np.pi / length) ** 2

        gl_nodes, gl_weights = np.polynomial.legendre.leggauss(self.quadrature_points)
        self.nodes = 0.5 * length * (gl_nodes + 1.0)
        self.weights = 0.5 * length * gl_weights

        freq = k * np.pi / length
        amp = np.sqrt(2.0 / length)
        phase = np.outer(self.nodes, freq)
        self.eval_matrix = amp * np.sin(phase)            # (M, N)
        self.deriv_matrix = amp * freq * np.cos(phase)    # (M, N)
        self.proj_matrix = (self.eval_matrix * self.weights[:, None]).T  # (N, M)

        gram = self.proj_matrix @ self.eval_matrix
        gram_err = float(np.abs(gram - np.eye(self.n_modes)).max())
        if gram_err > _GRAM_TOL:
            raise NumericalFailure(
                f"quadrature grid too coarse: transform round-trip error "
                f"{gram_err:.2e} > {_GRAM_TOL:g} "
                f"(n_modes={self.n_modes}, quadrature_points={self.quadrature_points})")
        self.gram_error = gram_err
        # sup norm of every e_k; constant for the sine family
        self.eigenfunction_sup = amp

    def to_physical(self, coeffs: np.ndarray) -> np.ndarray:
        return self.eval_matrix @ np.asarray(coeffs, dtype=float)

    def to_spectral(self, values: np.ndarray) -> np.ndarray:
        return self.proj_matrix @ np.asarray(values, dtype=float)

    def __repr__(self):
        return (f"SpectralBasis(L={self.domain_length:g}, N={self.n_modes}, "
                f"M={self.quadrature_points})")


@dataclass(frozen=True)
class FieldVector:
    """An element of L2(0, L) as truncated sine-mode coefficients."""

    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=float, copy=True)
        if arr.ndim != 1:
            raise ConfigurationError("FieldVector coefficients must be 1-d")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @classmethod
    def zeros(cls, n: int) -> "FieldVector":
        return cls(np.zeros(n))

    @classmethod
    def unit(cls, n: int, k: int, amplitude: float = 1.0) -> "FieldVector":
        """Pure mode k (1-based) with the given coefficient."""
        if not 1 <= k <= n:
            raise ConfigurationError(f"mode index {k} outside 1..{n}")
        coeffs = np.zeros(n)
        coeffs[k - 1] = amplitude
        return cls(coeffs)

    def norm(self) -> float:
        """L2 norm; equals the Euclidean norm of the coefficients."""
        return float(np.linalg.norm(self.coeffs))

    def __len__(self):
        return self.coeffs.shape[0]


def fractional_norm(state: FieldVector, basis: SpectralBasis, theta: float) -> float:
    """Norm of (-A)^theta applied to the field: sqrt(sum alpha_k^(2 theta) x_k^2)."""
    if not 0.0 <= theta < 1.0:
        raise ConfigurationError(f"theta must lie in [0, 1), got {theta}")
    if theta == 0.0:
        return state.norm()
    return float(np.sqrt(np.sum(basis.eigenvalues ** (2.0 * theta)
                                * state.coeffs ** 2)))


@dataclass(frozen=True)
class TimeProfile:
    """Time dependence of one linear operator: the scalar gamma(t) and the
    optional transport coefficient ell(t, xi).

    gamma must be vectorized over t and bounded in [gamma_lower, gamma_upper];
    the bounds are checked on a dense grid over validation_window at
    construction. Set gamma_constant when gamma is constant so the hot paths
    can skip quadrature.
    """

    gamma: Callable[[np.ndarray], np.ndarray]
    gamma_lower: float
    gamma_upper: float
    ell: Callable[[float, np.ndarray], np.ndarray] | None = None
    gamma_constant: float | None = None
    validation_window: tuple[float, float] = (0.0, 64.0)

    def __post_init__(self):
        if not 0.0 < self.gamma_lower <= self.gamma_upper:
            raise ConfigurationError(
                f"need 0 < gamma_lower <= gamma_upper, got "
                f"[{self.gamma_lower}, {self.gamma_upper}]")
        t0, t1 = self.validation_window
        grid = np.linspace(t0, t1, 2049)
        vals = np.asarray(self.gamma(grid), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ConfigurationError("gamma(t) not finite on validation grid")
        if vals.min() < self.gamma_lower - 1e-12 or vals.max() > self.gamma_upper + 1e-12:
            raise ConfigurationError(
                f"gamma(t) leaves [{self.gamma_lower}, {self.gamma_upper}] on the "
                f"validation grid (range [{vals.min():.6g}, {vals.max():.6g}])")
        if self.gamma_constant is not None:
            if np.abs(vals - self.gamma_constant).max() > 1e-12:
                raise ConfigurationError("gamma_constant declared but gamma varies")

    @classmethod
    def constant(cls, value: float) -> "TimeProfile":
        if value <= 0:
            raise ConfigurationError(f"constant gamma must be positive, got {value}")
        return cls(gamma=lambda t: np.full_like(np.asarray(t, dtype=float), value),
                   gamma_lower=value, gamma_upper=value, gamma_constant=value)

    @classmethod
    def offset_sine(cls, base: float, amplitude: float, omega: float = 1.0,
                    ell: Callable | None = None) -> "TimeProfile":
        """gamma(t) = base + amplitude * sin(omega t); requires base > |amplitude|."""
        if base <= abs(amplitude):
            raise ConfigurationError(
                f"offset-sine gamma needs base > |amplitude| to stay positive "
                f"(base={base}, amplitude={amplitude})")
        return cls(gamma=lambda t: base + amplitude * np.sin(omega * np.asarray(t, dtype=float)),
                   gamma_lower=base - abs(amplitude),
                   gamma_upper=base + abs(amplitude),
                   ell=ell)

    def with_transport(self, ell: Callable) -> "TimeProfile":
        return TimeProfile(gamma=self.gamma, gamma_lower=self.gamma_lower,
                           gamma_upper=self.gamma_upper, ell=ell,
                           gamma_constant=self.gamma_constant,
                           validation_window=self.validation_window)


def gamma_integral(profile: TimeProfile, s: float, t: float) -> float:
    """Integral of gamma over [s, t] by adaptive quadrature.

    Absolute error is held below 1e-10 * (t - s) * gamma_upper per contract.
    """
    if s > t:
        raise ConfigurationError(f"gamma_integral requires s <= t, got s={s} > t={t}")
    if t == s:
        return 0.0
    if profile.gamma_constant is not None:
        return profile.gamma_constant * (t - s)
    budget = 1e-10 * (t - s) * profile.gamma_upper
    val, err = integrate.quad(profile.gamma, s, t,
                              epsabs=min(budget * 1e-2, 1e-12),
                              epsrel=1e-12, limit=500)
    if err > budget:
        raise NumericalFailure(
            f"gamma quadrature error {err:.2e} exceeds budget {budget:.2e}")
    return float(val)


# 10-point Gauss-Legendre is exact far beyond 1e-10*dt for smooth gamma on
# integrator-sized steps; used to build per-step tables without scipy overhead.
_STEP_GL_X, _STEP_GL_W = np.polynomial.legendre.leggauss(10)


def gamma_step_integrals(profile: TimeProfile, t0: float, dt: float,
                         n_steps: int) -> np.ndarray:
    """Integrals of gamma over each of n_steps consecutive steps of width dt."""
    if n_steps < 0 or dt <= 0:
        raise ConfigurationError("need n_steps >= 0 and dt > 0")
    if profile.gamma_constant is not None:
        return np.full(n_steps, profile.gamma_constant * dt)
    starts = t0 + dt * np.arange(n_steps)
    tt = starts[:, None] + 0.5 * dt * (_STEP_GL_X[None, :] + 1.0)
    vals = np.asarray(profile.gamma(tt), dtype=float)
    return 0.5 * dt * (vals @ _STEP_GL_W)


def transport_matrix(basis: SpectralBasis, profile: TimeProfile, t: float) -> np.ndarray:
    """Galerkin matrix C(t)_{kj} = <ell(t, .) e_j', e_k> of the transport term."""
    if profile.ell is None:
        return np.zeros((basis.n_modes, basis.n_modes))
    ell_vals = np.broadcast_to(
        np.asarray(profile.ell(t, basis.nodes), dtype=float), basis.nodes.shape)
    if not np.all(np.isfinite(ell_vals)):
        raise NumericalFailure(f"transport coefficient not finite at t={t}")
    return basis.proj_matrix @ (ell_vals[:, None] * basis.deriv_matrix)


def transport_sup_norm(basis: SpectralBasis, profile: TimeProfile,
                       n_times: int = 65) -> float:
    """sup over the validation grid of the operator norm of C(t).

    Cross-checks the assembly against a grid twice as fine and reports
    quadrature non-convergence as a numerical failure.
    """
    if profile.ell is None:
        return 0.0
    fine = SpectralBasis(basis.domain_length, basis.n_modes,
                         2 * basis.quadrature_points)
    t0, t1 = profile.validation_window
    sup = 0.0
    for t in np.linspace(t0, t1, n_times):
        c = transport_matrix(basis, profile, t)
        c_fine = transport_matrix(fine, profile, t)
        if np.abs(c - c_fine).max() > 1e-8:
            raise NumericalFailure(
                f"transport quadrature not converged at t={t:.6g}: "
                f"refinement shift {np.abs(c - c_fine).max():.2e}")
        sup = max(sup, float(np.linalg.norm(c, 2)))
    return sup


def assemble_drift_matrix(basis: SpectralBasis, profile: TimeProfile, t: float,
                          shift: float = 0.0) -> np.ndarray:
    """Galerkin drift matrix M(t) = -gamma(t) diag(alpha) + C(t) - shift * I."""
    if shift < 0:
        raise ConfigurationError(f"shift must be nonnegative, got {shift}")
    g = float(np.asarray(profile.gamma(t), dtype=float))
    m = np.diag(-g * basis.eigenvalues - shift)
    if profile.ell is not None:
        m = m + transport_matrix(basis, profile, t)
    return m


def mode_decay_factors(basis: SpectralBasis, gamma_increment: float, shift: float,
                       dt: float, epsilon: float) -> tuple[np.ndarray, int]:
    """Per-mode factors exp(-(gamma_increment*alpha_k + shift*dt)/epsilon).

    Exponent magnitudes beyond the float64 range clamp the factor to zero;
    the clamp count is returned for diagnostics.
    """
    expo = (gamma_increment * basis.eigenvalues + shift * dt) / epsilon
    clamped = expo > EXP_CLAMP
    n_clamped = int(np.count_nonzero(clamped))
    factors = np.exp(-np.minimum(expo, EXP_CLAMP))
    if n_clamped:
        factors = np.where(clamped, 0.0, factors)
    return factors, n_clamped


def propagate(basis: SpectralBasis, profile: TimeProfile, state: FieldVector,
              s: float, t: float, shift: float = 0.0, epsilon: float = 1.0,
              diagnostics: dict | None = None) -> FieldVector:
    """Apply the evolution factor of the linear flow from time s to t.

    Mode-wise exact exponential when there is no transport term; with
    transport, the frozen-coefficient matrix exponential exp(M(s)*(t-s)/eps).
    """
    if epsilon <= 0:
        raise ConfigurationError(f"epsilon must be positive, got {epsilon}")
    if s > t:
        raise ConfigurationError(f"propagate requires s <= t, got s={s} > t={t}")
    if t == s:
        return state
    if profile.ell is None:
        gint = gamma_integral(profile, s, t)
        factors, n_clamped = mode_decay_factors(basis, gint, shift, t - s, epsilon)
        if n_clamped and diagnostics is not None:
            diagnostics["exp_clamps"] = diagnostics.get("exp_clamps", 0) + n_clamped
        return FieldVector(factors * state.coeffs)
    m = assemble_drift_matrix(basis, profile, s, shift)
    return FieldVector(linalg.expm(m * ((t - s) / epsilon)) @ state.coeffs)
