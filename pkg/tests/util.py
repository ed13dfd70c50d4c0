"""Shared builders for the test suite."""

import numpy as np

import slowfast as sf
from slowfast.coefficients import (CoefficientSet, GrowthRecord,
                                   LipschitzRecord)

SYM_MARKS = ((1.0, 0.5), (-1.0, 0.5))

# noise-free linear preset parameters
DET_LINEAR = dict(sigma1=0.0, sigma2=0.0, c1=0.0, c2=0.0)


def make_dynamics(n_modes=8, length=np.pi, preset="linear-ou",
                  preset_params=None, amp1=0.5, amp2=1.0, q1=1.0, q2=1.0,
                  marks1=SYM_MARKS, marks2=SYM_MARKS, profile1=None,
                  profile2=None, cset=None, quadrature_points=None):
    basis = sf.SpectralBasis(length, n_modes, quadrature_points)
    prof1 = profile1 or sf.TimeProfile.constant(1.0)
    prof2 = profile2 or sf.TimeProfile.constant(1.0)
    cs = cset if cset is not None else sf.preset(preset, dict(preset_params or {}))
    w1 = sf.NoiseSpec.power_law(n_modes, amp1, q1, 4.0, 1.0)
    w2 = sf.NoiseSpec.power_law(n_modes, amp2, q2, 4.0, 1.0)
    l1 = sf.LevyMeasureSpec.from_pairs(marks1)
    l2 = sf.LevyMeasureSpec.from_pairs(marks2)
    return sf.Dynamics(basis, prof1, prof2, cs, w1, w2, l1, l2)


def _zero4(t, xi, u, v):
    return np.zeros_like(np.asarray(u, dtype=float))


def custom_cset(b1=None, b2=None, alpha=1.0, lip_b1=2.0, lip_b2=2.0,
                b2_fast=0.0, grw_b1=2.0, grw_b2=2.0, f1_constant=0.0,
                f2_constant=0.0, g1_amp=0.0, g2_amp=0.0):
    """Hand-built coefficient set: zero maps unless overridden, constant
    diffusions, additive jumps g = amp * z."""
    return CoefficientSet(
        b1=b1 or _zero4,
        b2=b2 or _zero4,
        f1=lambda t, xi, u: np.full_like(np.asarray(u, dtype=float), f1_constant),
        f2=lambda t, xi, u, v: np.full_like(np.asarray(u, dtype=float), f2_constant),
        g1=lambda t, xi, u, z: np.full_like(np.asarray(u, dtype=float), g1_amp * z),
        g2=lambda t, xi, u, v, z: np.full_like(np.asarray(u, dtype=float), g2_amp * z),
        alpha=alpha,
        lipschitz=LipschitzRecord(b1=lip_b1, b2=lip_b2, f1=0.0, f2=0.0,
                                  g1=0.0, g2=0.0, b2_fast=b2_fast),
        growth=GrowthRecord(b1=grw_b1, b2=grw_b2, f1=abs(f1_constant),
                            f2=abs(f2_constant), g1=abs(g1_amp), g2=abs(g2_amp)),
        f1_constant=f1_constant, f2_constant=f2_constant,
        g1_additive=(lambda z: g1_amp * z), g2_additive=(lambda z: g2_amp * z))


def write_config(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)
