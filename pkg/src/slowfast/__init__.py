"""Spectral-Galerkin simulator and verification harness for non-autonomous
slow-fast stochastic reaction-diffusion systems with Wiener and jump noise."""

from .spectral import (SpectralBasis, FieldVector, TimeProfile,
                       dirichlet_eigenvalue, gamma_integral,
                       assemble_drift_matrix, propagate, fractional_norm)
from .coefficients import (CoefficientSet, PresetFamily, preset,
                           nemytskii_b1, nemytskii_b2, nemytskii_f1,
                           nemytskii_f2, nemytskii_g1, nemytskii_g2,
                           levy_drift_correction, validate_coefficients)
from .noise import (NoiseSpec, LevyMeasureSpec, RandomStream,
                    sample_wiener_increment, sample_jump_batch,
                    compensated_jump_integral, check_a2_admissibility)
from .integrator import (Dynamics, SimConfig, StreamSet, TrajectoryRecord,
                         step_slow, step_fast, simulate_coupled, frozen_fast,
                         khasminskii_auxiliary, khasminskii_delta,
                         holder_increment_stats)
from .averaging import (AveragingOptions, AveragedDriftEstimate, MeasureSample,
                        DriftEstimator, estimate_averaged_drift,
                        sample_quasi_stationary, transition_expectation,
                        solve_averaged, write_drift_cache, read_drift_cache)
from .harness import (ConvergenceReport, VerifySuiteResult,
                      convergence_experiment, verify_lemmas, emit_report)
from .config import RunConfig, parse_config, build_dynamics
from .errors import ConfigurationError, NumericalFailure

__version__ = "0.1.0"
