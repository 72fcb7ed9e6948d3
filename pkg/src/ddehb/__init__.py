"""Limit cycles, Floquet exponents and response curves for DDE oscillators.

The toolkit determines the periodic orbit of a delay-differential
oscillator by harmonic balance, extracts real Floquet exponents and
eigenfunctions from the resulting spectral stability system, and computes
normalized phase and amplitude response curves from the adjoint system.
An independent time-evolution oracle (method of steps, finite-segment
discretization, monodromy and backward-adjoint integration, direct
perturbation) validates every quantity.
"""

__version__ = "0.1.0"

from .adjoint import (
    ResponseCurve,
    build_adjoint_matrix,
    conserved_pairing,
    normalize_amplitude,
    normalize_phase,
    solve_response,
)
from .cycle import (
    CycleSeed,
    PeriodicOrbit,
    SolveOptions,
    convergence_sweep,
    residual,
    seed_from_ansatz,
    solve_cycle,
)
from .floquet import (
    FloquetMode,
    StabilityMatrix,
    build_stability_matrix,
    det_scan,
    eigenfunction,
    find_exponents,
    refine_exponent,
)
from .model import (
    ModelSpec,
    cortico_thalamic,
    kotani_scalar,
    make_model,
    verify_jacobians,
)
from .oracle import (
    DiscretizedSystem,
    Trajectory,
    build_discretized,
    direct_prc,
    discretized_adjoint,
    integrate_dde,
    monodromy_exponents,
    oracle_amplitude_response,
    oracle_eigenfunction,
    oracle_floquet,
    oracle_phase_response,
    settle_to_cycle,
)
from .spectral import (
    FourierSeries,
    SpectralGrid,
    SpectralOperators,
    build_operators,
    coeffs_to_samples,
    evaluate,
    sample_to_coeffs,
)

__all__ = [
    "__version__",
    "CycleSeed",
    "DiscretizedSystem",
    "FloquetMode",
    "FourierSeries",
    "ModelSpec",
    "PeriodicOrbit",
    "ResponseCurve",
    "SolveOptions",
    "SpectralGrid",
    "SpectralOperators",
    "StabilityMatrix",
    "Trajectory",
    "build_adjoint_matrix",
    "build_discretized",
    "build_operators",
    "build_stability_matrix",
    "coeffs_to_samples",
    "conserved_pairing",
    "convergence_sweep",
    "cortico_thalamic",
    "det_scan",
    "direct_prc",
    "discretized_adjoint",
    "eigenfunction",
    "evaluate",
    "find_exponents",
    "integrate_dde",
    "kotani_scalar",
    "make_model",
    "monodromy_exponents",
    "normalize_amplitude",
    "normalize_phase",
    "oracle_amplitude_response",
    "oracle_eigenfunction",
    "oracle_floquet",
    "oracle_phase_response",
    "refine_exponent",
    "residual",
    "sample_to_coeffs",
    "seed_from_ansatz",
    "settle_to_cycle",
    "solve_cycle",
    "solve_response",
    "verify_jacobians",
]
