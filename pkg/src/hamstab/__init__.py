"""Lyapunov stability of the equilibrium of resonant one-degree-of-freedom Hamiltonians."""

from .classifier import (
    ChetaevCertificate,
    TwistReport,
    Verdict,
    Witness,
    chetaev_certificate,
    classify,
    classify_even,
    classify_odd,
    classify_theorem_A,
    prescreen,
    twist_check,
)
from .errors import *  # noqa: F401,F403
from .hamiltonian import (
    AngleActionState,
    CartesianState,
    DegeneratePair,
    HalfPowerSeries,
    eval_H,
    leading_pair,
    partial_phi,
    partial_r,
    to_action_angle,
    to_cartesian,
)
from .normalform import (
    Frequency,
    Nonresonant,
    NormalFormReport,
    ResonanceModule,
    TimePeriodicSeries,
    autonomize,
    deautonomize,
    degenerate_reduce,
    nf_residual,
    resonance_module,
    resonant_project,
    structure,
    synthesize,
)
from .simulator import StepControl, Trajectory, escape_experiment, integrate, integrate_many, level_orbit
from .trigpoly import RootTolerances, TrigPoly, ZeroInfo, derivative, evaluate, find_zeros, multiply

__version__ = "0.1.0"
