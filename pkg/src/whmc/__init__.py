"""Wiener-Hopf Monte-Carlo simulation of Levy processes.

Simulates the joint law of a process and its running extrema at a
randomized horizon by drawing per-step supremum/infimum factors from
semi-explicit exponential-series laws, with transform-based benchmarks and
barrier-option pricing on top.
"""

__version__ = "0.1.0"

from .engine import Estimate, JumpAugmentation, PathFunctionalSample, SimConfig
from .factorization import FactorizationPair, FactorLaw, RootLadder, factor_laws, locate_roots
from .models import (
    BetaFamilyParams,
    BetaSubordinatorParams,
    HypergeometricParams,
    LevyModel,
    calibrate_risk_neutral_drift,
    model_from_json,
    model_to_json,
)
from .presets import parameter_set, preset_pricing
from .pricing import BarrierSpec

__all__ = [
    "BarrierSpec",
    "BetaFamilyParams",
    "BetaSubordinatorParams",
    "Estimate",
    "FactorLaw",
    "FactorizationPair",
    "HypergeometricParams",
    "JumpAugmentation",
    "LevyModel",
    "PathFunctionalSample",
    "RootLadder",
    "SimConfig",
    "calibrate_risk_neutral_drift",
    "factor_laws",
    "locate_roots",
    "model_from_json",
    "model_to_json",
    "parameter_set",
    "preset_pricing",
]
