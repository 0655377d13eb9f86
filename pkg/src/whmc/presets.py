"""Benchmark parameter sets and pricing presets.

Both sets share the symmetric jump structure (c, alpha, beta, lambda)
= (1, 1, 1.5, 1.5) on each side; Set 1 carries a Gaussian component
sigma = 0.4, Set 2 has sigma = 0 (bounded variation, irregular upward once
the risk-neutral drift is negative). The linear drift is calibrated so
Psi(-i) = -r with r = 0.05.
"""

from __future__ import annotations

from dataclasses import dataclass

from .models import BetaFamilyParams, LevyModel, calibrate_risk_neutral_drift
from .pricing import BarrierSpec

__all__ = ["RATE", "parameter_set", "preset_pricing", "PRESET_NAMES"]

RATE = 0.05

PRESET_NAMES = ("paper-set1", "paper-set2", "paper-dnt")


def parameter_set(which: int, r: float = RATE) -> LevyModel:
    """Calibrated benchmark model 1 (sigma = 0.4) or 2 (sigma = 0)."""
    if which not in (1, 2):
        raise ValueError("parameter set is 1 or 2")
    sigma = 0.4 if which == 1 else 0.0
    params = BetaFamilyParams(
        a=0.0, sigma=sigma,
        c1=1.0, alpha1=1.0, beta1=1.5, lambda1=1.5,
        c2=1.0, alpha2=1.0, beta2=1.5, lambda2=1.5,
    )
    return calibrate_risk_neutral_drift(LevyModel("BetaFamily", params), r)


@dataclass(frozen=True)
class PricingPreset:
    name: str
    model: LevyModel
    spec: BarrierSpec
    n_steps: int


def preset_pricing(name: str, s: float = 6.0) -> PricingPreset:
    """Named reproduction presets: up-and-out on set 1/2 (K=5, b=10, N=100)
    and the double-no-touch bounds (K=5, lower 3, upper 10, N=200)."""
    if name == "paper-set1":
        return PricingPreset(name, parameter_set(1),
                             BarrierSpec(s=s, K_strike=5.0, b_upper=10.0, r=RATE), 100)
    if name == "paper-set2":
        return PricingPreset(name, parameter_set(2),
                             BarrierSpec(s=s, K_strike=5.0, b_upper=10.0, r=RATE), 100)
    if name == "paper-dnt":
        return PricingPreset(name, parameter_set(1),
                             BarrierSpec(s=s, K_strike=5.0, b_upper=10.0,
                                         b_lower=3.0, r=RATE), 200)
    raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
