"""Atom–cavity cooperativity projections.

The single-atom cooperativity of a cavity-coupled emitter scales as the
ratio of the atomic absorption cross-section to the mode area, enhanced
by the cavity finesse: ``C = K · (σ₀/A_eff) · F``.  The dimensionless
prefactor ``K`` encodes the exact convention (field normalization,
standing-wave factors, transition structure) and is an explicit input
with default 2/π; every report carries the value used, so numbers from
different conventions are never silently mixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import DomainError
from .quantity import Quantity

#: Default cooperativity convention prefactor.
DEFAULT_PREFACTOR = 2.0 / math.pi

#: σ₀/A_eff of the shipped reference scenario, back-solved so that a
#: finesse of 2027 gives C = 90 under the default prefactor.
REFERENCE_SIGMA0_OVER_AEFF = 90.0 * math.pi / (2.0 * 2027.0)

#: Finesse of the shipped reference scenario (intrinsic-loss-limited).
REFERENCE_FINESSE = Quantity(2027.0, 100.0)


@dataclass(frozen=True)
class CooperativityScenario:
    """Inputs of one cooperativity projection.

    Attributes
    ----------
    sigma0_over_aeff : float
        Ratio of the atomic cross-section to the mode area (both areas,
        so dimensionless); geometry- and transition-dependent.
    finesse : Quantity
        Cavity finesse with its uncertainty.
    prefactor : float
        Convention constant ``K``.
    label : str
        Free-form scenario name carried into reports.
    """

    sigma0_over_aeff: float
    finesse: Quantity
    prefactor: float = DEFAULT_PREFACTOR
    label: str = ""

    def __post_init__(self):
        if self.sigma0_over_aeff <= 0.0:
            raise DomainError("sigma0_over_aeff must be > 0")
        if self.finesse.value <= 0.0:
            raise DomainError("finesse must be > 0")
        if self.prefactor <= 0.0:
            raise DomainError("prefactor must be > 0")

    def with_finesse(self, finesse: Quantity) -> "CooperativityScenario":
        return replace(self, finesse=finesse)

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "K": self.prefactor,
            "sigma0_over_aeff": self.sigma0_over_aeff,
            "finesse": self.finesse.as_dict(),
        }


def reference_scenario() -> CooperativityScenario:
    """Shipped reference point: C = 90 at F = 2027 under the default K.

    The σ₀/A_eff here is defined by back-solving that pair under the
    default convention; it is a reproducible fixture, not a first-
    principles atomic calculation.
    """
    return CooperativityScenario(
        sigma0_over_aeff=REFERENCE_SIGMA0_OVER_AEFF,
        finesse=REFERENCE_FINESSE,
        label="reference",
    )


def cooperativity(scenario: CooperativityScenario) -> Quantity:
    """C = K · (σ₀/A_eff) · F, with uncertainty propagated from F only."""
    slope = scenario.prefactor * scenario.sigma0_over_aeff
    return Quantity(slope * scenario.finesse.value, slope * scenario.finesse.sigma)


def required_finesse(
    cooperativity_target: float,
    sigma0_over_aeff: float,
    prefactor: float = DEFAULT_PREFACTOR,
) -> float:
    """Finesse needed to reach a target cooperativity: F = C/(K·σ₀/A_eff)."""
    if cooperativity_target <= 0.0:
        raise DomainError("target cooperativity must be > 0")
    if sigma0_over_aeff <= 0.0:
        raise DomainError("sigma0_over_aeff must be > 0")
    if prefactor <= 0.0:
        raise DomainError("prefactor must be > 0")
    return cooperativity_target / (prefactor * sigma0_over_aeff)
