"""Ideal polytropic gas: state types, characteristic speeds, and the
phase-space regime classification that drives every downstream branch.

Two speed scales matter.  The full sound speed sqrt(gamma*R*theta) governs
the usual Mach number; the reduced speed sqrt(R*theta) shows up because the
energy equation carries heat conduction but no viscosity.  Both partitions
of the (u, theta) space are exposed: ``Regime.tag`` uses the reduced speed,
``Regime.weighted_tag`` the full one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import TransitionalState


class RegionTag(Enum):
    """Position of a state relative to a sonic line, split by flow sign."""

    SUB_MINUS = "SubMinus"
    SUB_ZERO = "SubZero"
    SUB_PLUS = "SubPlus"
    TRANS_PLUS = "TransPlus"
    TRANS_MINUS = "TransMinus"
    SUP_PLUS = "SupPlus"
    SUP_MINUS = "SupMinus"


@dataclass(frozen=True)
class GasParams:
    """Thermodynamic constants of the ideal polytropic gas.

    Attributes:
        R: gas constant, > 0.
        gamma: adiabatic exponent, > 1.
        A: entropy-pressure constant in p = A * v**-gamma * exp((gamma-1)s/R);
            it only matters to the isentrope algebra, default 1.
        kappa: heat-conduction coefficient, > 0.
    """

    R: float = 1.0
    gamma: float = 1.4
    A: float = 1.0
    kappa: float = 1.0

    def __post_init__(self) -> None:
        if not (self.R > 0.0):
            raise ValueError("gas constant R must be positive")
        if not (self.gamma > 1.0):
            raise ValueError("adiabatic exponent gamma must exceed 1")
        if not (self.A > 0.0):
            raise ValueError("entropy-pressure constant A must be positive")
        if not (self.kappa > 0.0):
            raise ValueError("heat-conduction coefficient kappa must be positive")

    @property
    def cv(self) -> float:
        """Specific heat at constant volume, R / (gamma - 1)."""
        return self.R / (self.gamma - 1.0)


@dataclass(frozen=True)
class EulerState:
    """Point state (rho, u, theta) in density form."""

    rho: float
    u: float
    theta: float

    def __post_init__(self) -> None:
        if not (self.rho > 0.0):
            raise ValueError("density must be positive")
        if not (self.theta > 0.0):
            raise ValueError("temperature must be positive")

    def pressure(self, g: GasParams) -> float:
        return g.R * self.rho * self.theta

    def internal_energy(self, g: GasParams) -> float:
        return g.cv * self.theta

    def entropy(self, g: GasParams) -> float:
        return self.to_lagrangian().entropy(g)

    def to_lagrangian(self) -> "LagState":
        return LagState(v=1.0 / self.rho, u=self.u, theta=self.theta)


@dataclass(frozen=True)
class LagState:
    """Point state (v, u, theta) in specific-volume form, v = 1/rho."""

    v: float
    u: float
    theta: float

    def __post_init__(self) -> None:
        if not (self.v > 0.0):
            raise ValueError("specific volume must be positive")
        if not (self.theta > 0.0):
            raise ValueError("temperature must be positive")

    def pressure(self, g: GasParams) -> float:
        return g.R * self.theta / self.v

    def internal_energy(self, g: GasParams) -> float:
        return g.cv * self.theta

    def entropy(self, g: GasParams) -> float:
        """Entropy consistent with p = A * v**-gamma * exp((gamma-1)s/R)."""
        return g.cv * math.log(g.R * self.theta * self.v ** (g.gamma - 1.0) / g.A)

    def to_euler(self) -> EulerState:
        return EulerState(rho=1.0 / self.v, u=self.u, theta=self.theta)


@dataclass(frozen=True)
class Regime:
    """Classification of one state against both sonic partitions.

    Attributes:
        tag: region relative to the reduced speed sqrt(R*theta).
        weighted_tag: region relative to the full sound speed sqrt(gamma*R*theta).
        mach: |u| / sqrt(gamma*R*theta).
        tilde_mach: |u| / sqrt(R*theta).
    """

    tag: RegionTag
    weighted_tag: RegionTag
    mach: float
    tilde_mach: float


def sound_speeds(state: EulerState | LagState, g: GasParams) -> tuple[float, float]:
    """Return (full sound speed, reduced speed) for the state.

    The full speed is sqrt(gamma*R*theta); the reduced speed sqrt(R*theta)
    is the one that separates the boundary-condition cases.
    """
    c_full = math.sqrt(g.gamma * g.R * state.theta)
    c_reduced = math.sqrt(g.R * state.theta)
    return c_full, c_reduced


def mach_numbers(state: EulerState | LagState, g: GasParams) -> tuple[float, float]:
    """Return (M, M_tilde) = |u| over the full and reduced speeds."""
    c_full, c_reduced = sound_speeds(state, g)
    return abs(state.u) / c_full, abs(state.u) / c_reduced


def _tag_against(u: float, c: float, eps: float) -> RegionTag:
    # Exact ties land on the Trans tags; eps > 0 widens the tie band for
    # callers that need robustness against rounding.
    if u == 0.0:
        return RegionTag.SUB_ZERO
    gap = abs(u) - c
    if abs(gap) <= eps:
        return RegionTag.TRANS_PLUS if u > 0.0 else RegionTag.TRANS_MINUS
    if gap < 0.0:
        return RegionTag.SUB_PLUS if u > 0.0 else RegionTag.SUB_MINUS
    return RegionTag.SUP_PLUS if u > 0.0 else RegionTag.SUP_MINUS


def classify(state: EulerState | LagState, g: GasParams, eps: float = 0.0) -> Regime:
    """Classify a state against both sonic partitions.

    Args:
        state: any state with u and theta.
        g: gas constants.
        eps: half-width of the tie band around each sonic line.  The default
            0 sends only exact floating-point ties to the Trans tags.

    Returns:
        Regime with the reduced-speed tag, the full-speed tag, and both
        Mach numbers.
    """
    c_full, c_reduced = sound_speeds(state, g)
    return Regime(
        tag=_tag_against(state.u, c_reduced, eps),
        weighted_tag=_tag_against(state.u, c_full, eps),
        mach=abs(state.u) / c_full,
        tilde_mach=abs(state.u) / c_reduced,
    )


def boundary_condition_case(r: Regime) -> int:
    """Map a regime to the inflow boundary-condition case.

    Case 1 (supersonic outflow, SupMinus) prescribes theta alone; Case 2
    (subsonic, any flow sign) prescribes u and theta; Case 3 (supersonic
    inflow, SupPlus) prescribes all of rho, u, theta.  The sonic lines
    themselves carry no case.

    Raises:
        TransitionalState: if the reduced-speed tag is a Trans tag.
    """
    tag = r.tag
    if tag is RegionTag.SUP_MINUS:
        return 1
    if tag in (RegionTag.SUB_MINUS, RegionTag.SUB_ZERO, RegionTag.SUB_PLUS):
        return 2
    if tag is RegionTag.SUP_PLUS:
        return 3
    raise TransitionalState(
        f"no boundary-condition case is defined on the sonic line (tag {tag.value})"
    )
