"""Capacity-distortion tradeoff for state-dependent channels."""

from .channel import (
    ChannelSpec,
    EstimationProfile,
    SpecError,
    estimation_profile,
    load_channel,
    marginal_channel,
    posterior_state,
)
from .solver import (
    CapDistSolution,
    InfeasibleError,
    capacity_distortion,
    capacity_distortion_cost,
    cd_curve,
    unconstrained_capacity,
)

__all__ = [
    "ChannelSpec",
    "EstimationProfile",
    "SpecError",
    "estimation_profile",
    "load_channel",
    "marginal_channel",
    "posterior_state",
    "CapDistSolution",
    "InfeasibleError",
    "capacity_distortion",
    "capacity_distortion_cost",
    "cd_curve",
    "unconstrained_capacity",
]
