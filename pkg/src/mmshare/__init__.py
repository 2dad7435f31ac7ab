"""Coverage and rate analysis of spectrum license sharing in multi-operator mmWave networks."""

__version__ = "0.1.0"

from .model import (AntennaKind, AntennaPattern, BlockageModel, ChannelParams, DistributionCurve, Link,
                    OperatorParams, Scenario, ScenarioError, SystemKind, TierRef, make_system_preset, validate)
from .quad import NoBracket, NonConvergence, QuadSpec
from .assoc import AssociationContext, association_probability, load_model
from .interference import DivergentTail, laplace_colocated, laplace_tier, laplace_total
from .coverage import (corollary1_coverage, corollary2_rate, median_rate, rate_coverage, rate_percentile,
                       required_bandwidth, sinr_coverage)
from .mc import Deployment, Fading, McConfig, Shadowing, estimate_rate_ccdf, estimate_sinr_ccdf

__all__ = [
    "AntennaKind", "AntennaPattern", "AssociationContext", "BlockageModel", "ChannelParams", "Deployment",
    "DistributionCurve", "DivergentTail", "Fading", "Link", "McConfig", "NoBracket", "NonConvergence",
    "OperatorParams", "QuadSpec", "Scenario", "ScenarioError", "Shadowing", "SystemKind", "TierRef",
    "association_probability", "corollary1_coverage", "corollary2_rate", "estimate_rate_ccdf",
    "estimate_sinr_ccdf", "laplace_colocated", "laplace_tier", "laplace_total", "load_model",
    "make_system_preset", "median_rate", "rate_coverage", "rate_percentile", "required_bandwidth",
    "sinr_coverage", "validate",
]
