"""Outage, cooperation and energy models for network-coded LoRa uplinks."""

from .analytics import (
    LORA,
    NCC_LORA,
    RT_LORA,
    LayoutError,
    LinkBudget,
    OutageBreakdown,
    SchemeKind,
    SchemeSpec,
    scheme_outage,
    solve_ring_layout,
)
from .energy import avg_current_scheme, scheme_current_at
from .geometry import D2dParams, Deployment, RingLayout, sample_ppp
from .numerics import NumericsError, Tolerance
from .phy import DutyCycleError, PhyConfig, SF_TABLE
from .simulator import Scenario, SimReport, estimate_curve

__version__ = "0.1.0"

__all__ = [
    "D2dParams",
    "Deployment",
    "DutyCycleError",
    "LORA",
    "LayoutError",
    "LinkBudget",
    "NCC_LORA",
    "NumericsError",
    "OutageBreakdown",
    "PhyConfig",
    "RT_LORA",
    "RingLayout",
    "Scenario",
    "SchemeKind",
    "SchemeSpec",
    "SF_TABLE",
    "SimReport",
    "Tolerance",
    "avg_current_scheme",
    "estimate_curve",
    "sample_ppp",
    "scheme_current_at",
    "scheme_outage",
    "solve_ring_layout",
    "__version__",
]
