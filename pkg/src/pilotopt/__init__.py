"""Joint pilot sequence and pilot power design for max-min fairness in multi-cell massive MIMO."""

from .closedform import Weights, se, sinr_all, sinr_approx_all, sinr_closed_form
from .netgen import NetworkRealization, SystemConfig, generate_network
from .pilot import PilotAllocation, PilotAssignment, from_assignment, validate

__version__ = "0.1.0"

__all__ = [
    "NetworkRealization",
    "PilotAllocation",
    "PilotAssignment",
    "SystemConfig",
    "Weights",
    "from_assignment",
    "generate_network",
    "se",
    "sinr_all",
    "sinr_approx_all",
    "sinr_closed_form",
    "validate",
]
