"""Exact fair division of chores with externalities."""

from .errors import ChorexError
from .fairness import Notion, audit, check
from .model import (
    Allocation,
    Instance,
    Interval,
    Piece,
    PiecewiseDensity,
    parse_allocation,
    parse_instance,
    social_cost,
)

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "ChorexError",
    "Instance",
    "Interval",
    "Notion",
    "Piece",
    "PiecewiseDensity",
    "audit",
    "check",
    "parse_allocation",
    "parse_instance",
    "social_cost",
]
