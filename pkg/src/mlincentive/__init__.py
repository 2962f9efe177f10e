"""Incentives, pricing and competition in multi-level markets of virtual goods."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BracketError,
    ConfigError,
    ConsistencyError,
    DomainError,
    InconsistentTargetError,
    SweepError,
)
from .flux import (  # noqa: E402
    CommissionPolicy,
    IncentiveProfile,
    PriceSchedule,
    TransactionCosts,
    apply_K,
    apply_K_commission,
    invert_K,
    invert_K_commission,
)
from .numerics import GridFunction  # noqa: E402

__all__ = [
    "BracketError",
    "CommissionPolicy",
    "ConfigError",
    "ConsistencyError",
    "DomainError",
    "GridFunction",
    "IncentiveProfile",
    "InconsistentTargetError",
    "PriceSchedule",
    "SweepError",
    "TransactionCosts",
    "apply_K",
    "apply_K_commission",
    "invert_K",
    "invert_K_commission",
]
