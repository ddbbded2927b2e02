"""
Models package: domain types and the HTTP request/response schemas.
"""

from models.domain import (
    DiamondBound,
    PhasePoint,
    ReducedParams,
    SpacetimePoint,
    TangentVector,
    WeylReport,
)
from models.schemas import (
    ConeRequest,
    ConeResponse,
    DiamondRequest,
    GeodesicRequest,
    GeodesicResponse,
    SpikeTableResponse,
    WeylRequest,
)

__all__ = [
    "ConeRequest",
    "ConeResponse",
    "DiamondBound",
    "DiamondRequest",
    "GeodesicRequest",
    "GeodesicResponse",
    "PhasePoint",
    "ReducedParams",
    "SpacetimePoint",
    "SpikeTableResponse",
    "TangentVector",
    "WeylReport",
    "WeylRequest",
]
