from services.container import ServiceContainer
from services.geodesic_service import GeodesicService
from services.geometry_service import GeometryService
from services.normmap_service import NormMapService
from services.potential_service import PotentialService
from services.reduced_lg_service import ReducedLGService
from services.weyl_service import WeylService

__all__ = [
    "ServiceContainer",
    "GeodesicService",
    "GeometryService",
    "NormMapService",
    "PotentialService",
    "ReducedLGService",
    "WeylService",
]
