"""
Wiring of the verification services from one Settings object.
"""
from dataclasses import dataclass

from config import Settings, config_hash
from services.geodesic_service import GeodesicService
from services.geometry_service import GeometryService
from services.normmap_service import NormMapService
from services.potential_service import PotentialService
from services.reduced_lg_service import ReducedLGService
from services.weyl_service import WeylService


@dataclass
class ServiceContainer:
    settings: Settings
    potential: PotentialService
    geometry: GeometryService
    geodesic: GeodesicService
    reduced: ReducedLGService
    weyl: WeylService
    normmap: NormMapService

    @classmethod
    def from_settings(cls, cfg: Settings, spikes_enabled: bool = True) -> "ServiceContainer":
        potential = PotentialService.from_settings(cfg, spikes_enabled=spikes_enabled)
        reduced = ReducedLGService.from_settings(potential, cfg)
        weyl = WeylService.from_settings(reduced, cfg)
        return cls(
            settings=cfg,
            potential=potential,
            geometry=GeometryService(potential),
            geodesic=GeodesicService.from_settings(potential, cfg),
            reduced=reduced,
            weyl=weyl,
            normmap=NormMapService.from_settings(weyl, cfg),
        )

    @property
    def config_hash(self) -> str:
        return config_hash(self.settings)

    @property
    def config_json(self) -> str:
        return self.settings.model_dump_json()


def build_container(cfg: Settings) -> ServiceContainer:
    """Pool initializer target: a container whose spike table is already filled."""
    container = ServiceContainer.from_settings(cfg)
    container.potential.prepare(cfg.potential.prepare_reach)
    return container
