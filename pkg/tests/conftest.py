import pytest

from config import load_settings
from services.container import ServiceContainer

# desk-scale sample sizes; the numerical tolerances stay at their defaults
SMALL = {
    "acceptance": {
        "spike_count": 20,
        "summability_terms": 1000,
        "geodesic_count": 3,
        "cone_samples": 2000,
        "cone_report_rows": 50,
        "diamond_pairs": 5,
        "lg_cases": 1,
        "classification_counts": (2, 2, 2),
    },
    "potential": {"prepare_reach": 40.0},
}


@pytest.fixture(scope="session")
def cfg(tmp_path_factory):
    out = tmp_path_factory.mktemp("out")
    return load_settings(run={"out_dir": str(out)}, **SMALL)


@pytest.fixture(scope="session")
def container(cfg):
    c = ServiceContainer.from_settings(cfg)
    c.potential.prepare(cfg.potential.prepare_reach)
    return c


@pytest.fixture(scope="session")
def potential(container):
    return container.potential


@pytest.fixture(scope="session")
def geometry(container):
    return container.geometry


@pytest.fixture(scope="session")
def geodesic(container):
    return container.geodesic


@pytest.fixture(scope="session")
def reduced(container):
    return container.reduced


@pytest.fixture(scope="session")
def weyl(container):
    return container.weyl
