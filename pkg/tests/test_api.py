from types import SimpleNamespace

import pytest
from fastapi.testclient import TestClient

import api.handlers
from config import config_hash, settings
from main import app
from models.domain import SummabilityReport


@pytest.fixture(scope="module")
def client(container):
    # no lifespan: the startup calibration runs to the full configured reach
    with pytest.MonkeyPatch.context() as mp:
        mp.setattr(api.handlers, "get_container", lambda: container)
        yield TestClient(app)


def test_root(client):
    response = client.get("/")
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "running"
    assert len(body["config_hash"]) == 16


def test_diamond(client):
    response = client.post("/diamond", json={"p": [0, 0, 0, 0], "q": [1, 0, 0, 0]})
    assert response.status_code == 200
    body = response.json()
    assert body["kind"] == "bounded"
    assert body["N"] == 1
    assert body["x_max"] == pytest.approx(3.1213203435596424)


def test_diamond_needs_four_coordinates(client):
    response = client.post("/diamond", json={"p": [0, 0, 0], "q": [1, 0, 0, 0]})
    assert response.status_code == 422


def test_spikes(client):
    response = client.get("/potential/spikes", params={"n_max": 3})
    assert response.status_code == 200
    body = response.json()
    assert [s["n"] for s in body["spikes"]] == [1, 2, 3]
    assert body["spikes"][0]["center_left"] == pytest.approx(3.1213203435596424)
    assert body["summability"]["verdict"] == "pass"


def test_spikes_limit(client):
    assert client.get("/potential/spikes", params={"n_max": 5000}).status_code == 422


def test_cone(client):
    response = client.post("/cone", json={"point": [0, 0, 0, 0], "vector": [0, -1, 0, 0], "n": 1})
    assert response.status_code == 200
    body = response.json()
    assert body["causal_class"] == {"kind": "null", "orientation": "future"}
    assert body["check"]["passed"] is True


def test_cone_rejects_spacelike_vector(client):
    response = client.post("/cone", json={"point": [0, 0, 0, 0], "vector": [0, 0, 1, 0], "n": 1})
    assert response.status_code == 422


def test_barrier(client):
    response = client.post("/geodesic/barrier", json={"state": [0, 0, 0, 0, 0, 1, 1, 0]})
    assert response.status_code == 200
    body = response.json()
    assert body["barrier_spikes"] == [1, 1]
    assert body["D"] == pytest.approx(3.1434, abs=1e-4)


def test_barrier_without_p_z(client):
    response = client.post("/geodesic/barrier", json={"state": [0, 0, 0, 0, 0, 0, 1, 0]})
    assert response.status_code == 422


def test_geodesic(client):
    response = client.post("/geodesic", json={"state": [0, 0, 0.5, 0, 0.3, 1, 1, 0.2], "lambda_max": 5})
    assert response.status_code == 200
    body = response.json()
    assert body["drift"]["lambda_reached"] == pytest.approx([-5.0, 5.0])
    assert body["barrier"]["barrier_spikes"] == [1, 1]


def test_weyl_control(client):
    response = client.post("/weyl", json={"p_y": 1, "p_z": 0, "p_eta": 1})
    assert response.status_code == 200
    body = response.json()
    assert body["classification"] == "LimitPoint"
    assert body["deficiency"] == [0, 0]


def test_weyl_rejects_real_lambda(client):
    assert client.post("/weyl", json={"lambda_im": 0}).status_code == 422


def test_app_factory_serves_its_settings(cfg):
    from main import create_app

    try:
        served = TestClient(create_app(cfg))
        assert served.get("/").json()["config_hash"] == config_hash(cfg)
        assert api.handlers._settings is cfg
    finally:
        api.handlers.configure(settings)


def test_startup_names_the_closed_form_bound(monkeypatch):
    import main

    report = SummabilityReport(partial_sums=[0.1, 0.3], bound=0.25, verdict="fail")
    potential = SimpleNamespace(prepare=lambda reach: 3, check_summability=lambda terms: report)
    monkeypatch.setattr(main, "get_container", lambda: SimpleNamespace(potential=potential))
    with pytest.raises(RuntimeError, match="Partial sum 0.3 of eps_n n\\^2 exceeds the closed-form bound 0.25"):
        main.verify_potential()
