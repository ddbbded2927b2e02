import json

import numpy as np
import pytest

from services.acceptance_service import (
    AcceptanceService,
    _rng,
    random_causal_states,
    random_confined_states,
    sha256_file,
)


@pytest.fixture
def acceptance(container, tmp_path):
    return AcceptanceService(container, tmp_path)


def test_admissibility_and_determinism(acceptance, tmp_path):
    report = acceptance.run(["determinism", "admissibility"])
    assert report.passed, report.failures
    assert [c.name for c in report.checks] == ["admissibility", "determinism"]
    assert report.checks[0].metrics["spikes"] == 20.0
    assert report.checks[1].metrics == {"artifacts": 1.0, "replayed_checks": 1.0}
    assert set(report.artifact_sha256) == {"spike-table.csv"}
    assert report.artifact_sha256["spike-table.csv"] == sha256_file(tmp_path / "spike-table.csv")
    document = json.loads((tmp_path / "verify-report.json").read_text(encoding="utf-8"))
    assert document["passed"] is True
    assert document["config_hash"] == acceptance.config_hash


def test_determinism_flags_changed_artifacts(acceptance, monkeypatch):
    monkeypatch.setattr(AcceptanceService, "_replay", lambda self, names, out_dir: {"spike-table.csv": "0" * 64})
    report = acceptance.run(["admissibility", "determinism"])
    assert not report.passed
    assert report.checks[1].failures == ["spike-table.csv is not reproducible"]


def test_determinism_alone_replays_the_suite(acceptance, monkeypatch):
    calls = []

    def replay(self, names, out_dir):
        calls.append(list(names))
        return {"spike-table.csv": "a" * 64, "cone-report.csv": "b" * 64}

    monkeypatch.setattr(AcceptanceService, "_replay", replay)
    report = acceptance.run(["determinism"])
    assert report.passed
    assert len(calls) == 2
    assert calls[0] == calls[1] == [n for n in acceptance.checks if n != "determinism"]
    assert report.checks[0].metrics["artifacts"] == 2.0


def test_reruns_are_byte_identical(container, tmp_path):
    first = AcceptanceService(container, tmp_path / "a").run(["admissibility"])
    second = AcceptanceService(container, tmp_path / "b").run(["admissibility"])
    assert first.artifact_sha256 == second.artifact_sha256


def test_unknown_check(acceptance):
    with pytest.raises(ValueError):
        acceptance.run(["admissibility", "nonsense"])


def test_random_causal_states(geodesic):
    states = random_causal_states(_rng(1, "causal"), 40)
    assert all(s.momentum.p_z > 0 for s in states)
    H = np.array([geodesic.hamiltonian(s) for s in states])
    assert np.all(H <= 1e-12)
    assert np.all(np.abs(H[::10]) < 1e-12)


def test_random_confined_states(geodesic, potential):
    states = random_confined_states(_rng(1, "geodesics"), 60, (0.1, 20.0), potential)
    in_spike = 0
    for s in states:
        x = abs(s.point.x)
        assert s.momentum.p_z != 0.0
        assert 0.1 - 1e-9 <= geodesic.conserved(s).C / s.momentum.p_z ** 2 <= 20.0 + 1e-9
        if x > 2.5:
            in_spike += 1
            assert potential.active_spikes(x, x)
    assert 0 < in_spike < len(states)


def test_confined_geodesics_from_spike_interiors(container):
    states = random_confined_states(_rng(3, "geodesics"), 12, (0.1, 20.0), container.potential, spike_share=1.0)
    for s in states:
        report = container.geodesic.predict_barrier(s)
        assert report.D > abs(s.point.x)
        _, drift = container.geodesic.integrate(s, lambda_max=10.0)
        assert drift.confined is True, (s.point.x, report)


def test_streams_are_independent():
    a = _rng(7, "geodesics").uniform(size=5)
    b = _rng(7, "causal").uniform(size=5)
    assert not np.allclose(a, b)
    assert np.array_equal(a, _rng(7, "geodesics").uniform(size=5))


@pytest.mark.slow
def test_causal_structure(acceptance):
    report = acceptance.run(["causal"])
    assert report.passed, report.failures
    assert "cone-report.csv" in report.artifact_sha256


@pytest.mark.slow
def test_lg_machinery(acceptance):
    report = acceptance.run(["lg"])
    assert report.passed, report.failures


@pytest.mark.slow
def test_every_artifact_is_reproducible(acceptance):
    report = acceptance.run(["admissibility", "geodesics", "causal", "lg", "determinism"])
    determinism = report.checks[-1]
    assert determinism.passed, determinism.failures
    assert determinism.metrics["replayed_checks"] == 4.0
    assert determinism.metrics["artifacts"] == float(len(report.artifact_sha256)) == 4.0
