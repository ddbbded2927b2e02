import math

import numpy as np
import pytest

from models.domain import Covector, PhasePoint, SpacetimePoint
from services.errors import PreconditionViolation
from services.geodesic_service import GeodesicService, export_drift, export_trajectory
from services.artifacts import read_csv
from services.potential_service import spike_center


def state(x=0.0, p_eta=0.0, p_z=0.0, p_x=0.0, p_y=0.0, eta=0.0, z=0.0, y=0.0) -> PhasePoint:
    return PhasePoint(
        point=SpacetimePoint(eta=eta, z=z, x=x, y=y),
        momentum=Covector(p_eta=p_eta, p_z=p_z, p_x=p_x, p_y=p_y),
    )


@pytest.fixture(scope="module")
def short(potential):
    return GeodesicService(potential, lambda_max=60.0)


def test_hamiltonian_values(geodesic):
    assert geodesic.hamiltonian(state(p_eta=1.0, p_z=1.0)) == 1.0
    assert geodesic.hamiltonian(state(p_x=1.0)) == 0.5
    assert geodesic.hamiltonian(state(x=1.0, p_eta=0.5, p_z=1.0)) == 0.0


def test_conserved_set(geodesic, potential):
    assert geodesic.conserved(state(p_z=1.0, p_x=1.0)).C == 1.0
    assert geodesic.conserved(state(x=0.7, p_x=2.0)).C == 4.0
    at_peak = state(x=float(potential.sup_location(1)), p_z=1.0)
    assert geodesic.conserved(at_peak).C == pytest.approx(2.0, abs=1e-8)


def test_velocity_norm_is_twice_h(geodesic, geometry):
    s = state(x=0.4, p_eta=-0.3, p_z=0.8, p_x=0.6, p_y=0.1)
    v = geodesic.velocity(s)
    assert geometry.metric_eval(s.point, v, v) == pytest.approx(2.0 * geodesic.hamiltonian(s))


def test_barrier_prediction(geodesic, potential):
    D_1 = spike_center(1) + potential.spike_width(1)
    report = geodesic.predict_barrier(state(p_z=1.0, p_x=math.sqrt(1.5)))
    assert report.barrier_spikes == (1, 1)
    assert report.D == pytest.approx(D_1)
    assert report.D == pytest.approx(3.1434, abs=1e-4)
    assert report.E == pytest.approx(D_1 ** 4)
    low = geodesic.predict_barrier(state(p_z=1.0, p_x=math.sqrt(0.5)))
    assert low.barrier_spikes == (1, 1)


@pytest.mark.parametrize("offset, expected", [(-0.02, 1), (0.02, 2)])
def test_start_inside_a_spike(short, potential, offset, expected):
    # just left of the maximiser spike 1 holds; just right of it the force points outward
    x0 = float(potential.sup_location(1)) + offset * potential.spike_width(1)
    for p_x in (0.1, -0.1):
        s0 = state(x=x0, p_z=1.0, p_x=p_x)
        level = short.conserved(s0).C
        assert level < 2.0
        report = short.predict_barrier(s0)
        assert report.barrier_spikes == (1, expected)
        assert report.D == pytest.approx(spike_center(expected) + potential.spike_width(expected))
        assert report.D > x0
        _, drift = short.integrate(s0, lambda_max=20.0)
        assert drift.confined is True
        assert drift.max_abs_x <= drift.D


def test_start_beyond_the_core(short, potential):
    x0 = 0.5 * (spike_center(2) + spike_center(3))
    s0 = state(x=-x0, p_z=1.0, p_x=0.5)
    report = short.predict_barrier(s0)
    assert min(report.barrier_spikes) == 1
    assert max(report.barrier_spikes) == 3
    _, drift = short.integrate(s0, lambda_max=20.0)
    assert drift.confined is True


def test_barrier_needs_p_z(geodesic):
    with pytest.raises(PreconditionViolation):
        geodesic.predict_barrier(state(p_x=1.0))


def test_free_motion_is_a_straight_line(short):
    s0 = state(x=0.5, p_x=0.3, p_y=0.2, p_eta=0.1)
    trajectory, report = short.integrate(s0, lambda_max=40.0)
    x = trajectory.states[2]
    assert np.allclose(x, 0.5 + 0.3 * trajectory.lam, rtol=1e-9, atol=1e-9)
    assert report.confined is None
    assert max(report.max_drift.values()) < 1e-12


def test_confined_geodesic(short):
    s0 = state(p_z=1.0, p_x=1.0)
    trajectory, report = short.integrate(s0)
    assert report.lambda_reached == pytest.approx((-60.0, 60.0))
    assert report.confined is True
    assert report.max_abs_x <= report.D
    assert report.D == pytest.approx(3.1434, abs=1e-4)
    assert report.zdot_violations == 0
    assert max(report.max_drift.values()) <= short.drift_limit()


def test_time_reversal_returns_to_start(short):
    s0 = state(x=0.2, p_eta=0.3, p_z=1.0, p_x=1.2, p_y=0.4)
    forward, _ = short.integrate(s0, lambda_max=20.0, backward=False)
    end = PhasePoint.from_state(forward.states[:, -1])
    back, _ = short.integrate(short.reverse(end), lambda_max=20.0, backward=False)
    returned = back.states[:, -1].copy()
    returned[4:] *= -1.0
    assert np.allclose(returned, s0.to_state(), rtol=0.0, atol=1e-6)


def test_null_geodesic_stays_null(short):
    s0 = state(p_eta=-0.5, p_z=1.0, p_x=1.0)
    assert short.hamiltonian(s0) == 0.0
    trajectory, _ = short.integrate(s0, lambda_max=30.0)
    H = short.conserved_along(trajectory.states)["H"]
    assert np.max(np.abs(H)) <= short.drift_limit()


def test_christoffel_form_agrees(short):
    s0 = state(p_z=1.0, p_x=1.0, p_eta=0.2)
    assert short.christoffel_crosscheck(s0, lambda_max=20.0) < 1e-6
    assert short.christoffel_crosscheck(state(x=0.5, p_x=0.3), lambda_max=20.0) < 1e-12


def test_integrate_rejects_bad_tolerance(short):
    with pytest.raises(ValueError):
        short.integrate(state(p_x=1.0), lambda_max=1.0, tol=0.0)


def test_trajectory_export(short, tmp_path):
    trajectory, report = short.integrate(state(p_z=1.0, p_x=1.0), lambda_max=5.0)
    path = export_trajectory(tmp_path / "trajectory.csv", short, trajectory, "h")
    meta, rows = read_csv(path)
    assert meta["config_hash"] == "h"
    assert len(rows) == trajectory.lam.size
    assert float(rows[0]["lambda"]) == pytest.approx(-5.0)
    assert export_drift(tmp_path / "drift.json", report, "h").exists()
