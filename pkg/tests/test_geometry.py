import math

import numpy as np
import pytest

from models.domain import Covector, SpacetimePoint, TangentVector
from services.errors import NotCausal, PreconditionViolation
from services.potential_service import spike_center

D_ETA = TangentVector(X_eta=1.0)
D_Z = TangentVector(X_z=1.0)
D_X = TangentVector(X_x=1.0)


def test_metric_components(geometry):
    origin = SpacetimePoint()
    assert geometry.metric_eval(origin, D_ETA, D_ETA) == 0.0
    assert geometry.metric_eval(SpacetimePoint(x=1.7), D_Z, D_Z) == 0.0
    assert geometry.metric_eval(SpacetimePoint(x=5.0), D_X, D_X) == 1.0
    assert geometry.metric_eval(SpacetimePoint(x=1.0), D_ETA, D_ETA) == 1.0
    assert geometry.metric_eval(origin, D_ETA, D_Z) == 1.0


def test_inverse_metric(geometry):
    origin = SpacetimePoint()
    p = Covector(p_eta=1.0, p_z=1.0)
    assert geometry.inverse_metric_eval(origin, p, p) == 2.0
    for x in (0.0, 1.5, float(geometry.potential.sup_location(1))):
        product = geometry.metric_matrix(x) @ geometry.inverse_metric_matrix(x)
        assert np.allclose(product, np.eye(4), atol=1e-12)


def test_determinant_is_minus_one(geometry):
    for x in (0.0, 2.0, float(geometry.potential.sup_location(2))):
        assert geometry.metric_determinant(x) == pytest.approx(-1.0)


def test_time_orientation_catalogue(geometry):
    origin = SpacetimePoint()
    down = geometry.classify_vector(origin, TangentVector(X_z=-1.0))
    assert (down.kind, down.orientation) == ("null", "future")
    up = geometry.classify_vector(origin, D_Z)
    assert (up.kind, up.orientation) == ("null", "past")
    side = geometry.classify_vector(origin, D_X)
    assert (side.kind, side.orientation) == ("spacelike", "n/a")
    assert geometry.classify_vector(origin, TangentVector()).kind == "zero"
    timelike = geometry.classify_vector(origin, TangentVector(X_eta=1.0, X_z=-1.0))
    assert timelike.is_causal_future and timelike.kind == "timelike"


def test_time_reversal_flips_orientation(geometry):
    p = SpacetimePoint(x=0.3)
    X = TangentVector(X_eta=2.0, X_z=-1.0, X_x=0.5)
    forward, backward = geometry.classify_vector(p, X), geometry.classify_vector(p, -X)
    assert forward.kind == backward.kind == "timelike"
    assert (forward.orientation, backward.orientation) == ("future", "past")


def test_cone_inequalities_for_minus_d_z(geometry):
    for n in (1, 5, 20):
        check = geometry.cone_inequalities(SpacetimePoint(), TangentVector(X_z=-1.0), n)
        assert check.passed
        assert check.slacks[0] == pytest.approx(1.0 / math.sqrt(n))
        assert check.slacks[3] == 0.0


def test_cone_inequalities_for_d_eta(geometry):
    check = geometry.cone_inequalities(SpacetimePoint(), D_ETA, 1)
    assert check.passed
    assert check.slacks == pytest.approx((1.0, 1.0, 1.0, 1.0))


def test_cone_inequalities_preconditions(geometry):
    with pytest.raises(PreconditionViolation):
        geometry.cone_inequalities(SpacetimePoint(x=spike_center(2) + 0.1), D_ETA, 2)
    with pytest.raises(PreconditionViolation):
        geometry.cone_inequalities(SpacetimePoint(), D_X, 1)
    with pytest.raises(PreconditionViolation):
        geometry.cone_inequalities(SpacetimePoint(), D_ETA, 0)


def test_sampled_causal_vectors_satisfy_cones(geometry):
    rng = np.random.default_rng(3)
    n, x, X = geometry.sample_causal_future(rng, 5000, 30)
    assert np.all(geometry.norm_squared(x, X) <= 1e-9 * np.maximum(1.0, np.sum(X ** 2, axis=0)))
    slacks = geometry.cone_slacks(X, n)
    tol = 1e-12 * np.maximum(1.0, np.abs(X).max(axis=0) * n)
    assert np.all(slacks[0] > 0)
    assert np.all(slacks[1:] >= -tol)


def test_minkowski_comparison_nonnegative(geometry):
    X = TangentVector(X_eta=1.0, X_z=-0.3, X_x=0.2)
    for x, N in ((0.0, 1), (2.0, 5), (float(geometry.potential.sup_location(3)), 5)):
        assert geometry.minkowski_comparison(SpacetimePoint(x=x), X, N) >= -1e-12


def test_causal_order_along_minus_d_z(geometry):
    m = 20
    points = np.zeros((4, m))
    points[1] = -np.linspace(0.0, 1.0, m)
    velocities = np.tile(np.array([[0.0], [-1.0], [0.0], [0.0]]), (1, m))
    assert geometry.check_causal_order(points, velocities).passed


def test_causal_order_rejects_loops(geometry):
    points = np.zeros((4, 3))
    points[0] = [0.0, 0.5, 0.0]
    velocities = np.tile(np.array([[1.0], [0.0], [0.0], [0.0]]), (1, 3))
    report = geometry.check_causal_order(points, velocities)
    assert not report.passed


def test_causal_order_rejects_spacelike_curves(geometry):
    points = np.zeros((4, 2))
    velocities = np.tile(np.array([[0.0], [0.0], [1.0], [0.0]]), (1, 2))
    with pytest.raises(NotCausal):
        geometry.check_causal_order(points, velocities)


def test_diamond_example(geometry):
    bound = geometry.diamond_bounds(SpacetimePoint(), SpacetimePoint(eta=1.0))
    assert bound.kind == "bounded"
    assert bound.N == 1
    assert bound.x_max == pytest.approx(3.1213203435596424)
    assert bound.y_span == 2.0
    assert bound.z_span == 2.0
    assert bound.eta_range == (0.0, 1.0)


def test_diamond_degenerate_cases(geometry):
    p = SpacetimePoint(eta=0.5, z=1.0, x=0.2, y=-1.0)
    assert geometry.diamond_bounds(p, p).kind == "point"
    assert geometry.diamond_bounds(SpacetimePoint(), SpacetimePoint(eta=-1.0)).kind == "empty"
    assert geometry.diamond_bounds(SpacetimePoint(), SpacetimePoint(z=1.0)).kind == "empty"


def test_diamond_grows_with_separation(geometry):
    bound = geometry.diamond_bounds(SpacetimePoint(x=2.5), SpacetimePoint(eta=3.0, z=-10.0))
    assert bound.N == 100
    assert bound.z_span == pytest.approx(101.0 * 10.0)


def test_diamond_contains(geometry):
    bound = geometry.diamond_bounds(SpacetimePoint(), SpacetimePoint(eta=1.0))
    inside = np.array([[0.0, 0.5, 1.0], [0.0, -1.0, 1.5], [0.0, 3.0, -3.0], [0.0, 1.0, -2.0]])
    assert geometry.diamond_contains(bound, inside)
    outside = inside.copy()
    outside[2, 1] = 4.0
    assert not geometry.diamond_contains(bound, outside)


def test_cone_report_export(geometry, tmp_path):
    from services.artifacts import read_csv
    from services.geometry_service import export_cone_report

    rng = np.random.default_rng(5)
    n, x, X = geometry.sample_causal_future(rng, 10, 5)
    rows = geometry.cone_report_rows(n, x, X)
    meta, body = read_csv(export_cone_report(tmp_path / "cone-report.csv", rows, "h"))
    assert meta["config_hash"] == "h"
    assert len(body) == 10
    assert all(float(r["slack1"]) > 0.0 for r in body)
