import numpy as np
import pytest

from models.domain import ReducedParams
from services.acceptance_service import _lg_task
from services.errors import ZeroPz

RP = ReducedParams(p_y=1.0, p_z=1.0, p_eta=1.0)


def test_reduced_potential_values(reduced):
    assert reduced.reduced_potential(RP, 0.0) == 3.0
    assert reduced.reduced_potential(RP, 1.0) == 2.0
    control = ReducedParams(p_y=2.0, p_z=0.0, p_eta=3.0)
    for x in (0.0, 1.0, 3.13, 17.0):
        assert reduced.reduced_potential(control, x) == 4.0


def test_split_recombines(reduced, potential):
    lam = 1j
    split = reduced.split(RP, lam)
    xs = np.array([0.0, 1.0, 2.5, float(potential.sup_location(1)), 7.3, -float(potential.sup_location(2))])
    W = reduced.reduced_potential(RP, xs)
    assert np.allclose(split.base(xs) + split.perturbation(xs), W - lam, rtol=1e-14, atol=1e-12)
    assert np.all(split.base(xs) <= -RP.p_z ** 2)
    inside = float(potential.sup_location(1))
    assert (split.perturbation(inside) - (split.constant - lam)).real > 0.0


def test_split_needs_p_z(reduced):
    with pytest.raises(ZeroPz):
        reduced.split(ReducedParams(p_y=1.0, p_z=0.0, p_eta=1.0), 1j)
    with pytest.raises(ZeroPz):
        reduced.lg_frame(ReducedParams(p_y=1.0, p_z=0.0, p_eta=1.0))


def test_lg_frame(reduced):
    frame = reduced.lg_frame(ReducedParams(p_y=1.0, p_z=1.5, p_eta=1.0))
    xs = np.linspace(-30.0, 30.0, 61)
    assert np.all(frame.Sp(xs) > 0.0)
    assert frame.S(0.0) == 0.0
    assert frame.S(2.0) == pytest.approx(-frame.S(-2.0))
    for x in (0.0, 3.0, 25.0):
        assert np.linalg.det(frame.matrix(x)) == pytest.approx(1j, abs=1e-12)
    # int_200^inf dt / (p_z sqrt(t^4 + 1)) is 1 / (200 p_z) to leading order
    assert frame.G_inf() - frame.G(200.0) == pytest.approx(1.0 / (200.0 * 1.5), rel=1e-3)


def test_v0_decays_like_inverse_fourth_power(reduced):
    assert reduced.v0_decay_slope(RP) == pytest.approx(-4.0, abs=0.1)


def test_kernel_is_traceless(reduced, potential):
    K, norm = reduced.kernel(RP, 1j, float(potential.sup_location(1)))
    assert abs(np.trace(K)) < 1e-12
    assert np.linalg.norm(K, 2) == pytest.approx(norm, rel=1e-12)


def test_direct_solve_rejects_bad_tolerance(reduced):
    with pytest.raises(ValueError):
        reduced.direct_solve(RP, 1j, (0.0, 1.0), (1.0, 0.0), tol=-1.0)


def test_direct_solve_pure_exponential(reduced):
    control = ReducedParams(p_y=1.0, p_z=0.0, p_eta=1.0)
    sol = reduced.direct_solve(control, 1j, (0.0, 4.0), (1.0, 0.0))
    k = np.sqrt(1.0 - 1j)
    xs = np.linspace(0.0, 4.0, 9)
    assert np.allclose(sol.u(xs), np.cosh(k * xs), rtol=1e-8)


def test_lg_agrees_with_direct_solve(container):
    row = _lg_task(container, ((1.0, 1.0, 1.0), 1j))
    assert row["lg_deviation"] < 1e-5
    assert row["wronskian_drift"] < 1e-6
    assert row["cauchy_delta"] <= row["cauchy_bound"]


def test_spike_series_partial_sums(reduced):
    partials = reduced.spike_sum_bound(RP)
    keys = sorted(partials)
    values = [partials[k] for k in keys]
    increments = np.diff(values)
    assert np.all(increments > 0)
    assert np.all(np.diff(increments) < 0)


def test_l1_conditions_pass(reduced):
    report = reduced.l1_condition_check(RP)
    assert report.verdict == "pass"
    assert report.doubling_deltas["integral1"][-1] < 1e-2
    assert report.integral1 == sorted(report.integral1)


def test_l1_conditions_need_p_z(reduced):
    with pytest.raises(ZeroPz):
        reduced.l1_condition_check(ReducedParams(p_y=1.0, p_z=0.0, p_eta=1.0))


def test_lg_coefficients_invert_the_frame(reduced):
    frame = reduced.lg_frame(RP)
    for x in (0.5, 4.0, 30.0):
        u, du = frame.reconstruct(x, 0.3 - 0.2j, 1.1j)
        a1, a2 = reduced.lg_coefficients(frame, x, u, du)
        assert a1 == pytest.approx(0.3 - 0.2j, abs=1e-12)
        assert a2 == pytest.approx(1.1j, abs=1e-12)


def test_lg_solve_keeps_unit_determinant(reduced):
    sol = reduced.lg_solve(RP, 1j, 10.0)
    assert np.allclose(sol.U(0.0), np.eye(2), atol=1e-14)
    # the kernel is traceless, so det U stays 1
    assert abs(np.linalg.det(sol.U(10.0)) - 1.0) < 1e-6


def test_lg_tail_matches_direct_norm(reduced):
    lam = 1j
    start = reduced.direct_solve(RP, lam, (0.0, 12.0), (1.0, 0.0))
    u, du, _ = start.state(np.array([12.0]))
    tail = reduced.lg_tail(RP, lam, 12.0, complex(u[0]), complex(du[0]), [20.0])
    direct = reduced.direct_solve(RP, lam, (12.0, 20.0), (complex(u[0]), complex(du[0])))
    _, _, norm = direct.state(np.array([20.0]))
    assert tail.norms[0] == pytest.approx(float(norm[0]), rel=5e-2)
    assert tail.remainder >= 0.0


def test_lg_tail_needs_a_rung_beyond_start(reduced):
    with pytest.raises(ValueError):
        reduced.lg_tail(RP, 1j, 12.0, 1.0, 0.0, [5.0, 12.0])


def test_lg_solve_without_coupling_is_identity(reduced):
    frame = reduced.lg_frame(RP)
    sol = reduced.lg_solve(RP, 1j, 6.0, perturbation=frame.V0)
    U = sol.U(np.array([3.0, 6.0]))
    assert np.allclose(U[..., 0], np.eye(2), rtol=0.0, atol=1e-15)
    assert np.allclose(U[..., 1], np.eye(2), rtol=0.0, atol=1e-15)


def test_v0_weight_scales_inversely_with_p_z(reduced):
    assert reduced.v0_pz_exponent([1.0, 1.5, 2.0]) == pytest.approx(-1.0, abs=1e-9)
    with pytest.raises(ValueError):
        reduced.v0_pz_exponent([1.0])


def test_lg_solve_carries_norms(reduced):
    ics = [(1.0, 0.0), (0.0, 1.0)]
    sol = reduced.lg_solve(RP, 1j, 10.0, norm_ics=ics)
    for k, ic in enumerate(ics):
        direct = reduced.direct_solve(RP, 1j, (0.0, 10.0), ic)
        assert float(sol.norm_squared(10.0, k)) == pytest.approx(direct.end[3], rel=1e-5)
    assert float(sol.norm_squared(0.0, 1)) == 0.0
    with pytest.raises(IndexError):
        sol.norm_squared(10.0, 2)


def test_lg_solve_norms_toward_minus_infinity(reduced):
    sol = reduced.lg_solve(RP, 1j, -8.0, norm_ics=[(1.0, 0.0)])
    direct = reduced.direct_solve(RP, 1j, (0.0, -8.0), (1.0, 0.0))
    assert float(sol.norm_squared(-8.0)) == pytest.approx(direct.end[3], rel=1e-5)


def test_lg_solve_without_norm_ics_has_no_norms(reduced):
    with pytest.raises(IndexError):
        reduced.lg_solve(RP, 1j, 4.0).norm_squared(4.0)


def test_lg_continue(reduced):
    start = reduced.direct_solve(RP, 1j, (0.0, 12.0), (1.0, 0.0))
    u0, du0 = complex(start.u(12.0)), complex(start.du(12.0))
    u, du = reduced.lg_continue(RP, 1j, 12.0, u0, du0, [12.0, 16.0, 14.0, 16.0])
    assert u[0] == u0 and du[0] == du0
    assert u[1] == u[3]
    direct = reduced.direct_solve(RP, 1j, (12.0, 16.0), (u0, du0))
    assert abs(u[1] - direct.end[1]) < 5e-2 * abs(direct.end[1])
    with pytest.raises(ValueError):
        reduced.lg_continue(RP, 1j, 12.0, u0, du0, [11.0, 13.0])
