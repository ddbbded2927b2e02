import math

import numpy as np
import pytest

from services.artifacts import read_csv
from services.potential_service import (
    PotentialService,
    admissibility_rows,
    bump,
    export_spike_table,
    spike_center,
)


def test_spike_center_values():
    assert spike_center(0) == 2.0
    assert spike_center(1) == pytest.approx(1.0 + 1.5 * math.sqrt(2.0), abs=1e-15)
    assert spike_center(3) == 5.0


def test_spike_center_gaps_exceed_half():
    gaps = np.diff([spike_center(n) for n in range(0, 500)])
    assert np.all(gaps > 0.5)


def test_spike_center_rejects_negative_index():
    with pytest.raises(ValueError):
        spike_center(-1)


def test_spike_width_rule(potential):
    assert potential.spike_width(1) == pytest.approx(0.25 * 2.0 ** -3.5, rel=1e-15)
    assert potential.spike_width(3) == pytest.approx(0.25 * 4.0 ** -3.5, rel=1e-15)
    assert all(potential.spike_width(n) < 0.5 for n in range(1, 100))
    with pytest.raises(ValueError):
        potential.spike_width(0)


def test_bump_profile():
    assert bump(0.5) == 1.0
    assert bump(0.0) == 0.0 and bump(1.0) == 0.0
    assert bump(0.0, 1) == 0.0 and bump(1.0, 2) == 0.0
    t = np.linspace(0.01, 0.99, 99)
    assert np.all(bump(t) > 0.0)
    assert np.all(np.isfinite(bump(t, 2)))
    with pytest.raises(ValueError):
        bump(0.5, 3)


def test_calibration_meets_sup_condition(potential):
    for n in (1, 2, 3, 10):
        spike = potential.spike(n)
        assert spike.amplitude >= n + 1.0
        assert abs(spike.sup_residual) <= potential.residual_floor(spike.amplitude)


def test_first_amplitude_near_guess(potential):
    guess = 2.0 + (spike_center(1) + potential.spike_width(1) / 2.0) ** 4
    assert potential.spike(1).amplitude == pytest.approx(guess, rel=0.05)


def test_sup_location_is_interior(potential):
    x_3 = spike_center(3)
    where = potential.sup_location(3)
    assert x_3 < where < x_3 + potential.spike_width(3)


def test_potential_peak_on_first_spike(potential):
    peak = potential.eval_potential(potential.sup_location(1))
    assert peak == pytest.approx(2.0, abs=1e-8)
    lo, hi = potential.spike(1).support
    xs = np.linspace(lo, hi, 20001)
    assert np.max(potential.eval_potential(xs)) <= 2.0 + 1e-8


def test_potential_small_values(potential):
    assert potential.eval_potential(0.0) == 0.0
    assert potential.eval_potential(1.0) == -1.0
    xs = np.linspace(-spike_center(1), spike_center(1), 1001)
    assert np.array_equal(potential.eval_potential(xs), -xs ** 4)


def test_potential_is_even(potential):
    rng = np.random.default_rng(7)
    xs = rng.uniform(0.0, 30.0, 2000)
    assert np.array_equal(potential.eval_potential(xs), potential.eval_potential(-xs))
    for x in xs[:50]:
        assert potential.eval_potential(float(x)) == potential.eval_potential(float(-x))


def test_derivative_matches_finite_difference(potential):
    rng = np.random.default_rng(11)
    inside = [rng.uniform(*potential.spike(n).support) for n in range(1, 6)]
    xs = np.concatenate([rng.uniform(-20.0, 20.0, 200), inside])
    h = 1e-6
    for x in xs:
        fd = (potential.eval_potential(x + h) - potential.eval_potential(x - h)) / (2.0 * h)
        exact = potential.eval_potential(x, 1)
        assert fd == pytest.approx(exact, rel=1e-4, abs=1e-4)


def test_active_spikes(potential):
    assert potential.active_spikes(-1.0, 1.0) == []
    found = potential.active_spikes(3.0, 4.0)
    assert [(s.n, s.side) for s in found] == [(1, 1)]
    assert found[0].support == pytest.approx((3.1213203435596424, 3.1434174244))
    assert sorted((s.n, s.side) for s in potential.active_spikes(-4.0, 4.0)) == [(1, -1), (1, 1)]
    with pytest.raises(ValueError):
        potential.active_spikes(1.0, -1.0)


def test_segments_cover_path(potential):
    pieces = potential.segments(0.0, 10.0)
    assert pieces[0][0] == 0.0 and pieces[-1][1] == 10.0
    for (_, hi, _), (lo, _, _) in zip(pieces, pieces[1:]):
        assert hi == lo
    backwards = potential.segments(10.0, 0.0)
    assert backwards[0][0] == 10.0 and backwards[-1][1] == 0.0


def test_summability(potential):
    one = potential.check_summability(1)
    assert one.partial_sums == pytest.approx([0.25 * 2.0 ** -3.5])
    assert one.verdict == "pass"
    report = potential.check_summability(10_000)
    assert report.verdict == "pass"
    assert report.partial_sums[-1] < 0.66
    assert np.all(np.diff(report.partial_sums) >= 0.0)
    with pytest.raises(ValueError):
        potential.check_summability(0)


def test_admissibility_rows(potential):
    rows = admissibility_rows(potential, 20)
    assert len(rows) == 20
    assert all(r["disjoint"] and r["residual_ok"] for r in rows)


def test_spike_table_export(potential, tmp_path):
    rows = admissibility_rows(potential, 5)
    path = export_spike_table(tmp_path / "spikes.csv", rows, "abc123", potential.check_summability(100))
    meta, body = read_csv(path)
    assert meta["config_hash"] == "abc123"
    assert meta["summability_verdict"] == "pass"
    assert [int(r["n"]) for r in body] == [1, 2, 3, 4, 5]
    assert float(body[0]["x_n"]) == spike_center(1)


def test_spikes_can_be_disabled():
    flat = PotentialService(spikes_enabled=False)
    assert flat.eval_potential(spike_center(1) + 0.01) == -((spike_center(1) + 0.01) ** 4)
    assert flat.active_spikes(-10.0, 10.0) == []


def test_calibrate_amplitude_matches_table(potential):
    assert potential.calibrate_amplitude(2) == pytest.approx(potential.spike(2).amplitude, abs=1e-9)
    with pytest.raises(ValueError):
        potential.calibrate_amplitude(2, tol=0.0)


def test_spike_part(potential):
    assert potential.spike_part(1.0) == 0.0
    where = float(potential.sup_location(1))
    assert potential.spike_part(where) == pytest.approx(potential.eval_potential(where) + where ** 4)
    xs = np.array([0.0, where, -where])
    parts = potential.spike_part(xs)
    assert parts[0] == 0.0 and parts[1] == parts[2] > 0.0
