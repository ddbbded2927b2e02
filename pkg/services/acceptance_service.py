"""
The verify suite: one check per acceptance criterion, each writing its
artifacts and returning a CheckResult. A failing or crashing check never stops
the others; the cli turns the combined report into its exit code.
"""
import hashlib
import logging
import math
import tempfile
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from models.domain import (
    CheckResult,
    Covector,
    PhasePoint,
    ReducedParams,
    SpacetimePoint,
    TangentVector,
    VerifyReport,
    WeylReport,
)
from services.artifacts import write_csv, write_json
from services.container import ServiceContainer, build_container
from services.errors import VerificationError
from services.geometry_service import export_cone_report
from services.normmap_service import export_grid, export_summary, find_threshold, grid_axes, max_neighbor_jump
from services.potential_service import PotentialService, admissibility_rows, export_spike_table
from services.weyl_service import BumpFunction, export_weyl_report, weyl_row
from services.workers import parallel_map

logger = logging.getLogger(__name__)

# one independent random stream per check, so running a subset changes nothing
STREAMS = {"geodesics": 1, "causal": 2, "diamonds": 3, "lg": 4}

GEODESIC_COLUMNS = [
    "index", "lambda_min", "lambda_max", "max_drift", "max_abs_x", "D", "zdot_violations", "status",
]
LG_COLUMNS = ["p_y", "p_z", "p_eta", "lambda_im", "lg_deviation", "wronskian_drift", "cauchy_delta", "cauchy_bound"]

# (vector, point x, expected kind, expected orientation)
CAUSAL_CATALOGUE = [
    ((0.0, -1.0, 0.0, 0.0), 0.0, "null", "future"),
    ((0.0, 1.0, 0.0, 0.0), 0.0, "null", "past"),
    ((1.0, 0.0, 0.0, 0.0), 0.0, "null", "future"),
    ((1.0, 0.0, 0.0, 0.0), 1.0, "spacelike", "n/a"),
    ((0.0, 0.0, 1.0, 0.0), 0.0, "spacelike", "n/a"),
    ((0.0, 0.0, 0.0, 1.0), 2.0, "spacelike", "n/a"),
    ((1.0, -1.0, 0.0, 0.0), 0.0, "timelike", "future"),
]

# bumps inside the direct reach; two straddle the first spike on either side
PAIRING_BUMPS = [
    BumpFunction(-1.0, 1.0),
    BumpFunction(0.5, 1.5, 2.0),
    BumpFunction(-2.5, -1.2),
    BumpFunction(1.8, 2.9, 0.5),
    BumpFunction(2.9, 3.4),
    BumpFunction(-3.4, -2.9),
]


def _rng(seed: int, stream: str) -> np.random.Generator:
    return np.random.default_rng([seed, STREAMS[stream]])


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# -- random initial data ---------------------------------------------------------


def random_confined_states(
    rng: np.random.Generator,
    count: int,
    ratio_range: Tuple[float, float],
    potential: PotentialService,
    spike_share: float = 1.0 / 3.0,
    max_spike: int = 8,
) -> List[PhasePoint]:
    """
    Geodesic data with p_z != 0 and C / p_z^2 in ratio_range. A spike_share
    of the states starts inside one of the first max_spike supports (either
    side, either side of the maximiser); the rest start in the spike-free
    core |x| <= 2.5.
    """
    states = []
    for _ in range(count):
        p_z = rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0])
        level = rng.uniform(*ratio_range)
        if rng.uniform() < spike_share:
            spike = potential.spike(int(rng.integers(1, max_spike + 1)))
            x = rng.choice([-1.0, 1.0]) * (spike.center_left + rng.uniform(0.0, 1.0) * spike.width)
            V = float(potential.eval_potential(x))
            # p_x^2 = (level - V) p_z^2 must stay real
            level = max(level, min(V + rng.uniform(0.01, 1.0), ratio_range[1]))
        else:
            x = rng.uniform(-2.5, 2.5)
            V = -x ** 4
        p_x = rng.choice([-1.0, 1.0]) * math.sqrt(max(level - V, 0.0) * p_z ** 2)
        eta, z, y = rng.normal(size=3)
        states.append(
            PhasePoint(
                point=SpacetimePoint(eta=eta, z=z, x=x, y=y),
                momentum=Covector(p_eta=rng.normal(), p_z=p_z, p_x=p_x, p_y=rng.normal()),
            )
        )
    return states


def random_causal_states(rng: np.random.Generator, count: int) -> List[PhasePoint]:
    """Future-directed causal data: p_z > 0 and H <= 0 (null for a tenth of them)."""
    states = []
    for k in range(count):
        p_z = rng.uniform(0.2, 1.0)
        x = rng.uniform(-2.0, 2.0)
        V = -x ** 4
        p_x, p_y = rng.normal(size=2)
        H = 0.0 if k % 10 == 0 else -rng.exponential(1.0)
        p_eta = (H - 0.5 * V * p_z ** 2 - 0.5 * (p_x ** 2 + p_y ** 2)) / p_z
        eta, z, y = rng.normal(size=3)
        states.append(
            PhasePoint(
                point=SpacetimePoint(eta=eta, z=z, x=x, y=y),
                momentum=Covector(p_eta=p_eta, p_z=p_z, p_x=p_x, p_y=p_y),
            )
        )
    return states


# -- per-task workers (module level so the pool can pickle them) ------------------


def _geodesic_task(container: ServiceContainer, task: Tuple[int, dict]) -> dict:
    index, data = task
    s0 = PhasePoint.model_validate(data)
    geodesic = container.geodesic
    row = {"index": index, "lambda_min": math.nan, "lambda_max": math.nan, "max_drift": math.nan,
           "max_abs_x": math.nan, "D": math.nan, "zdot_violations": -1, "status": "failed"}
    try:
        _, report = geodesic.integrate(s0)
    except VerificationError as e:
        row["status"] = f"failed: {e}"
        return row
    row.update(
        lambda_min=report.lambda_reached[0],
        lambda_max=report.lambda_reached[1],
        max_drift=max(report.max_drift.values()),
        max_abs_x=report.max_abs_x,
        D=report.D,
        zdot_violations=report.zdot_violations,
        status="ok",
    )
    return row


def _lg_task(container: ServiceContainer, task: Tuple[Tuple[float, float, float], complex]) -> dict:
    (p_y, p_z, p_eta), lam = task
    cfg = container.settings
    reduced = container.reduced
    rp = ReducedParams(p_y=p_y, p_z=p_z, p_eta=p_eta)
    reach = cfg.reduced.lg_check_reach
    row = {"p_y": p_y, "p_z": p_z, "p_eta": p_eta, "lambda_im": lam.imag}
    direct = reduced.direct_solve(rp, lam, (0.0, reach), (1.0, 0.0))
    lg = reduced.lg_solve(rp, lam, reach)
    xs = np.linspace(cfg.reduced.lg_check_start, reach, 4001)
    u_d, du_d, _ = direct.state(xs)
    u_l, _ = lg.solution_for_ic(xs, 1.0, 0.0)
    envelope = np.sqrt(np.abs(u_d) ** 2 + np.abs(du_d) ** 2 / lg.frame.Sp(xs) ** 2)
    row["lg_deviation"] = float(np.max(np.abs(u_l - u_d) / envelope))
    w0 = complex(lg.wronskian(0.0))
    row["wronskian_drift"] = float(np.max(np.abs(lg.wronskian(xs) - w0)) / abs(w0))
    delta, bound = reduced.u_cauchy_check(lg, rp, cfg.acceptance.cauchy_reach)
    row["cauchy_delta"], row["cauchy_bound"] = delta, bound
    return row


def _classify_task(container: ServiceContainer, key: Tuple[float, float, float]) -> dict:
    rp = ReducedParams(p_y=key[0], p_z=key[1], p_eta=key[2])
    try:
        report = container.weyl.classify_endpoint(rp, 1j)
    except VerificationError as e:
        return {"key": key, "error": str(e)}
    return {"key": key, "report": report}


# -- the suite --------------------------------------------------------------------


class AcceptanceService:
    def __init__(self, container: ServiceContainer, out_dir: Path):
        self.container = container
        self.cfg = container.settings
        self.out_dir = Path(out_dir)
        self._results: List[CheckResult] = []
        self.checks: Dict[str, Callable[[], CheckResult]] = {
            "admissibility": self.check_admissibility,
            "geodesics": self.check_geodesics,
            "causal": self.check_causal_structure,
            "lg": self.check_lg_machinery,
            "l1": self.check_l1_conditions,
            "classification": self.check_classification,
            "psi": self.check_deficiency_solution,
            "threshold": self.check_threshold,
            "determinism": self.check_determinism,
        }

    @property
    def config_hash(self) -> str:
        return self.container.config_hash

    def _map(self, fn, tasks: Sequence) -> list:
        return parallel_map(
            fn,
            tasks,
            self.container,
            threads=self.cfg.run.threads,
            config_json=self.container.config_json,
            builder=build_container,
        )

    def _path(self, name: str) -> Path:
        return self.out_dir / name

    # -- 1 ---------------------------------------------------------------------

    def _write_spike_table(self, path: Path) -> Tuple[list, object]:
        a = self.cfg.acceptance
        potential = self.container.potential
        rows = admissibility_rows(potential, a.spike_count)
        summability = potential.check_summability(a.summability_terms)
        export_spike_table(path, rows, self.config_hash, summability)
        return rows, summability

    def check_admissibility(self) -> CheckResult:
        a = self.cfg.acceptance
        path = self._path("spike-table.csv")
        rows, summability = self._write_spike_table(path)
        failures = []
        for r in rows:
            if not r["disjoint"]:
                failures.append(f"spike {r['n']} overlaps spike {r['n'] + 1}")
            if not r["eps_n"] < 0.5:
                failures.append(f"spike {r['n']} width {r['eps_n']} >= 1/2")
            if not r["residual_ok"]:
                failures.append(f"spike {r['n']} sup residual {r['sup_residual']:.3e}")
        top = max(summability.partial_sums)
        if summability.verdict != "pass" or top > a.summability_limit:
            failures.append(f"sum eps_n n^2 reaches {top:.6f} (limit {a.summability_limit})")
        return CheckResult(
            name="admissibility",
            passed=not failures,
            metrics={
                "spikes": float(len(rows)),
                "max_sup_residual": max(abs(r["sup_residual"]) for r in rows),
                "summability_partial": top,
                "summability_bound": summability.bound,
            },
            failures=failures,
            artifacts=[str(path)],
        )

    # -- 2 ---------------------------------------------------------------------

    def check_geodesics(self) -> CheckResult:
        a = self.cfg.acceptance
        geodesic = self.container.geodesic
        rng = _rng(self.cfg.run.seed, "geodesics")
        states = random_confined_states(rng, a.geodesic_count, a.barrier_ratio_range, self.container.potential)
        tasks = [(k, s.model_dump()) for k, s in enumerate(states)]
        rows = sorted(self._map(_geodesic_task, tasks), key=lambda r: r["index"])
        lam_max = geodesic.lambda_max
        failures = []
        for r in rows:
            k = r["index"]
            if r["status"] != "ok":
                failures.append(f"geodesic {k}: {r['status']}")
                continue
            if r["lambda_min"] > -lam_max * (1 - 1e-12) or r["lambda_max"] < lam_max * (1 - 1e-12):
                failures.append(f"geodesic {k} stopped at [{r['lambda_min']:.6g}, {r['lambda_max']:.6g}]")
            if r["max_drift"] > a.geodesic_drift_limit:
                failures.append(f"geodesic {k} drift {r['max_drift']:.3e}")
            if r["max_abs_x"] > r["D"]:
                failures.append(f"geodesic {k} reached |x| = {r['max_abs_x']:.6g} beyond D = {r['D']:.6g}")
            if r["zdot_violations"]:
                failures.append(f"geodesic {k} broke the z-velocity bound {r['zdot_violations']} times")
        crosscheck = geodesic.christoffel_crosscheck(states[0], lambda_max=20.0)
        if crosscheck > a.geodesic_drift_limit:
            failures.append(f"second-order geodesic equation deviates by {crosscheck:.3e}")
        path = write_csv(self._path("geodesics.csv"), GEODESIC_COLUMNS, rows, self.config_hash)
        ok = [r["max_drift"] for r in rows if r["status"] == "ok"]
        return CheckResult(
            name="geodesics",
            passed=not failures,
            metrics={
                "geodesics": float(len(rows)),
                "max_drift": max(ok) if ok else math.nan,
                "christoffel_deviation": crosscheck,
            },
            failures=failures,
            artifacts=[str(path)],
        )

    # -- 3 ---------------------------------------------------------------------

    def _write_cone_report(self, path: Path) -> Tuple[Path, np.ndarray, np.ndarray, np.ndarray]:
        a = self.cfg.acceptance
        geometry = self.container.geometry
        rng = _rng(self.cfg.run.seed, "causal")
        n, x, X = geometry.sample_causal_future(rng, a.cone_samples, a.cone_max_n)
        k = min(a.cone_report_rows, x.size)
        export_cone_report(path, geometry.cone_report_rows(n[:k], x[:k], X[:, :k]), self.config_hash)
        return path, n, x, X

    def check_causal_structure(self) -> CheckResult:
        a = self.cfg.acceptance
        geometry = self.container.geometry
        geodesic = self.container.geodesic
        failures = []

        path, n, x, X = self._write_cone_report(self._path("cone-report.csv"))
        slacks = geometry.cone_slacks(X, n)
        slack_tol = 1e-12 * np.maximum(1.0, np.abs(X).max(axis=0) * n)
        ok = (slacks[0] > 0) & np.all(slacks[1:] >= -slack_tol, axis=0)
        if not np.all(ok):
            failures.append(f"{int(np.count_nonzero(~ok))} of {x.size} causal vectors break the cone inequalities")
        # g(X, X) - h_n(X, X) = (n - V) (X^eta)^2 >= 0 on |x| <= x_n
        rn = np.sqrt(n)
        h = -(rn * X[0] - X[1] / rn) ** 2 + X[1] ** 2 / n + X[2] ** 2 + X[3] ** 2
        comparison = geometry.norm_squared(x, X) - h
        if np.any(comparison < -slack_tol * np.maximum(1.0, np.abs(h))):
            failures.append("Minkowski cone comparison fails on sampled vectors")

        for vector, px, kind, orientation in CAUSAL_CATALOGUE:
            got = geometry.classify_vector(SpacetimePoint(x=px), TangentVector.from_array(vector))
            if (got.kind, got.orientation) != (kind, orientation):
                failures.append(f"{vector} at x={px}: {got.kind}/{got.orientation}, expected {kind}/{orientation}")
        for k in range(min(1000, x.size)):
            p = SpacetimePoint(x=float(x[k]))
            v = TangentVector.from_array(X[:, k])
            fwd, back = geometry.classify_vector(p, v), geometry.classify_vector(p, -v)
            if fwd.kind != back.kind or fwd.orientation == back.orientation:
                failures.append(f"time reversal of sample {k} gives {back.kind}/{back.orientation}")
                break

        rng = _rng(self.cfg.run.seed, "diamonds")
        contained = 0
        for k, s0 in enumerate(random_causal_states(rng, a.diamond_pairs)):
            try:
                trajectory, _ = geodesic.integrate(s0, lambda_max=a.diamond_lambda, backward=False)
                points = trajectory.points
                order = geometry.check_causal_order(points, geodesic.velocities(trajectory.states))
            except VerificationError as e:
                failures.append(f"diamond pair {k}: {e}")
                continue
            if not order.passed:
                failures.append(f"diamond pair {k}: {order.reason}")
                continue
            p, q = SpacetimePoint.from_array(points[:, 0]), SpacetimePoint.from_array(points[:, -1])
            bound = geometry.diamond_bounds(p, q)
            if geometry.diamond_contains(bound, points):
                contained += 1
            else:
                failures.append(f"diamond pair {k}: trajectory leaves the N={bound.N} box")
        return CheckResult(
            name="causal",
            passed=not failures,
            metrics={
                "cone_samples": float(x.size),
                "min_slack1": float(slacks[0].min()),
                "diamond_pairs_contained": float(contained),
            },
            failures=failures,
            artifacts=[str(path)],
        )

    # -- 4 ---------------------------------------------------------------------

    def check_lg_machinery(self) -> CheckResult:
        a = self.cfg.acceptance
        if 2.0 * a.cauchy_reach > self.cfg.reduced.lg_check_reach:
            raise ValueError("cauchy_reach must be at most half of lg_check_reach")
        rng = _rng(self.cfg.run.seed, "lg")
        keys = [tuple(float(v) for v in row) for row in rng.uniform(1.0, 2.0, size=(a.lg_cases, 3))]
        tasks = [(key, lam) for key in keys for lam in (1j, -1j)]
        rows = sorted(self._map(_lg_task, tasks), key=lambda r: (r["p_y"], r["p_z"], r["p_eta"], r["lambda_im"]))
        failures = []
        for r in rows:
            tag = f"rp=({r['p_y']:.4f}, {r['p_z']:.4f}, {r['p_eta']:.4f}), lambda={r['lambda_im']:+g}i"
            if r["lg_deviation"] >= a.lg_agreement:
                failures.append(f"{tag}: LG/direct deviation {r['lg_deviation']:.3e}")
            if r["wronskian_drift"] >= a.wronskian_drift:
                failures.append(f"{tag}: Wronskian drift {r['wronskian_drift']:.3e}")
            if r["cauchy_delta"] > r["cauchy_bound"]:
                failures.append(f"{tag}: Cauchy increment {r['cauchy_delta']:.3e} above {r['cauchy_bound']:.3e}")
        path = write_csv(self._path("lg-check.csv"), LG_COLUMNS, rows, self.config_hash)
        return CheckResult(
            name="lg",
            passed=not failures,
            metrics={
                "max_lg_deviation": max(r["lg_deviation"] for r in rows),
                "max_wronskian_drift": max(r["wronskian_drift"] for r in rows),
            },
            failures=failures,
            artifacts=[str(path)],
        )

    # -- 5 ---------------------------------------------------------------------

    def check_l1_conditions(self) -> CheckResult:
        reduced = self.container.reduced
        failures = []
        reports = []
        slopes = []
        for p_z in self.cfg.acceptance.l1_pz_values:
            rp = ReducedParams(p_y=1.0, p_z=p_z, p_eta=1.0)
            report = reduced.l1_condition_check(rp)
            reports.append(report)
            if report.verdict != "pass":
                failures.append(f"p_z={p_z:g}: doubling increments {report.doubling_deltas}")
            slope = reduced.v0_decay_slope(rp)
            slopes.append(slope)
            # |V0| / S' ~ 2 / (p_z x^4)
            if abs(slope + 4.0) > 0.1:
                failures.append(f"p_z={p_z:g}: V0 weight decays like x^{slope:.3f}")
        pz_exponent = reduced.v0_pz_exponent(self.cfg.acceptance.l1_pz_values)
        logger.info(f"V0 weight scales like |p_z|^{pz_exponent:.4f}")
        path = write_json(
            self._path("l1-report.json"),
            {"reports": [r.model_dump() for r in reports], "v0_slopes": slopes, "v0_pz_exponent": pz_exponent},
            self.config_hash,
        )
        return CheckResult(
            name="l1",
            passed=not failures,
            metrics={"cases": float(len(reports)), "v0_pz_exponent": pz_exponent, "max_last_delta": max(
                r.doubling_deltas["integral3"][-1] for r in reports
            )},
            failures=failures,
            artifacts=[str(path)],
        )

    # -- 6 ---------------------------------------------------------------------

    def check_classification(self) -> CheckResult:
        a = self.cfg.acceptance
        weyl = self.container.weyl
        n = self.cfg.normmap
        axes = grid_axes((n.p_y_range, n.p_z_range, n.p_eta_range), a.classification_counts)
        keys = [(float(p), float(q), float(r)) for p in axes[0] for q in axes[1] for r in axes[2]]
        results = sorted(self._map(_classify_task, keys), key=lambda r: r["key"])
        failures = []
        rows = []
        inconclusive = 0
        for r in results:
            if "error" in r:
                failures.append(f"rp={r['key']}: {r['error']}")
                continue
            report: WeylReport = r["report"]
            rows.append(weyl_row(report))
            verdicts = (report.classification, report.classification_minus)
            inconclusive += verdicts.count("Inconclusive")
            if verdicts != ("LimitCircle", "LimitCircle") or report.deficiency != (2, 2):
                failures.append(f"rp={r['key']}: {verdicts}, deficiency {report.deficiency}")

        for p_y, p_eta in zip(np.linspace(1.0, 2.0, a.control_values), np.linspace(2.0, 1.0, a.control_values)):
            rp = ReducedParams(p_y=float(p_y), p_z=0.0, p_eta=float(p_eta))
            report = weyl.classify_endpoint(rp, 1j)
            rows.append(weyl_row(report))
            verdicts = (report.classification, report.classification_minus)
            if verdicts != ("LimitPoint", "LimitPoint") or report.deficiency != (0, 0):
                failures.append(f"control {rp.key()}: {verdicts}, deficiency {report.deficiency}")

        base = ServiceContainer.from_settings(self.cfg, spikes_enabled=False).weyl
        base_report = base.classify_endpoint(ReducedParams(p_y=1.0, p_z=1.0, p_eta=1.0), 1j)
        if base_report.classification != "LimitCircle":
            failures.append(f"spike-free control: {base_report.classification}")

        rp = ReducedParams(p_y=1.0, p_z=1.0, p_eta=1.0)
        conj = weyl.conjugation_check(rp)
        parity = weyl.parity_check(rp)
        if conj > a.symmetry_limit:
            failures.append(f"conjugation symmetry deviates by {conj:.3e}")
        if parity > a.symmetry_limit:
            failures.append(f"parity deviates by {parity:.3e}")
        reference = weyl.classify_endpoint(rp, 1j)
        if reference.direct_deviation is not None and reference.direct_deviation > a.direct_crosscheck_limit:
            failures.append(f"ladder norm deviates from a direct solve by {reference.direct_deviation:.3e}")
        stable = self._stability(rp, reference.classification)
        if not stable:
            failures.append("classification of (1, 1, 1) changes under tol/10 and 2 L_max")

        path = export_weyl_report(self._path("weyl-report.csv"), rows, self.config_hash)
        return CheckResult(
            name="classification",
            passed=not failures,
            metrics={
                "grid_points": float(len(keys)),
                "inconclusive": float(inconclusive),
                "conjugation_deviation": conj,
                "parity_deviation": parity,
                "crosscheck_deviation": reference.crosscheck_deviation or 0.0,
                "direct_deviation": reference.direct_deviation or 0.0,
            },
            failures=failures,
            artifacts=[str(path)],
        )

    def _stability(self, rp: ReducedParams, verdict: str) -> bool:
        cfg = self.cfg.model_copy(deep=True)
        cfg.reduced.tol = cfg.reduced.tol / 10.0
        cfg.weyl.L_max = 2.0 * cfg.weyl.L_max
        weyl = ServiceContainer.from_settings(cfg).weyl
        return weyl.classify_endpoint(rp, 1j).classification == verdict

    # -- 7 ---------------------------------------------------------------------

    def check_deficiency_solution(self) -> CheckResult:
        a = self.cfg.acceptance
        weyl = self.container.weyl
        rp = ReducedParams(p_y=a.psi_params[0], p_z=a.psi_params[1], p_eta=a.psi_params[2])
        psi = weyl.deficiency_psi(rp)
        failures = []
        norms = dict(zip(psi.ladder, psi.norm_ladder))
        half = psi.ladder[-2] if len(psi.ladder) > 1 else psi.ladder[-1]
        change = (norms[psi.ladder[-1]] - norms[half]) / norms[half]
        if change >= a.psi_ladder_change:
            failures.append(f"||psi|| changes by {change:.3e} from L={half:g} to L={psi.ladder[-1]:g}")
        u0, du0 = psi.evaluate(0.0)
        if abs(complex(u0) - 1.0) > 1e-14 or abs(complex(du0)) > 1e-14:
            failures.append(f"psi(0), psi'(0) = {complex(u0)}, {complex(du0)}")
        far = np.array([psi.reach, -psi.reach])
        u_far, _ = psi.evaluate(far)
        if not np.all(np.isfinite(u_far)) or abs(u_far[0] - u_far[1]) > a.symmetry_limit * abs(u_far[0]):
            failures.append(f"psi(+-{psi.reach:g}) = {u_far[0]}, {u_far[1]}")
        collocation = weyl.collocation_residual(psi)
        if collocation >= a.collocation_limit:
            failures.append(f"collocation residual {collocation:.3e}")
        pairing = weyl.adjoint_pairing_check(psi, PAIRING_BUMPS)
        if pairing >= a.pairing_limit:
            failures.append(f"adjoint pairing residual {pairing:.3e}")
        path = write_json(
            self._path("psi-report.json"),
            {
                "params": rp.model_dump(),
                "ladder": psi.ladder,
                "norm_ladder": psi.norm_ladder,
                "reach": psi.reach,
                "psi_at_reach": [u_far[0].real, u_far[0].imag],
                "tail_bound": psi.tail_bound,
                "collocation_residual": collocation,
                "pairing_residual": pairing,
            },
            self.config_hash,
        )
        return CheckResult(
            name="psi",
            passed=not failures,
            metrics={
                "norm": psi.norm,
                "ladder_change": change,
                "collocation_residual": collocation,
                "pairing_residual": pairing,
            },
            failures=failures,
            artifacts=[str(path)],
        )

    # -- 8 ---------------------------------------------------------------------

    def check_threshold(self) -> CheckResult:
        n = self.cfg.normmap
        a = self.cfg.acceptance
        grid = self.container.normmap.grid_norms((n.p_y_range, n.p_z_range, n.p_eta_range), n.counts, n.L)
        failures = [f"{p.key()}: {p.status} {p.message}".strip() for p in grid.points if p.status != "converged"]
        report = find_threshold(grid, n.target_fraction)
        if not report.admissible:
            failures.append(f"threshold M={report.M:.10g} holds only {report.fraction_below:.3f}")
        jump = max_neighbor_jump(grid)
        if jump >= a.max_neighbor_jump:
            failures.append(f"neighbouring grid norms jump by {jump:.3f}")
        grid_path = export_grid(self._path("norm-grid.csv"), grid, self.config_hash)
        summary_path = export_summary(self._path("threshold.json"), grid, report, self.config_hash)
        return CheckResult(
            name="threshold",
            passed=not failures,
            metrics={
                "M": report.M,
                "fraction_below": report.fraction_below,
                "min_norm": report.min_norm,
                "max_norm": report.max_norm,
                "max_neighbor_jump": jump,
            },
            failures=failures,
            artifacts=[str(grid_path), str(summary_path)],
        )

    # -- 9 ---------------------------------------------------------------------

    def _replay(self, names: Sequence[str], out_dir: Path) -> Dict[str, str]:
        """Run the named checks into out_dir and return their artifact digests."""
        return AcceptanceService(self.container, out_dir).run(names).artifact_sha256

    def check_determinism(self) -> CheckResult:
        """
        Rerun every check of this invocation into scratch space and compare
        the bytes of every artifact with the published ones. Run on its own,
        the whole suite is run twice.
        """
        replayed = [r.name for r in self._results if r.name != "determinism"]
        with tempfile.TemporaryDirectory() as tmp:
            if replayed:
                first = {Path(p).name: sha256_file(Path(p)) for r in self._results for p in r.artifacts}
            else:
                replayed = [n for n in self.checks if n != "determinism"]
                first = self._replay(replayed, Path(tmp) / "first")
            second = self._replay(replayed, Path(tmp) / "second")
        names = sorted(set(first) | set(second))
        failures = [f"{name} is not reproducible" for name in names if first.get(name) != second.get(name)]
        return CheckResult(
            name="determinism",
            passed=not failures,
            metrics={"artifacts": float(len(first)), "replayed_checks": float(len(replayed))},
            failures=failures,
        )

    # -- driver ------------------------------------------------------------------

    def run(self, only: Optional[Sequence[str]] = None) -> VerifyReport:
        names = list(self.checks) if not only else list(dict.fromkeys(only))
        unknown = [n for n in names if n not in self.checks]
        if unknown:
            raise ValueError(f"unknown checks: {', '.join(unknown)}")
        # determinism replays what ran before it
        names.sort(key=lambda n: n == "determinism")
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.container.potential.prepare(self.cfg.potential.prepare_reach)
        results = self._results = []
        for name in names:
            logger.info("=" * 60)
            logger.info(f"Check: {name}")
            try:
                result = self.checks[name]()
            except VerificationError as e:
                logger.error(f"✗ {name} aborted: {e}")
                result = CheckResult(name=name, passed=False, failures=[f"aborted: {e}"])
            logger.info(f"{'✓' if result.passed else '✗'} {name}: {len(result.failures)} failures")
            for failure in result.failures[:10]:
                logger.info(f"  {failure}")
            results.append(result)
        artifacts = sorted({p for r in results for p in r.artifacts})
        report = VerifyReport(
            passed=all(r.passed for r in results),
            checks=results,
            failures=[f"{r.name}: {f}" for r in results for f in r.failures],
            artifact_sha256={Path(p).name: sha256_file(Path(p)) for p in artifacts},
        )
        write_json(self._path("verify-report.json"), report.model_dump(), self.config_hash)
        logger.info("=" * 60)
        logger.info(f"{'✓ All checks passed' if report.passed else '✗ Verification failed'}")
        logger.info("=" * 60)
        return report
