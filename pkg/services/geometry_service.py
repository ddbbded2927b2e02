import logging
import math
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np

from models.domain import (
    CausalClass,
    CausalOrderReport,
    ConeCheck,
    Covector,
    DiamondBound,
    SpacetimePoint,
    TangentVector,
)
from services.artifacts import write_csv
from services.errors import NotCausal, PreconditionViolation
from services.potential_service import PotentialService, spike_center

logger = logging.getLogger(__name__)


class GeometryService:
    """
    The metric -V(x) deta^2 + 2 deta dz + dx^2 + dy^2, its time orientation,
    the cone inequalities and the causal-diamond bounds.

    Coordinates are always ordered (eta, z, x, y).
    """

    def __init__(self, potential: PotentialService, null_tol: float = 1e-12):
        self.potential = potential
        self.null_tol = null_tol

    # -- metric -------------------------------------------------------------

    def metric_matrix(self, x: float) -> np.ndarray:
        V = self.potential.eval_potential(x)
        return np.array(
            [[-V, 1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]]
        )

    def inverse_metric_matrix(self, x: float) -> np.ndarray:
        V = self.potential.eval_potential(x)
        return np.array(
            [[0.0, 1.0, 0.0, 0.0], [1.0, V, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]]
        )

    def metric_determinant(self, x: float) -> float:
        """Lorentzian coordinate determinant; -1 everywhere."""
        return float(np.linalg.det(self.metric_matrix(x)))

    def metric_eval(self, p: SpacetimePoint, X: TangentVector, Y: TangentVector) -> float:
        V = self.potential.eval_potential(p.x)
        return (
            -V * X.X_eta * Y.X_eta
            + X.X_eta * Y.X_z
            + X.X_z * Y.X_eta
            + X.X_x * Y.X_x
            + X.X_y * Y.X_y
        )

    def inverse_metric_eval(self, p: SpacetimePoint, pm: Covector, qm: Covector) -> float:
        V = self.potential.eval_potential(p.x)
        return (
            pm.p_eta * qm.p_z
            + pm.p_z * qm.p_eta
            + V * pm.p_z * qm.p_z
            + pm.p_x * qm.p_x
            + pm.p_y * qm.p_y
        )

    def norm_squared(self, x, X: np.ndarray) -> np.ndarray:
        """g(X, X) for arrays: x shape (m,), X shape (4, m)."""
        V = self.potential.eval_potential(np.asarray(x, dtype=float))
        return -V * X[0] ** 2 + 2.0 * X[0] * X[1] + X[2] ** 2 + X[3] ** 2

    # -- causal character ---------------------------------------------------

    def _null_scale(self, V: float, X: np.ndarray) -> float:
        return self.null_tol * max(1.0, (1.0 + abs(V)) * float(np.dot(X, X)))

    def classify_vector(self, p: SpacetimePoint, X: TangentVector) -> CausalClass:
        a = X.as_array()
        if not np.any(a):
            return CausalClass(kind="zero", orientation="n/a")
        V = self.potential.eval_potential(p.x)
        q = -V * a[0] ** 2 + 2.0 * a[0] * a[1] + a[2] ** 2 + a[3] ** 2
        scale = self._null_scale(V, a)
        if q > scale:
            return CausalClass(kind="spacelike", orientation="n/a")
        kind = "timelike" if q < -scale else "null"
        X_eta, X_z, X_x, X_y = a
        if X_eta > 0 or (X_eta == 0 and X_x == 0 and X_y == 0 and X_z < 0):
            orientation = "future"
        else:
            orientation = "past"
        return CausalClass(kind=kind, orientation=orientation)

    # -- cone inequalities --------------------------------------------------

    @staticmethod
    def cone_slacks(X: np.ndarray, n) -> np.ndarray:
        """
        Slacks of the four inequalities for X of shape (4, m):
        s1 = sqrt(n) X^eta - X^z/sqrt(n), s2 = s1 - |X^x|, s3 = s1 - |X^y|,
        s4 = n X^eta - X^z - |X^z|.
        """
        n = np.asarray(n, dtype=float)
        rn = np.sqrt(n)
        s1 = rn * X[0] - X[1] / rn
        return np.stack([s1, s1 - np.abs(X[2]), s1 - np.abs(X[3]), n * X[0] - X[1] - np.abs(X[1])])

    def cone_inequalities(self, p: SpacetimePoint, X: TangentVector, n: int) -> ConeCheck:
        if n < 1:
            raise PreconditionViolation(f"n must be >= 1, got {n}")
        if abs(p.x) > spike_center(n):
            raise PreconditionViolation(f"|x| = {abs(p.x):g} exceeds x_{n} = {spike_center(n):g}")
        cls = self.classify_vector(p, X)
        if not cls.is_causal_future:
            raise PreconditionViolation(f"vector is {cls.kind}/{cls.orientation}, not causal future")
        a = X.as_array()
        s = self.cone_slacks(a[:, None], n)[:, 0]
        slack_tol = 1e-12 * max(1.0, float(np.abs(a).max()) * n)
        passed = bool(s[0] > 0 and np.all(s[1:] >= -slack_tol))
        return ConeCheck(n=n, slacks=tuple(float(v) for v in s), passed=passed)

    def minkowski_comparison(self, p: SpacetimePoint, X: TangentVector, N: int) -> float:
        """
        g(X,X) - h_N(X,X) with h_N = -(sqrt(N) deta - dz/sqrt(N))^2 + dz^2/N + dx^2 + dy^2;
        equals (N - V(x)) (X^eta)^2, nonnegative wherever V <= N.
        """
        a = X.as_array()
        rn = math.sqrt(N)
        h = -(rn * a[0] - a[1] / rn) ** 2 + a[1] ** 2 / N + a[2] ** 2 + a[3] ** 2
        return self.metric_eval(p, X, X) - h

    def sample_causal_future(
        self, rng: np.random.Generator, count: int, max_n: int
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Causal future vectors at random points with |x| <= x_n.

        X^eta > 0 first, then X^z below the null bound (V (X^eta)^2 - (X^x)^2 -
        (X^y)^2) / (2 X^eta) from the quadratic in X^z; a tenth of the samples
        sit exactly on the bound (null) and a tenth are multiples of -d_z.
        No uniformity claim. Returns (n, x, X) with X of shape (4, count).
        """
        n = rng.integers(1, max_n + 1, size=count)
        x = rng.uniform(-1.0, 1.0, size=count) * np.array([spike_center(int(k)) for k in n])
        V = self.potential.eval_potential(x)
        X_eta = rng.exponential(1.0, size=count)
        X_x = rng.normal(0.0, 1.0, size=count)
        X_y = rng.normal(0.0, 1.0, size=count)
        bound = (V * X_eta ** 2 - X_x ** 2 - X_y ** 2) / (2.0 * X_eta)
        gap = rng.exponential(1.0, size=count)
        kind = rng.uniform(size=count)
        gap = np.where(kind < 0.1, 0.0, gap)
        X_z = bound - gap
        down = kind > 0.9
        X = np.stack([X_eta, X_z, X_x, X_y])
        X[:, down] = np.array([[0.0], [-1.0], [0.0], [0.0]]) * rng.exponential(1.0, size=int(down.sum()))
        return n, x, X

    # -- causality and diamonds ---------------------------------------------

    def check_causal_order(
        self,
        points: np.ndarray,
        velocities: np.ndarray,
        rel_tol: float = 1e-9,
    ) -> CausalOrderReport:
        """
        Ordering along a sampled future-directed causal curve: eta never
        decreases, and if it returns to its start value z strictly decreases.

        points, velocities: arrays of shape (4, m). Raises NotCausal when a
        sampled velocity is spacelike.
        """
        m = points.shape[1]
        q = self.norm_squared(points[2], velocities)
        V = self.potential.eval_potential(points[2])
        scale = rel_tol * np.maximum(1.0, (1.0 + np.abs(V)) * np.sum(velocities ** 2, axis=0))
        bad = np.nonzero(q > scale)[0]
        if bad.size:
            k = int(bad[0])
            raise NotCausal(f"velocity at sample {k} is spacelike (g(v,v) = {q[k]:.3e})")
        X_eta, X_z, X_x, X_y = velocities
        future = (X_eta > 0) | ((X_eta == 0) & (X_x == 0) & (X_y == 0) & (X_z < 0))
        if not np.all(future):
            k = int(np.nonzero(~future)[0][0])
            return CausalOrderReport(passed=False, reason=f"velocity at sample {k} is past directed", samples=m)
        eta = points[0]
        eta_tol = rel_tol * max(1.0, float(np.abs(eta).max()))
        if np.any(np.diff(eta) < -eta_tol):
            return CausalOrderReport(passed=False, reason="eta decreases along the curve", samples=m)
        if m > 1 and abs(eta[-1] - eta[0]) <= eta_tol:
            if not np.all(np.diff(points[1]) < 0):
                return CausalOrderReport(
                    passed=False, reason="eta returns to its start value but z does not decrease", samples=m
                )
        if m > 1 and np.allclose(points[:, 0], points[:, -1], rtol=0.0, atol=eta_tol):
            return CausalOrderReport(passed=False, reason="curve is closed", samples=m)
        return CausalOrderReport(passed=True, samples=m)

    def diamond_bounds(self, p: SpacetimePoint, q: SpacetimePoint) -> DiamondBound:
        if q.eta < p.eta:
            return DiamondBound(kind="empty")
        if q.eta == p.eta:
            if p == q:
                return DiamondBound(kind="point", eta_range=(p.eta, p.eta), origin=p)
            if q.z >= p.z:
                return DiamondBound(kind="empty")
        d_eta = q.eta - p.eta
        d_z = q.z - p.z

        def admissible(N: int) -> bool:
            rN = math.sqrt(N)
            return abs(p.x) <= rN and abs(q.x) <= rN and d_eta <= rN and d_z >= -rN

        # every condition reads N >= something^2; correct the ceiling for rounding
        N = max(1, math.ceil(max(p.x ** 2, q.x ** 2, d_eta ** 2, max(-d_z, 0.0) ** 2)))
        while not admissible(N):
            N += 1
        while N > 1 and admissible(N - 1):
            N -= 1
        return DiamondBound(
            kind="bounded",
            N=N,
            x_max=spike_center(N),
            y_span=N + 1.0,
            z_span=(N + 1.0) * math.sqrt(N),
            eta_range=(p.eta, q.eta),
            origin=p,
        )

    @staticmethod
    def diamond_contains(bound: DiamondBound, points: np.ndarray, rel_tol: float = 1e-9) -> bool:
        """True iff every sample (shape (4, m)) lies inside the bound's box."""
        if bound.kind == "empty":
            return points.shape[1] == 0
        origin = bound.origin.as_array()
        lo, hi = bound.eta_range
        slack = rel_tol * max(1.0, float(np.abs(points).max()))
        return bool(
            np.all(points[0] >= lo - slack)
            and np.all(points[0] <= hi + slack)
            and np.all(np.abs(points[2]) <= bound.x_max + slack)
            and np.all(np.abs(points[3] - origin[3]) <= bound.y_span + slack)
            and np.all(np.abs(points[1] - origin[1]) <= bound.z_span + slack)
        )

    def cone_report_rows(self, n: np.ndarray, x: np.ndarray, X: np.ndarray) -> List[Dict[str, float]]:
        slacks = self.cone_slacks(X, n)
        return [
            {
                "n": int(n[k]),
                "x": float(x[k]),
                "X_eta": float(X[0, k]),
                "X_z": float(X[1, k]),
                "X_x": float(X[2, k]),
                "X_y": float(X[3, k]),
                "slack1": float(slacks[0, k]),
                "slack2": float(slacks[1, k]),
                "slack3": float(slacks[2, k]),
                "slack4": float(slacks[3, k]),
            }
            for k in range(x.size)
        ]


CONE_COLUMNS = ["n", "x", "X_eta", "X_z", "X_x", "X_y", "slack1", "slack2", "slack3", "slack4"]


def export_cone_report(path: Path, rows: List[Dict[str, float]], config_hash: str) -> Path:
    return write_csv(path, CONE_COLUMNS, rows, config_hash)
