import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from models.domain import (
    ConfinementReport,
    ConservedSet,
    DriftReport,
    PhasePoint,
    TangentVector,
)
from services.artifacts import write_csv, write_json
from services.errors import NoBarrier, PreconditionViolation, ToleranceFailure
from services.potential_service import PotentialService, spike_center
from services.stepping import SegmentedSolution

logger = logging.getLogger(__name__)

CONSERVED = ("p_eta", "p_z", "p_y", "C", "H")
TRAJECTORY_COLUMNS = ["lambda", "eta", "z", "x", "y", "p_eta", "p_z", "p_x", "p_y", "H", "C"]


@dataclass
class Trajectory:
    """Samples of the flow; states has rows [eta, z, x, y, p_eta, p_z, p_x, p_y]."""

    lam: np.ndarray
    states: np.ndarray
    steps: int

    @property
    def points(self) -> np.ndarray:
        return self.states[:4]


class GeodesicService:
    """
    Geodesic flow of the Hamiltonian H = p_eta p_z + V(x) p_z^2/2 + p_x^2/2 + p_y^2/2.

    The affine parameter is advanced region by region: a region is either a
    spike support or the gap between two supports, and each call of the
    embedded Runge-Kutta solver ends with a terminal event on the edge the
    trajectory leaves through. Inside a support the step is capped so that at
    least `spike_substeps` steps fit across it at the largest possible speed.
    """

    def __init__(
        self,
        potential: PotentialService,
        tol: float = 1e-10,
        lambda_max: float = 1000.0,
        drift_factor: float = 100.0,
        spike_substeps: int = 8,
        method: str = "DOP853",
    ):
        self.potential = potential
        self.tol = tol
        self.lambda_max = lambda_max
        self.drift_factor = drift_factor
        self.spike_substeps = spike_substeps
        self.method = method

    @classmethod
    def from_settings(cls, potential: PotentialService, cfg) -> "GeodesicService":
        g = cfg.geodesic
        return cls(
            potential,
            tol=g.tol,
            lambda_max=g.lambda_max,
            drift_factor=g.drift_factor,
            spike_substeps=g.spike_substeps,
            method=g.method,
        )

    # -- pointwise quantities -----------------------------------------------

    def hamiltonian(self, s: PhasePoint) -> float:
        m = s.momentum
        V = self.potential.eval_potential(s.point.x)
        return m.p_eta * m.p_z + 0.5 * V * m.p_z ** 2 + 0.5 * m.p_x ** 2 + 0.5 * m.p_y ** 2

    def conserved(self, s: PhasePoint) -> ConservedSet:
        m = s.momentum
        V = self.potential.eval_potential(s.point.x)
        return ConservedSet(
            p_eta=m.p_eta,
            p_z=m.p_z,
            p_y=m.p_y,
            C=m.p_x ** 2 + V * m.p_z ** 2,
            H=self.hamiltonian(s),
        )

    def velocity(self, s: PhasePoint) -> TangentVector:
        """Hamilton equations for the coordinates; g(v, v) = 2H."""
        m = s.momentum
        V = self.potential.eval_potential(s.point.x)
        return TangentVector(X_eta=m.p_z, X_z=m.p_eta + V * m.p_z, X_x=m.p_x, X_y=m.p_y)

    @staticmethod
    def reverse(s: PhasePoint) -> PhasePoint:
        return PhasePoint(point=s.point, momentum=type(s.momentum).from_array(-s.momentum.as_array()), lam=s.lam)

    def conserved_along(self, states: np.ndarray) -> Dict[str, np.ndarray]:
        x = states[2]
        p_eta, p_z, p_x, p_y = states[4], states[5], states[6], states[7]
        V = self.potential.eval_potential(x)
        return {
            "p_eta": p_eta,
            "p_z": p_z,
            "p_y": p_y,
            "C": p_x ** 2 + V * p_z ** 2,
            "H": p_eta * p_z + 0.5 * V * p_z ** 2 + 0.5 * p_x ** 2 + 0.5 * p_y ** 2,
        }

    def velocities(self, states: np.ndarray) -> np.ndarray:
        V = self.potential.eval_potential(states[2])
        return np.stack([states[5], states[4] + V * states[5], states[6], states[7]])

    # -- confinement --------------------------------------------------------

    def _barrier_index(self, level: float, reach: float) -> int:
        """
        Smallest n with n + 1 > level whose maximiser lies beyond reach.

        A start inside a support but past its maximiser is pushed outward by
        -V', so that spike cannot hold it.
        """
        n = max(1, math.floor(level))
        while n + 1.0 <= level:
            n += 1
        while spike_center(n) + self.potential.spike_width(n) <= reach:
            n += 1
        if n > self.potential.max_spikes:
            raise NoBarrier(f"Barrier index {n} exceeds max_spikes={self.potential.max_spikes}")
        if self.potential.sup_location(n) <= reach:
            n += 1
        if n > self.potential.max_spikes:
            raise NoBarrier(f"Barrier index {n} exceeds max_spikes={self.potential.max_spikes}")
        return n

    def predict_barrier(self, s: PhasePoint) -> ConfinementReport:
        m = s.momentum
        if m.p_z == 0.0:
            raise PreconditionViolation("predict_barrier needs p_z != 0")
        C = self.conserved(s).C
        level = C / m.p_z ** 2
        x = s.point.x
        right = self._barrier_index(level, x)
        left = self._barrier_index(level, -x)
        D = max(
            spike_center(right) + self.potential.spike_width(right),
            spike_center(left) + self.potential.spike_width(left),
        )
        E = self.potential.max_on(D)
        return ConfinementReport(
            D=D,
            E=E,
            zdot_bound=abs(m.p_eta) + E * abs(m.p_z),
            barrier_spikes=(left, right),
            level=level,
        )

    # -- integration --------------------------------------------------------

    def hamilton_rhs(self, lam: float, y: np.ndarray) -> np.ndarray:
        x = y[2]
        p_eta, p_z, p_x, p_y = y[4], y[5], y[6], y[7]
        V = self.potential.eval_potential(x)
        dV = self.potential.eval_potential(x, 1)
        return np.array([p_z, p_eta + V * p_z, p_x, p_y, 0.0, 0.0, -0.5 * dV * p_z * p_z, 0.0])

    def christoffel_rhs(self, lam: float, y: np.ndarray) -> np.ndarray:
        """Second-order geodesic equation; y = [eta, z, x, y, eta', z', x', y']."""
        x = y[2]
        eta_dot, x_dot = y[4], y[6]
        dV = self.potential.eval_potential(x, 1)
        return np.array(
            [y[4], y[5], y[6], y[7], 0.0, dV * eta_dot * x_dot, -0.5 * dV * eta_dot * eta_dot, 0.0]
        )

    def _edges(self, reach: float) -> np.ndarray:
        """All support edges within |x| <= reach, sorted; supports are [e[2k], e[2k+1]]."""
        edges: List[float] = []
        for spike in self.potential.active_spikes(-reach, reach):
            edges.extend(spike.support)
        return np.array(sorted(edges))

    def _advance(
        self,
        rhs: Callable[[float, np.ndarray], np.ndarray],
        y0: np.ndarray,
        lam_max: float,
        edges: np.ndarray,
        speed_sq: Callable[[float], float],
        dense: bool = False,
    ) -> SegmentedSolution:
        """
        Integrate forward in the affine parameter from 0 to lam_max.

        Index 2 of the state must be x and index 6 its derivative. Region r is
        (edges[r-1], edges[r]); odd r are spike supports.
        """
        rtol, atol = self.tol, self.tol * 1e-3
        side = "right" if y0[6] >= 0 else "left"
        region = int(np.searchsorted(edges, y0[2], side=side))
        lam = 0.0
        y = np.asarray(y0, dtype=float)
        ts: List[np.ndarray] = [np.array([0.0])]
        ys: List[np.ndarray] = [y[:, None]]
        pieces = []
        steps = 0
        nfev = 0
        stalls = 0
        while lam < lam_max:
            lo = edges[region - 1] if region > 0 else None
            hi = edges[region] if region < edges.size else None
            events = []
            kinds = []
            if lo is not None:
                events.append(_edge_event(lo, -1.0))
                kinds.append(-1)
            if hi is not None:
                events.append(_edge_event(hi, 1.0))
                kinds.append(1)
            max_step = np.inf
            if region % 2 == 1:
                v_max = math.sqrt(max(speed_sq(max(abs(lo), abs(hi))), 0.0))
                if v_max > 0.0:
                    max_step = (hi - lo) / (self.spike_substeps * v_max)
            try:
                sol = solve_ivp(
                    rhs,
                    (lam, lam_max),
                    y,
                    method=self.method,
                    rtol=rtol,
                    atol=atol,
                    max_step=max_step,
                    events=events or None,
                    dense_output=dense,
                )
            except (ValueError, RuntimeError) as e:
                raise ToleranceFailure(f"Geodesic solver failed at lambda={lam:.6g}: {e}") from e
            if sol.status == -1:
                msg = f"Step control failed at lambda={lam:.6g}: {sol.message}"
                logger.error(msg)
                raise ToleranceFailure(msg)
            ts.append(sol.t[1:])
            ys.append(sol.y[:, 1:])
            steps += sol.t.size - 1
            nfev += sol.nfev
            if dense and sol.t[-1] > lam:
                pieces.append((lam, sol.t[-1], sol.sol))
            stalls = stalls + 1 if sol.t[-1] <= lam else 0
            if stalls > 4:
                raise ToleranceFailure(f"No progress at lambda={lam:.6g} near x={y[2]:.6g}")
            lam = sol.t[-1]
            y = sol.y[:, -1]
            if sol.status == 1:
                for kind, fired in zip(kinds, sol.t_events):
                    if fired.size:
                        region += kind
                        break
        return SegmentedSolution(
            t=np.concatenate(ts), y=np.concatenate(ys, axis=1), steps=steps, nfev=nfev, pieces=pieces
        )

    def _forward(self, s0: PhasePoint, lam_max: float, rhs=None, y0=None, dense: bool = False) -> SegmentedSolution:
        m = s0.momentum
        rhs = rhs or self.hamilton_rhs
        y0 = s0.to_state() if y0 is None else y0
        if m.p_z == 0.0:
            # free motion; spikes never enter the right-hand side
            return self._advance(rhs, y0, lam_max, np.array([]), lambda a: 0.0, dense=dense)
        report = self.predict_barrier(s0)
        edges = self._edges(report.D + 1.0)
        C = self.conserved(s0).C
        p_z_sq = m.p_z ** 2
        return self._advance(rhs, y0, lam_max, edges, lambda a: C + p_z_sq * a ** 4, dense=dense)

    def integrate(
        self,
        s0: PhasePoint,
        lambda_max: Optional[float] = None,
        tol: Optional[float] = None,
        backward: bool = True,
    ) -> Tuple[Trajectory, DriftReport]:
        """
        Integrate to |lambda| = lambda_max (both directions unless backward is
        False) and report conserved-quantity drift and confinement.
        """
        lambda_max = self.lambda_max if lambda_max is None else lambda_max
        if tol is not None:
            if tol <= 0:
                raise ValueError(f"tol must be > 0, got {tol}")
            self.tol, saved = tol, self.tol
        else:
            saved = self.tol
        try:
            fwd = self._forward(s0, lambda_max)
            lam = fwd.t
            states = fwd.y
            steps = fwd.steps
            reached = (0.0, float(fwd.t[-1]))
            if backward:
                # time reversal: integrate the reversed state forward and flip back
                bwd = self._forward(self.reverse(s0), lambda_max)
                b_states = bwd.y[:, :0:-1].copy()
                b_states[4:] *= -1.0
                lam = np.concatenate([-bwd.t[:0:-1], fwd.t])
                states = np.concatenate([b_states, fwd.y], axis=1)
                steps += bwd.steps
                reached = (-float(bwd.t[-1]), float(fwd.t[-1]))
        finally:
            self.tol = saved

        trajectory = Trajectory(lam=lam + s0.lam, states=states, steps=steps)
        report = self.drift_report(s0, trajectory, lambda_max, reached)
        marker = "✓" if report.confined in (True, None) else "✗"
        logger.info(
            f"{marker} Geodesic integrated to lambda in [{reached[0]:.6g}, {reached[1]:.6g}] "
            f"({steps} steps, max |x| = {report.max_abs_x:.6g}, D = {report.D})"
        )
        return trajectory, report

    def drift_report(
        self,
        s0: PhasePoint,
        trajectory: Trajectory,
        lambda_max: float,
        reached: Tuple[float, float],
    ) -> DriftReport:
        start = self.conserved(s0).model_dump()
        along = self.conserved_along(trajectory.states)
        drift = {
            k: float(np.max(np.abs(along[k] - start[k])) / max(1.0, abs(start[k]))) for k in CONSERVED
        }
        max_abs_x = float(np.max(np.abs(trajectory.states[2])))
        D = E = None
        violations = 0
        confined = None
        if s0.momentum.p_z != 0.0:
            barrier = self.predict_barrier(s0)
            D, E = barrier.D, barrier.E
            zdot = np.abs(self.velocities(trajectory.states)[1])
            violations = int(np.count_nonzero(zdot > barrier.zdot_bound * (1.0 + 1e-9)))
            confined = max_abs_x <= D
        return DriftReport(
            max_drift=drift,
            max_abs_x=max_abs_x,
            lambda_reached=reached,
            lambda_max=lambda_max,
            steps=trajectory.steps,
            D=D,
            E=E,
            zdot_violations=violations,
            confined=confined,
        )

    def drift_limit(self) -> float:
        return self.drift_factor * self.tol

    def integrate_second_order(self, s0: PhasePoint, lambda_max: float) -> SegmentedSolution:
        """Forward solve of the Christoffel form from the Hamiltonian velocity."""
        v = self.velocity(s0).as_array()
        y0 = np.concatenate([s0.point.as_array(), v])
        return self._forward(s0, lambda_max, rhs=self.christoffel_rhs, y0=y0, dense=True)

    def christoffel_crosscheck(
        self, s0: PhasePoint, lambda_max: Optional[float] = None, tol: Optional[float] = None, samples: int = 2001
    ) -> float:
        """
        Max coordinate deviation, relative to max(1, |coordinate|), between
        the Hamiltonian flow and the second-order geodesic equation.
        """
        lambda_max = self.lambda_max if lambda_max is None else lambda_max
        saved = self.tol
        if tol is not None:
            self.tol = tol
        try:
            ham = self._forward(s0, lambda_max, dense=True)
            geo = self.integrate_second_order(s0, lambda_max)
        finally:
            self.tol = saved
        grid = np.linspace(0.0, lambda_max, samples)
        a = ham(grid)[:4]
        b = geo(grid)[:4]
        deviation = float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(a))))
        logger.debug(f"Christoffel cross-check deviation {deviation:.3e}")
        return deviation


def _edge_event(level: float, direction: float):
    def event(lam, y):
        return y[2] - level

    event.terminal = True
    event.direction = direction
    return event


def trajectory_rows(service: GeodesicService, trajectory: Trajectory) -> List[Dict[str, float]]:
    q = service.conserved_along(trajectory.states)
    names = ["eta", "z", "x", "y", "p_eta", "p_z", "p_x", "p_y"]
    rows = []
    for k in range(trajectory.lam.size):
        row = {"lambda": trajectory.lam[k], "H": q["H"][k], "C": q["C"][k]}
        row.update({name: trajectory.states[i, k] for i, name in enumerate(names)})
        rows.append(row)
    return rows


def export_trajectory(path: Path, service: GeodesicService, trajectory: Trajectory, config_hash: str) -> Path:
    return write_csv(path, TRAJECTORY_COLUMNS, trajectory_rows(service, trajectory), config_hash)


def export_drift(path: Path, report: DriftReport, config_hash: str) -> Path:
    return write_json(path, report.model_dump(), config_hash)
