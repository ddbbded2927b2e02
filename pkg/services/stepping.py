"""
Spike-aware adaptive stepping for ODEs whose independent variable is x.

The interval is cut at every spike support edge and each piece is handed to
scipy's embedded Runge-Kutta solvers; inside a support the step is capped so
that at least `substeps` steps land in it. Steps therefore never straddle a
support edge and a narrow spike can never be jumped over.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from services.errors import ToleranceFailure
from services.potential_service import PotentialService, Segment

logger = logging.getLogger(__name__)


@dataclass
class SegmentedSolution:
    """Concatenated solver output of a piecewise solve, plus dense pieces."""

    t: np.ndarray
    y: np.ndarray
    steps: int
    nfev: int
    pieces: List[Tuple[float, float, object]] = field(default_factory=list)

    def __call__(self, t) -> np.ndarray:
        """Dense evaluation; shape (dim,) for scalar t, (dim, len(t)) otherwise."""
        if not self.pieces:
            raise RuntimeError("solution was computed without dense output")
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        starts = np.array([p[0] for p in self.pieces])
        idx = np.clip(np.searchsorted(starts, t_arr, side="right") - 1, 0, len(self.pieces) - 1)
        out = np.empty((self.y.shape[0], t_arr.size), dtype=self.y.dtype)
        for k in np.unique(idx):
            mask = idx == k
            out[:, mask] = self.pieces[k][2](t_arr[mask])
        if np.ndim(t) == 0:
            return out[:, 0]
        return out

    @property
    def final(self) -> np.ndarray:
        return self.y[:, -1]


def split_segments(segments: Sequence[Segment], points: Sequence[float]) -> List[Segment]:
    """Further cut segments at the given points (e.g. ladder rungs)."""
    out: List[Segment] = []
    for lo, hi, spike in segments:
        a, b = min(lo, hi), max(lo, hi)
        cuts = sorted(p for p in points if a < p < b)
        if hi < lo:
            cuts = cuts[::-1]
        nodes = [lo] + cuts + [hi]
        out.extend((nodes[i], nodes[i + 1], spike) for i in range(len(nodes) - 1))
    return out


def solve_on_segments(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    segments: Sequence[Segment],
    rtol: float,
    atol: float,
    method: str = "DOP853",
    substeps: int = 8,
    dense: bool = False,
) -> SegmentedSolution:
    """Integrate rhs along consecutive segments, restarting at every edge."""
    y = np.asarray(y0, dtype=float)
    ts: List[np.ndarray] = []
    ys: List[np.ndarray] = []
    pieces: List[Tuple[float, float, object]] = []
    steps = 0
    nfev = 0
    for i, (lo, hi, spike) in enumerate(segments):
        if hi == lo:
            continue
        max_step = abs(hi - lo) / substeps if spike is not None else np.inf
        try:
            sol = solve_ivp(
                rhs,
                (lo, hi),
                y,
                method=method,
                rtol=rtol,
                atol=atol,
                max_step=max_step,
                dense_output=dense,
            )
        except (ValueError, RuntimeError) as e:
            raise ToleranceFailure(f"Solver failed on [{lo:.6g}, {hi:.6g}]: {e}") from e
        if sol.status == -1:
            msg = f"Step control failed on [{lo:.6g}, {hi:.6g}]: {sol.message}"
            logger.error(msg)
            raise ToleranceFailure(msg)
        keep = slice(1, None) if ts else slice(None)
        ts.append(sol.t[keep])
        ys.append(sol.y[:, keep])
        steps += sol.t.size - 1
        nfev += sol.nfev
        if dense:
            pieces.append((min(lo, hi), max(lo, hi), sol.sol))
        y = sol.y[:, -1]
    if not ts:
        ts, ys = [np.array([segments[0][0]])], [y[:, None]]
    pieces.sort(key=lambda p: p[0])
    return SegmentedSolution(
        t=np.concatenate(ts), y=np.concatenate(ys, axis=1), steps=steps, nfev=nfev, pieces=pieces
    )


def solve_x_ode(
    potential: PotentialService,
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    x_start: float,
    x_end: float,
    rtol: float,
    atol: float,
    method: str = "DOP853",
    substeps: int = 8,
    breakpoints: Sequence[float] = (),
    dense: bool = False,
) -> SegmentedSolution:
    """solve_on_segments over the spike segmentation of [x_start, x_end]."""
    segments = split_segments(potential.segments(x_start, x_end), breakpoints)
    logger.debug(f"Spike-aware solve on [{x_start:g}, {x_end:g}] with {len(segments)} segments")
    return solve_on_segments(rhs, y0, segments, rtol, atol, method=method, substeps=substeps, dense=dense)
