"""
The norm function (p_y, p_z, p_eta) -> ||psi||_[-L, L] over a momentum box,
its sublevel-set threshold M, and the grid artifacts.
"""
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import Settings
from models.domain import GridPoint, NormGrid, ReducedParams, ThresholdReport
from services.artifacts import read_csv, write_csv, write_json
from services.errors import EmptyGrid, VerificationError
from services.potential_service import PotentialService
from services.reduced_lg_service import ReducedLGService
from services.weyl_service import WeylService
from services.workers import parallel_map

logger = logging.getLogger(__name__)

GRID_COLUMNS = ["p_y", "p_z", "p_eta", "norm", "tail_bound", "status"]

Triple = Tuple[float, float, float]


def build_weyl(cfg: Settings) -> WeylService:
    potential = PotentialService.from_settings(cfg)
    potential.prepare(cfg.normmap.L + 1.0)
    return WeylService.from_settings(ReducedLGService.from_settings(potential, cfg), cfg)


def _grid_task(weyl: WeylService, task: Tuple[Triple, float, Optional[float]]) -> GridPoint:
    key, L, tol = task
    return evaluate_point(weyl, key, L, tol)


def evaluate_point(weyl: WeylService, key: Triple, L: float, tol: Optional[float] = None) -> GridPoint:
    """||psi|| at one grid point; solver failures become a 'failed' status."""
    p_y, p_z, p_eta = key
    rp = ReducedParams(p_y=p_y, p_z=p_z, p_eta=p_eta)
    try:
        psi = weyl.deficiency_psi(rp, L=L, tol=tol)
    except VerificationError as e:
        logger.warning(f"⚠ psi at {key} failed: {e}")
        return GridPoint(p_y=p_y, p_z=p_z, p_eta=p_eta, norm=math.nan, tail_bound=math.nan,
                         status="failed", message=str(e))
    finite = math.isfinite(psi.norm) and psi.norm > 0.0
    converged = finite and psi.tail_bound <= weyl.ladder_tol * psi.norm
    return GridPoint(
        p_y=p_y,
        p_z=p_z,
        p_eta=p_eta,
        norm=psi.norm,
        tail_bound=psi.tail_bound,
        status="converged" if converged else "inconclusive",
    )


def grid_axes(ranges: Sequence[Tuple[float, float]], counts: Sequence[int]) -> List[np.ndarray]:
    return [np.linspace(lo, hi, n) for (lo, hi), n in zip(ranges, counts)]


class NormMapService:
    def __init__(self, weyl: WeylService, threads: int = 1, config_json: Optional[str] = None):
        self.weyl = weyl
        self.threads = threads
        self.config_json = config_json

    @classmethod
    def from_settings(cls, weyl: WeylService, cfg) -> "NormMapService":
        return cls(weyl, threads=cfg.run.threads, config_json=cfg.model_dump_json())

    def grid_norms(
        self,
        ranges: Sequence[Tuple[float, float]],
        counts: Sequence[int],
        L: float,
        tol: Optional[float] = None,
    ) -> NormGrid:
        """
        Evaluate ||psi||_[-L, L] at every point of the box grid.

        Failures are recorded per point and never abort the sweep. Results are
        sorted by (p_y, p_z, p_eta), so the grid does not depend on the order
        in which workers finish.
        """
        if any(c < 2 for c in counts):
            raise ValueError(f"every grid axis needs at least 2 points, got {tuple(counts)}")
        if ranges[1][0] <= 0.0 <= ranges[1][1]:
            raise ValueError("the p_z range must stay away from 0")
        axes = grid_axes(ranges, counts)
        keys = [(float(a), float(b), float(c)) for a in axes[0] for b in axes[1] for c in axes[2]]
        points = self.evaluate(keys, L, tol)
        grid = NormGrid(
            ranges=tuple(tuple(float(v) for v in r) for r in ranges),
            counts=tuple(int(c) for c in counts),
            L=L,
            points=points,
        )
        bad = sum(1 for p in grid.points if p.status != "converged")
        logger.info(f"{'✓' if bad == 0 else '⚠'} Norm grid {tuple(counts)}: {len(keys) - bad} converged, {bad} not")
        return grid

    def evaluate(self, keys: Sequence[Triple], L: float, tol: Optional[float] = None) -> List[GridPoint]:
        self.weyl.reduced.potential.prepare(L + 1.0)
        tasks = [(key, L, tol) for key in keys]
        points = parallel_map(
            _grid_task, tasks, self.weyl, threads=self.threads, config_json=self.config_json, builder=build_weyl
        )
        return sorted(points, key=lambda p: p.key())


def fraction_below(grid: NormGrid, M: float) -> float:
    """Share of converged grid values strictly below M (the discrete mu(U_M))."""
    values = grid.values()
    if values.size == 0:
        raise EmptyGrid("no converged grid values")
    return float(np.count_nonzero(values < M)) / values.size


def find_threshold(grid: NormGrid, target_fraction: float = 0.5) -> ThresholdReport:
    """
    M = the target-quantile of the converged values, nudged one ulp up so that
    the strict sublevel set {||psi|| < M} holds at least that share.
    """
    if not 0.0 < target_fraction <= 1.0:
        raise ValueError(f"target_fraction must lie in (0, 1], got {target_fraction}")
    values = np.sort(grid.values())
    if values.size == 0:
        raise EmptyGrid("no converged grid values")
    k = max(0, math.ceil(target_fraction * values.size) - 1)
    M = float(np.nextafter(values[k], np.inf))
    share = fraction_below(grid, M)
    min_norm = float(values[0])
    report = ThresholdReport(
        M=M,
        target_fraction=target_fraction,
        fraction_below=share,
        min_norm=min_norm,
        max_norm=float(values[-1]),
        median_norm=float(np.median(values)),
        admissible=bool(min_norm > 0.0 and share >= target_fraction),
    )
    logger.info(f"{'✓' if report.admissible else '✗'} Threshold M={M:.10g} holds {share:.3f} of the grid")
    return report


def max_neighbor_jump(grid: NormGrid) -> float:
    """Largest relative change of ||psi|| between axis neighbours of the grid."""
    values: Dict[Triple, float] = {p.key(): p.norm for p in grid.points if p.status == "converged"}
    axes = grid_axes(grid.ranges, grid.counts)
    worst = 0.0
    for i, a in enumerate(axes[0]):
        for j, b in enumerate(axes[1]):
            for k, c in enumerate(axes[2]):
                here = values.get((float(a), float(b), float(c)))
                if here is None:
                    continue
                for di, dj, dk in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
                    ii, jj, kk = i + di, j + dj, k + dk
                    if ii >= len(axes[0]) or jj >= len(axes[1]) or kk >= len(axes[2]):
                        continue
                    there = values.get((float(axes[0][ii]), float(axes[1][jj]), float(axes[2][kk])))
                    if there is not None:
                        worst = max(worst, abs(there - here) / min(here, there))
    return worst


def export_grid(path: Path, grid: NormGrid, config_hash: str) -> Path:
    (py_lo, py_hi), (pz_lo, pz_hi), (pe_lo, pe_hi) = grid.ranges
    extra = {
        "ranges": f"{py_lo!r}:{py_hi!r};{pz_lo!r}:{pz_hi!r};{pe_lo!r}:{pe_hi!r}",
        "counts": ";".join(str(c) for c in grid.counts),
        "L": grid.L,
    }
    rows = [p.model_dump() for p in grid.points]
    return write_csv(path, GRID_COLUMNS, rows, config_hash, extra_header=extra)


def read_grid(path: Path) -> NormGrid:
    meta, rows = read_csv(path)
    try:
        ranges = tuple(tuple(float(v) for v in r.split(":")) for r in meta["ranges"].split(";"))
        counts = tuple(int(c) for c in meta["counts"].split(";"))
        L = float(meta["L"])
    except (KeyError, ValueError) as e:
        raise ValueError(f"{path} is not a norm grid file: {e}") from e
    points = [
        GridPoint(
            p_y=float(r["p_y"]),
            p_z=float(r["p_z"]),
            p_eta=float(r["p_eta"]),
            norm=float(r["norm"]),
            tail_bound=float(r["tail_bound"]),
            status=r["status"],
        )
        for r in rows
    ]
    return NormGrid(ranges=ranges, counts=counts, L=L, points=points)


def threshold_summary(grid: NormGrid, report: ThresholdReport) -> Dict[str, object]:
    statuses: Dict[str, int] = {}
    for p in grid.points:
        statuses[p.status] = statuses.get(p.status, 0) + 1
    return {
        "counts": list(grid.counts),
        "L": grid.L,
        "statuses": statuses,
        "threshold": report.model_dump(),
        "max_neighbor_jump": max_neighbor_jump(grid),
    }


def export_summary(path: Path, grid: NormGrid, report: ThresholdReport, config_hash: str) -> Path:
    return write_json(path, threshold_summary(grid, report), config_hash)
