"""
Domain types shared by the verification services.

Reports are pydantic models so they serialise straight to the JSON artifacts
and HTTP responses; bulk numerical samples (trajectories, ODE solutions) live
in dataclasses next to the services that produce them.
"""
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator


class SpacetimePoint(BaseModel):
    """Point (eta, z, x, y) of the global chart on R^4."""

    eta: float = 0.0
    z: float = 0.0
    x: float = 0.0
    y: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.eta, self.z, self.x, self.y], dtype=float)

    @classmethod
    def from_array(cls, a) -> "SpacetimePoint":
        return cls(eta=float(a[0]), z=float(a[1]), x=float(a[2]), y=float(a[3]))


class TangentVector(BaseModel):
    """Components of a vector in the coordinate basis."""

    X_eta: float = 0.0
    X_z: float = 0.0
    X_x: float = 0.0
    X_y: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.X_eta, self.X_z, self.X_x, self.X_y], dtype=float)

    @classmethod
    def from_array(cls, a) -> "TangentVector":
        return cls(X_eta=float(a[0]), X_z=float(a[1]), X_x=float(a[2]), X_y=float(a[3]))

    def __neg__(self) -> "TangentVector":
        return TangentVector.from_array(-self.as_array())


class Covector(BaseModel):
    """Momentum (p_eta, p_z, p_x, p_y)."""

    p_eta: float = 0.0
    p_z: float = 0.0
    p_x: float = 0.0
    p_y: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.p_eta, self.p_z, self.p_x, self.p_y], dtype=float)

    @classmethod
    def from_array(cls, a) -> "Covector":
        return cls(p_eta=float(a[0]), p_z=float(a[1]), p_x=float(a[2]), p_y=float(a[3]))


class PhasePoint(BaseModel):
    """Point of the cotangent bundle plus the affine parameter."""

    point: SpacetimePoint = Field(default_factory=SpacetimePoint)
    momentum: Covector = Field(default_factory=Covector)
    lam: float = 0.0

    def to_state(self) -> np.ndarray:
        """State vector [eta, z, x, y, p_eta, p_z, p_x, p_y]."""
        return np.concatenate([self.point.as_array(), self.momentum.as_array()])

    @classmethod
    def from_state(cls, state, lam: float = 0.0) -> "PhasePoint":
        return cls(
            point=SpacetimePoint.from_array(state[:4]),
            momentum=Covector.from_array(state[4:8]),
            lam=float(lam),
        )


class CausalClass(BaseModel):
    kind: Literal["timelike", "null", "spacelike", "zero"]
    orientation: Literal["future", "past", "n/a"]

    @property
    def is_causal_future(self) -> bool:
        return self.kind in ("timelike", "null") and self.orientation == "future"


class ConeCheck(BaseModel):
    """Slacks of the four cone inequalities; passed iff all hold."""

    n: int
    slacks: Tuple[float, float, float, float]
    passed: bool


class CausalOrderReport(BaseModel):
    passed: bool
    reason: str = ""
    samples: int = 0


class DiamondBound(BaseModel):
    """
    Coordinate box containing J+(p) ∩ J-(q).

    Attributes:
        kind: "bounded", "point" (p = q) or "empty"
        N: integer of the boundedness argument (None unless bounded)
        x_max: bound on |x| (the spike edge x_N)
        y_span: bound on |y - y0|
        z_span: bound on |z - z0|
        eta_range: closed interval of eta
    """

    kind: Literal["bounded", "point", "empty"]
    N: Optional[int] = None
    x_max: float = 0.0
    y_span: float = 0.0
    z_span: float = 0.0
    eta_range: Optional[Tuple[float, float]] = None
    origin: Optional[SpacetimePoint] = None


class SpikeSpec(BaseModel):
    """One spike sigma_n, on the positive (side=1) or mirrored (side=-1) half-line."""

    n: int = Field(..., ge=1)
    center_left: float
    width: float = Field(..., gt=0.0, lt=0.5)
    amplitude: float = Field(..., gt=0.0)
    side: Literal[1, -1] = 1
    sup_residual: float = 0.0

    @property
    def support(self) -> Tuple[float, float]:
        lo, hi = self.center_left, self.center_left + self.width
        return (lo, hi) if self.side == 1 else (-hi, -lo)


class SummabilityReport(BaseModel):
    partial_sums: List[float]
    bound: float
    verdict: Literal["pass", "fail"]


class ConservedSet(BaseModel):
    p_eta: float
    p_z: float
    p_y: float
    C: float
    H: float

    def as_dict(self) -> Dict[str, float]:
        return self.model_dump()


class ConfinementReport(BaseModel):
    """Barrier prediction of a geodesic with p_z != 0."""

    D: float
    E: float
    zdot_bound: float
    barrier_spikes: Tuple[int, int]
    level: float = Field(..., description="C / p_z^2")


class DriftReport(BaseModel):
    max_drift: Dict[str, float]
    max_abs_x: float
    lambda_reached: Tuple[float, float]
    lambda_max: float
    steps: int
    D: Optional[float] = None
    E: Optional[float] = None
    zdot_violations: int = 0
    confined: Optional[bool] = None


class ReducedParams(BaseModel):
    """Momentum triple selecting the reduced operator."""

    p_y: float
    p_z: float
    p_eta: float

    @property
    def constant(self) -> float:
        """2 p_eta p_z + p_y^2: the constant part of the reduced potential."""
        return 2.0 * self.p_eta * self.p_z + self.p_y ** 2

    def key(self) -> Tuple[float, float, float]:
        return (self.p_y, self.p_z, self.p_eta)


class L1Report(BaseModel):
    p_z: float
    ladder: List[float]
    integral1: List[float]
    integral3: List[float]
    constant_part: List[float]
    doubling_deltas: Dict[str, List[float]]
    spike_partial_sums: Dict[int, float]
    verdict: Literal["pass", "fail"]


class WeylReport(BaseModel):
    params: ReducedParams
    lambda_im: float
    ladder: List[float]
    norm_ladders: Dict[str, List[float]]
    tail_integrals: Dict[str, List[float]]
    disk_radii: List[float]
    disk_centers: List[Tuple[float, float]]
    classification: Literal["LimitPoint", "LimitCircle", "Inconclusive"]
    classification_minus: Literal["LimitPoint", "LimitCircle", "Inconclusive"]
    deficiency: Optional[Tuple[int, int]] = None
    r_inf: float = 0.0
    crosscheck_deviation: Optional[float] = None
    direct_deviation: Optional[float] = None


class GridPoint(BaseModel):
    p_y: float
    p_z: float
    p_eta: float
    norm: float
    tail_bound: float
    status: Literal["converged", "inconclusive", "failed"]
    message: str = ""

    def key(self) -> Tuple[float, float, float]:
        return (self.p_y, self.p_z, self.p_eta)


class NormGrid(BaseModel):
    ranges: Tuple[Tuple[float, float], Tuple[float, float], Tuple[float, float]]
    counts: Tuple[int, int, int]
    L: float
    points: List[GridPoint] = Field(default_factory=list)

    @field_validator("points")
    @classmethod
    def sort_points(cls, v: List[GridPoint]) -> List[GridPoint]:
        return sorted(v, key=lambda p: p.key())

    def values(self) -> np.ndarray:
        return np.array([p.norm for p in self.points if p.status == "converged"], dtype=float)


class ThresholdReport(BaseModel):
    M: float
    target_fraction: float
    fraction_below: float
    min_norm: float
    max_norm: float
    median_norm: float
    admissible: bool


class CheckResult(BaseModel):
    """Outcome of one acceptance criterion."""

    name: str
    passed: bool
    metrics: Dict[str, float] = Field(default_factory=dict)
    failures: List[str] = Field(default_factory=list)
    artifacts: List[str] = Field(default_factory=list)


class VerifyReport(BaseModel):
    passed: bool
    checks: List[CheckResult]
    failures: List[str] = Field(default_factory=list)
    artifact_sha256: Dict[str, str] = Field(default_factory=dict)
