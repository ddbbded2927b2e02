"""
Configuration management using Pydantic Settings.

Settings are read from a TOML file only (sections map to the nested models
below); environment variables and dotenv files are deliberately not sources so
that a config file plus a seed fully determines every artifact.
"""
import hashlib
from pathlib import Path
from typing import ClassVar, List, Optional, Tuple, Type

from pydantic import BaseModel, Field, field_validator, model_validator
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
    TomlConfigSettingsSource,
)

APP_NAME = "kg-completeness"
APP_VERSION = "1.0.0"


def _positive(value: float, name: str) -> float:
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    return value


class PotentialSettings(BaseModel):
    """Spike family: width rule and calibration."""

    model_config = {"extra": "forbid"}

    width_scale: float = Field(0.25, description="Prefactor c in eps_n = min(cap, c (n+1)^-k)")
    width_exponent: float = Field(3.5, description="Decay exponent k of the width rule (must exceed 3)")
    width_cap: float = Field(0.4, description="Upper cap of eps_n (must stay below 1/2)")
    calibration_tol: float = Field(1e-10, description="Root-finder tolerance on the amplitude A_n")
    max_spikes: int = Field(100_000, description="Hard cap on lazily calibrated spikes")
    prepare_reach: float = Field(170.0, description="|x| up to which the API and cli prepare the family")

    @field_validator("width_scale", "calibration_tol", "prepare_reach")
    @classmethod
    def validate_positive(cls, v: float, info) -> float:
        return _positive(v, info.field_name)

    @field_validator("width_exponent")
    @classmethod
    def validate_exponent(cls, v: float) -> float:
        if v <= 3.0:
            raise ValueError("width_exponent must exceed 3 for a finite sum eps_n n^2")
        return v

    @field_validator("width_cap")
    @classmethod
    def validate_cap(cls, v: float) -> float:
        if not 0.0 < v < 0.5:
            raise ValueError("width_cap must lie in (0, 1/2)")
        return v


class GeodesicSettings(BaseModel):
    """Hamiltonian flow integration."""

    model_config = {"extra": "forbid"}

    tol: float = Field(1e-10, description="Relative tolerance of the embedded RK pair")
    lambda_max: float = Field(1000.0, description="Affine parameter reach in both directions")
    drift_factor: float = Field(100.0, description="Allowed conserved-quantity drift as a multiple of tol")
    max_barrier_index: int = Field(60, description="Largest barrier spike index used by random tests")
    spike_substeps: int = Field(8, description="Minimum number of steps across a spike support")
    method: str = Field("DOP853", description="scipy.integrate.solve_ivp method")

    @field_validator("tol", "lambda_max", "drift_factor")
    @classmethod
    def validate_positive(cls, v: float, info) -> float:
        return _positive(v, info.field_name)


class ReducedSettings(BaseModel):
    """Reduced operator, Liouville-Green frame and direct solves."""

    model_config = {"extra": "forbid"}

    tol: float = Field(1e-10, description="Relative tolerance of the complex ODE solves")
    direct_reach: float = Field(
        12.0, description="|x| up to which solutions are integrated before the averaged LG continuation"
    )
    lg_check_reach: float = Field(40.0, description="Right end of the LG/direct agreement window")
    lg_check_start: float = Field(2.0, description="Left end of the LG/direct agreement window")
    l1_ladder: List[float] = Field([40.0, 80.0, 160.0], description="Domain ladder of the L1 checks")
    l1_tol: float = Field(1e-2, description="Relative doubling increment accepted as converged")
    l1_ratio: float = Field(0.8, description="Largest accepted ratio of successive doubling increments")
    spike_sum_terms: List[int] = Field([10, 100, 1000, 10000], description="Partial-sum indices of the spike series")
    magnus_phase_limit: float = Field(
        0.05, description="Largest phase change S' eps across a support crossed by one Magnus step"
    )
    spike_substeps: int = Field(8, description="Minimum number of steps across a spike support")
    method: str = Field("DOP853", description="scipy.integrate.solve_ivp method")

    @field_validator("tol", "direct_reach", "lg_check_reach", "l1_tol", "l1_ratio", "magnus_phase_limit")
    @classmethod
    def validate_positive(cls, v: float, info) -> float:
        return _positive(v, info.field_name)


class WeylSettings(BaseModel):
    """Endpoint classification and deficiency computations."""

    model_config = {"extra": "forbid"}

    ladder_start: float = Field(5.0, description="First rung L_0 of the doubling ladder")
    L_max: float = Field(160.0, description="Last rung of the doubling ladder")
    ladder_tol: float = Field(1e-2, description="Relative norm increment accepted as converged")
    control_reach: float = Field(32.0, description="Ladder cap for p_z = 0 (pure exponentials)")
    crosscheck_reach: float = Field(20.0, description="Largest rung re-solved directly to cross-check a ladder")
    exploit_symmetry: bool = Field(True, description="Use parity and conjugation instead of re-solving")
    psi_ladder: List[float] = Field([15.0, 30.0, 60.0, 120.0], description="Half-widths L of the psi norm ladder")

    @field_validator("ladder_start", "L_max", "ladder_tol", "control_reach", "crosscheck_reach")
    @classmethod
    def validate_positive(cls, v: float, info) -> float:
        return _positive(v, info.field_name)

    @model_validator(mode="after")
    def validate_ladder(self) -> "WeylSettings":
        if self.ladder_start * 4 > self.L_max:
            raise ValueError("ladder needs at least three rungs: ladder_start * 4 <= L_max")
        return self


class NormMapSettings(BaseModel):
    """Norm grid over the momentum cube [1,2]^3."""

    model_config = {"extra": "forbid"}

    p_y_range: Tuple[float, float] = Field((1.0, 2.0), description="Range of p_y")
    p_z_range: Tuple[float, float] = Field((1.0, 2.0), description="Range of p_z")
    p_eta_range: Tuple[float, float] = Field((1.0, 2.0), description="Range of p_eta")
    counts: Tuple[int, int, int] = Field((9, 9, 9), description="Grid points per axis")
    L: float = Field(120.0, description="Half-width of the norm window [-L, L]")
    target_fraction: float = Field(0.5, description="Quantile used to pick the threshold M")

    @field_validator("counts")
    @classmethod
    def validate_counts(cls, v: Tuple[int, int, int]) -> Tuple[int, int, int]:
        if any(c < 2 for c in v):
            raise ValueError("every grid axis needs at least 2 points")
        return v

    @field_validator("target_fraction")
    @classmethod
    def validate_fraction(cls, v: float) -> float:
        if not 0.0 < v <= 1.0:
            raise ValueError("target_fraction must lie in (0, 1]")
        return v


class AcceptanceSettings(BaseModel):
    """Sample sizes of the verify suite."""

    model_config = {"extra": "forbid"}

    spike_count: int = Field(200, description="Spikes certified for admissibility")
    summability_terms: int = Field(10_000, description="Terms of the eps_n n^2 partial sums")
    summability_limit: float = Field(0.66, description="Accepted upper limit of the partial sums")
    geodesic_count: int = Field(50, description="Random geodesics for confinement/completeness")
    barrier_ratio_range: Tuple[float, float] = Field((0.1, 20.0), description="Range of C/p_z^2")
    geodesic_drift_limit: float = Field(1e-6, description="Accepted relative drift")
    cone_samples: int = Field(100_000, description="Causal future vectors for the cone inequalities")
    cone_max_n: int = Field(50, description="Largest n used by the cone sampler")
    diamond_pairs: int = Field(100, description="Random causal geodesic pairs for diamond containment")
    diamond_lambda: float = Field(5.0, description="Affine length of the connecting geodesics")
    lg_cases: int = Field(10, description="Random rp for LG/direct agreement")
    lg_agreement: float = Field(1e-5, description="Accepted LG/direct relative deviation")
    wronskian_drift: float = Field(1e-6, description="Accepted Wronskian drift")
    control_values: int = Field(5, description="(p_y, p_eta) values of the p_z = 0 controls")
    pairing_limit: float = Field(1e-6, description="Accepted normalised adjoint pairing residual")
    collocation_limit: float = Field(1e-6, description="Accepted normalised collocation residual")
    psi_ladder_change: float = Field(0.01, description="Accepted relative psi norm change L=60 -> 120")
    cauchy_reach: float = Field(20.0, description="X of the U-matrix Cauchy check (needs 2X <= lg_check_reach)")
    cone_report_rows: int = Field(1000, description="Cone samples written to cone-report.csv")
    classification_counts: Tuple[int, int, int] = Field(
        (9, 9, 9), description="Grid of the classification sweep over the normmap box"
    )
    l1_pz_values: List[float] = Field([1.0, 1.5, 2.0], description="p_z values of the L1 condition checks")
    symmetry_limit: float = Field(1e-8, description="Accepted conjugation and parity deviation")
    direct_crosscheck_limit: float = Field(
        5e-2, description="Accepted relative gap between ladder norms and a direct solve at the check rung"
    )
    psi_params: Tuple[float, float, float] = Field((1.0, 1.0, 1.0), description="(p_y, p_z, p_eta) of the psi checks")
    max_neighbor_jump: float = Field(0.5, description="Accepted relative norm jump between grid neighbours")

    @field_validator("classification_counts")
    @classmethod
    def validate_counts(cls, v: Tuple[int, int, int]) -> Tuple[int, int, int]:
        if any(c < 2 for c in v):
            raise ValueError("every classification axis needs at least 2 points")
        return v


class RunSettings(BaseModel):
    """Process-level options (excluded from the config hash)."""

    model_config = {"extra": "forbid"}

    seed: int = Field(20240917, description="Seed of every random sample")
    threads: int = Field(1, description="Worker processes for parallel sweeps")
    out_dir: str = Field("out", description="Directory receiving artifacts")


class Settings(BaseSettings):
    """Application settings loaded from a TOML config file."""

    potential: PotentialSettings = Field(default_factory=PotentialSettings)
    geodesic: GeodesicSettings = Field(default_factory=GeodesicSettings)
    reduced: ReducedSettings = Field(default_factory=ReducedSettings)
    weyl: WeylSettings = Field(default_factory=WeylSettings)
    normmap: NormMapSettings = Field(default_factory=NormMapSettings)
    acceptance: AcceptanceSettings = Field(default_factory=AcceptanceSettings)
    run: RunSettings = Field(default_factory=RunSettings)

    model_config = SettingsConfigDict(extra="forbid")

    _toml_file: ClassVar[Optional[Path]] = None

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        sources: List[PydanticBaseSettingsSource] = [init_settings]
        if cls._toml_file is not None:
            sources.append(TomlConfigSettingsSource(settings_cls, toml_file=cls._toml_file))
        return tuple(sources)


def load_settings(path: Optional[str] = None, **overrides) -> Settings:
    """
    Build Settings from an optional TOML file plus keyword overrides.

    Raises FileNotFoundError for a missing file; TOML syntax errors and
    pydantic ValidationError propagate to the caller (cli exit code 2).
    """
    if path is not None and not Path(path).is_file():
        raise FileNotFoundError(f"Config file not found: {path}")
    Settings._toml_file = Path(path) if path is not None else None
    try:
        return Settings(**overrides)
    finally:
        Settings._toml_file = None


def config_hash(cfg: Settings) -> str:
    """
    First 16 hex digits (64 bits) of the sha256 of the canonical settings
    dump, excluding out_dir and threads.
    """
    payload = cfg.model_dump_json(exclude={"run": {"out_dir", "threads"}})
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


settings = Settings()
