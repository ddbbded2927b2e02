from typing import List, Optional, Tuple

from pydantic import BaseModel, Field, field_validator

from models.domain import (
    CausalClass,
    ConeCheck,
    ConfinementReport,
    DriftReport,
    SpikeSpec,
    SummabilityReport,
)


class SpikeTableResponse(BaseModel):
    """
    Response model for the spike table endpoint.

    Attributes:
        spikes: Calibrated spikes n = 1..n_max on x > 0
        summability: Certificate of the series sum_n eps_n n^2
    """

    spikes: List[SpikeSpec]
    summability: SummabilityReport


class DiamondRequest(BaseModel):
    """
    Request model for the causal diamond endpoint.

    Attributes:
        p: Past tip (eta, z, x, y)
        q: Future tip (eta, z, x, y)
    """

    p: Tuple[float, float, float, float] = Field(..., description="Past tip (eta, z, x, y)")
    q: Tuple[float, float, float, float] = Field(..., description="Future tip (eta, z, x, y)")

    model_config = {
        "json_schema_extra": {
            "examples": [{"p": [0.0, 0.0, 0.0, 0.0], "q": [1.0, 0.0, 0.0, 0.0]}]
        }
    }


class GeodesicRequest(BaseModel):
    """
    Request model for the geodesic endpoints.

    Attributes:
        state: Initial phase point [eta, z, x, y, p_eta, p_z, p_x, p_y]
        lambda_max: Affine reach of the integration (ignored by /geodesic/barrier)
    """

    state: Tuple[float, float, float, float, float, float, float, float]
    lambda_max: float = Field(20.0, gt=0.0, le=1000.0)

    model_config = {
        "json_schema_extra": {
            "examples": [{"state": [0.0, 0.0, 0.5, 0.0, 0.3, 1.0, 1.0, 0.2], "lambda_max": 20.0}]
        }
    }


class GeodesicResponse(BaseModel):
    drift: DriftReport
    barrier: Optional[ConfinementReport] = None


class WeylRequest(BaseModel):
    """
    Request model for the endpoint classification endpoint.

    Attributes:
        p_y, p_z, p_eta: Momentum triple of the reduced operator
        lambda_im: Imaginary part of the spectral parameter
        L_max: Largest ladder rung (defaults to the configured value)
    """

    p_y: float = 1.0
    p_z: float = 1.0
    p_eta: float = 1.0
    lambda_im: float = 1.0
    L_max: Optional[float] = Field(None, gt=0.0)

    @field_validator("lambda_im")
    @classmethod
    def validate_lambda(cls, v: float) -> float:
        if v == 0.0:
            raise ValueError("lambda_im must be non-zero")
        return v


class ConeRequest(BaseModel):
    """
    Request model for the cone inequality endpoint.

    Attributes:
        point: Base point (eta, z, x, y)
        vector: Tangent vector (X^eta, X^z, X^x, X^y)
        n: Spike index with |x| <= x_n
    """

    point: Tuple[float, float, float, float]
    vector: Tuple[float, float, float, float]
    n: int = Field(..., ge=1)

    model_config = {
        "json_schema_extra": {
            "examples": [{"point": [0.0, 0.0, 1.0, 0.0], "vector": [1.0, 0.0, 0.5, 0.0], "n": 1}]
        }
    }


class ConeResponse(BaseModel):
    causal_class: CausalClass
    check: ConeCheck
