from fastapi import APIRouter, Query
from starlette.concurrency import run_in_threadpool

from models.domain import ConfinementReport, DiamondBound, WeylReport
from models.schemas import (
    ConeRequest,
    ConeResponse,
    DiamondRequest,
    GeodesicRequest,
    GeodesicResponse,
    SpikeTableResponse,
    WeylRequest,
)

from .handlers import (
    barrier_handler,
    cone_handler,
    diamond_handler,
    geodesic_handler,
    spikes_handler,
    weyl_handler,
)

api_router = APIRouter()


@api_router.get("/potential/spikes", response_model=SpikeTableResponse)
async def spikes_endpoint(n_max: int = Query(10, ge=1, le=1000)):
    """Calibrated spike table and the summability certificate."""
    return await run_in_threadpool(spikes_handler, n_max)


@api_router.post("/diamond", response_model=DiamondBound)
async def diamond_endpoint(request: DiamondRequest):
    return await run_in_threadpool(diamond_handler, request.model_dump())


@api_router.post("/geodesic/barrier", response_model=ConfinementReport)
async def barrier_endpoint(request: GeodesicRequest):
    """Predicted confining spikes of a geodesic with p_z != 0."""
    return await run_in_threadpool(barrier_handler, request.model_dump())


@api_router.post("/geodesic", response_model=GeodesicResponse)
async def geodesic_endpoint(request: GeodesicRequest):
    return await run_in_threadpool(geodesic_handler, request.model_dump())


@api_router.post("/weyl", response_model=WeylReport)
async def weyl_endpoint(request: WeylRequest):
    """Limit point / limit circle classification of the reduced operator at +-infinity."""
    return await run_in_threadpool(weyl_handler, request.model_dump())


@api_router.post("/cone", response_model=ConeResponse)
async def cone_endpoint(request: ConeRequest):
    return await run_in_threadpool(cone_handler, request.model_dump())
