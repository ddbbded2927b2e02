"""
FastAPI application entry point for the Klein-Gordon completeness witnesses.
"""

import logging
import sys
from contextlib import asynccontextmanager
from typing import Optional

import uvicorn
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware

from api.handlers import configure, get_container
from api.routes import api_router
from config import APP_NAME, APP_VERSION, Settings, config_hash, settings
from services.errors import VerificationError

logging.basicConfig(
    level=logging.INFO, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)


def verify_potential(cfg: Settings = settings) -> bool:
    """
    Calibrate the spike table up to the configured reach and certify the
    summability of sum_n eps_n n^2. Raises if either step fails.
    """
    container = get_container()
    potential = container.potential
    try:
        count = potential.prepare(cfg.potential.prepare_reach)
        logger.info(f"✓ Spike table calibrated: {count} spikes up to |x| <= {cfg.potential.prepare_reach:g}")
        report = potential.check_summability(cfg.acceptance.summability_terms)
    except VerificationError as e:
        logger.error(f"✗ Spike calibration failed: {e}")
        raise RuntimeError(f"Spike calibration failed: {e}") from e

    if report.verdict != "pass":
        error_msg = (
            f"Partial sum {max(report.partial_sums):.6g} of eps_n n^2 exceeds "
            f"the closed-form bound {report.bound:.6g}"
        )
        logger.error(f"✗ {error_msg}")
        raise RuntimeError(error_msg)
    logger.info(f"✓ Summability certified: sum eps_n n^2 <= {report.bound:.6g}")
    return True


@asynccontextmanager
async def lifespan(app: FastAPI):
    """
    Lifespan context manager for startup and shutdown events.
    """
    cfg: Settings = app.state.settings
    logger.info("=" * 60)
    logger.info(f"Starting {APP_NAME} API...")
    logger.info("=" * 60)
    logger.info("Configuration:")
    logger.info(f"  Config hash: {config_hash(cfg)}")
    logger.info(f"  Calibration tolerance: {cfg.potential.calibration_tol:g}")
    logger.info(f"  Geodesic tolerance: {cfg.geodesic.tol:g}")
    logger.info(f"  Reduced ODE tolerance: {cfg.reduced.tol:g}")
    logger.info(f"  Weyl ladder: {cfg.weyl.ladder_start:g} .. {cfg.weyl.L_max:g}")
    logger.info("=" * 60)

    try:
        logger.info("Running startup verification checks...")
        verify_potential(cfg)
        logger.info("=" * 60)
        logger.info(f"✓ {APP_NAME} API is ready to accept requests")
        logger.info("=" * 60)

    except Exception as e:
        logger.error("=" * 60)
        logger.error("✗ STARTUP FAILED - potential is not admissible")
        logger.error("=" * 60)
        logger.error(f"Error: {str(e)}")
        logger.error("=" * 60)

        sys.exit(1)

    yield

    logger.info(f"Shutting down {APP_NAME} API...")


async def root(request: Request):
    """Root endpoint for health check."""
    return {
        "message": f"{APP_NAME} API",
        "status": "running",
        "version": APP_VERSION,
        "config_hash": config_hash(request.app.state.settings),
    }


def create_app(cfg: Optional[Settings] = None) -> FastAPI:
    """The API serving cfg (the module settings by default)."""
    cfg = settings if cfg is None else cfg
    configure(cfg)
    application = FastAPI(
        title="Klein-Gordon Completeness API",
        description="Numerical witnesses for a complete spacetime with a non-self-adjoint wave operator",
        version=APP_VERSION,
        lifespan=lifespan,
    )
    application.state.settings = cfg
    application.include_router(api_router)
    application.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_credentials=True,
        allow_methods=["*"],
        allow_headers=["*"],
    )
    application.add_api_route("/", root, methods=["GET"])
    return application


app = create_app()


if __name__ == "__main__":
    uvicorn.run("main:app", host="0.0.0.0", port=8000, reload=True)
