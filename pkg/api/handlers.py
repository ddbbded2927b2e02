import logging
import threading
from functools import lru_cache

from fastapi import HTTPException, status

from config import Settings, settings
from models.domain import PhasePoint, ReducedParams, SpacetimePoint, TangentVector
from services.container import ServiceContainer, build_container
from services.errors import VerificationError

logger = logging.getLogger(__name__)

# the services cache spikes and swap tolerances in place
_lock = threading.Lock()
_settings: Settings = settings


def configure(cfg: Settings) -> None:
    """Serve cfg from now on; the next request builds a fresh container."""
    global _settings
    _settings = cfg
    _cached_container.cache_clear()


@lru_cache(maxsize=1)
def _cached_container() -> ServiceContainer:
    return build_container(_settings)


def get_container() -> ServiceContainer:
    return _cached_container()


def _fail(operation: str, e: Exception) -> HTTPException:
    if isinstance(e, ValueError):
        # PreconditionViolation, ZeroPz and plain argument errors
        logger.warning(f"⚠ {operation} rejected: {e}")
        return HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e))
    logger.error(f"✗ {operation} failed: {e}")
    return HTTPException(
        status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
        detail=f"{type(e).__name__}: {e}",
    )


def spikes_handler(n_max: int) -> dict:
    c = get_container()
    try:
        with _lock:
            c.potential.ensure_spikes(n_max)
            spikes = [c.potential.spike(n) for n in range(1, n_max + 1)]
            summability = c.potential.check_summability(max(n_max, c.settings.acceptance.summability_terms))
    except (VerificationError, ValueError) as e:
        raise _fail("spike table", e) from e
    return {"spikes": spikes, "summability": summability}


def diamond_handler(request: dict):
    c = get_container()
    p = SpacetimePoint.from_array(request["p"])
    q = SpacetimePoint.from_array(request["q"])
    logger.info(f"Diamond request: p={tuple(request['p'])}, q={tuple(request['q'])}")
    try:
        return c.geometry.diamond_bounds(p, q)
    except (VerificationError, ValueError) as e:
        raise _fail("diamond", e) from e


def barrier_handler(request: dict):
    c = get_container()
    try:
        with _lock:
            return c.geodesic.predict_barrier(PhasePoint.from_state(request["state"]))
    except (VerificationError, ValueError) as e:
        raise _fail("barrier prediction", e) from e


def geodesic_handler(request: dict) -> dict:
    c = get_container()
    s0 = PhasePoint.from_state(request["state"])
    try:
        with _lock:
            _, drift = c.geodesic.integrate(s0, lambda_max=request["lambda_max"])
            barrier = c.geodesic.predict_barrier(s0) if s0.momentum.p_z != 0.0 else None
    except (VerificationError, ValueError) as e:
        raise _fail("geodesic", e) from e
    return {"drift": drift, "barrier": barrier}


def weyl_handler(request: dict):
    c = get_container()
    rp = ReducedParams(p_y=request["p_y"], p_z=request["p_z"], p_eta=request["p_eta"])
    logger.info(f"Weyl request: {rp.key()}, lambda = {request['lambda_im']}i")
    try:
        with _lock:
            return c.weyl.classify_endpoint(rp, complex(0.0, request["lambda_im"]), request.get("L_max"))
    except (VerificationError, ValueError) as e:
        raise _fail("classification", e) from e


def cone_handler(request: dict) -> dict:
    c = get_container()
    p = SpacetimePoint.from_array(request["point"])
    X = TangentVector.from_array(request["vector"])
    try:
        with _lock:
            causal_class = c.geometry.classify_vector(p, X)
            check = c.geometry.cone_inequalities(p, X, request["n"])
    except (VerificationError, ValueError) as e:
        raise _fail("cone check", e) from e
    return {"causal_class": causal_class, "check": check}
