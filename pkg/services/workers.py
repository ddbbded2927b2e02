"""
Process-pool map for the embarrassingly parallel sweeps.

Workers rebuild their services from the config JSON once (pool initializer)
and then only read them; the calling process keeps its own instance for the
sequential path.
"""
import logging
from multiprocessing import Pool
from typing import Any, Callable, List, Optional, Sequence, Tuple

from config import Settings

logger = logging.getLogger(__name__)

_STATE: Any = None


def _init(config_json: str, builder: Callable[[Settings], Any]) -> None:
    global _STATE
    _STATE = builder(Settings.model_validate_json(config_json))


def _call(job: Tuple[Callable[[Any, Any], Any], Any]) -> Any:
    fn, task = job
    return fn(_STATE, task)


def parallel_map(
    fn: Callable[[Any, Any], Any],
    tasks: Sequence[Any],
    state: Any,
    threads: int = 1,
    config_json: Optional[str] = None,
    builder: Optional[Callable[[Settings], Any]] = None,
) -> List[Any]:
    """
    [fn(state, t) for t in tasks], on `threads` processes when threads > 1.

    fn and builder must be module-level functions. Results come back in
    completion order; callers sort them.
    """
    if threads > 1 and len(tasks) > 1:
        if config_json is None or builder is None:
            raise ValueError("parallel sweeps need the config and a builder to set up workers")
        logger.info(f"Sweeping {len(tasks)} tasks on {threads} processes")
        with Pool(processes=threads, initializer=_init, initargs=(config_json, builder)) as pool:
            return list(pool.imap_unordered(_call, [(fn, t) for t in tasks]))
    results = []
    for k, task in enumerate(tasks, start=1):
        results.append(fn(state, task))
        if k % 50 == 0:
            logger.info(f"{k}/{len(tasks)} tasks done")
    return results
