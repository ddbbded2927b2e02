import bisect
import logging
import math
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import zeta

from models.domain import SpikeSpec, SummabilityReport
from services.artifacts import write_csv
from services.errors import NonConvergence

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# (lo, hi, spike) with spike None between supports
Segment = Tuple[float, float, Optional[SpikeSpec]]


def spike_center(n: int) -> float:
    """Left edge x_n = (n+1)/2 + (3/2) sqrt(n+1) of the n-th spike support."""
    if n < 0:
        raise ValueError(f"spike index must be >= 0, got {n}")
    return 0.5 * (n + 1) + 1.5 * math.sqrt(n + 1)


def bump(t: ArrayLike, order: int = 0) -> ArrayLike:
    """
    Profile b(t) = exp(1 - 1/(4t(1-t))) on (0,1), zero outside, and its first
    two derivatives. b(1/2) = 1 and every derivative vanishes at t = 0, 1.
    """
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order}")
    t_arr = np.asarray(t, dtype=float)
    inside = (t_arr > 0.0) & (t_arr < 1.0)
    ts = np.where(inside, t_arr, 0.5)
    q = 4.0 * ts * (1.0 - ts)
    dq = 4.0 - 8.0 * ts
    with np.errstate(under="ignore", over="ignore"):
        b = np.exp(1.0 - 1.0 / q)
        if order == 0:
            out = b
        else:
            g1 = dq / q ** 2
            if order == 1:
                out = b * g1
            else:
                g2 = -8.0 / q ** 2 - 2.0 * dq ** 2 / q ** 3
                out = b * (g2 + g1 ** 2)
        # b underflows to zero long before 1/q^3 overflows
        out = np.where(inside & (b > 0.0), out, 0.0)
    if np.ndim(t) == 0:
        return float(out)
    return out


def _bump_scalar(t: float, order: int) -> float:
    if t <= 0.0 or t >= 1.0:
        return 0.0
    q = 4.0 * t * (1.0 - t)
    exponent = 1.0 - 1.0 / q
    if exponent < -700.0:
        return 0.0
    b = math.exp(exponent)
    if order == 0:
        return b
    dq = 4.0 - 8.0 * t
    g1 = dq / (q * q)
    if order == 1:
        return b * g1
    g2 = -8.0 / (q * q) - 2.0 * dq * dq / (q * q * q)
    return b * (g2 + g1 * g1)


class PotentialService:
    """
    The spike family and the potential V(x) = -x^4 + sum_n sigma_n(x) + sigma_n(-x).

    Spikes are calibrated lazily, in index order, the first time a point of
    |x| >= x_n is evaluated. Call prepare() before sharing the instance across
    worker processes: after it the table is only read.
    """

    def __init__(
        self,
        width_scale: float = 0.25,
        width_exponent: float = 3.5,
        width_cap: float = 0.4,
        calibration_tol: float = 1e-10,
        max_spikes: int = 100_000,
        spikes_enabled: bool = True,
    ):
        self.width_scale = width_scale
        self.width_exponent = width_exponent
        self.width_cap = width_cap
        self.calibration_tol = calibration_tol
        self.max_spikes = max_spikes
        self.spikes_enabled = spikes_enabled

        self._centers: List[float] = []
        self._widths: List[float] = []
        self._amps: List[float] = []
        self._residuals: List[float] = []
        self._argmax: List[float] = []

    @classmethod
    def from_settings(cls, cfg, spikes_enabled: bool = True) -> "PotentialService":
        p = cfg.potential
        return cls(
            width_scale=p.width_scale,
            width_exponent=p.width_exponent,
            width_cap=p.width_cap,
            calibration_tol=p.calibration_tol,
            max_spikes=p.max_spikes,
            spikes_enabled=spikes_enabled,
        )

    # -- width rule ---------------------------------------------------------

    def spike_width(self, n: int) -> float:
        """eps_n = min(cap, scale (n+1)^-k)."""
        if n < 1:
            raise ValueError(f"spike index must be >= 1, got {n}")
        return min(self.width_cap, self.width_scale * (n + 1.0) ** (-self.width_exponent))

    def width_bound(self) -> float:
        """Closed-form bound scale * zeta(k - 2) on sum eps_n n^2."""
        return float(self.width_scale * zeta(self.width_exponent - 2.0))

    def check_summability(self, N: int) -> SummabilityReport:
        if N < 1:
            raise ValueError(f"N must be >= 1, got {N}")
        n = np.arange(1, N + 1, dtype=float)
        eps = np.minimum(self.width_cap, self.width_scale * (n + 1.0) ** (-self.width_exponent))
        partial = np.cumsum(eps * n ** 2)
        bound = self.width_bound()
        verdict = "pass" if bool(np.all(partial <= bound)) else "fail"
        logger.info(
            f"{'✓' if verdict == 'pass' else '✗'} Summability: sum_(n<={N}) eps_n n^2 = "
            f"{partial[-1]:.6f} (bound {bound:.6f})"
        )
        return SummabilityReport(partial_sums=partial.tolist(), bound=bound, verdict=verdict)

    # -- calibration --------------------------------------------------------

    def _sup_excess(self, n: int, amplitude: float) -> Tuple[float, float]:
        """max over the support of A b((x - x_n)/eps_n) - x^4, and its maximiser."""
        x_n = spike_center(n)
        eps = self.spike_width(n)

        # b is log-concave and b'' < 0 on [1/4, 1/2]: one interior maximiser there
        def negative_excess(t: float) -> float:
            return -(amplitude * _bump_scalar(t, 0) - (x_n + eps * t) ** 4)

        res = minimize_scalar(
            negative_excess, bounds=(0.25, 0.5), method="bounded", options={"xatol": 1e-12}
        )
        if not res.success:
            raise NonConvergence(f"Maximisation of spike {n} failed: {res.message}")
        return -float(res.fun), x_n + eps * float(res.x)

    def calibrate_amplitude(self, n: int, tol: Optional[float] = None) -> float:
        """
        Amplitude A_n with sup over supp sigma_n of (sigma_n(x) - x^4) = n + 1.

        The sup is increasing in A; the bracket [n+1, n+1 + (x_n+eps_n)^4]
        changes sign, so Brent's method always applies.
        """
        tol = self.calibration_tol if tol is None else tol
        if n < 1 or tol <= 0:
            raise ValueError(f"need n >= 1 and tol > 0, got n={n}, tol={tol}")
        x_n = spike_center(n)
        eps = self.spike_width(n)
        target = n + 1.0
        guess = target + (x_n + eps / 2.0) ** 4
        logger.debug(f"Calibrating spike {n}: x_n={x_n:.6f}, eps={eps:.3e}, initial guess {guess:.6f}")

        def residual(amplitude: float) -> float:
            return self._sup_excess(n, amplitude)[0] - target

        try:
            amplitude = brentq(residual, target, target + (x_n + eps) ** 4, xtol=tol, maxiter=500)
        except (RuntimeError, ValueError) as e:
            msg = f"Amplitude calibration of spike {n} did not converge: {e}"
            logger.error(msg)
            raise NonConvergence(msg) from e
        return float(amplitude)

    def residual_floor(self, amplitude: float) -> float:
        """Smallest sup residual resolvable in double precision for this spike."""
        return max(self.calibration_tol, 64.0 * float(np.spacing(amplitude)))

    def _extend(self) -> None:
        n = len(self._centers) + 1
        if n > self.max_spikes:
            raise NonConvergence(f"Spike table exhausted at max_spikes={self.max_spikes}")
        amplitude = self.calibrate_amplitude(n)
        excess, argmax = self._sup_excess(n, amplitude)
        self._centers.append(spike_center(n))
        self._widths.append(self.spike_width(n))
        self._amps.append(amplitude)
        self._residuals.append(excess - (n + 1.0))
        self._argmax.append(argmax)

    def prepare(self, x_max: float) -> int:
        """Calibrate every spike with x_n <= x_max; returns the spike count."""
        before = len(self._centers)
        while spike_center(len(self._centers) + 1) <= x_max:
            self._extend()
        if len(self._centers) > before:
            logger.info(f"Calibrated spikes {before + 1}..{len(self._centers)} (reach |x| <= {x_max:g})")
        return len(self._centers)

    def ensure_spikes(self, count: int) -> None:
        while len(self._centers) < count:
            self._extend()

    @property
    def calibrated(self) -> int:
        return len(self._centers)

    def spike(self, n: int, side: int = 1) -> SpikeSpec:
        self.ensure_spikes(n)
        k = n - 1
        return SpikeSpec(
            n=n,
            center_left=self._centers[k],
            width=self._widths[k],
            amplitude=self._amps[k],
            side=side,
            sup_residual=self._residuals[k],
        )

    def sup_location(self, n: int) -> float:
        self.ensure_spikes(n)
        return self._argmax[n - 1]

    # -- evaluation ---------------------------------------------------------

    def _spike_scalar(self, ax: float, order: int) -> float:
        if not self.spikes_enabled:
            return 0.0
        k = bisect.bisect_right(self._centers, ax) - 1
        if k < 0:
            return 0.0
        width = self._widths[k]
        t = (ax - self._centers[k]) / width
        if t >= 1.0:
            return 0.0
        return self._amps[k] * _bump_scalar(t, order) / width ** order

    def spike_part(self, x: ArrayLike, order: int = 0) -> ArrayLike:
        """sum_n sigma_n(|x|) (or its derivatives in |x|)."""
        ax = np.abs(np.asarray(x, dtype=float))
        if ax.size:
            self.prepare(float(ax.max()))
        if np.ndim(x) == 0:
            return self._spike_scalar(float(ax), order)
        if not self.spikes_enabled or not self._centers:
            return np.zeros_like(ax)
        centers = np.asarray(self._centers)
        widths = np.asarray(self._widths)
        amps = np.asarray(self._amps)
        k = np.searchsorted(centers, ax, side="right") - 1
        valid = k >= 0
        kk = np.where(valid, k, 0)
        t = np.where(valid, (ax - centers[kk]) / widths[kk], -1.0)
        return np.where(valid, amps[kk] * bump(t, order) / widths[kk] ** order, 0.0)

    def eval_potential(self, x: ArrayLike, order: int = 0) -> ArrayLike:
        """V, V' or V'' at x; exact finite sum (at most one spike contributes)."""
        if order not in (0, 1, 2):
            raise ValueError(f"order must be 0, 1 or 2, got {order}")
        if np.ndim(x) == 0:
            xs = float(x)
            ax = abs(xs)
            if ax >= spike_center(len(self._centers) + 1):
                self.prepare(ax)
            spike = self._spike_scalar(ax, order)
            if order == 0:
                return -ax ** 4 + spike
            if order == 1:
                return math.copysign(1.0, xs) * (-4.0 * ax ** 3 + spike) if xs != 0.0 else 0.0
            return -12.0 * ax ** 2 + spike
        xa = np.asarray(x, dtype=float)
        ax = np.abs(xa)
        spike = self.spike_part(ax, order)
        if order == 0:
            return -ax ** 4 + spike
        if order == 1:
            return np.sign(xa) * (-4.0 * ax ** 3 + spike)
        return -12.0 * ax ** 2 + spike

    __call__ = eval_potential

    # -- geometry of the supports ------------------------------------------

    def active_spikes(self, a: float, b: float) -> List[SpikeSpec]:
        """Spikes (both signs of x) whose support meets [a, b], ordered by position."""
        if a > b:
            raise ValueError(f"need a <= b, got [{a}, {b}]")
        if not self.spikes_enabled:
            return []
        reach = max(abs(a), abs(b))
        self.prepare(reach)
        found: List[SpikeSpec] = []
        for k, (c, w) in enumerate(zip(self._centers, self._widths)):
            if c > reach:
                break
            if c <= b and c + w >= a:
                found.append(self.spike(k + 1, side=1))
            if -c - w <= b and -c >= a:
                found.append(self.spike(k + 1, side=-1))
        found.sort(key=lambda s: s.support[0])
        return found

    def segments(self, a: float, b: float) -> List[Segment]:
        """
        Pieces of the path a -> b split at every spike support edge, each
        tagged with the spike containing it (None between supports).
        """
        lo, hi = min(a, b), max(a, b)
        pieces: List[Segment] = []
        cursor = lo
        for spike in self.active_spikes(lo, hi):
            s_lo, s_hi = spike.support
            s_lo, s_hi = max(s_lo, lo), min(s_hi, hi)
            if s_lo > cursor:
                pieces.append((cursor, s_lo, None))
            if s_hi > s_lo:
                pieces.append((s_lo, s_hi, spike))
            cursor = max(cursor, s_hi)
        if hi > cursor or not pieces:
            pieces.append((cursor, hi, None))
        if b < a:
            pieces = [(p_hi, p_lo, s) for (p_lo, p_hi, s) in reversed(pieces)]
        return pieces

    def edges(self, a: float, b: float) -> List[float]:
        """Sorted support edges inside [a, b]."""
        out: List[float] = []
        for spike in self.active_spikes(a, b):
            out.extend(e for e in spike.support if a <= e <= b)
        return sorted(out)

    def spike_table(self) -> List[SpikeSpec]:
        return [self.spike(n) for n in range(1, len(self._centers) + 1)]

    def max_on(self, D: float) -> float:
        """sup over |x| < D of |V|: the quartic at the edge against the spike peaks."""
        self.prepare(D)
        peaks = [n + 1.0 for n, c in enumerate(self._centers, start=1) if c < D] if self.spikes_enabled else []
        return max([D ** 4] + peaks)


def admissibility_rows(potential: PotentialService, count: int) -> Sequence[dict]:
    """Per-spike admissibility data (disjointness, width, sup residual)."""
    potential.ensure_spikes(count + 1)
    rows = []
    for n in range(1, count + 1):
        s = potential.spike(n)
        nxt = potential.spike(n + 1)
        rows.append(
            {
                "n": n,
                "x_n": s.center_left,
                "eps_n": s.width,
                "A_n": s.amplitude,
                "sup_residual": s.sup_residual,
                "disjoint": s.center_left + s.width < nxt.center_left,
                "residual_ok": abs(s.sup_residual) <= potential.residual_floor(s.amplitude),
            }
        )
    return rows


SPIKE_COLUMNS = ["n", "x_n", "eps_n", "A_n", "sup_residual", "disjoint", "residual_ok"]


def export_spike_table(path: Path, rows: Sequence[dict], config_hash: str, summability: SummabilityReport) -> Path:
    extra = {"summability_bound": summability.bound, "summability_verdict": summability.verdict}
    return write_csv(path, SPIKE_COLUMNS, rows, config_hash, extra_header=extra)
