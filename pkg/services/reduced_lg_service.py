"""
The Fourier-reduced operator -u'' + W(x) u with W = p_z^2 V + 2 p_eta p_z + p_y^2
and the Liouville-Green frame built on the smooth base -p_z^2 (x^4 + 1).

With S' = sqrt(-base) the functions Phi_pm = exp(+-iS)/sqrt(2S') solve
u'' = (base + V0) u exactly, so a solution u = a1 Phi_+ + a2 Phi_- of
u'' = (base + pert) u has coefficients obeying a' = K a with

    K = (-i d / (2S')) [[1, exp(-2iS)], [-exp(2iS), -1]],   d = pert - V0.

K is traceless and nilpotent up to the x-dependence of S, and its norm |d|/S'
is integrable at infinity: that is what makes every solution square
integrable when p_z != 0.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.linalg import expm
from scipy.special import gamma

from models.domain import L1Report, ReducedParams
from services.errors import QuadratureFailure, ToleranceFailure, ZeroPz
from services.potential_service import PotentialService
from services.stepping import SegmentedSolution, solve_on_segments, solve_x_ode, split_segments

logger = logging.getLogger(__name__)

Perturbation = Callable[[np.ndarray], np.ndarray]

_GL20 = np.polynomial.legendre.leggauss(20)
_GL64 = np.polynomial.legendre.leggauss(64)

# int_0^inf dt / sqrt(t^4 + 1)
G_UNIT_INF = gamma(0.25) ** 2 / (4.0 * math.sqrt(math.pi))


def _root_quartic(t):
    return np.sqrt(np.asarray(t, dtype=float) ** 4 + 1.0)


def v0_unit(x):
    """(5 base'^2 - 4 base'' base) / (16 base^2) for base = -p^2 (x^4 + 1); p drops out."""
    x = np.asarray(x, dtype=float)
    x2 = x * x
    return (2.0 * x2 ** 3 - 3.0 * x2) / (x2 * x2 + 1.0) ** 2


class CumulativeIntegral:
    """
    F(x) = int_0^x f for an even analytic integrand, extended as an odd function.

    Knots every `step` are integrated by adaptive quadrature once; the rest of
    the interval is a 20-point Gauss-Legendre rule, exact to rounding on a
    quarter unit because f is analytic within 1/sqrt(2) of the real axis.
    """

    def __init__(self, integrand: Callable, step: float = 0.25, tol: float = 1e-14):
        self.integrand = integrand
        self.step = step
        self.tol = tol
        self._knots: List[float] = [0.0]
        self._knot_array = np.array(self._knots)

    def _grow(self, reach: float) -> None:
        grown = False
        while (len(self._knots) - 1) * self.step < reach:
            k = len(self._knots) - 1
            a, b = k * self.step, (k + 1) * self.step
            value, err = quad(self.integrand, a, b, epsabs=1e-15, epsrel=self.tol)
            if err > 1e3 * max(self.tol * abs(value), 1e-15):
                raise QuadratureFailure(f"Cumulative integral knot [{a:g}, {b:g}] error {err:.3e}")
            self._knots.append(self._knots[-1] + value)
            grown = True
        if grown:
            self._knot_array = np.array(self._knots)

    def __call__(self, x):
        xs = np.asarray(x, dtype=float)
        ax = np.abs(xs)
        if ax.size:
            self._grow(float(ax.max()) + self.step)
        k = np.floor(ax / self.step).astype(int)
        a = k * self.step
        half = 0.5 * (ax - a)
        nodes, weights = _GL20
        t = (a + half)[..., None] + half[..., None] * nodes
        part = np.sum(half[..., None] * weights * self.integrand(t), axis=-1)
        out = np.sign(xs) * (self._knot_array[k] + part)
        if np.ndim(x) == 0:
            return float(out)
        return out


# shared by every frame: S, G and the V0 phase integral scale with |p_z|
_S_UNIT = CumulativeIntegral(_root_quartic)
_G_UNIT = CumulativeIntegral(lambda t: 1.0 / _root_quartic(t))
_V0G_UNIT = CumulativeIntegral(lambda t: v0_unit(t) / _root_quartic(t))


@dataclass(frozen=True)
class LGFrame:
    """S, its derivatives, V0, and the frame matrices for one p_z != 0."""

    p_z: float

    @property
    def scale(self) -> float:
        return abs(self.p_z)

    def S(self, x):
        return self.scale * _S_UNIT(x)

    def Sp(self, x):
        return self.scale * _root_quartic(x)

    def Spp(self, x):
        x = np.asarray(x, dtype=float)
        return self.scale * 2.0 * x ** 3 / _root_quartic(x)

    def V0(self, x):
        return v0_unit(x)

    def G(self, x):
        """int_0^x dt / S'(t)."""
        return _G_UNIT(x) / self.scale

    def G_inf(self) -> float:
        return G_UNIT_INF / self.scale

    def V0_phase(self, x):
        """int_0^x V0 / (2 S')."""
        return 0.5 * _V0G_UNIT(x) / self.scale

    def basis(self, x) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(Phi_+, Phi_-, Phi_+', Phi_-')."""
        S = self.S(x)
        Sp = self.Sp(x)
        Spp = self.Spp(x)
        amp = 1.0 / np.sqrt(2.0 * Sp)
        phi_p = amp * np.exp(1j * S)
        phi_m = amp * np.exp(-1j * S)
        shift = Spp / (2.0 * Sp)
        return phi_p, phi_m, (1j * Sp - shift) * phi_p, (-1j * Sp - shift) * phi_m

    def matrix(self, x) -> np.ndarray:
        """M(x) with (u', u) = M (a1, a2); det M = i."""
        phi_p, phi_m, psi_p, psi_m = self.basis(x)
        return np.array([[psi_p, psi_m], [phi_p, phi_m]])

    def coefficients(self, x, u, du) -> Tuple[complex, complex]:
        """M(x)^-1 (u', u)."""
        phi_p, phi_m, psi_p, psi_m = self.basis(x)
        a1 = -1j * (phi_m * du - psi_m * u)
        a2 = -1j * (-phi_p * du + psi_p * u)
        return a1, a2

    def reconstruct(self, x, a1, a2) -> Tuple[complex, complex]:
        phi_p, phi_m, psi_p, psi_m = self.basis(x)
        return a1 * phi_p + a2 * phi_m, a1 * psi_p + a2 * psi_m


@dataclass
class ReducedPotentialSplit:
    """base + perturbation = W - lambda; base <= -p_z^2 < 0."""

    params: ReducedParams
    lam: complex
    base: Callable
    perturbation: Callable
    constant: float


@dataclass
class LGSolution:
    """
    U(x) with U(0) = I on [0, x_max] (or [x_max, 0]). Rows 0-7 of y are Re/Im
    of U11, U12, U21, U22; row 8 + k is the path integral of |u|^2 for the
    k-th entry of norm_ics.
    """

    frame: LGFrame
    lam: complex
    x_max: float
    solution: SegmentedSolution
    norm_ics: Tuple[Tuple[complex, complex], ...] = ()

    def U(self, x) -> np.ndarray:
        y = self.solution(x)[:8]
        z = y[0::2] + 1j * y[1::2]
        return z.reshape((2, 2) + z.shape[1:])

    def phi(self, x) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(phi_+, phi_-, phi_+', phi_-'), the solutions with LG data e1 and e2 at 0."""
        U = self.U(x)
        phi_p, phi_m, psi_p, psi_m = self.frame.basis(x)
        return (
            phi_p * U[0, 0] + phi_m * U[1, 0],
            phi_p * U[0, 1] + phi_m * U[1, 1],
            psi_p * U[0, 0] + psi_m * U[1, 0],
            psi_p * U[0, 1] + psi_m * U[1, 1],
        )

    def solution_for_ic(self, x, u0: complex, du0: complex) -> Tuple[np.ndarray, np.ndarray]:
        c1, c2 = self.frame.coefficients(0.0, u0, du0)
        U = self.U(x)
        a1 = U[0, 0] * c1 + U[0, 1] * c2
        a2 = U[1, 0] * c1 + U[1, 1] * c2
        return self.frame.reconstruct(x, a1, a2)

    def wronskian(self, x) -> np.ndarray:
        p, m, dp, dm = self.phi(x)
        return p * dm - dp * m

    def norm_squared(self, x, k: int = 0):
        """int |u|^2 from 0 to x for the solution with data norm_ics[k]."""
        if not 0 <= k < len(self.norm_ics):
            raise IndexError(f"no norm was integrated for initial data {k}")
        return self.solution(x)[8 + k]


@dataclass
class DirectSolution:
    """Solution of u'' = (W - lambda) u; rows of y are Re u, Im u, Re u', Im u', int |u|^2."""

    lam: complex
    start: float
    solution: SegmentedSolution

    def state(self, x) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        y = self.solution(x)
        return y[0] + 1j * y[1], y[2] + 1j * y[3], y[4]

    def u(self, x):
        return self.state(x)[0]

    def du(self, x):
        return self.state(x)[1]

    def norm_squared(self, x):
        """int |u|^2 along the path from start to x."""
        return self.state(x)[2]

    @property
    def end(self) -> Tuple[float, complex, complex, float]:
        y = self.solution.final
        return float(self.solution.t[-1]), complex(y[0], y[1]), complex(y[2], y[3]), float(y[4])


@dataclass
class TailResult:
    """
    Averaged Liouville-Green continuation from x0.

    norms[k] is int_{x0}^{rungs[k]} |u|^2; values[k] = (u, u') at rungs[k];
    error_bar covers the dropped oscillatory cross terms; remainder estimates
    int_{rungs[-1]}^inf |u|^2 from the envelope.
    """

    x0: float
    rungs: List[float]
    norms: List[float]
    values: List[Tuple[complex, complex]]
    error_bar: float
    remainder: float
    coefficients: Tuple[complex, complex]


class ReducedLGService:
    def __init__(
        self,
        potential: PotentialService,
        tol: float = 1e-10,
        direct_reach: float = 12.0,
        spike_substeps: int = 8,
        method: str = "DOP853",
        l1_ladder: Sequence[float] = (40.0, 80.0, 160.0),
        l1_tol: float = 1e-2,
        l1_ratio: float = 0.8,
        spike_sum_terms: Sequence[int] = (10, 100, 1000, 10000),
        magnus_phase_limit: float = 0.05,
    ):
        self.potential = potential
        self.tol = tol
        self.direct_reach = direct_reach
        self.spike_substeps = spike_substeps
        self.method = method
        self.l1_ladder = list(l1_ladder)
        self.l1_tol = l1_tol
        self.l1_ratio = l1_ratio
        self.spike_sum_terms = list(spike_sum_terms)
        self.magnus_phase_limit = magnus_phase_limit

    @classmethod
    def from_settings(cls, potential: PotentialService, cfg) -> "ReducedLGService":
        r = cfg.reduced
        return cls(
            potential,
            tol=r.tol,
            direct_reach=r.direct_reach,
            spike_substeps=r.spike_substeps,
            method=r.method,
            l1_ladder=r.l1_ladder,
            l1_tol=r.l1_tol,
            l1_ratio=r.l1_ratio,
            spike_sum_terms=r.spike_sum_terms,
            magnus_phase_limit=r.magnus_phase_limit,
        )

    # -- the operator -------------------------------------------------------

    def reduced_potential(self, rp: ReducedParams, x):
        return rp.p_z ** 2 * self.potential.eval_potential(x) + rp.constant

    def split(self, rp: ReducedParams, lam: complex) -> ReducedPotentialSplit:
        if rp.p_z == 0.0:
            raise ZeroPz("the Liouville-Green split needs p_z != 0")
        p_sq = rp.p_z ** 2
        c = rp.constant + p_sq

        def base(x):
            x = np.asarray(x, dtype=float)
            return -p_sq * (x ** 4 + 1.0)

        def perturbation(x):
            return p_sq * self.potential.spike_part(x) + c - lam

        return ReducedPotentialSplit(params=rp, lam=lam, base=base, perturbation=perturbation, constant=c)

    def lg_frame(self, rp: ReducedParams, x_grid=None) -> LGFrame:
        if rp.p_z == 0.0:
            raise ZeroPz("no Liouville-Green frame for p_z = 0")
        frame = LGFrame(p_z=rp.p_z)
        if x_grid is not None:
            frame.S(np.asarray(x_grid, dtype=float))
        return frame

    def kernel(
        self, rp: ReducedParams, lam: complex, x: float, perturbation: Optional[Perturbation] = None
    ) -> Tuple[np.ndarray, float]:
        """The coupling matrix K(x) and its spectral norm |d|/S'."""
        frame = self.lg_frame(rp)
        pert = perturbation or self.split(rp, lam).perturbation
        d = complex(pert(x)) - frame.V0(x)
        S = frame.S(x)
        Sp = frame.Sp(x)
        e = np.exp(-2j * S)
        K = (-1j * d / (2.0 * Sp)) * np.array([[1.0, e], [-np.conj(e), -1.0]])
        return K, abs(d) / Sp

    # -- Liouville-Green solve ------------------------------------------------

    def lg_solve(
        self,
        rp: ReducedParams,
        lam: complex,
        x_max: float,
        tol: Optional[float] = None,
        perturbation: Optional[Perturbation] = None,
        breakpoints: Sequence[float] = (),
        norm_ics: Sequence[Tuple[complex, complex]] = (),
    ) -> LGSolution:
        """
        Integrate U' = K U from U(0) = I to x_max (either sign). For every
        (u(0), u'(0)) in norm_ics the path integral of |u|^2 is carried along,
        u being rebuilt from U and the frame at each step.
        """
        tol = self.tol if tol is None else tol
        frame = self.lg_frame(rp, [x_max])
        pert = perturbation or self.split(rp, lam).perturbation
        coefficients = [tuple(complex(c) for c in frame.coefficients(0.0, u0, du0)) for u0, du0 in norm_ics]
        sign = 1.0 if x_max >= 0 else -1.0

        def rhs(x, y):
            d = complex(pert(x)) - frame.V0(x)
            S = frame.S(x)
            Sp = frame.Sp(x)
            f = -1j * d / (2.0 * Sp)
            w = complex(math.cos(S), math.sin(S))
            e = (w * w).conjugate()
            u11, u12, u21, u22 = y[0] + 1j * y[1], y[2] + 1j * y[3], y[4] + 1j * y[5], y[6] + 1j * y[7]
            d11 = f * (u11 + e * u21)
            d12 = f * (u12 + e * u22)
            d21 = -f * (e.conjugate() * u11 + u21)
            d22 = -f * (e.conjugate() * u12 + u22)
            out = [d11.real, d11.imag, d12.real, d12.imag, d21.real, d21.imag, d22.real, d22.imag]
            if coefficients:
                amp = 1.0 / math.sqrt(2.0 * Sp)
                for c1, c2 in coefficients:
                    u = amp * ((u11 * c1 + u12 * c2) * w + (u21 * c1 + u22 * c2) * w.conjugate())
                    out.append(sign * (u.real * u.real + u.imag * u.imag))
            return np.array(out)

        y0 = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0] + [0.0] * len(coefficients))
        sol = solve_x_ode(
            self.potential,
            rhs,
            y0,
            0.0,
            x_max,
            rtol=tol,
            atol=tol * 1e-3,
            method=self.method,
            substeps=self.spike_substeps,
            breakpoints=breakpoints,
            dense=True,
        )
        logger.debug(f"LG solve to x={x_max:g}: {sol.steps} steps")
        return LGSolution(frame=frame, lam=lam, x_max=x_max, solution=sol, norm_ics=tuple(norm_ics))

    def lg_coefficients(self, frame: LGFrame, x: float, u: complex, du: complex) -> Tuple[complex, complex]:
        return frame.coefficients(x, u, du)

    # -- direct solve ---------------------------------------------------------

    def direct_solve(
        self,
        rp: ReducedParams,
        lam: complex,
        interval: Tuple[float, float],
        ic: Tuple[complex, complex],
        tol: Optional[float] = None,
        dense: bool = True,
        breakpoints: Sequence[float] = (),
    ) -> DirectSolution:
        """
        u'' = (W - lambda) u from interval[0] with (u, u') = ic, toward
        interval[1]; the fifth component is the path integral of |u|^2.
        """
        tol = self.tol if tol is None else tol
        if tol <= 0:
            raise ValueError(f"tol must be > 0, got {tol}")
        a, b = interval
        p_sq = rp.p_z ** 2
        const = rp.constant
        lr, li = complex(lam).real, complex(lam).imag
        sign = 1.0 if b >= a else -1.0
        V = self.potential.eval_potential

        def rhs(x, y):
            qr = p_sq * V(x) + const - lr
            ur, ui = y[0], y[1]
            return np.array(
                [y[2], y[3], qr * ur + li * ui, qr * ui - li * ur, sign * (ur * ur + ui * ui)]
            )

        u0, du0 = complex(ic[0]), complex(ic[1])
        y0 = np.array([u0.real, u0.imag, du0.real, du0.imag, 0.0])
        if p_sq == 0.0:
            segments = split_segments([(a, b, None)], breakpoints)
            sol = solve_on_segments(
                rhs, y0, segments, rtol=tol, atol=tol * 1e-3, method=self.method, dense=dense
            )
        else:
            sol = solve_x_ode(
                self.potential,
                rhs,
                y0,
                a,
                b,
                rtol=tol,
                atol=tol * 1e-3,
                method=self.method,
                substeps=self.spike_substeps,
                breakpoints=breakpoints,
                dense=dense,
            )
        return DirectSolution(lam=lam, start=a, solution=sol)

    # -- averaged continuation ------------------------------------------------

    def _spike_step(
        self, frame: LGFrame, rp: ReducedParams, lam: complex, lo: float, hi: float, a: np.ndarray
    ) -> Tuple[np.ndarray, float, float]:
        """
        Carry a = (a1, a2) across one spike support [lo, hi] (lo < hi).

        Narrow supports, where S changes by less than magnus_phase_limit, take
        one Magnus step exp(int K) with the phase integrals done by 64-point
        Gauss-Legendre; wider ones are integrated. Returns (a, int |u|^2, error).
        """
        pert = self.split(rp, lam).perturbation
        phase_span = float(frame.Sp(hi)) * (hi - lo)
        if phase_span <= self.magnus_phase_limit:
            nodes, weights = _GL64
            half = 0.5 * (hi - lo)
            xs = lo + half * (nodes + 1.0)
            w = half * weights
            f = (pert(xs) - frame.V0(xs)) / (2.0 * frame.Sp(xs))
            e = np.exp(-2j * frame.S(xs))
            i0 = np.sum(w * f)
            omega = -1j * np.array([[i0, np.sum(w * f * e)], [-np.sum(w * f * np.conj(e)), -i0]])
            a_new = expm(omega) @ a
            phi_p, phi_m, _, _ = frame.basis(xs)
            norm = float(np.sum(w * np.abs(a_new[0] * phi_p + a_new[1] * phi_m) ** 2))
            err = float(np.linalg.norm(omega, 2) ** 2 * phase_span)
            return a_new, norm, err

        def rhs(x, y):
            d = complex(pert(x)) - frame.V0(x)
            S = frame.S(x)
            f = -1j * d / (2.0 * frame.Sp(x))
            e = complex(math.cos(2.0 * S), -math.sin(2.0 * S))
            a1, a2 = y[0] + 1j * y[1], y[2] + 1j * y[3]
            d1 = f * (a1 + e * a2)
            d2 = -f * (e.conjugate() * a1 + a2)
            phi_p, phi_m, _, _ = frame.basis(x)
            return np.array([d1.real, d1.imag, d2.real, d2.imag, abs(a1 * phi_p + a2 * phi_m) ** 2])

        y0 = np.array([a[0].real, a[0].imag, a[1].real, a[1].imag, 0.0])
        try:
            sol = solve_ivp(
                rhs,
                (lo, hi),
                y0,
                method=self.method,
                rtol=self.tol,
                atol=self.tol * 1e-3,
                max_step=(hi - lo) / self.spike_substeps,
            )
        except (ValueError, RuntimeError) as e:
            raise ToleranceFailure(f"Spike crossing [{lo:.6g}, {hi:.6g}] failed: {e}") from e
        if sol.status == -1:
            raise ToleranceFailure(f"Spike crossing [{lo:.6g}, {hi:.6g}] failed: {sol.message}")
        y = sol.y[:, -1]
        return np.array([y[0] + 1j * y[1], y[2] + 1j * y[3]]), float(y[4]), 0.0

    def lg_tail(
        self,
        rp: ReducedParams,
        lam: complex,
        x0: float,
        u: complex,
        du: complex,
        rungs: Sequence[float],
    ) -> TailResult:
        """
        Continue the solution with data (u, u') at x0 > 0 outward to every
        rung, accumulating int |u|^2.

        Between supports the coupling is averaged: the diagonal part of K is
        integrated in closed form (phase from the real part of d, growth
        exp(-+ Im(lambda) int dx/S') of |a1|, |a2|), and the dropped cross
        term is bounded by |a1 a2| / S'^2 at both ends of the gap.
        """
        frame = self.lg_frame(rp)
        rungs = sorted(float(r) for r in rungs if r > x0)
        if not rungs:
            raise ValueError(f"need at least one rung beyond x0={x0:g}")
        a = np.array(self.lg_coefficients(frame, x0, u, du), dtype=complex)
        c_minus_lam = rp.constant + rp.p_z ** 2 - lam
        mu = complex(lam).imag
        scale = frame.scale

        def envelope(delta_g: float, rate: float) -> float:
            if rate == 0.0:
                return 0.5 * delta_g
            return -0.5 * math.expm1(-rate * delta_g) / rate

        pieces = split_segments(self.potential.segments(x0, rungs[-1]), rungs)
        norm = 0.0
        error_bar = 0.0
        coefficient_error = 0.0
        norms: List[float] = []
        values: List[Tuple[complex, complex]] = []
        next_rung = 0
        for lo, hi, spike in pieces:
            if spike is not None:
                a, piece_norm, err = self._spike_step(frame, rp, lam, lo, hi, a)
                coefficient_error += err
                norm += piece_norm
            else:
                g_lo, g_hi = _G_UNIT(lo), _G_UNIT(hi)
                delta_g = (g_hi - g_lo) / scale
                phase = 0.5 * (c_minus_lam * (g_hi - g_lo) - (_V0G_UNIT(hi) - _V0G_UNIT(lo))) / scale
                m1, m2 = abs(a[0]) ** 2, abs(a[1]) ** 2
                norm += m1 * envelope(delta_g, mu) + m2 * envelope(delta_g, -mu)
                cross = abs(a[0] * a[1])
                error_bar += cross * (1.0 / float(frame.Sp(lo)) ** 2 + 1.0 / float(frame.Sp(hi)) ** 2)
                a = np.array([a[0] * np.exp(-1j * phase), a[1] * np.exp(1j * phase)])
            while next_rung < len(rungs) and hi >= rungs[next_rung]:
                norms.append(norm)
                values.append(tuple(complex(v) for v in frame.reconstruct(hi, a[0], a[1])))
                next_rung += 1

        rest = frame.G_inf() - float(frame.G(rungs[-1]))
        remainder = abs(a[0]) ** 2 * envelope(rest, mu) + abs(a[1]) ** 2 * envelope(rest, -mu)
        error_bar += 2.0 * coefficient_error * (norm + remainder)
        return TailResult(
            x0=x0,
            rungs=rungs,
            norms=norms,
            values=values,
            error_bar=error_bar,
            remainder=remainder,
            coefficients=(complex(a[0]), complex(a[1])),
        )

    def lg_continue(
        self, rp: ReducedParams, lam: complex, x0: float, u: complex, du: complex, xs
    ) -> Tuple[np.ndarray, np.ndarray]:
        """(u, u') at every point of xs >= x0 > 0 from the data at x0, by the averaged continuation."""
        xs = np.asarray(xs, dtype=float)
        if np.any(xs < x0):
            raise ValueError(f"continuation runs outward from x0={x0:g} only")
        points = np.unique(xs)
        out_u = np.full(points.shape, complex(u))
        out_du = np.full(points.shape, complex(du))
        beyond = points > x0
        if np.any(beyond):
            tail = self.lg_tail(rp, lam, x0, u, du, points[beyond])
            out_u[beyond] = [v[0] for v in tail.values]
            out_du[beyond] = [v[1] for v in tail.values]
        idx = np.searchsorted(points, xs)
        return out_u[idx], out_du[idx]

    # -- integrability conditions --------------------------------------------

    def _segment_quad(self, f: Callable[[float], float], a: float, b: float) -> float:
        total = 0.0
        for lo, hi, _ in self.potential.segments(a, b):
            if hi <= lo:
                continue
            value, err = quad(f, lo, hi, epsabs=1e-13, epsrel=1e-10, limit=200)
            if err > 1e-6 * max(1.0, abs(value)):
                raise QuadratureFailure(f"quad on [{lo:.6g}, {hi:.6g}] error {err:.3e}")
            total += value
        return total

    def spike_sum_bound(self, rp: ReducedParams, terms: Optional[Sequence[int]] = None) -> Dict[int, float]:
        """
        Partial sums of 2 sum_n eps_n p_z^2 ((x_n + eps_n)^4 + n + 1) / (|p_z| sqrt(x_n^4 + 1)),
        the bound on int (-base)^(-1/2) |V1| contributed by the spikes.
        """
        if rp.p_z == 0.0:
            raise ZeroPz("spike_sum_bound needs p_z != 0")
        terms = sorted(terms or self.spike_sum_terms)
        n = np.arange(1, terms[-1] + 1, dtype=float)
        x_n = 0.5 * (n + 1.0) + 1.5 * np.sqrt(n + 1.0)
        eps = np.minimum(
            self.potential.width_cap, self.potential.width_scale * (n + 1.0) ** (-self.potential.width_exponent)
        )
        p = abs(rp.p_z)
        summand = 2.0 * eps * p * p * ((x_n + eps) ** 4 + n + 1.0) / (p * np.sqrt(x_n ** 4 + 1.0))
        partial = np.cumsum(summand)
        return {int(N): float(partial[N - 1]) for N in terms}

    def l1_condition_check(self, rp: ReducedParams, lam: complex = 1j) -> L1Report:
        """
        Ladder integrals of (-base)^(-1/2) and (-base)^(-1/2) |V0 - V1| on [0, X],
        V1 = p_z^2 (spike part); the constant and lambda parts, which add
        |c - lambda| int (-base)^(-1/2), are reported on their own.
        """
        if rp.p_z == 0.0:
            raise ZeroPz("the integrability conditions need p_z != 0")
        frame = self.lg_frame(rp)
        p_sq = rp.p_z ** 2
        spike_part = self.potential.spike_part

        def weight(x: float) -> float:
            return 1.0 / float(frame.Sp(x))

        def condition3(x: float) -> float:
            return abs(float(v0_unit(x)) - p_sq * spike_part(x)) / float(frame.Sp(x))

        ladder = sorted(self.l1_ladder)
        integral1: List[float] = []
        integral3: List[float] = []
        lower = 0.0
        acc1 = acc3 = 0.0
        for X in ladder:
            acc1 += self._segment_quad(weight, lower, X)
            acc3 += self._segment_quad(condition3, lower, X)
            integral1.append(acc1)
            integral3.append(acc3)
            lower = X
        c = abs(rp.constant + p_sq - lam)
        constant_part = [c * v for v in integral1]

        def deltas(values: List[float]) -> List[float]:
            return [(values[k + 1] - values[k]) / values[k + 1] for k in range(len(values) - 1)]

        def converged(values: List[float]) -> bool:
            d = deltas(values)
            if not d or d[-1] >= self.l1_tol:
                return False
            return all(d[k + 1] <= self.l1_ratio * d[k] for k in range(len(d) - 1))

        partials = self.spike_sum_bound(rp)
        keys = sorted(partials)
        increments = [partials[keys[k + 1]] - partials[keys[k]] for k in range(len(keys) - 1)]
        series_ok = all(v >= 0 for v in increments) and all(
            increments[k + 1] < increments[k] for k in range(len(increments) - 1)
        )
        verdict = "pass" if converged(integral1) and converged(integral3) and series_ok else "fail"
        logger.info(
            f"{'✓' if verdict == 'pass' else '✗'} L1 conditions for p_z={rp.p_z:g}: "
            f"int1={integral1[-1]:.6g}, int3={integral3[-1]:.6g}"
        )
        return L1Report(
            p_z=rp.p_z,
            ladder=ladder,
            integral1=integral1,
            integral3=integral3,
            constant_part=constant_part,
            doubling_deltas={"integral1": deltas(integral1), "integral3": deltas(integral3)},
            spike_partial_sums=partials,
            verdict=verdict,
        )

    def kernel_norm_integral(self, rp: ReducedParams, lam: complex, a: float, b: float) -> float:
        """int_a^b |d| / S' with spike-aware quadrature."""
        frame = self.lg_frame(rp)
        pert = self.split(rp, lam).perturbation

        def integrand(x: float) -> float:
            return abs(complex(pert(x)) - float(v0_unit(x))) / float(frame.Sp(x))

        return self._segment_quad(integrand, a, b)

    def u_cauchy_check(self, solution: LGSolution, rp: ReducedParams, X: float) -> Tuple[float, float]:
        """
        (||U(2X) - U(X)||, 2 sup_[X,2X] ||U|| int_X^2X ||K||): the Cauchy
        increment and its Gronwall bound.
        """
        if abs(solution.x_max) < 2.0 * X:
            raise ValueError(f"solution reaches {solution.x_max:g}, need {2 * X:g}")
        delta = float(np.linalg.norm(solution.U(2.0 * X) - solution.U(X), 2))
        sol = solution.solution
        inside = (sol.t >= X) & (sol.t <= 2.0 * X)
        y = sol.y[:8, inside]
        U = (y[0::2] + 1j * y[1::2]).T.reshape(-1, 2, 2)
        sup_u = float(np.max(np.linalg.norm(U, ord=2, axis=(1, 2)))) if U.size else 1.0
        bound = 2.0 * sup_u * self.kernel_norm_integral(rp, solution.lam, X, 2.0 * X)
        return delta, bound

    def v0_decay_slope(self, rp: ReducedParams, a: float = 20.0, b: float = 80.0, samples: int = 64) -> float:
        """Fitted log-log slope of (-base)^(-1/2) |V0| on [a, b]."""
        frame = self.lg_frame(rp)
        x = np.geomspace(a, b, samples)
        y = np.abs(frame.V0(x)) / frame.Sp(x)
        slope, _ = np.polyfit(np.log(x), np.log(y), 1)
        return float(slope)

    def v0_pz_exponent(self, p_zs: Sequence[float], x: float = 40.0) -> float:
        """Fitted exponent k of (-base)^(-1/2) |V0| ~ |p_z|^k at fixed x."""
        if len(p_zs) < 2:
            raise ValueError("need at least two p_z values")
        weights = []
        for p_z in p_zs:
            frame = self.lg_frame(ReducedParams(p_y=1.0, p_z=p_z, p_eta=1.0))
            weights.append(abs(float(frame.V0(x))) / float(frame.Sp(x)))
        slope, _ = np.polyfit(np.log(np.abs(p_zs)), np.log(weights), 1)
        return float(slope)
