import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad

from models.domain import ReducedParams, WeylReport
from services.artifacts import write_csv
from services.errors import PreconditionViolation, QuadratureFailure, SupportViolation, ZeroPz
from services.potential_service import bump
from services.reduced_lg_service import DirectSolution, ReducedLGService

logger = logging.getLogger(__name__)

CONVERGENT_RATIO = 0.75
DIVERGENT_RATIO = 2.0
SHRINK_RATIO = 0.5

WEYL_COLUMNS = [
    "p_y",
    "p_z",
    "p_eta",
    "lambda_im",
    "classification",
    "n_plus",
    "n_minus",
    "r_inf",
    "psi_norm",
    "tail_bound",
]


@dataclass
class Ladder:
    """Cumulative int_0^L |u|^2 at each rung, with (u, u') there."""

    rungs: List[float]
    norms: List[float]
    values: List[Tuple[complex, complex]]
    remainder: float = 0.0
    error_bar: float = 0.0

    @property
    def increments(self) -> List[float]:
        return [self.norms[0]] + [self.norms[k] - self.norms[k - 1] for k in range(1, len(self.norms))]

    def converges(self, tol: float) -> bool:
        inc = self.increments[1:]
        if len(inc) < 2 or self.norms[-1] <= 0.0:
            return False
        ratios = [inc[k + 1] / inc[k] for k in range(len(inc) - 1) if inc[k] > 0]
        return bool(ratios) and ratios[-1] <= CONVERGENT_RATIO and inc[-1] / self.norms[-1] < tol

    def diverges(self) -> bool:
        inc = self.increments[1:]
        if len(inc) < 2:
            return False
        return all(inc[k] > 0 and inc[k + 1] / inc[k] >= DIVERGENT_RATIO for k in range(len(inc) - 1))


@dataclass
class BumpFunction:
    """phi(x) = amplitude * b((x - lo) / (hi - lo)) on [lo, hi]."""

    lo: float
    hi: float
    amplitude: float = 1.0

    def value(self, x):
        return self.amplitude * bump((x - self.lo) / (self.hi - self.lo))

    def second(self, x):
        w = self.hi - self.lo
        return self.amplitude * bump((x - self.lo) / w, 2) / (w * w)


@dataclass
class DeficiencySolution:
    """
    The even solution of psi'' = (W + i) psi with psi(0) = 1, psi'(0) = 0.

    Dense samples cover [-direct_reach, direct_reach]; the averaged
    continuation carries psi from there out to +-reach, the last rung. norms
    are ||psi||_[-L, L] for each L of the ladder, tail_bound bounds what lies
    beyond the last rung.
    """

    params: ReducedParams
    ladder: List[float]
    norm_ladder: List[float]
    tail_bound: float
    reach: float
    direct_reach: float
    positive: DirectSolution
    negative: Optional[DirectSolution] = None
    reduced: Optional[ReducedLGService] = field(default=None, repr=False)
    lam: complex = -1j

    @property
    def norm(self) -> float:
        return self.norm_ladder[-1]

    def _near(self, xs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        if self.negative is not None:
            out_u = np.empty(xs.shape, dtype=complex)
            out_d = np.empty(xs.shape, dtype=complex)
            pos = xs >= 0
            if np.any(pos):
                out_u[pos], out_d[pos] = self.positive.u(xs[pos]), self.positive.du(xs[pos])
            if np.any(~pos):
                out_u[~pos], out_d[~pos] = self.negative.u(xs[~pos]), self.negative.du(xs[~pos])
            return out_u, out_d
        ax = np.abs(xs)
        return self.positive.u(ax), np.sign(xs) * self.positive.du(ax)

    def _far(self, ax: np.ndarray, side: float) -> Tuple[np.ndarray, np.ndarray]:
        # v(x) = psi(side * x) solves the same equation (W is even)
        R = self.direct_reach
        source = self.negative if side < 0 and self.negative is not None else self.positive
        edge = side * R if source is self.negative else R
        u0, du0 = complex(source.u(edge)), complex(source.du(edge))
        if source is self.negative:
            du0 = -du0
        u, du = self.reduced.lg_continue(self.params, self.lam, R, u0, du0, ax)
        return u, side * du

    def evaluate(self, x) -> Tuple[np.ndarray, np.ndarray]:
        xs = np.asarray(x, dtype=float)
        if np.any(np.abs(xs) > self.reach * (1.0 + 1e-12)):
            raise ValueError(f"psi is sampled on [-{self.reach:g}, {self.reach:g}] only")
        near = np.abs(xs) <= self.direct_reach
        if np.all(near):
            return self._near(xs)
        if self.reduced is None:
            raise ValueError(f"psi has no continuation beyond +-{self.direct_reach:g}")
        flat = xs.reshape(-1)
        out_u = np.empty(flat.shape, dtype=complex)
        out_d = np.empty(flat.shape, dtype=complex)
        inside = near.reshape(-1)
        if np.any(inside):
            out_u[inside], out_d[inside] = self._near(flat[inside])
        for side in (1.0, -1.0):
            sel = ~inside & (side * flat > 0)
            if np.any(sel):
                out_u[sel], out_d[sel] = self._far(np.abs(flat[sel]), side)
        return out_u.reshape(xs.shape), out_d.reshape(xs.shape)


class WeylService:
    """Weyl alternative at +-infinity, deficiency indices and the deficiency solution."""

    def __init__(
        self,
        reduced: ReducedLGService,
        ladder_start: float = 5.0,
        L_max: float = 160.0,
        ladder_tol: float = 1e-2,
        control_reach: float = 32.0,
        crosscheck_reach: float = 20.0,
        exploit_symmetry: bool = True,
        psi_ladder: Sequence[float] = (15.0, 30.0, 60.0, 120.0),
    ):
        self.reduced = reduced
        self.ladder_start = ladder_start
        self.L_max = L_max
        self.ladder_tol = ladder_tol
        self.control_reach = control_reach
        self.crosscheck_reach = crosscheck_reach
        self.exploit_symmetry = exploit_symmetry
        self.psi_ladder = sorted(psi_ladder)

    @classmethod
    def from_settings(cls, reduced: ReducedLGService, cfg) -> "WeylService":
        w = cfg.weyl
        return cls(
            reduced,
            ladder_start=w.ladder_start,
            L_max=w.L_max,
            ladder_tol=w.ladder_tol,
            control_reach=w.control_reach,
            crosscheck_reach=w.crosscheck_reach,
            exploit_symmetry=w.exploit_symmetry,
            psi_ladder=w.psi_ladder,
        )

    def rungs(self, cap: float) -> List[float]:
        out = []
        L = self.ladder_start
        while L <= cap * (1.0 + 1e-12):
            out.append(L)
            L *= 2.0
        return out

    # -- ladders --------------------------------------------------------------

    def _direct_ladder(
        self, rp: ReducedParams, lam: complex, ic: Tuple[complex, complex], rungs: Sequence[float], side: float
    ) -> Ladder:
        end = side * rungs[-1]
        sol = self.reduced.direct_solve(rp, lam, (0.0, end), ic, breakpoints=[side * r for r in rungs])
        xs = np.array([side * r for r in rungs])
        u, du, n = sol.state(xs)
        # reflect so that values read as data of the mirrored solution on x > 0
        values = [(complex(u[k]), complex(side * du[k])) for k in range(len(rungs))]
        return Ladder(rungs=list(rungs), norms=[float(v) for v in n], values=values)

    def ladders(
        self,
        rp: ReducedParams,
        lam: complex,
        ics: Sequence[Tuple[complex, complex]],
        rungs: Sequence[float],
        side: float = 1.0,
    ) -> List[Ladder]:
        """
        Norm ladders of the solutions with (u, u')(0) = ic toward side * infinity.

        One Liouville-Green solve of the transfer matrix carries every
        solution and its |u|^2 integral up to the direct reach; the averaged
        continuation takes each one on from there. p_z = 0 has no frame and is
        integrated directly. With exploit_symmetry the -infinity side is the
        +infinity side of the reflected data (u(0), -u'(0)).
        """
        rungs = sorted(rungs)
        if side < 0 and self.exploit_symmetry:
            return self.ladders(rp, lam, [(u0, -du0) for u0, du0 in ics], rungs, side=1.0)
        if rp.p_z == 0.0:
            return [self._direct_ladder(rp, lam, ic, rungs, side) for ic in ics]
        reach = min(self.reduced.direct_reach, rungs[-1])
        near = [r for r in rungs if r <= reach]
        far = [r for r in rungs if r > reach]
        stops = near + ([reach] if not near or near[-1] < reach else [])
        sol = self.reduced.lg_solve(rp, lam, side * reach, breakpoints=[side * r for r in stops], norm_ics=ics)
        xs = side * np.array(stops)
        out = []
        for k, ic in enumerate(ics):
            u, du = sol.solution_for_ic(xs, *ic)
            norms = [float(v) for v in sol.norm_squared(xs, k)]
            values = [(complex(u[j]), complex(side * du[j])) for j in range(len(stops))]
            ladder = Ladder(rungs=rungs, norms=norms[: len(near)], values=values[: len(near)])
            if far:
                tail = self.reduced.lg_tail(rp, lam, reach, values[-1][0], values[-1][1], far)
                ladder.norms += [norms[-1] + v for v in tail.norms]
                ladder.values += tail.values
                ladder.remainder, ladder.error_bar = tail.remainder, tail.error_bar
            out.append(ladder)
        return out

    def ladder(
        self,
        rp: ReducedParams,
        lam: complex,
        ic: Tuple[complex, complex],
        rungs: Sequence[float],
        side: float = 1.0,
    ) -> Ladder:
        return self.ladders(rp, lam, [ic], rungs, side)[0]

    def direct_crosscheck(
        self,
        rp: ReducedParams,
        lam: complex,
        ics: Sequence[Tuple[complex, complex]],
        ladders: Sequence[Ladder],
    ) -> Optional[float]:
        """
        Largest relative gap between a ladder norm and a direct solve at the
        last rung in (direct_reach, crosscheck_reach]; None without such a rung.
        """
        rungs = ladders[0].rungs
        candidates = [k for k, r in enumerate(rungs) if self.reduced.direct_reach < r <= self.crosscheck_reach]
        if not candidates:
            return None
        k = candidates[-1]
        worst = 0.0
        for ic, ladder in zip(ics, ladders):
            norm = self.reduced.direct_solve(rp, lam, (0.0, rungs[k]), ic, dense=False).end[3]
            worst = max(worst, abs(ladder.norms[k] - norm) / norm)
        logger.debug(f"Direct cross-check at L={rungs[k]:g}: {worst:.3e}")
        return worst

    # -- Weyl disk --------------------------------------------------------------

    @staticmethod
    def weyl_disk(
        theta: Tuple[complex, complex], phi: Tuple[complex, complex], phi_norm_sq: float, lam: complex
    ) -> Tuple[complex, float, float]:
        """
        Center of the Weyl circle at a cutoff, from the images of three real
        boundary conditions, its radius 1/(2|Im lambda| ||phi||^2), and the
        relative mismatch between that radius and the circumradius.
        """
        ms = []
        for beta in (0.0, math.pi / 3.0, 2.0 * math.pi / 3.0):
            cb, sb = math.cos(beta), math.sin(beta)
            ms.append(-(cb * theta[0] + sb * theta[1]) / (cb * phi[0] + sb * phi[1]))
        z1, z2, z3 = ms
        num = abs(z1) ** 2 * (z2 - z3) + abs(z2) ** 2 * (z3 - z1) + abs(z3) ** 2 * (z1 - z2)
        den = z1.conjugate() * (z2 - z3) + z2.conjugate() * (z3 - z1) + z3.conjugate() * (z1 - z2)
        center = num / den if den != 0 else complex("nan")
        radius = 1.0 / (2.0 * abs(complex(lam).imag) * phi_norm_sq)
        mismatch = abs(abs(z1 - center) - radius) / radius if radius > 0 else float("nan")
        return center, radius, mismatch

    # -- classification ----------------------------------------------------------

    def weyl_norms(self, theta: Ladder, phi: Ladder, lam: complex) -> List[float]:
        """
        ||theta + m_k phi||^2 on [0, L_k] for m_k = -theta(L_k) / phi(L_k), the
        Dirichlet point of the k-th circle, read off as |Im m_k| / |Im lambda|.
        """
        out = []
        for (t, _), (p, _) in zip(theta.values, phi.values):
            out.append(abs((-t / p).imag) / abs(complex(lam).imag) if p != 0 else math.inf)
        return out

    def _settles(self, norms: Optional[Sequence[float]]) -> bool:
        if norms is None or len(norms) < 3 or not all(math.isfinite(v) and v > 0.0 for v in norms):
            return False
        steps = [abs(norms[k + 1] - norms[k]) for k in range(len(norms) - 1)]
        return steps[-1] <= steps[-2] and steps[-1] / norms[-1] < self.ladder_tol

    def _verdict(
        self,
        theta: Ladder,
        phi: Ladder,
        radii: List[float],
        r_inf: float,
        weyl_norms: Optional[Sequence[float]] = None,
    ) -> str:
        """
        LimitCircle: both basis ladders converge and the disk radius stays well
        above its last decrement.

        LimitPoint: a basis ladder diverges, the radii shrink geometrically and
        the norms of the solutions through the circles settle, so exactly one
        direction is square integrable.
        """
        if theta.converges(self.ladder_tol) and phi.converges(self.ladder_tol):
            decrement = radii[-2] - radii[-1] if len(radii) > 1 else math.inf
            if r_inf > 10.0 * abs(decrement):
                return "LimitCircle"
            return "Inconclusive"
        if not (theta.diverges() or phi.diverges()) or not self._settles(weyl_norms):
            return "Inconclusive"
        ratios = [radii[k + 1] / radii[k] for k in range(len(radii) - 1) if radii[k] > 0]
        if ratios and all(r <= SHRINK_RATIO for r in ratios[-2:]):
            return "LimitPoint"
        return "Inconclusive"

    def _endpoint(
        self, lam: complex, theta: Ladder, phi: Ladder, rungs: Sequence[float]
    ) -> Tuple[str, List[float], List[complex], List[float], float]:
        radii: List[float] = []
        centers: List[complex] = []
        mismatch: List[float] = []
        for k in range(len(rungs)):
            center, radius, miss = self.weyl_disk(theta.values[k], phi.values[k], phi.norms[k], lam)
            radii.append(radius)
            centers.append(center)
            mismatch.append(miss)
        r_inf = 1.0 / (2.0 * abs(lam.imag) * (phi.norms[-1] + phi.remainder))
        verdict = self._verdict(theta, phi, radii, r_inf, self.weyl_norms(theta, phi, lam))
        return verdict, radii, centers, mismatch, r_inf

    def classify_endpoint(
        self, rp: ReducedParams, lam: complex = 1j, L_max: Optional[float] = None
    ) -> WeylReport:
        lam = complex(lam)
        if lam.imag == 0.0:
            raise PreconditionViolation("the Weyl alternative needs a non-real spectral parameter")
        L_max = self.L_max if L_max is None else L_max
        if L_max < 4.0 * self.ladder_start:
            raise PreconditionViolation(f"L_max={L_max:g} gives fewer than three rungs")
        cap = min(L_max, self.control_reach) if rp.p_z == 0.0 else L_max
        rungs = self.rungs(cap)
        ics = [(1.0, 0.0), (0.0, 1.0)]

        sides: Dict[str, Tuple[Ladder, Ladder]] = {}
        for name, side in (("plus", 1.0), ("minus", -1.0)):
            if side < 0 and self.exploit_symmetry:
                # reflected data of theta and phi are theta and -phi: same ladders
                sides[name] = sides["plus"]
                continue
            theta, phi = self.ladders(rp, lam, ics, rungs, side)
            sides[name] = (theta, phi)

        theta, phi = sides["plus"]
        classification, radii, centers, mismatch, r_inf = self._endpoint(lam, theta, phi, rungs)

        theta_m, phi_m = sides["minus"]
        if self.exploit_symmetry:
            classification_minus = classification
        else:
            classification_minus = self._endpoint(lam, theta_m, phi_m, rungs)[0]

        # a basis solution is in L2(R) iff both of its one-sided ladders converge
        count = sum(
            1
            for k in range(2)
            if sides["plus"][k].converges(self.ladder_tol) and sides["minus"][k].converges(self.ladder_tol)
        )
        direct_deviation = self.direct_crosscheck(rp, lam, ics, [theta, phi]) if rp.p_z != 0.0 else None
        marker = "⚠" if "Inconclusive" in (classification, classification_minus) else "✓"
        logger.info(
            f"{marker} rp=({rp.p_y:g}, {rp.p_z:g}, {rp.p_eta:g}), lambda={lam}: "
            f"+inf {classification}, -inf {classification_minus}, L2 solutions {count}"
        )
        return WeylReport(
            params=rp,
            lambda_im=lam.imag,
            ladder=rungs,
            norm_ladders={
                "theta": theta.norms,
                "phi": phi.norms,
                "theta_minus": theta_m.norms,
                "phi_minus": phi_m.norms,
            },
            tail_integrals={"theta": theta.increments, "phi": phi.increments},
            disk_radii=radii,
            disk_centers=[(c.real, c.imag) for c in centers],
            classification=classification,
            classification_minus=classification_minus,
            deficiency=(count, count),
            r_inf=r_inf if classification == "LimitCircle" else 0.0,
            crosscheck_deviation=float(np.nanmax(mismatch)) if rp.p_z != 0.0 else None,
            direct_deviation=direct_deviation,
        )

    def deficiency_indices(self, rp: ReducedParams, L_max: Optional[float] = None) -> Tuple[int, int]:
        """
        (n_+, n_-): square-integrable solutions at lambda = +i and -i. With
        exploit_symmetry n_- is read off the conjugate solutions (W is real).
        """
        plus = self.classify_endpoint(rp, 1j, L_max).deficiency[0]
        if self.exploit_symmetry:
            return plus, plus
        minus = self.classify_endpoint(rp, -1j, L_max).deficiency[0]
        return plus, minus

    # -- the deficiency solution ----------------------------------------------------

    def deficiency_psi(
        self, rp: ReducedParams, L: Optional[float] = None, tol: Optional[float] = None, two_sided: bool = True
    ) -> DeficiencySolution:
        if rp.p_z == 0.0:
            raise ZeroPz("the deficiency solution is square integrable only for p_z != 0")
        L = self.psi_ladder[-1] if L is None else L
        ladder = sorted(set([r for r in self.psi_ladder if r < L] + [L]))
        lam = -1j
        ic = (1.0, 0.0)
        reach = min(self.reduced.direct_reach, L)
        saved = self.reduced.tol
        if tol is not None:
            self.reduced.tol = tol
        try:
            plus = self.ladder(rp, lam, ic, ladder, 1.0)
            positive = self.reduced.direct_solve(rp, lam, (0.0, reach), ic)
            negative = None
            if two_sided and not self.exploit_symmetry:
                minus = self.ladder(rp, lam, ic, ladder, -1.0)
                negative = self.reduced.direct_solve(rp, lam, (0.0, -reach), ic)
            else:
                minus = plus
        finally:
            self.reduced.tol = saved
        norms = [math.sqrt(a + b) for a, b in zip(plus.norms, minus.norms)]
        beyond = plus.remainder + plus.error_bar + minus.remainder + minus.error_bar
        tail_bound = math.sqrt(plus.norms[-1] + minus.norms[-1] + beyond) - norms[-1]
        logger.debug(f"psi for rp={rp.key()}: ||psi||_[-{L:g},{L:g}] = {norms[-1]:.10g} (+{tail_bound:.2e})")
        return DeficiencySolution(
            params=rp,
            ladder=ladder,
            norm_ladder=norms,
            tail_bound=tail_bound,
            reach=L,
            direct_reach=reach,
            positive=positive,
            negative=negative,
            reduced=self.reduced,
            lam=lam,
        )

    def collocation_residual(self, psi: DeficiencySolution, samples: int = 200) -> float:
        """
        max |-psi'' + W psi + i psi| over points away from spike supports,
        psi'' refitted by a 5-point central difference of the dense psi' with
        step 0.05 / sqrt(|W| + 1), each point normalised by the largest term.
        """
        reduced = self.reduced
        rp = psi.params
        xs = np.linspace(0.25, psi.direct_reach - 0.5, samples)
        edges = reduced.potential.edges(-psi.direct_reach, psi.direct_reach)
        worst = 0.0
        for x in xs:
            W = float(reduced.reduced_potential(rp, x))
            h = 0.05 / math.sqrt(abs(W) + 1.0)
            if any(x - 2.5 * h <= e <= x + 2.5 * h for e in edges) or reduced.potential.spike_part(x) != 0.0:
                continue
            stencil = x + h * np.array([-2.0, -1.0, 1.0, 2.0])
            _, d = psi.evaluate(stencil)
            second = (d[0] - 8.0 * d[1] + 8.0 * d[2] - d[3]) / (12.0 * h)
            u, _ = psi.evaluate(x)
            u = complex(u)
            terms = (abs(second), abs(W * u), abs(u))
            residual = abs(-second + W * u + 1j * u) / max(terms)
            worst = max(worst, residual)
        return worst

    def adjoint_pairing_check(self, psi: DeficiencySolution, phis: Sequence[BumpFunction]) -> float:
        """
        max over test bumps of |<psi, H phi> - i <psi, phi>| / (||psi|| (||phi|| + ||phi''||)),
        the one-dimensional content of psi lying in ker(H* + i).
        """
        reduced = self.reduced
        rp = psi.params
        worst = 0.0
        for phi in phis:
            if phi.lo <= -psi.direct_reach or phi.hi >= psi.direct_reach:
                raise SupportViolation(
                    f"test function support [{phi.lo:g}, {phi.hi:g}] leaves"
                    f" (-{psi.direct_reach:g}, {psi.direct_reach:g})"
                )
            if phi.amplitude == 0.0:
                continue

            def integrand(x: float, part: str) -> float:
                u, _ = psi.evaluate(x)
                W = float(reduced.reduced_potential(rp, x))
                value = np.conj(complex(u)) * (-phi.second(x) + (W - 1j) * phi.value(x))
                return value.real if part == "re" else value.imag

            total = 0j
            for lo, hi, _ in reduced.potential.segments(phi.lo, phi.hi):
                if hi <= lo:
                    continue
                re, err_re = quad(integrand, lo, hi, args=("re",), epsabs=1e-14, epsrel=1e-12, limit=400)
                im, err_im = quad(integrand, lo, hi, args=("im",), epsabs=1e-14, epsrel=1e-12, limit=400)
                if max(err_re, err_im) > 1e-6:
                    raise QuadratureFailure(f"pairing quadrature on [{lo:.6g}, {hi:.6g}] failed")
                total += complex(re, im)
            phi_norm = math.sqrt(quad(lambda x: phi.value(x) ** 2, phi.lo, phi.hi, limit=200)[0])
            phi2_norm = math.sqrt(quad(lambda x: phi.second(x) ** 2, phi.lo, phi.hi, limit=200)[0])
            worst = max(worst, abs(total) / (psi.norm * (phi_norm + phi2_norm)))
        return worst

    # -- symmetry witnesses --------------------------------------------------------

    def conjugation_check(self, rp: ReducedParams, X: Optional[float] = None, samples: int = 400) -> float:
        """max |u_{+i} - conj(u_{-i})| / max |u| for the real initial data (1, 0)."""
        X = self.reduced.direct_reach if X is None else X
        xs = np.linspace(0.0, X, samples)
        up = self.reduced.direct_solve(rp, 1j, (0.0, X), (1.0, 0.0)).u(xs)
        um = self.reduced.direct_solve(rp, -1j, (0.0, X), (1.0, 0.0)).u(xs)
        return float(np.max(np.abs(up - np.conj(um))) / np.max(np.abs(up)))

    def parity_check(
        self, rp: ReducedParams, lam: complex = 1j, X: Optional[float] = None, samples: int = 400
    ) -> float:
        """max relative deviation from u(-x) = u(x) (even data) and u(-x) = -u(x) (odd data)."""
        X = self.reduced.direct_reach if X is None else X
        xs = np.linspace(0.0, X, samples)
        worst = 0.0
        for ic, sign in (((1.0, 0.0), 1.0), ((0.0, 1.0), -1.0)):
            right = self.reduced.direct_solve(rp, lam, (0.0, X), ic).u(xs)
            left = self.reduced.direct_solve(rp, lam, (0.0, -X), ic).u(-xs)
            worst = max(worst, float(np.max(np.abs(left - sign * right)) / np.max(np.abs(right))))
        return worst


def weyl_row(report: WeylReport, psi: Optional[DeficiencySolution] = None) -> Dict[str, object]:
    """
    One weyl-report row. Without psi the norm column is the two-sided theta
    norm on [-L_max, L_max], which equals ||psi|| there when lambda = +-i.
    """
    rp = report.params
    n_plus, n_minus = report.deficiency or (0, 0)
    if psi is not None:
        psi_norm, tail_bound = psi.norm, psi.tail_bound
    else:
        ladders = report.norm_ladders
        psi_norm = math.sqrt(ladders["theta"][-1] + ladders["theta_minus"][-1])
        tail_bound = float("nan")
    return {
        "p_y": rp.p_y,
        "p_z": rp.p_z,
        "p_eta": rp.p_eta,
        "lambda_im": report.lambda_im,
        "classification": report.classification,
        "n_plus": n_plus,
        "n_minus": n_minus,
        "r_inf": report.r_inf,
        "psi_norm": psi_norm,
        "tail_bound": tail_bound,
    }


def export_weyl_report(path: Path, rows: Sequence[Dict[str, object]], config_hash: str) -> Path:
    return write_csv(path, WEYL_COLUMNS, rows, config_hash)
