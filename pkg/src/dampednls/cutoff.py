"""Radial virial weights: the compactly flattened cutoffs ``chi_R(r) = R^2 theta(r/R)``.

Every profile is stored as exact polynomial pieces in ``s = r/R``, so all
radial derivatives (and the Laplacians built from them) are evaluated
in closed form.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.polynomial import Polynomial

INNER = 1.0
KNEE = 1.0 + 1.0 / math.sqrt(3.0)
OUTER = 2.0
VARTHETA_KNEE = 2.0 * (KNEE - (KNEE - 1.0) ** 3)


class CutoffKind(enum.Enum):
    MassCriticalTheta = "mass-critical"
    GenericTheta = "generic"


def hermite(x0: float, x1: float, left: list[float], right: list[float]) -> Polynomial:
    """Polynomial matching derivatives ``left`` at x0 and ``right`` at x1.

    Built in the shifted variable ``y = x - x1``: the conditions at x1 fix
    the low coefficients exactly, which keeps the piece well conditioned and
    makes an end value of zero come out exactly zero.
    """
    m = len(left) + len(right)
    coef = np.zeros(m)
    for j, value in enumerate(right):
        coef[j] = value / math.factorial(j)
    free = range(len(right), m)
    y0 = x0 - x1
    rows, rhs = [], []
    for i, value in enumerate(left):
        fixed = sum(coef[j] * _dpow(j, i, y0) for j in range(len(right)))
        rows.append([_dpow(j, i, y0) for j in free])
        rhs.append(value - fixed)
    coef[len(right):] = np.linalg.solve(np.array(rows), np.array(rhs))
    return Polynomial(coef, domain=[x1 - 1.0, x1], window=[-1.0, 0.0])


def _dpow(j: int, i: int, y: float) -> float:
    """i-th derivative of y**j."""
    if i > j:
        return 0.0
    return math.perm(j, i) * y ** (j - i)


def _mass_critical_pieces(completion: str) -> list[tuple[float, float, Polynomial]]:
    s = Polynomial([0.0, 1.0])
    inner = s**2
    knee = s**2 - (s - 1) ** 4 / 2
    if completion == "cubic":
        tail_vartheta = hermite(KNEE, OUTER, [VARTHETA_KNEE, 0.0], [0.0, 0.0])
    elif completion == "quintic":
        tail_vartheta = hermite(KNEE, OUTER, [VARTHETA_KNEE, 0.0, -12.0 * (KNEE - 1.0)],
                                [0.0, 0.0, 0.0])
    else:
        raise ValueError(f"unknown completion {completion!r}")
    tail = tail_vartheta.integ(lbnd=KNEE, k=knee(KNEE))
    plateau = Polynomial([tail(OUTER)])
    return [(0.0, INNER, inner), (INNER, KNEE, knee), (KNEE, OUTER, tail), (OUTER, math.inf, plateau)]


def generic_theta_middle() -> Polynomial:
    """Quintic joining ``s^2`` on [0,1] to the constant 2 on [2, inf) with C^2 contact."""
    return hermite(INNER, OUTER, [1.0, 2.0, 2.0], [2.0, 0.0, 0.0])


def _generic_pieces(middle: Polynomial | None) -> list[tuple[float, float, Polynomial]]:
    middle = generic_theta_middle() if middle is None else middle
    s = Polynomial([0.0, 1.0])
    for x, want in ((INNER, 1.0), (OUTER, 2.0)):
        if abs(middle(x) - want) > 1e-12:
            raise ValueError(f"theta must equal {want} at r={x}, got {middle(x)}")
    probe = np.linspace(INNER, OUTER, 4001)
    if middle.deriv(2)(probe).max() > 2.0 + 1e-12:
        raise ValueError("theta'' must not exceed 2")
    return [(0.0, INNER, s**2), (INNER, OUTER, middle), (OUTER, math.inf, Polynomial([2.0]))]


@dataclass(frozen=True)
class CutoffEvaluation:
    """Radial profile quantities of ``chi_R`` at the radii ``r``."""

    r: np.ndarray
    chi: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d1_over_r: np.ndarray
    laplacian: np.ndarray
    bilaplacian: np.ndarray
    chi1: np.ndarray
    chi2: np.ndarray


class _RadialWeight:
    """Shared evaluation logic for radial weights described by polynomial pieces."""

    R = 1.0
    pieces: list[tuple[float, float, Polynomial]]

    def _derivs(self, s: np.ndarray, order: int) -> list[np.ndarray]:
        out = [np.zeros_like(s) for _ in range(order + 1)]
        for lo, hi, poly in self.pieces:
            mask = (s > lo) & (s <= hi) if lo > 0 else (s >= lo) & (s <= hi)
            if not mask.any():
                continue
            p = poly
            for j in range(order + 1):
                out[j][mask] = p(s[mask])
                p = p.deriv()
        return out

    def evaluate(self, r, N: int) -> CutoffEvaluation:
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise ValueError("radius must be non-negative")
        R = self.R
        s = r / R
        th, th1, th2, th3, th4 = self._derivs(s.ravel(), 4)
        th, th1, th2, th3, th4 = (q.reshape(r.shape) for q in (th, th1, th2, th3, th4))
        chi = R**2 * th
        d1 = R * th1
        d2 = th2
        d3 = th3 / R
        d4 = th4 / R**2
        inner = s <= INNER
        with np.errstate(divide="ignore", invalid="ignore"):
            d1_over_r = np.where(inner, 2.0, d1 / np.where(inner, 1.0, r))
            safe = np.where(inner, 1.0, r)
            bilap = d4 + 2 * (N - 1) * d3 / safe + (N - 1) * (N - 3) * (d2 / safe**2 - d1 / safe**3)
        bilap = np.where(inner, 0.0, bilap)
        lap = d2 + (N - 1) * d1_over_r
        return CutoffEvaluation(
            r=r, chi=chi, d1=d1, d2=d2, d1_over_r=d1_over_r, laplacian=lap,
            bilaplacian=bilap, chi1=2.0 - d2, chi2=2.0 * N - lap,
        )


@dataclass(frozen=True)
class RadialCutoff(_RadialWeight):
    """``chi_R(r) = R^2 theta(r/R)``.

    ``MassCriticalTheta`` integrates the profile ``vartheta`` (``2r`` up to 1,
    ``2[r-(r-1)^3]`` up to the knee 1+1/sqrt(3), a decreasing Hermite
    completion to zero at 2).  ``GenericTheta`` uses any theta that is
    ``r^2`` on [0,1], 2 beyond 2 and has ``theta'' <= 2``.
    """

    R: float = 1.0
    kind: CutoffKind = CutoffKind.MassCriticalTheta
    completion: str = "cubic"
    middle: Polynomial | None = None

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError(f"cutoff radius must be positive, got {self.R}")
        self.pieces  # validate eagerly

    @cached_property
    def pieces(self) -> list[tuple[float, float, Polynomial]]:
        if self.kind is CutoffKind.MassCriticalTheta:
            return _mass_critical_pieces(self.completion)
        return _generic_pieces(self.middle)

    @property
    def breakpoints(self) -> list[float]:
        return [hi * self.R for _, hi, _ in self.pieces if math.isfinite(hi)]

    def theta(self, s):
        return self._derivs(np.atleast_1d(np.asarray(s, dtype=float)), 0)[0]

    def vartheta(self, s):
        return self._derivs(np.atleast_1d(np.asarray(s, dtype=float)), 1)[1]

    def to_dict(self) -> dict:
        return {"R": self.R, "kind": self.kind.value, "completion": self.completion}


@dataclass(frozen=True)
class QuadraticWeight(_RadialWeight):
    """The unlocalised virial weight ``chi(x) = |x|^2``."""

    R: float = math.inf

    @property
    def pieces(self):
        return [(0.0, math.inf, Polynomial([0.0, 0.0, 1.0]))]

    def evaluate(self, r, N: int) -> CutoffEvaluation:
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise ValueError("radius must be non-negative")
        two = np.full(r.shape, 2.0)
        zero = np.zeros(r.shape)
        return CutoffEvaluation(
            r=r, chi=r**2, d1=2 * r, d2=two, d1_over_r=two, laplacian=2.0 * N + zero,
            bilaplacian=zero, chi1=zero, chi2=zero.copy(),
        )


_DEFAULT = RadialCutoff(1.0)
_GENERIC = RadialCutoff(1.0, CutoffKind.GenericTheta)


def _scalar_or_array(x, template):
    return float(x[0]) if np.ndim(template) == 0 else x


def vartheta(r):
    """The mass-critical profile (cubic Hermite completion on the knee interval)."""
    if np.any(np.asarray(r) < 0):
        raise ValueError("vartheta is defined for r >= 0")
    return _scalar_or_array(_DEFAULT.vartheta(r), r)


def theta(r, kind: CutoffKind = CutoffKind.MassCriticalTheta):
    if np.any(np.asarray(r) < 0):
        raise ValueError("theta is defined for r >= 0")
    cut = _DEFAULT if kind is CutoffKind.MassCriticalTheta else _GENERIC
    return _scalar_or_array(cut.theta(r), r)


def evaluate_cutoff(cutoff: RadialCutoff, r, N: int) -> CutoffEvaluation:
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    return cutoff.evaluate(r, N)


@dataclass(frozen=True)
class PositivityReport:
    N: int
    eps: float
    C: float
    min_margin: float
    argmin: float
    violating: np.ndarray
    largest_eps: float

    @property
    def ok(self) -> bool:
        return self.min_margin >= -1e-12


def positivity_margin(cutoff: RadialCutoff, r, N: int, eps: float, C: float = 1.0) -> np.ndarray:
    """``chi_{1,R} - C eps chi_{2,R}^{N/2}`` at the radii ``r``."""
    ev = cutoff.evaluate(r, N)
    chi2 = np.clip(ev.chi2, 0.0, None)
    return ev.chi1 - C * eps * chi2 ** (N / 2)


def verify_positivity(cutoff: RadialCutoff, N: int, eps: float, samples: int = 20001,
                      C: float = 1.0) -> PositivityReport:
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    R = cutoff.R
    r = np.union1d(np.linspace(0.0, 4.0 * R, samples), cutoff.breakpoints)
    margin = positivity_margin(cutoff, r, N, eps, C)
    i = int(np.argmin(margin))
    ev = cutoff.evaluate(r, N)
    chi2 = np.clip(ev.chi2, 0.0, None) ** (N / 2)
    active = chi2 > 0
    largest = float(np.min(ev.chi1[active] / (C * chi2[active]))) if active.any() else math.inf
    return PositivityReport(
        N=N, eps=eps, C=C, min_margin=float(margin[i]), argmin=float(r[i]),
        violating=r[margin < -1e-12], largest_eps=largest,
    )


def margin_table(cutoff: RadialCutoff, N: int, eps: float, C: float = 1.0, samples: int = 81):
    """Rows ``(r, chi1, chi2, margin)`` on [0, 4R] for CSV output."""
    r = np.linspace(0.0, 4.0 * cutoff.R, samples)
    ev = cutoff.evaluate(r, N)
    margin = positivity_margin(cutoff, r, N, eps, C)
    return np.column_stack([r, ev.chi1, ev.chi2, margin])
