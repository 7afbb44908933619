"""Blow-up criteria for focusing data and the negativity times of their quadratics.

Every criterion reduces to a quadratic ``q(t) = c0 + c1 t + c2 t^2`` bounding
a virial action from above; blow-up is predicted when ``q`` becomes
negative at some ``t > 0``, and ``t_star`` is the first such time.
"""

from __future__ import annotations

import decimal
import enum
import math
from dataclasses import asdict, dataclass

import numpy as np

from .model import CriticalityClass, ProblemSpec, classify


class Branch(enum.Enum):
    NegativeEnergy = "negative-energy"
    ZeroEnergyNegativeMomentum = "zero-energy-negative-momentum"
    PositiveEnergyDiscriminant = "positive-energy-discriminant"
    NoBranch = "none"


SIGMA_THEOREMS = {
    "1.2": CriticalityClass.MassCritical,
    "1.4": CriticalityClass.MassSupercriticalEnergySubcritical,
    "1.6": CriticalityClass.EnergyCritical,
}
RADIAL_THEOREMS = ("1.3", "1.5", "1.8")


@dataclass(frozen=True)
class CriterionVerdict:
    theorem: str
    applicable: bool
    branch: Branch = Branch.NoBranch
    predicted_blowup: bool = False
    t_star: float | None = None
    delta_used: float | None = None
    boundary: bool = False
    quadratic: tuple[float, float, float] | None = None
    note: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["branch"] = self.branch.value
        return d


def quadratic(c0: float, c1: float, c2: float, t):
    return c0 + t * (c1 + c2 * t)


def negativity_time(c0: float, c1: float, c2: float) -> float | None:
    """Smallest ``t > 0`` with ``c0 + c1 t + c2 t^2 <= 0`` entering a negative region.

    Returns ``0.0`` when the quadratic is already negative (or zero and
    decreasing) at the origin, and ``None`` when it never becomes negative.
    A root past the float range comes back as ``inf``.
    """
    if c0 == 0 and c1 == 0 and c2 == 0:
        return None
    if c0 < 0:
        return 0.0
    if c0 == 0:
        if c1 < 0 or (c1 == 0 and c2 < 0):
            return 0.0
        # roots 0 and -c1/c2; negative beyond the second when c2 < 0
        return _settle(c0, c1, c2, -c1 / c2) if c1 > 0 and c2 < 0 else None
    if c2 == 0:
        return _settle(c0, c1, c2, -c0 / c1) if c1 < 0 else None
    # roots in decimal arithmetic: its exponent range makes c1^2 - 4 c0 c2 safe
    with decimal.localcontext() as ctx:
        ctx.prec = 40
        d0, d1, d2 = (decimal.Decimal(c) for c in (c0, c1, c2))
        disc = d1 * d1 - 4 * d0 * d2
        if d2 > 0 and (d1 >= 0 or disc <= 0):
            return None
        sq = disc.sqrt()
        q = -(d1 + sq.copy_sign(d1)) / 2 if d1 != 0 else -sq / 2
        roots = [float(q / d2), float(d0 / q)]
    # c0 > 0 here, so a root that underflowed to +0.0 is a positive subnormal
    positive = [r if r > 0 else _TINY for r in roots if r > 0 or math.copysign(1.0, r) > 0]
    return _settle(c0, c1, c2, min(positive)) if positive else None


_TINY = float(np.nextafter(0.0, 1.0))


def _settle(c0, c1, c2, t: float) -> float:
    # step up by ulps until the quadratic is non-positive at t
    if math.isinf(t):
        return t
    for _ in range(64):
        if quadratic(c0, c1, c2, t) <= 0:
            return t
        t = float(np.nextafter(t, math.inf))
    return t


def _branch_verdict(theorem: str, E: float, flux: float, weight: float, coeff: float,
                    c_neg: float, c_pos: float, linear: float, use_delta: bool) -> CriterionVerdict:
    """Shared branch logic.

    ``coeff`` is the discriminant constant c of ``flux + sqrt(c E weight) < 0``,
    ``linear`` the coefficient of ``flux`` in the quadratic, ``c_neg`` / ``c_pos``
    the ``t^2`` coefficients (per unit E) of the negative- and
    positive-energy quadratics.
    """
    if E < 0:
        quad = (weight, linear * flux, c_neg * E)
        return CriterionVerdict(theorem, True, Branch.NegativeEnergy, True,
                                negativity_time(*quad), quadratic=quad)
    if E == 0:
        if flux >= 0:
            return CriterionVerdict(theorem, True, note="E = 0 with non-negative momentum")
        delta = None
        quad = (weight, linear * flux, 0.0)
        if use_delta:
            # W^2 - delta J >= W^2 / 2 > 0
            delta = 0.5 * min(1.0, flux * flux / weight) if weight > 0 else 0.5
            quad = (weight, linear * flux, delta)
        return CriterionVerdict(theorem, True, Branch.ZeroEnergyNegativeMomentum, True,
                                negativity_time(*quad), delta_used=delta, quadratic=quad)
    # E > 0: flux < 0 and flux^2 > c E weight  <=>  flux + sqrt(c E weight) < 0
    excess = flux * flux - coeff * E * weight
    scale = max(flux * flux, coeff * E * weight, np.finfo(float).tiny)
    if flux >= 0 or excess <= 0:
        boundary = flux < 0 and abs(excess) <= 1e-12 * scale
        return CriterionVerdict(theorem, True, boundary=boundary,
                                note="boundary: discriminant is zero" if boundary else "")
    delta = None
    c2 = c_pos * E
    if use_delta:
        denom = coeff * E * weight
        # an underflowed denominator means the ratio is huge and delta takes its cap
        delta = min(1.0, 0.5 * (flux * flux / denom - 1.0)) if denom > 0 else 1.0
        c2 *= 1.0 + delta
    quad = (weight, linear * flux, c2)
    t_star = negativity_time(*quad)
    if t_star is None:
        return CriterionVerdict(theorem, True, boundary=True, note="boundary: no negative region")
    return CriterionVerdict(theorem, True, Branch.PositiveEnergyDiscriminant, True, t_star,
                            delta_used=delta, quadratic=quad)


def sigma_predicate(E: float, V: float, I: float) -> bool:
    """The three finite-variance conditions, second form ``V + sqrt(2EI) < 0`` for E > 0."""
    if E < 0:
        return True
    if E == 0:
        return V < 0
    return V + math.sqrt(2 * E * I) < 0


def sigma_criterion(E: float, V: float, I: float, theorem: str = "1.2",
                    spec: ProblemSpec | None = None) -> CriterionVerdict:
    """Finite-variance criterion; the three theorems share ``f(t) = I + 4Vt + 8Et^2``."""
    if I < 0:
        raise ValueError(f"I is a squared norm, got {I}")
    if theorem not in SIGMA_THEOREMS:
        raise ValueError(f"unknown finite-variance theorem {theorem!r}")
    if spec is not None:
        reason = _sigma_inapplicable(theorem, spec)
        if reason:
            return CriterionVerdict(theorem, False, note=reason)
    return _branch_verdict(theorem, E, V, I, coeff=2.0, c_neg=8.0, c_pos=8.0, linear=4.0,
                           use_delta=False)


def _sigma_inapplicable(theorem: str, spec: ProblemSpec) -> str:
    if spec.mu != -1:
        return "criteria need the focusing sign mu = -1"
    if classify(spec) is not SIGMA_THEOREMS[theorem]:
        return f"alpha={spec.alpha} is not in the range of criterion {theorem}"
    return ""


def _radial_coefficients(which: str, spec: ProblemSpec) -> tuple[float, float] | str:
    """``(c, c_neg)`` for the radial theorem, or a reason it does not apply."""
    N, alpha = spec.N, spec.alpha
    cls = classify(spec)
    if spec.mu != -1:
        return "criteria need the focusing sign mu = -1"
    if which == "1.3":
        if N < 2:
            return "criterion 1.3 needs N >= 2"
        if cls is not CriticalityClass.MassCritical:
            return "criterion 1.3 needs alpha = 4/N"
        return 8.0, 6.0
    if which == "1.5":
        if N == 2:
            ok = float(alpha) > 2 and float(alpha) <= 4 + 1e-12
        elif N >= 3:
            ok = cls is CriticalityClass.MassSupercriticalEnergySubcritical
        else:
            ok = False
        if not ok:
            return "criterion 1.5 needs 4/N < alpha < 4/(N-2) (N >= 3) or 2 < alpha <= 4 (N = 2)"
        c = 2.0 * N * float(alpha)
        return c, c / 2
    if which == "1.8":
        if N < 3 or cls is not CriticalityClass.EnergyCritical:
            return "criterion 1.8 needs N >= 3 and alpha = 4/(N-2)"
        c = 8.0 * N / (N - 2)
        return c, c / 2
    raise ValueError(f"unknown radial theorem {which!r}")


def radial_criterion(E: float, W: float, J: float, spec: ProblemSpec, which: str = "1.3",
                     radial: bool = True) -> CriterionVerdict:
    """Localised criterion with quadratics ``J + 2Wt + c_neg E t^2`` etc."""
    if not radial:
        return CriterionVerdict(which, False, note="data is not radially symmetric")
    coeffs = _radial_coefficients(which, spec)
    if isinstance(coeffs, str):
        return CriterionVerdict(which, False, note=coeffs)
    c, c_neg = coeffs
    return _branch_verdict(which, E, W, J, coeff=c, c_neg=c_neg, c_pos=c, linear=2.0,
                           use_delta=True)


def evaluate_all(E: float, V: float, I: float, J: float | None, W: float | None,
                 spec: ProblemSpec, radial: bool = True) -> list[CriterionVerdict]:
    """Verdicts of every theorem for one datum (radial ones only when J, W given)."""
    out = [sigma_criterion(E, V, I, th, spec) for th in SIGMA_THEOREMS]
    if J is not None and W is not None and math.isfinite(J) and math.isfinite(W):
        out += [radial_criterion(E, W, J, spec, th, radial) for th in RADIAL_THEOREMS]
    return out
