"""Scalar functionals of discrete fields and identity residual monitors.

Conventions: ``x`` is measured from the box centre, gradients are spectral,
and ``L^p`` integrals are ``h^d * sum(...)``.  Functionals of the damped
variable ``u`` (mass, E, K, I, V, J, W) and of the undamped variable
``v = e^{at} u`` (H, V_chi and its derivatives) are kept apart explicitly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, fields

import numpy as np

from .cutoff import QuadraticWeight, RadialCutoff
from .model import Field, ProblemSpec

BOUNDARY_TOL = 1e-8
V_EXPONENT_LIMIT = 700.0


def mass(u: Field) -> float:
    return float(u.grid.dV * np.sum(np.abs(u.values) ** 2))


def mass_spectral(u: Field) -> float:
    """Parseval form of :func:`mass`."""
    return float(u.grid.dV * np.sum(np.abs(u.hat) ** 2) / u.grid.size)


def gradient(u: Field) -> list[np.ndarray]:
    return [np.fft.ifftn(1j * k * u.hat) for k in u.grid.wavenumbers]


def grad_sq(u: Field) -> float:
    g = u.grid
    return float(g.dV * np.sum(g.k2 * np.abs(u.hat) ** 2) / g.size)


def potential(u: Field, alpha: float) -> float:
    """``||u||_{L^{alpha+2}}^{alpha+2}``."""
    return float(u.grid.dV * np.sum(np.abs(u.values) ** (float(alpha) + 2)))


def energy_E(u: Field, spec: ProblemSpec) -> tuple[float, float]:
    """Return ``(E, K)`` with the squared gradient norm in both."""
    g2 = grad_sq(u)
    p = potential(u, spec.alpha)
    alpha = float(spec.alpha)
    return 0.5 * g2 + spec.mu * p / (alpha + 2), g2 + spec.mu * p


def energy_H(v: Field, t: float, spec: ProblemSpec) -> float:
    alpha = float(spec.alpha)
    decay = math.exp(-spec.a * alpha * t)
    return 0.5 * grad_sq(v) + spec.mu * decay * potential(v, alpha) / (alpha + 2)


def tail_fraction(u: Field) -> float:
    """Share of ``sum |u_hat|^2`` held by modes in the top third of the wavenumbers."""
    w = np.abs(u.hat) ** 2
    total = w.sum()
    return float(w[u.grid.high_modes].sum() / total) if total > 0 else 0.0


def outer_mass_fraction(u: Field, radius: float | None = None) -> float:
    """Fraction of the mass lying outside ``radius`` (default L/4)."""
    g = u.grid
    radius = g.L / 4 if radius is None else radius
    w = np.abs(u.values) ** 2
    total = w.sum()
    return float(w[g.r > radius].sum() / total) if total > 0 else 0.0


def _check_boundary(u: Field):
    frac = outer_mass_fraction(u, 0.45 * u.grid.L)
    if frac > BOUNDARY_TOL:
        warnings.warn(f"mass fraction {frac:.2e} near the box boundary; weighted functionals "
                      "are unreliable", RuntimeWarning, stacklevel=3)


def _current(u: Field) -> list[np.ndarray]:
    """Components of ``Im(grad u * conj(u))``."""
    if not np.any(u.values.imag):
        # real fields carry no current; skip the rounding noise of the spectral gradient
        return [np.zeros(u.grid.shape) for _ in range(u.grid.d)]
    conj = np.conj(u.values)
    return [np.imag(d * conj) for d in gradient(u)]


def weighted_IV(u: Field) -> tuple[float, float]:
    _check_boundary(u)
    g = u.grid
    rho = np.abs(u.values) ** 2
    I = g.dV * np.sum(g.r**2 * rho)
    V = g.dV * sum(np.sum(x * j) for x, j in zip(g.coords, _current(u)))
    return float(I), float(V)


def _radial_flux(u: Field, d1_over_r: np.ndarray) -> float:
    """``int chi'(r) x/r . Im(grad u conj u)``."""
    g = u.grid
    return float(g.dV * sum(np.sum(d1_over_r * x * j) for x, j in zip(g.coords, _current(u))))


def localized_JW(u: Field, cutoff: RadialCutoff, N: int) -> tuple[float, float]:
    _check_boundary(u)
    g = u.grid
    ev = cutoff.evaluate(g.r, N)
    J = g.dV * np.sum(ev.chi * np.abs(u.values) ** 2)
    return float(J), _radial_flux(u, ev.d1_over_r)


def virial_action(v: Field, cutoff=None) -> tuple[float, float]:
    """``(V_chi, dV_chi/dt)``; ``cutoff=None`` means the weight ``|x|^2``."""
    cutoff = QuadraticWeight() if cutoff is None else cutoff
    g = v.grid
    ev = cutoff.evaluate(g.r, g.d)
    V = g.dV * np.sum(ev.chi * np.abs(v.values) ** 2)
    return float(V), 2.0 * _radial_flux(v, ev.d1_over_r)


def virial_second_rhs(v: Field, t: float, spec: ProblemSpec, cutoff=None) -> float:
    """Right side of the second virial derivative for the undamped variable ``v``.

    The sign of the nonlinear term is ``mu``; ``mu = -1`` is the focusing
    form.  The bilaplacian term is integrated by parts, ``-int Δ²chi |v|^2 =
    -int Δchi Δ|v|^2``, which stays exact when the profile has only a
    continuous second derivative.
    """
    cutoff = QuadraticWeight() if cutoff is None else cutoff
    g = v.grid
    N = g.d
    ev = cutoff.evaluate(g.r, N)
    vals = v.values
    rho = np.abs(vals) ** 2
    lap_rho = np.real(np.fft.ifftn(-g.k2 * np.fft.fftn(rho)))
    term_bilap = -g.dV * np.sum(ev.laplacian * lap_rho)

    grads = gradient(v)
    grad2 = sum(np.abs(d) ** 2 for d in grads)
    r = g.r
    with np.errstate(divide="ignore", invalid="ignore"):
        radial = sum(x * d for x, d in zip(g.coords, grads)) / np.where(r > 0, r, 1.0)
    radial2 = np.where(r > 0, np.abs(radial) ** 2, grad2 if N == 1 else 0.0)
    hess = ev.d1_over_r * (grad2 - radial2) + ev.d2 * radial2
    term_hess = 4.0 * g.dV * np.sum(hess)

    alpha = float(spec.alpha)
    decay = math.exp(-spec.a * alpha * t)
    term_nl = (spec.mu * 2 * alpha / (alpha + 2) * decay
               * g.dV * np.sum(ev.laplacian * np.abs(vals) ** (alpha + 2)))
    return float(term_bilap + term_hess + term_nl)


@dataclass
class DiagnosticSample:
    """All functionals at one time.  H, V_chi, dV_chi, d2V_chi refer to ``v``."""

    t: float
    mass: float
    grad_sq: float
    pot: float
    E: float
    K: float
    H: float
    I: float
    V: float
    J: float
    W: float
    V_chi: float
    dV_chi: float
    d2V_chi: float
    sup_abs: float
    tail: float
    outer: float

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> list[float]:
        return list(asdict(self).values())


def sample(u: Field, spec: ProblemSpec, cutoff: RadialCutoff | None = None) -> DiagnosticSample:
    """Evaluate every functional of ``u`` at its timestamp.

    ``V_chi`` and its derivatives use ``cutoff`` when given, ``|x|^2``
    otherwise; J and W are NaN without a cutoff.
    """
    t = u.t
    alpha = float(spec.alpha)
    g2 = grad_sq(u)
    pot = potential(u, alpha)
    E = 0.5 * g2 + spec.mu * pot / (alpha + 2)
    K = g2 + spec.mu * pot
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        I, V = weighted_IV(u)
        J, W = localized_JW(u, cutoff, spec.N) if cutoff is not None else (math.nan, math.nan)
    if spec.a * t <= V_EXPONENT_LIMIT:
        # v is O(1) while u decays like e^{-at}; never form e^{2at} times a u-norm
        v = u.replace(values=math.exp(spec.a * t) * u.values)
        H = energy_H(v, t, spec)
        Vc, dVc = virial_action(v, cutoff)
        d2Vc = virial_second_rhs(v, t, spec, cutoff)
    else:
        H = Vc = dVc = d2Vc = math.nan
    return DiagnosticSample(
        t=t, mass=mass(u), grad_sq=g2, pot=pot, E=E, K=K, H=H, I=I, V=V, J=J, W=W,
        V_chi=Vc, dV_chi=dVc, d2V_chi=d2Vc, sup_abs=float(np.abs(u.values).max()),
        tail=tail_fraction(u), outer=outer_mass_fraction(u),
    )


def _series(samples, name) -> np.ndarray:
    return np.array([getattr(s, name) for s in samples], dtype=float)


def damped_potential(samples, spec: ProblemSpec) -> np.ndarray:
    """``e^{-a alpha t} ||v(t)||^{alpha+2}``, which equals ``e^{2at} ||u(t)||^{alpha+2}``."""
    t = _series(samples, "t")
    pot = _series(samples, "pot")
    with np.errstate(divide="ignore"):
        return np.where(pot > 0, np.exp(2 * spec.a * t + np.log(pot)), 0.0)


def cumulative_integrals(t: np.ndarray, g: np.ndarray, depth: int = 1) -> list[np.ndarray]:
    """Iterated integrals ``int_0^t``, ``int_0^t int_0^s``, ... of ``g``.

    ``g`` is taken piecewise linear between samples and each level is
    integrated exactly, so the first level is the trapezoid rule and the
    whole hierarchy is exact for constant and linear integrands.
    """
    t = np.asarray(t, dtype=float)
    g = np.asarray(g, dtype=float)
    h = np.diff(t)
    g0, g1 = g[:-1], g[1:]
    levels = []
    i1 = np.concatenate([[0.0], np.cumsum(h * (g0 + g1) / 2)])
    levels.append(i1)
    if depth >= 2:
        i2 = np.concatenate([[0.0], np.cumsum(h * i1[:-1] + h**2 * (2 * g0 + g1) / 6)])
        levels.append(i2)
    if depth >= 3:
        i3 = np.concatenate([[0.0], np.cumsum(
            h * i2[:-1] + h**2 / 2 * i1[:-1] + h**3 * (3 * g0 + g1) / 24)])
        levels.append(i3)
    return levels


def energy_identity_residual(samples, spec: ProblemSpec, E0: float | None = None) -> np.ndarray:
    """``H(v(t)) - E(u0) + a alpha mu/(alpha+2) int_0^t e^{-a alpha s} ||v||^{alpha+2} ds``."""
    t = _series(samples, "t")
    H = _series(samples, "H")
    E0 = samples[0].E if E0 is None else E0
    alpha = float(spec.alpha)
    integral = cumulative_integrals(t, damped_potential(samples, spec), 1)[0]
    return H - E0 + spec.a * alpha * spec.mu / (alpha + 2) * integral


def energy_identity_prediction(samples, spec: ProblemSpec, E0: float | None = None) -> np.ndarray:
    t = _series(samples, "t")
    E0 = samples[0].E if E0 is None else E0
    alpha = float(spec.alpha)
    integral = cumulative_integrals(t, damped_potential(samples, spec), 1)[0]
    return E0 - spec.a * alpha * spec.mu / (alpha + 2) * integral


def damping_triple_integral(samples, spec: ProblemSpec, coefficient: float, rate: float) -> np.ndarray:
    """``c int_0^t int_0^s int_0^tau e^{-rate sigma} ||v(sigma)||^{alpha+2}``."""
    t = _series(samples, "t")
    alpha = float(spec.alpha)
    log_pot = np.log(np.maximum(_series(samples, "pot"), np.finfo(float).tiny))
    g = np.exp((alpha + 2) * spec.a * t - rate * t + log_pot)
    g[_series(samples, "pot") == 0] = 0.0
    return coefficient * cumulative_integrals(t, g, 3)[2]


def damping_coefficients(spec: ProblemSpec, which: str) -> tuple[float, float]:
    """``(c, rate)`` of the damping corrections A, B and C."""
    N, a, alpha = spec.N, spec.a, float(spec.alpha)
    if which == "A":
        return 32 * a / (N + 2), 4 * a / N
    if which == "B":
        return 16 * a * alpha / (alpha + 2), a * alpha
    if which == "C":
        return 4 * N * a * alpha**2 / (alpha + 2), a * alpha
    raise ValueError(f"unknown damping integral {which!r}")


def h1_norm(f: Field) -> float:
    g = f.grid
    return float(math.sqrt(g.dV * np.sum((1 + g.k2) * np.abs(f.hat) ** 2) / g.size))


def scattering_deficit(u: Field, u_plus: Field, spec: ProblemSpec) -> float:
    """``e^{at} || u(t) - e^{-at} e^{itΔ} u_+ ||_{H^1}`` evaluated at ``t = u.t``."""
    g = u.grid
    t = u.t
    free = np.exp(-1j * g.k2 * t) * u_plus.hat
    diff_hat = math.exp(spec.a * t) * u.hat - free
    return float(math.sqrt(g.dV * np.sum((1 + g.k2) * np.abs(diff_hat) ** 2) / g.size))


def w1r_norm(f: Field, r: float) -> float:
    """``||f||_{L^r} + || |grad f| ||_{L^r}``."""
    g = f.grid
    grad_abs = np.sqrt(sum(np.abs(d) ** 2 for d in gradient(f)))
    lr = (g.dV * np.sum(np.abs(f.values) ** r)) ** (1 / r)
    glr = (g.dV * np.sum(grad_abs**r)) ** (1 / r)
    return float(lr + glr)


def strichartz_exponents(N: int) -> tuple[float, float]:
    """The admissible pair ``(2N/(N-2), 2N^2/(N^2-2N+4))`` (N >= 3)."""
    if N < 3:
        raise ValueError("the energy-critical Strichartz pair needs N >= 3")
    return 2 * N / (N - 2), 2 * N**2 / (N**2 - 2 * N + 4)


def strichartz_norm(fields_, q: float, r: float, times=None) -> float:
    """``|| f ||_{L^q_t W^{1,r}_x}`` over a time series of fields (trapezoid in time)."""
    if q < 1 or r < 1:
        raise ValueError(f"exponents must be >= 1, got q={q}, r={r}")
    fields_ = list(fields_)
    times = np.array([f.t for f in fields_] if times is None else times, dtype=float)
    if len(fields_) < 2:
        return 0.0
    norms = np.array([w1r_norm(f, r) for f in fields_])
    return float(cumulative_integrals(times, norms**q, 1)[0][-1] ** (1 / q))
