"""Strang-split pseudospectral integration of the damped NLS.

Each step is half a nonlinear phase rotation, an exact spectral step of
``u_t = iΔu - a u`` and another half phase rotation.  Both substeps are
exact, so the discrete L2 norm obeys ``||u(t+dt)|| = e^{-a dt} ||u(t)||``
to rounding.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics as diag
from .model import Field, ProblemSpec

log = logging.getLogger(__name__)

MAX_EXPONENT = 700.0


class NonFiniteStateError(FloatingPointError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    dt_init: float = 1e-3
    dt_min: float = 1e-9
    T_final: float = 1.0
    adapt: bool = False
    blowup_grad_factor: float = 1e4
    tail_threshold: float = 1e-6
    sample_stride: int = 1
    outer_mass_threshold: float | None = None
    keep_fields: bool = False
    track_interaction: bool = False

    def __post_init__(self):
        if not (self.dt_init > 0 and self.dt_min > 0 and self.T_final > 0):
            raise ValueError("time steps and final time must be positive")
        if self.dt_min > self.dt_init:
            raise ValueError("dt_min must not exceed dt_init")
        if not (self.blowup_grad_factor > 0 and self.tail_threshold > 0):
            raise ValueError("detection thresholds must be positive")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        return cls(**d)


class Status(enum.Enum):
    GlobalToT = "global"
    BlowUpDetected = "blowup"
    ResolutionLoss = "resolution-loss"


@dataclass
class RunOutcome:
    """Classification of a run with its evidence.

    ``interaction`` (when tracked) holds, for each recorded sample after
    the first, the sum of the Duhamel increments of ``e^{-itΔ} v`` over the
    steps since the previous sample, in Fourier space.
    """

    status: Status
    t: float
    T_final: float
    reason: str | None = None
    tail: float | None = None
    final: diag.DiagnosticSample | None = None
    samples: list[diag.DiagnosticSample] = field(default_factory=list)
    fields: list[Field] = field(default_factory=list)
    interaction: list[np.ndarray] = field(default_factory=list)
    final_field: Field | None = None
    steps: int = 0

    @property
    def blew_up(self) -> bool:
        return self.status is Status.BlowUpDetected

    @property
    def is_global(self) -> bool:
        return self.status is Status.GlobalToT

    def describe(self) -> str:
        if self.status is Status.GlobalToT:
            return f"GlobalToT(T={self.T_final:g})"
        if self.status is Status.BlowUpDetected:
            return f"BlowUpDetected(t={self.t:.6g}, {self.reason})"
        return f"ResolutionLoss(t={self.t:.6g}, tail={self.tail}, {self.reason})"


def _nonlinear(values: np.ndarray, tau: float, spec: ProblemSpec) -> np.ndarray:
    if spec.mu == 0:
        return values
    return values * np.exp(-1j * spec.mu * np.abs(values) ** float(spec.alpha) * tau)


def _linear_factor(k2: np.ndarray, dt: float, a: float) -> np.ndarray:
    return np.exp((-1j * k2 - a) * dt)


def _step(values: np.ndarray, dt: float, spec: ProblemSpec, k2: np.ndarray) -> np.ndarray:
    values = _nonlinear(values, dt / 2, spec)
    values = np.fft.ifftn(np.fft.fftn(values) * _linear_factor(k2, dt, spec.a))
    values = _nonlinear(values, dt / 2, spec)
    if not np.all(np.isfinite(values)):
        raise NonFiniteStateError("non-finite values after a Strang step")
    return values


def strang_step(u: Field, t: float, dt: float, spec: ProblemSpec) -> Field:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    return Field(_step(u.values, dt, spec, u.grid.k2), u.grid, t + dt)


def adapt_dt(u: Field, cfg: SolverConfig, spec: ProblemSpec, amp0: float) -> float:
    """``dt_init / (1 + (max|u| / max|u0|)^alpha)`` clamped to ``[dt_min, dt_init]``."""
    ratio = float(np.abs(u.values).max()) / amp0 if amp0 > 0 else 0.0
    with np.errstate(over="ignore"):
        dt = cfg.dt_init / (1.0 + ratio ** float(spec.alpha))
    return min(cfg.dt_init, max(cfg.dt_min, dt))


def detect_blowup(u: Field, u0: Field, cfg: SolverConfig,
                  grad0: float | None = None, amp0: float | None = None) -> str | None:
    """``"GradientGrowth"`` / ``"AmplitudeGrowth"`` when either norm grew past the factor."""
    grad0 = math.sqrt(diag.grad_sq(u0)) if grad0 is None else grad0
    amp0 = float(np.abs(u0.values).max()) if amp0 is None else amp0
    if grad0 > 0 and math.sqrt(diag.grad_sq(u)) > cfg.blowup_grad_factor * grad0:
        return "GradientGrowth"
    if amp0 > 0 and float(np.abs(u.values).max()) > cfg.blowup_grad_factor * amp0:
        return "AmplitudeGrowth"
    return None


def change_variable(u: Field, t: float, a: float, direction: str = "to_v") -> Field:
    """``v = e^{at} u`` (``"to_v"``) or ``u = e^{-at} v`` (``"to_u"``)."""
    if not math.isfinite(t):
        raise ValueError("time must be finite")
    exponent = a * t
    if abs(exponent) > MAX_EXPONENT:
        raise OverflowError(f"a*t = {exponent:g} exceeds the exponent guard {MAX_EXPONENT}")
    if direction == "to_v":
        factor = math.exp(exponent)
    elif direction == "to_u":
        factor = math.exp(-exponent)
    else:
        raise ValueError(f"direction must be 'to_v' or 'to_u', got {direction!r}")
    return u.replace(values=factor * u.values)


def free_propagate(u: Field, t: float) -> Field:
    """``e^{itΔ} u`` exactly in Fourier space; the timestamp advances by ``t``."""
    if not math.isfinite(t):
        raise ValueError("time must be finite")
    g = u.grid
    return Field(np.fft.ifftn(u.hat * np.exp(-1j * g.k2 * t)), g, u.t + t)


def run(u0: Field, spec: ProblemSpec, cfg: SolverConfig, cutoff=None) -> RunOutcome:
    """Integrate from ``u0.t`` to ``cfg.T_final`` or until a detector fires."""
    grid = u0.grid
    if grid.d != spec.N:
        raise ValueError(f"grid dimension {grid.d} must equal N={spec.N}")
    k2 = grid.k2
    t0 = u0.t
    grad0 = math.sqrt(diag.grad_sq(u0))
    amp0 = float(np.abs(u0.values).max())
    alpha = float(spec.alpha)
    T = cfg.T_final

    out = RunOutcome(status=Status.GlobalToT, t=t0, T_final=T)

    def record(field_: Field):
        s = diag.sample(field_, spec, cutoff)
        out.samples.append(s)
        if cfg.keep_fields:
            out.fields.append(field_)
        return s

    record(u0)
    values = np.array(u0.values)
    t = t0
    step = 0
    pending = np.zeros(grid.shape, dtype=complex) if cfg.track_interaction else None

    def interaction(vals: np.ndarray, tau: float, time: float) -> np.ndarray:
        # increment of e^{-itΔ}v from one exact phase rotation, free of cancellation
        delta = math.exp(spec.a * time) * vals * np.expm1(
            -1j * spec.mu * np.abs(vals) ** alpha * tau)
        return np.exp(1j * k2 * time) * np.fft.fftn(delta)

    current = u0
    while t < T - 1e-12 * max(1.0, T):
        if cfg.adapt:
            dt = adapt_dt(current, cfg, spec, amp0)
        else:
            dt = cfg.dt_init
        remaining = T - t
        if dt >= remaining or remaining - dt < 1e-9 * dt:
            dt = remaining
        try:
            if pending is not None and spec.mu != 0:
                pending += interaction(values, dt / 2, t)
                values = _nonlinear(values, dt / 2, spec)
                values = np.fft.ifftn(np.fft.fftn(values) * _linear_factor(k2, dt, spec.a))
                pending += interaction(values, dt / 2, t + dt)
                values = _nonlinear(values, dt / 2, spec)
                if not np.all(np.isfinite(values)):
                    raise NonFiniteStateError("non-finite values after a Strang step")
            else:
                values = _step(values, dt, spec, k2)
        except NonFiniteStateError as exc:
            out.status, out.t, out.reason, out.tail = Status.ResolutionLoss, t + dt, str(exc), math.nan
            break
        step += 1
        t = t0 + step * cfg.dt_init if not cfg.adapt and step * cfg.dt_init <= T - t0 else t + dt
        if t > T:
            t = T
        current = Field(values, grid, t)

        reason = detect_blowup(current, u0, cfg, grad0, amp0)
        if reason is not None:
            out.status, out.t, out.reason = Status.BlowUpDetected, t, reason
            break
        tail = diag.tail_fraction(current)
        if tail > cfg.tail_threshold:
            out.status, out.t, out.reason, out.tail = Status.ResolutionLoss, t, "SpectralTail", tail
            break
        if cfg.outer_mass_threshold is not None:
            outer = diag.outer_mass_fraction(current)
            if outer > cfg.outer_mass_threshold:
                out.status, out.t, out.reason, out.tail = Status.ResolutionLoss, t, "BoxBoundary", tail
                break
        if cfg.adapt and dt <= cfg.dt_min and t < T:
            out.status, out.t, out.reason, out.tail = Status.ResolutionLoss, t, "StepUnderflow", tail
            break
        if step % cfg.sample_stride == 0:
            record(current)
            if pending is not None:
                out.interaction.append(pending)
                pending = np.zeros(grid.shape, dtype=complex)

    out.steps = step
    if out.status is Status.GlobalToT:
        out.t = t
    out.final_field = current
    out.final = out.samples[-1] if out.samples[-1].t == current.t else diag.sample(current, spec, cutoff)
    log.debug("run finished: %s after %d steps", out.describe(), step)
    return out


def h1_of_hat(hat: np.ndarray, grid) -> float:
    return float(math.sqrt(grid.dV * np.sum((1 + grid.k2) * np.abs(hat) ** 2) / grid.size))
