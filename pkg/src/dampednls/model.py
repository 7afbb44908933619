"""Problem parameters, periodic grids, fields and initial data."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from numbers import Rational

import numpy as np

ALPHA_TOL = 1e-12


class CriticalityClass(enum.Enum):
    MassSubcritical = "mass-subcritical"
    MassCritical = "mass-critical"
    MassSupercriticalEnergySubcritical = "mass-supercritical-energy-subcritical"
    EnergyCritical = "energy-critical"
    EnergySupercritical = "energy-supercritical"


@dataclass(frozen=True)
class ProblemSpec:
    """Parameters of ``i u_t + Δu + i a u = mu |u|^alpha u`` on R^N.

    ``mu = 0`` switches the nonlinearity off (linear control runs).
    ``alpha`` may be given as a :class:`fractions.Fraction` for exact
    classification at the critical exponents.
    """

    N: int
    alpha: float | Fraction
    mu: int = -1
    a: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"dimension N must be a positive integer, got {self.N}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.mu not in (-1, 0, 1):
            raise ValueError(f"mu must be -1, +1 (or 0 for linear runs), got {self.mu}")
        if not self.a >= 0 or not math.isfinite(self.a):
            raise ValueError(f"damping a must be finite and >= 0, got {self.a}")

    @property
    def focusing(self) -> bool:
        return self.mu == -1

    def with_damping(self, a: float) -> "ProblemSpec":
        return ProblemSpec(self.N, self.alpha, self.mu, a)

    def to_dict(self) -> dict:
        alpha = self.alpha
        if isinstance(alpha, Fraction):
            alpha = f"{alpha.numerator}/{alpha.denominator}"
        return {"N": self.N, "alpha": alpha, "mu": self.mu, "a": self.a}

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemSpec":
        alpha = d["alpha"]
        if isinstance(alpha, str):
            alpha = Fraction(alpha)
        return cls(int(d["N"]), alpha, int(d.get("mu", -1)), float(d.get("a", 0.0)))


def alpha_star(N: int) -> float | Fraction:
    """Energy-critical exponent 4/(N-2); infinite for N = 1, 2."""
    if N <= 2:
        return math.inf
    return Fraction(4, N - 2)


def _compare(x, y) -> int:
    """Three-way comparison, exact for rationals and 1e-12-tolerant otherwise."""
    if y == math.inf:
        return -1
    if isinstance(x, Rational) and isinstance(y, Rational):
        return (x > y) - (x < y)
    diff = float(x) - float(y)
    if abs(diff) <= ALPHA_TOL:
        return 0
    return 1 if diff > 0 else -1


def classify(spec: ProblemSpec) -> CriticalityClass:
    mass = _compare(spec.alpha, Fraction(4, spec.N))
    if mass < 0:
        return CriticalityClass.MassSubcritical
    if mass == 0:
        return CriticalityClass.MassCritical
    energy = _compare(spec.alpha, alpha_star(spec.N))
    if energy < 0:
        return CriticalityClass.MassSupercriticalEnergySubcritical
    if energy == 0:
        return CriticalityClass.EnergyCritical
    return CriticalityClass.EnergySupercritical


@dataclass(frozen=True)
class Grid:
    """Isotropic periodic box ``[-L/2, L/2)^d`` with ``n`` points per axis."""

    L: float
    n: int
    d: int

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError(f"box length must be positive, got {self.L}")
        if self.d not in (1, 2, 3):
            raise ValueError(f"grid dimension must be 1, 2 or 3, got {self.d}")
        if self.n < 2 or self.n & (self.n - 1):
            raise ValueError(f"points per axis must be a power of two, got {self.n}")

    @property
    def h(self) -> float:
        return self.L / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def dV(self) -> float:
        return self.h**self.d

    @cached_property
    def x1(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.h

    @cached_property
    def k1(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.h)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.x1] * self.d), indexing="ij", sparse=True))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.k1] * self.d), indexing="ij", sparse=True))

    @cached_property
    def r(self) -> np.ndarray:
        return np.sqrt(sum(x**2 for x in self.coords))

    @cached_property
    def k2(self) -> np.ndarray:
        return sum(k**2 for k in self.wavenumbers) * np.ones(self.shape)

    @cached_property
    def high_modes(self) -> np.ndarray:
        """Mask of modes with some |k_j| in the top third of the wavenumber range."""
        cut = (2.0 / 3.0) * np.abs(self.k1).max()
        mask = np.zeros(self.shape, dtype=bool)
        for k in self.wavenumbers:
            mask |= np.abs(k) > cut
        return mask

    def to_dict(self) -> dict:
        return {"L": self.L, "n": self.n, "d": self.d}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        return cls(float(d["L"]), int(d["n"]), int(d["d"]))


def make_grid(L: float, n: int, d: int) -> Grid:
    return Grid(float(L), int(n), int(d))


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples of a solution on ``grid`` at time ``t``.

    The value array is stored read-only; operations return new fields.
    """

    values: np.ndarray
    grid: Grid
    t: float = 0.0
    _hat: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.shape != self.grid.shape:
            raise ValueError(f"values shape {values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite values")
        if not math.isfinite(self.t):
            raise ValueError(f"timestamp must be finite, got {self.t}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def hat(self) -> np.ndarray:
        """Unnormalised FFT of the values (cached)."""
        if not self._hat:
            self._hat.append(np.fft.fftn(self.values))
        return self._hat[0]

    def replace(self, values: np.ndarray | None = None, t: float | None = None) -> "Field":
        return Field(self.values if values is None else values, self.grid, self.t if t is None else t)


def gaussian_data(grid: Grid, amplitude: float = 1.0, width: float = 1.0, chirp: float = 0.0,
                  boundary_tol: float = 1e-12) -> Field:
    """``A exp(-|x|^2 / (2 sigma^2)) exp(i b |x|^2)`` centred in the box."""
    if not width > 0:
        raise ValueError(f"width must be positive, got {width}")
    r2 = grid.r**2
    values = amplitude * np.exp(-r2 / (2 * width**2)) * np.exp(1j * chirp * r2)
    edge = abs(amplitude) * math.exp(-(grid.L / 2) ** 2 / (2 * width**2))
    if edge >= boundary_tol * abs(amplitude) and amplitude != 0:
        warnings.warn(
            f"Gaussian of width {width} is truncated by the box (edge value {edge:.3e})",
            RuntimeWarning, stacklevel=2,
        )
    return Field(values, grid, 0.0)


def constant_data(grid: Grid, value: complex) -> Field:
    return Field(np.full(grid.shape, value, dtype=complex), grid, 0.0)


INITIAL_DATA = {
    "gaussian": gaussian_data,
    "constant": constant_data,
}


def make_initial_data(grid: Grid, descriptor: dict) -> Field:
    """Build initial data from ``{"kind": name, **parameters}``."""
    params = dict(descriptor)
    kind = params.pop("kind", "gaussian")
    if kind not in INITIAL_DATA:
        raise ValueError(f"unknown initial data kind {kind!r}")
    if kind == "constant":
        params = {"value": complex(params.get("re", 0.0), params.get("im", 0.0))}
    return INITIAL_DATA[kind](grid, **params)
