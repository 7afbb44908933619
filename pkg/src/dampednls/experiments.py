"""Run configurations, scenario drivers and report files."""

from __future__ import annotations

import csv
import enum
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from .criteria import CriterionVerdict, evaluate_all
from .cutoff import RadialCutoff
from .model import CriticalityClass, Field, Grid, ProblemSpec, classify, make_initial_data
from .solver import RunOutcome, SolverConfig, Status, free_propagate, h1_of_hat, run

WORKERS_ENV = "DAMPEDNLS_WORKERS"


class PreconditionError(ValueError):
    """Inputs violate a documented precondition (CLI exit code 2)."""


class NonMonotoneError(RuntimeError):
    def __init__(self, msg: str, blowup_run: dict, global_run: dict):
        super().__init__(msg)
        self.blowup_run = blowup_run
        self.global_run = global_run


class Scenario(enum.Enum):
    Simulate = "simulate"
    VerifyIdentities = "verify-identities"
    CriteriaVsOutcome = "criteria-vs-outcome"
    Threshold = "threshold"
    ScatterProbe = "scatter-probe"


# scenario -> keys that must be present in RunConfig.params
REQUIRED_PARAMS = {
    Scenario.Simulate: (),
    Scenario.VerifyIdentities: (),
    Scenario.CriteriaVsOutcome: ("a_values",),
    Scenario.Threshold: ("a_lo", "a_hi", "width"),
    Scenario.ScatterProbe: ("t1", "t2"),
}

DEFAULT_TOLERANCES = {"mass": 1e-10, "energy": 1e-4, "virial": 1e-3, "sigma": 1e-3}


@dataclass(frozen=True)
class RunConfig:
    spec: ProblemSpec
    grid: Grid
    initial: dict
    solver: SolverConfig = field(default_factory=SolverConfig)
    R: float | None = None
    scenario: Scenario = Scenario.Simulate
    output_dir: str = "runs"
    params: dict = field(default_factory=dict)
    completion: str = "cubic"

    def __post_init__(self):
        if self.grid.d != self.spec.N:
            raise PreconditionError(f"grid dimension {self.grid.d} must equal N={self.spec.N}")
        missing = [k for k in REQUIRED_PARAMS[self.scenario] if k not in self.params]
        if missing:
            raise PreconditionError(f"scenario {self.scenario.value} needs params {missing}")
        if self.R is not None and not self.R > 0:
            raise PreconditionError(f"cutoff radius must be positive, got {self.R}")

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "grid": self.grid.to_dict(),
            "initial": dict(self.initial),
            "solver": self.solver.to_dict(),
            "R": self.R,
            "scenario": self.scenario.value,
            "output_dir": self.output_dir,
            "params": dict(self.params),
            "completion": self.completion,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(
            spec=ProblemSpec.from_dict(d["spec"]),
            grid=Grid.from_dict(d["grid"]),
            initial=dict(d["initial"]),
            solver=SolverConfig.from_dict(d.get("solver", {})),
            R=d.get("R"),
            scenario=Scenario(d.get("scenario", Scenario.Simulate.value)),
            output_dir=d.get("output_dir", "runs"),
            params=dict(d.get("params", {})),
            completion=d.get("completion", "cubic"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise PreconditionError(f"cannot read config {path}: {exc}") from exc
        try:
            return cls.from_dict(data)
        except (KeyError, TypeError) as exc:
            raise PreconditionError(f"malformed config {path}: {exc!r}") from exc

    def config_hash(self) -> str:
        # output_dir is where results go, not what they are
        d = self.to_dict()
        d.pop("output_dir")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    def replace(self, **changes) -> "RunConfig":
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(changes)
        return RunConfig(**d)

    def with_damping(self, a: float) -> "RunConfig":
        return self.replace(spec=self.spec.with_damping(a))

    def initial_field(self) -> Field:
        return make_initial_data(self.grid, self.initial)

    def cutoff(self) -> RadialCutoff | None:
        return None if self.R is None else RadialCutoff(self.R, completion=self.completion)


def simulate(cfg: RunConfig) -> RunOutcome:
    return run(cfg.initial_field(), cfg.spec, cfg.solver, cfg.cutoff())


def _series(samples, name):
    return np.array([getattr(s, name) for s in samples])


def _rel(residual, reference) -> float:
    residual = np.abs(np.asarray(residual, dtype=float))
    reference = np.abs(np.asarray(reference, dtype=float))
    if residual.size == 0:
        return 0.0
    return float(np.max(residual / np.maximum(reference, np.finfo(float).tiny)))


@dataclass
class IdentityReport:
    residuals: dict
    tolerances: dict
    outcome: str
    window: float

    @property
    def breaches(self) -> list[str]:
        return [k for k, v in self.residuals.items()
                if v is not None and not v <= self.tolerances.get(k, math.inf)]

    @property
    def passed(self) -> bool:
        return not self.breaches

    def to_dict(self) -> dict:
        return {"residuals": self.residuals, "tolerances": self.tolerances,
                "outcome": self.outcome, "window": self.window, "passed": self.passed}


def identity_residuals(samples, spec: ProblemSpec, window: float | None = None) -> dict:
    """Maximal relative residuals of the mass law, energy identity, virial and Σ-identities.

    The virial check uses the centred second difference of ``∫|x|^2|v|^2``,
    so samples must be equally spaced.  The Σ-identity is reported only for
    mass-critical problems (``None`` otherwise).
    """
    if window is not None:
        samples = [s for s in samples if s.t <= window + 1e-12]
    t = _series(samples, "t")
    m = np.sqrt(_series(samples, "mass"))
    mass_res = np.abs(m - np.exp(-spec.a * t) * m[0]) / m[0]

    energy_pred = diag.energy_identity_prediction(samples, spec)
    energy_res = diag.energy_identity_residual(samples, spec)
    scale = np.maximum(np.abs(energy_pred), abs(samples[0].E))

    out = {"mass": float(mass_res.max()), "energy": _rel(energy_res, scale)}

    virial = None
    if len(t) >= 3:
        h = np.diff(t)
        if np.ptp(h) > 1e-9 * h.mean():
            raise PreconditionError("virial check needs equally spaced samples (adapt off)")
        Vc = _series(samples, "V_chi")
        fd = (Vc[2:] - 2 * Vc[1:-1] + Vc[:-2]) / h.mean() ** 2
        rhs = _series(samples, "d2V_chi")[1:-1]
        virial = float(np.max(np.abs(fd - rhs)) / np.max(np.abs(rhs)))
    out["virial"] = virial

    sigma = None
    if classify(spec) is CriticalityClass.MassCritical:
        s0 = samples[0]
        I_v = np.exp(2 * spec.a * t) * _series(samples, "I")
        f = s0.I + 4 * s0.V * t + 8 * s0.E * t**2
        c, rho = diag.damping_coefficients(spec, "A")
        A = diag.damping_triple_integral(samples, spec, c, rho)
        sigma = _rel(I_v - f - A, I_v)
    out["sigma"] = sigma
    return out


def verify_identities(cfg: RunConfig, tolerances: dict | None = None) -> IdentityReport:
    if cfg.spec.mu not in (-1, 1):
        raise PreconditionError("identity checks need mu = -1 or +1")
    if cfg.solver.adapt:
        raise PreconditionError("identity checks need a fixed time step")
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(cfg.params.get("tolerances", {}))
    tol.update(tolerances or {})
    window = cfg.params.get("window", cfg.solver.T_final)
    out = simulate(cfg)
    res = identity_residuals(out.samples, cfg.spec, window)
    return IdentityReport(res, tol, out.describe(), window)


def initial_verdicts(cfg: RunConfig, u0: Field | None = None) -> list[CriterionVerdict]:
    """Criterion verdicts for the initial datum of ``cfg`` (damping does not enter)."""
    u0 = cfg.initial_field() if u0 is None else u0
    E, _ = diag.energy_E(u0, cfg.spec)
    I, V = diag.weighted_IV(u0)
    J = W = None
    if cfg.R is not None:
        J, W = diag.localized_JW(u0, cfg.cutoff(), cfg.spec.N)
    # Gaussian data built by make_initial_data is radial about the box centre
    radial = cfg.initial.get("kind", "gaussian") == "gaussian"
    return evaluate_all(E, V, I, J, W, cfg.spec, radial=radial)


def _outcome_record(cfg: RunConfig) -> dict:
    out = simulate(cfg)
    return {"a": cfg.spec.a, "hash": cfg.config_hash(), "status": out.status.value,
            "t": out.t, "reason": out.reason, "describe": out.describe()}


def worker_count(default: int = 1) -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return default
    try:
        n = int(raw)
    except ValueError as exc:
        raise PreconditionError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
    return max(1, n)


def run_many(cfgs: list[RunConfig], workers: int | None = None) -> list[dict]:
    """Outcome records for independent configs, sorted by config hash."""
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_outcome_record, cfgs))
    else:
        records = [_outcome_record(c) for c in cfgs]
    return sorted(records, key=lambda r: r["hash"])


def criteria_vs_outcome(cfgs: list[RunConfig], a_values=None, workers: int | None = None) -> dict:
    """Compare each datum's verdicts with solver outcomes over a list of damping values.

    ``a_values`` defaults to each config's ``params["a_values"]``.
    """
    data = []
    failures = []
    for cfg in cfgs:
        a_list = sorted(a_values if a_values is not None else cfg.params["a_values"])
        verdicts = initial_verdicts(cfg)
        applicable = [v for v in verdicts if v.applicable]
        predicted = any(v.predicted_blowup for v in applicable)
        records = run_many([cfg.with_damping(a) for a in a_list], workers)
        records.sort(key=lambda r: r["a"])
        detected = [r["a"] for r in records if r["status"] == Status.BlowUpDetected.value]
        disagreements = []
        if predicted:
            disagreements = [r for r in records if r["status"] != Status.BlowUpDetected.value]
            if disagreements and disagreements[0]["a"] == a_list[0]:
                failures.append({"config": cfg.config_hash(), "a": a_list[0]})
        data.append({
            "config": cfg.config_hash(),
            "verdicts": [v.to_dict() for v in applicable],
            "predicted_blowup": predicted,
            "runs": records,
            "largest_a_detected": max(detected) if detected else None,
            "disagreements": disagreements,
        })
    data.sort(key=lambda d: d["config"])
    return {"data": data, "failures": failures, "passed": not failures}


@dataclass
class ThresholdResult:
    a_lo: float
    a_hi: float
    runs: int
    log: list[dict]

    def __post_init__(self):
        if not self.a_lo < self.a_hi:
            raise ValueError(f"bracket must satisfy a_lo < a_hi, got [{self.a_lo}, {self.a_hi}]")

    @property
    def width(self) -> float:
        return self.a_hi - self.a_lo

    def to_dict(self) -> dict:
        return {"a_lo": self.a_lo, "a_hi": self.a_hi, "width": self.width,
                "runs": self.runs, "log": self.log}


def _collapse_side(record: dict) -> bool | None:
    """True below the threshold, False above, None if the run is unclassifiable."""
    status = Status(record["status"])
    if status is Status.BlowUpDetected:
        return True
    if status is Status.GlobalToT:
        return False
    return None


def threshold_bisection(cfg: RunConfig, a_lo: float, a_hi: float, width: float,
                        resolution_loss_collapses: bool = True) -> ThresholdResult:
    """Bisect the damping threshold separating detected blow-up from global runs.

    Monotonicity of the outcome in ``a`` is assumed, so after both endpoints
    are validated every midpoint falls inside the bracket.  A run that
    loses resolution mid-bracket is counted on the collapse side when
    ``resolution_loss_collapses`` (the solution concentrated beyond the
    grid), otherwise the bisection stops with a precondition error.
    """
    if not (a_lo < a_hi and width > 0):
        raise PreconditionError(f"need a_lo < a_hi and width > 0, got [{a_lo}, {a_hi}], {width}")
    log = []

    def probe(a: float) -> tuple[dict, bool | None]:
        rec = _outcome_record(cfg.with_damping(a))
        log.append(rec)
        side = _collapse_side(rec)
        if side is None and resolution_loss_collapses:
            side = True
        return rec, side

    lo_rec, lo_side = probe(a_lo)
    if lo_side is not True or lo_rec["status"] != Status.BlowUpDetected.value:
        raise PreconditionError(f"a_lo={a_lo} must give BlowUpDetected, got {lo_rec['describe']}")
    hi_rec, hi_side = probe(a_hi)
    if hi_side is not False:
        raise PreconditionError(f"a_hi={a_hi} must give GlobalToT, got {hi_rec['describe']}")
    runs = 0
    while a_hi - a_lo > width:
        mid = 0.5 * (a_lo + a_hi)
        rec, side = probe(mid)
        runs += 1
        if side is None:
            raise PreconditionError(f"run at a={mid} is unclassifiable: {rec['describe']}")
        if side:
            a_lo, lo_rec = mid, rec
        else:
            a_hi, hi_rec = mid, rec
        _check_monotone(log)
    return ThresholdResult(a_lo, a_hi, runs, log)


def _check_monotone(log: list[dict]):
    blowups = [r for r in log if r["status"] == Status.BlowUpDetected.value]
    globals_ = [r for r in log if r["status"] == Status.GlobalToT.value]
    for b in blowups:
        for g in globals_:
            if b["a"] > g["a"]:
                raise NonMonotoneError(
                    f"blow-up at a={b['a']} above a global run at a={g['a']}", b, g)


def probe_strichartz_pair(spec: ProblemSpec) -> tuple[float, float]:
    """The energy-critical pair for N >= 3, else ``(4(alpha+2)/(N alpha), alpha+2)``."""
    if spec.N >= 3:
        return diag.strichartz_exponents(spec.N)
    alpha = float(spec.alpha)
    return 4 * (alpha + 2) / (spec.N * alpha), alpha + 2


@dataclass
class ScatterReport:
    t1: float
    t2: float
    times: np.ndarray
    deficit: np.ndarray
    deficit_direct: np.ndarray
    increment: float
    increment_direct: float
    strichartz: float
    exponents: tuple[float, float]
    outcome: str
    grad_ratio: float

    def deficit_at(self, t: float, direct: bool = False) -> float:
        i = int(np.argmin(np.abs(self.times - t)))
        return float((self.deficit_direct if direct else self.deficit)[i])

    def to_dict(self) -> dict:
        return {
            "t1": self.t1, "t2": self.t2, "times": self.times.tolist(),
            "deficit": self.deficit.tolist(), "deficit_direct": self.deficit_direct.tolist(),
            "increment": self.increment, "increment_direct": self.increment_direct,
            "strichartz": self.strichartz, "exponents": list(self.exponents),
            "outcome": self.outcome, "grad_ratio": self.grad_ratio,
        }


def scattering_probe(cfg: RunConfig, t1: float, t2: float) -> ScatterReport:
    """Cauchy increments of ``e^{-itΔ} v(t)`` and the scattering deficit against ``u_+``.

    ``u_+`` is ``e^{-i t2 Δ} v(t2)``.  Two estimates are reported: the direct
    difference of propagated states, and the accumulated Duhamel increments
    of the nonlinear substeps.  The second has no cancellation, which
    matters once ``e^{-a alpha t}`` has pushed the increments below rounding.
    """
    if not 0 <= t1 < t2:
        raise PreconditionError(f"need 0 <= t1 < t2, got t1={t1}, t2={t2}")
    if cfg.solver.adapt:
        raise PreconditionError("the scattering probe needs a fixed time step")
    solver = cfg.solver
    stride_dt = solver.dt_init * solver.sample_stride
    scfg = SolverConfig.from_dict({**solver.to_dict(), "T_final": max(solver.T_final, t2),
                                   "keep_fields": True, "track_interaction": True})
    out = run(cfg.initial_field(), cfg.spec, scfg, cfg.cutoff())
    if not out.is_global:
        raise PreconditionError(f"scattering probe needs a global run, got {out.describe()}")
    times = np.array([f.t for f in out.fields])
    for tt in (t1, t2):
        if np.min(np.abs(times - tt)) > 1e-9 * max(1.0, tt):
            raise PreconditionError(f"t={tt} is not a sample time (sampling every {stride_dt:g})")
    i1 = int(np.argmin(np.abs(times - t1)))
    i2 = int(np.argmin(np.abs(times - t2)))
    grid = cfg.grid
    a = cfg.spec.a

    def profile(f: Field) -> np.ndarray:
        # Fourier coefficients of e^{-itΔ} v(t)
        return math.exp(a * f.t) * np.exp(1j * grid.k2 * f.t) * f.hat

    plus_hat = profile(out.fields[i2])
    u_plus = Field(np.fft.ifftn(plus_hat), grid, 0.0)
    direct = np.array([diag.scattering_deficit(f, u_plus, cfg.spec) for f in out.fields[: i2 + 1]])
    # interaction[k] covers (times[k], times[k+1]]
    acc = np.zeros(grid.shape, dtype=complex)
    accumulated = np.zeros(i2 + 1)
    for k in range(i2 - 1, -1, -1):
        acc = acc + out.interaction[k]
        accumulated[k] = h1_of_hat(acc, grid)
    increment = h1_of_hat(sum(out.interaction[i1:i2]), grid) if i2 > i1 else 0.0
    increment_direct = h1_of_hat(plus_hat - profile(out.fields[i1]), grid)

    q, r = probe_strichartz_pair(cfg.spec)
    window = out.fields[i1 : i2 + 1]
    v_window = [f.replace(values=math.exp(a * f.t) * f.values) for f in window]
    strich = diag.strichartz_norm(v_window, q, r)
    g2 = _series(out.samples, "grad_sq")
    return ScatterReport(
        t1=t1, t2=t2, times=times[: i2 + 1], deficit=accumulated, deficit_direct=direct,
        increment=increment, increment_direct=increment_direct, strichartz=strich,
        exponents=(q, r), outcome=out.describe(), grad_ratio=float(math.sqrt(g2.max() / g2[0])),
    )


def samples_csv(samples) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(diag.DiagnosticSample.columns())
    for s in samples:
        writer.writerow([repr(float(x)) for x in s.row()])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj


def emit_report(cfg: RunConfig, outcome: RunOutcome | None = None, extra: dict | None = None,
                wall_time: float | None = None, directory=None) -> tuple[Path, Path | None]:
    """Write ``<hash>.json`` (summary) and ``<hash>.csv`` (sample series) into the output directory."""
    directory = Path(cfg.output_dir if directory is None else directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise PreconditionError(f"cannot create output directory {directory}: {exc}") from exc
    if not os.access(directory, os.W_OK):
        raise PreconditionError(f"output directory {directory} is not writable")
    h = cfg.config_hash()
    summary = {"config": cfg.to_dict(), "hash": h, "wall_time": wall_time}
    csv_path = None
    if outcome is not None:
        summary["outcome"] = {"status": outcome.status.value, "t": outcome.t,
                              "reason": outcome.reason, "steps": outcome.steps,
                              "describe": outcome.describe()}
        csv_path = directory / f"{h}.csv"
        csv_path.write_text(samples_csv(outcome.samples))
    summary["verdicts"] = [v.to_dict() for v in initial_verdicts(cfg)]
    if extra:
        summary.update(extra)
    json_path = directory / f"{h}.json"
    json_path.write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    return json_path, csv_path


def run_scenario(cfg: RunConfig) -> tuple[dict, bool]:
    """Dispatch on ``cfg.scenario``; returns ``(summary, within_tolerance)``."""
    start = time.perf_counter()
    p = cfg.params
    outcome = None
    ok = True
    if cfg.scenario is Scenario.Simulate:
        outcome = simulate(cfg)
        extra = {}
    elif cfg.scenario is Scenario.VerifyIdentities:
        rep = verify_identities(cfg)
        extra = {"identities": rep.to_dict()}
        ok = rep.passed
    elif cfg.scenario is Scenario.CriteriaVsOutcome:
        rep = criteria_vs_outcome([cfg])
        extra = {"criteria_vs_outcome": rep}
        ok = rep["passed"]
    elif cfg.scenario is Scenario.Threshold:
        res = threshold_bisection(cfg, p["a_lo"], p["a_hi"], p["width"])
        extra = {"threshold": res.to_dict()}
    else:
        rep = scattering_probe(cfg, p["t1"], p["t2"])
        extra = {"scatter": rep.to_dict()}
    wall = time.perf_counter() - start
    json_path, csv_path = emit_report(cfg, outcome, extra, wall_time=wall)
    extra["files"] = [str(json_path)] + ([str(csv_path)] if csv_path else [])
    return extra, ok
