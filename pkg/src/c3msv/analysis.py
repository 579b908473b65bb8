"""Entanglement criterion, parameter scans and the intensity-squeezing minimum.

Every observable can be evaluated by the Fock engine, the Gaussian engine,
or both; with ``Engine.BOTH`` the two values must agree to 1e-9 relative and
the Fock value is returned (the Gaussian one when the Fock truncation is
infeasible).
"""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from . import gaussian
from .fock import DEFAULT_TOL, CutoffExceeded, build_state, default_max_pairs, pair_cutoff
from .moments import (
    IntensityMoments,
    MomentTable,
    QuadratureForm,
    SqueezingReport,
    intensity_moments,
    number_combo_variance,
    quad_snl,
    quad_variance,
    second_moment_table,
    squeezing_db,
)
from .params import SqueezeParams, make_params

ENGINE_RTOL = 1e-9
ENGINE_ATOL = 1e-12
CRITERION_BOUND = 1.0
DEFAULT_THETA_POINTS = 201
PRESCAN_POINTS = 64
PRESCAN_START = 1e-3

# test hook: relative skew applied to Gaussian values before reconciliation
ENGINE_SKEW_ENV = "C3MSV_TEST_ENGINE_SKEW"

SQRT2 = math.sqrt(2.0)


class Engine(enum.Enum):
    FOCK = "fock"
    GAUSSIAN = "gaussian"
    BOTH = "both"


class EngineMismatch(RuntimeError):
    """The Fock and Gaussian engines disagree beyond tolerance."""


class NoInteriorMinimum(RuntimeError):
    """The coarse pre-scan found its minimum on the boundary of the range."""


# -- engine plumbing ---------------------------------------------------------


@lru_cache(maxsize=2)
def _fock_state(params: SqueezeParams, tol: float):
    # truncate on the second-moment tail: variances weight the discarded
    # pairs by m^2, so a pure probability cutoff would bias them
    return build_state(params, tol, moment_order=2)


@lru_cache(maxsize=256)
def _fock_intensity(params: SqueezeParams, tol: float) -> IntensityMoments:
    return intensity_moments(_fock_state(params, tol))


@lru_cache(maxsize=256)
def _fock_table(params: SqueezeParams, tol: float) -> MomentTable:
    return second_moment_table(_fock_state(params, tol))


def _skew() -> float:
    value = os.environ.get(ENGINE_SKEW_ENV)
    return float(value) if value else 0.0


def reconcile(name: str, fock_value: float, gauss_value: float,
              rtol: float = ENGINE_RTOL, atol: float = ENGINE_ATOL) -> float:
    """Return the Fock value after checking it against the Gaussian one."""
    gauss_value = gauss_value * (1.0 + _skew())
    diff = abs(fock_value - gauss_value)
    if diff > max(atol, rtol * max(abs(fock_value), abs(gauss_value))):
        raise EngineMismatch(
            f"{name}: fock {float(fock_value)!r} vs gaussian {float(gauss_value)!r} (|diff| {diff:.3g})"
        )
    return fock_value


def _evaluate(name: str, params: SqueezeParams, engine: Engine, tol: float,
              from_fock: Callable[[SqueezeParams, float], float],
              from_gauss: Callable[[], float]) -> float:
    engine = Engine(engine)
    if engine is Engine.GAUSSIAN:
        return from_gauss()
    try:
        value = from_fock(params, tol)
    except CutoffExceeded:
        if engine is Engine.FOCK:
            raise
        return from_gauss()
    if engine is Engine.FOCK:
        return value
    return reconcile(name, value, from_gauss())


def fock_feasible(params: SqueezeParams, tol: float = DEFAULT_TOL) -> bool:
    try:
        return pair_cutoff(params, tol, moment_order=2) <= default_max_pairs()
    except CutoffExceeded:
        return False


def quad_variance_of(params: SqueezeParams, form: QuadratureForm,
                     engine: Engine = Engine.BOTH, tol: float = DEFAULT_TOL) -> float:
    return _evaluate(
        "quadrature variance", params, engine, tol,
        lambda p, t: quad_variance(_fock_table(p, t), form),
        lambda: gaussian.quad_variance_g(params, form),
    )


def number_variance_of(params: SqueezeParams, coeffs: Sequence[float],
                       engine: Engine = Engine.BOTH, tol: float = DEFAULT_TOL) -> float:
    return _evaluate(
        "intensity variance", params, engine, tol,
        lambda p, t: number_combo_variance(_fock_intensity(p, t), *coeffs),
        lambda: gaussian.intensity_variance_g(params, *coeffs),
    )


def mean_photons_of(params: SqueezeParams, engine: Engine = Engine.BOTH,
                    tol: float = DEFAULT_TOL) -> np.ndarray:
    return np.array([
        _evaluate(
            f"<n_{mode}>", params, engine, tol,
            lambda p, t, j=j: float(_fock_intensity(p, t).means[j]),
            lambda j=j: float(gaussian.mean_photon_numbers(params)[j]),
        )
        for j, mode in enumerate("abc")
    ])


def number_squeezing(params: SqueezeParams, coeffs: Sequence[float],
                     engine: Engine = Engine.BOTH, tol: float = DEFAULT_TOL) -> SqueezingReport:
    variance = number_variance_of(params, coeffs, engine, tol)
    means = mean_photons_of(params, engine, tol)
    snl = float(sum(c * c * n for c, n in zip(coeffs, means)))
    return squeezing_db(variance, snl)


def quad_squeezing(params: SqueezeParams, form: QuadratureForm,
                   engine: Engine = Engine.BOTH, tol: float = DEFAULT_TOL) -> SqueezingReport:
    return squeezing_db(quad_variance_of(params, form, engine, tol), quad_snl(form))


# -- entanglement criterion --------------------------------------------------


def criterion_forms(j: int) -> tuple[QuadratureForm, QuadratureForm]:
    """(U_j, V_j) for j = 1, 2, 3: weight 2 on mode j, -sqrt2 (X) or +sqrt2 (P)
    on the other two."""
    if j not in (1, 2, 3):
        raise ValueError(f"criterion index must be 1, 2 or 3, got {j}")
    u = [-SQRT2] * 3
    v = [SQRT2] * 3
    u[j - 1] = 2.0
    v[j - 1] = 2.0
    return QuadratureForm.x(*u), QuadratureForm.p(*v)


@dataclass(frozen=True)
class CriterionReport:
    p1: float
    p2: float
    p3: float
    violated1: bool = field(init=False)
    violated2: bool = field(init=False)
    violated3: bool = field(init=False)
    certified: bool = field(init=False)

    def __post_init__(self):
        flags = [p < CRITERION_BOUND for p in self.products]
        object.__setattr__(self, "violated1", flags[0])
        object.__setattr__(self, "violated2", flags[1])
        object.__setattr__(self, "violated3", flags[2])
        object.__setattr__(self, "certified", any(flags))

    @property
    def products(self) -> tuple[float, float, float]:
        return (self.p1, self.p2, self.p3)

    @property
    def margins(self) -> tuple[float, float, float]:
        """1 - p_j; positive where the inequality is violated."""
        return tuple(CRITERION_BOUND - p for p in self.products)


def criterion_product(params: SqueezeParams, j: int, engine: Engine = Engine.BOTH,
                      tol: float = DEFAULT_TOL) -> float:
    u, v = criterion_forms(j)
    return quad_variance_of(params, u, engine, tol) * quad_variance_of(params, v, engine, tol)


def criterion(params: SqueezeParams, engine: Engine = Engine.BOTH,
              tol: float = DEFAULT_TOL) -> CriterionReport:
    """Products <(dU_j)^2><(dV_j)^2>; any product below 1 certifies genuine
    tripartite entanglement."""
    return CriterionReport(*(criterion_product(params, j, engine, tol) for j in (1, 2, 3)))


def uncertainty_product(params: SqueezeParams, h1: float, h2: float, h3: float,
                        engine: Engine = Engine.BOTH,
                        tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """(Var U * Var V, (h1^2 + h2^2 + h3^2)^2 / 16) for U = sum h X, V = sum h P."""
    lhs = (quad_variance_of(params, QuadratureForm.x(h1, h2, h3), engine, tol)
           * quad_variance_of(params, QuadratureForm.p(h1, h2, h3), engine, tol))
    bound = (h1 * h1 + h2 * h2 + h3 * h3) ** 2 / 16.0
    return lhs, bound


# -- scans -------------------------------------------------------------------

AXIS_NAMES = ("r1", "r2", "theta1", "theta2")


@dataclass(frozen=True)
class Axis:
    name: str
    start: float
    stop: float
    count: int

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise ValueError(f"axis name must be one of {AXIS_NAMES}, got {self.name!r}")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)) or not self.start < self.stop:
            raise ValueError(f"axis {self.name}: need finite start < stop, got {self.start}, {self.stop}")
        if int(self.count) != self.count or self.count < 2:
            raise ValueError(f"axis {self.name}: count must be an integer >= 2, got {self.count}")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, int(self.count))


# default sweep ranges; the r1 range reaches past the intensity-squeezing
# minimum of every r2 row in [0.05, 1.5] (the minimizer sits near r1 = 4.7
# at r2 = 0.05)
DEFAULT_AXES = {
    "r1": (0.05, 6.0, 120),
    "r2": (0.05, 1.5, 30),
    "theta1": (0.0, 2 * math.pi, DEFAULT_THETA_POINTS),
    "theta2": (0.0, 2 * math.pi, DEFAULT_THETA_POINTS),
}


def default_axis(name: str) -> Axis:
    if name not in DEFAULT_AXES:
        raise ValueError(f"axis name must be one of {AXIS_NAMES}, got {name!r}")
    return Axis(name, *DEFAULT_AXES[name])


@dataclass(frozen=True)
class NumberObservable:
    coeffs: tuple[float, float, float]
    kind: str = "db"  # or "variance"


@dataclass(frozen=True)
class QuadObservable:
    form: QuadratureForm
    kind: str = "db"  # or "variance"


@dataclass(frozen=True)
class CriterionObservable:
    index: int


@dataclass(frozen=True)
class UncertaintyObservable:
    h: tuple[float, float, float] = (1.0, 1.0, 1.0)


Observable = Union[NumberObservable, QuadObservable, CriterionObservable, UncertaintyObservable]


def evaluate_observable(params: SqueezeParams, observable: Observable,
                        engine: Engine = Engine.BOTH, tol: float = DEFAULT_TOL) -> float:
    if isinstance(observable, NumberObservable):
        if observable.kind == "variance":
            return number_variance_of(params, observable.coeffs, engine, tol)
        return number_squeezing(params, observable.coeffs, engine, tol).db
    if isinstance(observable, QuadObservable):
        if observable.kind == "variance":
            return quad_variance_of(params, observable.form, engine, tol)
        return quad_squeezing(params, observable.form, engine, tol).db
    if isinstance(observable, CriterionObservable):
        return criterion_product(params, observable.index, engine, tol)
    if isinstance(observable, UncertaintyObservable):
        return uncertainty_product(params, *observable.h, engine=engine, tol=tol)[0]
    raise TypeError(f"unknown observable {observable!r}")


@dataclass(frozen=True)
class ScanSpec:
    axis1: Axis
    axis2: Axis
    observable: Observable
    fixed: Mapping[str, float] = field(default_factory=dict)
    engine: Engine = Engine.GAUSSIAN
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.axis1.name == self.axis2.name:
            raise ValueError(f"scan axes must differ, both are {self.axis1.name!r}")
        unknown = set(self.fixed) - set(AXIS_NAMES)
        if unknown:
            raise ValueError(f"unknown fixed parameters {sorted(unknown)}")


@dataclass(frozen=True, eq=False)
class ScanResult:
    spec: ScanSpec
    axis1_values: np.ndarray
    axis2_values: np.ndarray
    values: np.ndarray  # shape (len(axis1), len(axis2))

    def rows(self):
        """(axis1, axis2, value) in row-major order."""
        for i, x in enumerate(self.axis1_values):
            for j, y in enumerate(self.axis2_values):
                yield float(x), float(y), float(self.values[i, j])


def scan(spec: ScanSpec) -> ScanResult:
    """Evaluate the observable on the axis1 x axis2 grid, row-major.

    Points are evaluated sequentially in a fixed order, so the output does
    not depend on scheduling.
    """
    base = {"r1": 0.0, "r2": 0.0, "theta1": 0.0, "theta2": 0.0}
    base.update(spec.fixed)
    xs, ys = spec.axis1.values, spec.axis2.values
    values = np.empty((xs.size, ys.size))
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            point = dict(base, **{spec.axis1.name: float(x), spec.axis2.name: float(y)})
            params = make_params(point["r1"], point["r2"], point["theta1"], point["theta2"])
            values[i, j] = evaluate_observable(params, spec.observable, spec.engine, spec.tol)
    return ScanResult(spec, xs, ys, values)


def theta_grid_scan(r1: float, r2: float, observable: Observable,
                    points: int = DEFAULT_THETA_POINTS,
                    engine: Engine = Engine.GAUSSIAN) -> ScanResult:
    """Scan over (theta1, theta2) in [0, 2pi]^2 at fixed magnitudes."""
    return scan(ScanSpec(
        Axis("theta1", 0.0, 2 * math.pi, points),
        Axis("theta2", 0.0, 2 * math.pi, points),
        observable,
        fixed={"r1": r1, "r2": r2},
        engine=engine,
    ))


def violation_fraction(r1: float, r2: float, points: int = DEFAULT_THETA_POINTS,
                       index: int = 2, engine: Engine = Engine.GAUSSIAN) -> float:
    """Fraction of the theta grid where criterion product ``index`` is below 1."""
    grid = theta_grid_scan(r1, r2, CriterionObservable(index), points, engine)
    return float(np.mean(grid.values < CRITERION_BOUND))


def theta2_spread(r1: float, r2: float, form: QuadratureForm,
                  points: int = DEFAULT_THETA_POINTS,
                  engine: Engine = Engine.GAUSSIAN) -> tuple[np.ndarray, np.ndarray]:
    """For each theta1 on the grid, max - min over theta2 of dB(form).

    Small values mark theta1 where the squeezing is (nearly) independent of
    theta2; no exact flatness is assumed.
    """
    grid = theta_grid_scan(r1, r2, QuadObservable(form), points, engine)
    return grid.axis1_values, grid.values.max(axis=1) - grid.values.min(axis=1)


# -- intensity-squeezing minimum ----------------------------------------------


@dataclass(frozen=True)
class MinResult:
    r1_star: float
    db_star: float
    evaluations: int
    bracket: tuple[float, float] = (math.nan, math.nan)


def golden_section(f: Callable[[float], float], a: float, b: float, tol: float):
    """Minimize a unimodal f on [a, b] until the bracket is narrower than tol.

    Returns (x, f(x), number of evaluations of f).
    """
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    evals = 2
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
        evals += 1
    x = 0.5 * (a + b)
    return x, f(x), evals + 1


def min_squeezing_over_r1(r2: float, r1_max: float = 8.0, tol: float = 1e-6,
                          engine: Engine = Engine.BOTH) -> MinResult:
    """Minimum over r1 of dB(n_b - n_a) at fixed r2, with its location.

    A 64-point log-spaced pre-scan over [1e-3, r1_max] brackets the minimum,
    then golden-section search narrows it to ``tol``.  Phases do not enter
    intensity observables and are set to zero.
    """
    if not (math.isfinite(r2) and r2 > 0.0):
        raise ValueError(f"r2 must be > 0 (r2 = 0 is a TMSV with no interior optimum), got {r2}")
    if not (math.isfinite(r1_max) and r1_max > PRESCAN_START):
        raise ValueError(f"r1_max must exceed {PRESCAN_START}, got {r1_max}")
    if not tol > 0.0:
        raise ValueError(f"tol must be > 0, got {tol}")

    def objective(r1: float) -> float:
        return number_squeezing(make_params(r1, r2), (-1.0, 1.0, 0.0), engine).db

    grid = np.geomspace(PRESCAN_START, r1_max, PRESCAN_POINTS)
    values = np.array([objective(float(x)) for x in grid])
    i = int(np.argmin(values))
    if i == 0 or i == grid.size - 1:
        raise NoInteriorMinimum(
            f"pre-scan minimum of dB(n_b - n_a) at r2={r2} lies on the boundary "
            f"r1={grid[i]:.6g}; widen r1_max"
        )
    lo, hi = float(grid[i - 1]), float(grid[i + 1])
    r1_star, db_star, evals = golden_section(objective, lo, hi, tol)
    return MinResult(r1_star, db_star, grid.size + evals, (lo, hi))
