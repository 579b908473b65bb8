import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from c3msv import CutoffExceeded, Engine, EngineMismatch, QuadratureForm, ScanSpec, criterion, make_params, scan, uncertainty_product
from c3msv.analysis import (
    ENGINE_SKEW_ENV,
    Axis,
    CriterionObservable,
    CriterionReport,
    NoInteriorMinimum,
    NumberObservable,
    QuadObservable,
    criterion_forms,
    golden_section,
    min_squeezing_over_r1,
    number_squeezing,
    quad_variance_of,
    reconcile,
    theta2_spread,
    theta_grid_scan,
    violation_fraction,
)


def closed_form_db(r1, r2):
    """dB(n_b - n_a): on the eigenstate n_b - n_a = n_c, so its variance is
    thermal, n_c (1 + n_c); the shot-noise limit is n_a + n_b."""
    r = math.hypot(r1, r2)
    s = math.sinh(r) ** 2
    nc, na = (r2 / r) ** 2 * s, (r1 / r) ** 2 * s
    return 10 * math.log10(nc * (1 + nc) / (na + s))


def test_symmetric_criterion_value():
    rep = criterion(make_params(0.5, 0.5, math.pi, math.pi))
    assert rep.p2 == pytest.approx(4 * math.exp(-4 * math.sqrt(0.5)), rel=1e-10)
    assert rep.p2 == pytest.approx(0.236422986247825, rel=1e-10)
    assert rep.certified and rep.violated2
    assert not rep.violated1 and not rep.violated3


def test_report_flags():
    rep = CriterionReport(1.2, 0.999, 1.0)
    assert (rep.violated1, rep.violated2, rep.violated3) == (False, True, False)
    assert rep.certified
    assert rep.margins == pytest.approx((-0.2, 0.001, 0.0))
    assert not CriterionReport(1.0, 1.0, 1.0).certified


def test_criterion_forms():
    u, v = criterion_forms(1)
    assert u.weights == (2.0, -math.sqrt(2), -math.sqrt(2), 0.0, 0.0, 0.0)
    assert v.weights == (0.0, 0.0, 0.0, 2.0, math.sqrt(2), math.sqrt(2))
    with pytest.raises(ValueError):
        criterion_forms(4)


def test_reconcile_tolerances():
    assert reconcile("x", 1.0, 1.0 + 5e-10) == 1.0
    assert reconcile("x", 0.0, 5e-13) == 0.0
    with pytest.raises(EngineMismatch, match="x"):
        reconcile("x", 1.0, 1.0 + 5e-9)


def test_skew_hook_triggers_mismatch(monkeypatch):
    monkeypatch.setenv(ENGINE_SKEW_ENV, "1e-6")
    with pytest.raises(EngineMismatch):
        quad_variance_of(make_params(0.31, 0.27, 0.1, 0.2), QuadratureForm.x(1, 0, 0))


@pytest.mark.parametrize("engine", list(Engine))
def test_engines_agree_on_frozen_value(engine):
    form = QuadratureForm.x(1, 1, 1)
    assert quad_variance_of(make_params(0.5, 0.5), form, engine) == pytest.approx(0.2653387954478375, rel=1e-11)


def test_fock_only_reports_infeasible(monkeypatch):
    monkeypatch.setenv("C3MSV_MAX_PAIRS", "50")
    p = make_params(2.0, 1.0)
    with pytest.raises(CutoffExceeded):
        quad_variance_of(p, QuadratureForm.x(1, 0, 0), Engine.FOCK)
    # both falls back to the Gaussian engine
    value = quad_variance_of(p, QuadratureForm.x(1, 0, 0), Engine.BOTH)
    assert value == quad_variance_of(p, QuadratureForm.x(1, 0, 0), Engine.GAUSSIAN)


@pytest.mark.parametrize("seed", range(5))
def test_uncertainty_bound(seed):
    rng = np.random.default_rng(seed)
    p = make_params(*rng.uniform(0, 1.2, 2), *rng.uniform(0, 2 * math.pi, 2))
    h = rng.normal(size=3)
    lhs, bound = uncertainty_product(p, *h)
    assert bound == pytest.approx(np.sum(h ** 2) ** 2 / 16)
    assert lhs >= bound - 1e-12


def test_axis_validation():
    with pytest.raises(ValueError):
        Axis("r3", 0, 1, 3)
    with pytest.raises(ValueError):
        Axis("r1", 1, 0, 3)
    with pytest.raises(ValueError):
        Axis("r1", 0, 1, 1)
    with pytest.raises(ValueError):
        ScanSpec(Axis("r1", 0, 1, 2), Axis("r1", 0, 1, 2), CriterionObservable(2))


def test_scan_row_major_and_deterministic():
    spec = ScanSpec(Axis("r1", 0.1, 0.5, 3), Axis("r2", 0.1, 0.3, 2), NumberObservable((-1.0, 1.0, 0.0)))
    a, b = scan(spec), scan(spec)
    np.testing.assert_array_equal(a.values, b.values)
    rows = list(a.rows())
    expected = [(x, y) for x in (0.1, 0.3, 0.5) for y in (0.1, 0.3)]
    np.testing.assert_allclose([(x, y) for x, y, _ in rows], expected, rtol=1e-15)
    for x, y, v in rows:
        assert v == pytest.approx(closed_form_db(x, y), abs=1e-9)


def test_theta_grid_centering():
    grid = theta_grid_scan(0.5, 0.5, CriterionObservable(2), points=21)
    i, j = np.unravel_index(np.argmin(grid.values), grid.values.shape)
    assert (i, j) == (10, 10)
    assert grid.values[i, j] == pytest.approx(4 * math.exp(-4 * math.sqrt(0.5)), rel=1e-10)


def test_violation_fraction_range():
    f = violation_fraction(0.5, 0.5, points=41)
    assert 0.0 < f < 0.5


def test_theta2_spread_shape():
    thetas, spread = theta2_spread(0.7, 0.3, QuadratureForm.x(1, 1, 1), points=11)
    assert thetas.shape == spread.shape == (11,)
    assert np.all(spread >= 0)


def test_golden_section_quadratic():
    x, fx, evals = golden_section(lambda t: (t - 0.3) ** 2, 0.0, 1.0, 1e-8)
    assert x == pytest.approx(0.3, abs=1e-8)
    assert evals > 10


def test_min_search_matches_closed_form():
    ref = minimize_scalar(lambda r1: closed_form_db(r1, 0.5), bounds=(0.5, 6.0), method="bounded",
                          options={"xatol": 1e-10})
    res = min_squeezing_over_r1(0.5, engine=Engine.GAUSSIAN)
    assert res.r1_star == pytest.approx(ref.x, abs=1e-5)
    assert res.db_star == pytest.approx(ref.fun, abs=1e-9)
    assert res.bracket[0] < res.r1_star < res.bracket[1]


def test_min_search_rejects_boundary():
    with pytest.raises(NoInteriorMinimum):
        min_squeezing_over_r1(0.5, r1_max=1.0, engine=Engine.GAUSSIAN)


@pytest.mark.parametrize("r2", [0.0, -1.0, math.nan])
def test_min_search_rejects_r2(r2):
    with pytest.raises(ValueError):
        min_squeezing_over_r1(r2)


def test_large_r1_not_squeezed():
    db = number_squeezing(make_params(8.0, 0.5), (-1.0, 1.0, 0.0), Engine.GAUSSIAN).db
    assert db == pytest.approx(closed_form_db(8.0, 0.5), abs=1e-9)
    assert db > 0


def test_quad_observable_db():
    form = QuadratureForm.x(1, 1, 1)
    spec = ScanSpec(Axis("theta1", 0, math.pi, 2), Axis("theta2", 0, math.pi, 2), QuadObservable(form),
                    fixed={"r1": 0.5, "r2": 0.5})
    v = scan(spec).values[0, 0]
    assert v == pytest.approx(10 * math.log10(0.2653387954478375 / 0.75), abs=1e-10)


def test_vacuum_criterion_and_uncertainty():
    vac = make_params(0.0, 0.0)
    rep = criterion(vac)
    np.testing.assert_allclose(rep.products, (4.0, 4.0, 4.0), rtol=1e-14)
    assert not rep.certified
    lhs, bound = uncertainty_product(vac, 1, 1, 1)
    assert lhs == pytest.approx(0.5625, rel=1e-14) and bound == 0.5625


@pytest.mark.parametrize("t1, t2", [(0.3, 1.9), (2.5, 4.0), (math.pi, 0.1)])
def test_criterion_phase_reflection(t1, t2):
    a = criterion(make_params(0.6, 0.4, t1, t2))
    b = criterion(make_params(0.6, 0.4, 2 * math.pi - t1, 2 * math.pi - t2))
    np.testing.assert_allclose(a.products, b.products, rtol=1e-10)


def test_min_search_refinement_stable():
    coarse = min_squeezing_over_r1(0.5, tol=1e-6, engine=Engine.GAUSSIAN)
    fine = min_squeezing_over_r1(0.5, tol=1e-7, engine=Engine.GAUSSIAN)
    assert abs(coarse.r1_star - fine.r1_star) <= 1e-6


def test_min_search_degrades_with_r2():
    assert (min_squeezing_over_r1(0.3, engine=Engine.GAUSSIAN).db_star
            < min_squeezing_over_r1(0.6, engine=Engine.GAUSSIAN).db_star)


def test_min_search_near_tmsv_limit():
    res = min_squeezing_over_r1(1e-6, r1_max=40.0, engine=Engine.GAUSSIAN)
    assert math.isfinite(res.r1_star)
    assert res.db_star < -100
    assert res.db_star == pytest.approx(closed_form_db(res.r1_star, 1e-6), abs=1e-6)


def test_default_magnitude_axes_have_interior_minima():
    from c3msv.analysis import default_axis

    r1 = default_axis("r1")
    r2 = default_axis("r2")
    # same ranges, coarser sampling
    spec = ScanSpec(Axis("r1", r1.start, r1.stop, 40), Axis("r2", r2.start, r2.stop, 4),
                    NumberObservable((-1.0, 1.0, 0.0)))
    values = scan(spec).values
    idx = values.argmin(axis=0)
    assert np.all((idx > 0) & (idx < values.shape[0] - 1))
    with pytest.raises(ValueError):
        default_axis("r3")
