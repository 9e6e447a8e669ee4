from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from odebound import (
    BoundCurve,
    EtaSeries,
    NonConvergenceError,
    SampledFn,
    TimeGrid,
    ToleranceConfig,
    approximate_bound_pipeline,
    check_convergence,
    linear_model,
    loose_bound,
    oracle,
    perturbed_oracle,
    select_order,
    tight_bound,
)

REFERENCE_TOL = ToleranceConfig(eps_abs_P=1e-6, eps_rel_P=1e-3, eps_abs_J=1e-7, eps_rel_J=1e-4)


class ConstantOrders:
    """Minimal series stand-in with constant orders on [0, 1]."""

    def __init__(self, *levels):
        self.grid = TimeGrid(0.0, 1.0, 11)
        self._orders = [np.full(11, float(c)) for c in levels]
        self.surrogate = SimpleNamespace(v=SampledFn(self.grid, 0.0))

    def raw(self, j):
        return self._orders[j]

    def order(self, j):
        return SampledFn(self.grid, self._orders[j])


@pytest.fixture(scope="module")
def population_series():
    from odebound import preset_population

    model = preset_population()
    ref = oracle.solve(model, model.grid())
    out = {}
    for scale in (1e-1, 1e-4, 1e-5):
        s = perturbed_oracle(model, scale=scale, reference=ref)
        out[scale] = (model, s, EtaSeries(model, s), ref.u.values - s.v.values)
    return out


def test_tolerance_pairs_must_nest():
    with pytest.raises(ValueError):
        ToleranceConfig(eps_abs_P=1e-7, eps_abs_J=1e-6)
    with pytest.raises(ValueError):
        ToleranceConfig(eps_rel_J=0.0)
    assert REFERENCE_TOL == ToleranceConfig()


def test_bound_curve_validation():
    g = TimeGrid(0, 1, 3)
    with pytest.raises(ValueError):
        BoundCurve("loose", g, [0.0, -1.0, 0.0], J=0)
    curve = BoundCurve("exact", g, [1.0, 2.0, 3.0], J=0, valid=[True, True, False])
    assert np.isnan(curve.values[2]) and not curve.fully_valid
    assert curve.coverage(np.array([1.0, 2.5, 99.0])) == 0.5


def test_loose_bound_of_exact_surrogate_is_zero(unit_grid):
    from odebound import Surrogate

    model = linear_model(1.0)
    t = unit_grid.t
    s = Surrogate.from_functions(unit_grid, lambda t: np.exp(-t), lambda t: -np.exp(-t))
    series = EtaSeries(model, s)
    assert np.max(loose_bound(series, 3).values) < 1e-12


def test_loose_j0_is_abs_eta0(population_series):
    _, _, series, _ = population_series[1e-4]
    assert np.array_equal(loose_bound(series, 0).values, np.abs(series.raw(0)))


def test_linear_loose_bound_covers_error(unit_grid):
    model = linear_model(2.0)
    ref = oracle.solve(model, unit_grid)
    s = perturbed_oracle(model, unit_grid, 1e-3, reference=ref)
    series = EtaSeries(model, s)
    err = np.abs(ref.u.values - s.v.values)
    for J in range(4):
        b = loose_bound(series, J).values
        assert np.array_equal(b, np.abs(series.raw(0)))
        # trapezoid bias is O(h^2) relative to the error
        assert np.all(b >= err - 100 * unit_grid.h**2 * np.max(err))


@pytest.mark.parametrize("J", range(5))
def test_tight_p0_is_loose_bitwise(population_series, J):
    _, _, series, _ = population_series[1e-1]
    assert np.array_equal(tight_bound(series, 0, J).values, loose_bound(series, J).values)


def test_tight_p_equals_j(population_series):
    _, _, series, _ = population_series[1e-1]
    assert np.array_equal(tight_bound(series, 3, 3).values, np.abs(series.partial_sum(3)))


@given(P=st.integers(0, 5), extra=st.integers(0, 3))
def test_tight_below_loose(population_series, P, extra):
    _, _, series, _ = population_series[1e-1]
    J = P + extra
    tight, loose = tight_bound(series, P, J).values, loose_bound(series, J).values
    assert np.all(tight <= loose * (1 + 1e-14))


def test_loose_nondecreasing_in_J(population_series):
    _, _, series, _ = population_series[1e-1]
    curves = [loose_bound(series, J).values for J in range(6)]
    assert all(np.all(b >= a) for a, b in zip(curves, curves[1:]))


def test_p_greater_than_j_rejected(population_series):
    _, _, series, _ = population_series[1e-1]
    with pytest.raises(ValueError):
        tight_bound(series, 2, 1)


# -- order selection ---------------------------------------------------------------


def test_select_order_exact_surrogate():
    assert select_order(ConstantOrders(0.0, 0.0), REFERENCE_TOL, "J") == 0


def test_select_order_linear(unit_grid):
    model = linear_model(1.0)
    ref = oracle.solve(model, unit_grid)
    big = EtaSeries(model, perturbed_oracle(model, unit_grid, 1e-2, reference=ref))
    small = EtaSeries(model, perturbed_oracle(model, unit_grid, 1e-9, reference=ref))
    assert select_order(big, REFERENCE_TOL, "J") == 1
    assert select_order(small, REFERENCE_TOL, "J") == 0


def test_population_low_error_selects_low_order(population_series):
    _, _, series, _ = population_series[1e-4]
    assert select_order(series, REFERENCE_TOL, "J") <= 1


@given(factor=st.floats(1.0, 1e4))
def test_selection_monotone_in_tolerance(population_series, factor):
    _, _, series, _ = population_series[1e-1]
    tol = REFERENCE_TOL
    looser = ToleranceConfig(tol.eps_abs_P * factor, tol.eps_rel_P * factor, tol.eps_abs_J * factor, tol.eps_rel_J * factor)
    for which in ("P", "J"):
        assert select_order(series, looser, which) <= select_order(series, tol, which)


def test_non_convergence_carries_best_order():
    series = ConstantOrders(1.0, 0.5, 0.4, 0.3)
    tol = ToleranceConfig(max_order=3)
    with pytest.raises(NonConvergenceError) as err:
        select_order(series, tol, "J")
    assert err.value.best_order == 3
    assert err.value.margin == pytest.approx(0.3 - 1e-7 - 1e-4 * 0.0, rel=1e-12)


def test_check_convergence_examples():
    assert check_convergence(ConstantOrders(5.0), 0)
    assert check_convergence(ConstantOrders(1.0, 0.1), 1)
    assert not check_convergence(ConstantOrders(0.1, 1.0), 1)
    assert check_convergence(ConstantOrders(0.1, 0.0), 1)


# -- pipeline --------------------------------------------------------------------


def test_pipeline_exact_surrogate():
    series = ConstantOrders(*([0.0] * 14))
    curve = approximate_bound_pipeline(None, None, REFERENCE_TOL, series=series)
    assert not np.any(curve.values)
    assert (curve.P, curve.J, curve.converged) == (0, 1, True)


def test_pipeline_low_error_population(population_series):
    model, s, series, err = population_series[1e-5]
    curve = approximate_bound_pipeline(model, s, REFERENCE_TOL, series)
    assert (curve.P, curve.J, curve.converged) == (0, 1, True)
    assert curve.diagnostics["convergence_at_J"]
    assert len(curve.diagnostics["mean_abs"]) == 2


def test_pipeline_flags_divergent_series(cosmology_reference):
    model, ref = cosmology_reference
    s = perturbed_oracle(model, scale=3.0, reference=ref)
    curve = approximate_bound_pipeline(model, s, ToleranceConfig(max_order=8))
    assert not curve.converged
    assert curve.diagnostics["notes"]
