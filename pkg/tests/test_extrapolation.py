import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sc2adapt.extrapolation import (FitError, FitResult, SeriesPoint, evaluate_fit, fit_band,
                                    fit_continuum, fit_thermodynamic, weighted_lstsq)

VOLUMES = [8, 10, 12, 14, 16]
COUPLINGS = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0]


def test_constant_series():
    fit = fit_thermodynamic([(n, -0.2, 0.01) for n in VOLUMES])
    assert fit.limit == pytest.approx(-0.2, abs=1e-12)
    assert fit.uncertainty == pytest.approx(0.0, abs=1e-12)


def test_inverse_law_recovered():
    fit = fit_thermodynamic([(n, 0.3 + 1.7 / n) for n in VOLUMES])
    assert fit.limit == pytest.approx(0.3, abs=1e-10)
    assert fit.details["spread"] == pytest.approx(0.0, abs=1e-10)


def test_quadratic_inverse_law_recovered():
    fit = fit_thermodynamic([(n, -0.1 + 0.4 / n - 2.0 / n**2, 1e-3) for n in VOLUMES])
    assert fit.limit == pytest.approx(-0.1, abs=1e-10)
    assert fit.coefficients == pytest.approx([-0.1, 0.4, -2.0], abs=1e-8)
    assert max(abs(r) for r in fit.residuals) < 1e-12


def test_exact_quadratic_continuum():
    fit = fit_continuum([(g, -0.16 + 0.05 * g - 0.12 * g**2, 0.002) for g in COUPLINGS])
    assert fit.limit == pytest.approx(-0.16, abs=1e-10)
    assert np.allclose(evaluate_fit(fit, COUPLINGS), [-0.16 + 0.05 * g - 0.12 * g**2 for g in COUPLINGS])


def test_exponential_family():
    pts = [(n, -0.25 + 0.3 * np.exp(-n / 3.0)) for n in [4, 6, 8, 10, 12]]
    fit = fit_thermodynamic(pts, family="exponential")
    assert fit.limit == pytest.approx(-0.25, abs=1e-8)
    assert fit.coefficients[2] == pytest.approx(3.0, rel=1e-6)
    assert evaluate_fit(fit, [6.0])[0] == pytest.approx(pts[1][1], abs=1e-10)


def test_too_few_points():
    with pytest.raises(FitError):
        fit_continuum([(1.0, -0.2)])
    with pytest.raises(FitError):
        fit_continuum([(0.5, -0.2), (1.0, -0.25), (0.7, -0.21)])
    with pytest.raises(FitError):
        fit_thermodynamic([(8, 1.0), (10, 1.1)])
    with pytest.raises(FitError):
        fit_thermodynamic([(8, 1.0), (10, 1.1), (12, 1.2)], family="exponential")
    with pytest.raises(ValueError):
        fit_thermodynamic([(8, 1.0)] * 3, family="cubic")


def test_point_validation():
    with pytest.raises(ValueError):
        SeriesPoint(1.0, 2.0, -0.1)
    with pytest.raises(ValueError):
        fit_continuum([(0.5, 1.0), (0.5, 1.1), (0.7, 1.0), (0.9, 1.2)])


def test_zero_errors_mean_ordinary_least_squares(rng):
    A = np.vander(np.linspace(0.5, 1.0, 6), 3, increasing=True)
    y = rng.standard_normal(6)
    ols = np.linalg.lstsq(A, y, rcond=None)[0]
    coef, _, _ = weighted_lstsq(A, y, np.zeros(6))
    assert np.allclose(coef, ols)
    coef, _, _ = weighted_lstsq(A, y, np.full(6, 0.3))
    assert np.allclose(coef, ols)


def test_larger_error_reduces_leverage(rng):
    ys = rng.normal(-0.2, 0.01, len(COUPLINGS))
    base_err = np.full(len(COUPLINGS), 0.01)

    def influence(err_k):
        err = base_err.copy()
        err[0] = err_k
        lo = fit_continuum([(g, y, e) for g, y, e in zip(COUPLINGS, ys, err)]).limit
        bumped = ys.copy()
        bumped[0] += 1e-3
        hi = fit_continuum([(g, y, e) for g, y, e in zip(COUPLINGS, bumped, err)]).limit
        return abs(hi - lo)

    values = [influence(e) for e in (0.005, 0.01, 0.02, 0.1)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_band_and_serialization():
    fit = fit_continuum([(g, -0.16 + 0.1 * g + 0.01 * np.sin(7 * g), 0.003) for g in COUPLINGS])
    band = fit_band(fit, [0.0, 0.5, 1.0])
    assert band[0] == pytest.approx(fit.uncertainty)
    assert np.all(band > 0)
    assert FitResult.from_dict(fit.to_dict()) == fit


y_lists = st.lists(st.floats(-1, 1, allow_nan=False), min_size=6, max_size=6)


@settings(max_examples=60, deadline=None)
@given(y_lists, st.floats(-5, 5), st.floats(0.1, 10))
def test_continuum_affine_equivariance(ys, shift, scale):
    pts = [(g, y, 0.01) for g, y in zip(COUPLINGS, ys)]
    base = fit_continuum(pts)
    moved = fit_continuum([(g, y + shift, e) for g, y, e in pts])
    assert moved.limit == pytest.approx(base.limit + shift, abs=1e-9)
    assert moved.uncertainty == pytest.approx(base.uncertainty, abs=1e-9)
    scaled = fit_continuum([(g, y * scale, e * scale) for g, y, e in pts])
    assert scaled.limit == pytest.approx(base.limit * scale, abs=1e-9)
    assert scaled.uncertainty == pytest.approx(base.uncertainty * scale, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(y_lists.map(lambda ys: [ys[0]] + ys[1:4]), st.floats(-5, 5), st.floats(0.1, 10))
def test_thermodynamic_affine_equivariance(ys, shift, scale):
    pts = [(n, y) for n, y in zip([10, 12, 14, 16], ys)]
    base = fit_thermodynamic(pts)
    moved = fit_thermodynamic([(n, y + shift) for n, y in pts])
    assert moved.limit == pytest.approx(base.limit + shift, abs=1e-8)
    scaled = fit_thermodynamic([(n, y * scale) for n, y in pts])
    assert scaled.limit == pytest.approx(base.limit * scale, abs=1e-8)
    assert scaled.uncertainty == pytest.approx(base.uncertainty * scale, rel=1e-8, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_exact_model_recovery(c0, c1, c2):
    cont = fit_continuum([(g, c0 + c1 * g + c2 * g**2, 0.01) for g in COUPLINGS])
    assert cont.limit == pytest.approx(c0, abs=1e-10)
    thermo = fit_thermodynamic([(n, c0 + c1 / n + c2 / n**2) for n in VOLUMES])
    assert thermo.limit == pytest.approx(c0, abs=1e-10)
