import numpy as np
import pytest
from hypothesis import given, strategies as st

from switchjump import (ConfigurationError, HybridModel, PeriodicFn, StructuralError,
                        constant_periodic, lorenz_model, reduce_time, validate_model)
from switchjump.levy import no_jumps
from switchjump.presets import _constant_finite_rates


def test_reduce_time_examples():
    assert reduce_time(0.0, 1.0) == 0.0
    assert reduce_time(2.5, 1.0) == pytest.approx(0.5)
    assert reduce_time(3.0, 1.5) == 0.0


def test_reduce_time_rejects_bad_period():
    with pytest.raises(ConfigurationError):
        reduce_time(1.0, 0.0)
    with pytest.raises(ConfigurationError):
        reduce_time(1.0, -2.0)


@given(st.floats(min_value=0.0, max_value=1e6, allow_nan=False),
       st.floats(min_value=1e-3, max_value=1e3, allow_nan=False))
def test_reduce_time_lands_in_period(t, theta):
    r = reduce_time(t, theta)
    assert 0.0 <= r < theta


@given(st.floats(min_value=0.0, max_value=1e3, allow_nan=False))
def test_periodic_wrapper_reduces_every_call(t):
    theta = 1.25
    f = PeriodicFn(theta, lambda s: np.sin(s) + s ** 2, name="probe")
    # every call is evaluated at its reduced representative, bit-exactly
    assert f(t) == f.fn(reduce_time(t, theta))
    assert f(t + theta) == f.fn(reduce_time(t + theta, theta))
    # adding a period changes the value only by float rounding of t + theta
    assert f(t + theta) == pytest.approx(f(t), rel=1e-9, abs=1e-9)


def test_validate_lorenz_preset_clean():
    report = validate_model(lorenz_model())
    assert report.ok and report.violations == []


def _toy(drift_period=1.0, sigma_shape=None):
    m, k = 2, 2
    shape = sigma_shape or (m, k)

    def zero_jump(t, x, i, u):
        return np.zeros(m)

    return HybridModel(
        dim_x=m, dim_bm=k, dim_mark=1,
        drift=PeriodicFn(drift_period, lambda t, x, i: np.zeros(m)),
        diffusion=PeriodicFn(1.0, lambda t, x, i: np.zeros(shape)),
        small_jump=PeriodicFn(1.0, zero_jump),
        large_jump=PeriodicFn(1.0, zero_jump),
        levy=no_jumps(dim_mark=1),
        rates=_constant_finite_rates(1.0, 2),
    )


def test_validate_names_bad_diffusion_shape():
    bad = _toy(sigma_shape=(2, 3))
    with pytest.raises(StructuralError, match="diffusion"):
        validate_model(bad)


def test_validate_rejects_period_mismatch():
    bad = _toy(drift_period=2.0)
    with pytest.raises(StructuralError, match="period"):
        validate_model(bad)


def test_validate_is_pure():
    model = lorenz_model()
    r1 = validate_model(model)
    r2 = validate_model(model)
    assert r1.violations == r2.violations and r1.assumptions == r2.assumptions


def test_constant_periodic_ignores_time():
    c = constant_periodic(np.array([3.0, 4.0]), period=2.0)
    assert np.array_equal(c(0.1), c(1.9))
