"""Tests for the built-in model presets."""

import math

import numpy as np
import pytest

from switchjump.errors import ConfigurationError
from switchjump.model import validate_model
from switchjump.presets import (
    PRESET_IDS,
    LemniscateParams,
    LorenzParams,
    get_preset,
    lemniscate_drift,
    lemniscate_invariant,
    lemniscate_lyapunov,
    lemniscate_model,
    lemniscate_potential,
    lemniscate_rates,
    lorenz_lyapunov,
    lorenz_model,
    preset_lyapunov,
    pure_switching_model,
    two_state_linear_model,
)
from switchjump.switching import check_Q1, check_Q2, check_Q3

ZETA3 = 1.2020569031595943


# --- registry -------------------------------------------------------------------

def test_all_presets_validate():
    for pid in PRESET_IDS:
        model = get_preset(pid)
        report = validate_model(model)
        assert report.ok, (pid, report.violations)


def test_unknown_preset_and_overrides():
    with pytest.raises(ConfigurationError):
        get_preset("does_not_exist")
    with pytest.raises(ConfigurationError):
        get_preset("lorenz_rs", not_a_param=3)
    with pytest.raises(ConfigurationError):
        get_preset("two_state_linear", mu=1.0)
    model = get_preset("lorenz_rs", noise_scale=0.2, n_regimes=4)
    assert model.rates.state_cap == 4
    assert np.allclose(np.asarray(model.diffusion(0.0, np.zeros(3), 1)),
                       0.2 * np.eye(3))


def test_preset_lyapunov_registry():
    for pid in ("lorenz_rs", "lemniscate_rs"):
        spec = preset_lyapunov(pid)
        assert spec.V is not None
    with pytest.raises(ConfigurationError):
        preset_lyapunov("two_state_linear")


# --- assumption checkers on presets ----------------------------------------------

def test_presets_satisfy_rate_assumptions():
    for pid in PRESET_IDS:
        spec = get_preset(pid).rates
        assert check_Q1(spec).passed, pid
        assert check_Q3(spec).passed, pid


def test_lemniscate_rates_grid_connectivity():
    spec = lemniscate_rates()
    probes = [np.array([1.0, 0.0]), np.array([0.5, 0.5])]
    assert check_Q2(spec, probes).passed
    assert check_Q1(spec).estimate == pytest.approx(ZETA3, abs=1e-6)
    assert check_Q3(spec).estimate == pytest.approx(math.pi ** 2 / 6.0, abs=1e-6)


def test_lemniscate_rates_vanish_at_origin():
    spec = lemniscate_rates()
    assert spec.q(np.zeros(2), 1, 2) == 0.0
    assert spec.q(np.array([0.5, 0.0]), 1, 2) == pytest.approx(0.5 / 8.0)
    assert spec.q(np.array([9.0, 0.0]), 1, 2) == pytest.approx(1.0 / 8.0)


# --- Lorenz ---------------------------------------------------------------------

def test_lorenz_params_validation():
    with pytest.raises(ConfigurationError):
        LorenzParams(mode="chaotic")
    with pytest.raises(ConfigurationError):
        LorenzParams(n_regimes=1)
    with pytest.raises(ConfigurationError):
        LorenzParams(theta=0.0)


def test_lorenz_classic_drift_value():
    model = lorenz_model(LorenzParams())
    b = np.asarray(model.drift(0.0, np.array([1.0, 2.0, 3.0]), 1))
    # (-10 + 20, 28 - 2 - 3, -8 + 2)
    assert b == pytest.approx([10.0, 23.0, -8.0 + 2.0])


def test_lorenz_periodic_mode_damping_bounds():
    params = LorenzParams(mode="periodic")
    for t in np.linspace(0.0, 1.0, 21):
        a = params.a(t)
        assert 2.0 <= a <= 4.0
        for i in range(1, params.n_regimes + 1):
            al, be, mu = params.coeffs(t, i)
            assert al == be == mu
            assert mu <= a + 1e-12  # keeps the Lyapunov cross terms signed
            assert al >= 1.0        # damping bounded below


def test_lorenz_lyapunov_identity_exact():
    for params in (LorenzParams(), LorenzParams(mode="periodic")):
        spec = lorenz_lyapunov(params)
        rng = np.random.default_rng(3)
        for _ in range(10):
            t = float(rng.uniform(0, 1))
            x = rng.normal(scale=5.0, size=3)
            v = spec.V(t, x, 1)
            w = np.asarray(spec.W(t, x))
            grad = spec.V.gradient(t, x, 1)
            assert float(w @ grad) == pytest.approx(v, rel=1e-12, abs=1e-12)


# --- lemniscate -----------------------------------------------------------------

def test_lemniscate_invariant_zero_on_curve():
    # (+-2, 0) and the origin lie on the lemniscate I = 0
    assert lemniscate_invariant(np.array([2.0, 0.0])) == pytest.approx(0.0)
    assert lemniscate_invariant(np.array([-2.0, 0.0])) == pytest.approx(0.0)
    assert lemniscate_invariant(np.zeros(2)) == 0.0
    # interior of the right lobe is below the level set
    assert lemniscate_invariant(np.array([1.0, 0.0])) < 0.0


def test_lemniscate_drift_descends_potential():
    # <b, V'(I) grad I> = -|V'(I) grad I|^2: the rotation is orthogonal
    from switchjump.presets import _f_of_I, _invariant_gradient

    rng = np.random.default_rng(8)
    for _ in range(20):
        x = rng.normal(scale=2.0, size=2)
        b = lemniscate_drift(x)
        gradV = _f_of_I(lemniscate_invariant(x)) * _invariant_gradient(x)
        assert float(b @ gradV) == pytest.approx(-float(gradV @ gradV), rel=1e-10,
                                                 abs=1e-12)


def test_lemniscate_potential_properties():
    assert lemniscate_potential(0.0) == 0.0
    for I in (1.0, -1.0):
        assert lemniscate_potential(I) == pytest.approx(1.0 / (2.0 * 2.0 ** 0.75))
    assert lemniscate_potential(100.0) > lemniscate_potential(10.0) > 0.0


def test_lemniscate_lyapunov_gradient_matches_fd():
    spec = lemniscate_lyapunov()
    x = np.array([0.8, -0.4])
    exact = spec.V.gradient(0.0, x, 1)
    fd_fn = type(spec.V)(f=spec.V.f)
    approx = fd_fn.gradient(0.0, x, 1)
    assert approx == pytest.approx(exact, abs=1e-6)


def test_lemniscate_params_validation():
    with pytest.raises(ConfigurationError):
        LemniscateParams(delta=0.0)
    with pytest.raises(ConfigurationError):
        LemniscateParams(state_cap=1)


def test_lemniscate_model_dimensions():
    model = lemniscate_model()
    assert model.dim_x == 2 and model.dim_bm == 2
    assert model.rates.state_cap == 50
    assert model.period == 1.0


# --- oracle models ----------------------------------------------------------------

def test_two_state_linear_coefficients():
    model = two_state_linear_model(sigma=0.5)
    assert np.asarray(model.drift(0.3, np.array([2.0]), 2)) == pytest.approx([-2.0])
    assert np.allclose(np.asarray(model.diffusion(0.0, np.zeros(1), 1)), [[0.5]])
    assert model.rates.q(np.zeros(1), 1, 2) == 1.0
    assert model.rates.q(np.zeros(1), 2, 1) == 2.0
    assert model.rates.is_constant


def test_pure_switching_model_validation():
    with pytest.raises(ConfigurationError):
        pure_switching_model({(1, 1): 1.0}, n_states=2)
    with pytest.raises(ConfigurationError):
        pure_switching_model({(1, 2): -1.0}, n_states=2)
    model = pure_switching_model({(1, 2): 1.0, (2, 1): 2.0}, n_states=2)
    assert np.all(np.asarray(model.diffusion(0.0, np.zeros(1), 1)) == 0.0)
