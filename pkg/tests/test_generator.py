"""Tests for the extended generator, Dynkin residuals and Lyapunov scans."""

import math

import numpy as np
import pytest

from switchjump.errors import TailDivergenceError
from switchjump.generator import (
    LyapunovSpec,
    TestFunction,
    apply_A,
    apply_Li,
    apply_Q,
    check_sigma_nondegenerate,
    dynkin_residual,
    lyapunov_scan,
)
from switchjump.hybrid_sim import SimConfig
from switchjump.presets import (
    get_preset,
    lemniscate_rates,
    pure_switching_model,
    two_state_linear_model,
)

ZETA2 = math.pi ** 2 / 6.0
ZETA3 = 1.2020569031595943


def quad_plus_regime():
    return TestFunction(
        f=lambda t, x, i: float(np.dot(x, x)) + i,
        f_t=lambda t, x, i: 0.0,
        f_x=lambda t, x, i: 2.0 * np.asarray(x, dtype=float),
        f_xx=lambda t, x, i: 2.0 * np.eye(len(x)),
    )


# --- apply_Li -------------------------------------------------------------------

def test_apply_Li_ou_quadratic_closed_form():
    # L_i f for f = |x|^2 + i under dX = -X dt + dB: -2x^2 + 1
    model = two_state_linear_model()
    f = quad_plus_regime()
    for x in (0.0, 1.0, -2.5):
        assert apply_Li(model, f, 0.0, np.array([x]), 1) == pytest.approx(
            -2.0 * x * x + 1.0)


def test_apply_Li_finite_differences_match_closed_form():
    model = two_state_linear_model()
    exact = quad_plus_regime()
    fd = TestFunction(f=lambda t, x, i: float(np.dot(x, x)) + i)
    for x in (0.3, -1.7):
        a = apply_Li(model, exact, 0.25, np.array([x]), 2)
        b = apply_Li(model, fd, 0.25, np.array([x]), 2)
        assert b == pytest.approx(a, abs=1e-4)


def test_apply_Li_constant_function_is_zero():
    model = two_state_linear_model()
    f = TestFunction(f=lambda t, x, i: 4.0,
                     f_t=lambda t, x, i: 0.0,
                     f_x=lambda t, x, i: np.zeros(1),
                     f_xx=lambda t, x, i: np.zeros((1, 1)))
    assert apply_Li(model, f, 0.0, np.array([1.0]), 1) == 0.0


def test_apply_Li_time_derivative_term():
    model = two_state_linear_model()
    f = TestFunction(f=lambda t, x, i: 3.0 * t,
                     f_t=lambda t, x, i: 3.0,
                     f_x=lambda t, x, i: np.zeros(1),
                     f_xx=lambda t, x, i: np.zeros((1, 1)))
    assert apply_Li(model, f, 0.1, np.array([0.5]), 1) == pytest.approx(3.0)


# --- apply_Q --------------------------------------------------------------------

def test_apply_Q_regime_indicator_two_state():
    # f = 1_{i=1}: Qf(x, 1) = -q12 = -1, Qf(x, 2) = q21 = 2
    model = two_state_linear_model()
    f = TestFunction(f=lambda t, x, i: 1.0 if i == 1 else 0.0)
    r1 = apply_Q(model.rates, f, 0.0, np.array([0.0]), 1)
    r2 = apply_Q(model.rates, f, 0.0, np.array([0.0]), 2)
    assert r1.value == pytest.approx(-1.0) and r1.tail_bound == 0.0
    assert r2.value == pytest.approx(2.0) and r2.tail_bound == 0.0


def test_apply_Q_constant_function_is_zero():
    model = two_state_linear_model()
    f = TestFunction(f=lambda t, x, i: 9.0)
    assert apply_Q(model.rates, f, 0.0, np.array([0.0]), 1).value == 0.0


def test_apply_Q_linear_f_with_certified_tail():
    # rates q_ij(x) = (1 ^ |x|) / j^3 at |x| >= 1, f = i:
    # Qf(x, 1) = sum_{j>=2} (j - 1)/j^3 = zeta(2) - zeta(3) (cap-truncated)
    spec = lemniscate_rates()
    f = TestFunction(f=lambda t, x, i: float(i))
    x = np.array([2.0, 0.0])
    res = apply_Q(spec, f, 0.0, x, 1, f_growth=(0.0, 1.0))
    exact_full = ZETA2 - ZETA3
    exact_truncated = sum((j - 1) / j ** 3 for j in range(2, spec.state_cap + 1))
    assert res.value == pytest.approx(exact_truncated, abs=1e-12)
    assert res.tail_bound > 0.0
    # truncation at the cap removes less mass than the certified tail bound
    assert abs(res.value - exact_full) <= res.tail_bound + 1e-12


def test_apply_Q_requires_growth_certificate_for_nonzero_tail():
    spec = lemniscate_rates()
    f = TestFunction(f=lambda t, x, i: float(i))
    with pytest.raises(TailDivergenceError):
        apply_Q(spec, f, 0.0, np.array([1.0, 0.0]), 1)


def test_apply_Q_linear_growth_needs_weighted_tail():
    spec = lemniscate_rates()
    stripped = type(spec)(q=spec.q, state_cap=spec.state_cap, a=spec.a,
                          tail_bound=spec.tail_bound, tail_bound_weighted=None,
                          is_constant=spec.is_constant)
    f = TestFunction(f=lambda t, x, i: float(i))
    with pytest.raises(TailDivergenceError):
        apply_Q(stripped, f, 0.0, np.array([1.0, 0.0]), 1, f_growth=(0.0, 1.0))


# --- apply_A --------------------------------------------------------------------

def test_apply_A_hand_value_ou_plus_chain():
    # f = |x|^2 + i at (x, i) = (1, 1): L_1 f = -2 + 1 = -1, Qf = q12 * 1 = 1
    model = two_state_linear_model()
    f = quad_plus_regime()
    assert apply_A(model, f, 0.0, np.array([1.0]), 1) == pytest.approx(0.0)
    # at (1, 2): L_2 f = -1, Qf = q21 * (-1) = -2
    assert apply_A(model, f, 0.0, np.array([1.0]), 2) == pytest.approx(-3.0)


# --- dynkin_residual ------------------------------------------------------------

def test_dynkin_pure_chain_regime_function():
    model = pure_switching_model({(1, 2): 1.0, (2, 1): 2.0}, n_states=2)
    f = TestFunction(f=lambda t, x, i: float(i),
                     f_t=lambda t, x, i: 0.0,
                     f_x=lambda t, x, i: np.zeros(1),
                     f_xx=lambda t, x, i: np.zeros((1, 1)))
    cfg = SimConfig(dt=0.05, horizon=2.0, n_paths=800, seed=101)
    res = dynkin_residual(model, f, 2.0, [0.0], 1, cfg)
    assert not res.inconclusive
    assert res.cap_fraction == 0.0
    assert abs(res.residual) <= max(res.ci_halfwidth, 0.05)
    lo, hi = res.ci
    assert lo < 0.0 < hi or abs(res.residual) < 0.02


def test_dynkin_ou_quadratic():
    model = two_state_linear_model()
    f = quad_plus_regime()
    cfg = SimConfig(dt=0.02, horizon=1.0, n_paths=600, seed=55)
    res = dynkin_residual(model, f, 1.0, [1.0], 1, cfg)
    assert not res.inconclusive
    lo, hi = res.ci
    assert lo <= 0.0 <= hi


# --- lyapunov_scan --------------------------------------------------------------

def test_lyapunov_scan_ou_quadratic_certificate():
    # V = |x|^2 for the OU model: L_i V = -2|x|^2 + 1, negative beyond 1/sqrt(2)
    model = two_state_linear_model()
    V = TestFunction(
        f=lambda t, x, i: float(np.dot(x, x)),
        f_t=lambda t, x, i: 0.0,
        f_x=lambda t, x, i: 2.0 * np.asarray(x, dtype=float),
        f_xx=lambda t, x, i: 2.0 * np.eye(len(x)),
    )
    spec = LyapunovSpec(V=V, W=lambda t, x: 0.5 * np.asarray(x, dtype=float), rho=(1.0, 2.0))
    report = lyapunov_scan(model, spec, radii=[2.0, 4.0, 8.0], t_grid=[0.0, 0.5],
                           state_range=[1, 2], n_dirs=8)
    assert report.shell_sups[2.0] == pytest.approx(-7.0)
    assert report.shell_sups[8.0] == pytest.approx(-127.0)
    assert report.decreasing
    assert report.negative_radii == [2.0, 4.0, 8.0]
    assert report.divergence_certificate
    # V = <x/2, 2x> exactly, any rho
    assert all(v <= 1e-10 for v in report.identity_max_violation.values())
    assert report.sign_certificate
    assert report.witness is None
    assert math.isfinite(report.sup_inner)


def test_lyapunov_scan_reports_positive_witness():
    # explosive drift +x makes L V = +2|x|^2 + 1 positive on all shells
    model = two_state_linear_model()
    grow = pure_switching_model({(1, 2): 1.0, (2, 1): 2.0}, n_states=2)
    V = TestFunction(f=lambda t, x, i: float(np.dot(x, x)))
    spec = LyapunovSpec(V=V)
    report = lyapunov_scan(model, spec, radii=[2.0, 4.0], t_grid=[0.0],
                           state_range=[1], n_dirs=4)
    assert report.divergence_certificate  # OU still contracts
    report2 = lyapunov_scan(grow, spec, radii=[2.0, 4.0], t_grid=[0.0],
                            state_range=[1], n_dirs=4)
    # zero dynamics: L V = 0 on every shell, no strict decrease
    assert not report2.divergence_certificate
    assert report2.negative_radii == []


def test_lyapunov_identity_violation_detected():
    model = two_state_linear_model()
    V = TestFunction(f=lambda t, x, i: float(np.dot(x, x)))
    bad = LyapunovSpec(V=V, W=lambda t, x: np.zeros(len(x)), rho=(1.0,))
    report = lyapunov_scan(model, bad, radii=[2.0, 4.0], t_grid=[0.0],
                           state_range=[1], n_dirs=4)
    assert report.identity_max_violation[1.0] > 0.1
    assert not report.sign_certificate


# --- sigma nondegeneracy --------------------------------------------------------

def test_sigma_nondegenerate_ou():
    model = two_state_linear_model(sigma=1.0)
    out = check_sigma_nondegenerate(model, radii=[1.0, 3.0], t_grid=[0.0, 0.4],
                                    state_range=[1, 2], n_dirs=4)
    assert out["passed"]
    assert out["min_singular_value"] == pytest.approx(1.0)


def test_sigma_degenerate_detected():
    model = pure_switching_model({(1, 2): 1.0, (2, 1): 2.0}, n_states=2)
    out = check_sigma_nondegenerate(model, radii=[1.0], t_grid=[0.0],
                                    state_range=[1], n_dirs=4)
    assert not out["passed"]
    assert out["min_singular_value"] == 0.0


def test_lorenz_scan_refinement_stability():
    # doubling the direction count must not change the shell-sup profile much
    model = get_preset("lorenz_rs")
    from switchjump.presets import preset_lyapunov
    spec = preset_lyapunov("lorenz_rs")
    kw = dict(radii=[40.0], t_grid=[0.0], state_range=[1, 2, 3])
    a = lyapunov_scan(model, spec, n_dirs=16, **kw).shell_sups[40.0]
    b = lyapunov_scan(model, spec, n_dirs=32, **kw).shell_sups[40.0]
    assert b >= a - 1e-9  # more directions can only raise the observed sup
    assert abs(b - a) < 0.2 * max(1.0, abs(a))
