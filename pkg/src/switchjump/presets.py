"""Built-in models: the stochastic Lorenz system with regime switching, the
lemniscate-of-Bernoulli gradient field with state-dependent switching rates,
and small closed-form oracle models for testing.

Preset ids: "lorenz_rs", "lemniscate_rs", "two_state_linear".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, DomainError
from .generator import LyapunovSpec, TestFunction
from .levy import no_jumps
from .model import HybridModel, PeriodicFn, constant_periodic
from .switching import RateMatrixSpec

__all__ = [
    "LorenzParams",
    "LemniscateParams",
    "lorenz_model",
    "lorenz_lyapunov",
    "lemniscate_invariant",
    "lemniscate_drift",
    "lemniscate_model",
    "lemniscate_lyapunov",
    "two_state_linear_model",
    "pure_switching_model",
    "get_preset",
    "preset_lyapunov",
    "PRESET_IDS",
]


# --------------------------------------------------------------------------
# Lorenz system with regime switching
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LorenzParams:
    """Parameters of the regime-switching Lorenz model.

    mode "classic": alpha, beta, mu are the time-constant values below and the
    Lyapunov shift a(t) is the constant a_const.  mode "periodic": a(t) =
    3 + sin(2 pi t / theta) and alpha = beta = mu = (a(t) - 1) *
    (1 + regime_coupling * (i - 1)), which keeps mu(t, i) <= a(t) and the
    damping rates bounded below by gamma = min a(t) - 1 = 1.
    """

    mode: str = "classic"
    alpha: float = 10.0
    beta: float = 8.0 / 3.0
    mu: float = 28.0
    a_const: float = 19.0
    theta: float = 1.0
    noise_scale: float = 0.1
    regime_coupling: float = 0.05
    n_regimes: int = 3
    switch_rate: float = 0.5

    def __post_init__(self):
        if self.mode not in ("classic", "periodic"):
            raise ConfigurationError(f"unknown Lorenz mode {self.mode!r}")
        if self.theta <= 0 or self.noise_scale < 0 or self.switch_rate <= 0:
            raise ConfigurationError("theta, switch_rate must be > 0; noise_scale >= 0")
        if self.n_regimes < 2:
            raise ConfigurationError("need at least 2 regimes")

    def a(self, t: float) -> float:
        if self.mode == "classic":
            return self.a_const
        return 3.0 + math.sin(2.0 * math.pi * t / self.theta)

    def a_prime(self, t: float) -> float:
        if self.mode == "classic":
            return 0.0
        return (2.0 * math.pi / self.theta) * math.cos(2.0 * math.pi * t / self.theta)

    def coeffs(self, t: float, i: int):
        """(alpha, beta, mu) at reduced time t in regime i."""
        if self.mode == "classic":
            return self.alpha, self.beta, self.mu
        base = (self.a(t) - 1.0) * (1.0 + self.regime_coupling * (i - 1))
        return base, base, base


def _constant_finite_rates(rate: float, n_states: int) -> RateMatrixSpec:
    """All-to-all constant switching among n_states regimes."""

    def q(x, i, j):
        if i == j:
            raise DomainError("off-diagonal rates only")
        return rate if (1 <= j <= n_states and i <= n_states) else 0.0

    return RateMatrixSpec(
        q=q,
        state_cap=n_states,
        a=lambda j: rate if j <= n_states else 0.0,
        tail_bound=lambda r: 0.0,
        tail_bound_weighted=lambda r: 0.0,
        is_constant=True,
    )


def lorenz_model(params: LorenzParams = LorenzParams()) -> HybridModel:
    """Three-dimensional Lorenz drift with regime-modulated damping, constant
    isotropic noise and no jumps."""
    theta = params.theta

    def drift(t, x, i):
        al, be, mu = params.coeffs(t, i)
        x1, x2, x3 = x
        return np.array([
            -al * x1 + al * x2,
            mu * x1 - x2 - x1 * x3,
            -be * x3 + x1 * x2,
        ])

    sigma = params.noise_scale * np.eye(3)

    def zero_jump(t, x, i, u):
        return np.zeros(3)

    return HybridModel(
        dim_x=3,
        dim_bm=3,
        dim_mark=1,
        drift=PeriodicFn(theta, drift, "lorenz_drift"),
        diffusion=constant_periodic(sigma, theta, "lorenz_sigma"),
        small_jump=PeriodicFn(theta, zero_jump, "lorenz_H"),
        large_jump=PeriodicFn(theta, zero_jump, "lorenz_G"),
        levy=no_jumps(dim_mark=1),
        rates=_constant_finite_rates(params.switch_rate, params.n_regimes),
        assumptions={
            "local_lipschitz": "polynomial drift, constant diffusion",
            "growth": f"|sigma|^2 bounded by {3 * params.noise_scale ** 2}",
            "mode": params.mode,
        },
        name="lorenz_rs",
    )


def lorenz_lyapunov(params: LorenzParams = LorenzParams()) -> LyapunovSpec:
    """V(t, x) = x1^2 + x2^2 + (x3 - 2 a(t))^2 with W = (1/2)(x1, x2, x3 - 2 a(t)).

    <W, grad V> = V exactly, and the same holds after the dilation x -> rho x
    used by the shell scan.
    """

    def V(t, x, i):
        x1, x2, x3 = x
        s = x3 - 2.0 * params.a(t)
        return x1 * x1 + x2 * x2 + s * s

    def V_t(t, x, i):
        return -4.0 * (x[2] - 2.0 * params.a(t)) * params.a_prime(t)

    def V_x(t, x, i):
        x1, x2, x3 = x
        return np.array([2.0 * x1, 2.0 * x2, 2.0 * (x3 - 2.0 * params.a(t))])

    def V_xx(t, x, i):
        return 2.0 * np.eye(3)

    def W(t, x):
        x1, x2, x3 = x
        return 0.5 * np.array([x1, x2, x3 - 2.0 * params.a(t)])

    return LyapunovSpec(V=TestFunction(f=V, f_t=V_t, f_x=V_x, f_xx=V_xx), W=W)


# --------------------------------------------------------------------------
# Lemniscate-of-Bernoulli field with state-dependent switching
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LemniscateParams:
    """Parameters of the lemniscate model: tail exponent delta of the rates
    q_ij(x) = (1 and |x|) / j^(2 + delta), regime truncation for simulation,
    noise scale and the shared period theta."""

    delta: float = 1.0
    state_cap: int = 50
    noise_scale: float = 0.1
    theta: float = 1.0

    def __post_init__(self):
        if self.delta <= 0:
            raise ConfigurationError("delta must be positive for summable rate tails")
        if self.state_cap < 2 or self.theta <= 0 or self.noise_scale < 0:
            raise ConfigurationError("state_cap >= 2, theta > 0, noise_scale >= 0 required")


def lemniscate_invariant(x) -> float:
    """I(x) = (x1^2 + x2^2)^2 - 4 (x1^2 - x2^2); zero on the lemniscate."""
    x1, x2 = float(x[0]), float(x[1])
    s = x1 * x1 + x2 * x2
    return s * s - 4.0 * (x1 * x1 - x2 * x2)


def _invariant_gradient(x):
    x1, x2 = float(x[0]), float(x[1])
    s = x1 * x1 + x2 * x2
    return np.array([4.0 * x1 * s - 8.0 * x1, 4.0 * x2 * s + 8.0 * x2])


def _f_of_I(I: float) -> float:
    return I * (I * I + 4.0) / (4.0 * (1.0 + I * I) ** 1.75)


def _g_of_I(I: float) -> float:
    return (I * I + 4.0) / (4.0 * (1.0 + I * I) ** 2.75)


def lemniscate_drift(x) -> np.ndarray:
    """Gradient descent of the potential in I plus a rotation along level sets:
    b = -f(I) grad I + g(I) rot(grad I) with rot(v1, v2) = (-v2, v1)."""
    I = lemniscate_invariant(x)
    gI = _invariant_gradient(x)
    f, g = _f_of_I(I), _g_of_I(I)
    return np.array([-f * gI[0] - g * gI[1], -f * gI[1] + g * gI[0]])


def lemniscate_potential(I: float) -> float:
    """Scalar potential in the invariant: I^2 / (2 (1 + I^2)^(3/4)); bounded
    below, radially unbounded in |I| at rate |I|^(1/2)."""
    return I * I / (2.0 * (1.0 + I * I) ** 0.75)


def lemniscate_rates(params: LemniscateParams = LemniscateParams()) -> RateMatrixSpec:
    """q_ij(x) = (1 and |x|) / j^(2 + delta) with certified integral tail bounds
    sum_{j >= r} j^(-(2+delta)) <= (r-1)^(-(1+delta)) / (1+delta) and
    sum_{j >= r} j^(-(1+delta)) <= (r-1)^(-delta) / delta."""
    d = params.delta

    def q(x, i, j):
        if i == j:
            raise DomainError("off-diagonal rates only")
        return min(1.0, float(np.linalg.norm(x))) / j ** (2.0 + d)

    return RateMatrixSpec(
        q=q,
        state_cap=params.state_cap,
        a=lambda j: j ** -(2.0 + d),
        tail_bound=lambda r: (r - 1.0) ** -(1.0 + d) / (1.0 + d) if r > 1 else math.inf,
        tail_bound_weighted=lambda r: (r - 1.0) ** -d / d if r > 1 else math.inf,
        is_constant=False,
    )


def lemniscate_model(params: LemniscateParams = LemniscateParams()) -> HybridModel:
    theta = params.theta

    def drift(t, x, i):
        return lemniscate_drift(x)

    sigma = params.noise_scale * np.eye(2)

    def zero_jump(t, x, i, u):
        return np.zeros(2)

    return HybridModel(
        dim_x=2,
        dim_bm=2,
        dim_mark=1,
        drift=PeriodicFn(theta, drift, "lemniscate_drift"),
        diffusion=constant_periodic(sigma, theta, "lemniscate_sigma"),
        small_jump=PeriodicFn(theta, zero_jump, "lemniscate_H"),
        large_jump=PeriodicFn(theta, zero_jump, "lemniscate_G"),
        levy=no_jumps(dim_mark=1),
        rates=lemniscate_rates(params),
        assumptions={
            "local_lipschitz": "smooth drift, constant diffusion",
            "rate_tails": f"power tail with exponent {2.0 + params.delta}",
        },
        name="lemniscate_rs",
    )


def lemniscate_lyapunov(params: LemniscateParams = LemniscateParams()) -> LyapunovSpec:
    """V(x) = potential(I(x)); <b, grad V> = -|grad V|^2 <= 0 since the
    rotation part of the drift is orthogonal to grad V."""

    def V(t, x, i):
        return lemniscate_potential(lemniscate_invariant(x))

    def V_t(t, x, i):
        return 0.0

    def V_x(t, x, i):
        I = lemniscate_invariant(x)
        return _f_of_I(I) * _invariant_gradient(x)

    return LyapunovSpec(V=TestFunction(f=V, f_t=V_t, f_x=V_x, f_xx=None), W=None)


# --------------------------------------------------------------------------
# Closed-form oracle models
# --------------------------------------------------------------------------

def two_state_linear_model(theta: float = 1.0, sigma: float = 1.0) -> HybridModel:
    """Ornstein-Uhlenbeck dX = -X dt + sigma dB with an autonomous two-state
    chain q12 = 1, q21 = 2; marginal and stationary laws are closed form."""

    def drift(t, x, i):
        return -np.asarray(x, dtype=float)

    def zero_jump(t, x, i, u):
        return np.zeros(1)

    def q(x, i, j):
        if i == j:
            raise DomainError("off-diagonal rates only")
        rates = {(1, 2): 1.0, (2, 1): 2.0}
        return rates.get((i, j), 0.0)

    spec = RateMatrixSpec(
        q=q,
        state_cap=2,
        a=lambda j: {1: 2.0, 2: 1.0}.get(j, 0.0),
        tail_bound=lambda r: 0.0,
        tail_bound_weighted=lambda r: 0.0,
        is_constant=True,
    )
    return HybridModel(
        dim_x=1,
        dim_bm=1,
        dim_mark=1,
        drift=PeriodicFn(theta, drift, "ou_drift"),
        diffusion=constant_periodic(sigma * np.eye(1), theta, "ou_sigma"),
        small_jump=PeriodicFn(theta, zero_jump, "ou_H"),
        large_jump=PeriodicFn(theta, zero_jump, "ou_G"),
        levy=no_jumps(dim_mark=1),
        rates=spec,
        assumptions={"closed_form": "OU marginal; 2-state chain marginal"},
        name="two_state_linear",
    )


def pure_switching_model(off_diagonal: dict, n_states: int,
                         theta: float = 1.0) -> HybridModel:
    """Frozen continuous component (zero drift and noise) driven only by the
    chain with the given constant off-diagonal rates {(i, j): q_ij}."""
    for (i, j), rate in off_diagonal.items():
        if i == j or rate < 0:
            raise ConfigurationError("off_diagonal needs i != j and rates >= 0")

    def q(x, i, j):
        if i == j:
            raise DomainError("off-diagonal rates only")
        return off_diagonal.get((i, j), 0.0)

    def a(j):
        vals = [r for (i2, j2), r in off_diagonal.items() if j2 == j]
        return max(vals) if vals else 0.0

    def drift(t, x, i):
        return np.zeros(1)

    def zero_jump(t, x, i, u):
        return np.zeros(1)

    spec = RateMatrixSpec(
        q=q, state_cap=n_states, a=a,
        tail_bound=lambda r: 0.0, tail_bound_weighted=lambda r: 0.0,
        is_constant=True,
    )
    return HybridModel(
        dim_x=1,
        dim_bm=1,
        dim_mark=1,
        drift=PeriodicFn(theta, drift, "zero_drift"),
        diffusion=constant_periodic(np.zeros((1, 1)), theta, "zero_sigma"),
        small_jump=PeriodicFn(theta, zero_jump, "zero_H"),
        large_jump=PeriodicFn(theta, zero_jump, "zero_G"),
        levy=no_jumps(dim_mark=1),
        rates=spec,
        assumptions={"pure_switching": "continuous component frozen at x0"},
        name="pure_switching",
    )


# --------------------------------------------------------------------------
# Registry
# --------------------------------------------------------------------------

PRESET_IDS = ("lorenz_rs", "lemniscate_rs", "two_state_linear")

_PARAM_TYPES = {"lorenz_rs": LorenzParams, "lemniscate_rs": LemniscateParams}


def get_preset(preset_id: str, **overrides) -> HybridModel:
    """Build a preset model by id, applying scalar parameter overrides."""
    if preset_id == "lorenz_rs":
        return lorenz_model(_build_params(LorenzParams, overrides))
    if preset_id == "lemniscate_rs":
        return lemniscate_model(_build_params(LemniscateParams, overrides))
    if preset_id == "two_state_linear":
        allowed = {"theta", "sigma"}
        _check_keys(overrides, allowed, preset_id)
        return two_state_linear_model(**overrides)
    raise ConfigurationError(
        f"unknown preset {preset_id!r}; available: {', '.join(PRESET_IDS)}")


def preset_lyapunov(preset_id: str, **overrides) -> LyapunovSpec:
    if preset_id == "lorenz_rs":
        return lorenz_lyapunov(_build_params(LorenzParams, overrides))
    if preset_id == "lemniscate_rs":
        return lemniscate_lyapunov(_build_params(LemniscateParams, overrides))
    raise ConfigurationError(f"no Lyapunov data registered for {preset_id!r}")


def _build_params(cls, overrides: dict):
    _check_keys(overrides, set(cls.__dataclass_fields__), cls.__name__)
    return cls(**overrides)


def _check_keys(overrides, allowed, label):
    unknown = set(overrides) - allowed
    if unknown:
        raise ConfigurationError(f"unknown parameters for {label}: {sorted(unknown)}")
