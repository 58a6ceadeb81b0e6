"""Extended generator evaluation and its consequences.

Evaluates the frozen-regime operator (drift + diffusion + compensated small
jumps + large jumps), the switching operator acting on the regime index, and
their sum; runs Dynkin-residual martingale checks and Lyapunov grid scans.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, TailDivergenceError
from .hybrid_sim import SimConfig, simulate_paths
from .model import HybridModel
from .switching import RateMatrixSpec

_FD_BASE = float(np.finfo(float).eps) ** (1.0 / 3.0)

__all__ = [
    "TestFunction",
    "LyapunovSpec",
    "QResult",
    "apply_Li",
    "apply_Q",
    "apply_A",
    "dynkin_residual",
    "lyapunov_scan",
    "check_sigma_nondegenerate",
]


@dataclass(frozen=True)
class TestFunction:
    """Scalar function of (t, x, i) with derivatives, closed form or central FD.

    Missing derivative callables fall back to central finite differences with
    step eta = eps^(1/3) * (1 + |argument|).
    """

    __test__ = False  # not a test case despite the Test* name

    f: Callable
    f_t: Optional[Callable] = None
    f_x: Optional[Callable] = None
    f_xx: Optional[Callable] = None

    def __call__(self, t, x, i):
        return self.f(t, x, i)

    def t_derivative(self, t, x, i) -> float:
        if self.f_t is not None:
            return float(self.f_t(t, x, i))
        eta = _FD_BASE * (1.0 + abs(t))
        lo = max(t - eta, 0.0)
        return (self.f(t + eta, x, i) - self.f(lo, x, i)) / (t + eta - lo)

    def gradient(self, t, x, i) -> np.ndarray:
        if self.f_x is not None:
            return np.asarray(self.f_x(t, x, i), dtype=float)
        x = np.asarray(x, dtype=float)
        eta = _FD_BASE * (1.0 + np.linalg.norm(x))
        grad = np.empty(len(x))
        for d in range(len(x)):
            e = np.zeros(len(x))
            e[d] = eta
            grad[d] = (self.f(t, x + e, i) - self.f(t, x - e, i)) / (2 * eta)
        return grad

    def hessian(self, t, x, i) -> np.ndarray:
        if self.f_xx is not None:
            return np.asarray(self.f_xx(t, x, i), dtype=float)
        x = np.asarray(x, dtype=float)
        m = len(x)
        # second-difference step: eps^(1/4)-scaled for balanced truncation/rounding
        eta = (float(np.finfo(float).eps) ** 0.25) * (1.0 + np.linalg.norm(x))
        hess = np.empty((m, m))
        f0 = self.f(t, x, i)
        for d in range(m):
            ed = np.zeros(m)
            ed[d] = eta
            hess[d, d] = (self.f(t, x + ed, i) - 2 * f0 + self.f(t, x - ed, i)) / eta ** 2
            for e_ in range(d + 1, m):
                ee = np.zeros(m)
                ee[e_] = eta
                cross = (self.f(t, x + ed + ee, i) - self.f(t, x + ed - ee, i)
                         - self.f(t, x - ed + ee, i) + self.f(t, x - ed - ee, i)) / (4 * eta ** 2)
                hess[d, e_] = hess[e_, d] = cross
        return hess


@dataclass(frozen=True)
class LyapunovSpec:
    """Lyapunov data: V independent of the regime, the vector field W and the
    scalings rho for the dilation identity V(t, rho x) <= <W_rho, grad V(t, rho x)>."""

    V: TestFunction
    W: Optional[Callable] = None   # (t, x) -> R^m
    rho: tuple = (1.0,)


def apply_Li(model: HybridModel, f: TestFunction, t: float, x, i: int,
             inner_samples: int = 1000,
             rng: Optional[np.random.Generator] = None) -> float:
    """Frozen-regime generator: time derivative, drift, diffusion trace and the
    two jump integrals (compensated below |u| = 1).

    Jump expectations are inner Monte Carlo with `inner_samples` draws; use
    apply_Li_with_error to retrieve the standard error.
    """
    return apply_Li_with_error(model, f, t, x, i, inner_samples, rng)[0]


def apply_Li_with_error(model: HybridModel, f: TestFunction, t: float, x, i: int,
                        inner_samples: int = 1000,
                        rng: Optional[np.random.Generator] = None):
    x = np.asarray(x, dtype=float)
    grad = f.gradient(t, x, i)
    value = f.t_derivative(t, x, i)
    value += float(grad @ np.asarray(model.drift(t, x, i), dtype=float))
    sig = np.asarray(model.diffusion(t, x, i), dtype=float)
    hess = f.hessian(t, x, i)
    value += 0.5 * float(np.trace(sig.T @ hess @ sig))
    if not math.isfinite(value):
        raise DomainError(f"non-finite derivative terms at (t={t}, x={x}, i={i})")

    stderr = 0.0
    levy = model.levy
    if levy.rate_small > 0 or levy.rate_large > 0:
        if inner_samples <= 0:
            raise DomainError("jump integrals need inner_samples >= 1")
        if rng is None:
            rng = np.random.default_rng(0)
        f0 = f(t, x, i)
        if levy.rate_small > 0:
            draws = np.empty(inner_samples)
            for s in range(inner_samples):
                u = levy.sampler_small(rng)
                h = np.asarray(model.small_jump(t, x, i, u), dtype=float)
                draws[s] = f(t, x + h, i) - f0 - float(grad @ h)
            value += levy.rate_small * float(draws.mean())
            stderr += levy.rate_small * float(draws.std(ddof=1)) / math.sqrt(inner_samples)
        if levy.rate_large > 0:
            draws = np.empty(inner_samples)
            for s in range(inner_samples):
                u = levy.sampler_large(rng)
                g = np.asarray(model.large_jump(t, x, i, u), dtype=float)
                draws[s] = f(t, x + g, i) - f0
            value += levy.rate_large * float(draws.mean())
            stderr += levy.rate_large * float(draws.std(ddof=1)) / math.sqrt(inner_samples)
    return value, stderr


@dataclass(frozen=True)
class QResult:
    value: float
    tail_bound: float

    def __float__(self):
        return self.value


def apply_Q(spec: RateMatrixSpec, f: TestFunction, t: float, x, i: int,
            f_growth: Optional[tuple] = None) -> QResult:
    """Switching operator sum_j q_ij(x) [f(t,x,j) - f(t,x,i)] over j <= state_cap
    plus a certified bound on the truncated remainder.

    f_growth = (alpha, beta) certifies |f(t,x,j) - f(t,x,i)| <= alpha + beta*j
    for j beyond the cap; required whenever the rate tail is nonzero.
    """
    f_i = f(t, x, i)
    value = 0.0
    for j in range(1, spec.state_cap + 1):
        if j == i:
            continue
        rate = spec.q(x, i, j)
        if rate > 0:
            value += rate * (f(t, x, j) - f_i)
    r = spec.state_cap + 1
    tail = spec.tail_bound(r)
    if tail == 0.0:
        return QResult(value, 0.0)
    if f_growth is None:
        raise TailDivergenceError(
            "rate tail beyond state_cap is nonzero; pass f_growth=(alpha, beta) with "
            "|f(t,x,j) - f(t,x,i)| <= alpha + beta*j to certify the remainder")
    alpha, beta = f_growth
    bound = alpha * tail
    if beta != 0.0:
        if spec.tail_bound_weighted is None:
            raise TailDivergenceError(
                "linear f_growth needs tail_bound_weighted on the rate spec")
        bound += beta * spec.tail_bound_weighted(r)
    return QResult(value, float(bound))


def apply_A(model: HybridModel, f: TestFunction, t: float, x, i: int,
            inner_samples: int = 1000, rng: Optional[np.random.Generator] = None,
            f_growth: Optional[tuple] = None) -> float:
    """Extended generator: frozen-regime part plus the switching operator."""
    li = apply_Li(model, f, t, x, i, inner_samples=inner_samples, rng=rng)
    q = apply_Q(model.rates, f, t, x, i, f_growth=f_growth)
    return li + q.value


@dataclass
class DynkinResult:
    residual: float
    ci_halfwidth: float
    n_paths: int
    cap_fraction: float
    inconclusive: bool

    @property
    def ci(self):
        return (self.residual - self.ci_halfwidth, self.residual + self.ci_halfwidth)


def dynkin_residual(model: HybridModel, f: TestFunction, t_end: float, x0, i0: int,
                    cfg: SimConfig, inner_samples: int = 200,
                    f_growth: Optional[tuple] = None) -> DynkinResult:
    """Monte Carlo estimate of E[f(T, X_T, L_T)] - f(0, x0, i0) - E int_0^T Af ds.

    The martingale identity predicts 0.  The time integral uses the trapezoid
    rule on each path's jump-adapted grid.  Flagged inconclusive when more
    than 1% of paths hit the explosion cap before t_end.
    """
    paths = simulate_paths(model, x0, i0, cfg)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(0xD1,)))
    f0 = f(0.0, np.asarray(x0, dtype=float), i0)
    residuals = []
    capped = 0
    for path in paths:
        if path.cap_hit is not None and path.cap_hit < t_end:
            capped += 1
            continue
        hi = int(np.searchsorted(path.t, t_end, side="right")) - 1
        ts = path.t[:hi + 1]
        vals = np.array([
            apply_A(model, f, ts[j], path.x[j], int(path.regime[j]),
                    inner_samples=inner_samples, rng=rng, f_growth=f_growth)
            for j in range(len(ts))
        ])
        integral = float(np.trapezoid(vals, ts))
        x_T, i_T = path.state_at(t_end)
        residuals.append(f(t_end, x_T, i_T) - f0 - integral)
    residuals = np.asarray(residuals)
    mean = float(residuals.mean())
    half = 1.96 * float(residuals.std(ddof=1)) / math.sqrt(len(residuals))
    cap_fraction = capped / len(paths)
    return DynkinResult(residual=mean, ci_halfwidth=half, n_paths=len(residuals),
                        cap_fraction=cap_fraction, inconclusive=cap_fraction > 0.01)


@dataclass
class LyapunovScanReport:
    sup_inner: float
    shell_sups: dict            # radius -> sup of L_i V over the shell grid
    decreasing: bool
    negative_radii: list        # radii with strictly negative shell sup
    divergence_certificate: bool  # shell sups decreasing and outermost negative
    identity_max_violation: dict  # rho -> max over grid of V_rho - <W_rho, grad V_rho>
    witness: Optional[tuple]    # (radius, t, i, x, value) for a positive outer sup

    @property
    def sign_certificate(self) -> bool:
        return self.divergence_certificate and all(
            v <= 1e-10 for v in self.identity_max_violation.values())


def _unit_directions(m: int, n_dirs: int, seed: int = 2024) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n_dirs, m))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    # include the coordinate axes so quadratic extrema on shells are probed
    axes = np.concatenate([np.eye(m), -np.eye(m)])
    return np.concatenate([axes, v])


def lyapunov_scan(model: HybridModel, spec: LyapunovSpec, radii, t_grid, state_range,
                  inner_radius: Optional[float] = None, n_dirs: int = 64,
                  identity_tol: float = 1e-10, inner_samples: int = 400) -> LyapunovScanReport:
    """Grid scan of L_i V over shells plus the dilation identity check.

    Reports the (finite) sup over the inner ball, the shell-sup profile over
    `radii`, whether that profile decreases with a negative outermost value,
    and the pointwise identity V(t, rho x) <= <W(t, rho x)/rho, grad_x V(t, rho x)>
    for each requested rho.
    """
    radii = sorted(radii)
    if inner_radius is None:
        inner_radius = radii[0] / 2.0
    dirs = _unit_directions(model.dim_x, n_dirs)
    rng = np.random.default_rng(7)

    def sup_at_radius(r):
        best = -math.inf
        arg = None
        for t in t_grid:
            for i in state_range:
                for d in dirs:
                    x = r * d
                    v = apply_Li(model, spec.V, t, x, i, inner_samples=inner_samples, rng=rng)
                    if v > best:
                        best, arg = v, (r, t, i, x)
        return best, arg

    inner_best = -math.inf
    for frac in (0.25, 0.5, 0.75, 1.0):
        v, _ = sup_at_radius(frac * inner_radius)
        inner_best = max(inner_best, v)

    shell_sups = {}
    witness = None
    for r in radii:
        v, arg = sup_at_radius(r)
        shell_sups[r] = v
        if v > 0 and witness is None and r > radii[0]:
            witness = arg + (v,)

    vals = [shell_sups[r] for r in radii]
    decreasing = all(vals[j + 1] < vals[j] for j in range(len(vals) - 1))
    negative_radii = [r for r in radii if shell_sups[r] < 0]
    divergence = decreasing and vals[-1] < 0

    identity = {}
    if spec.W is not None:
        probe_x = np.concatenate([
            0.5 * inner_radius * dirs,
            inner_radius * dirs,
        ])
        for rho in spec.rho:
            worst = -math.inf
            for t in t_grid:
                for x in probe_x:
                    xr = rho * np.asarray(x, dtype=float)
                    v = spec.V(t, xr, state_range[0])
                    grad = rho * spec.V.gradient(t, xr, state_range[0])
                    w = np.asarray(spec.W(t, xr), dtype=float) / rho
                    worst = max(worst, v - float(w @ grad))
            identity[rho] = worst

    return LyapunovScanReport(
        sup_inner=inner_best, shell_sups=shell_sups, decreasing=decreasing,
        negative_radii=negative_radii, divergence_certificate=divergence,
        identity_max_violation=identity, witness=witness)


def check_sigma_nondegenerate(model: HybridModel, radii, t_grid, state_range,
                              n_dirs: int = 32, threshold: float = 1e-10) -> dict:
    """Grid scan of the smallest singular value of sigma sigma^T (A3 surrogate)."""
    dirs = _unit_directions(model.dim_x, n_dirs)
    worst = math.inf
    for r in radii:
        for t in t_grid:
            for i in state_range:
                for d in dirs:
                    sig = np.asarray(model.diffusion(t, r * d, i), dtype=float)
                    s_min = float(np.linalg.svd(sig @ sig.T, compute_uv=False)[-1])
                    worst = min(worst, s_min)
    return {"min_singular_value": worst, "passed": worst > threshold}
