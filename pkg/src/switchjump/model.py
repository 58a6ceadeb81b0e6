"""Hybrid model record: periodic coefficient wrappers and structural validation.

A hybrid model is the tuple (b, sigma, H, G, nu, Q, theta) driving the pair
(X(t), Lambda(t)).  All time-dependent coefficients share one period theta and
are wrapped so that periodicity holds by construction: the wrapper reduces t
modulo theta before calling the user function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, StructuralError


def reduce_time(t: float, period: float) -> float:
    """Reduce t >= 0 into [0, period) by subtracting whole periods."""
    if period <= 0:
        raise ConfigurationError(f"period must be positive, got {period}")
    r = t - period * math.floor(t / period)
    if r >= period:  # guard against floor rounding at exact multiples
        r -= period
    return r


@dataclass(frozen=True)
class PeriodicFn:
    """A callable on (t, ...) made theta-periodic by time reduction."""

    period: float
    fn: Callable
    name: str = ""

    def __post_init__(self):
        if self.period <= 0:
            raise ConfigurationError(
                f"PeriodicFn {self.name!r}: period must be positive, got {self.period}"
            )

    def __call__(self, t, *args):
        return self.fn(reduce_time(t, self.period), *args)


@dataclass(frozen=True)
class HybridModel:
    """Full coefficient specification of the hybrid pair (X, Lambda).

    drift:      (t, x, i) -> R^m
    diffusion:  (t, x, i) -> R^{m x k}
    small_jump: (t, x, i, u) -> R^m, marks |u| < 1
    large_jump: (t, x, i, u) -> R^m, marks |u| >= 1
    """

    dim_x: int
    dim_bm: int
    dim_mark: int
    drift: PeriodicFn
    diffusion: PeriodicFn
    small_jump: PeriodicFn
    large_jump: PeriodicFn
    levy: "LevyMeasureSpec"  # noqa: F821 - defined in levy.py
    rates: "RateMatrixSpec"  # noqa: F821 - defined in switching.py
    # User-asserted analytic assumptions (A1/A2/A3 style); metadata only,
    # Lipschitz moduli are declared, never machine-verified.
    assumptions: dict = field(default_factory=dict)
    name: str = ""

    @property
    def period(self) -> float:
        return self.drift.period

    def coefficients(self):
        return {
            "drift": self.drift,
            "diffusion": self.diffusion,
            "small_jump": self.small_jump,
            "large_jump": self.large_jump,
        }


@dataclass
class ValidationReport:
    violations: list
    assumptions: dict

    @property
    def ok(self) -> bool:
        return not self.violations


def _probe_points(model: HybridModel):
    m = model.dim_x
    xs = [np.zeros(m), 0.5 * np.ones(m), -1.3 * np.ones(m)]
    ts = [0.0, model.period / 3.0, 0.9 * model.period]
    regimes = [1, 2]
    return ts, xs, regimes


def validate_model(model: HybridModel, raise_on_error: bool = True) -> ValidationReport:
    """Probe the coefficients at sample points and check dimension consistency.

    Pure: identical inputs give identical reports.  Raises StructuralError on
    the first class of violation when raise_on_error is set.
    """
    violations = []
    m, k = model.dim_x, model.dim_bm
    if m < 1 or k < m or model.dim_mark < 1:
        violations.append(
            f"dimensions must satisfy m >= 1, k >= m, l >= 1; got m={m}, k={k}, l={model.dim_mark}"
        )

    periods = {name: c.period for name, c in model.coefficients().items()}
    if len(set(periods.values())) > 1:
        violations.append(f"coefficient periods differ: {periods}")

    if not violations:
        ts, xs, regimes = _probe_points(model)
        u_small = np.full(model.dim_mark, 0.25)
        u_large = np.full(model.dim_mark, 2.0) / math.sqrt(model.dim_mark)
        for t in ts:
            for x in xs:
                for i in regimes:
                    b = np.asarray(model.drift(t, x, i), dtype=float)
                    if b.shape != (m,):
                        violations.append(
                            f"drift returned shape {b.shape} at (t={t}, i={i}); expected ({m},)"
                        )
                    sig = np.asarray(model.diffusion(t, x, i), dtype=float)
                    if sig.shape != (m, k):
                        violations.append(
                            f"diffusion returned shape {sig.shape} at (t={t}, i={i}); "
                            f"expected ({m}, {k})"
                        )
                    for name, fn, u in (
                        ("small_jump", model.small_jump, u_small),
                        ("large_jump", model.large_jump, u_large),
                    ):
                        out = np.asarray(fn(t, x, i, u), dtype=float)
                        if out.shape != (m,):
                            violations.append(
                                f"{name} returned shape {out.shape} at (t={t}, i={i}); "
                                f"expected ({m},)"
                            )
                if violations:
                    break
            if violations:
                break

    report = ValidationReport(violations=violations, assumptions=dict(model.assumptions))
    if violations and raise_on_error:
        raise StructuralError("; ".join(violations))
    return report


def constant_periodic(value, period: float, name: str = "") -> PeriodicFn:
    """Wrap a time-constant coefficient value as a degenerate periodic function."""
    arr = np.asarray(value, dtype=float)

    def fn(t, *args):
        return arr

    return PeriodicFn(period=period, fn=fn, name=name)
