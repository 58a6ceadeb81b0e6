"""Driving noise: Brownian increments are drawn by the integrator; this module
samples the three independent Poisson drivers and the compensator drift.

Small jumps (|u| < 1) run in finite-activity mode with an explicit compensator
drift; infinite activity is supported only through a user-chosen truncation
with documented bias.  Large jumps (|u| >= 1) always have finite rate.  Switch
candidates arrive at the dominating rate L with uniform marks on [0, L].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, DomainError

KIND_LARGE = "large_jump"
KIND_SMALL = "small_jump"
KIND_SWITCH = "switch_candidate"


@dataclass(frozen=True)
class LevyMeasureSpec:
    """Finite-activity description of the Levy measure nu.

    rate_small:   lambda_s = nu({|u| < 1}) (or the truncated rate at level eps)
    sampler_small: rng -> mark u with |u| < 1, distributed as nu restricted
                   and normalised to a probability on {|u| < 1}
    rate_large:   lambda_g = nu({|u| >= 1}), always finite
    sampler_large: rng -> mark u with |u| >= 1
    compensator_mode: "closed_form" with compensator(t, x, i) = integral of
                   H(t, x, i, u) nu(du) over {|u| < 1}, or "monte_carlo" with
                   inner_samples draws from sampler_small
    """

    dim_mark: int
    rate_small: float = 0.0
    rate_large: float = 0.0
    sampler_small: Optional[Callable] = None
    sampler_large: Optional[Callable] = None
    compensator_mode: str = "closed_form"
    compensator: Optional[Callable] = None
    inner_samples: int = 1000
    truncation_level: Optional[float] = None

    def __post_init__(self):
        if self.rate_small < 0 or self.rate_large < 0:
            raise ConfigurationError("jump rates must be nonnegative")
        if self.rate_small > 0 and self.sampler_small is None:
            raise ConfigurationError("rate_small > 0 requires sampler_small")
        if self.rate_large > 0 and self.sampler_large is None:
            raise ConfigurationError("rate_large > 0 requires sampler_large")
        if self.compensator_mode not in ("closed_form", "monte_carlo"):
            raise ConfigurationError(f"unknown compensator_mode {self.compensator_mode!r}")
        if self.compensator_mode == "monte_carlo" and self.inner_samples <= 0:
            raise ConfigurationError("monte_carlo compensator needs inner_samples >= 1")


def no_jumps(dim_mark: int = 1) -> LevyMeasureSpec:
    """Levy spec with both jump parts switched off."""
    return LevyMeasureSpec(dim_mark=dim_mark)


@dataclass(frozen=True)
class EventStream:
    """Time-sorted superposition of the three independent drivers."""

    times: np.ndarray          # strictly increasing
    kinds: tuple               # KIND_* per event
    marks: tuple               # vector u for jumps, scalar r for candidates

    def __len__(self):
        return len(self.times)


def sample_poisson_stream(rate: float, horizon: float, rng: np.random.Generator) -> np.ndarray:
    """Arrival times of a homogeneous Poisson(rate) process on (0, horizon]."""
    if rate < 0:
        raise DomainError(f"rate must be nonnegative, got {rate}")
    if horizon <= 0:
        raise DomainError(f"horizon must be positive, got {horizon}")
    if rate == 0:
        return np.empty(0)
    n = rng.poisson(rate * horizon)
    return np.sort(rng.uniform(0.0, horizon, size=n))


def build_event_stream(levy: LevyMeasureSpec, L: float, horizon: float,
                       seed_seq: np.random.SeedSequence) -> EventStream:
    """Merge large-jump, small-jump and switch-candidate streams.

    Independence of the three drivers is realised by three disjoint RNG
    substreams spawned deterministically from seed_seq, so the stream is a
    bit-exact function of (spec, L, horizon, seed).
    """
    ss_large, ss_small, ss_switch = seed_seq.spawn(3)
    times = []
    kinds = []
    marks = []

    rng = np.random.default_rng(ss_large)
    for t in sample_poisson_stream(levy.rate_large, horizon, rng):
        times.append(t)
        kinds.append(KIND_LARGE)
        marks.append(levy.sampler_large(rng))

    rng = np.random.default_rng(ss_small)
    for t in sample_poisson_stream(levy.rate_small, horizon, rng):
        times.append(t)
        kinds.append(KIND_SMALL)
        marks.append(levy.sampler_small(rng))

    rng = np.random.default_rng(ss_switch)
    cand = sample_poisson_stream(L, horizon, rng)
    for t, r in zip(cand, rng.uniform(0.0, L, size=len(cand))):
        times.append(t)
        kinds.append(KIND_SWITCH)
        marks.append(r)

    order = np.argsort(times, kind="stable")
    times = np.asarray(times, dtype=float)[order] if times else np.empty(0)
    return EventStream(
        times=times,
        kinds=tuple(kinds[o] for o in order),
        marks=tuple(marks[o] for o in order),
    )


def compensator_drift(levy: LevyMeasureSpec, model, t: float, x, i: int,
                      rng: Optional[np.random.Generator] = None):
    """Drift correction -integral of H(t, x, i, u) nu(du) over {|u| < 1}.

    Returns (value, stderr): stderr is 0 in closed_form mode and the Monte
    Carlo standard error of the estimate otherwise.
    """
    m = model.dim_x
    if levy.rate_small == 0.0:
        return np.zeros(m), 0.0
    if levy.compensator_mode == "closed_form":
        if levy.compensator is None:
            raise ConfigurationError("closed_form compensator requires the compensator callable")
        return -np.asarray(levy.compensator(t, x, i), dtype=float), 0.0
    if rng is None:
        rng = np.random.default_rng(0)
    draws = np.empty((levy.inner_samples, m))
    for s in range(levy.inner_samples):
        u = levy.sampler_small(rng)
        draws[s] = model.small_jump(t, x, i, u)
    mean = draws.mean(axis=0)
    stderr = levy.rate_small * float(
        np.linalg.norm(draws.std(axis=0, ddof=1)) / math.sqrt(levy.inner_samples)
    )
    return -levy.rate_small * mean, stderr


# --- named jump-size samplers selectable from config files -----------------

def _uniform_ball(dim: int):
    def sampler(rng):
        v = rng.standard_normal(dim)
        radius = rng.uniform() ** (1.0 / dim)
        return 0.999 * radius * v / np.linalg.norm(v)
    return sampler


def _point_mass(dim: int, magnitude: float = 1.0):
    u = np.full(dim, magnitude / math.sqrt(dim))

    def sampler(rng):
        return u.copy()
    return sampler


def _exp_radial(dim: int, scale: float = 1.0):
    def sampler(rng):
        v = rng.standard_normal(dim)
        return (1.0 + rng.exponential(scale)) * v / np.linalg.norm(v)
    return sampler


SAMPLERS = {
    "uniform_ball": _uniform_ball,
    "point_mass": _point_mass,
    "exp_radial": _exp_radial,
}


def make_sampler(name: str, dim: int, **kwargs):
    if name not in SAMPLERS:
        raise ConfigurationError(f"unknown jump sampler {name!r}; choose from {sorted(SAMPLERS)}")
    return SAMPLERS[name](dim, **kwargs)
