"""Switching mechanism: interval table, displacement h, dominating rate,
assumption checkers and the escape-function construction.

The regime chain is realised by thinning a rate-L Poisson stream: a candidate
at (x, i) with uniform mark r in [0, L] moves the regime to j when r falls in
the prefix interval of q_ij(x), and is a phantom otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import AssumptionError, DomainError, EscapeDepthError

__all__ = [
    "RateMatrixSpec",
    "IntervalTable",
    "CheckResult",
    "EscapeFunction",
    "interval_endpoints",
    "interval_table",
    "h_eval",
    "dominating_rate",
    "check_Q1",
    "check_Q2",
    "check_Q3",
    "escape_function",
    "embedded_jump_probability",
]


@dataclass(frozen=True)
class RateMatrixSpec:
    """x-dependent switching rates q_ij(x) on the truncated state space {1..state_cap}.

    q:            callable (x, i, j) -> rate, i != j, states 1-based
    state_cap:    truncation N_max of the simulated state space
    a:            column suprema, a(j) >= sup_{i != j, x} q_ij(x)
    tail_bound:   certified upper bound on sum_{j >= r} a(j)
    tail_bound_weighted: optional certified upper bound on sum_{j >= r} j * a(j)
    is_constant:  rates do not depend on x (enables closed-form oracles)
    """

    q: Callable
    state_cap: int
    a: Callable
    tail_bound: Callable
    tail_bound_weighted: Optional[Callable] = None
    is_constant: bool = False

    def row(self, x, i: int) -> np.ndarray:
        """Off-diagonal rates out of state i, index j-1 for j = 1..state_cap."""
        out = np.zeros(self.state_cap)
        for j in range(1, self.state_cap + 1):
            if j != i:
                out[j - 1] = self.q(x, i, j)
        return out

    def total_rate(self, x, i: int) -> float:
        """q_i(x) = sum_{j != i} q_ij(x) over the truncated state space."""
        return float(self.row(x, i).sum())


@dataclass(frozen=True)
class IntervalTable:
    """Half-open prefix intervals [lo_j, hi_j) for fixed (x, i); empty ones omitted."""

    state: int
    entries: tuple  # of (j, lo, hi)
    total: float

    def locate(self, r: float) -> int:
        """Displacement j - i for mark r, or 0 when r misses every interval."""
        for j, lo, hi in self.entries:
            if lo <= r < hi:
                return j - self.state
        return 0


def interval_table(spec: RateMatrixSpec, x, i: int) -> IntervalTable:
    entries = []
    cum = 0.0
    for j in range(1, spec.state_cap + 1):
        if j == i:
            continue
        rate = spec.q(x, i, j)
        if rate < 0:
            raise DomainError(f"negative rate q_{i}{j}({x}) = {rate}")
        if rate > 0:
            entries.append((j, cum, cum + rate))
            cum += rate
    return IntervalTable(state=i, entries=tuple(entries), total=cum)


def interval_endpoints(spec: RateMatrixSpec, x, i: int, j: int):
    """Prefix-sum endpoints of the interval assigned to target j, or None if empty.

    Targets are enumerated in increasing index order skipping s = i, so
    lo = sum_{s < j, s != i} q_is(x) and hi = lo + q_ij(x).
    """
    if i == j:
        raise DomainError("interval_endpoints requires i != j")
    if not 1 <= j <= spec.state_cap:
        raise DomainError(f"target state {j} outside 1..{spec.state_cap}")
    lo = 0.0
    for s in range(1, j):
        if s != i:
            lo += spec.q(x, i, s)
    rate = spec.q(x, i, j)
    if rate == 0.0:
        return None
    return (lo, lo + rate)


def h_eval(spec: RateMatrixSpec, x, i: int, r: float, L: Optional[float] = None) -> int:
    """Displacement h(x, i, r): j - i when r lies in the j-th prefix interval, else 0."""
    if L is None:
        L = dominating_rate(spec)
    if not 0.0 <= r <= L:
        raise DomainError(f"mark r={r} outside [0, L={L}]")
    return interval_table(spec, x, i).locate(r)


def dominating_rate(spec: RateMatrixSpec) -> float:
    """L = sum of column suprema over the truncated states plus the certified tail."""
    head = sum(spec.a(j) for j in range(1, spec.state_cap + 1))
    tail = spec.tail_bound(spec.state_cap + 1)
    L = head + tail
    if not math.isfinite(L):
        raise AssumptionError(f"dominating rate diverges (head={head}, tail={tail})")
    return L


@dataclass
class CheckResult:
    name: str
    estimate: float
    bound: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.name}: estimate={self.estimate:.9g} bound={self.bound:.3g} {status} {self.detail}"


def _weighted_sum(a: Callable, depth: int, weight: Optional[Callable] = None) -> float:
    js = np.arange(1, depth + 1, dtype=float)
    try:
        vals = np.asarray(a(js), dtype=float)
        if vals.shape != js.shape:
            raise TypeError
    except Exception:
        vals = np.array([float(a(int(j))) for j in js])
    if weight is not None:
        vals = vals * weight(js)
    return float(np.sum(vals))


def _effective_depth(spec: RateMatrixSpec, depth: int) -> int:
    # Finite-support specs: a(j) may be undefined beyond the cap.
    if spec.tail_bound(spec.state_cap + 1) == 0.0:
        return spec.state_cap
    return depth


def check_Q1(spec: RateMatrixSpec, depth: int = 100_000) -> CheckResult:
    """Summability of the column suprema: sum_j a(j) < infinity."""
    depth = _effective_depth(spec, depth)
    head = _weighted_sum(spec.a, depth)
    tail = spec.tail_bound(depth + 1)
    estimate = head + tail
    passed = math.isfinite(estimate)
    return CheckResult("Q1", estimate, tail, passed,
                       detail=f"(partial sum to {depth} + certified tail)")


def check_Q3(spec: RateMatrixSpec, depth: int = 100_000) -> CheckResult:
    """Weighted summability sum_j j * a(j) < infinity."""
    depth = _effective_depth(spec, depth)
    head = _weighted_sum(spec.a, depth, weight=lambda j: j)
    if spec.tail_bound_weighted is not None:
        tail = spec.tail_bound_weighted(depth + 1)
    elif spec.tail_bound(depth + 1) == 0.0:
        tail = 0.0
    else:
        tail = math.inf
    estimate = head + tail
    passed = math.isfinite(estimate)
    return CheckResult("Q3", estimate, tail, passed,
                       detail=f"(partial sum to {depth} + certified weighted tail)")


def check_Q2(spec: RateMatrixSpec, probe_grid) -> CheckResult:
    """Grid approximation of the reachability assumption.

    Builds the directed graph with an edge (i, j) whenever q_ij(x) > 0 at some
    probe point and passes iff it is strongly connected on {1..state_cap}.
    Positive-Lebesgue-measure sets are not decidable for black-box rates, so
    this is reported as an approximate check.
    """
    if len(probe_grid) == 0:
        raise DomainError("check_Q2 needs a nonempty probe grid")
    n = spec.state_cap
    adj = np.zeros((n, n), dtype=bool)
    for x in probe_grid:
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                if i != j and not adj[i - 1, j - 1] and spec.q(x, i, j) > 0:
                    adj[i - 1, j - 1] = True
    n_comp, _ = connected_components(adj, directed=True, connection="strong")
    passed = bool(n_comp == 1)
    return CheckResult("Q2", float(adj.sum()), float(n * (n - 1)), passed,
                       detail=f"(grid approximation, {len(probe_grid)} probe points, "
                              f"{n_comp} strongly connected components)")


@dataclass
class EscapeFunction:
    """Non-decreasing unbounded regime weight f built from the rho ladder.

    f(j) = n for j in [rho_n, rho_{n+1}); beyond the last built level f is the
    level count (understates the true f, which only matters through the
    certified remainder term).
    """

    rho: list
    n_levels: int
    certified_sum: float
    head_exact: float

    def f(self, j: int) -> int:
        if j < 1:
            raise DomainError("states are 1-based")
        level = 0
        for n, r in enumerate(self.rho, start=1):
            if j >= r:
                level = n
            else:
                break
        return level


def escape_function(a: Callable, tail_bound: Callable, depth: int = 10_000,
                    n_levels: int = 20) -> EscapeFunction:
    """Build rho_1 = 1, rho_n = min{r >= rho_{n-1} + 2 : sum_{j >= r} a(j) <= 2^-n}.

    Tails are evaluated as exact partial sums up to `depth` plus the certified
    tail bound beyond it.  Also returns a certified finite value dominating
    sum_j a(j) f(j): the built levels contribute exact sums (each further
    bounded by n 2^-n by construction) and levels beyond n_levels contribute
    at most sum_{n > n_levels} n 2^-n = (n_levels + 2) / 2^n_levels.
    """
    a_vals = np.array([float(a(j)) for j in range(1, depth + 1)])
    if np.any(a_vals < 0):
        raise DomainError("column suprema a(j) must be nonnegative")
    beyond = float(tail_bound(depth + 1))
    # tail(r) = sum_{j >= r} a(j), certified from above
    suffix = np.concatenate([np.cumsum(a_vals[::-1])[::-1], [0.0]]) + beyond

    def tail(r: int) -> float:
        return suffix[r - 1] if r <= depth + 1 else beyond

    rho = [1]
    for n in range(2, n_levels + 1):
        r = rho[-1] + 2
        while r <= depth and tail(r) > 0.5 ** n:
            r += 1
        if r > depth:
            raise EscapeDepthError(
                f"level {n}: no r <= depth={depth} with tail(r) <= 2^-{n}; increase depth"
            )
        rho.append(r)

    # Exact head: sum over built levels of n * sum_{j in [rho_n, rho_{n+1})} a(j)
    head = 0.0
    for n in range(1, n_levels):
        lo, hi = rho[n - 1], rho[n]
        head += n * float(a_vals[lo - 1:hi - 1].sum())
    # Last built level runs to infinity in f-truncation; tail(rho_last) <= 2^-n_levels
    # by construction, so its mass is bounded by n_levels * tail(rho_last).
    last = n_levels * tail(rho[-1])
    remainder = (n_levels + 2) / 2.0 ** n_levels
    certified = head + last + remainder
    return EscapeFunction(rho=rho, n_levels=n_levels, certified_sum=certified,
                          head_exact=head)


def embedded_jump_probability(spec: RateMatrixSpec, x, i: int, j: int) -> float:
    """Embedded-chain transition probability q_ij(x) / q_i(x) with the
    absorbing convention P(i -> i) = 1 when q_i(x) = 0."""
    if not 1 <= j <= spec.state_cap:
        raise DomainError(f"target state {j} outside 1..{spec.state_cap}")
    total = spec.total_rate(x, i)
    if total == 0.0:
        return 1.0 if j == i else 0.0
    if j == i:
        return 0.0
    return spec.q(x, i, j) / total
