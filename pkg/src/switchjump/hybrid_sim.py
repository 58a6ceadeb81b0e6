"""Interlacing integrator for the hybrid pair (X(t), Lambda(t)).

Between switch candidates the frozen-regime SDE is advanced by jump-adapted
Euler-Maruyama steps (left-point drift/diffusion, jump displacement applied
atomically after the diffusion substep).  At each candidate time the regime is
updated through the displacement function h with the candidate's uniform mark;
phantom candidates change nothing and are logged for the thinning diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .errors import DomainError, InsufficientDataError, NumericalBlowupError
from .levy import KIND_LARGE, KIND_SMALL, KIND_SWITCH, build_event_stream, compensator_drift
from .model import HybridModel
from .switching import RateMatrixSpec, dominating_rate, interval_table

__all__ = [
    "SimConfig",
    "SamplePath",
    "frozen_step",
    "simulate_hybrid",
    "simulate_paths",
    "holding_time_statistics",
    "embedded_chain_statistics",
    "thinning_statistics",
    "explosion_report",
    "export_paths_csv",
]


@dataclass(frozen=True)
class SimConfig:
    dt: float
    horizon: float
    n_paths: int
    seed: int
    x_cap: float = 1e6
    state_cap: Optional[int] = None  # defaults to the rate spec's cap

    def __post_init__(self):
        if not self.dt > 0 or not self.dt < self.horizon:
            raise DomainError(f"need 0 < dt < horizon, got dt={self.dt}, horizon={self.horizon}")
        if self.n_paths < 1:
            raise DomainError("n_paths must be >= 1")
        if self.x_cap <= 0:
            raise DomainError("x_cap must be positive")


@dataclass
class SamplePath:
    """One realization on a jump-adapted grid (uniform mesh united with events)."""

    t: np.ndarray
    x: np.ndarray          # shape (len(t), m)
    regime: np.ndarray     # int, constant between logged switches
    event_kind: list       # per grid point: "" or a levy KIND_* tag
    switch_log: list       # (time, from, to, x_pre_switch)
    candidate_log: list    # (time, regime, q_i(x), mark r, switched)
    cap_hit: Optional[float]
    seed: int
    path_index: int

    def state_at(self, t: float):
        """Cadlag left-constant evaluation at t within the path horizon."""
        if t < self.t[0] or t > self.t[-1] + 1e-12:
            raise DomainError(f"t={t} outside path range [{self.t[0]}, {self.t[-1]}]")
        idx = int(np.searchsorted(self.t, t, side="right")) - 1
        return self.x[idx], int(self.regime[idx])


def frozen_step(model: HybridModel, t: float, x: np.ndarray, i: int, dt_eff: float,
                bm_increment: np.ndarray, jump_mark=None, jump_kind: str = KIND_LARGE,
                comp_drift: Optional[np.ndarray] = None) -> np.ndarray:
    """One Euler-Maruyama step of the regime-i frozen SDE, plus an optional
    jump displacement applied at the end of the step."""
    if dt_eff <= 0:
        raise DomainError(f"dt_eff must be positive, got {dt_eff}")
    if comp_drift is None:
        comp_drift = compensator_drift(model.levy, model, t, x, i)[0]
    b = np.asarray(model.drift(t, x, i), dtype=float)
    sig = np.asarray(model.diffusion(t, x, i), dtype=float)
    x_new = x + (b + comp_drift) * dt_eff + sig @ bm_increment
    if jump_mark is not None:
        t_event = t + dt_eff
        if jump_kind == KIND_SMALL:
            x_new = x_new + np.asarray(model.small_jump(t_event, x_new, i, jump_mark), dtype=float)
        else:
            x_new = x_new + np.asarray(model.large_jump(t_event, x_new, i, jump_mark), dtype=float)
    if not np.all(np.isfinite(x_new)):
        raise NumericalBlowupError(
            f"non-finite state at t={t + dt_eff} in regime {i}", t=t + dt_eff, x=x, regime=i)
    return x_new


def _path_seed_seq(seed: int, path_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(path_index,))


def simulate_hybrid(model: HybridModel, x0, i0: int, cfg: SimConfig,
                    path_index: int = 0, t0: float = 0.0,
                    L: Optional[float] = None) -> SamplePath:
    """Run the interlacing construction for one path.

    The grid is the uniform mesh united with every event time; the regime used
    on [sigma_n, sigma_{n+1}) is the post-update regime at sigma_n.  Stops
    early (flagged, not an error) when |X| >= x_cap or Lambda >= state_cap.
    """
    if L is None:
        L = dominating_rate(model.rates)
    state_cap = cfg.state_cap if cfg.state_cap is not None else model.rates.state_cap
    m = model.dim_x

    ss = _path_seed_seq(cfg.seed, path_index)
    ss_bm, ss_events = ss.spawn(2)
    rng_bm = np.random.default_rng(ss_bm)
    events = build_event_stream(model.levy, L, cfg.horizon, ss_events)

    n_mesh = int(round(cfg.horizon / cfg.dt))
    mesh = t0 + np.linspace(0.0, cfg.horizon, n_mesh + 1)
    grid = np.union1d(mesh, t0 + events.times)
    ev_at = {t0 + t: k for t, k in zip(events.times, range(len(events)))}

    x = np.array(x0, dtype=float).reshape(m).copy()
    i = int(i0)
    ts = [grid[0]]
    xs = [x.copy()]
    regimes = [i]
    kinds = [""]
    switch_log = []
    candidate_log = []
    cap_hit = None

    if np.linalg.norm(x) >= cfg.x_cap or i > state_cap:
        cap_hit = grid[0]

    if cap_hit is None:
        for idx in range(1, len(grid)):
            t_prev, t_next = grid[idx - 1], grid[idx]
            dt_eff = t_next - t_prev
            if dt_eff <= 0:
                continue
            dw = rng_bm.standard_normal(model.dim_bm) * math.sqrt(dt_eff)
            comp = compensator_drift(model.levy, model, t_prev, x, i, rng=rng_bm)[0]
            x = frozen_step(model, t_prev, x, i, dt_eff, dw, comp_drift=comp)
            kind = ""
            ev_idx = ev_at.get(t_next)
            if ev_idx is not None:
                kind = events.kinds[ev_idx]
                mark = events.marks[ev_idx]
                if kind == KIND_SWITCH:
                    table = interval_table(model.rates, x, i)
                    disp = table.locate(mark)
                    candidate_log.append((t_next, i, table.total, mark, disp != 0))
                    if disp != 0:
                        switch_log.append((t_next, i, i + disp, x.copy()))
                        i = i + disp
                elif kind == KIND_SMALL:
                    x = x + np.asarray(model.small_jump(t_next, x, i, mark), dtype=float)
                else:
                    x = x + np.asarray(model.large_jump(t_next, x, i, mark), dtype=float)
                if not np.all(np.isfinite(x)):
                    raise NumericalBlowupError(
                        f"non-finite state after event at t={t_next}", t=t_next, x=x, regime=i)
            ts.append(t_next)
            xs.append(x.copy())
            regimes.append(i)
            kinds.append(kind)
            if np.linalg.norm(x) >= cfg.x_cap or i > state_cap:
                cap_hit = t_next
                break

    return SamplePath(
        t=np.asarray(ts), x=np.asarray(xs), regime=np.asarray(regimes, dtype=int),
        event_kind=kinds, switch_log=switch_log, candidate_log=candidate_log,
        cap_hit=cap_hit, seed=cfg.seed, path_index=path_index)


@dataclass
class TerminalEnsemble:
    """Terminal states only; memory-light alternative to keeping full paths."""

    x: np.ndarray
    regime: np.ndarray
    capped: np.ndarray


def simulate_paths(model: HybridModel, x0, i0: int, cfg: SimConfig, t0: float = 0.0,
                   keep: str = "full", n_workers: int = 1):
    """Simulate cfg.n_paths independent paths (path-index keyed RNG streams).

    Results are independent of execution order, so parallel and serial runs
    agree bit-exactly once merged in path-index order; n_workers > 1 fans the
    path loop out over a thread pool.
    """
    if keep not in ("full", "terminal"):
        raise DomainError(f"keep must be 'full' or 'terminal', got {keep!r}")
    L = dominating_rate(model.rates)
    if n_workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            path_iter = pool.map(
                lambda p: simulate_hybrid(model, x0, i0, cfg, path_index=p, t0=t0, L=L),
                range(cfg.n_paths))
            if keep == "full":
                return list(path_iter)
            return _reduce_terminal(path_iter, cfg.n_paths, model.dim_x)
    path_iter = (simulate_hybrid(model, x0, i0, cfg, path_index=p, t0=t0, L=L)
                 for p in range(cfg.n_paths))
    if keep == "full":
        return list(path_iter)
    return _reduce_terminal(path_iter, cfg.n_paths, model.dim_x)


def _reduce_terminal(path_iter, n_paths: int, dim_x: int) -> TerminalEnsemble:
    xs = np.empty((n_paths, dim_x))
    regimes = np.empty(n_paths, dtype=int)
    capped = np.zeros(n_paths, dtype=bool)
    for p, path in enumerate(path_iter):
        xs[p] = path.x[-1]
        regimes[p] = path.regime[-1]
        capped[p] = path.cap_hit is not None
    return TerminalEnsemble(x=xs, regime=regimes, capped=capped)


# --- statistics over simulated ensembles ------------------------------------

def _holdings(paths):
    """Completed regime holdings as (path, t_start, t_end, regime)."""
    out = []
    for path in paths:
        t_start = path.t[0]
        regime = int(path.regime[0])
        for (t_sw, i_from, i_to, _x) in path.switch_log:
            out.append((path, t_start, t_sw, i_from))
            t_start, regime = t_sw, i_to
    return out


def _integrated_rate(path: SamplePath, spec: RateMatrixSpec, t_start: float, t_end: float,
                     regime: int) -> float:
    """Trapezoid of q_regime(X(s)) over [t_start, t_end] along the path grid."""
    lo = int(np.searchsorted(path.t, t_start, side="left"))
    hi = int(np.searchsorted(path.t, t_end, side="right")) - 1
    ts = path.t[lo:hi + 1]
    if len(ts) < 2:
        return spec.total_rate(path.x[lo], regime) * (t_end - t_start)
    qs = np.array([spec.total_rate(path.x[j], regime) for j in range(lo, hi + 1)])
    return float(np.trapezoid(qs, ts))


@dataclass
class HoldingTimeReport:
    n_holdings: int
    ks_statistic: float
    p_value: float
    per_regime: dict   # regime -> (n, ks, p) for constant-rate specs
    mode: str          # "constant" or "integrated"


def holding_time_statistics(paths, spec: RateMatrixSpec, min_holdings: int = 100,
                            start_before: Optional[float] = None) -> HoldingTimeReport:
    """Compare logged holding times with the survival law exp(-int q).

    Constant rates: per-regime KS against Exp(q_i).  x-dependent rates: the
    integrated hazard of each holding is KS-tested against Exp(1) (exact under
    the time-change of the holding-time identity).

    Only completed holdings are logged, which under-represents long holdings
    started near the horizon; passing start_before keeps only holdings that
    begin by that time, shrinking the censoring bias to the survival mass
    beyond horizon - start_before.
    """
    holdings = _holdings(paths)
    if start_before is not None:
        holdings = [h for h in holdings if h[1] <= start_before]
    if len(holdings) < min_holdings:
        raise InsufficientDataError(
            f"only {len(holdings)} completed holdings; need >= {min_holdings}")
    if spec.is_constant:
        x_any = holdings[0][0].x[0]
        per_regime = {}
        all_scaled = []
        for regime in sorted({h[3] for h in holdings}):
            durations = np.array([t1 - t0 for (_p, t0, t1, i) in holdings if i == regime])
            q_i = spec.total_rate(x_any, regime)
            scaled = durations * q_i
            all_scaled.append(scaled)
            ks = stats.kstest(scaled, "expon")
            per_regime[regime] = (len(durations), float(ks.statistic), float(ks.pvalue))
        pooled = np.concatenate(all_scaled)
        ks = stats.kstest(pooled, "expon")
        return HoldingTimeReport(len(pooled), float(ks.statistic), float(ks.pvalue),
                                 per_regime, mode="constant")
    hazards = np.array([
        _integrated_rate(path, spec, t0, t1, i) for (path, t0, t1, i) in holdings
    ])
    ks = stats.kstest(hazards, "expon")
    return HoldingTimeReport(len(hazards), float(ks.statistic), float(ks.pvalue),
                             {}, mode="integrated")


@dataclass
class EmbeddedChainReport:
    counts: dict        # (i, j) -> observed count
    frequencies: dict   # (i, j) -> observed frequency among switches out of i
    predicted: dict     # (i, j) -> mean of q_ij/q_i at the pre-switch states
    within_3sigma: dict
    insufficient: list  # regimes with too few logged switches


def embedded_chain_statistics(paths, spec: RateMatrixSpec,
                              min_per_regime: int = 100) -> EmbeddedChainReport:
    """Empirical switch-target frequencies against q_ij/q_i at pre-switch states."""
    by_origin = {}
    for path in paths:
        for (_t, i_from, i_to, x_pre) in path.switch_log:
            by_origin.setdefault(i_from, []).append((i_to, x_pre))
    counts, freqs, predicted, within = {}, {}, {}, {}
    insufficient = []
    for i, switches in sorted(by_origin.items()):
        n = len(switches)
        if n < min_per_regime:
            insufficient.append(i)
            continue
        targets = sorted({j for j, _x in switches})
        for j in targets:
            counts[(i, j)] = sum(1 for jj, _x in switches if jj == j)
            freqs[(i, j)] = counts[(i, j)] / n
            probs = [spec.q(x, i, j) / spec.total_rate(x, i) for _jj, x in switches]
            p = float(np.mean(probs))
            predicted[(i, j)] = p
            sigma = math.sqrt(max(p * (1 - p), 1e-300) / n)
            within[(i, j)] = abs(freqs[(i, j)] - p) <= 3 * sigma
    return EmbeddedChainReport(counts, freqs, predicted, within, insufficient)


@dataclass
class ThinningReport:
    per_regime: dict  # regime -> (n_candidates, observed fraction, predicted, within 3 sigma)


def thinning_statistics(paths, spec: RateMatrixSpec, L: Optional[float] = None) -> ThinningReport:
    """Fraction of non-phantom candidates against q_i(x)/L per regime."""
    if L is None:
        L = dominating_rate(spec)
    per_regime = {}
    by_regime = {}
    for path in paths:
        for (_t, i, q_i, _r, switched) in path.candidate_log:
            by_regime.setdefault(i, []).append((q_i, switched))
    for i, cands in sorted(by_regime.items()):
        n = len(cands)
        observed = sum(1 for _q, s in cands if s) / n
        predicted = float(np.mean([q / L for q, _s in cands]))
        sigma = math.sqrt(max(predicted * (1 - predicted), 1e-300) / n)
        per_regime[i] = (n, observed, predicted, abs(observed - predicted) <= 3 * sigma)
    return ThinningReport(per_regime)


@dataclass
class ExplosionReport:
    fraction: float
    hit_times: list


def explosion_report(paths) -> ExplosionReport:
    hits = [p.cap_hit for p in paths if p.cap_hit is not None]
    return ExplosionReport(fraction=len(hits) / len(paths), hit_times=sorted(hits))


def export_paths_csv(paths, fh) -> None:
    """Write paths as rows: path_index, t, x_1..x_m, lambda, event_kind."""
    m = paths[0].x.shape[1]
    header = ["path_index", "t"] + [f"x_{d + 1}" for d in range(m)] + ["lambda", "event_kind"]
    fh.write(",".join(header) + "\n")
    for path in paths:
        for row in range(len(path.t)):
            cells = [str(path.path_index), repr(float(path.t[row]))]
            cells += [repr(float(v)) for v in path.x[row]]
            cells += [str(int(path.regime[row])), path.event_kind[row]]
            fh.write(",".join(cells) + "\n")
