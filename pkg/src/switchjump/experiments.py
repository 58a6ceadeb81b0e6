"""Experiment runners behind the CLI: build the model from config, run one of
the six registered experiment kinds, write CSV reports and render figures.

Exit codes: 0 on pass/complete, 2 on statistical failure (with report), 1 is
reserved for usage/configuration errors and raised as ConfigurationError.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .analysis import (cesaro_average, ctmc_from_constant_rates, periodicity_test,
                       series_transition, uniformization)
from .config import config_hash, split_section
from .errors import ConfigurationError, SwitchJumpError
from .generator import TestFunction, dynkin_residual
from .hybrid_sim import SimConfig, simulate_paths
from .model import validate_model
from .plots import render_figure
from .presets import PRESET_IDS, get_preset
from .reports import write_report
from .switching import check_Q1, check_Q2, check_Q3, escape_function

__all__ = ["ExperimentResult", "run_experiment", "EXPERIMENT_KINDS", "worker_count"]

EXPERIMENT_KINDS = ("simulate", "check-assumptions", "dynkin", "periodicity",
                    "series-vs-oracle", "cesaro")


@dataclass
class ExperimentResult:
    exit_code: int
    reports: list = field(default_factory=list)
    figures: list = field(default_factory=list)
    lines: list = field(default_factory=list)  # human-readable summary


def worker_count() -> int:
    """Worker cap from SWITCHJUMP_THREADS (default 1)."""
    raw = os.environ.get("SWITCHJUMP_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigurationError(f"SWITCHJUMP_THREADS must be an integer, got {raw!r}")
    return max(1, n)


def _build_model(cfg: dict):
    preset_id = cfg.get("preset")
    if not preset_id:
        raise ConfigurationError("config needs a 'preset' key "
                                 f"(one of: {', '.join(PRESET_IDS)})")
    overrides = split_section(cfg, "model")
    return get_preset(str(preset_id), **overrides)


def _sim_config(cfg: dict, seed_override=None, paths_override=None) -> SimConfig:
    sim = split_section(cfg, "sim")
    seed = seed_override if seed_override is not None else sim.get("seed", 0)
    n_paths = paths_override if paths_override is not None else sim.get("paths", 200)
    kwargs = {}
    if "x_cap" in sim:
        kwargs["x_cap"] = float(sim["x_cap"])
    if "state_cap" in sim:
        kwargs["state_cap"] = int(sim["state_cap"])
    return SimConfig(dt=float(sim.get("dt", 0.01)), horizon=float(sim.get("horizon", 1.0)),
                     n_paths=int(n_paths), seed=int(seed), **kwargs)


def _initial_state(cfg: dict, model):
    raw = cfg.get("init.x")
    if raw is None:
        x0 = np.zeros(model.dim_x)
    else:
        x0 = np.array([float(p) for p in str(raw).split(",")])
        if x0.shape != (model.dim_x,):
            raise ConfigurationError(
                f"init.x has {len(x0)} components; model needs {model.dim_x}")
    i0 = int(cfg.get("init.regime", 1))
    if i0 < 1:
        raise ConfigurationError("init.regime must be >= 1")
    return x0, i0


def _out_path(out_dir: str, name: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


def run_experiment(cfg: dict, out_dir: str, seed_override=None, paths_override=None,
                   render: bool = True) -> ExperimentResult:
    kind = cfg.get("experiment")
    if kind not in EXPERIMENT_KINDS:
        raise ConfigurationError(
            f"experiment must be one of {', '.join(EXPERIMENT_KINDS)}; got {kind!r}")
    sim_cfg = _sim_config(cfg, seed_override, paths_override)
    chash = config_hash(cfg, seed=sim_cfg.seed)
    runner = _RUNNERS[kind]
    return runner(cfg, sim_cfg, chash, out_dir, render)


# --- individual experiment kinds --------------------------------------------

def _run_simulate(cfg, sim_cfg, chash, out_dir, render):
    model = _build_model(cfg)
    x0, i0 = _initial_state(cfg, model)
    paths = simulate_paths(model, x0, i0, sim_cfg, n_workers=worker_count())
    rows = []
    for path in paths:
        for j in range(len(path.t)):
            row = {"path_index": path.path_index, "t": float(path.t[j]),
                   "lambda": int(path.regime[j]),
                   "event_kind": path.event_kind[j] or ""}
            for d in range(model.dim_x):
                row[f"x_{d + 1}"] = float(path.x[j, d])
            rows.append(row)
    fields = ["path_index", "t"] + [f"x_{d + 1}" for d in range(model.dim_x)] + \
        ["lambda", "event_kind"]
    report = _out_path(out_dir, "paths.csv")
    write_report(report, fields, rows, seed=sim_cfg.seed, config_hash=chash)
    result = ExperimentResult(exit_code=0, reports=[report])
    capped = sum(1 for p in paths if p.cap_hit is not None)
    result.lines.append(f"simulate: {len(paths)} paths, {capped} hit the cap")
    if render:
        result.figures.append(render_figure(report, "trajectories",
                                            _out_path(out_dir, "trajectories.png")))
    return result


def _run_check_assumptions(cfg, sim_cfg, chash, out_dir, render):
    model = _build_model(cfg)
    rows = []

    validation = validate_model(model, raise_on_error=False)
    rows.append({"check": "structure", "estimate": "", "bound": "",
                 "passed": validation.ok,
                 "detail": "; ".join(validation.violations) or "well-formed"})

    spec = model.rates
    for check in (check_Q1(spec), check_Q3(spec)):
        rows.append({"check": check.name, "estimate": check.estimate,
                     "bound": check.bound, "passed": check.passed,
                     "detail": check.detail})
    m = model.dim_x
    grid = [np.ones(m), -np.ones(m), 1.5 * np.eye(m)[0], 0.5 * np.ones(m)]
    q2 = check_Q2(spec, grid)
    rows.append({"check": q2.name, "estimate": q2.estimate, "bound": q2.bound,
                 "passed": q2.passed, "detail": q2.detail})
    try:
        esc = escape_function(spec.a, spec.tail_bound)
        rows.append({"check": "escape_function", "estimate": esc.certified_sum,
                     "bound": "", "passed": True,
                     "detail": f"rho prefix {esc.rho[:6]}"})
    except SwitchJumpError as exc:
        rows.append({"check": "escape_function", "estimate": "", "bound": "",
                     "passed": False, "detail": str(exc)})

    report = _out_path(out_dir, "assumption_checks.csv")
    fields = ["check", "estimate", "bound", "passed", "detail"]
    write_report(report, fields, rows, seed=sim_cfg.seed, config_hash=chash)
    all_pass = all(r["passed"] for r in rows)
    result = ExperimentResult(exit_code=0 if all_pass else 2, reports=[report])
    for r in rows:
        status = "pass" if r["passed"] else "FAIL"
        result.lines.append(f"{r['check']}: {status} ({r['detail']})")
    if render:
        result.figures.append(render_figure(report, "checks",
                                            _out_path(out_dir, "checks.png")))
    return result


def _quadratic_plus_regime() -> TestFunction:
    """f(t, x, i) = |x|^2 + i, the default Dynkin test function."""
    return TestFunction(
        f=lambda t, x, i: float(np.dot(x, x)) + i,
        f_t=lambda t, x, i: 0.0,
        f_x=lambda t, x, i: 2.0 * np.asarray(x, dtype=float),
        f_xx=lambda t, x, i: 2.0 * np.eye(len(np.atleast_1d(x))),
    )


def _run_dynkin(cfg, sim_cfg, chash, out_dir, render):
    model = _build_model(cfg)
    x0, i0 = _initial_state(cfg, model)
    t_end = float(cfg.get("dynkin.t", min(1.0, sim_cfg.horizon)))
    inner = int(cfg.get("dynkin.inner_samples", 200))
    res = dynkin_residual(model, _quadratic_plus_regime(), t_end, x0, i0, sim_cfg,
                          inner_samples=inner, f_growth=(0.0, 1.0))
    lo, hi = res.ci
    ok = (lo <= 0.0 <= hi) and not res.inconclusive
    rows = [{"t_end": t_end, "residual": res.residual,
             "ci_halfwidth": res.ci_halfwidth, "n_paths": res.n_paths,
             "cap_fraction": res.cap_fraction, "passed": ok}]
    report = _out_path(out_dir, "dynkin.csv")
    write_report(report, list(rows[0].keys()), rows, seed=sim_cfg.seed, config_hash=chash)
    result = ExperimentResult(exit_code=0 if ok else 2, reports=[report])
    result.lines.append(
        f"dynkin: residual {res.residual:+.4f} +/- {res.ci_halfwidth:.4f} "
        f"({'pass' if ok else 'FAIL'})")
    if render:
        result.figures.append(render_figure(report, "dynkin",
                                            _out_path(out_dir, "dynkin.png")))
    return result


def _run_periodicity(cfg, sim_cfg, chash, out_dir, render):
    model = _build_model(cfg)
    x0, i0 = _initial_state(cfg, model)
    sect = split_section(cfg, "periodicity")
    rep = periodicity_test(
        model, x0, i0, sim_cfg,
        burn_in_periods=int(sect.get("burn_in", 20)),
        compare_periods=int(sect.get("compare_periods", 2)),
        n_permutations=int(sect.get("permutations", 300)),
        subsample=int(sect.get("subsample", 800)),
        alpha=float(sect.get("alpha", 0.01)),
        time_varying=bool(sect.get("time_varying", True)),
    )
    rows = [{"pair": f"k={k1} vs k={k2}", "statistic": stat, "p_value": p,
             "role": "lag"} for k1, k2, stat, p in rep.lag_tests]
    if rep.control is not None:
        rows.append({"pair": "k vs k+1/2", "statistic": rep.control[0],
                     "p_value": rep.control[1], "role": "control"})
    report = _out_path(out_dir, "periodicity.csv")
    write_report(report, ["pair", "statistic", "p_value", "role"], rows,
                 seed=sim_cfg.seed, config_hash=chash)
    law_rows = []
    for label, law in (rep.laws or {}).items():
        for idx in range(len(law)):
            law_rows.append({"label": label,
                             "abs_x": float(np.linalg.norm(law.x[idx])),
                             "regime": int(law.regime[idx])})
    laws_csv = _out_path(out_dir, "law_snapshots.csv")
    write_report(laws_csv, ["label", "abs_x", "regime"], law_rows,
                 seed=sim_cfg.seed, config_hash=chash)
    passed = rep.verdict.startswith("PASS")
    result = ExperimentResult(exit_code=0 if passed else 2, reports=[report, laws_csv])
    result.lines.append(f"periodicity: {rep.verdict}")
    for k1, k2, stat, p in rep.lag_tests:
        result.lines.append(f"  k={k1} vs k={k2}: p={p:.4f}")
    if rep.control is not None:
        result.lines.append(f"  half-period control: p={rep.control[1]:.4f}")
    if render:
        result.figures.append(render_figure(laws_csv, "periodicity",
                                            _out_path(out_dir, "periodicity.png")))
    return result


def _run_series_vs_oracle(cfg, sim_cfg, chash, out_dir, render):
    model = _build_model(cfg)
    if not model.rates.is_constant:
        raise ConfigurationError(
            "series-vs-oracle needs a constant-rate preset (x-independent Q)")
    oracle = ctmc_from_constant_rates(model.rates)
    t = float(cfg.get("series.t", 1.0))
    max_terms = int(cfg.get("series.max_terms", 20))
    P = uniformization(oracle, t)
    n_states = oracle.n_states
    rows = []
    all_within = True
    for n in range(max_terms + 1):
        deviation = 0.0
        bound = 0.0
        for i in range(1, n_states + 1):
            for j in range(1, n_states + 1):
                res = series_transition(oracle, i, j, 0.0, t, n)
                deviation = max(deviation, abs(res.value - P[i - 1, j - 1]))
                bound = res.error_bound
        within = deviation <= bound + 1e-10
        all_within = all_within and within
        rows.append({"n_terms": n, "deviation": deviation, "bound": bound,
                     "within_bound": within})
    report = _out_path(out_dir, "series_vs_oracle.csv")
    write_report(report, ["n_terms", "deviation", "bound", "within_bound"], rows,
                 seed=sim_cfg.seed, config_hash=chash)
    result = ExperimentResult(exit_code=0 if all_within else 2, reports=[report])
    result.lines.append(
        f"series-vs-oracle: max deviation {max(r['deviation'] for r in rows):.3e}, "
        f"{'all within bound' if all_within else 'BOUND VIOLATED'}")
    if render:
        result.figures.append(render_figure(report, "series",
                                            _out_path(out_dir, "series.png")))
    return result


_PHI = {
    "regime_is_1": lambda x, i: 1.0 if i == 1 else 0.0,
    "bounded_abs2": lambda x, i: min(float(np.dot(x, x)), 100.0),
}


def _parse_starts(raw: str, dim_x: int):
    starts = []
    for part in str(raw).split(";"):
        part = part.strip()
        if not part:
            continue
        xs, _, regime = part.partition("@")
        x0 = np.array([float(p) for p in xs.split(",")])
        if x0.shape != (dim_x,):
            raise ConfigurationError(f"start {part!r} has wrong dimension")
        starts.append((x0, int(regime or 1)))
    if len(starts) < 2:
        raise ConfigurationError("cesaro.starts needs >= 2 entries 'x1,..,xm@i'")
    return starts


def _run_cesaro(cfg, sim_cfg, chash, out_dir, render):
    model = _build_model(cfg)
    phi_name = str(cfg.get("cesaro.phi", "regime_is_1"))
    if phi_name not in _PHI:
        raise ConfigurationError(
            f"unknown cesaro.phi {phi_name!r}; available: {', '.join(sorted(_PHI))}")
    n_periods = int(cfg.get("cesaro.periods", 50))
    raw_starts = cfg.get("cesaro.starts")
    if raw_starts is None:
        starts = [(np.zeros(model.dim_x), 1), (np.ones(model.dim_x), 2)]
    else:
        starts = _parse_starts(raw_starts, model.dim_x)
    rep = cesaro_average(model, _PHI[phi_name], s=0.0, theta=model.period,
                         n_periods=n_periods, start_points=starts, cfg=sim_cfg)
    rows = []
    for idx, (x0, i0) in enumerate(starts):
        label = ",".join(f"{v:g}" for v in x0) + f"@{i0}"
        for n in range(n_periods):
            rows.append({"start": label, "n_periods": n + 1,
                         "running_mean": float(rep.running_means[idx, n]),
                         "final_ci_lo": rep.final_ci[idx][0],
                         "final_ci_hi": rep.final_ci[idx][1]})
    report = _out_path(out_dir, "cesaro.csv")
    write_report(report, ["start", "n_periods", "running_mean",
                          "final_ci_lo", "final_ci_hi"], rows,
                 seed=sim_cfg.seed, config_hash=chash)
    ok = rep.overlap and not rep.divergent
    result = ExperimentResult(exit_code=0 if ok else 2, reports=[report])
    result.lines.append(
        f"cesaro: CIs {'overlap' if rep.overlap else 'DISJOINT'}"
        + (", divergence flagged" if rep.divergent else ""))
    if render:
        result.figures.append(render_figure(report, "cesaro",
                                            _out_path(out_dir, "cesaro.png")))
    return result


_RUNNERS = {
    "simulate": _run_simulate,
    "check-assumptions": _run_check_assumptions,
    "dynkin": _run_dynkin,
    "periodicity": _run_periodicity,
    "series-vs-oracle": _run_series_vs_oracle,
    "cesaro": _run_cesaro,
}
