"""Simulation and statistical verification of regime-switching jump diffusions
with periodic coefficients.

Core objects: HybridModel (coefficients + rates + jump measure), simulate_paths
(jump-adapted Euler with interlaced regime switching), the extended-generator
tools (apply_A, dynkin_residual, lyapunov_scan), transition-probability series
with certified remainders, and law-level statistics (energy-distance
periodicity tests, Cesaro averages).
"""

from .analysis import (CTMCOracle, EmpiricalLaw, cesaro_average,
                       ctmc_from_constant_rates, empirical_law_at, energy_distance,
                       energy_permutation_test, hybrid_distance, periodicity_test,
                       regime_occupation, series_transition, uniformization)
from .errors import (AssumptionError, ConfigurationError, DomainError, EmptyLawError,
                     EscapeDepthError, InsufficientDataError, NumericalBlowupError,
                     StructuralError, SwitchJumpError, TailDivergenceError)
from .generator import (LyapunovSpec, TestFunction, apply_A, apply_Li,
                        apply_Li_with_error, apply_Q, check_sigma_nondegenerate,
                        dynkin_residual, lyapunov_scan)
from .hybrid_sim import (SamplePath, SimConfig, TerminalEnsemble,
                         embedded_chain_statistics, explosion_report,
                         holding_time_statistics, simulate_hybrid, simulate_paths,
                         thinning_statistics)
from .levy import (EventStream, LevyMeasureSpec, build_event_stream,
                   compensator_drift, make_sampler, no_jumps, sample_poisson_stream)
from .model import (HybridModel, PeriodicFn, ValidationReport, constant_periodic,
                    reduce_time, validate_model)
from .presets import (LemniscateParams, LorenzParams, get_preset,
                      lemniscate_drift, lemniscate_invariant, lemniscate_model,
                      lorenz_model, preset_lyapunov, pure_switching_model,
                      two_state_linear_model)
from .switching import (EscapeFunction, IntervalTable, RateMatrixSpec, check_Q1,
                        check_Q2, check_Q3, dominating_rate,
                        embedded_jump_probability, escape_function, h_eval,
                        interval_table)

__version__ = "0.1.0"
