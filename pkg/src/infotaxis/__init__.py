"""Lattice infotaxis: entropy-greedy source search and experiment harness."""

from .bessel import k0, k0e, log_k0
from .belief import (ArgmaxResult, BeliefGrid, BeliefUpdateError, argmax,
                     bayes_update, entropy, init_uniform, snapshot_text,
                     write_snapshot)
from .env_model import (Cell, EnvParams, GridSpec, correlation_length,
                        mean_field, mean_rate, rate_table, sample_detections)
from .experiments import (DensityCampaign, DensityMap, RunRecord, SweepResult,
                          SweepSpec, ValueStats, config_for_value,
                          density_map, derive_seed, mismatch_gamma,
                          mismatch_lambda, run_density_campaign, run_sweep,
                          sweep_csv_text, sweep_diffusion, sweep_gamma,
                          sweep_wind, write_matrix, write_pgm,
                          write_sweep_csv)
from .policy import (DEFAULT_MOVE_ORDER, MOVES, MoveEvaluation, PolicyConfig,
                     admissible_moves, choose_move, expected_delta_S,
                     expected_hits)
from .search import (ABORTED, FAIL_TYPE_I, FAIL_TYPE_II, SUCCESS,
                     SearchConfig, SearchOutcome, first_step, run_search,
                     trajectory_dump, write_trajectory)

__version__ = "0.1.0"
