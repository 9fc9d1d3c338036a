"""Accelerated first-order methods under noisy gradient oracles."""

from .core import (ConfigurationError, FeasibleSet, Problem, QuadraticForm,
                   ReferenceSolveError, RunConfig, RunRecord, Schedule,
                   UnsupportedCombinationError, bregman_divergence,
                   reference_optimum)
from .geometry import (Regularizer, argmin_m_k, canonical_point, contains,
                       grad_psi_star, project, project_l1_ball, project_simplex,
                       sample_point)
from .harness import (AggregateRecord, Experiment, aggregate, emit_csv,
                      read_aggregate_csv, read_run_csv, run_experiment,
                      run_single, write_aggregate_csv, write_run_csv)
from .methods import (AgdpState, MagdpState, RestartPolicy, agd_step, agdp_step,
                      apply_restart, axgd_step, devolder_gap_bound, gd_step,
                      init_dual_state, init_magdp_state, magdp_step,
                      make_schedule, noise_energy_proxy, restart_check,
                      run_method)
from .oracles import GradientOracle, NoiseModel
from .problems import (RegressionData, load_csv, make_hard_instance, make_lasso,
                       make_logistic, make_sc_quadratic, power_iteration_lmax,
                       synth_data)

__version__ = "0.1.0"
