"""Quickest change detection with an energy-harvesting sensor.

A CUSUM detector whose sampling is gated by a harvest-fed battery: the
package computes the asymptotic operating characteristics (expected detection
delay, false-alarm tail exponents) in both the energy-surplus and
energy-deficit regimes and reproduces them by Monte Carlo simulation.
"""

__version__ = "0.1.0"

from ._kernel import BACKEND as KERNEL_BACKEND
from .asymptotics import (
    Prediction,
    make_prediction,
    predict_delay_deficit,
    predict_delay_surplus,
    predict_fa_deficit,
    predict_fa_surplus,
)
from .change_model import ChangeModel, LlrStats, llr_stats, loglik_ratio, sample
from .detector import (
    CusumState,
    StoppingRecord,
    cusum_step,
    gated_cusum_step,
    run_until_threshold,
)
from .harvest import (
    BatteryState,
    HarvestModel,
    battery_step,
    sample_harvest,
    simulate_battery_path,
)
from .montecarlo import (
    ExperimentConfig,
    ExperimentResult,
    delay_distribution_check,
    fit_tail_exponent,
    run_delay_experiment,
    run_fa_experiment,
)
from .renewal import (
    EstimatorSizes,
    RenewalConstants,
    estimate_constants,
    estimate_delta_bar,
    estimate_neg_ladder,
    estimate_pos_ladder,
    estimate_s_k1,
    estimate_zeta_eta_bar,
)
from .stationary import (
    DensityGrid,
    GateChain,
    solve_stationary_density,
    spectral_check,
    transition_probs,
)

__all__ = [
    "KERNEL_BACKEND",
    "__version__",
    "BatteryState",
    "ChangeModel",
    "CusumState",
    "DensityGrid",
    "EstimatorSizes",
    "ExperimentConfig",
    "ExperimentResult",
    "GateChain",
    "HarvestModel",
    "LlrStats",
    "Prediction",
    "RenewalConstants",
    "StoppingRecord",
    "battery_step",
    "cusum_step",
    "delay_distribution_check",
    "estimate_constants",
    "estimate_delta_bar",
    "estimate_neg_ladder",
    "estimate_pos_ladder",
    "estimate_s_k1",
    "estimate_zeta_eta_bar",
    "fit_tail_exponent",
    "gated_cusum_step",
    "llr_stats",
    "loglik_ratio",
    "make_prediction",
    "predict_delay_deficit",
    "predict_delay_surplus",
    "predict_fa_deficit",
    "predict_fa_surplus",
    "run_delay_experiment",
    "run_fa_experiment",
    "run_until_threshold",
    "sample",
    "sample_harvest",
    "simulate_battery_path",
    "solve_stationary_density",
    "spectral_check",
    "transition_probs",
]
