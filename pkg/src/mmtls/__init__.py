"""Robust multi-layered total-least-mean-squares filters for digital SI cancellation."""

from .core_filters import (
    Algorithm, FilterState, RegressionSample, lms_step, mtls_gradient, mtls_step,
    run_filter, tls_cost, tls_gradient, tls_step,
)
from .joint_estimator import (
    JointChannelEstimate, LayerStack, TrainingTrace, average_rt_estimate,
    build_joint_input, make_stack, mmtls_step, run_training,
)
from .metrics import mmse_baseline, nmsd, power_spectrum, residual_si_power
from .robust_stats import MEstimateState, median, mest_rho, mest_sigma_update, mest_threshold
from .star_sim import (
    ChannelRealization, SignalRecord, StarScenario, fig2_testbench, gen_bpsk,
    gen_channels, gen_noise, synthesize,
)

__version__ = "0.1.0"
