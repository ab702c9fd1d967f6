"""Error exponents for distributed hypothesis testing over noisy channels."""

from .channel import CapacityResult, Dmc, capacity_blahut_arimoto, channel_sample, super_channel
from .infomath import (
    Alphabet,
    CondPmf,
    JointPmf,
    Pmf,
    TypeClass,
    conditional_entropy,
    conditional_mutual_information,
    empirical_type,
    entropy_bits,
    is_typical,
    kl_divergence,
    min_divergence_over_type_ball,
)
from .multiletter import (
    EncoderSpec,
    OracleOpts,
    OracleResult,
    divergence_for_encoder,
    theta_multiletter,
    verify_compinf_identity,
)
from .simulate import (
    ExactBetaResult,
    ExponentFit,
    SimConfig,
    SimEstimate,
    exact_typical_set_beta,
    fit_exponent,
    run_trials,
    simulate_errors,
)
from .singleletter import (
    AuxChannel,
    ExponentResult,
    SolverOpts,
    TaciInstance,
    build_taci_q,
    bt_inner_bound,
    bt_outer_bound,
    mix_to_constraint,
    sweep_tau,
    theta_single_helper,
)

__version__ = "0.1.0"
