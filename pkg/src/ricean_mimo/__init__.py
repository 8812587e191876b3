"""Uplink rate laboratory for multi-cell massive MIMO over correlated Ricean fading.

Two channel-acquisition routes are modelled end to end: pilot-assisted LMMSE
estimation (paying the training overhead, suffering pilot contamination) and a
zero-overhead LOS-component combiner.  Closed-form finite-N rates, their
large-N limits, and power-scaling laws all come with seeded Monte-Carlo
counterparts so every formula can be checked against simulation.
"""

from .channel import (
    ChannelRealization,
    CorrSpectrum,
    InvalidKappa,
    RiceanFactors,
    SteeringMatrix,
    corr_matrix,
    corr_sqrt,
    crandn,
    draw_channel,
    dump_realization,
    exp_correlation,
    load_realization,
    ricean_factors,
    steering_matrix,
)
from .cli import (
    ConfigParseError,
    Experiment,
    IoError,
    PowerScaling,
    crossover_point,
    experiment_from_dict,
    experiment_to_dict,
    list_presets,
    preset_experiments,
    run,
)
from .estimator import (
    EstimatedChannel,
    ErrorCovariance,
    LmmseFilterBank,
    PilotConfig,
    dft_pilots,
    error_cov_diag,
    error_covariance,
    filter_bank,
    los_estimate,
    q_matrix,
    run_pilot_phase,
)
from .monte_carlo import (
    McEstimate,
    McRateResult,
    PROBE_IDS,
    ScenarioBundle,
    UnknownExpression,
    build_bundle,
    mc_expectation_probe,
    mc_rate_lmmse,
    mc_rate_los,
    probe_closed_form,
)
from .rate_analysis import (
    RhoKernel,
    SinrBreakdown,
    UNBOUNDED,
    los_cross_power_rho,
    los_cross_power_steering,
    rho_kernel,
    theorem1_sinr,
    theorem2_asymptotic,
    theorem2_uncorrelated,
    theorem3_power_scaling,
    theorem4_los_sinr,
    theorem5_los_asymptotic,
    theorem5_uncorrelated,
    theorem6_los_power_scaling,
)
from .scenario import (
    CellLayout,
    DegenerateGeometry,
    LargeScaleFading,
    ScenarioConfig,
    UnsupportedLayout,
    UserPlacement,
    arrival_angles,
    build_layout,
    config_from_dict,
    config_to_dict,
    large_scale_fading,
    place_users,
)
from .units import db2pow, pow2db
from .validation import (
    BoundCheck,
    GammaMomentReport,
    InequalityCase,
    PROBE_QUANTITIES,
    UnknownQuantity,
    check_extremal_inequalities,
    check_gamma_moments,
    convergence_probe,
    write_report,
)

__version__ = "0.1.0"
