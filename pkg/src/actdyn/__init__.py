"""Activity dynamics on collaboration networks.

Builds undirected collaboration networks from contribution logs, simulates
the saturating peer-influence activity model on them, tests the spectral
stability condition, fits the model's single decay/influence ratio to
weekly activity, and derives robustness metrics from the fitted ratios.
"""

from .dynamics import (
    ActivityState,
    DynamicsParams,
    PeerInfluenceParams,
    SimulationTrace,
    StabilityResult,
    classify_stability,
    derivative,
    dimensional_influence,
    euler_integrate,
    find_active_fixed_point,
    influence_growth_rate,
    linearized_coefficient_decay,
    peer_influence,
)
from .errors import ActdynError, ConvergenceError, InputError, NumericalError
from .estimate import (
    EstimationConfig,
    FitResult,
    ObjectiveKind,
    ObjectiveSpec,
    RatioEntry,
    RatioSeries,
    align_series_to_network,
    fit_ratio,
    objective,
    predict_weeks,
    simulate_one_week,
    sliding_window_fit,
)
from .graph import (
    CollaborationNetwork,
    ContributionEvent,
    EventKind,
    build_qa_network,
    build_wiki_network,
    read_edge_list,
    read_events_csv,
    write_edge_list,
)
from .metrics import MomentumReport, momentum, normalized_ratio_sd, rmse_per_user_week
from .preprocess import (
    ActivitySeries,
    DailySeries,
    PreprocessConfig,
    bin_daily,
    bin_weekly,
    filter_and_trim,
    preprocess_events,
    read_activity_csv,
    rolling_mean,
    write_activity_csv,
)
from .spectral import SpectralResult, full_spectrum_small, largest_eigenvalue
from .synth import ScenarioKind, ScenarioSpec, karate_club, random_initial_activity, scenario_series

__version__ = "0.1.0"
