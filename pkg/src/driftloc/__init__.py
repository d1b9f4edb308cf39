"""driftloc: anomaly simulation and localization on sensor-sparse networks.

Simulates demand anomalies (leak analogues) and sensor faults on
graph-structured infrastructure with contractive dynamics, localizes them
from sparse measurement windows (mean-window, KS, random, and
classifier-importance strategies), and ships a numerical harness that
certifies the contraction and decay bounds the localizers rely on.
"""

from ._kernels import active_backend
from .anomaly import AnomalyScenario, ScenarioBatchConfig, generate_scenarios
from .dynamics import (
    DemandModel,
    MeasurementWindow,
    ObservableSeries,
    TransitionModel,
    build_transition_model,
    lipschitz_constants,
    measure,
    sample_demands,
    simulate,
    steady_state,
    step,
)
from .localization import (
    LearnerSpec,
    LocalizationResult,
    ks_statistic,
    localize_ks,
    localize_mean,
    localize_model_based,
    localize_random,
)
from .network import (
    NetworkGraph,
    build_graph,
    geographic_distance,
    load_graph,
    max_degree,
    random_geometric_graph,
    save_graph,
    topological_distance,
)

__version__ = "0.1.0"

__all__ = [
    "AnomalyScenario",
    "DemandModel",
    "LearnerSpec",
    "LocalizationResult",
    "MeasurementWindow",
    "NetworkGraph",
    "ObservableSeries",
    "ScenarioBatchConfig",
    "TransitionModel",
    "active_backend",
    "build_graph",
    "build_transition_model",
    "generate_scenarios",
    "geographic_distance",
    "ks_statistic",
    "lipschitz_constants",
    "load_graph",
    "localize_ks",
    "localize_mean",
    "localize_model_based",
    "localize_random",
    "max_degree",
    "measure",
    "random_geometric_graph",
    "sample_demands",
    "save_graph",
    "simulate",
    "steady_state",
    "step",
    "topological_distance",
    "__version__",
]
