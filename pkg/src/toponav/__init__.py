"""Topological visual navigation on a deterministic 2D gridworld.

The package splits into planar geometry (se2), the simulated world
(gridworld), reachability labeling and the pluggable pose/reachability
estimator (perception), the topological graph with sampling-based
construction and belief-weighted planning (topograph), Bayesian edge
maintenance and graph expansion (maintenance), and the episode/lifelong
experiment harness plus CLI (navharness, cli).
"""

from .se2 import (
    Pose2D,
    Twist,
    Waypoint,
    compose,
    dubins_length,
    relative,
    se2_exp,
    se2_log,
    waypoint_distance,
    waypoint_matrix,
    wrap_angle,
)
from .gridworld import (
    AgentState,
    ControllerGains,
    GridMap,
    SensorConfig,
    VelocityCmd,
    feedback_control,
    generate_rooms_map,
    raycast,
    raycast_scan,
    sample_free_pose,
    step_agent,
)
from .perception import (
    DepthScan,
    NoiseConfig,
    Observation,
    OracleEstimator,
    Prediction,
    ReachabilityCriteria,
    label_reachability,
    loss_position,
    loss_reachability,
    loss_rotation,
    loss_total,
)
from .topograph import (
    BuildParams,
    EdgeBelief,
    TopoGraph,
    TrajectoryPool,
    build_graph,
    load_graph,
    localize,
    plan,
    save_graph,
)
from .maintenance import (
    MaintenanceParams,
    TraversalOutcome,
    add_novel_node,
    apply_traversal_update,
    bayes_connectivity_update,
    expand_for_plan,
    gaussian_weight_update,
)
from .navharness import (
    EpisodeLimits,
    EpisodeResult,
    LifelongCurve,
    OdomNoise,
    World,
    collect_trajectory,
    evaluate,
    load_trajectory,
    make_test_set,
    estimate_distance_variance,
    run_episode,
    run_lifelong,
    save_trajectory,
    traversal_succeeded,
    wall_crossing_edges,
)

__all__ = [
    "AgentState",
    "BuildParams",
    "ControllerGains",
    "DepthScan",
    "EdgeBelief",
    "EpisodeLimits",
    "EpisodeResult",
    "GridMap",
    "LifelongCurve",
    "MaintenanceParams",
    "NoiseConfig",
    "Observation",
    "OdomNoise",
    "OracleEstimator",
    "Pose2D",
    "Prediction",
    "ReachabilityCriteria",
    "SensorConfig",
    "TopoGraph",
    "TrajectoryPool",
    "TraversalOutcome",
    "Twist",
    "VelocityCmd",
    "Waypoint",
    "World",
    "add_novel_node",
    "apply_traversal_update",
    "bayes_connectivity_update",
    "build_graph",
    "collect_trajectory",
    "compose",
    "dubins_length",
    "estimate_distance_variance",
    "evaluate",
    "expand_for_plan",
    "feedback_control",
    "gaussian_weight_update",
    "generate_rooms_map",
    "label_reachability",
    "load_graph",
    "load_trajectory",
    "localize",
    "loss_position",
    "loss_reachability",
    "loss_rotation",
    "loss_total",
    "make_test_set",
    "plan",
    "raycast",
    "raycast_scan",
    "run_episode",
    "run_lifelong",
    "sample_free_pose",
    "save_graph",
    "save_trajectory",
    "step_agent",
    "traversal_succeeded",
    "wall_crossing_edges",
    "waypoint_matrix",
    "wrap_angle",
]

__version__ = "0.1.0"
