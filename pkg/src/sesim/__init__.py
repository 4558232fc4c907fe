"""Structural-entropy socialbot simulation toolkit.

Multi-relational user graphs, rank-correlation edge weighting, height-bounded
encoding-tree optimization, community influence and cascade spread estimation,
entropy-guided follower selection with CELF and degree baselines, and a
detector-limited adversarial episode simulator.
"""

from .errors import ConfigError, DegenerateGraphWarning, InvariantError, ParseError
from .graphs import (
    MultiRelGraph,
    RelationKind,
    WeightedGraph,
    build_multirel,
    load_features,
    positivize_weight,
    project,
    spearman_weight,
    structural_features,
)
from .entropy import (
    EncodingTree,
    TreeNode,
    dump_tree,
    load_tree,
    one_dim_entropy,
    optimize,
)
from .influence import (
    DiffusionConfig,
    PruneResult,
    SpreadEstimate,
    SpreadEstimator,
    community_influence,
    icm_simulate,
    influence_ratio,
    prune,
    write_influence_report,
)
from .selection import (
    SelectionDistribution,
    celf_select,
    conditional_se,
    degree_select,
    select_follower,
    selection_distribution,
)
from .episode import (
    CompareRow,
    DetectorModel,
    Episode,
    EpisodeConfig,
    EpisodeSummary,
    ProfileActivity,
    ScriptedActivity,
    StepOutcome,
    UniformActivity,
    activity_policy,
    calibrate_base_rate,
    detector_check,
    empirical_detection_rate,
    follow_trace_detection_prob,
    hazard,
    make_activity_policy,
    run_compare,
    run_episode,
)
from .netgen import (
    SplitResult,
    StarNetConfig,
    gen_star_network,
    load_edge_list,
    load_graph,
    load_higgs,
    parse_star_config,
    split,
    write_edge_list,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DegenerateGraphWarning", "InvariantError", "ParseError",
    "MultiRelGraph", "RelationKind", "WeightedGraph", "build_multirel",
    "load_features", "positivize_weight", "project", "spearman_weight",
    "structural_features",
    "EncodingTree", "TreeNode", "dump_tree", "load_tree", "one_dim_entropy",
    "optimize",
    "DiffusionConfig", "PruneResult", "SpreadEstimate", "SpreadEstimator",
    "community_influence", "icm_simulate", "influence_ratio", "prune",
    "write_influence_report",
    "SelectionDistribution", "celf_select", "conditional_se", "degree_select",
    "select_follower", "selection_distribution",
    "CompareRow", "DetectorModel", "Episode", "EpisodeConfig", "EpisodeSummary",
    "ProfileActivity", "ScriptedActivity", "StepOutcome", "UniformActivity",
    "activity_policy", "calibrate_base_rate", "detector_check",
    "empirical_detection_rate", "follow_trace_detection_prob", "hazard",
    "make_activity_policy", "run_compare", "run_episode",
    "SplitResult", "StarNetConfig", "gen_star_network", "load_edge_list",
    "load_graph", "load_higgs", "parse_star_config", "split", "write_edge_list",
    "__version__",
]
