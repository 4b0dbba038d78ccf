"""tazone: multi-objective regionalization of city spatial units.

Builds weighted interaction graphs over basic spatial units, detects
communities at a chosen resolution, grows contiguous regions from
high-membership kernels, scores every candidate partition on semantic,
quantity, and interaction objectives, and extracts Pareto-optimal schemes
plus multilevel nested partitions at detected characteristic scales.
"""

from .community import (
    CharacteristicScale,
    HardPartition,
    MembershipTable,
    SweepRecord,
    detect_characteristic_scales,
    ensemble_membership,
    louvain,
    modularity,
    resolution_sweep,
)
from .errors import (
    ConfigurationError,
    ConsistencyError,
    DegenerateGraphError,
    DegenerateInputError,
    GeometryError,
    IngestionError,
    InsufficientDataError,
    TazoneError,
)
from .graphs import (
    InteractionGraph,
    LayerWeights,
    aggregate_layers,
    build_attribute_similarity_graph,
    build_od_graph,
    build_proximity_graph,
)
from .objectives import (
    EvaluationInputs,
    MoranResult,
    ObjectiveVector,
    SpatialWeights,
    evaluate,
    interaction_objectives,
    morans_i,
    pareto_front,
    quantity_objectives,
    select_scenario,
    semantic_objective,
)
from .pipeline import (
    PipelineConfig,
    core_partition,
    load_city,
    run_multilevel,
    run_pipeline,
    run_sweep,
)
from .regions import (
    KernelSplit,
    PartitionScheme,
    aggregate_scheme_to_city,
    extend_kernels,
    multilevel_method2,
    split_kernel_marginal,
)
from .spatial import (
    Adjacency,
    AttributeField,
    BasicSpatialUnit,
    City,
    InteractionMatrix,
    SemanticField,
    SizeBounds,
    apply_size_constraint,
    compute_adjacency,
    compute_spacing,
    region_adjacency,
)
from .synth import Center, CityConfig, SemanticZone, default_city_config, make_city

__version__ = "0.1.0"
