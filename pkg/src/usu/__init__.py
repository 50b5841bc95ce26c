"""Mass-conserving, score-driven upsampling of attribution maps."""
from .bench import aggregate, image_partition, run_benchmark
from .errors import DomainError, ScorerError, UndefinedMetricError
from .evaluate import (
    EXPECTED_PATTERNS,
    BatteryConfig,
    DesiderataReport,
    alpha_beta,
    concentration,
    iou_best,
    mass_imbalance,
    mean_attribution_scorer,
    oracle_scorer,
    pointing_game,
    verify_desiderata,
)
from .grid import (
    NeighbourhoodSystem,
    SegmentHierarchy,
    SegmentPartition,
    block_partition,
    is_refinement,
    neighbourhood_masses,
    piecewise_constant_expand,
    quad_refine,
    segment_boundary,
    segment_interior,
)
from .interp import (
    KernelSpec,
    interp_upsample,
    locality_violation_witness,
    mass_leak_witness,
    monotonicity_violation_witness,
)
from .iwmr import iwmr_masses, iwmr_upsample, neighbourhood_importance, redistribution_weights
from .methods import METHODS, get_method
from .potentials import TENSOR, PotentialSpec, conditioning_ratio, evaluate
from .redistribute import redistribute, usu_upsample, usu_weights, verify_linearity_in_mass
from .refine import RefineConfig, boundary_segments, comparator, hmap, merge, mixing_alpha, refine_pipeline
from .synth import faithful_coarse, gen_dataset, gen_pattern, gen_shape

__version__ = "0.1.0"
