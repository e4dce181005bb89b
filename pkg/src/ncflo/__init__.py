"""Monitored adaptive fermionic-linear-optics sampling and diagnostics."""

from .branch import (
    AmplitudeTable,
    BranchOperator,
    amplitude_table,
    amplitude_table_full,
    beta_to_index,
    born_sample_outcome,
    branch_operator_dense,
    branch_operator_pathcycle,
    commuting_control_instance,
    conditional_distribution,
    cyclic_closure,
    dress,
    fermionant,
    index_to_beta,
    sample_outcome,
    undress,
)
from .ensemble import ExperimentConfig, OutputBundle, RunRecord, run_ensemble
from .errors import (
    CapacityError,
    DegenerateBranchError,
    InvalidConfigError,
    InvalidDimensionError,
    InvalidToleranceError,
    NcfloError,
    NormalizationError,
    PauliExclusionError,
    PostSelectionError,
    SamplerDegeneracyError,
)
from .kernel import build_kernel, permutation_operator, slater_amplitude
from .linalg import eps_rank, ginibre, haar_unitary
from .model import (
    DiluteConfig,
    MonitorRecord,
    PostSelectedSub,
    PropagatorBlocks,
    collision_free_rate_asymptotic,
    collision_free_rate_exact,
    collision_rate_trials,
    extract_sub,
    make_instance,
    post_select,
    sample_mode_set,
    sample_mode_sets,
    sample_monitor_record,
)
from .mpo import (
    BoundReport,
    ChiProfile,
    RoutingTensor,
    WitnessMatrix,
    chi_profile,
    rank_witness,
    routing_tensor,
    theorem_bound_check,
)
from .perms import PathCycle, Permutation, path_cycle_decompose, permutations
from .rng import RngStream, derive_seed
from .stats import (
    GINIBRE_NC_REFERENCE,
    EnsembleStats,
    NcScore,
    ginibre_reference,
    nc_score,
    porter_thomas_stats,
    second_moment,
)
from .version import VERSION as __version__
from .weyl import (
    GadgetReport,
    WeylOp,
    bell_state,
    encode_decode_check_d2,
    teleport_update,
    weyl,
    weyl_transpose_relabel,
)

__all__ = [name for name in dir() if not name.startswith("_")]
