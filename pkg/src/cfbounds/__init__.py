"""Bounds on counterfactual probabilities in discrete structural causal
models, computed by enumerating the extreme points of the credal sets that
observational and experimental evidence induce on the exogenous variables."""

from .evidence import (
    Evidence,
    ExperimentalTable,
    ObservationalTable,
    derive_evidence_from_model,
    evidence_from_dict,
    evidence_to_dict,
    load_evidence,
    save_evidence,
)
from .experiment import (
    ExperimentConfig,
    ExperimentRow,
    RegimeSolution,
    chain_model,
    generate_instance,
    rewrite_regime,
    run_experiment,
    sample_true_model,
    solve_regime,
    summarize_containment,
    summarize_lengths,
    summarize_rmse,
)
from .model import (
    CanonicalDomain,
    PartialSCM,
    StructuralEquation,
    Variable,
    base_q_digits,
    build_canonical_markovian,
    build_canonical_semimarkovian_chain,
    canonical_table,
    chain_tables,
    digits_to_index,
    evaluate_full_model,
    extract_domain,
    load_model,
    model_from_dict,
    model_to_dict,
    reduce_model,
    save_model,
)
from .oracle import (
    InfeasibleSystemError,
    LinearFunctional,
    lp_bound,
    lp_membership,
    oracle_interval,
    query_functional,
    sample_feasible,
)
from .queries import (
    NotComputableError,
    Query,
    QueryInterval,
    bound_query,
    evaluate_combination,
    evaluate_interventional,
    evaluate_pns,
    indicator_tensor,
    parse_query,
)
from .search import (
    SearchConfig,
    SolutionSet,
    exhaustive_search,
    group_indistinguishable,
    pruned_search,
    run_search,
    solve_credal,
)
from .systems import (
    STATUS_INCONSISTENT,
    STATUS_NEGATIVE,
    STATUS_OK,
    STATUS_RANK_DEFICIENT,
    ConstraintSystem,
    ExtremePoint,
    Infeasible,
    build_markovian_system,
    build_semimarkovian_combined,
    build_semimarkovian_experimental,
    build_semimarkovian_observational,
    dump_system_csv,
    exact_rank,
    restrict_columns,
    solve_support,
    solve_supports_batch,
)
from .transforms import (
    MergeSpec,
    StateMapping,
    build_state_mapping,
    dump_state_mapping_csv,
    endogenous_merge,
    exogenous_split,
    map_extreme_points,
    marginalize_points,
    merged_evidence,
    split_evidence,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
