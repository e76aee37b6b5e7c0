"""Orlicz-norm computations for finite-support variables, growth-condition
checking with an explicit violating construction, and desk-scale verification
of the associated moment and concentration inequalities."""

__version__ = "0.1.0"

from .orlicz import (
    DomainError,
    ExpPower,
    ExpSquare,
    HeavyTailLog,
    OrliczError,
    OrliczFunction,
    PiecewiseAffineLog,
    PowerLaw,
    RangeError,
    SquareComposition,
    affine_minorant,
    evaluate,
    from_record,
    invert,
    invert_log,
    validate,
)
from .distributions import (
    Family,
    FiniteDist,
    InvalidParameterError,
    ResourceError,
    SeriesSpec,
    make_centered_bernoulli,
    make_three_point,
    max_distribution,
    sample,
    sum_distribution_general,
    sum_distribution_iid_lattice,
)
from .norms import NormEstimate, l1_exact, norm_exact, norm_mc
from .hjcheck import check_hj, check_hj_schedule, hj_ratio_value
from .counterexample import build_counterexample, is_superpolynomial, verify_counterexample
from .lab import (
    hj_ratio,
    lemma_suite,
    log_single_atom_bound,
    make_series_spec,
    ratio_sweep,
    schedule_ratio_sweep,
    series_experiment,
)
from .concentration import (
    CrucialLemmaParams,
    EmpiricalProcessSpec,
    bennett_rhs,
    bernstein_rhs,
    calibrate_c,
    convex_rhs,
    crucial_lemma_check,
    empirical_process_tail,
    poisson_check,
    weak_variance_terms,
)
