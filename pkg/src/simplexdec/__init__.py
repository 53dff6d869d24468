"""Token decoding as regularised optimisation on the probability simplex.

Closed-form decoders (greedy, softmax, Top-K, Top-P, sparsemax), KKT
optimality certificates, projected-gradient and entropic mirror-ascent
solvers, a coverage-seeking multi-sample decoder, seeded sampling, and a
file-driven experiment harness.
"""

from .core import (
    DecodeError,
    DimensionMismatch,
    ReferenceDistribution,
    ScoreVector,
    SimplexDistribution,
    SupportMask,
    entropy,
    kl_divergence,
    normalize,
    validate_simplex,
)
from .decoders import (
    DecoderConfig,
    greedy_decode,
    restricted_softmax,
    select_nucleus,
    select_topk_support,
    softmax_decode,
    sparsemax_decode,
    sparsemax_threshold,
)
from .kkt import (
    CLOSED_FORM_CERT_TOL,
    SOLVER_CERT_TOL,
    KktReport,
    RegularizerSpec,
    kkt_residual,
    regularizer_gradient,
)
from .solvers import (
    SolveDiagnostics,
    SolverConfig,
    mirror_solve,
    mirror_step,
    pga_solve,
    project_simplex_l2,
)
from .bok import (
    BokConfig,
    PRESETS,
    WeightScheme,
    WeightVector,
    bok_decode,
    bok_gradient,
    bok_objective,
    coverage_utility,
    hit_probability,
    make_weights,
)
from .sampling import (
    CoverageEstimate,
    RngStream,
    estimate_coverage,
    sample_k,
    sample_token,
)
from .io import (
    LogitMatrix,
    RunReport,
    StepRecord,
    read_logits,
    read_report,
    write_logits,
    write_report,
)
from .harness import (
    make_synthetic_logits,
    run_decode,
    run_sweep,
    verify_run,
)

__version__ = "0.1.0"
