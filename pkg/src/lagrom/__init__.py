"""lagrom: reduced-order modeling for transport-dominated parametrized PDEs.

Transport makes linear model reduction slow: a moving structure sweeps
through the fixed-grid basis and the singular values of the snapshot matrix
barely decay. Re-expressing the same solutions in a frame that rides the
characteristics collapses that growth, often to a handful of modes. This
package provides the full workflow on both sides of the comparison:
full-order solvers in the fixed and moving frames, frame transforms and
grid-to-grid reconstruction, dynamic mode decomposition in a compressed
latent space with radial-basis interpolation across parameters, diagnostics
(coherence, singular-value decay, best-subspace error curves), and a
bit-exact container format plus CLI for driving everything end to end.
"""

from ._kernels import IMPL as kernel_impl
from .analysis import (
    CoherenceSeries,
    ErrorTable,
    NWidthCurve,
    coherence,
    numerical_rank,
    nwidth_proxy,
    relative_l2_error,
    singular_value_decay,
)
from .core import (
    CflViolation,
    GridTangling,
    RankDeficiency,
    SolverBlowup,
    Grid,
    ParamSet,
    SnapshotSet,
    TimeAxis,
    flatten_snapshots,
    stacked_matrix,
    subset_time,
)
from .dmd import (
    LatentTrajectory,
    ReducedOperator,
    fit_dmd,
    fit_latent_dmd,
    predict,
)
from .fom import (
    AdvectionDiffusionProblem1D,
    CflReport,
    Problem2D,
    advdiff1d_exact,
    burgers1d_exact,
    solve_eulerian_1d,
    solve_eulerian_2d,
    solve_lagrangian_1d,
    solve_lagrangian_2d,
)
from .io import (
    export_csv,
    read_container,
    read_container_full,
    read_pdmd_model,
    read_reduced_operator,
    write_container,
    write_pdmd_model,
    write_reduced_operator,
)
from .lagframe import (
    LagrangianState,
    reconstruct_eulerian,
    stack,
    state_from_snapshot,
    unstack,
    wrap_coordinates,
)
from .pdmd import (
    Compressor,
    PdmdModel,
    RbfInterpolant,
    decode_and_reconstruct,
    external_compressor,
    fit_pdmd,
    fit_pod,
    predict_pdmd,
    predict_pdmd_trajectory,
)

__version__ = "0.1.0"

__all__ = [
    "AdvectionDiffusionProblem1D",
    "CflReport",
    "CflViolation",
    "CoherenceSeries",
    "Compressor",
    "ErrorTable",
    "Grid",
    "GridTangling",
    "LagrangianState",
    "LatentTrajectory",
    "NWidthCurve",
    "ParamSet",
    "PdmdModel",
    "Problem2D",
    "RankDeficiency",
    "RbfInterpolant",
    "ReducedOperator",
    "SnapshotSet",
    "SolverBlowup",
    "TimeAxis",
    "advdiff1d_exact",
    "burgers1d_exact",
    "coherence",
    "decode_and_reconstruct",
    "export_csv",
    "external_compressor",
    "fit_dmd",
    "fit_latent_dmd",
    "fit_pdmd",
    "fit_pod",
    "flatten_snapshots",
    "kernel_impl",
    "numerical_rank",
    "nwidth_proxy",
    "predict",
    "predict_pdmd",
    "predict_pdmd_trajectory",
    "read_container",
    "read_container_full",
    "read_pdmd_model",
    "read_reduced_operator",
    "reconstruct_eulerian",
    "relative_l2_error",
    "singular_value_decay",
    "solve_eulerian_1d",
    "solve_eulerian_2d",
    "solve_lagrangian_1d",
    "solve_lagrangian_2d",
    "stack",
    "stacked_matrix",
    "state_from_snapshot",
    "subset_time",
    "unstack",
    "wrap_coordinates",
    "write_container",
    "write_pdmd_model",
    "write_reduced_operator",
    "__version__",
]
