"""Dimension reduction by digit interleaving, followed by kNN classification."""

from importlib.metadata import PackageNotFoundError, version

from .codec import (
    DigitMatrix,
    ReductionPlan,
    deinterleave,
    interleave,
    make_plan,
    quantize,
    reduce_matrix,
    reduce_row,
    to_value,
)
from .data import Dataset, StepSpec, load_phoneme, load_yeast, synth_two_class
from .errors import DataError, DomainError, ParameterError, SingularMatrixError
from .pipeline import (
    PipelineConfig,
    compare_matrices,
    consistency_experiment,
    run_trial,
    run_trials,
    sweep_base,
    sweep_k,
)

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0.0.0"
