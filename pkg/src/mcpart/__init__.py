"""Multi-class probability estimation from binary partitions of the classes."""

from .binary import BinaryModel, Dataset, TrainingConfig, decide, train_logistic
from .coding import (
    CodingMatrix,
    Split,
    adjacent,
    balanced_tree,
    exhaustive,
    flatten_tree,
    one_vs_one,
    one_vs_rest,
    orthogonal,
    random_code,
)
from .control import ControlSpec, format_spec, from_matrix, from_tree, parse, to_coding_matrix
from .libsvm import load_libsvm, save_libsvm
from .metrics import accuracy, brier, brier_winner, confusion, uncertainty_coefficient
from .model import MulticlassModel, load_model_dir, save_model_dir, train_model
from .solver import (
    decode_distance,
    forward,
    solve_constrained,
    solve_one_vs_one,
    solve_one_vs_rest,
    solve_tree,
    solve_unconstrained,
    vote,
)

__version__ = "0.1.0"
