from .kernels import BACKEND
from .linalg import SubspaceBases, project, row_null_basis
from .optim import SGD, Adam, adam_step
from .rng import SeededRng
from .tensor import AutodiffError, Tensor, backward, no_grad

__all__ = [
    "BACKEND",
    "Adam",
    "AutodiffError",
    "SGD",
    "SeededRng",
    "SubspaceBases",
    "Tensor",
    "adam_step",
    "backward",
    "no_grad",
    "project",
    "row_null_basis",
]
