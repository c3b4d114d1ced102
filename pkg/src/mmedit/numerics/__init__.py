"""Float64 tensors with tape-based reverse-mode autodiff, the loss, and Adam."""
from . import functional
from .functional import ShapeError
from .gradcheck import check_directional, check_gradients, relative_error
from .loss import label_smoothed_ce
from .optim import Adam, AdamState, adam_step
from .tensor import Tape, TapeError, Tensor, backward

__all__ = [
    "Adam", "AdamState", "ShapeError", "Tape", "TapeError", "Tensor", "adam_step",
    "backward", "check_directional", "check_gradients", "functional", "label_smoothed_ce", "relative_error",
]
