"""Transformer variants, decoding and checkpoints."""
from .checkpoint import CheckpointError, checkpoint_bytes, load_checkpoint, save_checkpoint
from .config import PAPER_SCALE, VARIANTS, ConfigError, ModelConfig
from .params import count_parameters, init_params, parameter_shapes
from .search import Hypothesis, beam_search, greedy_decode
from .transformer import DecodeState, InputError, Transformer, pad_batch, sinusoidal_table

__all__ = [
    "CheckpointError", "ConfigError", "DecodeState", "Hypothesis", "InputError", "ModelConfig",
    "PAPER_SCALE", "Transformer", "VARIANTS", "beam_search", "checkpoint_bytes", "count_parameters",
    "greedy_decode", "init_params", "load_checkpoint", "pad_batch", "parameter_shapes",
    "save_checkpoint", "sinusoidal_table",
]
