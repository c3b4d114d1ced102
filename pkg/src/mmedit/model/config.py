"""Architecture hyperparameters and the variant selector."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

VARIANTS = ("single_encoder", "multi_encoder", "decoder_only")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    variant: str = "single_encoder"
    vocab_size: int = 600
    enc_layers: int = 2
    dec_layers: int = 2
    d_model: int = 64
    heads: int = 4
    ffn: int = 256
    dropout: float = 0.1
    max_len: int = 256
    n_modalities: int = 3
    activation: str = "gelu"
    # switched off only to test permutation equivariance
    use_positions: bool = True

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {', '.join(VARIANTS)}")
        if self.d_model % self.heads:
            raise ConfigError(f"d_model={self.d_model} is not divisible by heads={self.heads}")
        for name in ("vocab_size", "d_model", "heads", "ffn", "max_len", "dec_layers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.variant != "decoder_only" and self.enc_layers < 1:
            raise ConfigError("encoder variants need at least one encoder layer")
        if self.variant == "multi_encoder" and self.n_modalities < 1:
            raise ConfigError("multi_encoder needs n_modalities >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.activation not in ("gelu", "relu"):
            raise ConfigError(f"unknown activation {self.activation!r}")

    @property
    def head_dim(self) -> int:
        return self.d_model // self.heads

    @property
    def n_encoders(self) -> int:
        if self.variant == "multi_encoder":
            return self.n_modalities
        return 1 if self.variant == "single_encoder" else 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown model config keys: {', '.join(sorted(unknown))}")
        return cls(**data)

    def replace(self, **changes) -> "ModelConfig":
        return ModelConfig.from_dict({**self.to_dict(), **changes})


PAPER_SCALE = ModelConfig(enc_layers=6, dec_layers=6, d_model=768, heads=12, ffn=3072, max_len=512)
