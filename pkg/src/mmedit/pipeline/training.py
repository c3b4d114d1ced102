"""Experiment configuration, the training loop and top-1 evaluation."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Sequence

import numpy as np

from ..model import PAPER_SCALE, ModelConfig, Transformer, beam_search
from ..numerics import Adam, Tape
from ..tokenizer import Vocabulary, normalize_whitespace as normalize
from .consolidate import consolidate, get_phi, target_text

log = logging.getLogger(__name__)


DESK_LR = 1e-3
PAPER_LR = 5e-5


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    phi: str = "ecg"
    model: ModelConfig = field(default_factory=ModelConfig)
    # None picks DESK_LR, or PAPER_LR for a model with PAPER_SCALE dimensions
    lr: float | None = None
    max_epochs: int = 30
    patience: int = 5
    batch_size: int = 16
    epsilon: float = 0.1
    seed: int = 0
    beam: int = 5
    # stop as soon as validation top-1 reaches this percentage
    stop_at: float | None = None
    # extra decoding steps allowed beyond the longest training target
    decode_slack: int = 8

    def __post_init__(self):
        get_phi(self.phi)
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1 or self.beam < 1:
            raise ValueError("batch_size, max_epochs, patience and beam must all be >= 1")
        if self.lr is not None and self.lr < 0:
            raise ValueError(f"lr must be >= 0, got {self.lr}")

    @property
    def variant(self) -> str:
        return self.model.variant

    @property
    def learning_rate(self) -> float:
        if self.lr is not None:
            return self.lr
        m, p = self.model, PAPER_SCALE
        paper = (m.enc_layers, m.dec_layers, m.d_model, m.heads, m.ffn) == (
            p.enc_layers, p.dec_layers, p.d_model, p.heads, p.ffn)
        return PAPER_LR if paper else DESK_LR

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model"] = self.model.to_dict()
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown experiment config keys: {', '.join(sorted(unknown))}")
        if isinstance(data.get("model"), dict):
            data["model"] = ModelConfig.from_dict(data["model"])
        return cls(**data)

    def replace(self, **changes) -> "ExperimentConfig":
        return ExperimentConfig.from_dict({**self.to_dict(), **changes})


def model_config_for(config: ExperimentConfig, vocab: Vocabulary) -> ModelConfig:
    """The experiment's model config with vocabulary size and modality count filled in."""
    phi = get_phi(config.phi)
    return config.model.replace(vocab_size=len(vocab), n_modalities=len(phi.modalities))


def prepare(records: Sequence[dict], config: ExperimentConfig, vocab: Vocabulary) -> tuple[list, list]:
    sources, targets = [], []
    for rec in records:
        s, t = consolidate(rec, config.phi, vocab, config.variant, config.model.max_len)
        sources.append(s)
        targets.append(t)
    return sources, targets


@dataclass
class TrainResult:
    model: Transformer
    log: list[dict]
    best_epoch: int
    best_valid: float
    decode_len: int
    stopped: str


def _snapshot(model: Transformer) -> dict[str, np.ndarray]:
    return {k: v.data.copy() for k, v in model.params.items()}


def train(config: ExperimentConfig, train_set: Sequence[dict], valid_set: Sequence[dict],
          vocab: Vocabulary) -> TrainResult:
    """Minibatch Adam with teacher forcing and per-epoch beam validation.

    The parameters with the best validation top-1 are kept (ties go to the
    later epoch). Training stops after ``max_epochs``, after ``patience``
    epochs without improvement, or once ``stop_at`` is reached.
    """
    if not train_set or not valid_set:
        raise TrainingError("training and validation sets must be non-empty")
    mcfg = model_config_for(config, vocab)
    model = Transformer(mcfg, seed=config.seed)
    rng = np.random.default_rng(config.seed + 1)
    sources, targets = prepare(train_set, config, vocab)
    decode_len = max(len(t) for t in targets) - 1 + config.decode_slack
    opt = Adam(model.params, lr=config.learning_rate)

    history: list[dict] = []
    best, best_epoch, best_params, since_best = -1.0, 0, _snapshot(model), 0
    stopped = "max_epochs"
    for epoch in range(1, config.max_epochs + 1):
        t0 = time.perf_counter()
        order = rng.permutation(len(sources))
        model.train(rng)
        total, steps = 0.0, 0
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            with Tape() as tape:
                loss = model.loss([sources[i] for i in idx], [targets[i] for i in idx], config.epsilon)
            value = float(loss.data)
            if not math.isfinite(value):
                raise TrainingError(f"loss became {value} at epoch {epoch}, step {steps + 1} "
                                    f"(lr={config.learning_rate}); aborting")
            opt.zero_grad()
            tape.backward(loss)
            opt.step()
            total += value
            steps += 1
        model.eval()
        acc = evaluate_top1(model, valid_set, config.phi, vocab, config.beam, decode_len)[0]["accuracy"]
        history.append({"epoch": epoch, "loss": total / steps, "valid_top1": acc,
                        "seconds": round(time.perf_counter() - t0, 3)})
        log.info("epoch %d loss %.4f valid top-1 %.2f%%", epoch, total / steps, acc)
        if acc > best:
            since_best = 0
        else:
            since_best += 1
        if acc >= best:
            best, best_epoch, best_params = acc, epoch, _snapshot(model)
        if config.stop_at is not None and acc >= config.stop_at:
            stopped = "target reached"
            break
        if since_best >= config.patience:
            stopped = "patience"
            break
    for name, data in best_params.items():
        model.params[name].data = data
    return TrainResult(model, history, best_epoch, best, decode_len, stopped)


def evaluate_top1(model: Transformer, records: Sequence[dict], phi: str, vocab: Vocabulary, beam: int = 5,
                  max_len: int = 64, chunk: int = 32) -> tuple[dict, list[dict]]:
    """Exact-match top-1 accuracy on detokenised, whitespace-normalised text.

    Returns the summary row and one verdict per record.
    """
    phi_obj = get_phi(phi)
    verdicts = []
    for lo in range(0, len(records), chunk):
        batch = records[lo:lo + chunk]
        sources = [consolidate(r, phi_obj, vocab, model.config.variant, model.config.max_len)[0] for r in batch]
        for rec, hyps in zip(batch, beam_search(model, sources, beam, max_len)):
            pred = normalize(vocab.decode(hyps[0].body)) if hyps else ""
            gold = normalize(target_text(rec, phi_obj))
            verdicts.append({"id": rec["id"], "family": rec.get("family", ""), "prediction": pred,
                             "target": gold, "correct": pred == gold})
    correct = sum(v["correct"] for v in verdicts)
    n = len(verdicts)
    return {"examples": n, "correct": correct, "accuracy": 100.0 * correct / n if n else 0.0}, verdicts
