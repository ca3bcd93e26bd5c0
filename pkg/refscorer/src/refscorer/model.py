"""Miniature trainable relevance model over (context, gloss) pairs.

A logistic head over hashed character-bigram features: bigrams shared by
context and gloss (the relevance signal) plus the gloss's own bigrams (a
per-candidate prior). Training uses a decoupled weight-decay optimizer and a
linear learning-rate schedule with warmup.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

DEFAULT_DIM = 1 << 15

# Defaults mirror the original fine-tuning recipe; toy runs override them.
DEFAULT_HPARAMS = {
    "epochs": 2,
    "batch_size": 16,
    "lr": 1e-5,
    "weight_decay": 0.01,
    "warmup_steps": 100,
    "seed": 0,
}


def _bucket(token: str, dim: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dim


def _bigrams(text: str) -> set[str]:
    return {text[i : i + 2] for i in range(len(text) - 1)}


def featurize(context: str, gloss: str, dim: int = DEFAULT_DIM) -> np.ndarray:
    """Sparse feature indices for one pair (deduplicated)."""
    context_grams = _bigrams(context)
    gloss_grams = _bigrams(gloss)
    buckets = {_bucket("s:" + g, dim) for g in context_grams & gloss_grams}
    buckets |= {_bucket("g:" + g, dim) for g in gloss_grams}
    return np.fromiter(buckets, dtype=np.int64, count=len(buckets))


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + np.exp(-z))
    ez = np.exp(z)
    return ez / (1.0 + ez)


@dataclass
class PairScorerModel:
    """Binary relevance head; deterministic at inference with fixed weights."""

    dim: int = DEFAULT_DIM
    weights: np.ndarray = field(default=None)  # type: ignore[assignment]
    bias: float = 0.0

    def __post_init__(self) -> None:
        if self.weights is None:
            self.weights = np.zeros(self.dim, dtype=np.float64)
        if self.weights.shape != (self.dim,):
            raise ValueError(f"weights shape {self.weights.shape} != ({self.dim},)")

    def score(self, context: str, gloss: str) -> float:
        idx = featurize(context, gloss, self.dim)
        z = float(self.weights[idx].sum()) + self.bias
        return _sigmoid(z)

    def save(self, path: str) -> None:
        np.savez(
            path,
            weights=self.weights,
            bias=np.float64(self.bias),
            config=np.bytes_(json.dumps({"dim": self.dim}).encode("utf-8")),
        )

    @classmethod
    def load(cls, path: str) -> "PairScorerModel":
        data = np.load(path, allow_pickle=False)
        config = json.loads(bytes(data["config"]).decode("utf-8"))
        return cls(dim=int(config["dim"]), weights=data["weights"],
                   bias=float(data["bias"]))


def load_pair_file(lines) -> list[dict]:
    """Read the labeled pair JSONL produced by the pipeline."""
    pairs = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"line {lineno}: bad JSON: {exc.msg}") from None
        for key in ("context", "gloss", "label"):
            if key not in record:
                raise ValueError(f"line {lineno}: missing field {key!r}")
        pairs.append(record)
    return pairs


class _AdamW:
    """Adam with decoupled weight decay on the dense parameter vector."""

    def __init__(self, size: int, lr: float, weight_decay: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray, lr_scale: float) -> None:
        self.t += 1
        lr_t = self.lr * lr_scale
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        params -= lr_t * m_hat / (np.sqrt(v_hat) + self.eps)
        params -= lr_t * self.weight_decay * params


def _linear_schedule(step: int, warmup: int, total: int) -> float:
    if warmup > 0 and step < warmup:
        return (step + 1) / warmup
    if total <= warmup:
        return 1.0
    return max(0.0, (total - step) / (total - warmup))


@dataclass
class TrainResult:
    model: PairScorerModel
    epoch_losses: list[float]
    step_losses: list[float]


def train(pairs: list[dict], **hparams) -> TrainResult:
    """Fit the relevance head on labeled pairs; see DEFAULT_HPARAMS."""
    if not pairs:
        raise ValueError("empty training pair file")
    hp = {**DEFAULT_HPARAMS, **hparams}
    dim = int(hp.get("dim", DEFAULT_DIM))
    model = PairScorerModel(dim=dim)
    epochs = int(hp["epochs"])
    if epochs == 0:
        return TrainResult(model, [], [])
    batch_size = int(hp["batch_size"])
    features = [featurize(p["context"], p["gloss"], dim) for p in pairs]
    labels = np.array([1.0 if p["label"] else 0.0 for p in pairs])

    total_steps = epochs * ((len(pairs) + batch_size - 1) // batch_size)
    opt_w = _AdamW(dim, hp["lr"], hp["weight_decay"])
    opt_b = _AdamW(1, hp["lr"], 0.0)  # no decay on the bias
    bias = np.zeros(1)
    step = 0
    step_losses: list[float] = []
    epoch_losses: list[float] = []
    for epoch in range(epochs):
        order = np.random.default_rng(hp["seed"] + epoch).permutation(len(pairs))
        epoch_loss = 0.0
        for batch_start in range(0, len(order), batch_size):
            batch = order[batch_start : batch_start + batch_size]
            grad_w = np.zeros(dim)
            grad_b = 0.0
            loss = 0.0
            for i in batch:
                idx = features[i]
                z = float(model.weights[idx].sum()) + bias[0]
                p = _sigmoid(z)
                y = labels[i]
                loss -= y * np.log(p + 1e-12) + (1 - y) * np.log(1 - p + 1e-12)
                err = p - y
                grad_w[idx] += err
                grad_b += err
            loss /= len(batch)
            grad_w /= len(batch)
            grad_b /= len(batch)
            lr_scale = _linear_schedule(step, int(hp["warmup_steps"]), total_steps)
            opt_w.step(model.weights, grad_w, lr_scale)
            opt_b.step(bias, np.array([grad_b]), lr_scale)
            step += 1
            step_losses.append(float(loss))
            epoch_loss += float(loss) * len(batch)
        epoch_losses.append(epoch_loss / len(pairs))
    model.bias = float(bias[0])
    return TrainResult(model, epoch_losses, step_losses)
