"""Projection head, prototype classifier, and SGD with milestone decay.

The head is a two-layer MLP whose output rows are L2-normalized; forward and
backward passes are written out explicitly so gradients stay inspectable and
finite-difference checkable. Class probabilities come from a temperature
softmax over cosine similarities to per-class unit prototypes.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .clustering import kmeans_pp_extend
from .config import Hyperparams
from .errors import ValidationError

PARAM_NAMES = ("W1", "b1", "W2", "b2")
_NORM_FLOOR = 1e-12


@dataclass
class ProjectionHead:
    W1: np.ndarray   # (h, d)
    b1: np.ndarray   # (h,)
    W2: np.ndarray   # (p, h)
    b2: np.ndarray   # (p,)

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    @property
    def in_dim(self) -> int:
        return self.W1.shape[1]

    @property
    def out_dim(self) -> int:
        return self.W2.shape[0]


@dataclass(frozen=True)
class Prototypes:
    """One unit-norm reference vector per class, known class ids first."""

    M: np.ndarray   # (C, p)

    def __post_init__(self) -> None:
        norms = np.linalg.norm(self.M, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValidationError("prototype rows must be unit-norm")
        self.M.setflags(write=False)

    @property
    def num_classes(self) -> int:
        return self.M.shape[0]


@dataclass
class OptimizerState:
    velocity: dict[str, np.ndarray]
    epoch: int
    total_epochs: int


def init_head(d: int, hidden: int, out_dim: int, rng: np.random.Generator) -> ProjectionHead:
    """He-uniform weights, zero biases."""
    lim1 = np.sqrt(6.0 / d)
    lim2 = np.sqrt(6.0 / hidden)
    return ProjectionHead(
        W1=rng.uniform(-lim1, lim1, size=(hidden, d)),
        b1=np.zeros(hidden),
        W2=rng.uniform(-lim2, lim2, size=(out_dim, hidden)),
        b2=np.zeros(out_dim),
    )


def init_optimizer(head: ProjectionHead, total_epochs: int) -> OptimizerState:
    velocity = {name: np.zeros_like(arr) for name, arr in head.params().items()}
    return OptimizerState(velocity=velocity, epoch=0, total_epochs=total_epochs)


def forward(head: ProjectionHead, X: np.ndarray) -> np.ndarray:
    """Map inputs to unit-norm features: normalize(W2 relu(W1 x + b1) + b2)."""
    X = np.asarray(X, dtype=np.float64)
    pre = np.maximum(X @ head.W1.T + head.b1, 0.0) @ head.W2.T + head.b2
    norms = np.linalg.norm(pre, axis=1)
    if np.any(norms < _NORM_FLOOR):
        raise ValidationError("degenerate pre-normalization feature (norm < 1e-12)")
    return pre / norms[:, None]


def backward(head: ProjectionHead, X: np.ndarray, grad_out: np.ndarray) -> dict[str, np.ndarray]:
    """Exact parameter gradients for ``grad_out`` = dL/d(normalized features).

    The row-normalization Jacobian is (I - z z^T) / ||y|| at pre-normalized y.
    """
    X = np.asarray(X, dtype=np.float64)
    A = X @ head.W1.T + head.b1
    H = np.maximum(A, 0.0)
    Y = H @ head.W2.T + head.b2
    norms = np.linalg.norm(Y, axis=1, keepdims=True)
    Z = Y / norms

    gY = (grad_out - np.sum(grad_out * Z, axis=1, keepdims=True) * Z) / norms
    gW2 = gY.T @ H
    gb2 = gY.sum(axis=0)
    gH = gY @ head.W2
    gA = gH * (A > 0.0)
    gW1 = gA.T @ X
    gb1 = gA.sum(axis=0)
    return {"W1": gW1, "b1": gb1, "W2": gW2, "b2": gb2}


def predict_probs(features: np.ndarray, protos: Prototypes, tau_p: float) -> np.ndarray:
    """Row-stochastic class probabilities: softmax over cosine / tau_p.

    Callers pass unit-norm feature rows (the forward contract guarantees it).
    """
    logits = (features @ protos.M.T) / tau_p
    logits -= logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    return e / e.sum(axis=1, keepdims=True)


def _normalized_or(fallback: np.ndarray, vec: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(vec)
    if norm < _NORM_FLOOR:
        return fallback
    return vec / norm


def init_prototypes(
    features: np.ndarray,
    labels: np.ndarray,
    is_labeled: np.ndarray,
    num_known: int,
    num_classes: int,
    rng: np.random.Generator,
) -> Prototypes:
    """Known prototypes are normalized labeled class means; unknown ones are
    k-means++ seeded from unlabeled features, steered away from the knowns."""
    known_rows = []
    for c in range(num_known):
        members = features[is_labeled & (labels == c)]
        if not len(members):
            raise ValidationError(f"known class {c} has no labeled rows")
        known_rows.append(_normalized_or(members[0], members.mean(axis=0)))
    known_M = np.asarray(known_rows)
    unlabeled = features[~is_labeled]
    unknown_M = kmeans_pp_extend(unlabeled, known_M, num_classes - num_known, rng)
    return Prototypes(M=np.vstack([known_M, unknown_M]))


def update_prototypes(
    features: np.ndarray,
    assignments: np.ndarray,
    labels: np.ndarray,
    is_labeled: np.ndarray,
    protos: Prototypes,
    ema: float,
) -> Prototypes:
    """Blend each prototype toward its current target and re-normalize.

    Known-class targets are normalized labeled feature means; unknown-class
    targets are normalized means of the unlabeled features argmax-assigned to
    that class (prototype left unchanged when no such rows exist).
    """
    if not 0.0 <= ema <= 1.0:
        raise ValidationError(f"ema must be in [0, 1], got {ema}")
    C = protos.num_classes
    new_M = np.array(protos.M, copy=True)
    unlabeled = ~is_labeled
    for c in range(C):
        labeled_members = features[is_labeled & (labels == c)]
        if len(labeled_members):
            target = labeled_members.mean(axis=0)
        else:
            assigned = features[unlabeled & (assignments == c)]
            if not len(assigned):
                continue
            target = assigned.mean(axis=0)
        target = _normalized_or(protos.M[c], target)
        new_M[c] = _normalized_or(protos.M[c], ema * protos.M[c] + (1.0 - ema) * target)
    return Prototypes(M=new_M)


def learning_rate(lr0: float, epoch: int, total_epochs: int) -> float:
    """Step schedule: multiply by 0.1 at each passed milestone (50%, 75%)."""
    milestones = (int(0.5 * total_epochs), int(0.75 * total_epochs))
    passed = sum(1 for m in milestones if epoch >= m)
    return lr0 * (0.1 ** passed)


def sgd_step(
    head: ProjectionHead,
    grads: dict[str, np.ndarray],
    opt: OptimizerState,
    hp: Hyperparams,
) -> tuple[ProjectionHead, OptimizerState]:
    """Momentum SGD with L2 weight decay added to the gradient:
    v <- momentum v + g + weight_decay p;  p <- p - lr v."""
    if opt.epoch >= opt.total_epochs:
        raise ValidationError(
            f"epoch {opt.epoch} is past the schedule of {opt.total_epochs} epochs"
        )
    lr = learning_rate(hp.lr0, opt.epoch, opt.total_epochs)
    for name, param in head.params().items():
        g = grads[name]
        if not np.all(np.isfinite(g)):
            raise ValidationError(f"non-finite gradient for {name}")
        v = opt.velocity[name]
        v *= hp.momentum
        v += g + hp.weight_decay * param
        param -= lr * v
    return head, opt


def save_checkpoint(path: str | Path, head: ProjectionHead, protos: Prototypes) -> None:
    """JSON checkpoint: shapes plus base64 little-endian float64 buffers."""
    def pack(arr: np.ndarray) -> dict:
        buf = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        return {"shape": list(arr.shape), "data": base64.b64encode(buf).decode("ascii")}

    payload = {
        "format": "ltgcd-checkpoint-v1",
        "params": {name: pack(arr) for name, arr in head.params().items()},
        "prototypes": pack(protos.M),
    }
    Path(path).write_text(json.dumps(payload) + "\n")


def load_checkpoint(path: str | Path) -> tuple[ProjectionHead, Prototypes]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint file not found: {path}")
    payload = json.loads(path.read_text())

    def unpack(entry: dict) -> np.ndarray:
        raw = base64.b64decode(entry["data"])
        return np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(entry["shape"])

    params = {name: unpack(payload["params"][name]) for name in PARAM_NAMES}
    head = ProjectionHead(**params)
    return head, Prototypes(M=unpack(payload["prototypes"]))
