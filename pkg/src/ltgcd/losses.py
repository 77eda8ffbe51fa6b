"""Contrastive objectives and distribution regularizers with exact gradients.

All gradients are taken with respect to the unit-norm feature rows; chaining
into head parameters happens in ``model.backward``. Prototypes are treated as
constants inside a gradient step, so the regularizers steer features only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Hyperparams
from .errors import ValidationError
from .model import Prototypes, predict_probs

_LOG_FLOOR = 1e-12
_SIMPLEX_TOL = 1e-6


@dataclass(frozen=True)
class BatchViews:
    """Interleaved two-view features: rows 2i and 2i+1 belong to instance i."""

    Z: np.ndarray             # (2B, p) unit-norm rows
    labeled_mask: np.ndarray  # (B,) bool
    labels: np.ndarray        # (B,) int, meaningful where labeled

    def __post_init__(self) -> None:
        B2 = self.Z.shape[0]
        if B2 % 2 != 0 or B2 // 2 != self.labeled_mask.shape[0]:
            raise ValidationError("Z must hold two views per instance")
        if self.labels.shape != self.labeled_mask.shape:
            raise ValidationError("labels and labeled_mask must align")
        norms = np.linalg.norm(self.Z, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-4):
            raise ValidationError("feature rows must be unit-norm")

    @property
    def num_instances(self) -> int:
        return self.labeled_mask.shape[0]


@dataclass(frozen=True)
class LossBreakdown:
    l_ins: float
    l_sup: float
    h_prior: float
    h_uniform: float
    l_overall: float
    grad_Z: np.ndarray        # (2B, p)
    sup_warning: bool = False


def combine_overall(
    l_ins: float, l_sup: float, h_prior: float, h_uniform: float, hp: Hyperparams
) -> float:
    """The one place the weighted sum is spelled out, so tests can replay it."""
    return l_ins + hp.lambda_ * l_sup + hp.alpha * h_prior + hp.beta * h_uniform


def _view_rows(instance_idx: np.ndarray) -> np.ndarray:
    """Row indices of both views for the given instance indices, interleaved."""
    return np.stack([2 * instance_idx, 2 * instance_idx + 1], axis=1).reshape(-1)


def _log_softmax_off_diag(S: np.ndarray) -> np.ndarray:
    """Row-wise log-softmax over all off-diagonal entries; diagonal is -inf."""
    masked = S.copy()
    np.fill_diagonal(masked, -np.inf)
    row_max = masked.max(axis=1, keepdims=True)
    logsum = row_max + np.log(np.exp(masked - row_max).sum(axis=1, keepdims=True))
    return masked - logsum


def info_nce(Z: np.ndarray, tau: float) -> tuple[float, np.ndarray]:
    """Instance discrimination over interleaved view pairs.

    Each view is an anchor; its positive is the sibling view and the
    denominator runs over every other view in ``Z`` (positive included,
    anchor excluded). Returns the mean anchor loss and dL/dZ.
    """
    m = Z.shape[0]
    if m < 4 or m % 2 != 0:
        raise ValidationError("info_nce needs at least 2 two-view instances")
    S = (Z @ Z.T) / tau
    log_probs = _log_softmax_off_diag(S)

    pos = np.arange(m) ^ 1   # sibling of row a under interleaving
    value = float(-log_probs[np.arange(m), pos].mean())

    G = np.exp(log_probs)                    # softmax over k != a
    np.fill_diagonal(G, 0.0)
    G[np.arange(m), pos] -= 1.0
    G /= m
    grad = (G + G.T) @ Z / tau
    return value, grad


def sup_con(Z: np.ndarray, view_labels: np.ndarray, tau: float) -> tuple[float, np.ndarray, bool]:
    """Label-supervised contrast over labeled view rows.

    Positives of an anchor are all other rows sharing its label (sibling view
    included); the denominator is every other row. Anchors with no positive
    are dropped from the outer mean; if none has a positive the value is 0
    and the warning flag is set.
    """
    m = Z.shape[0]
    if m < 2:
        raise ValidationError("sup_con needs at least 2 labeled views")
    view_labels = np.asarray(view_labels)
    pos_mask = view_labels[:, None] == view_labels[None, :]
    np.fill_diagonal(pos_mask, False)
    pos_counts = pos_mask.sum(axis=1)
    contributing = pos_counts > 0
    n_anchors = int(contributing.sum())
    if n_anchors == 0:
        return 0.0, np.zeros_like(Z), True

    S = (Z @ Z.T) / tau
    log_probs = _log_softmax_off_diag(S)
    # -inf off-positive entries must not touch the sum (0 * -inf is nan)
    pos_log_probs = np.where(pos_mask, log_probs, 0.0)
    per_anchor = -pos_log_probs.sum(axis=1) / np.maximum(pos_counts, 1)
    value = float(per_anchor[contributing].mean())

    G = np.exp(log_probs)
    np.fill_diagonal(G, 0.0)
    G -= pos_mask / np.maximum(pos_counts, 1)[:, None]
    G[~contributing] = 0.0
    G /= n_anchors
    grad = (G + G.T) @ Z / tau
    return value, grad, False


def _cross_entropy_unchecked(q_bar: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    clamped = np.maximum(q_bar, _LOG_FLOOR)
    value = float(-(target * np.log(clamped)).sum())
    grad = -target / clamped
    return value, grad


def target_cross_entropy(q_bar: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Cross-entropy of a mean prediction against a fixed target distribution.

    value = -sum_c target_c log q_bar_c with q_bar clamped at 1e-12 below;
    gradient is -target / clamped(q_bar). Minimized exactly at q_bar = target.
    """
    q_bar = np.asarray(q_bar, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    for name, v in (("q_bar", q_bar), ("target", target)):
        if np.any(v < 0) or abs(float(v.sum()) - 1.0) > _SIMPLEX_TOL:
            raise ValidationError(f"{name} is off the probability simplex")
    return _cross_entropy_unchecked(q_bar, target)


def overall_loss(
    batch: BatchViews,
    protos: Prototypes,
    prior_r: np.ndarray,
    hp: Hyperparams,
) -> LossBreakdown:
    """Full objective on one batch: instance contrast on unlabeled views,
    supervised contrast on labeled views, plus cross-entropy of the mean
    unlabeled prediction against the estimated prior and against uniform."""
    labeled_idx = np.flatnonzero(batch.labeled_mask)
    unlabeled_idx = np.flatnonzero(~batch.labeled_mask)
    if len(unlabeled_idx) < 2:
        raise ValidationError("overall_loss needs at least 2 unlabeled instances")

    unlab_rows = _view_rows(unlabeled_idx)
    lab_rows = _view_rows(labeled_idx)
    grad_Z = np.zeros_like(batch.Z)

    l_ins, g_ins = info_nce(batch.Z[unlab_rows], hp.tau)
    grad_Z[unlab_rows] += g_ins

    sup_warning = False
    l_sup = 0.0
    if len(lab_rows) >= 2:
        l_sup, g_sup, sup_warning = sup_con(
            batch.Z[lab_rows], np.repeat(batch.labels[labeled_idx], 2), hp.tau
        )
        grad_Z[lab_rows] += hp.lambda_ * g_sup

    # q_bar is a mean of softmax rows and the targets carry their own simplex
    # invariants, so the unchecked path is safe here
    Q = predict_probs(batch.Z[unlab_rows], protos, hp.tau_p)
    q_bar = Q.mean(axis=0)
    uniform = np.full(protos.num_classes, 1.0 / protos.num_classes)
    h_prior, g_prior = _cross_entropy_unchecked(q_bar, prior_r)
    h_uniform, g_uniform = _cross_entropy_unchecked(q_bar, uniform)

    g_q = (hp.alpha * g_prior + hp.beta * g_uniform) / len(unlab_rows)
    # chain through the softmax rows onto features; prototypes stay constant
    inner = Q * g_q[None, :]
    A = inner - Q * inner.sum(axis=1, keepdims=True)
    grad_Z[unlab_rows] += (A @ protos.M) / hp.tau_p

    l_overall = combine_overall(l_ins, l_sup, h_prior, h_uniform, hp)
    return LossBreakdown(
        l_ins=l_ins,
        l_sup=l_sup,
        h_prior=h_prior,
        h_uniform=h_uniform,
        l_overall=l_overall,
        grad_Z=grad_Z,
        sup_warning=sup_warning,
    )
