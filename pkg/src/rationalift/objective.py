"""Loss terms: predictive cross-entropy plus the sparsity/coherence regularizer.

The regularizer on a mask M over a length-l example is

    Omega(M) = lambda1 * | sum(M)/l - alpha |  +  lambda2 * sum_{t=2..l} |m_t - m_{t-1}|

with l the unpadded length.  Mask values are binary on the forward pass and
fractional when gradients flow through the straight-through relaxation, so
every function here accepts values anywhere in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ObjectiveConfig:
    lambda1: float = 1.0
    lambda2: float = 1.0
    alpha: float = 0.15
    # Eq-style unnormalized transition sum by default; True divides it by l.
    coherence_normalized: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("regularizer weights must be non-negative")


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log-softmax probability of the true class."""
    logp = log_softmax(np.asarray(logits, dtype=np.float64))
    rows = np.arange(len(labels))
    return float(-logp[rows, labels].mean())


def cross_entropy_grad(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Cross-entropy and its gradient w.r.t. the logits (batch-mean convention)."""
    logits = np.asarray(logits, dtype=np.float64)
    logp = log_softmax(logits)
    rows = np.arange(len(labels))
    loss = float(-logp[rows, labels].mean())
    grad = np.exp(logp)
    grad[rows, labels] -= 1.0
    grad /= len(labels)
    return loss, grad


def _per_example_omega(
    mask: np.ndarray, lengths: np.ndarray, cfg: ObjectiveConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-example sparsity and coherence terms plus the position mask used."""
    mask = np.asarray(mask, dtype=np.float64)
    batch, width = mask.shape
    lengths = np.asarray(lengths, dtype=np.int64)
    if np.any(lengths <= 0):
        raise ValueError("every example must have positive length")
    if np.any(lengths > width):
        raise ValueError("length exceeds mask width")
    valid = np.arange(width)[None, :] < lengths[:, None]
    sel = np.where(valid, mask, 0.0)
    sparsity_term = np.abs(sel.sum(axis=1) / lengths - cfg.alpha)
    # transitions t=2..l only: both neighbours must be real tokens
    pair_valid = valid[:, 1:] & valid[:, :-1]
    diffs = np.abs(np.where(pair_valid, mask[:, 1:] - mask[:, :-1], 0.0))
    coherence_term = diffs.sum(axis=1)
    if cfg.coherence_normalized:
        coherence_term = coherence_term / lengths
    return sparsity_term, coherence_term, valid


def sparsity_coherence(mask: np.ndarray, lengths: np.ndarray, cfg: ObjectiveConfig) -> float:
    """Batch-mean Omega; PAD positions (beyond each length) are ignored."""
    sparsity_term, coherence_term, _ = _per_example_omega(mask, lengths, cfg)
    return float((cfg.lambda1 * sparsity_term + cfg.lambda2 * coherence_term).mean())


def sparsity_coherence_grad(
    mask: np.ndarray, lengths: np.ndarray, cfg: ObjectiveConfig
) -> tuple[float, np.ndarray]:
    """Omega and its (sub)gradient w.r.t. the mask values.

    sign(0) is taken as 0 at the sparsity kink and at flat transitions, so the
    gradient is deterministic everywhere.
    """
    mask = np.asarray(mask, dtype=np.float64)
    lengths = np.asarray(lengths, dtype=np.int64)
    sparsity_term, coherence_term, valid = _per_example_omega(mask, lengths, cfg)
    omega = float((cfg.lambda1 * sparsity_term + cfg.lambda2 * coherence_term).mean())

    batch = mask.shape[0]
    sel = np.where(valid, mask, 0.0)
    sparsity_sign = np.sign(sel.sum(axis=1) / lengths - cfg.alpha)
    grad = (cfg.lambda1 * sparsity_sign / lengths)[:, None] * valid

    pair_valid = valid[:, 1:] & valid[:, :-1]
    diff_sign = np.where(pair_valid, np.sign(mask[:, 1:] - mask[:, :-1]), 0.0)
    coh_scale = cfg.lambda2 / lengths if cfg.coherence_normalized else np.full(batch, cfg.lambda2)
    grad[:, 1:] += coh_scale[:, None] * diff_sign
    grad[:, :-1] -= coh_scale[:, None] * diff_sign
    grad /= batch
    return omega, grad


def total_loss(ce: float, omega: float) -> float:
    return ce + omega


def coherence_block_count(mask: np.ndarray) -> int:
    """Selected contiguous blocks in a binary mask (oracle for the transition sum)."""
    mask = np.asarray(mask).astype(int)
    padded = np.concatenate([[0], mask, [0]])
    return int(np.sum((padded[1:] - padded[:-1]) == 1))
