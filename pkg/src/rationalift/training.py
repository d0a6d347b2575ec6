"""Optimization loops: joint cooperative training, asymmetric learning-rate
grids, and the two skew-pretraining protocols that deliberately induce
degeneration."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from . import evaluation, model as mdl, objective as obj
from .data import CLASS_FILLER, CLASS_MARKER, MASK_ID, PAD_ID, Dataset, Splits, make_batches

logger = logging.getLogger(__name__)


class DivergenceError(RuntimeError):
    """Training loss became non-finite."""


class PretrainThresholdError(RuntimeError):
    """Skew pretraining could not reach the requested accuracy threshold."""


@dataclass(frozen=True)
class TrainConfig:
    lr_gen: float = 1e-3
    lr_pred: float = 1e-3
    lr_shared: Optional[float] = None  # shared parameters follow lr_gen when unset
    batch_size: int = 64
    epochs: int = 20
    seed: int = 0
    temperature: Optional[float] = None  # overrides the model config when set
    max_len: int = 256
    grad_clip: Optional[float] = None
    delta_sparsity: float = 0.05
    objective: obj.ObjectiveConfig = field(default_factory=obj.ObjectiveConfig)

    def __post_init__(self) -> None:
        if self.lr_gen <= 0 or self.lr_pred <= 0:
            raise ValueError("learning rates must be positive")
        if self.lr_shared is not None and self.lr_shared <= 0:
            raise ValueError("lr_shared must be positive when given")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")

    @property
    def effective_lr_shared(self) -> float:
        return self.lr_gen if self.lr_shared is None else self.lr_shared


@dataclass(frozen=True)
class SkewConfig:
    """mode "skewed_predictor": k = pretraining epochs on degenerate inputs.
    mode "skewed_generator": k = accuracy threshold for the first-token
    label classifier, recorded as pre_acc when first exceeded."""

    mode: str
    k: float
    batch_size: int = 500
    lr: float = 1e-3
    predictor_input: str = "first_sentence"  # or "marker_only"
    epoch_cap: int = 20
    first_sentence_cap: int = 15
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in ("skewed_predictor", "skewed_generator"):
            raise ValueError(f"unknown skew mode {self.mode!r}")
        if self.k <= 0:
            raise ValueError("k must be positive")
        if self.mode == "skewed_generator" and not 0.5 < self.k < 1.0:
            raise ValueError("generator-skew threshold must lie in (0.5, 1)")
        if self.predictor_input not in ("first_sentence", "marker_only"):
            raise ValueError(f"unknown predictor_input {self.predictor_input!r}")


@dataclass
class EpochRecord:
    epoch: int
    train_ce: float
    train_omega: float
    train_loss: float
    dev_acc: float
    dev_sparsity: float
    dev_f1: Optional[float] = None
    ann_acc: Optional[float] = None
    ann_sparsity: Optional[float] = None
    ann_precision: Optional[float] = None
    ann_recall: Optional[float] = None
    ann_f1: Optional[float] = None
    marker_rate: Optional[float] = None
    composition: Optional[dict[str, float]] = None

    def to_json_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


TrainHistory = list[EpochRecord]


class Adam:
    """Adaptive-moment optimizer over disjoint parameter groups."""

    def __init__(
        self,
        groups: Sequence[tuple[Sequence[mdl.Parameter], float]],
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ):
        self.betas = betas
        self.eps = eps
        self.t = 0
        self._entries: list[dict] = []
        seen: set[int] = set()
        for plist, lr in groups:
            for p in plist:
                if id(p) in seen:
                    raise ValueError(f"parameter {p.name} appears in more than one group")
                seen.add(id(p))
                self._entries.append(
                    {"p": p, "lr": lr, "m": np.zeros_like(p.value), "v": np.zeros_like(p.value)}
                )

    def parameters(self) -> list[mdl.Parameter]:
        return [e["p"] for e in self._entries]

    def zero_grad(self) -> None:
        for e in self._entries:
            e["p"].zero_grad()

    def step(self) -> None:
        self.t += 1
        b1, b2 = self.betas
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for e in self._entries:
            g = e["p"].grad
            e["m"] *= b1
            e["m"] += (1.0 - b1) * g
            e["v"] *= b2
            e["v"] += (1.0 - b2) * g * g
            update = (e["m"] / c1) / (np.sqrt(e["v"] / c2) + self.eps)
            e["p"].value -= e["lr"] * update


def make_optimizer(params: mdl.ModelParams, cfg: TrainConfig) -> Adam:
    parts = params.partitions()
    return Adam(
        [
            (parts["generator"], cfg.lr_gen),
            (parts["predictor"], cfg.lr_pred),
            (parts["shared"], cfg.effective_lr_shared),
        ]
    )


def clip_gradients(parameters: Sequence[mdl.Parameter], max_norm: float) -> float:
    total = float(np.sqrt(sum(float((p.grad**2).sum()) for p in parameters)))
    if total > max_norm:
        scale = max_norm / (total + 1e-12)
        for p in parameters:
            p.grad *= scale
    return total


def select_model(history: TrainHistory, alpha: float, delta_sparsity: float = 0.05) -> int:
    """Index of the chosen epoch: max dev accuracy within the sparsity band
    (earliest on ties); if no epoch is in band, the closest-sparsity epoch."""
    if not history:
        raise ValueError("history is empty")
    in_band = [
        i for i, r in enumerate(history) if abs(r.dev_sparsity - alpha) <= delta_sparsity
    ]
    if in_band:
        return min(in_band, key=lambda i: (-history[i].dev_acc, i))
    return min(range(len(history)), key=lambda i: (abs(history[i].dev_sparsity - alpha), i))


def _evaluate_epoch(
    params: mdl.ModelParams,
    splits: Splits,
    cfg: TrainConfig,
    token_classes: Optional[Mapping[str, str]],
    record: EpochRecord,
) -> None:
    dev = evaluation.evaluate_model(params, splits.dev, max_len=cfg.max_len)
    record.dev_acc = dev.metrics.acc
    record.dev_sparsity = dev.metrics.s
    record.dev_f1 = dev.metrics.f1
    if token_classes is not None:
        class_rows = [
            [token_classes.get(t, CLASS_FILLER) for t in toks] for toks in dev.token_rows
        ]
        record.marker_rate = evaluation.marker_inclusion_rate(dev.masks, class_rows)
        record.composition = evaluation.selection_composition(dev.masks, class_rows)
    if splits.annotation is not None:
        ann = evaluation.evaluate_model(params, splits.annotation, max_len=cfg.max_len)
        record.ann_acc = ann.metrics.acc
        record.ann_sparsity = ann.metrics.s
        record.ann_precision = ann.metrics.p
        record.ann_recall = ann.metrics.r
        record.ann_f1 = ann.metrics.f1


def train(
    params: mdl.ModelParams,
    splits: Splits,
    cfg: TrainConfig,
    token_classes: Optional[Mapping[str, str]] = None,
) -> tuple[mdl.ModelParams, TrainHistory]:
    """Joint cooperative training; returns the checkpoint chosen by select_model.

    Generator-owned parameters step with lr_gen, predictor-owned with lr_pred,
    shared with lr_shared (lr_gen unless set).  Fully deterministic given the
    config seed.
    """
    if cfg.temperature is not None and cfg.temperature != params.config.temperature:
        params.config = replace(params.config, temperature=cfg.temperature)
    if cfg.epochs == 0:
        return params, []
    optimizer = make_optimizer(params, cfg)
    shuffle_ss, noise_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    shuffle_rng = np.random.default_rng(shuffle_ss)
    noise_rng = np.random.default_rng(noise_ss)
    history: TrainHistory = []
    alpha = cfg.objective.alpha
    best_band: Optional[tuple[float, int, dict]] = None  # (acc, index, state)
    best_near: Optional[tuple[float, int, dict]] = None  # (|S - alpha|, index, state)
    for epoch_idx in range(cfg.epochs):
        ce_sum = omega_sum = 0.0
        batches = make_batches(
            splits.train,
            params.vocab,
            cfg.batch_size,
            max_len=cfg.max_len,
            seed=int(shuffle_rng.integers(2**31)),
            shuffle=True,
        )
        for batch in batches:
            optimizer.zero_grad()
            loss = mdl.loss_and_grads(
                params, batch, cfg.objective, mode="train", noise=noise_rng
            )
            if not np.isfinite(loss.total):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch_idx + 1}: "
                    f"ce={loss.ce}, omega={loss.omega}"
                )
            if cfg.grad_clip is not None:
                clip_gradients(optimizer.parameters(), cfg.grad_clip)
            optimizer.step()
            ce_sum += loss.ce
            omega_sum += loss.omega
        for i in range(params.config.share_depth):
            assert params.pred_layers[i] is params.gen_layers[i], "sharing alias broken"
        record = EpochRecord(
            epoch=epoch_idx + 1,
            train_ce=ce_sum / len(batches),
            train_omega=omega_sum / len(batches),
            train_loss=(ce_sum + omega_sum) / len(batches),
            dev_acc=0.0,
            dev_sparsity=0.0,
        )
        _evaluate_epoch(params, splits, cfg, token_classes, record)
        history.append(record)
        dist = abs(record.dev_sparsity - alpha)
        if dist <= cfg.delta_sparsity and (best_band is None or record.dev_acc > best_band[0]):
            best_band = (record.dev_acc, epoch_idx, params.state_dict())
        if best_near is None or dist < best_near[0]:
            best_near = (dist, epoch_idx, params.state_dict())
    chosen_idx = select_model(history, alpha, cfg.delta_sparsity)
    chosen = best_band if best_band is not None else best_near
    assert chosen is not None and chosen[1] == chosen_idx, "snapshot/selection mismatch"
    best = params.clone()
    best.load_state(chosen[2])
    return best, history


# ---------------------------------------------------------------------------
# Skew pretraining protocols
# ---------------------------------------------------------------------------

_ZERO_OBJECTIVE = obj.ObjectiveConfig(lambda1=0.0, lambda2=0.0, alpha=0.0)


def first_sentence_length(tokens: Sequence[str], cap: int = 15) -> int:
    """Tokens up to and including the first ".", capped at `cap`."""
    for i, tok in enumerate(tokens[:cap]):
        if tok == ".":
            return i + 1
    return min(cap, len(tokens))


def _predictor_pretrain_mask(
    batch, skew: SkewConfig, token_classes: Optional[Mapping[str, str]], vocab
) -> np.ndarray:
    mask = np.zeros_like(batch.pad_mask)
    if skew.predictor_input == "first_sentence":
        period = vocab.token_to_id.get(".")
        for row in range(len(batch)):
            n = int(batch.lengths[row])
            limit = min(skew.first_sentence_cap, n)
            cut = limit
            if period is not None:
                hits = np.where(batch.token_ids[row, :limit] == period)[0]
                if hits.size:
                    cut = int(hits[0]) + 1
            mask[row, :cut] = 1.0
    else:  # marker_only
        if token_classes is None:
            raise ValueError("marker_only pretraining needs a token-class map")
        marker_ids = {
            vocab.token_to_id[t]
            for t, c in token_classes.items()
            if c == CLASS_MARKER and t in vocab.token_to_id
        }
        if marker_ids:
            mask = np.isin(batch.token_ids, list(marker_ids)).astype(np.float64)
    return mask * batch.pad_mask


def pretrain_skewed_predictor(
    params: mdl.ModelParams,
    splits: Splits,
    skew: SkewConfig,
    token_classes: Optional[Mapping[str, str]] = None,
) -> mdl.ModelParams:
    """Pretrain the predictor on deliberately degenerate inputs (first sentence,
    or the spurious marker tokens only) for k epochs; the generator's own
    parameters are untouched, though a shared encoder absorbs the skew."""
    if skew.mode != "skewed_predictor":
        raise ValueError("pretrain_skewed_predictor requires mode='skewed_predictor'")
    parts = params.partitions()
    optimizer = Adam([(parts["predictor"] + parts["shared"], skew.lr)])
    shuffle_ss = np.random.SeedSequence(skew.seed).spawn(1)[0]
    shuffle_rng = np.random.default_rng(shuffle_ss)
    for _ in range(int(skew.k)):
        batches = make_batches(
            splits.train,
            params.vocab,
            skew.batch_size,
            seed=int(shuffle_rng.integers(2**31)),
            shuffle=True,
        )
        for batch in batches:
            mask = _predictor_pretrain_mask(batch, skew, token_classes, params.vocab)
            optimizer.zero_grad()
            mdl.loss_and_grads(params, batch, _ZERO_OBJECTIVE, mode="eval", force_mask=mask)
            optimizer.step()
    return params


def _first_token_accuracy(params: mdl.ModelParams, dataset: Dataset, batch_size: int) -> float:
    correct = total = 0
    for batch in make_batches(dataset, params.vocab, batch_size, shuffle=False):
        emb = params.embedding.value[batch.token_ids]
        states = mdl.encode(params.gen_layers, emb, batch.pad_mask)
        p0 = mdl.sigmoid(params.gen_head.forward(states)[..., 0][:, 0])
        correct += int(np.sum((p0 > 0.5).astype(int) == batch.labels))
        total += len(batch)
    return correct / total


def pretrain_skewed_generator(
    params: mdl.ModelParams, splits: Splits, skew: SkewConfig
) -> tuple[mdl.ModelParams, float]:
    """Train the generator head as a first-token classifier of the text label
    until its accuracy first exceeds k; returns the recorded pre_acc.

    The predictor head and predictor-only encoder layers are never updated, so
    joint training afterwards starts from a randomly initialized predictor.
    """
    if skew.mode != "skewed_generator":
        raise ValueError("pretrain_skewed_generator requires mode='skewed_generator'")
    parts = params.partitions()
    optimizer = Adam([(parts["generator"] + parts["shared"], skew.lr)])
    shuffle_rng = np.random.default_rng(np.random.SeedSequence(skew.seed).spawn(1)[0])
    best_acc = 0.0
    for _ in range(skew.epoch_cap):
        batches = make_batches(
            splits.train,
            params.vocab,
            skew.batch_size,
            seed=int(shuffle_rng.integers(2**31)),
            shuffle=True,
        )
        for batch in batches:
            optimizer.zero_grad()
            emb = params.embedding.value[batch.token_ids]
            states, caches = mdl.encode(
                params.gen_layers, emb, batch.pad_mask, with_cache=True
            )
            p0 = mdl.sigmoid(params.gen_head.forward(states)[..., 0][:, 0])
            da0 = (p0 - batch.labels) / len(batch)  # sigmoid + BCE
            params.gen_head.W.grad += (da0[:, None] * states[:, 0, :]).sum(axis=0)[None, :]
            params.gen_head.b.grad += da0.sum()
            dstates = np.zeros_like(states)
            dstates[:, 0, :] = da0[:, None] * params.gen_head.W.value[0]
            demb = mdl._encode_backward(params.gen_layers, caches, dstates, batch.pad_mask)
            if params.config.train_embedding:
                np.add.at(
                    params.embedding.grad,
                    batch.token_ids.reshape(-1),
                    demb.reshape(-1, params.config.embedding_dim),
                )
                params.embedding.grad[PAD_ID] = 0.0
                params.embedding.grad[MASK_ID] = 0.0
            optimizer.step()
        acc = _first_token_accuracy(params, splits.train, skew.batch_size)
        best_acc = max(best_acc, acc)
        if acc > skew.k:
            return params, acc
    raise PretrainThresholdError(
        f"first-token accuracy never exceeded {skew.k} within {skew.epoch_cap} epochs "
        f"(best {best_acc:.4f})"
    )


# ---------------------------------------------------------------------------
# Learning-rate grid
# ---------------------------------------------------------------------------


@dataclass
class GridResult:
    gen_rates: tuple[float, ...]
    pred_rates: tuple[float, ...]
    median_f1: np.ndarray  # (len(gen_rates), len(pred_rates))
    cells: dict[tuple[int, int], list[tuple[int, float]]]  # (i, j) -> [(seed, f1)]

    def cell_f1(self, lr_gen: float, lr_pred: float) -> float:
        i = self.gen_rates.index(lr_gen)
        j = self.pred_rates.index(lr_pred)
        return float(self.median_f1[i, j])


def lr_grid(
    model_cfg: mdl.ModelConfig,
    vocab,
    splits: Splits,
    base_cfg: TrainConfig,
    gen_rates: Sequence[float],
    pred_rates: Sequence[float],
    seeds: Sequence[int],
    embeddings=None,
) -> GridResult:
    """Cross-product sweep of generator/predictor learning rates for the
    two-phase baseline; per-cell median annotation F1 over seeds."""
    if model_cfg.share_depth != 0:
        raise ValueError("the learning-rate grid is defined for the two-phase baseline")
    if not gen_rates or not pred_rates or not seeds:
        raise ValueError("rate and seed lists must be non-empty")
    if splits.annotation is None:
        raise ValueError("an annotation split is required to score grid cells")
    median = np.zeros((len(gen_rates), len(pred_rates)))
    cells: dict[tuple[int, int], list[tuple[int, float]]] = {}
    for i, lg in enumerate(gen_rates):
        for j, lp in enumerate(pred_rates):
            scores = []
            for seed in seeds:
                params = mdl.build_model(model_cfg, vocab, embeddings=embeddings, seed=seed)
                cfg = replace(base_cfg, lr_gen=lg, lr_pred=lp, seed=seed)
                best, _ = train(params, splits, cfg)
                run = evaluation.evaluate_model(best, splits.annotation, max_len=cfg.max_len)
                scores.append((seed, float(run.metrics.f1)))
                logger.info("grid cell lr_gen=%g lr_pred=%g seed=%d F1=%.4f", lg, lp, seed, scores[-1][1])
            cells[(i, j)] = scores
            median[i, j] = float(np.median([f for _, f in scores]))
    return GridResult(
        gen_rates=tuple(gen_rates), pred_rates=tuple(pred_rates), median_f1=median, cells=cells
    )
