"""Rationale-quality metrics, degeneration diagnostics, rendering, and the
representation probes that empirically exercise the shared-encoder claims."""

from __future__ import annotations

import html as html_mod
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from . import model as mdl
from .data import (
    CLASS_FILLER,
    CLASS_INFORMATIVE,
    CLASS_MARKER,
    CLASS_PUNCTUATION,
    PAD_ID,
    Dataset,
    Example,
    classify_tokens,
    make_batches,
)
from .objective import softmax


@dataclass(frozen=True)
class RationaleMetrics:
    """S / Acc / P / R / F1 as fractions in [0, 1]; P, R, F1 need gold masks."""

    s: float
    acc: float
    p: Optional[float] = None
    r: Optional[float] = None
    f1: Optional[float] = None

    def as_json_dict(self) -> dict[str, float]:
        out = {"S": round(self.s, 6), "Acc": round(self.acc, 6)}
        if self.p is not None:
            out.update({"P": round(self.p, 6), "R": round(self.r, 6), "F1": round(self.f1, 6)})
        return out


def token_prf(
    pred_masks: Sequence[Sequence[int]],
    gold_masks: Sequence[Sequence[int]],
    average: str = "micro",
) -> tuple[float, float, float]:
    """Token-level precision/recall/F1 of predicted vs gold masks.

    Micro-averages over all tokens of all examples by default; empty
    denominators give 0 by convention.
    """
    if len(pred_masks) != len(gold_masks):
        raise ValueError("pred and gold mask lists differ in length")
    per_example = []
    tp = npred = ngold = 0
    for i, (pred, gold) in enumerate(zip(pred_masks, gold_masks)):
        pred = np.asarray(pred).astype(int)
        gold = np.asarray(gold).astype(int)
        if pred.shape != gold.shape:
            raise ValueError(
                f"example {i}: mask length mismatch ({pred.shape[0]} vs {gold.shape[0]})"
            )
        etp = int(np.sum((pred == 1) & (gold == 1)))
        ep, eg = int(pred.sum()), int(gold.sum())
        tp += etp
        npred += ep
        ngold += eg
        pp = etp / ep if ep else 0.0
        rr = etp / eg if eg else 0.0
        per_example.append((pp, rr, 2 * pp * rr / (pp + rr) if pp + rr else 0.0))
    if average == "micro":
        p = tp / npred if npred else 0.0
        r = tp / ngold if ngold else 0.0
        f1 = 2 * p * r / (p + r) if p + r else 0.0
        return p, r, f1
    if average == "macro":
        arr = np.array(per_example)
        return tuple(float(x) for x in arr.mean(axis=0))
    raise ValueError(f"unknown averaging scheme {average!r}")


def sparsity(pred_masks: Sequence[Sequence[int]], lengths: Optional[Sequence[int]] = None) -> float:
    """Mean over examples of selected-token fraction."""
    if lengths is None:
        lengths = [len(m) for m in pred_masks]
    fractions = [float(np.sum(m)) / l for m, l in zip(pred_masks, lengths)]
    return float(np.mean(fractions))


def accuracy(logits: np.ndarray, labels: np.ndarray) -> float:
    preds = np.asarray(logits).argmax(axis=-1)
    return float(np.mean(preds == np.asarray(labels)))


@dataclass
class EvalRun:
    """Deterministic eval-mode pass over a dataset."""

    ids: tuple[str, ...]
    masks: list[np.ndarray]  # per-example hard mask, truncated to true length
    lengths: np.ndarray
    labels: np.ndarray
    logits: np.ndarray
    gold: Optional[list[np.ndarray]]
    metrics: RationaleMetrics
    token_rows: list[tuple[str, ...]] = field(default_factory=list)


def evaluate_model(
    params: mdl.ModelParams,
    dataset: Dataset,
    batch_size: int = 256,
    max_len: int = 256,
    average: str = "micro",
) -> EvalRun:
    """Run the model deterministically (threshold masks) and score it."""
    batches = make_batches(dataset, params.vocab, batch_size, max_len=max_len, shuffle=False)
    ids: list[str] = []
    masks: list[np.ndarray] = []
    gold: Optional[list[np.ndarray]] = [] if dataset.has_gold() else None
    lengths: list[int] = []
    labels: list[int] = []
    logits: list[np.ndarray] = []
    token_rows: list[tuple[str, ...]] = []
    for batch in batches:
        out = mdl.forward(params, batch, mode="eval")
        for row in range(len(batch)):
            n = int(batch.lengths[row])
            ids.append(batch.ids[row])
            masks.append(out.mask.hard_mask[row, :n].astype(int))
            lengths.append(n)
            labels.append(int(batch.labels[row]))
            if gold is not None:
                gold.append(batch.gold[row, :n].astype(int))
        logits.append(out.logits)
    logits_arr = np.concatenate(logits, axis=0)
    labels_arr = np.array(labels)
    s = sparsity(masks, lengths)
    acc = accuracy(logits_arr, labels_arr)
    if gold is not None:
        p, r, f1 = token_prf(masks, gold, average=average)
        metrics = RationaleMetrics(s=s, acc=acc, p=p, r=r, f1=f1)
    else:
        metrics = RationaleMetrics(s=s, acc=acc)
    for ex in dataset:
        token_rows.append(ex.tokens)
    return EvalRun(
        ids=tuple(ids),
        masks=masks,
        lengths=np.array(lengths),
        labels=labels_arr,
        logits=logits_arr,
        gold=gold,
        metrics=metrics,
        token_rows=token_rows,
    )


# ---------------------------------------------------------------------------
# Degeneration diagnostics
# ---------------------------------------------------------------------------

_COMPOSITION_CLASSES = (CLASS_INFORMATIVE, CLASS_FILLER, CLASS_MARKER, CLASS_PUNCTUATION)


def selection_composition(
    masks: Sequence[Sequence[int]], token_class_rows: Sequence[Sequence[str]]
) -> dict[str, float]:
    """Fraction of all selected tokens falling in each token class (sums to 1)."""
    counts = {c: 0 for c in _COMPOSITION_CLASSES}
    total = 0
    for mask, classes in zip(masks, token_class_rows):
        for m, c in zip(mask, classes):
            if m:
                counts[c] = counts.get(c, 0) + 1
                total += 1
    if total == 0:
        return {c: 0.0 for c in counts}
    return {c: n / total for c, n in counts.items()}


def marker_inclusion_rate(
    masks: Sequence[Sequence[int]], token_class_rows: Sequence[Sequence[str]]
) -> float:
    """Fraction of marker-bearing documents whose selection includes a marker."""
    hits = bearing = 0
    for mask, classes in zip(masks, token_class_rows):
        if CLASS_MARKER not in classes:
            continue
        bearing += 1
        if any(m and c == CLASS_MARKER for m, c in zip(mask, classes)):
            hits += 1
    return hits / bearing if bearing else 0.0


def degeneration_report(
    per_epoch_masks: Sequence[Sequence[Sequence[int]]],
    token_class_rows: Sequence[Sequence[str]],
) -> list[dict[str, float]]:
    """Per-epoch selection composition by token class."""
    return [selection_composition(masks, token_class_rows) for masks in per_epoch_masks]


# ---------------------------------------------------------------------------
# Rationale rendering
# ---------------------------------------------------------------------------

_ANSI_RESET = "\x1b[0m"
_ANSI_GOLD = "\x1b[4m"  # underline
_ANSI_PRED = "\x1b[44m"  # blue background


def render_rationales(
    examples: Sequence[Example],
    pred_masks: Sequence[Sequence[int]],
    gold_masks: Optional[Sequence[Optional[Sequence[int]]]] = None,
    n: int = 10,
    fmt: str = "ansi",
) -> str:
    """Render the first n examples with gold spans underlined and predicted
    spans highlighted."""
    if fmt not in ("ansi", "html"):
        raise ValueError(f"unknown render format {fmt!r}")
    n = min(n, len(examples))
    blocks = []
    for i in range(n):
        ex = examples[i]
        pred = list(pred_masks[i])
        gold = None
        if gold_masks is not None and gold_masks[i] is not None:
            gold = list(gold_masks[i])
        elif ex.gold_mask is not None:
            gold = list(ex.gold_mask)
        pieces = []
        for j, tok in enumerate(ex.tokens):
            p = j < len(pred) and pred[j]
            g = gold is not None and j < len(gold) and gold[j]
            if fmt == "ansi":
                prefix = ("" if not g else _ANSI_GOLD) + ("" if not p else _ANSI_PRED)
                pieces.append(f"{prefix}{tok}{_ANSI_RESET}" if prefix else tok)
            else:
                t = html_mod.escape(tok)
                if g:
                    t = f"<u>{t}</u>"
                if p:
                    t = f'<span class="pred">{t}</span>'
                pieces.append(t)
        body = " ".join(pieces)
        header = f"[{ex.id}] label={ex.label}"
        if fmt == "ansi":
            blocks.append(f"{header}\n{body}\n")
        else:
            blocks.append(f"<div class='example'><p class='hdr'>{header}</p><p>{body}</p></div>")
    if fmt == "ansi":
        return "\n".join(blocks)
    style = (
        "<style>.pred{background:#aecbfa;} u{text-decoration-thickness:2px;} "
        ".example{margin:1em 0;font-family:monospace;}</style>"
    )
    return f"<html><head>{style}</head><body>{''.join(blocks)}</body></html>"


# ---------------------------------------------------------------------------
# Representation probes
# ---------------------------------------------------------------------------

UNINFORMATIVE_CLASSES = frozenset({CLASS_FILLER, CLASS_PUNCTUATION})


@dataclass
class ProbeReport:
    """Result of one representation probe; all fields JSON-serializable."""

    kind: str
    summary: dict
    tables: dict
    representations: Optional[dict] = None

    def to_json(self) -> str:
        payload = {"kind": self.kind, "summary": self.summary, "tables": self.tables}
        if self.representations is not None:
            payload["representations"] = self.representations
        return json.dumps(payload, sort_keys=True, indent=2)


def _strict_encode(params: mdl.ModelParams, tokens: Sequence[str]) -> np.ndarray:
    missing = [t for t in tokens if t not in params.vocab]
    if missing:
        raise ValueError(f"probe token(s) not in vocabulary: {missing}")
    return params.vocab.encode(tokens)[None, :]


def _encoder_views(params: mdl.ModelParams) -> dict[str, list]:
    views = {"generator": params.gen_layers}
    if not params.config.is_folded:
        views["predictor"] = params.pred_layers
    return views


def _token_states(params: mdl.ModelParams, layers, tokens: Sequence[str]) -> np.ndarray:
    ids = _strict_encode(params, tokens)
    emb = params.embedding.value[ids]
    pad = np.ones(ids.shape, dtype=np.float64)
    return mdl.encode(layers, emb, pad)[0]


def lemma3_probe(
    params: mdl.ModelParams,
    probe_sentences: Sequence[Sequence[str]],
    token_class_rows: Optional[Sequence[Sequence[str]]] = None,
) -> ProbeReport:
    """Distance of each token's representation to its predecessor's, per encoder view.

    A well-folded encoder carries an uninformative token's state through from
    the preceding token, so d(uninformative, prev) should be small relative to
    d(informative, prev).
    """
    if token_class_rows is None:
        token_class_rows = [classify_tokens(s) for s in probe_sentences]
    tables: dict = {}
    summary: dict = {}
    representations: dict = {}
    for view_name, layers in _encoder_views(params).items():
        rows = []
        uninf, inf = [], []
        reps = []
        for sent, classes in zip(probe_sentences, token_class_rows):
            states = _token_states(params, layers, sent)
            reps.append({"tokens": list(sent), "states": states.tolist()})
            for i in range(1, len(sent)):
                d = float(np.linalg.norm(states[i] - states[i - 1]))
                rows.append(
                    {
                        "sentence": " ".join(sent),
                        "position": i,
                        "token": sent[i],
                        "token_class": classes[i],
                        "distance_to_prev": d,
                    }
                )
                if classes[i] in UNINFORMATIVE_CLASSES:
                    uninf.append(d)
                elif classes[i] == CLASS_INFORMATIVE:
                    inf.append(d)
        tables[view_name] = rows
        view_summary = {
            "mean_uninformative_distance": float(np.mean(uninf)) if uninf else None,
            "mean_informative_distance": float(np.mean(inf)) if inf else None,
        }
        if uninf and inf and np.mean(inf) > 0:
            view_summary["ratio"] = float(np.mean(uninf) / np.mean(inf))
        summary[view_name] = view_summary
        representations[view_name] = reps
    return ProbeReport(
        kind="lemma3", summary=summary, tables=tables, representations=representations
    )


def _predictor_softmax(params: mdl.ModelParams, token_ids: np.ndarray) -> np.ndarray:
    emb = params.embedding.value[token_ids]
    pad = (token_ids != PAD_ID).astype(np.float64)
    logits = mdl.predict(params, emb, pad)
    return softmax(logits)


def insertion_probe(
    params: mdl.ModelParams,
    examples: Sequence[Example],
    token: Optional[str],
    positions: Optional[Sequence[int]] = None,
    as_pad: bool = False,
) -> ProbeReport:
    """Max softmax shift of the predictor when one token is spliced into the text.

    token=None with as_pad=True appends a PAD position instead, which pooling
    must ignore exactly.
    """
    deltas = []
    for ex in examples:
        base_ids = _strict_encode(params, ex.tokens)
        base = _predictor_softmax(params, base_ids)[0]
        row = []
        if as_pad:
            padded = np.concatenate([base_ids, np.zeros((1, 1), dtype=base_ids.dtype)], axis=1)
            after = _predictor_softmax(params, padded)[0]
            row.append(float(np.max(np.abs(after - base))))
        else:
            if token is None:
                raise ValueError("a token is required unless as_pad is set")
            tok_id = np.array([[_strict_encode(params, [token])[0, 0]]], dtype=base_ids.dtype)
            spots = positions if positions is not None else range(len(ex.tokens) + 1)
            for pos in spots:
                new_ids = np.concatenate([base_ids[:, :pos], tok_id, base_ids[:, pos:]], axis=1)
                after = _predictor_softmax(params, new_ids)[0]
                row.append(float(np.max(np.abs(after - base))))
        deltas.append(row)
    flat = [d for row in deltas for d in row]
    return ProbeReport(
        kind="insertion",
        summary={
            "token": token,
            "as_pad": as_pad,
            "median_delta": float(np.median(flat)),
            "max_delta": float(np.max(flat)),
        },
        tables={"deltas": deltas, "example_ids": [ex.id for ex in examples]},
    )


def uninformative_rationale_probe(
    params: mdl.ModelParams,
    dataset: Dataset,
    token_classes: Mapping[str, str],
    max_examples: int = 40,
    rationale_size: int = 3,
    seed: int = 0,
) -> ProbeReport:
    """Compare predictor outputs on filler-only rationales against outputs on
    opposite-class informative (gold-span) rationales.

    A predictor that cannot distinguish uninformative selections produces
    near-identical outputs for all filler-only rationales, so the
    filler/informative distance ratio should be far below 1.
    """
    rng = np.random.default_rng(seed)
    filler_outputs = []
    informative_outputs: dict[int, list[np.ndarray]] = {0: [], 1: []}
    examples = list(dataset)[:max_examples]
    for ex in examples:
        ids = _strict_encode(params, ex.tokens)
        classes = [token_classes.get(t, CLASS_FILLER) for t in ex.tokens]
        filler_positions = [i for i, c in enumerate(classes) if c == CLASS_FILLER]
        pad = np.ones(ids.shape, dtype=np.float64)
        if len(filler_positions) >= rationale_size:
            chosen = rng.choice(filler_positions, size=rationale_size, replace=False)
            mask = np.zeros(len(ex.tokens))
            mask[chosen] = 1.0
            emb = mdl.apply_mask(params.embedding.value[ids], mask[None, :])
            filler_outputs.append(softmax(mdl.predict(params, emb, pad))[0])
        if ex.gold_mask is not None and sum(ex.gold_mask) > 0:
            mask = np.array(ex.gold_mask, dtype=np.float64)
            emb = mdl.apply_mask(params.embedding.value[ids], mask[None, :])
            informative_outputs[ex.label].append(softmax(mdl.predict(params, emb, pad))[0])

    def pairwise(outs: list[np.ndarray]) -> list[float]:
        return [
            float(np.linalg.norm(outs[i] - outs[j]))
            for i in range(len(outs))
            for j in range(i + 1, len(outs))
        ]

    filler_d = pairwise(filler_outputs)
    cross_d = [
        float(np.linalg.norm(a - b))
        for a in informative_outputs[0]
        for b in informative_outputs[1]
    ]
    filler_pred = [int(np.argmax(o)) for o in filler_outputs]
    summary = {
        "filler_median_distance": float(np.median(filler_d)) if filler_d else None,
        "informative_median_distance": float(np.median(cross_d)) if cross_d else None,
        "filler_positive_fraction": float(np.mean(filler_pred)) if filler_pred else None,
    }
    if filler_d and cross_d and np.median(cross_d) > 0:
        summary["ratio"] = float(np.median(filler_d) / np.median(cross_d))
    return ProbeReport(
        kind="uninformative_rationale",
        summary=summary,
        tables={
            "filler_distances": filler_d,
            "informative_distances": cross_d,
            "filler_argmax": filler_pred,
        },
    )


def render_probe_html(report: ProbeReport, dims: int = 40) -> str:
    """Self-contained HTML report; lemma3 reports draw per-dimension bars for
    the first `dims` dimensions of each token representation."""
    parts = [
        "<html><head><style>",
        "body{font-family:sans-serif;} .bar{display:inline-block;width:4px;margin-right:1px;"
        "background:#4a7abc;vertical-align:baseline;} .tok{margin:4px 0;} "
        "table{border-collapse:collapse;} td,th{border:1px solid #999;padding:2px 6px;}",
        "</style></head><body>",
        f"<h1>Probe: {html_mod.escape(report.kind)}</h1>",
        f"<pre>{html_mod.escape(json.dumps(report.summary, indent=2, sort_keys=True))}</pre>",
    ]
    if report.representations:
        for view, sentences in report.representations.items():
            parts.append(f"<h2>{html_mod.escape(view)} encoder</h2>")
            for sent in sentences:
                parts.append(f"<h3>{html_mod.escape(' '.join(sent['tokens']))}</h3>")
                for tok, state in zip(sent["tokens"], sent["states"]):
                    vals = np.asarray(state[:dims])
                    scale = np.abs(vals).max() or 1.0
                    bars = "".join(
                        f'<span class="bar" style="height:{max(1, int(24 * abs(v) / scale))}px;'
                        f'background:{"#4a7abc" if v >= 0 else "#bc4a4a"}"></span>'
                        for v in vals
                    )
                    parts.append(
                        f'<div class="tok"><code>{html_mod.escape(tok)}</code> {bars}</div>'
                    )
    for name, rows in report.tables.items():
        if rows and isinstance(rows, list) and isinstance(rows[0], dict):
            cols = list(rows[0])
            cells = "".join(f"<th>{html_mod.escape(c)}</th>" for c in cols)
            body = "".join(
                "<tr>" + "".join(f"<td>{html_mod.escape(str(r[c]))}</td>" for c in cols) + "</tr>"
                for r in rows
            )
            parts.append(f"<h2>{html_mod.escape(name)}</h2><table><tr>{cells}</tr>{body}</table>")
    parts.append("</body></html>")
    return "".join(parts)
