"""Command-line entry point tying the library into reproducible experiments.

Every run writes a manifest (command, resolved config, seed, artifact paths)
before training starts, a metrics JSON-lines stream with one record per epoch,
a final metrics JSON, and a checkpoint.  Config precedence is CLI flag >
config file > built-in default; the manifest echoes the fully resolved config
so a run can be replayed without the original shell invocation.

Exit codes: 0 ok, 2 usage/config error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import data, evaluation, model as mdl, objective as obj, training

ENV_OUT = "RATIONALIFT_OUT"


class ConfigError(ValueError):
    pass


# key -> (type, default); booleans accept true/false/1/0/yes/no
CONFIG_SCHEMA: dict[str, tuple[type, object]] = {
    # model
    "embedding_dim": (int, 100),
    "hidden_dim": (int, 200),
    "num_layers": (int, 1),
    "share_depth": (int, None),  # None -> num_layers (folded) unless --mode rnp
    "num_classes": (int, 2),
    "temperature": (float, 1.0),
    "per_direction": (bool, False),
    "train_embedding": (bool, True),
    # objective
    "lambda1": (float, 1.0),
    "lambda2": (float, 0.05),
    "alpha": (float, 0.15),
    "coherence_normalized": (bool, False),
    # training
    "lr_gen": (float, 1e-3),
    "lr_pred": (float, 1e-3),
    "lr_shared": (float, None),
    "batch_size": (int, 64),
    "epochs": (int, 30),
    "seed": (int, 0),
    "max_len": (int, 256),
    "grad_clip": (float, None),
    "delta_sparsity": (float, 0.05),
    # skew
    "skew_kind": (str, None),
    "skew_k": (float, None),
    "skew_batch_size": (int, 500),
    "skew_lr": (float, 1e-3),
    "skew_predictor_input": (str, "first_sentence"),
    "skew_epoch_cap": (int, 20),
    # data
    "data": (str, "synth"),
    "min_freq": (int, 1),
    "embeddings_path": (str, None),
    "train_path": (str, None),
    "dev_path": (str, None),
    "annotation_path": (str, None),
    "aspect": (str, ""),
    "domain": (str, None),
    "synth_vocab_size": (int, 100),
    "synth_doc_length": (int, 20),
    "synth_span_length": (int, 3),
    "synth_marker_correlation": (float, 0.0),
    "synth_seed": (int, 0),
    "synth_train_size": (int, 1000),
    "synth_dev_size": (int, 300),
    "synth_annotation_size": (int, 200),
    "synth_informative_per_class": (int, 40),
    "synth_marker_count": (int, 1),
}


def _parse_value(key: str, raw: str):
    typ, _ = CONFIG_SCHEMA[key]
    raw = raw.strip()
    if raw.lower() in ("none", ""):
        return None
    if typ is bool:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"config key {key!r}: cannot parse boolean from {raw!r}")
    try:
        return typ(raw)
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse {typ.__name__} from {raw!r}") from None


def read_config_file(path: str | Path) -> dict:
    """Flat key=value config; '#' starts a comment."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    values: dict = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_SCHEMA:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = _parse_value(key, raw)
    return values


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = {key: default for key, (_, default) in CONFIG_SCHEMA.items()}
    if getattr(args, "config", None):
        cfg.update(read_config_file(args.config))
    overrides = {
        "seed": getattr(args, "seed", None),
        "share_depth": getattr(args, "share_depth", None),
        "lr_gen": getattr(args, "lr_gen", None),
        "lr_pred": getattr(args, "lr_pred", None),
        "epochs": getattr(args, "epochs", None),
        "alpha": getattr(args, "alpha", None),
        "skew_kind": getattr(args, "kind", None),
        "skew_k": getattr(args, "k", None),
    }
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    mode = getattr(args, "mode", None)
    if cfg["share_depth"] is None:
        if mode == "rnp":
            cfg["share_depth"] = 0
        else:  # fr is the default
            cfg["share_depth"] = cfg["num_layers"]
    cfg["mode"] = "rnp" if cfg["share_depth"] == 0 else (
        "fr" if cfg["share_depth"] == cfg["num_layers"] else f"partial{cfg['share_depth']}"
    )
    return cfg


def _model_config(cfg: dict) -> mdl.ModelConfig:
    return mdl.ModelConfig(
        embedding_dim=cfg["embedding_dim"],
        hidden_dim=cfg["hidden_dim"],
        num_layers=cfg["num_layers"],
        share_depth=cfg["share_depth"],
        num_classes=cfg["num_classes"],
        temperature=cfg["temperature"],
        per_direction=cfg["per_direction"],
        train_embedding=cfg["train_embedding"],
    )


def _train_config(cfg: dict) -> training.TrainConfig:
    return training.TrainConfig(
        lr_gen=cfg["lr_gen"],
        lr_pred=cfg["lr_pred"],
        lr_shared=cfg["lr_shared"],
        batch_size=cfg["batch_size"],
        epochs=cfg["epochs"],
        seed=cfg["seed"],
        max_len=cfg["max_len"],
        grad_clip=cfg["grad_clip"],
        delta_sparsity=cfg["delta_sparsity"],
        objective=obj.ObjectiveConfig(
            lambda1=cfg["lambda1"],
            lambda2=cfg["lambda2"],
            alpha=cfg["alpha"],
            coherence_normalized=cfg["coherence_normalized"],
        ),
    )


def resolve_data(cfg: dict):
    """Returns (splits, vocab, embeddings-or-None, token_classes-or-None)."""
    if cfg["data"] == "synth":
        synth = data.SynthConfig(
            vocab_size=cfg["synth_vocab_size"],
            doc_length=cfg["synth_doc_length"],
            span_length=cfg["synth_span_length"],
            marker_correlation=cfg["synth_marker_correlation"],
            seed=cfg["synth_seed"],
            train_size=cfg["synth_train_size"],
            dev_size=cfg["synth_dev_size"],
            annotation_size=cfg["synth_annotation_size"],
            informative_per_class=cfg["synth_informative_per_class"],
            marker_count=cfg["synth_marker_count"],
        )
        splits = data.synth_generate(synth)
        vocab = data.build_vocab(splits.train, min_freq=cfg["min_freq"])
        return splits, vocab, None, synth.token_classes()
    if cfg["data"] == "jsonl":
        if not cfg["train_path"] or not cfg["dev_path"]:
            raise ConfigError("jsonl data needs train_path and dev_path")
        domain = cfg["domain"]
        if domain is None:
            raise ConfigError("jsonl data needs a domain (beer or hotel)")
        train = data.load_reviews(
            cfg["train_path"], cfg["aspect"], domain, split="train", seed=cfg["seed"]
        )
        dev = data.load_reviews(cfg["dev_path"], cfg["aspect"], domain, split="dev")
        annotation = None
        if cfg["annotation_path"]:
            annotation = data.load_annotations(cfg["annotation_path"], domain, cfg["aspect"])
        splits = data.Splits(train=train, dev=dev, annotation=annotation)
        vocab = data.build_vocab(train, min_freq=cfg["min_freq"])
        embeddings = None
        if cfg["embeddings_path"]:
            embeddings = data.load_embeddings(
                cfg["embeddings_path"], vocab, cfg["embedding_dim"], seed=cfg["seed"]
            )
        return splits, vocab, embeddings, None
    raise ConfigError(f"unknown data kind {cfg['data']!r} (expected synth or jsonl)")


# ---------------------------------------------------------------------------
# Run directory plumbing
# ---------------------------------------------------------------------------


def _out_root() -> Path:
    return Path(os.environ.get(ENV_OUT, "runs"))


def _run_dir(args: argparse.Namespace, cfg: dict, command: str) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    stem = Path(args.config).stem if getattr(args, "config", None) else cfg["data"]
    return _out_root() / f"{command}-{stem}-{cfg['mode']}-seed{cfg['seed']}"


def write_manifest(
    out_dir: Path, command: str, argv: Sequence[str], cfg: dict, extra: Optional[dict] = None
) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "argv": list(argv),
        "resolved_config": {k: cfg[k] for k in sorted(cfg)},
        "seed": cfg["seed"],
        "out_dir": str(out_dir),
        "artifacts": {
            "checkpoint": str(out_dir / "checkpoint.npz"),
            "metrics": str(out_dir / "metrics.jsonl"),
            "final": str(out_dir / "final.json"),
            "reports": str(out_dir / "reports"),
        },
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    if extra:
        manifest.update(extra)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _amend_manifest(out_dir: Path, extra: dict) -> None:
    path = out_dir / "manifest.json"
    manifest = json.loads(path.read_text(encoding="utf-8"))
    manifest.update(extra)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_metrics_stream(out_dir: Path, history: training.TrainHistory) -> None:
    with (out_dir / "metrics.jsonl").open("w", encoding="utf-8") as fh:
        for record in history:
            fh.write(json.dumps(record.to_json_dict(), sort_keys=True) + "\n")


def _write_final(out_dir: Path, run: evaluation.EvalRun) -> None:
    payload = run.metrics.as_json_dict()
    (out_dir / "final.json").write_text(
        json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8"
    )
    with (out_dir / "masks.jsonl").open("w", encoding="utf-8") as fh:
        for ex_id, mask in zip(run.ids, run.masks):
            fh.write(
                json.dumps({"id": ex_id, "mask": "".join(str(int(m)) for m in mask)}) + "\n"
            )


def _emit_synth_corpora(out_dir: Path, cfg: dict, splits: data.Splits) -> None:
    if cfg["data"] != "synth":
        return
    corpus_dir = out_dir / "data"
    data.write_jsonl(splits.train, corpus_dir / "train.jsonl")
    data.write_jsonl(splits.dev, corpus_dir / "dev.jsonl")
    if splits.annotation is not None:
        data.write_jsonl(splits.annotation, corpus_dir / "annotation.jsonl")


def _final_split(splits: data.Splits) -> data.Dataset:
    return splits.annotation if splits.annotation is not None else splits.dev


def _run_training(
    args: argparse.Namespace,
    argv: Sequence[str],
    command: str,
    cfg: dict,
    params: mdl.ModelParams,
    splits: data.Splits,
    token_classes,
    out_dir: Path,
    manifest_extra: Optional[dict] = None,
) -> int:
    train_cfg = _train_config(cfg)
    best, history = training.train(params, splits, train_cfg, token_classes=token_classes)
    _write_metrics_stream(out_dir, history)
    run = evaluation.evaluate_model(best, _final_split(splits), max_len=cfg["max_len"])
    _write_final(out_dir, run)
    mdl.save_checkpoint(out_dir / "checkpoint.npz", best, meta={"config": cfg})
    (out_dir / "reports").mkdir(exist_ok=True)
    if manifest_extra:
        _amend_manifest(out_dir, manifest_extra)
    print(json.dumps(run.metrics.as_json_dict(), sort_keys=True))
    return 0


def cmd_train(args: argparse.Namespace, argv: Sequence[str]) -> int:
    cfg = resolve_config(args)
    splits, vocab, embeddings, token_classes = resolve_data(cfg)
    out_dir = _run_dir(args, cfg, "train")
    write_manifest(out_dir, "train", argv, cfg)
    _emit_synth_corpora(out_dir, cfg, splits)
    params = mdl.build_model(_model_config(cfg), vocab, embeddings=embeddings, seed=cfg["seed"])
    return _run_training(args, argv, "train", cfg, params, splits, token_classes, out_dir)


def cmd_skew(args: argparse.Namespace, argv: Sequence[str]) -> int:
    cfg = resolve_config(args)
    if cfg["skew_kind"] not in ("generator", "predictor"):
        raise ConfigError(f"invalid skew kind {cfg['skew_kind']!r}")
    if cfg["skew_k"] is None:
        raise ConfigError("skew requires --k")
    splits, vocab, embeddings, token_classes = resolve_data(cfg)
    out_dir = _run_dir(args, cfg, f"skew-{cfg['skew_kind']}{cfg['skew_k']:g}")
    write_manifest(out_dir, "skew", argv, cfg)
    _emit_synth_corpora(out_dir, cfg, splits)
    params = mdl.build_model(_model_config(cfg), vocab, embeddings=embeddings, seed=cfg["seed"])
    skew_cfg = training.SkewConfig(
        mode=f"skewed_{cfg['skew_kind']}",
        k=cfg["skew_k"],
        batch_size=cfg["skew_batch_size"],
        lr=cfg["skew_lr"],
        predictor_input=cfg["skew_predictor_input"],
        epoch_cap=cfg["skew_epoch_cap"],
        seed=cfg["seed"],
    )
    extra: dict = {"skew": {"kind": cfg["skew_kind"], "k": cfg["skew_k"]}}
    if cfg["skew_kind"] == "generator":
        params, pre_acc = training.pretrain_skewed_generator(params, splits, skew_cfg)
        extra["pre_acc"] = pre_acc
    else:
        training.pretrain_skewed_predictor(params, splits, skew_cfg, token_classes=token_classes)
        extra["pretrain_epochs"] = int(cfg["skew_k"])
    return _run_training(
        args, argv, "skew", cfg, params, splits, token_classes, out_dir, manifest_extra=extra
    )


def _parse_rate_list(raw: str, flag: str) -> list[float]:
    rates = [float(v) for v in raw.split(",") if v.strip()]
    if not rates:
        raise ConfigError(f"{flag} must list at least one value")
    return rates


def cmd_grid(args: argparse.Namespace, argv: Sequence[str]) -> int:
    cfg = resolve_config(args)
    gen_rates = _parse_rate_list(args.gen_rates, "--gen-rates")
    pred_rates = _parse_rate_list(args.pred_rates, "--pred-rates")
    seeds = [int(v) for v in args.seeds.split(",") if v.strip()]
    if not seeds:
        raise ConfigError("--seeds must list at least one seed")
    cfg["share_depth"] = 0
    cfg["mode"] = "rnp"
    splits, vocab, embeddings, token_classes = resolve_data(cfg)
    if splits.annotation is None:
        raise ConfigError("the grid needs an annotation split to score F1")
    out_dir = _run_dir(args, cfg, "grid")
    write_manifest(out_dir, "grid", argv, cfg, extra={
        "grid": {"gen_rates": gen_rates, "pred_rates": pred_rates, "seeds": seeds}
    })
    median = np.zeros((len(gen_rates), len(pred_rates)))
    for i, lg in enumerate(gen_rates):
        for j, lp in enumerate(pred_rates):
            scores = []
            for seed in seeds:
                cell_cfg = dict(cfg, lr_gen=lg, lr_pred=lp, seed=seed)
                cell_dir = out_dir / f"cell-g{lg:g}-p{lp:g}-s{seed}"
                final_path = cell_dir / "final.json"
                if (cell_dir / "manifest.json").exists() and final_path.exists():
                    payload = json.loads(final_path.read_text(encoding="utf-8"))
                    scores.append(payload["F1"])
                    continue
                write_manifest(cell_dir, "train", argv, cell_cfg)
                params = mdl.build_model(
                    _model_config(cell_cfg), vocab, embeddings=embeddings, seed=seed
                )
                best, history = training.train(
                    params, splits, _train_config(cell_cfg), token_classes=token_classes
                )
                _write_metrics_stream(cell_dir, history)
                run = evaluation.evaluate_model(best, splits.annotation, max_len=cfg["max_len"])
                _write_final(cell_dir, run)
                mdl.save_checkpoint(cell_dir / "checkpoint.npz", best, meta={"config": cell_cfg})
                (cell_dir / "reports").mkdir(exist_ok=True)
                scores.append(run.metrics.as_json_dict()["F1"])
            median[i, j] = float(np.median(scores))
    with (out_dir / "grid.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lr_gen\\lr_pred"] + [f"{lp:g}" for lp in pred_rates])
        for i, lg in enumerate(gen_rates):
            writer.writerow([f"{lg:g}"] + [f"{median[i, j]:.6f}" for j in range(len(pred_rates))])
    lines = ["lr_gen\\lr_pred  " + "  ".join(f"{lp:>10g}" for lp in pred_rates)]
    for i, lg in enumerate(gen_rates):
        lines.append(
            f"{lg:>13g}  " + "  ".join(f"{median[i, j]:>10.4f}" for j in range(len(pred_rates)))
        )
    table = "\n".join(lines)
    (out_dir / "grid.txt").write_text(table + "\n", encoding="utf-8")
    (out_dir / "grid.json").write_text(
        json.dumps(
            {
                "gen_rates": gen_rates,
                "pred_rates": pred_rates,
                "median_f1": median.tolist(),
            },
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    print(table)
    return 0


DEFAULT_PROBE_SENTENCES = ("good . , smell", "good , . smell")


def _probe_sentences(
    args, params, token_classes, splits
) -> tuple[list[list[str]], list[list[str]]]:
    if args.sentence:
        sentences = [s.split() for s in args.sentence]
        if token_classes is not None:
            classes = [[token_classes.get(t, data.CLASS_FILLER) for t in s] for s in sentences]
        else:
            classes = [list(data.classify_tokens(s)) for s in sentences]
        return sentences, classes
    defaults = [s.split() for s in DEFAULT_PROBE_SENTENCES]
    if all(t in params.vocab for s in defaults for t in s):
        return defaults, [list(data.classify_tokens(s)) for s in defaults]
    if token_classes is not None and splits is not None:
        # synthetic corpora: probe real documents, which carry designated
        # filler/informative tokens in-distribution
        docs = list(_final_split(splits))[: args.max_examples]
        sentences = [list(ex.tokens) for ex in docs]
        classes = [[token_classes.get(t, data.CLASS_FILLER) for t in s] for s in sentences]
        return sentences, classes
    raise ConfigError(
        "default probe tokens are not in the checkpoint vocabulary; pass --sentence"
    )


def cmd_probe(args: argparse.Namespace, argv: Sequence[str]) -> int:
    cfg = resolve_config(args)
    ckpt = Path(args.checkpoint)
    if not ckpt.exists():
        raise ConfigError(f"checkpoint not found: {ckpt}")
    params, _ = mdl.load_checkpoint(ckpt)
    out_dir = Path(args.out) if args.out else _out_root() / f"probe-{args.probe}"
    out_dir.mkdir(parents=True, exist_ok=True)
    token_classes = None
    needs_corpus = args.probe in ("insertion", "uninformative")
    splits = None
    if needs_corpus or cfg["data"] == "synth":
        splits, _, _, token_classes = resolve_data(cfg)
    if args.probe == "lemma3":
        sentences, classes = _probe_sentences(args, params, token_classes, splits)
        report = evaluation.lemma3_probe(params, sentences, classes)
    elif args.probe == "insertion":
        assert splits is not None
        dataset = _final_split(splits)
        examples = list(dataset)[: args.max_examples]
        if token_classes is not None:
            fillers = sorted(t for t, c in token_classes.items() if c == data.CLASS_FILLER)
            token = args.token or fillers[0]
        else:
            token = args.token or "."
        report = evaluation.insertion_probe(params, examples, token)
    else:  # uninformative
        assert splits is not None
        if token_classes is None:
            raise ConfigError("the uninformative probe needs a synthetic corpus")
        dataset = _final_split(splits)
        report = evaluation.uninformative_rationale_probe(
            params, dataset, token_classes, max_examples=args.max_examples
        )
    (out_dir / "probe.json").write_text(report.to_json() + "\n", encoding="utf-8")
    (out_dir / "probe.html").write_text(
        evaluation.render_probe_html(report), encoding="utf-8"
    )
    print(json.dumps(report.summary, sort_keys=True))
    return 0


def cmd_eval(args: argparse.Namespace, argv: Sequence[str]) -> int:
    cfg = resolve_config(args)
    ckpt = Path(args.checkpoint)
    if not ckpt.exists():
        raise ConfigError(f"checkpoint not found: {ckpt}")
    params, _ = mdl.load_checkpoint(ckpt)
    splits, _, _, _ = resolve_data(cfg)
    dataset = {"train": splits.train, "dev": splits.dev, "annotation": splits.annotation}[
        args.split
    ]
    if dataset is None:
        raise ConfigError(f"no {args.split} split available")
    out_dir = Path(args.out) if args.out else _out_root() / f"eval-{args.split}"
    out_dir.mkdir(parents=True, exist_ok=True)
    run = evaluation.evaluate_model(params, dataset, max_len=cfg["max_len"])
    _write_final(out_dir, run)
    if args.render is not None:
        report = evaluation.render_rationales(
            list(dataset), run.masks, n=args.render, fmt=args.format
        )
        suffix = "html" if args.format == "html" else "txt"
        (out_dir / f"rationales.{suffix}").write_text(report, encoding="utf-8")
    print(json.dumps(run.metrics.as_json_dict(), sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rationalift",
        description="Cooperative selective rationalization experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--mode", choices=["fr", "rnp"], help="encoder sharing preset")
        p.add_argument("--share-depth", dest="share_depth", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory (default under $RATIONALIFT_OUT)")
        p.add_argument("--lr-gen", dest="lr_gen", type=float)
        p.add_argument("--lr-pred", dest="lr_pred", type=float)
        p.add_argument("--epochs", type=int)
        p.add_argument("--alpha", type=float)

    p_train = sub.add_parser("train", help="joint cooperative training")
    add_common(p_train)
    p_train.set_defaults(func=cmd_train)

    p_skew = sub.add_parser("skew", help="skew pretraining followed by joint training")
    add_common(p_skew)
    p_skew.add_argument("--kind", choices=["generator", "predictor"], required=True)
    p_skew.add_argument(
        "--k", type=float, required=True, help="accuracy threshold (generator) or epochs (predictor)"
    )
    p_skew.set_defaults(func=cmd_skew)

    p_grid = sub.add_parser("grid", help="learning-rate grid for the two-phase baseline")
    add_common(p_grid)
    p_grid.add_argument("--gen-rates", dest="gen_rates", required=True)
    p_grid.add_argument("--pred-rates", dest="pred_rates", required=True)
    p_grid.add_argument("--seeds", default="0")
    p_grid.set_defaults(func=cmd_grid)

    p_probe = sub.add_parser("probe", help="representation probes on a checkpoint")
    add_common(p_probe)
    p_probe.add_argument("--checkpoint", required=True)
    p_probe.add_argument(
        "--probe", choices=["lemma3", "insertion", "uninformative"], required=True
    )
    p_probe.add_argument("--sentence", action="append", help="probe sentence (repeatable)")
    p_probe.add_argument("--token", help="token to insert (insertion probe)")
    p_probe.add_argument("--max-examples", dest="max_examples", type=int, default=20)
    p_probe.set_defaults(func=cmd_probe)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint; optionally render rationales")
    add_common(p_eval)
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--split", choices=["train", "dev", "annotation"], default="annotation")
    p_eval.add_argument("--render", type=int, help="render the first N rationales")
    p_eval.add_argument("--format", choices=["ansi", "html"], default="ansi")
    p_eval.set_defaults(func=cmd_eval)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, argv)
    except training.DivergenceError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, data.CorpusError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
