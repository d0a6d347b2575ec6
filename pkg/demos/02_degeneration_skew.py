"""Inducing degeneration with a skewed generator, then watching the folded
model resist it.

Protocol: pretrain the generator as a first-token classifier of the text label
(so selection of token 0 leaks the label), then train jointly from that
deliberately misleading initialization with a fresh predictor head.  On a
corpus with a perfectly class-revealing marker token, the two-phase model
settles into right-answer-wrong-rationale; the folded model recovers the
planted spans.

Run:  python demos/02_degeneration_skew.py    (~15 min on a laptop CPU)
"""

from rationalift import (
    ModelConfig,
    ObjectiveConfig,
    SkewConfig,
    SynthConfig,
    TrainConfig,
    build_model,
    build_vocab,
    evaluate_model,
    pretrain_skewed_generator,
    synth_generate,
    train,
)

corpus = SynthConfig(
    vocab_size=100,
    doc_length=20,
    span_length=3,
    marker_correlation=1.0,  # every negative document carries a marker token
    train_size=600,
    dev_size=300,
    annotation_size=200,
    seed=0,
)
splits = synth_generate(corpus)
vocab = build_vocab(splits.train)
classes = corpus.token_classes()

# each architecture trains with its own tuned hyperparameters, as in the
# original skew protocol; the two-phase baseline's tuned regime (predictor
# faster than generator) is exactly where degeneration bites
JOINT = {
    "two-phase": dict(share_depth=0, lr_gen=4e-4, lr_pred=4e-3, epochs=60,
                      lambda1=0.5, lambda2=0.1),
    "folded": dict(share_depth=1, lr_gen=2e-3, lr_pred=2e-3, epochs=45,
                   lambda1=1.0, lambda2=0.05),
}

for name, cfg in JOINT.items():
    model = build_model(
        ModelConfig(embedding_dim=50, hidden_dim=64, share_depth=cfg["share_depth"]),
        vocab,
        seed=0,
    )
    skew = SkewConfig(mode="skewed_generator", k=0.9, batch_size=100, lr=2e-3,
                      epoch_cap=30, seed=0)
    model, pre_acc = pretrain_skewed_generator(model, splits, skew)
    print(f"\n{name}: generator skewed to first-token accuracy {pre_acc:.2f}")
    best, history = train(
        model, splits,
        TrainConfig(lr_gen=cfg["lr_gen"], lr_pred=cfg["lr_pred"], batch_size=64,
                    epochs=cfg["epochs"], seed=0,
                    objective=ObjectiveConfig(lambda1=cfg["lambda1"],
                                              lambda2=cfg["lambda2"], alpha=0.15)),
        token_classes=classes,
    )
    ann = evaluate_model(best, splits.annotation)
    dev = evaluate_model(best, splits.dev)
    marker_rates = [r.marker_rate for r in history if r.marker_rate is not None]
    print(f"{name}: dev accuracy {dev.metrics.acc:.2f}, "
          f"annotation F1 {ann.metrics.f1:.2f}, "
          f"marker-inclusion rate over training {max(marker_rates):.2f} peak")

print("\nBoth models classify well; only the folded one earns its accuracy "
      "from the planted rationale.")
