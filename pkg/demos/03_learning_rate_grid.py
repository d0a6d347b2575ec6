"""Learning-rate asymmetry in the two-phase baseline.

Sweeps generator/predictor learning rates for the two-phase model on the
synthetic corpus.  The trend to look for: cells where the predictor is slower
than the generator beat cells where the predictor races ahead.

Run:  python demos/03_learning_rate_grid.py   (several minutes on a laptop)
"""

from rationalift import (
    ModelConfig,
    ObjectiveConfig,
    SynthConfig,
    TrainConfig,
    build_vocab,
    lr_grid,
    synth_generate,
)

corpus = SynthConfig(doc_length=20, span_length=3, train_size=1000, dev_size=300,
                     annotation_size=200, seed=0)
splits = synth_generate(corpus)
vocab = build_vocab(splits.train)

base_lr = 2e-3
grid = lr_grid(
    ModelConfig(embedding_dim=50, hidden_dim=64, share_depth=0),
    vocab,
    splits,
    TrainConfig(batch_size=64, epochs=30, seed=0,
                objective=ObjectiveConfig(lambda1=1.0, lambda2=0.05, alpha=0.15)),
    gen_rates=[base_lr],
    pred_rates=[base_lr / 5, base_lr, 5 * base_lr],
    seeds=[0, 1, 2],
)

print("median annotation F1 by (lr_gen, lr_pred):")
header = "  ".join(f"{p:>9.0e}" for p in grid.pred_rates)
print(f"{'lr_gen':>9}  {header}")
for i, g in enumerate(grid.gen_rates):
    row = "  ".join(f"{grid.median_f1[i, j]:9.3f}" for j in range(len(grid.pred_rates)))
    print(f"{g:>9.0e}  {row}")

slow = grid.cell_f1(base_lr, base_lr / 5)
fast = grid.cell_f1(base_lr, 5 * base_lr)
print(f"\nslow predictor (lr/5): {slow:.3f}   fast predictor (5*lr): {fast:.3f}")
print("slower-predictor cell should win" if slow >= fast else "unexpected inversion")
