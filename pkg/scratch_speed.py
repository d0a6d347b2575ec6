"""Scratch: sampling marginals + wall-clock for a training epoch at desk scale."""
import time

import numpy as np

from rationalift import data, evaluation, model as mdl, objective as obj, training

# Bernoulli marginal of the Gumbel hard mask
rng = np.random.default_rng(7)
for p in (0.1, 0.5, 0.9):
    probs = np.full((10000, 1), p)
    s = mdl.sample_mask(probs, temperature=1.0, mode="train", noise_seed=42)
    print(f"p={p}: empirical={s.hard_mask.mean():.4f}")

s = mdl.sample_mask(np.array([[0.9, 0.3, 0.5]]), 1.0, mode="eval")
print("eval threshold:", s.hard_mask, "soft:", s.soft_mask)

# speed: one FR training run at candidate acceptance scale
scfg = data.SynthConfig(vocab_size=100, doc_length=20, span_length=3,
                        marker_correlation=0.0, seed=0,
                        train_size=1000, dev_size=300, annotation_size=200)
t0 = time.time()
splits = data.synth_generate(scfg)
print(f"synth gen: {time.time()-t0:.2f}s")
vocab = data.build_vocab(splits.train)
print("vocab size", len(vocab))

mcfg = mdl.ModelConfig(embedding_dim=50, hidden_dim=64, num_layers=1, share_depth=1,
                       temperature=1.0)
params = mdl.build_model(mcfg, vocab, seed=0)
tcfg = training.TrainConfig(
    lr_gen=1e-3, lr_pred=1e-3, batch_size=64, epochs=5, seed=0,
    objective=obj.ObjectiveConfig(lambda1=1.0, lambda2=0.3, alpha=0.15),
)
t0 = time.time()
best, hist = training.train(params, splits, tcfg, token_classes=scfg.token_classes())
dt = time.time() - t0
for r in hist:
    print(f"ep{r.epoch}: ce={r.train_ce:.3f} om={r.train_omega:.3f} "
          f"devacc={r.dev_acc:.3f} S={r.dev_sparsity:.3f} annF1={r.ann_f1:.3f}")
print(f"5 epochs: {dt:.1f}s -> {dt/5:.2f}s/epoch")
