"""Scratch: lr + seed robustness for criterion-5 style runs."""
import time

import numpy as np

from rationalift import data, model as mdl, objective as obj, training

scfg = data.SynthConfig(vocab_size=100, doc_length=20, span_length=3,
                        marker_correlation=0.0, seed=0,
                        train_size=1000, dev_size=300, annotation_size=200)
splits = data.synth_generate(scfg)
vocab = data.build_vocab(splits.train)
classes = scfg.token_classes()

for lr in (1e-3, 2e-3, 3e-3):
    for seed in (0, 1, 2):
        mcfg = mdl.ModelConfig(embedding_dim=50, hidden_dim=64, num_layers=1, share_depth=1)
        params = mdl.build_model(mcfg, vocab, seed=seed)
        tcfg = training.TrainConfig(
            lr_gen=lr, lr_pred=lr, batch_size=64, epochs=25, seed=seed,
            objective=obj.ObjectiveConfig(lambda1=1.0, lambda2=0.05, alpha=0.15),
        )
        t0 = time.time()
        best, hist = training.train(params, splits, tcfg, token_classes=classes)
        best_f1 = max(r.ann_f1 for r in hist)
        first90 = next((r.epoch for r in hist if r.ann_f1 >= 0.90), None)
        last = hist[-1]
        print(f"lr={lr} seed={seed}: bestF1={best_f1:.3f} first>=0.9 at ep{first90} "
              f"finalacc={last.dev_acc:.3f} S={last.dev_sparsity:.3f} ({time.time()-t0:.0f}s)")
