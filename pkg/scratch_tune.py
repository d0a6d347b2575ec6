"""Scratch: calibrate objective weights for synthetic rationale recovery."""
import sys
import time

import numpy as np

from rationalift import data, model as mdl, objective as obj, training

scfg = data.SynthConfig(vocab_size=100, doc_length=20, span_length=3,
                        marker_correlation=0.0, seed=0,
                        train_size=1000, dev_size=300, annotation_size=200)
splits = data.synth_generate(scfg)
vocab = data.build_vocab(splits.train)
classes = scfg.token_classes()

grid = [
    dict(l1=1.0, l2=0.0),
    dict(l1=1.0, l2=0.02),
    dict(l1=1.0, l2=0.05),
    dict(l1=0.5, l2=0.02),
]

for g in grid:
    mcfg = mdl.ModelConfig(embedding_dim=50, hidden_dim=64, num_layers=1, share_depth=1)
    params = mdl.build_model(mcfg, vocab, seed=0)
    tcfg = training.TrainConfig(
        lr_gen=1e-3, lr_pred=1e-3, batch_size=64, epochs=15, seed=0,
        objective=obj.ObjectiveConfig(lambda1=g["l1"], lambda2=g["l2"], alpha=0.15),
    )
    t0 = time.time()
    best, hist = training.train(params, splits, tcfg, token_classes=classes)
    traj = " ".join(f"{r.ann_f1:.2f}" for r in hist)
    last = hist[-1]
    print(f"l1={g['l1']} l2={g['l2']}: F1 traj {traj}")
    print(f"   final devacc={last.dev_acc:.3f} S={last.dev_sparsity:.3f} "
          f"comp={ {k: round(v,2) for k,v in last.composition.items()} } "
          f"({time.time()-t0:.0f}s)")
