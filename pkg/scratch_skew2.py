"""Scratch: criterion-6 variant sweep."""
import itertools
import sys
import time

import numpy as np

from rationalift import data, model as mdl, objective as obj, training

K = int(sys.argv[1])
train_size = int(sys.argv[2])
lr = float(sys.argv[3])
hidden = int(sys.argv[4])
seed = int(sys.argv[5]) if len(sys.argv) > 5 else 0

scfg = data.SynthConfig(vocab_size=100, doc_length=20, span_length=3,
                        marker_correlation=1.0, seed=0,
                        train_size=train_size, dev_size=300, annotation_size=200,
                        informative_per_class=K, marker_count=1)
splits = data.synth_generate(scfg)
vocab = data.build_vocab(splits.train)
classes = scfg.token_classes()
tag = f"K={K} n={train_size} lr={lr} h={hidden} seed={seed}"

for name, share in (("RNP", 0), ("FR", 1)):
    mcfg = mdl.ModelConfig(embedding_dim=50, hidden_dim=hidden, num_layers=1, share_depth=share)
    params = mdl.build_model(mcfg, vocab, seed=seed)
    skew = training.SkewConfig(mode="skewed_generator", k=0.9, batch_size=100, lr=2e-3,
                               epoch_cap=30, seed=seed)
    params, pre_acc = training.pretrain_skewed_generator(params, splits, skew)
    tcfg = training.TrainConfig(
        lr_gen=lr, lr_pred=lr, batch_size=64, epochs=30, seed=seed,
        objective=obj.ObjectiveConfig(lambda1=1.0, lambda2=0.05, alpha=0.15),
    )
    t0 = time.time()
    best, hist = training.train(params, splits, tcfg, token_classes=classes)
    sel = training.select_model(hist, 0.15, 0.05)
    r = hist[sel]
    f1s = " ".join(f"{h.ann_f1:.2f}" for h in hist)
    accs = " ".join(f"{h.dev_acc:.2f}" for h in hist)
    print(f"{tag} {name}: pre_acc={pre_acc:.2f}")
    print(f"   F1  {f1s}")
    print(f"   acc {accs}")
    print(f"   sel ep{r.epoch}: F1={r.ann_f1:.3f} acc={r.dev_acc:.3f} S={r.dev_sparsity:.3f} "
          f"mrate={r.marker_rate:.2f} ({time.time()-t0:.0f}s)", flush=True)
