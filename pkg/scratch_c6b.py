"""Scratch: criterion-6 with per-model joint configs (paper: each model uses its
own tuned hyperparameters)."""
import sys
import time

import numpy as np

from rationalift import data, evaluation, model as mdl, objective as obj, training

which = sys.argv[1]  # "RNP" or "FR"
n = int(sys.argv[2]); K = int(sys.argv[3]); mc = int(sys.argv[4])
lr_gen = float(sys.argv[5]); lr_pred = float(sys.argv[6])
l1 = float(sys.argv[7]); l2 = float(sys.argv[8])
epochs = int(sys.argv[9]); delta = float(sys.argv[10])
seeds = [int(s) for s in sys.argv[11].split(",")]
lr_shared = float(sys.argv[12]) if len(sys.argv) > 12 and sys.argv[12] != "none" else None
marker_corr = float(sys.argv[13]) if len(sys.argv) > 13 else 1.0
do_skew = sys.argv[14] != "noskew" if len(sys.argv) > 14 else True
hidden = int(sys.argv[15]) if len(sys.argv) > 15 else 64
tau = float(sys.argv[16]) if len(sys.argv) > 16 else 1.0

scfg = data.SynthConfig(vocab_size=100, doc_length=20, span_length=3,
                        marker_correlation=marker_corr, seed=0,
                        train_size=n, dev_size=300, annotation_size=200,
                        informative_per_class=K, marker_count=mc)
splits = data.synth_generate(scfg)
vocab = data.build_vocab(splits.train)
classes = scfg.token_classes()
share = 0 if which == "RNP" else 1
tag = (f"{which} n={n} K={K} mc={mc} lr={lr_gen}/{lr_pred}/{lr_shared} "
       f"l1={l1} l2={l2} ep={epochs} d={delta} corr={marker_corr} skew={do_skew} h={hidden} tau={tau}")
print(tag, flush=True)

f1s, accs = [], []
t0 = time.time()
for seed in seeds:
    mcfg = mdl.ModelConfig(embedding_dim=50, hidden_dim=hidden, num_layers=1, share_depth=share, temperature=tau)
    params = mdl.build_model(mcfg, vocab, seed=seed)
    skew = training.SkewConfig(mode="skewed_generator", k=0.9, batch_size=100, lr=2e-3,
                               epoch_cap=30, seed=seed)
    pre_acc = 0.0
    if do_skew:
        params, pre_acc = training.pretrain_skewed_generator(params, splits, skew)
    tcfg = training.TrainConfig(
        lr_gen=lr_gen, lr_pred=lr_pred, lr_shared=lr_shared,
        batch_size=64, epochs=epochs, seed=seed, delta_sparsity=delta,
        objective=obj.ObjectiveConfig(lambda1=l1, lambda2=l2, alpha=float(sys.argv[17]) if len(sys.argv) > 17 else 0.15),
    )
    best, hist = training.train(params, splits, tcfg, token_classes=classes)
    run = evaluation.evaluate_model(best, splits.annotation)
    dev = evaluation.evaluate_model(best, splits.dev)
    sel = training.select_model(hist, 0.15, delta)
    last = hist[-1]
    f1s.append(last.ann_f1)
    accs.append(last.dev_acc)
    print(f"  seed{seed}: selF1={run.metrics.f1:.3f} selacc={dev.metrics.acc:.3f} ep{sel+1} "
          f"finalF1={last.ann_f1:.3f} finalacc={last.dev_acc:.3f} "
          f"best={max(h.ann_f1 for h in hist):.3f} pre={pre_acc:.2f}", flush=True)
print(f"==> {tag} medF1={np.median(f1s):.3f} medAcc={np.median(accs):.3f} "
      f"({time.time()-t0:.0f}s)", flush=True)
