"""Scratch: criterion-6 config sweep over 5 seeds, reporting medians."""
import sys
import time

import numpy as np

from rationalift import data, evaluation, model as mdl, objective as obj, training

n = int(sys.argv[1]); K = int(sys.argv[2])
lr_gen = float(sys.argv[3]); lr_pred = float(sys.argv[4])
l1 = float(sys.argv[5]); l2 = float(sys.argv[6])
epochs = int(sys.argv[7]); delta = float(sys.argv[8])
seeds = [int(s) for s in sys.argv[9].split(",")]
tau = float(sys.argv[10]) if len(sys.argv) > 10 else 1.0
hidden = int(sys.argv[11]) if len(sys.argv) > 11 else 64
skew_k = float(sys.argv[12]) if len(sys.argv) > 12 else 0.9

scfg = data.SynthConfig(vocab_size=100, doc_length=20, span_length=3,
                        marker_correlation=1.0, seed=0,
                        train_size=n, dev_size=300, annotation_size=200,
                        informative_per_class=K, marker_count=1)
splits = data.synth_generate(scfg)
vocab = data.build_vocab(splits.train)
classes = scfg.token_classes()
tag = f"n={n} K={K} lr={lr_gen}/{lr_pred} l1={l1} l2={l2} ep={epochs} d={delta} tau={tau} h={hidden} k={skew_k}"
print(tag, flush=True)

results = {"RNP": [], "FR": []}
t00 = time.time()
for seed in seeds:
    for name, share in (("RNP", 0), ("FR", 1)):
        mcfg = mdl.ModelConfig(embedding_dim=50, hidden_dim=hidden, num_layers=1, share_depth=share, temperature=tau)
        params = mdl.build_model(mcfg, vocab, seed=seed)
        skew = training.SkewConfig(mode="skewed_generator", k=skew_k, batch_size=100, lr=2e-3,
                                   epoch_cap=30, seed=seed)
        params, pre_acc = training.pretrain_skewed_generator(params, splits, skew)
        tcfg = training.TrainConfig(
            lr_gen=lr_gen, lr_pred=lr_pred, batch_size=64, epochs=epochs, seed=seed,
            delta_sparsity=delta,
            objective=obj.ObjectiveConfig(lambda1=l1, lambda2=l2, alpha=0.15),
        )
        best, hist = training.train(params, splits, tcfg, token_classes=classes)
        run = evaluation.evaluate_model(best, splits.annotation)
        dev = evaluation.evaluate_model(best, splits.dev)
        sel = training.select_model(hist, 0.15, delta)
        best_f1 = max(h.ann_f1 for h in hist)
        results[name].append((run.metrics.f1, dev.metrics.acc))
        print(f"  seed{seed} {name}: selF1={run.metrics.f1:.3f} selacc={dev.metrics.acc:.3f} "
              f"sel_ep={sel+1} bestF1={best_f1:.3f} pre={pre_acc:.2f}", flush=True)
med = {k: (float(np.median([f for f, _ in v])), float(np.median([a for _, a in v])))
       for k, v in results.items()}
ok = med["RNP"][0] <= 0.4 and med["FR"][0] >= 0.75 and med["RNP"][1] >= 0.9 and med["FR"][1] >= 0.9
print(f"==> {tag}\n    RNP medF1={med['RNP'][0]:.3f} medAcc={med['RNP'][1]:.3f} | "
      f"FR medF1={med['FR'][0]:.3f} medAcc={med['FR'][1]:.3f} | "
      f"{'PASS' if ok else 'FAIL'} ({time.time()-t00:.0f}s)", flush=True)
