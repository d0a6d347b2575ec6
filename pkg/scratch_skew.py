"""Scratch: skewed-generator degeneration contrast (criterion 6 calibration)."""
import sys
import time

import numpy as np

from rationalift import data, model as mdl, objective as obj, training

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0

scfg = data.SynthConfig(vocab_size=100, doc_length=20, span_length=3,
                        marker_correlation=1.0, seed=0,
                        train_size=1000, dev_size=300, annotation_size=200)
splits = data.synth_generate(scfg)
vocab = data.build_vocab(splits.train)
classes = scfg.token_classes()

for name, share in (("RNP", 0), ("FR", 1)):
    mcfg = mdl.ModelConfig(embedding_dim=50, hidden_dim=64, num_layers=1, share_depth=share)
    params = mdl.build_model(mcfg, vocab, seed=seed)
    skew = training.SkewConfig(mode="skewed_generator", k=0.9, batch_size=100, lr=2e-3,
                               epoch_cap=20, seed=seed)
    t0 = time.time()
    params, pre_acc = training.pretrain_skewed_generator(params, splits, skew)
    print(f"{name} seed={seed}: pre_acc={pre_acc:.3f} ({time.time()-t0:.0f}s)")
    # how skewed is the generator now? check p(first token) vs label on dev
    batch = data.make_batches(splits.dev, vocab, 300)[0]
    emb = params.embedding.value[batch.token_ids]
    states = mdl.encode(params.gen_layers, emb, batch.pad_mask)
    probs = mdl.generator_probs(params, states, batch.pad_mask)
    p0 = probs[:, 0]
    print(f"   dev first-token acc={np.mean((p0 > .5) == batch.labels):.3f} "
          f"mean p elsewhere={probs[:, 1:].mean():.3f}")
    tcfg = training.TrainConfig(
        lr_gen=2e-3, lr_pred=2e-3, batch_size=64, epochs=30, seed=seed,
        objective=obj.ObjectiveConfig(lambda1=1.0, lambda2=0.05, alpha=0.15),
    )
    t0 = time.time()
    best, hist = training.train(params, splits, tcfg, token_classes=classes)
    sel = training.select_model(hist, 0.15, 0.05)
    r = hist[sel]
    traj = " ".join(f"{h.ann_f1:.2f}" for h in hist)
    print(f"   F1 traj: {traj}")
    print(f"   selected ep{r.epoch}: F1={r.ann_f1:.3f} devacc={r.dev_acc:.3f} "
          f"S={r.dev_sparsity:.3f} marker_rate={r.marker_rate:.2f} "
          f"comp={ {k: round(v, 2) for k, v in r.composition.items()} } ({time.time()-t0:.0f}s)")
