"""Scratch: criterion-6 with gentle regularizer; instrument the skew channel."""
import sys
import time

import numpy as np

from rationalift import data, evaluation, model as mdl, objective as obj, training

K = int(sys.argv[1]); n = int(sys.argv[2]); lr = float(sys.argv[3])
l1 = float(sys.argv[4]); l2 = float(sys.argv[5]); seed = int(sys.argv[6])

scfg = data.SynthConfig(vocab_size=100, doc_length=20, span_length=3,
                        marker_correlation=1.0, seed=0,
                        train_size=n, dev_size=300, annotation_size=200,
                        informative_per_class=K, marker_count=1)
splits = data.synth_generate(scfg)
vocab = data.build_vocab(splits.train)
classes = scfg.token_classes()
tag = f"K={K} n={n} lr={lr} l1={l1} l2={l2} seed={seed}"

dev_batch = data.make_batches(splits.dev, vocab, 300)[0]

def first_token_stats(params):
    emb = params.embedding.value[dev_batch.token_ids]
    states = mdl.encode(params.gen_layers, emb, dev_batch.pad_mask)
    probs = mdl.generator_probs(params, states, dev_batch.pad_mask)
    p0 = probs[:, 0]
    acc0 = float(np.mean((p0 > 0.5) == dev_batch.labels))
    return acc0, float(p0.mean())

for name, share in (("RNP", 0), ("FR", 1)):
    mcfg = mdl.ModelConfig(embedding_dim=50, hidden_dim=64, num_layers=1, share_depth=share)
    params = mdl.build_model(mcfg, vocab, seed=seed)
    skew = training.SkewConfig(mode="skewed_generator", k=0.9, batch_size=100, lr=2e-3,
                               epoch_cap=30, seed=seed)
    params, pre_acc = training.pretrain_skewed_generator(params, splits, skew)
    tcfg = training.TrainConfig(
        lr_gen=lr, lr_pred=lr, batch_size=64, epochs=30, seed=seed,
        objective=obj.ObjectiveConfig(lambda1=l1, lambda2=l2, alpha=0.15),
    )
    t0 = time.time()
    # manual epoch loop for instrumentation
    hist = []
    best = None
    optimizer = training.make_optimizer(params, tcfg)
    shuffle_ss, noise_ss = np.random.SeedSequence(tcfg.seed).spawn(2)
    shuffle_rng = np.random.default_rng(shuffle_ss)
    noise_rng = np.random.default_rng(noise_ss)
    rows = []
    for ep in range(tcfg.epochs):
        for batch in data.make_batches(splits.train, vocab, tcfg.batch_size,
                                       seed=int(shuffle_rng.integers(2**31)), shuffle=True):
            optimizer.zero_grad()
            loss = mdl.loss_and_grads(params, batch, tcfg.objective, mode="train", noise=noise_rng)
            optimizer.step()
        dev = evaluation.evaluate_model(params, splits.dev)
        ann = evaluation.evaluate_model(params, splits.annotation)
        acc0, p0m = first_token_stats(params)
        class_rows = [[classes.get(t, "filler") for t in toks] for toks in dev.token_rows]
        mrate = evaluation.marker_inclusion_rate(dev.masks, class_rows)
        rows.append((ep + 1, dev.metrics.acc, dev.metrics.s, ann.metrics.f1, acc0, p0m, mrate))
    print(f"{tag} {name}: pre_acc={pre_acc:.2f} ({time.time()-t0:.0f}s)")
    print("   ep  acc    S     F1   acc0  p0    mrate")
    for r in rows:
        print("   %2d  %.2f  %.3f  %.2f  %.2f  %.2f  %.2f" % r, flush=True)
