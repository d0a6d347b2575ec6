"""Scratch: finite-difference validation of the full backward pass."""
import numpy as np

from rationalift import data, model as mdl, objective as obj

rng = np.random.default_rng(0)

# tiny synthetic batch
cfg = data.SynthConfig(vocab_size=30, doc_length=7, span_length=2, seed=3,
                       train_size=6, dev_size=2, annotation_size=2,
                       informative_per_class=3, markers_per_class=1)
splits = data.synth_generate(cfg)
vocab = data.build_vocab(splits.train)
mcfg = mdl.ModelConfig(embedding_dim=4, hidden_dim=6, num_layers=2, share_depth=1,
                       num_classes=2, temperature=0.8)
params = mdl.build_model(mcfg, vocab, seed=1)
batches = data.make_batches(splits.train, vocab, batch_size=3, max_len=5, seed=0)
batch = batches[0]
ocfg = obj.ObjectiveConfig(lambda1=0.7, lambda2=0.4, alpha=0.3)

NOISE_SEED = 1234


def loss_at(params):
    out = mdl.forward(params, batch, mode="train", noise=np.random.default_rng(NOISE_SEED),
                      mask_forward="soft")
    ce = obj.cross_entropy(out.logits, batch.labels)
    om = obj.sparsity_coherence(out.mask_values, batch.lengths, ocfg)
    return ce + om


params.zero_grads()
loss = mdl.loss_and_grads(params, batch, ocfg, mode="train",
                          noise=np.random.default_rng(NOISE_SEED), mask_forward="soft")
print("loss", loss.total, "ce", loss.ce, "omega", loss.omega)

eps = 1e-6
worst = 0.0
for p in params.all_parameters():
    flat = p.value.reshape(-1)
    gflat = p.grad.reshape(-1)
    idxs = rng.choice(flat.size, size=min(6, flat.size), replace=False)
    for i in idxs:
        orig = flat[i]
        flat[i] = orig + eps
        up = loss_at(params)
        flat[i] = orig - eps
        dn = loss_at(params)
        flat[i] = orig
        fd = (up - dn) / (2 * eps)
        an = gflat[i]
        err = abs(fd - an) / (1e-8 / 2e-6 + max(abs(fd), abs(an)))
        # combined criterion: absolute floor at the FD roundoff scale (~|L|*1e-16/eps)
        score = abs(fd - an) - (1e-9 + 1e-4 * max(abs(fd), abs(an)))
        if score > worst:
            worst = score
            print(f"  {p.name}[{i}]: fd={fd:+.10f} an={an:+.10f} absdiff={abs(fd-an):.2e}")
print("worst margin over tolerance:", worst)
assert worst <= 0, "gradient check failed"
print("GRADCHECK PASSED")
