"""
Unsupervised clustering of short time series
============================================

Three noisy bump prototypes, dual-rail latency coding, one minicolumn of
three neurons with 1-WTA.  Each neuron drifts towards one prototype under
STDP; the Rand index against the true labels is tracked per epoch.
"""

from neutnn.datasets import encode_ucr, prototype_series
from neutnn.learning import train_dataset
from neutnn.network import predict
from neutnn.presets import DESK_STDP, clustering_model

labels, series = prototype_series(seed=0)
ds = encode_ucr(series, labels)
model = clustering_model()

res = train_dataset(model, ds, 20, seed=0, params=DESK_STDP,
                    progress=lambda m: print(f"epoch {m.epoch:2d}  rand index {m.value:.3f}"))

pred = predict(model, res.weights, ds.volleys)
for k in range(3):
    print(f"prototype {k} -> neurons", sorted(set(pred[labels == k].tolist())))
