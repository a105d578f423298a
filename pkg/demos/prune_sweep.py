"""
How many synapses does a trained model need?
============================================

Train the clustering model, look at its weight histogram, then sweep the
pruning threshold and watch surviving synapses against the Rand index.
"""

from neutnn.datasets import encode_ucr, prototype_series
from neutnn.learning import train_dataset
from neutnn.presets import DESK_STDP, clustering_model
from neutnn.pruning import PruneConfig, prune, prune_sweep, weight_histogram

labels, series = prototype_series(seed=0)
ds = encode_ucr(series, labels)
model = clustering_model()
w = train_dataset(model, ds, 20, seed=0, params=DESK_STDP).weights

print("weight histogram:", weight_histogram(model, w)["top"].tolist())
for name, h in weight_histogram(model, w, "neuron").items():
    print(f"  {name}: {h.tolist()}")

print("\ntau  surviving  rand index")
for row in prune_sweep(model, w, range(0, 9), ds):
    print(f"{row.threshold:3d}  {row.surviving:9d}  {row.value:.3f}")

binary, report = prune(w, PruneConfig(threshold=4, binarize=True), model)
print()
print(report.to_text(), end="")
