"""
Digit classification with CV groups
===================================

A 5x5 receptive field slides over the image with stride 2; at each of the
144 positions a group of ten clustering-voter units learns, one digit per
unit, from labelled examples.  At test time the positions vote.

Uses the 5,000-image MNIST subset bundled with the tests.
"""

from pathlib import Path

from neutnn.datasets import load_mnist
from neutnn.learning import train_dataset
from neutnn.network import count_synapses
from neutnn.presets import DESK_STDP, mnist_model

data = Path(__file__).resolve().parent.parent / "tests" / "data"
d = load_mnist(data / "mnist-5k-images-idx3-ubyte.gz", data / "mnist-5k-labels-idx1-ubyte.gz")
train, test = d.subset(slice(0, 4000)), d.subset(slice(4000, None))

model = mnist_model()
print("synapses:", count_synapses(model))
res = train_dataset(model, train, 2, seed=0, params=DESK_STDP, eval_dataset=test,
                    progress=lambda m: print(f"epoch {m.epoch}  accuracy {m.value:.3f}"))
