import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

DATA = Path(__file__).parent / "data"
MNIST_IMAGES = DATA / "mnist-5k-images-idx3-ubyte.gz"
MNIST_LABELS = DATA / "mnist-5k-labels-idx1-ubyte.gz"
MNIST_TRAIN = 4000  # first 4000 train, last 1000 test
MNIST_EPOCHS = 2


@pytest.fixture(scope="session")
def mnist():
    from neutnn.datasets import load_mnist

    d = load_mnist(MNIST_IMAGES, MNIST_LABELS)
    return d.subset(slice(0, MNIST_TRAIN)), d.subset(slice(MNIST_TRAIN, None))


@pytest.fixture(scope="session")
def mnist_trained(mnist):
    """Desk-scale CV model trained once per session: (model, result, train, test)."""
    from neutnn.learning import train_dataset
    from neutnn.presets import DESK_STDP, mnist_model

    train, test = mnist
    model = mnist_model()
    result = train_dataset(model, train, MNIST_EPOCHS, seed=0, params=DESK_STDP, eval_dataset=test)
    return model, result, train, test
