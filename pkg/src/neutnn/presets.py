"""Ready-made model configurations used by the demos, the CLI and the tests."""

from __future__ import annotations

import math

from .engine import StdpParams
from .network import CVGroupSpec, LayerSpec, MinicolumnSpec, ModelSpec, add_layer
from .neuron import DendriteSpec, NeuronSpec, ResponseKind, SegmentKind, SegmentSpec
from .temporal import GammaCycle

__all__ = ["clustering_model", "mnist_model", "mnist_full_model", "DESK_STDP", "PRESETS"]

# No search step: a losing segment is left alone instead of being pushed up
# on every active input, which otherwise lets one neuron win everything.
DESK_STDP = StdpParams(capture=1, backoff=1, search=0)


def clustering_model(length: int = 32, neurons: int = 3, dual_rail: bool = True,
                     threshold_fraction: float = 0.15, gamma: GammaCycle = GammaCycle()) -> ModelSpec:
    """One minicolumn, one single-segment neuron per cluster, over a whole series."""
    width = length * (2 if dual_rail else 1)
    theta = math.ceil(threshold_fraction * width * gamma.w_max)
    neuron = NeuronSpec((DendriteSpec((SegmentSpec(SegmentKind.PROXIMAL, width, theta, ResponseKind.RNL),)),))
    layer = LayerSpec((width,), minicolumns=(MinicolumnSpec.uniform(neuron, neurons),), id="cluster")
    return add_layer(ModelSpec(gamma), layer)


def mnist_model(kernel: int = 5, stride: int = 2, classes: int = 10, segments: int = 3,
                threshold_fraction: float = 0.15, gamma: GammaCycle = GammaCycle()) -> ModelSpec:
    """Desk-scale classifier: one CV group per receptive field, position votes summed."""
    n = kernel * kernel
    theta = math.ceil(threshold_fraction * n * gamma.w_max)
    seg = SegmentSpec(SegmentKind.PROXIMAL, n, theta, ResponseKind.SNL)
    unit = NeuronSpec((DendriteSpec((seg,) * segments),))
    layer = LayerSpec((28, 28), cv_group=CVGroupSpec.uniform(unit, classes),
                      kernel=((kernel, stride), (kernel, stride)), id="cv")
    return add_layer(ModelSpec(gamma), layer)


def mnist_full_model(gamma: GammaCycle = GammaCycle()) -> ModelSpec:
    """Full-size layout: 5x5 dual-rail fields at stride 1 (576 groups of 10 units),
    each unit nine 48-synapse segments over staggered windows of its field."""
    segs = tuple(SegmentSpec(SegmentKind.PROXIMAL, 48, offset=i % 3) for i in range(9))
    unit = NeuronSpec((DendriteSpec(segs),))
    layer = LayerSpec((28, 28), cv_group=CVGroupSpec.uniform(unit, 10), rails=2,
                      kernel=((5, 1), (5, 1)), id="cv")
    return add_layer(ModelSpec(gamma), layer)


PRESETS = {
    "clustering": clustering_model,
    "mnist": mnist_model,
    "mnist_full": mnist_full_model,
}
