"""Temporal neural networks with active-dendrite neurons.

Spike-time simulation, local STDP learning, synaptic pruning, a structural
netlist generator and synapse-count cost forecasting.
"""

from .datasets import Dataset, encode_ucr, load_mnist, load_ucr, prototype_series
from .document import load_model, save_model
from .engine import StdpParams, compile_model
from .learning import evaluate, stdp_update, train_cycle, train_dataset
from .network import (CVGroupSpec, LayerSpec, MinicolumnSpec, ModelSpec, PruneMode, WeightMatrix,
                      WidthMismatchError, add_layer, count_synapses, init_weights, model_forward, predict)
from .neuron import DendriteSpec, NeuronSpec, ResponseKind, SegmentKind, SegmentSpec
from .pruning import PruneConfig, prune, prune_sweep, weight_histogram
from .temporal import ABSENT, GammaCycle, accuracy, encode_image, encode_timeseries, rand_index

__version__ = "0.1.0"

__all__ = [
    "ABSENT", "GammaCycle", "accuracy", "encode_image", "encode_timeseries", "rand_index",
    "DendriteSpec", "NeuronSpec", "ResponseKind", "SegmentKind", "SegmentSpec",
    "CVGroupSpec", "LayerSpec", "MinicolumnSpec", "ModelSpec", "PruneMode", "WeightMatrix",
    "WidthMismatchError", "add_layer", "count_synapses", "init_weights", "model_forward", "predict",
    "StdpParams", "compile_model", "evaluate", "stdp_update", "train_cycle", "train_dataset",
    "PruneConfig", "prune", "prune_sweep", "weight_histogram",
    "Dataset", "encode_ucr", "load_mnist", "load_ucr", "prototype_series",
    "load_model", "save_model",
]
