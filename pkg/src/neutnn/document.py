"""Model documents: a canonical JSON serialization of a model and its weights.

Output is byte-stable: keys are sorted, separators are compact and repeated
neurons and segments are stored once with a repeat count.  Weights are one
flat integer array in (layer, position, neuron, dendrite, segment, synapse)
order; pruned synapses are listed by index.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .network import CVGroupSpec, LayerSpec, MinicolumnSpec, ModelSpec, WeightMatrix, add_layer
from .neuron import DendriteSpec, NeuronSpec, SegmentSpec
from .temporal import GammaCycle

__all__ = ["model_to_dict", "model_from_dict", "dumps_model", "loads_model", "save_model", "load_model"]

FORMAT = "neutnn-model"
VERSION = 1


def _runs(items, encode):
    out = []
    for item in items:
        if out and out[-1][1] == item:
            out[-1][0] += 1
        else:
            out.append([1, item])
    return [{"repeat": n, "item": encode(x)} for n, x in out]


def _unruns(runs, decode):
    items = []
    for r in runs:
        x = decode(r["item"])
        items.extend([x] * int(r["repeat"]))
    return tuple(items)


def _seg(s: SegmentSpec):
    return {"kind": s.kind.value, "synapses": s.synapses, "threshold": s.threshold,
            "response": s.response.value, "offset": s.offset}


def _neuron(n: NeuronSpec):
    return {"alpha": n.alpha,
            "dendrites": _runs(n.dendrites, lambda d: {"segments": _runs(d.segments, _seg)})}


def _neuron_back(d) -> NeuronSpec:
    dends = _unruns(d["dendrites"], lambda x: DendriteSpec(_unruns(x["segments"], lambda s: SegmentSpec(**s))))
    return NeuronSpec(dends, d["alpha"])


def model_to_dict(model: ModelSpec, weights: WeightMatrix | None = None) -> dict:
    layers = []
    for layer in model.layers:
        d = {"id": layer.id, "kind": layer.kind.value, "input_shape": list(layer.input_shape), "rails": layer.rails,
             "kernel": None if layer.kernel is None else [list(k) for k in layer.kernel],
             "learning": layer.learning.value}
        if layer.cv_group is not None:
            d["cv_group"] = {"units": _runs(layer.cv_group.units, _neuron)}
        else:
            d["minicolumns"] = _runs(layer.minicolumns,
                                     lambda mc: {"wta_k": mc.wta_k, "neurons": _runs(mc.neurons, _neuron)})
        layers.append(d)
    doc = {"format": FORMAT, "version": VERSION,
           "gamma": {"t_max": model.gamma.t_max, "weight_bits": model.gamma.weight_bits},
           "layers": layers, "weights": None}
    if weights is not None:
        weights.check(model)
        doc["weights"] = {
            "w_max": weights.w_max,
            "mode": None if weights.mode is None else weights.mode.value,
            "values": weights.values.tolist(),
            "pruned": np.flatnonzero(weights.pruned).tolist(),
        }
    return doc


def model_from_dict(doc: dict) -> tuple[ModelSpec, WeightMatrix | None]:
    if doc.get("format") != FORMAT or doc.get("version") != VERSION:
        raise ValueError(f"not a version-{VERSION} {FORMAT} document")
    g = doc["gamma"]
    model = ModelSpec(GammaCycle(g["t_max"], g["weight_bits"]))
    for d in doc["layers"]:
        common = dict(input_shape=tuple(d["input_shape"]), rails=d["rails"],
                      kernel=None if d["kernel"] is None else tuple(tuple(k) for k in d["kernel"]),
                      learning=d["learning"], id=d["id"])
        if "cv_group" in d:
            layer = LayerSpec(cv_group=CVGroupSpec(_unruns(d["cv_group"]["units"], _neuron_back)), **common)
        else:
            mcs = _unruns(d["minicolumns"],
                          lambda m: MinicolumnSpec(_unruns(m["neurons"], _neuron_back), m["wta_k"]))
            layer = LayerSpec(minicolumns=mcs, **common)
        model = add_layer(model, layer)
    w = doc.get("weights")
    if w is None:
        return model, None
    values = np.asarray(w["values"], dtype=np.int64)
    pruned = np.zeros(len(values), dtype=bool)
    index = np.asarray(w["pruned"], dtype=np.int64)
    if index.size and (index.min() < 0 or index.max() >= len(values)):
        raise ValueError("pruned index outside the weight array")
    pruned[index] = True
    if values.size and (values.min() < 0 or values.max() > w["w_max"]):
        raise ValueError(f"weights must lie in [0, {w['w_max']}]")
    weights = WeightMatrix(values.astype(np.int16), w["w_max"], pruned, w["mode"])
    weights.check(model)
    return model, weights


def dumps_model(model: ModelSpec, weights: WeightMatrix | None = None) -> str:
    return json.dumps(model_to_dict(model, weights), sort_keys=True, separators=(",", ":")) + "\n"


def loads_model(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"model document is not valid JSON: {exc}") from None
    return model_from_dict(doc)


def save_model(path, model: ModelSpec, weights: WeightMatrix | None = None) -> None:
    Path(path).write_text(dumps_model(model, weights))


def load_model(path):
    return loads_model(Path(path).read_text())
