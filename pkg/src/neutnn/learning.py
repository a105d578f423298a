"""Integer STDP and the online training loop."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .datasets import Dataset
from .engine import StdpParams, Trainer, compile_model
from .network import Learning, ModelSpec, WeightMatrix, count_synapses, init_weights
from .temporal import ABSENT, accuracy, rand_index

__all__ = [
    "StdpParams",
    "stdp_update",
    "train_cycle",
    "train_dataset",
    "EpochMetric",
    "TrainResult",
    "metrics_csv",
]


def stdp_update(w: int, t_in: int, t_out: int, p: StdpParams = StdpParams(), w_max: int = 7) -> int:
    """One synapse's end-of-cycle update."""
    if not 0 <= w <= w_max:
        raise ValueError(f"weight {w} outside [0, {w_max}]")
    fin_in, fin_out = t_in < ABSENT, t_out < ABSENT
    if fin_in and fin_out:
        w = w + p.capture if t_in <= t_out else w - p.backoff
    elif fin_in:
        w += p.search
    elif fin_out:
        w -= p.backoff
    return min(max(w, 0), w_max)


def _check_params(params: StdpParams, w_max: int):
    for name in ("capture", "backoff", "search", "distal_capture", "distal_backoff", "distal_search"):
        v = getattr(params, name)
        if v is not None and v > w_max:
            raise ValueError(f"{name} step {v} exceeds w_max {w_max}")


def train_cycle(model: ModelSpec, weights: WeightMatrix, volley, label: int | None = None,
                params: StdpParams = StdpParams()):
    """One gamma cycle of inference plus learning.  Returns (new weights, per-layer outputs)."""
    _check_params(params, model.gamma.w_max)
    trainer = Trainer(model, weights, params)
    outputs = trainer.cycle(volley, label)
    return trainer.weights(), outputs


@dataclass(frozen=True)
class EpochMetric:
    epoch: int
    metric: str
    value: float
    synapse_count: int


@dataclass
class TrainResult:
    weights: WeightMatrix
    metrics: list[EpochMetric] = field(default_factory=list)


def _supervised(model: ModelSpec) -> bool:
    return any(layer.learning is Learning.SUPERVISED for layer in model.layers)


def evaluate(model: ModelSpec, weights: WeightMatrix, dataset: Dataset) -> tuple[str, float]:
    """``("accuracy", a)`` for models with a CV layer, else ``("rand_index", r)``."""
    if dataset.labels is None:
        raise ValueError("evaluation needs labels")
    pred = compile_model(model).predict(weights, dataset.volleys)
    if _supervised(model):
        return "accuracy", accuracy(pred, dataset.labels)
    return "rand_index", rand_index(pred, dataset.labels)


def train_dataset(model: ModelSpec, dataset: Dataset, epochs: int, seed: int = 0,
                  params: StdpParams = StdpParams(), weights: WeightMatrix | None = None,
                  eval_dataset: Dataset | None = None, progress=None) -> TrainResult:
    """Online training, one cycle per sample, shuffled each epoch.

    ``seed`` drives weight initialization (unless ``weights`` is given) and the
    per-epoch sample order.  A metric row is recorded after every epoch when
    labels are available (``eval_dataset`` if given, else the training set).
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    if dataset.width != model.input_width:
        raise ValueError(f"dataset width {dataset.width} != model input width {model.input_width}")
    if epochs < 0:
        raise ValueError(f"epochs must be >= 0, got {epochs}")
    supervised = _supervised(model)
    if supervised and dataset.labels is None:
        raise ValueError("supervised training needs a label per sample")
    _check_params(params, model.gamma.w_max)
    rng = np.random.default_rng(seed)
    if weights is None:
        weights = init_weights(model, int(rng.integers(0, 2**63 - 1)))
    if epochs == 0:
        return TrainResult(weights.copy())

    scored = eval_dataset if eval_dataset is not None else dataset
    trainer = Trainer(model, weights, params)
    result = TrainResult(weights)
    for epoch in range(1, epochs + 1):
        for i in rng.permutation(len(dataset)):
            label = int(dataset.labels[i]) if supervised else None
            trainer.cycle(dataset.volleys[i], label)
        result.weights = trainer.weights()
        if scored.labels is not None:
            name, value = evaluate(model, result.weights, scored)
            count = count_synapses(model, result.weights.mode or "keep_zero", result.weights)
            result.metrics.append(EpochMetric(epoch, name, float(value), count))
            if progress is not None:
                progress(result.metrics[-1])
    return result


def metrics_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epoch", "metric", "value", "synapse_count"])
    for r in rows:
        w.writerow([r.epoch, r.metric, f"{r.value:.6f}", r.synapse_count])
    return buf.getvalue()
