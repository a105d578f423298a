"""Weight histograms per structural scope, threshold pruning and binarization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .network import ModelSpec, PruneMode, WeightMatrix

__all__ = [
    "Scope",
    "PruneConfig",
    "PruneReport",
    "SweepRow",
    "scope_index",
    "weight_histogram",
    "prune",
    "prune_sweep",
]


class Scope(str, Enum):
    SEGMENT = "segment"
    DENDRITE = "dendrite"
    NEURON = "neuron"
    LAYER = "layer"
    MODEL = "model"


_DEPTH = {Scope.MODEL: 0, Scope.LAYER: 1, Scope.NEURON: 2, Scope.DENDRITE: 3, Scope.SEGMENT: 4}


def scope_index(model: ModelSpec, scope: Scope | str) -> tuple[np.ndarray, list[str]]:
    """Instance id for every synapse site, plus the instance names.

    Names follow the netlist hierarchy: ``L0``, ``L0.P3.N1``, ``L0.P3.N1.D0``,
    ``L0.P3.N1.D0.S2``; the whole model is ``top``.
    """
    depth = _DEPTH[Scope(scope)]
    if depth == 0:
        return np.zeros(model.synapse_sites, dtype=np.int64), ["top"]
    ids, names = [], []
    for li, layer in enumerate(model.layers):
        if depth == 1:
            ids.append(np.full(layer.positions * layer.synapses_per_position, len(names), dtype=np.int64))
            names.append(f"L{li}")
            continue
        # one entry per synapse of a single position: the local instance it belongs to
        local, local_names = [], []
        for ni, neuron in enumerate(layer.neurons):
            for di, dend in enumerate(neuron.dendrites):
                for si, seg in enumerate(dend.segments):
                    parts = [f"N{ni}", f"D{di}", f"S{si}"][:depth - 1]
                    key = ".".join(parts)
                    if not local_names or local_names[-1] != key:
                        local_names.append(key)
                    local.extend([len(local_names) - 1] * seg.synapses)
        local = np.array(local, dtype=np.int64)
        for p in range(layer.positions):
            ids.append(local + len(names))
            names.extend(f"L{li}.P{p}.{k}" for k in local_names)
    return np.concatenate(ids), names


def weight_histogram(model: ModelSpec, weights: WeightMatrix,
                     scope: Scope | str = Scope.MODEL) -> dict[str, np.ndarray]:
    """``w_max + 1`` integer buckets per scope instance."""
    weights.check(model)
    ids, names = scope_index(model, scope)
    b = weights.w_max + 1
    flat = np.bincount(ids * b + weights.values.astype(np.int64), minlength=len(names) * b)
    table = flat.reshape(len(names), b)
    return {name: table[i] for i, name in enumerate(names)}


@dataclass(frozen=True)
class PruneConfig:
    threshold: int | None = None  # None: half the largest weight, rounded up
    binarize: bool = False
    mode: PruneMode = PruneMode.REMOVE_ZERO
    scope: Scope = Scope.MODEL  # reference maximum for the threshold

    def __post_init__(self):
        object.__setattr__(self, "mode", PruneMode(self.mode))
        object.__setattr__(self, "scope", Scope(self.scope))

    def tau(self, w_max: int) -> int:
        tau = math.ceil(w_max / 2) if self.threshold is None else self.threshold
        if not 0 <= tau <= w_max + 1:
            raise ValueError(f"threshold {tau} outside [0, {w_max + 1}]")
        return tau


@dataclass
class PruneReport:
    original: int
    pruned: int
    surviving: int
    threshold: int
    binarize: bool
    mode: PruneMode
    per_scope: dict[str, float] = field(default_factory=dict)  # instance -> fraction removed

    @property
    def reduction(self) -> float:
        return self.pruned / self.original if self.original else 0.0

    def to_text(self) -> str:
        lines = [
            f"threshold {self.threshold}",
            f"binarize {int(self.binarize)}",
            f"mode {self.mode.value}",
            f"original {self.original}",
            f"pruned {self.pruned}",
            f"surviving {self.surviving}",
            f"reduction {100 * self.reduction:.2f}%",
        ]
        lines += [f"scope {name} reduction {100 * r:.2f}%" for name, r in self.per_scope.items()]
        return "\n".join(lines) + "\n"


def prune(weights: WeightMatrix, cfg: PruneConfig = PruneConfig(), model: ModelSpec | None = None,
          report_scope: Scope | str = Scope.LAYER) -> tuple[WeightMatrix, PruneReport]:
    """Zero and flag every weight below the threshold; optionally binarize survivors.

    With ``cfg.scope`` finer than the model, each instance's threshold is
    scaled by its own largest weight over ``w_max``.  Already-flagged
    synapses stay flagged, which makes the operation idempotent.
    """
    tau = cfg.tau(weights.w_max)
    w = weights.values.astype(np.int64)
    if cfg.scope is Scope.MODEL:
        cut = w < tau
    else:
        if model is None:
            raise ValueError("per-scope thresholds need the model structure")
        weights.check(model)
        ids, names = scope_index(model, cfg.scope)
        peak = np.zeros(len(names), dtype=np.int64)
        np.maximum.at(peak, ids, w)
        cut = w * weights.w_max < tau * peak[ids]
    pruned = weights.pruned | cut
    values = np.where(pruned, 0, w)
    if cfg.binarize:
        values = np.where(pruned, 0, weights.w_max)
    out = WeightMatrix(values.astype(np.int16), weights.w_max, pruned, cfg.mode)
    n = len(out)
    report = PruneReport(n, int(pruned.sum()), n - int(pruned.sum()), tau, cfg.binarize, cfg.mode)
    if model is not None:
        ids, names = scope_index(model, report_scope)
        totals = np.bincount(ids, minlength=len(names))
        gone = np.bincount(ids, weights=pruned, minlength=len(names))
        report.per_scope = {name: float(gone[i] / totals[i]) if totals[i] else 0.0
                            for i, name in enumerate(names)}
    return out, report


@dataclass(frozen=True)
class SweepRow:
    threshold: int
    surviving: int
    metric: str
    value: float


def prune_sweep(model: ModelSpec, weights: WeightMatrix, thresholds, dataset,
                cfg: PruneConfig = PruneConfig()) -> list[SweepRow]:
    """Prune at each threshold (from the same trained weights) and evaluate."""
    from .learning import evaluate

    rows = []
    for tau in sorted(thresholds):
        pruned, report = prune(weights, replace(cfg, threshold=tau), model)
        name, value = evaluate(model, pruned, dataset)
        rows.append(SweepRow(tau, report.surviving, name, float(value)))
    return rows
