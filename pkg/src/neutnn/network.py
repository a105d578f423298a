"""Minicolumns, CV groups, layers and the validated multi-layer model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .neuron import NeuronSpec, neuron_forward
from .temporal import ABSENT, GammaCycle

__all__ = [
    "LayerKind",
    "Learning",
    "PruneMode",
    "MinicolumnSpec",
    "CVGroupSpec",
    "LayerSpec",
    "ModelSpec",
    "WidthMismatchError",
    "WeightMatrix",
    "add_layer",
    "output_width",
    "init_weights",
    "k_wta",
    "minicolumn_forward",
    "cv_group_classify",
    "vote",
    "model_forward",
    "predict",
    "count_synapses",
]


class LayerKind(str, Enum):
    MINICOLUMN = "minicolumn"
    CV = "cv"


class Learning(str, Enum):
    UNSUPERVISED = "unsupervised"
    SUPERVISED = "supervised"


class PruneMode(str, Enum):
    REMOVE_ZERO = "remove_zero"  # pruned synapses are not instantiated; learning disabled
    KEEP_ZERO = "keep_zero"      # pruned synapses stay, start at zero, may regrow


@dataclass(frozen=True)
class MinicolumnSpec:
    neurons: tuple[NeuronSpec, ...]
    wta_k: int = 1

    def __post_init__(self):
        object.__setattr__(self, "neurons", tuple(self.neurons))
        if not self.neurons:
            raise ValueError("a minicolumn needs at least one neuron")
        if not 1 <= self.wta_k <= len(self.neurons):
            raise ValueError(f"wta_k={self.wta_k} must lie in [1, {len(self.neurons)}]")

    @classmethod
    def uniform(cls, neuron: NeuronSpec, count: int, wta_k: int = 1) -> "MinicolumnSpec":
        return cls((neuron,) * count, wta_k)

    @property
    def synapse_count(self) -> int:
        return sum(n.synapse_count for n in self.neurons)


@dataclass(frozen=True)
class CVGroupSpec:
    """One clustering-voter unit per class; the earliest unit names the class."""

    units: tuple[NeuronSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(self.units))
        if not self.units:
            raise ValueError("a CV group needs at least one unit")
        for i, u in enumerate(self.units):
            if len(u.dendrites) != 1:
                raise ValueError(f"CV unit {i} must have exactly one dendrite, has {len(u.dendrites)}")

    @classmethod
    def uniform(cls, unit: NeuronSpec, class_count: int) -> "CVGroupSpec":
        return cls((unit,) * class_count)

    @property
    def class_count(self) -> int:
        return len(self.units)

    @property
    def synapse_count(self) -> int:
        return sum(u.synapse_count for u in self.units)


@dataclass(frozen=True)
class LayerSpec:
    """A layer applies its minicolumns (or CV group) at every kernel position.

    Input volleys are laid out row-major over ``input_shape`` with ``rails``
    lines per site.  Each position sees a patch of ``prod(kernel sizes) *
    rails`` lines, same layout.  Positions do not share weights.
    """

    input_shape: tuple[int, ...]
    minicolumns: tuple[MinicolumnSpec, ...] = ()
    cv_group: CVGroupSpec | None = None
    rails: int = 1
    kernel: tuple[tuple[int, int], ...] | None = None
    learning: Learning | None = None
    id: str | None = None

    def __post_init__(self):
        shape = (self.input_shape,) if isinstance(self.input_shape, int) else tuple(self.input_shape)
        object.__setattr__(self, "input_shape", shape)
        object.__setattr__(self, "minicolumns", tuple(self.minicolumns))
        if self.kernel is not None:
            object.__setattr__(self, "kernel", tuple(tuple(k) for k in self.kernel))
        if bool(self.minicolumns) == (self.cv_group is not None):
            raise ValueError("a layer holds either minicolumns or one CV group")
        if self.learning is None:
            default = Learning.SUPERVISED if self.cv_group is not None else Learning.UNSUPERVISED
            object.__setattr__(self, "learning", default)
        object.__setattr__(self, "learning", Learning(self.learning))
        if self.kind is LayerKind.CV and self.learning is not Learning.SUPERVISED:
            raise ValueError("CV groups learn from labels; use learning='supervised'")
        if self.kind is LayerKind.MINICOLUMN and self.learning is not Learning.UNSUPERVISED:
            raise ValueError("minicolumn layers learn unsupervised; use a CV group for labels")
        if not shape or any(d < 1 for d in shape) or self.rails < 1:
            raise ValueError(f"bad input geometry {shape} x {self.rails} rails")
        if self.kernel is not None:
            if len(self.kernel) != len(shape):
                raise ValueError(f"kernel has {len(self.kernel)} dims, input has {len(shape)}")
            for (k, s), w in zip(self.kernel, shape):
                if k < 1 or s < 1:
                    raise ValueError(f"kernel size/stride must be positive, got ({k}, {s})")
                if k > w:
                    raise ValueError(f"kernel size {k} larger than input extent {w}")
        span = max(n.input_span for n in self.neurons)
        if span > self.patch_width:
            raise ValueError(f"segments read up to line {span}, but each position sees {self.patch_width}")

    @property
    def kind(self) -> LayerKind:
        return LayerKind.CV if self.cv_group is not None else LayerKind.MINICOLUMN

    @property
    def neurons(self) -> tuple[NeuronSpec, ...]:
        if self.cv_group is not None:
            return self.cv_group.units
        return tuple(n for mc in self.minicolumns for n in mc.neurons)

    @property
    def input_width(self) -> int:
        return math.prod(self.input_shape) * self.rails

    @property
    def positions_shape(self) -> tuple[int, ...]:
        if self.kernel is None:
            return (1,) * len(self.input_shape)
        return tuple((w - k) // s + 1 for (k, s), w in zip(self.kernel, self.input_shape))

    @property
    def positions(self) -> int:
        return math.prod(self.positions_shape)

    @property
    def patch_shape(self) -> tuple[int, ...]:
        if self.kernel is None:
            return self.input_shape
        return tuple(k for k, _ in self.kernel)

    @property
    def patch_width(self) -> int:
        return math.prod(self.patch_shape) * self.rails

    @property
    def outputs_per_position(self) -> int:
        return len(self.neurons)

    @property
    def output_width(self) -> int:
        return self.positions * self.outputs_per_position

    @property
    def synapses_per_position(self) -> int:
        return sum(n.synapse_count for n in self.neurons)

    def patch_index(self) -> np.ndarray:
        """Input line feeding each (position, patch line), shape (positions, patch_width)."""
        dims = len(self.input_shape)
        strides = (1,) * dims if self.kernel is None else tuple(s for _, s in self.kernel)
        starts = np.stack(np.meshgrid(*[np.arange(p) * st for p, st in zip(self.positions_shape, strides)],
                                      indexing="ij"), axis=-1).reshape(-1, dims)
        local = np.stack(np.meshgrid(*[np.arange(k) for k in self.patch_shape], indexing="ij"),
                         axis=-1).reshape(-1, dims)
        coords = starts[:, None, :] + local[None, :, :]
        site = np.ravel_multi_index(tuple(np.moveaxis(coords, -1, 0)), self.input_shape)
        lines = site[:, :, None] * self.rails + np.arange(self.rails)
        return lines.reshape(self.positions, -1)

    def resolved(self, gamma: GammaCycle, layer_id: str) -> "LayerSpec":
        w_max = gamma.w_max

        def fix(n: NeuronSpec) -> NeuronSpec:
            dends = tuple(replace(d, segments=tuple(s.resolve(w_max) for s in d.segments))
                          for d in n.dendrites)
            return replace(n, dendrites=dends)

        if self.cv_group is not None:
            group = CVGroupSpec(tuple(fix(u) for u in self.cv_group.units))
            return replace(self, cv_group=group, id=layer_id)
        mcs = tuple(replace(mc, neurons=tuple(fix(n) for n in mc.neurons)) for mc in self.minicolumns)
        return replace(self, minicolumns=mcs, id=layer_id)


def output_width(layer: LayerSpec) -> int:
    return layer.output_width


class WidthMismatchError(ValueError):
    """Raised by :func:`add_layer`; carries concrete fixes in ``suggestions``."""

    def __init__(self, expected: int, got: int, suggestions: list[str]):
        self.expected = expected
        self.got = got
        self.suggestions = suggestions
        lines = [f"layer input width {got} does not match previous layer output width {expected}"]
        lines += [f"  suggestion: {s}" for s in suggestions]
        super().__init__("\n".join(lines))


@dataclass(frozen=True)
class ModelSpec:
    gamma: GammaCycle = field(default_factory=GammaCycle)
    layers: tuple[LayerSpec, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))

    def add(self, layer: LayerSpec) -> "ModelSpec":
        return add_layer(self, layer)

    @property
    def input_width(self) -> int:
        return self.layers[0].input_width

    @property
    def output_width(self) -> int:
        return self.layers[-1].output_width

    def layer_offsets(self) -> list[int]:
        """Start of each layer's block in the flat weight order, plus the total."""
        out = [0]
        for layer in self.layers:
            out.append(out[-1] + layer.positions * layer.synapses_per_position)
        return out

    @property
    def synapse_sites(self) -> int:
        return self.layer_offsets()[-1]


def _suggest(prev: LayerSpec, layer: LayerSpec) -> list[str]:
    need, got = prev.output_width, layer.input_width
    out = []
    if any(p > 1 for p in prev.positions_shape):
        out.append(f"set input_shape={prev.positions_shape} and rails={prev.outputs_per_position} "
                   f"on the new layer (keeps the previous layer's position grid)")
    out.append(f"set input_shape=({need},) and rails=1 on the new layer")
    if got % prev.positions == 0:
        per = got // prev.positions
        what = "CV classes" if prev.kind is LayerKind.CV else "neurons across its minicolumns"
        out.append(f"give the previous layer {per} {what} per position "
                   f"({prev.positions} positions x {per} = {got})")
    if prev.kernel is not None and got % prev.outputs_per_position == 0:
        target = got // prev.outputs_per_position
        for k in range(1, min(prev.input_shape) + 1):
            for s in range(1, k + 1):
                pos = math.prod((w - k) // s + 1 for w in prev.input_shape)
                if pos == target:
                    out.append(f"use kernel size {k}, stride {s} on the previous layer "
                               f"({target} positions x {prev.outputs_per_position} = {got})")
                    return out
    return out


def add_layer(model: ModelSpec, layer: LayerSpec) -> ModelSpec:
    """Append a layer after checking it consumes exactly the last layer's output."""
    index = len(model.layers)
    layer_id = layer.id if layer.id is not None else f"layer{index}"
    if any(l.id == layer_id for l in model.layers):
        raise ValueError(f"duplicate layer id {layer_id!r}")
    if model.layers:
        prev = model.layers[-1]
        if prev.output_width != layer.input_width:
            raise WidthMismatchError(prev.output_width, layer.input_width, _suggest(prev, layer))
    return replace(model, layers=model.layers + (layer.resolved(model.gamma, layer_id),))


@dataclass
class WeightMatrix:
    """Flat per-synapse weights in canonical (layer, position, neuron, dendrite,
    segment, synapse) order, with a pruned flag per synapse."""

    values: np.ndarray
    w_max: int
    pruned: np.ndarray | None = None
    mode: PruneMode | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int16)
        if self.pruned is None:
            self.pruned = np.zeros(self.values.shape, dtype=bool)
        self.pruned = np.asarray(self.pruned, dtype=bool)
        if self.mode is not None:
            self.mode = PruneMode(self.mode)
        if self.values.ndim != 1 or self.pruned.shape != self.values.shape:
            raise ValueError("weights and pruned flags must be matching 1-D arrays")
        if self.values.size and (self.values.min() < 0 or self.values.max() > self.w_max):
            raise ValueError(f"weights must lie in [0, {self.w_max}]")
        if np.any(self.values[self.pruned] != 0):
            raise ValueError("pruned synapses must have weight 0")

    def __len__(self):
        return len(self.values)

    def copy(self) -> "WeightMatrix":
        return WeightMatrix(self.values.copy(), self.w_max, self.pruned.copy(), self.mode)

    @property
    def pruned_count(self) -> int:
        return int(self.pruned.sum())

    def __eq__(self, other):
        if not isinstance(other, WeightMatrix):
            return NotImplemented
        return (self.w_max == other.w_max and self.mode == other.mode
                and np.array_equal(self.values, other.values)
                and np.array_equal(self.pruned, other.pruned))

    def check(self, model: ModelSpec) -> None:
        if len(self) != model.synapse_sites:
            raise ValueError(f"model has {model.synapse_sites} synapse sites, weights have {len(self)}")
        if self.w_max != model.gamma.w_max:
            raise ValueError(f"weights use w_max={self.w_max}, model uses {model.gamma.w_max}")


def init_weights(model: ModelSpec, seed: int = 0) -> WeightMatrix:
    rng = np.random.default_rng(seed)
    w_max = model.gamma.w_max
    return WeightMatrix(rng.integers(0, w_max + 1, size=model.synapse_sites), w_max)


def k_wta(times: Sequence[int], k: int) -> np.ndarray:
    """Keep the k earliest finite times (ties to the lower index); suppress the rest."""
    t = np.asarray(times, dtype=np.int64)
    order = np.argsort(t, kind="stable")[:k]
    out = np.full_like(t, ABSENT)
    keep = order[t[order] < ABSENT]
    out[keep] = t[keep]
    return out


def _split_neuron_weights(neurons: Sequence[NeuronSpec], weights: Sequence[int]):
    weights = np.asarray(weights)
    total = sum(n.synapse_count for n in neurons)
    if len(weights) != total:
        raise ValueError(f"expected {total} weights, got {len(weights)}")
    pos = 0
    for n in neurons:
        yield weights[pos:pos + n.synapse_count]
        pos += n.synapse_count


def minicolumn_forward(mc: MinicolumnSpec, weights: Sequence[int], volley: Sequence[int],
                       t_max: int = 8) -> np.ndarray:
    """Fire every neuron, then apply k-WTA lateral inhibition."""
    times = [neuron_forward(n, w, volley, t_max)[0]
             for n, w in zip(mc.neurons, _split_neuron_weights(mc.neurons, weights))]
    return k_wta(times, mc.wta_k)


def vote(times: Sequence[int]) -> int | None:
    """Index of the earliest finite time, lowest index on ties, None if all absent."""
    t = np.asarray(times)
    i = int(np.argmin(t))
    return None if t[i] >= ABSENT else i


def cv_group_classify(group: CVGroupSpec, weights: Sequence[int], volley: Sequence[int],
                      enables: Sequence[int] | None = None, t_max: int = 8) -> int | None:
    if enables is None:
        enables = [1] * group.class_count
    if len(enables) != group.class_count:
        raise ValueError(f"need {group.class_count} enables, got {len(enables)}")
    times = [neuron_forward(u, w, volley, t_max)[0] if e else ABSENT
             for u, w, e in zip(group.units, _split_neuron_weights(group.units, weights), enables)]
    return vote(times)


def model_forward(model: ModelSpec, weights: WeightMatrix, volley) -> list[np.ndarray]:
    """Thread a volley (or a batch of volleys) through every layer in order."""
    from .engine import compile_model

    return compile_model(model).forward(weights, volley)


def predict(model: ModelSpec, weights: WeightMatrix, volleys, batch: int = 16) -> np.ndarray:
    """Class (CV output layer) or cluster (minicolumn output layer) per volley; -1 for none."""
    from .engine import compile_model

    return compile_model(model).predict(weights, volleys, batch=batch)


def count_synapses(model: ModelSpec, mode: PruneMode = PruneMode.KEEP_ZERO,
                   weights: WeightMatrix | None = None) -> int:
    """Instantiated synapse sites; RemoveZero excludes pruned synapses."""
    sites = sum(layer.positions * layer.synapses_per_position for layer in model.layers)
    if PruneMode(mode) is PruneMode.KEEP_ZERO:
        return sites
    if weights is None:
        raise ValueError("RemoveZero counting needs the pruned weights")
    weights.check(model)
    return sites - weights.pruned_count

