"""Place-cell design: structural build and a feature-to-location recall task.

The structural model is three minicolumns over one shared input, two of them
identical.  In every dendrite the first segment is proximal and the rest are
distal; proximal segments read the first block of input lines and distal
segments the block after it.

The recall task is a reduced association problem on small toroidal grids.
Each location is one CV unit with a single dendrite: a proximal segment
sees the one-hot feature at that location, a distal segment sees the
one-hot features of its four neighbours.  A unit that recognises both its
feature and its context fires one tick earlier than one that only
recognises the feature, which is what breaks ties between locations that
share a feature.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .datasets import Dataset
from .engine import StdpParams, compile_model
from .learning import train_dataset
from .network import CVGroupSpec, LayerSpec, MinicolumnSpec, ModelSpec, WeightMatrix, add_layer
from .neuron import DendriteSpec, NeuronSpec, ResponseKind, SegmentKind, SegmentSpec
from .temporal import ABSENT, GammaCycle

__all__ = [
    "ColumnShape",
    "PlaceCellConfig",
    "build_place_cells",
    "Environment",
    "load_environment",
    "save_environment",
    "environment_suite",
    "build_orientation_model",
    "observation",
    "train_orientation",
    "run_orientation_task",
    "results_csv",
]


@dataclass(frozen=True)
class ColumnShape:
    neurons: int
    dendrites: int
    segments: int
    synapses: int

    @property
    def synapse_count(self) -> int:
        return self.neurons * self.dendrites * self.segments * self.synapses


@dataclass(frozen=True)
class PlaceCellConfig:
    column_a: ColumnShape = ColumnShape(40, 10, 16, 71)
    column_b: ColumnShape = ColumnShape(30, 10, 16, 81)  # instantiated twice
    grid: tuple[int, int] = (5, 5)
    features: int = 4
    gamma: GammaCycle = GammaCycle()

    @classmethod
    def desk(cls) -> "PlaceCellConfig":
        return cls(ColumnShape(4, 2, 2, 5), ColumnShape(3, 2, 2, 5))


def _column(shape: ColumnShape) -> MinicolumnSpec:
    n = shape.synapses
    segs = [SegmentSpec(SegmentKind.PROXIMAL, n, offset=0)]
    segs += [SegmentSpec(SegmentKind.DISTAL, n, offset=n)] * (shape.segments - 1)
    neuron = NeuronSpec((DendriteSpec(tuple(segs)),) * shape.dendrites)
    return MinicolumnSpec.uniform(neuron, shape.neurons)


def build_place_cells(cfg: PlaceCellConfig = PlaceCellConfig()) -> ModelSpec:
    cols = (_column(cfg.column_a), _column(cfg.column_b), _column(cfg.column_b))
    width = max(mc.neurons[0].input_span for mc in cols)
    layer = LayerSpec((width,), minicolumns=cols, id="placecells")
    return add_layer(ModelSpec(cfg.gamma), layer)


@dataclass(frozen=True)
class Environment:
    id: str
    grid: np.ndarray
    features: int

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=np.int64)
        if g.ndim != 2 or g.size == 0:
            raise ValueError(f"environment {self.id!r}: grid must be a non-empty rectangle")
        if g.min() < 0 or g.max() >= self.features:
            raise ValueError(f"environment {self.id!r}: features must lie in [0, {self.features})")
        object.__setattr__(self, "grid", g)

    @property
    def locations(self) -> int:
        return self.grid.size

    def context(self, loc: int) -> tuple[int, int, int, int]:
        """Features north, east, south, west of a location (wrapping at edges)."""
        h, w = self.grid.shape
        r, c = divmod(loc, w)
        g = self.grid
        return (int(g[(r - 1) % h, c]), int(g[r, (c + 1) % w]), int(g[(r + 1) % h, c]), int(g[r, (c - 1) % w]))


def load_environment(path) -> Environment:
    """Read ``environment <id>`` / ``features <n>`` headers then rows of feature ids."""
    env_id, features, rows = None, None, []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        if head == "environment":
            env_id = rest.strip()
        elif head == "features":
            features = int(rest)
        else:
            try:
                rows.append([int(v) for v in line.split()])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: expected integers, got {line!r}") from None
    if env_id is None or features is None:
        raise ValueError(f"{path}: missing 'environment' or 'features' header")
    if not rows or len({len(r) for r in rows}) != 1:
        raise ValueError(f"{path}: grid rows must be non-empty and of equal length")
    return Environment(env_id, np.array(rows), features)


def save_environment(env: Environment, path) -> None:
    lines = [f"environment {env.id}", f"features {env.features}"]
    lines += [" ".join(str(v) for v in row) for row in env.grid]
    Path(path).write_text("\n".join(lines) + "\n")


def _distinct(env: Environment) -> bool:
    sigs = {(int(env.grid.flat[i]),) + env.context(i) for i in range(env.locations)}
    return len(sigs) == env.locations


def environment_suite(grid=(5, 5), features: int = 4, distinct: int = 2, seed: int = 0) -> list[Environment]:
    """One ambiguous environment (a single feature everywhere) plus ``distinct``
    random ones in which every location's feature-plus-context is unique."""
    rng = np.random.default_rng(seed)
    envs = [Environment("ambiguous", np.zeros(grid, dtype=np.int64), features)]
    while len(envs) < distinct + 1:
        env = Environment(f"distinct{len(envs) - 1}", rng.integers(0, features, size=grid), features)
        if _distinct(env):
            envs.append(env)
    return envs


def build_orientation_model(locations: int, features: int, alpha: int = 1,
                            gamma: GammaCycle = GammaCycle()) -> ModelSpec:
    w = gamma.w_max
    unit = NeuronSpec((DendriteSpec((
        SegmentSpec(SegmentKind.PROXIMAL, features, threshold=w, response=ResponseKind.RNL),
        SegmentSpec(SegmentKind.DISTAL, 4 * features, threshold=4 * w, response=ResponseKind.SNL,
                    offset=features),
    )),), alpha=alpha)
    layer = LayerSpec((5 * features,), cv_group=CVGroupSpec.uniform(unit, locations), id="locations")
    return add_layer(ModelSpec(gamma), layer)


def observation(env: Environment, loc: int) -> np.ndarray:
    """Volley for standing at ``loc``: feature one-hot, then four neighbour one-hots."""
    f = env.features
    v = np.full(5 * f, ABSENT, dtype=np.int64)
    v[int(env.grid.flat[loc])] = 0
    for d, feat in enumerate(env.context(loc)):
        v[f + d * f + feat] = 0
    return v


def _observations(env: Environment) -> Dataset:
    locs = np.arange(env.locations)
    return Dataset(np.stack([observation(env, i) for i in locs]), locs)


def train_orientation(model: ModelSpec, env: Environment, epochs: int = 20, seed: int = 0,
                      params: StdpParams = StdpParams()) -> WeightMatrix:
    """Supervised training: every location's observation labelled with its index."""
    return train_dataset(model, _observations(env), epochs, seed, params).weights


def _without_distal(model: ModelSpec) -> ModelSpec:
    layers = []
    for layer in model.layers:
        units = tuple(replace(u, alpha=0) for u in layer.cv_group.units)
        layers.append(replace(layer, cv_group=CVGroupSpec(units)))
    return replace(model, layers=tuple(layers))


def run_orientation_task(model: ModelSpec, trained: dict[str, WeightMatrix], environments,
                         trials: int, seed: int = 0, distal: bool = True) -> list[tuple[str, int, float]]:
    """Recall on ``trials`` random queries per environment: (environment id, trials, recall).

    ``distal=False`` evaluates the same weights with the distal advance disabled.
    """
    if trials < 1:
        raise ValueError("recall is undefined for zero trials")
    if not distal:
        model = _without_distal(model)
    rng = np.random.default_rng(seed)
    compiled = compile_model(model)
    rows = []
    for env in environments:
        if env.id not in trained or trained[env.id] is None:
            raise ValueError(f"environment {env.id!r}: model has no trained weights")
        if env.locations != model.layers[-1].cv_group.class_count:
            raise ValueError(f"environment {env.id!r} has {env.locations} locations, "
                             f"model has {model.layers[-1].cv_group.class_count} units")
        queries = rng.integers(0, env.locations, size=trials)
        pred = compiled.predict(trained[env.id], np.stack([observation(env, q) for q in queries]))
        rows.append((env.id, trials, float(np.mean(pred == queries))))
    return rows


def results_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["environment", "trials", "recall"])
    for env_id, trials, recall in rows:
        w.writerow([env_id, trials, f"{recall:.6f}"])
    return buf.getvalue()
