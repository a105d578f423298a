"""Synapse, segment, active-dendrite and neuron-body behaviour.

These are scalar reference implementations, written for clarity.  The
vectorized engine in :mod:`neutnn.engine` evaluates whole layers and is
checked against them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

from .temporal import ABSENT

__all__ = [
    "ResponseKind",
    "SegmentKind",
    "SegmentSpec",
    "DendriteSpec",
    "NeuronSpec",
    "default_threshold",
    "synapse_response",
    "segment_potentials",
    "segment_fire_time",
    "dendrite_output",
    "neuron_fire_time",
    "cv_unit_fire",
    "neuron_forward",
]


class ResponseKind(str, Enum):
    RNL = "rnl"
    SNL = "snl"


class SegmentKind(str, Enum):
    PROXIMAL = "proximal"
    DISTAL = "distal"


def default_threshold(synapses: int, w_max: int) -> int:
    return math.ceil(0.5 * synapses * w_max)


@dataclass(frozen=True)
class SegmentSpec:
    """A point-neuron-like accumulator.

    The segment's synapses read the contiguous input lines
    ``offset .. offset + synapses - 1`` of whatever volley feeds its neuron.
    ``threshold=None`` is filled in with :func:`default_threshold` when the
    enclosing layer joins a model.
    """

    kind: SegmentKind = SegmentKind.PROXIMAL
    synapses: int = 1
    threshold: int | None = None
    response: ResponseKind = ResponseKind.RNL
    offset: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", SegmentKind(self.kind))
        object.__setattr__(self, "response", ResponseKind(self.response))
        if self.synapses < 1:
            raise ValueError(f"segment needs >= 1 synapse, got {self.synapses}")
        if self.threshold is not None and self.threshold < 1:
            raise ValueError(f"segment threshold must be >= 1, got {self.threshold}")
        if self.offset < 0:
            raise ValueError(f"segment offset must be >= 0, got {self.offset}")

    def resolve(self, w_max: int) -> "SegmentSpec":
        theta = default_threshold(self.synapses, w_max) if self.threshold is None else self.threshold
        if theta > self.synapses * w_max:
            raise ValueError(
                f"threshold {theta} unreachable: {self.synapses} synapses x w_max {w_max}"
            )
        return replace(self, threshold=theta)

    @property
    def end(self) -> int:
        return self.offset + self.synapses


@dataclass(frozen=True)
class DendriteSpec:
    segments: tuple[SegmentSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise ValueError("a dendrite needs at least one segment")

    @property
    def synapse_count(self) -> int:
        return sum(s.synapses for s in self.segments)


@dataclass(frozen=True)
class NeuronSpec:
    dendrites: tuple[DendriteSpec, ...]
    alpha: int = 1  # ticks of advance per dendrite with early distal context

    def __post_init__(self):
        object.__setattr__(self, "dendrites", tuple(self.dendrites))
        if not self.dendrites:
            raise ValueError("a neuron needs at least one dendrite")
        if self.alpha < 0:
            raise ValueError(f"distal advance must be >= 0, got {self.alpha}")

    @property
    def synapse_count(self) -> int:
        return sum(d.synapse_count for d in self.dendrites)

    @property
    def input_span(self) -> int:
        """Smallest input width every segment of this neuron fits in."""
        return max(s.end for d in self.dendrites for s in d.segments)

    @property
    def has_proximal(self) -> bool:
        return any(s.kind is SegmentKind.PROXIMAL for d in self.dendrites for s in d.segments)

    def segments(self):
        for d in self.dendrites:
            yield from d.segments


def synapse_response(w: int, t_in: int, kind: ResponseKind, t: int) -> int:
    """Contribution of one synapse to its segment's body potential at tick t."""
    if t_in >= ABSENT or t < t_in:
        return 0
    if ResponseKind(kind) is ResponseKind.SNL:
        return w
    return min(t - t_in + 1, w)


def segment_potentials(weights: Sequence[int], inputs: Sequence[int], kind: ResponseKind,
                       t_max: int) -> list[int]:
    """Body potential at every tick of the cycle, by direct summation."""
    return [sum(synapse_response(w, x, kind, t) for w, x in zip(weights, inputs))
            for t in range(t_max)]


def segment_fire_time(weights: Sequence[int], inputs: Sequence[int], spec: SegmentSpec,
                      t_max: int = 8) -> int:
    """Earliest tick at which the potential reaches threshold, else ABSENT.

    Event-driven: only ticks where some synapse starts or stops ramping (or
    steps) are visited, and crossings between events are solved directly,
    which is valid because the potential never decreases.
    """
    if len(weights) != spec.synapses or len(inputs) != spec.synapses:
        raise ValueError(
            f"segment has {spec.synapses} synapses, got {len(weights)} weights / {len(inputs)} inputs"
        )
    theta = spec.threshold
    if theta is None:
        raise ValueError("segment threshold unresolved; call SegmentSpec.resolve(w_max)")
    ramp = spec.response is ResponseKind.RNL

    slope_delta: dict[int, int] = {}
    jump: dict[int, int] = {}
    for w, x in zip(weights, inputs):
        if w <= 0 or x >= t_max:
            continue
        if ramp:
            slope_delta[x] = slope_delta.get(x, 0) + 1
            slope_delta[x + w] = slope_delta.get(x + w, 0) - 1
        else:
            jump[x] = jump.get(x, 0) + w

    potential, slope, last = 0, 0, -1
    for e in sorted(set(slope_delta) | set(jump)):
        if e >= t_max:
            break
        # constant slope over ticks last+1 .. e-1
        gap = e - 1 - last
        if slope > 0 and gap > 0 and potential + slope * gap >= theta:
            return last + -(-(theta - potential) // slope)
        potential += slope * gap
        slope += slope_delta.get(e, 0)
        potential += slope + jump.get(e, 0)
        if potential >= theta:
            return e
        last = e
    gap = t_max - 1 - last
    if slope > 0 and gap > 0 and potential + slope * gap >= theta:
        return last + -(-(theta - potential) // slope)
    return ABSENT


def dendrite_output(segment_results: Sequence[tuple[SegmentKind, int]]) -> tuple[int, int]:
    """Earliest proximal and earliest distal segment time of one dendrite."""
    if not segment_results:
        raise ValueError("dendrite has no segments")
    proximal, distal = ABSENT, ABSENT
    for kind, t in segment_results:
        if SegmentKind(kind) is SegmentKind.PROXIMAL:
            proximal = min(proximal, t)
        else:
            distal = min(distal, t)
    return proximal, distal


def neuron_fire_time(dendrite_outputs: Sequence[tuple[int, int]], alpha: int = 1) -> int:
    """Neuron body: proximal drive is required; early distal context advances firing."""
    if not dendrite_outputs:
        raise ValueError("neuron has no dendrites")
    p = min(prox for prox, _ in dendrite_outputs)
    if p >= ABSENT:
        return ABSENT
    d = sum(1 for _, dist in dendrite_outputs if dist <= p)
    return max(0, p - alpha * d)


def cv_unit_fire(enable: int, segment_time: int) -> int:
    return segment_time if enable else ABSENT


def neuron_forward(spec: NeuronSpec, weights: Sequence[int], volley: Sequence[int],
                   t_max: int = 8) -> tuple[int, list[int]]:
    """Evaluate one neuron.  ``weights`` runs over (dendrite, segment, synapse).

    Returns the fire time and the per-segment fire times in the same order.
    """
    if len(weights) != spec.synapse_count:
        raise ValueError(f"neuron has {spec.synapse_count} synapses, got {len(weights)} weights")
    if len(volley) < spec.input_span:
        raise ValueError(f"neuron reads {spec.input_span} input lines, volley has {len(volley)}")
    pos = 0
    outputs, seg_times = [], []
    for dend in spec.dendrites:
        results = []
        for seg in dend.segments:
            w = weights[pos:pos + seg.synapses]
            pos += seg.synapses
            t = segment_fire_time(w, volley[seg.offset:seg.end], seg, t_max)
            results.append((seg.kind, t))
            seg_times.append(t)
        outputs.append(dendrite_output(results))
    return neuron_fire_time(outputs, spec.alpha), seg_times
