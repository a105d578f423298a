"""Vectorized layer evaluation and learning.

A layer is compiled once into flat segment tables: every segment of every
neuron becomes one row, synapses are padded to the widest segment (padding
has weight 0 and never spikes), and dendrite/neuron structure becomes
``reduceat`` boundaries.  All kernel positions and batch samples are then
evaluated together with numpy broadcasting.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .network import LayerKind, Learning, LayerSpec, ModelSpec, PruneMode, WeightMatrix
from .neuron import ResponseKind, SegmentKind
from .temporal import ABSENT

__all__ = ["LayerPlan", "CompiledModel", "compile_model", "StdpParams", "Trainer"]


@dataclass(frozen=True)
class StdpParams:
    """Integer STDP step sizes.  Distal overrides default to the shared values."""

    capture: int = 1
    backoff: int = 1
    search: int = 1
    distal_capture: int | None = None
    distal_backoff: int | None = None
    distal_search: int | None = None

    def __post_init__(self):
        for name in ("capture", "backoff", "search", "distal_capture", "distal_backoff", "distal_search"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} step must be >= 0, got {v}")

    def steps(self, kind: SegmentKind) -> tuple[int, int, int]:
        if kind is SegmentKind.DISTAL:
            return (self.capture if self.distal_capture is None else self.distal_capture,
                    self.backoff if self.distal_backoff is None else self.distal_backoff,
                    self.search if self.distal_search is None else self.distal_search)
        return self.capture, self.backoff, self.search


class LayerPlan:
    def __init__(self, layer: LayerSpec, offset: int, t_max: int):
        self.layer = layer
        self.offset = offset
        self.t_max = t_max
        self.positions = layer.positions
        self.per_position = layer.synapses_per_position
        self.patch_index = layer.patch_index()
        pw = layer.patch_width

        segs, seg_dend, seg_neuron, dend_start, dend_neuron, neuron_dend_start = [], [], [], [], [], []
        alpha = []
        for n_i, neuron in enumerate(layer.neurons):
            neuron_dend_start.append(len(dend_start))
            alpha.append(neuron.alpha)
            for dend in neuron.dendrites:
                dend_start.append(len(segs))
                dend_neuron.append(n_i)
                for seg in dend.segments:
                    segs.append(seg)
                    seg_dend.append(len(dend_start) - 1)
                    seg_neuron.append(n_i)
        width = max(s.synapses for s in segs)
        self.syn_line = np.full((len(segs), width), pw, dtype=np.int64)
        self.flat_index = np.zeros((len(segs), width), dtype=np.int64)
        self.valid = np.zeros((len(segs), width), dtype=bool)
        pos = 0
        for i, s in enumerate(segs):
            self.syn_line[i, :s.synapses] = np.arange(s.offset, s.end)
            self.flat_index[i, :s.synapses] = np.arange(pos, pos + s.synapses)
            self.valid[i, :s.synapses] = True
            pos += s.synapses
        self.theta = np.array([s.threshold for s in segs], dtype=np.int64)
        # input line read by every padded synapse; padding reads an always-silent extra line
        self.lines = np.where(self.valid, self.patch_index[:, np.minimum(self.syn_line, pw - 1)],
                              layer.input_width)
        self.rnl = np.array([s.response is ResponseKind.RNL for s in segs])
        self.proximal = np.array([s.kind is SegmentKind.PROXIMAL for s in segs])
        self.seg_dend = np.array(seg_dend)
        self.seg_neuron = np.array(seg_neuron)
        self.dend_start = np.array(dend_start)
        self.dend_neuron = np.array(dend_neuron)
        self.neuron_dend_start = np.array(neuron_dend_start)
        self.alpha = np.array(alpha, dtype=np.int64)
        self.n_neurons = len(alpha)
        self.groups = []
        if layer.kind is LayerKind.MINICOLUMN:
            start = 0
            for mc in layer.minicolumns:
                self.groups.append((start, start + len(mc.neurons), mc.wta_k))
                start += len(mc.neurons)

    # -- weights ---------------------------------------------------------
    def gather(self, flat: np.ndarray) -> np.ndarray:
        """Padded (positions, segments, width) view of this layer's flat block."""
        block = flat[self.offset:self.offset + self.positions * self.per_position]
        block = block.reshape(self.positions, self.per_position)
        return np.where(self.valid, block[:, self.flat_index], 0)

    def scatter(self, padded: np.ndarray, flat: np.ndarray) -> None:
        block = flat[self.offset:self.offset + self.positions * self.per_position]
        block = block.reshape(self.positions, self.per_position)
        block[:, self.flat_index[self.valid]] = padded[:, self.valid]

    # -- forward ---------------------------------------------------------
    def inputs(self, x: np.ndarray, rows=slice(None)) -> np.ndarray:
        """Per-synapse input times, shape (batch, positions, segments, width).

        Times at or past the end of the cycle cannot contribute, so they are
        clipped to ``t_max``, which keeps the result in a small dtype.
        """
        xa = np.concatenate([np.minimum(x, self.t_max), np.full((len(x), 1), self.t_max, dtype=x.dtype)], axis=1)
        return xa.astype(np.int16)[:, self.lines[:, rows]]

    def segment_times(self, tin: np.ndarray, w: np.ndarray, rows=slice(None)) -> np.ndarray:
        """Fire time of every segment from a per-tick event histogram.

        SNL synapses add a jump of ``w`` at their input tick; RNL synapses add
        slope +1 at the input tick and -1 once the ramp reaches ``w``.  One
        cumulative sum recovers the potential from jumps, two recover it from
        slope changes.  Bin ``t_max`` collects events after the cycle.
        """
        T = self.t_max
        shape = tin.shape[:-1]
        n = int(np.prod(shape))
        seg_rows = rows
        base = (np.arange(n, dtype=np.int64) * (T + 1)).reshape(shape + (1,))
        rnl = self.rnl[seg_rows][:, None]
        theta = self.theta[seg_rows]
        live = (tin < T) & (w > 0)
        start = (base + tin).ravel()
        step = np.where(live & ~rnl, w, 0).ravel()
        ramp = (live & rnl).ravel()
        stop = (base + np.minimum(tin + w, T)).ravel()
        size = n * (T + 1)
        jump = np.bincount(start, weights=step, minlength=size)
        slope = np.bincount(start, weights=ramp, minlength=size) - np.bincount(stop, weights=ramp, minlength=size)
        jump = jump.reshape(n, T + 1)[:, :T]
        slope = slope.reshape(n, T + 1)[:, :T]
        pot = np.cumsum(jump, axis=1) + np.cumsum(np.cumsum(slope, axis=1), axis=1)
        hit = pot >= theta[np.arange(n) % len(theta)][:, None]
        ft = np.where(hit.any(axis=1), hit.argmax(axis=1), ABSENT)
        return ft.reshape(shape)

    def neuron_times(self, ft: np.ndarray):
        prox = np.where(self.proximal, ft, ABSENT)
        dist = np.where(self.proximal, ABSENT, ft)
        dprox = np.minimum.reduceat(prox, self.dend_start, axis=-1)
        ddist = np.minimum.reduceat(dist, self.dend_start, axis=-1)
        p = np.minimum.reduceat(dprox, self.neuron_dend_start, axis=-1)
        p_of_dend = p[..., self.dend_neuron]
        early = (ddist <= p_of_dend) & (p_of_dend < ABSENT)
        d = np.add.reduceat(early.astype(np.int64), self.neuron_dend_start, axis=-1)
        nt = np.where(p < ABSENT, np.maximum(0, p - self.alpha * d), ABSENT)
        return nt, dprox, ddist

    def inhibit(self, nt: np.ndarray, enable: np.ndarray | None = None) -> np.ndarray:
        if self.layer.kind is LayerKind.CV:
            if enable is None:
                return nt
            return np.where(enable.astype(bool), nt, ABSENT)
        out = np.full_like(nt, ABSENT)
        for a, b, k in self.groups:
            block = nt[..., a:b]
            order = np.argsort(block, axis=-1, kind="stable")
            rank = np.empty_like(order)
            np.put_along_axis(rank, order, np.arange(b - a), axis=-1)
            out[..., a:b] = np.where((rank < k) & (block < ABSENT), block, ABSENT)
        return out

    def forward(self, x: np.ndarray, w: np.ndarray, enable=None):
        if enable is None or self.layer.kind is not LayerKind.CV:
            tin = self.inputs(x)
            ft = self.segment_times(tin, w)
        else:
            # gated-off units are silent whatever their segments do: skip them
            rows = np.flatnonzero(np.asarray(enable, dtype=bool)[self.seg_neuron])
            tin = np.full((len(x),) + self.lines.shape, self.t_max, dtype=np.int16)
            tin[:, :, rows] = self.inputs(x, rows)
            ft = np.full((len(x), self.positions, len(self.theta)), ABSENT, dtype=np.int64)
            ft[:, :, rows] = self.segment_times(tin[:, :, rows], w[:, rows], rows)
        nt, dprox, ddist = self.neuron_times(ft)
        post = self.inhibit(nt, enable)
        return post, (tin, ft, dprox, ddist)

    # -- learning --------------------------------------------------------
    def selected(self, ft: np.ndarray, dprox: np.ndarray, ddist: np.ndarray) -> np.ndarray:
        """Segments that are the earliest of their kind in their dendrite (lowest index on ties)."""
        best = np.where(self.proximal, dprox[..., self.seg_dend], ddist[..., self.seg_dend])
        cand = (ft == best) & (ft < ABSENT)
        first = np.zeros_like(cand)
        # running count of same-kind candidates since the dendrite's first segment
        for kind_mask in (self.proximal, ~self.proximal):
            ck = np.cumsum(cand & kind_mask, axis=-1)
            base = np.concatenate([np.zeros(ck.shape[:-1] + (1,), ck.dtype), ck], axis=-1)[..., self.dend_start]
            first |= cand & kind_mask & ((ck - base[..., self.seg_dend]) == 1)
        return first


class CompiledModel:
    def __init__(self, model: ModelSpec):
        self.model = model
        offsets = model.layer_offsets()
        self.plans = [LayerPlan(layer, off, model.gamma.t_max) for layer, off in zip(model.layers, offsets)]

    def _check(self, weights: WeightMatrix):
        if weights is None:
            raise ValueError("model has no trained weights")
        weights.check(self.model)

    def forward(self, weights: WeightMatrix, volley) -> list[np.ndarray]:
        self._check(weights)
        x = np.asarray(volley, dtype=np.int64)
        single = x.ndim == 1
        if single:
            x = x[None]
        if x.shape[1] != self.model.input_width:
            raise ValueError(f"volley width {x.shape[1]} != model input width {self.model.input_width}")
        outs = []
        for plan in self.plans:
            post, _ = plan.forward(x, plan.gather(weights.values))
            x = post.reshape(len(x), -1)
            outs.append(x[0] if single else x)
        return outs

    def readout(self, final: np.ndarray) -> np.ndarray:
        last = self.plans[-1]
        if last.layer.kind is LayerKind.CV:
            t = final.reshape(len(final), last.positions, last.n_neurons)
            mn = t.min(axis=-1, keepdims=True)
            votes = ((t == mn) & (mn < ABSENT)).sum(axis=1)
            return np.where(votes.max(axis=-1) > 0, votes.argmax(axis=-1), -1)
        return np.where(final.min(axis=-1) < ABSENT, final.argmin(axis=-1), -1)

    def predict(self, weights: WeightMatrix, volleys, batch: int = 16) -> np.ndarray:
        self._check(weights)
        x = np.asarray(volleys, dtype=np.int64)
        if x.ndim == 1:
            x = x[None]
        padded = [p.gather(weights.values) for p in self.plans]
        out = []
        for i in range(0, len(x), batch):
            h = x[i:i + batch]
            for plan, w in zip(self.plans, padded):
                post, _ = plan.forward(h, w)
                h = post.reshape(len(h), -1)
            out.append(self.readout(h))
        return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


@lru_cache(maxsize=16)
def compile_model(model: ModelSpec) -> CompiledModel:
    return CompiledModel(model)


class Trainer:
    """Holds padded weights between cycles and applies one STDP cycle at a time.

    Each cycle runs the forward pass on the pre-cycle weights, derives every
    synapse's update from its input time and its segment's post-inhibition
    output time, then commits all updates together.
    """

    def __init__(self, model: ModelSpec, weights: WeightMatrix, params: StdpParams = StdpParams()):
        weights.check(model)
        self.compiled = compile_model(model)
        self.model = model
        self.params = params
        self.w_max = weights.w_max
        self.mode = weights.mode
        self.w = [p.gather(weights.values) for p in self.compiled.plans]
        self.pruned = [p.gather(weights.pruned.astype(np.int16)).astype(bool) for p in self.compiled.plans]
        self.steps = []
        for p in self.compiled.plans:
            segs = [s for n in p.layer.neurons for s in n.segments()]
            mu = np.array([params.steps(s.kind) for s in segs], dtype=np.int64)
            self.steps.append((mu[:, 0, None], mu[:, 1, None], mu[:, 2, None]))

    def weights(self) -> WeightMatrix:
        values = np.zeros(self.model.synapse_sites, dtype=np.int16)
        pruned = np.zeros(self.model.synapse_sites, dtype=np.int16)
        for plan, w, pr in zip(self.compiled.plans, self.w, self.pruned):
            plan.scatter(w.astype(np.int16), values)
            plan.scatter(pr.astype(np.int16), pruned)
        return WeightMatrix(values, self.w_max, pruned.astype(bool), self.mode)

    def cycle(self, volley, label: int | None = None) -> list[np.ndarray]:
        x = np.asarray(volley, dtype=np.int64)[None]
        if x.shape[1] != self.model.input_width:
            raise ValueError(f"volley width {x.shape[1]} != model input width {self.model.input_width}")
        outputs, updates = [], []
        for plan, w in zip(self.compiled.plans, self.w):
            enable = None
            if plan.layer.learning is Learning.SUPERVISED:
                if label is None:
                    raise ValueError(f"layer {plan.layer.id!r} is supervised and needs a label")
                if not 0 <= label < plan.n_neurons:
                    raise ValueError(f"label {label} outside [0, {plan.n_neurons})")
                enable = np.zeros(plan.n_neurons, dtype=bool)
                enable[label] = True
            post, (tin, ft, dprox, ddist) = plan.forward(x, w, enable)
            updates.append((tin[0], ft[0], dprox[0], ddist[0], post[0], enable))
            x = post.reshape(1, -1)
            outputs.append(x[0])
        # commit only after every layer has seen pre-cycle weights
        for i, (plan, (tin, ft, dprox, ddist, post, enable)) in enumerate(zip(self.compiled.plans, updates)):
            self.w[i], self.pruned[i] = self._update(i, plan, tin, ft, dprox, ddist, post, enable)
        return outputs

    def _update(self, i, plan: LayerPlan, tin, ft, dprox, ddist, post, enable):
        w, pruned = self.w[i], self.pruned[i]
        sel = plan.selected(ft, dprox, ddist)
        fired = post[..., plan.seg_neuron] < ABSENT
        tout = np.where(sel & fired, ft, ABSENT)[..., None]
        rows = slice(None)
        if enable is not None:
            # only the enabled unit may learn
            rows = np.flatnonzero(enable[plan.seg_neuron])
        cap, back, search = (m[rows] for m in self.steps[i])
        tin, tout = tin[:, rows], tout[:, rows]
        tin_f = tin < self.model.gamma.t_max
        tout_f = tout < ABSENT
        delta = (np.where(tin_f & tout_f & (tin <= tout), cap, 0)
                 - np.where(tout_f & (~tin_f | (tin > tout)), back, 0)
                 + np.where(tin_f & ~tout_f, search, 0))
        plastic = np.broadcast_to(plan.valid[rows], delta.shape)
        if self.mode is PruneMode.REMOVE_ZERO:
            plastic = plastic & ~pruned[:, rows]
        w = w.copy()
        pruned = pruned.copy()
        w[:, rows] = np.clip(w[:, rows] + np.where(plastic, delta, 0), 0, self.w_max)
        pruned[:, rows] &= w[:, rows] == 0
        return w, pruned
