"""Scalar, loop-per-neuron evaluation used to check the vectorized engine.

Builds on the per-neuron reference code and the plain-python STDP rule in
``oracles``; nothing here touches the compiled segment tables.
"""

import numpy as np

import oracles
from neutnn.network import ABSENT, Learning, minicolumn_forward
from neutnn.neuron import DendriteSpec, NeuronSpec, SegmentKind, SegmentSpec, neuron_forward


def random_neuron(rng, span, max_dendrites=2, max_segments=3):
    dends = []
    for _ in range(rng.integers(1, max_dendrites + 1)):
        segs = []
        for _ in range(rng.integers(1, max_segments + 1)):
            n = int(rng.integers(1, span + 1))
            segs.append(SegmentSpec(str(rng.choice(["proximal", "distal"])), n, int(rng.integers(1, 7 * n + 1)),
                                    str(rng.choice(["rnl", "snl"])), int(rng.integers(0, span - n + 1))))
        dends.append(DendriteSpec(tuple(segs)))
    return NeuronSpec(tuple(dends), int(rng.integers(0, 3)))


def scalar_layer(layer, w, x, enable=None):
    """Per-position scalar forward pass; ``enable`` silences CV units."""
    out = []
    per = layer.synapses_per_position
    for p, lines in enumerate(layer.patch_index()):
        block, patch = w[p * per:(p + 1) * per], x[lines]
        pos = 0
        if layer.cv_group is not None:
            for u_i, u in enumerate(layer.cv_group.units):
                t = neuron_forward(u, block[pos:pos + u.synapse_count], patch)[0]
                out.append(t if enable is None or enable[u_i] else ABSENT)
                pos += u.synapse_count
        else:
            for mc in layer.minicolumns:
                out.extend(minicolumn_forward(mc, block[pos:pos + mc.synapse_count], patch).tolist())
                pos += mc.synapse_count
    return np.array(out)


def _selected(neuron, seg_times):
    """Per segment: is it the earliest of its kind in its dendrite (lowest index on ties)?"""
    flags, k = [], 0
    for d in neuron.dendrites:
        times = seg_times[k:k + len(d.segments)]
        best = {}
        for j, (s, t) in enumerate(zip(d.segments, times)):
            if s.kind not in best or t < times[best[s.kind]]:
                best[s.kind] = j
        flags += [best[s.kind] == j for j, s in enumerate(d.segments)]
        k += len(d.segments)
    return flags


def scalar_cycle(model, weights, volley, label, steps, t_max=8):
    """One learning cycle, synapse by synapse.  ``steps(kind)`` gives (capture, backoff, search)."""
    w_max = weights.w_max
    values = weights.values.astype(int).copy()
    pruned = weights.pruned.copy()
    remove = weights.mode is not None and weights.mode.value == "remove_zero"
    offsets = model.layer_offsets()
    x = np.asarray(volley)
    new = values.copy()
    outputs = []
    for li, layer in enumerate(model.layers):
        lw = values[offsets[li]:offsets[li + 1]]
        enable = None
        if layer.learning is Learning.SUPERVISED:
            enable = [i == label for i in range(len(layer.neurons))]
        post = scalar_layer(layer, lw, x, enable)
        per = layer.synapses_per_position
        n_out = layer.outputs_per_position
        for p, lines in enumerate(layer.patch_index()):
            patch = np.where(x[lines] < t_max, x[lines], ABSENT)
            site = offsets[li] + p * per
            for n_i, neuron in enumerate(layer.neurons):
                nw = values[site:site + neuron.synapse_count]
                if enable is None or enable[n_i]:
                    _, seg_times = neuron_forward(neuron, nw, patch)
                    fired = post[p * n_out + n_i] < ABSENT
                    sel = _selected(neuron, seg_times)
                    k = 0
                    for s, t, chosen in zip(neuron.segments(), seg_times, sel):
                        t_out = t if chosen and fired else ABSENT
                        cap, back, search = steps(s.kind)
                        for j in range(s.synapses):
                            g = site + k + j
                            if remove and pruned[g]:
                                continue
                            new[g] = oracles.stdp(values[g], patch[s.offset + j], t_out, cap, back, search, w_max)
                        k += s.synapses
                site += neuron.synapse_count
        outputs.append(post)
        x = post
    pruned &= new == 0
    return new, pruned, outputs


__all__ = ["random_neuron", "scalar_layer", "scalar_cycle", "SegmentKind"]
