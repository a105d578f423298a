"""
Spike timing inside one neuron
==============================

A segment sums non-leaking synaptic responses and fires on the first tick
its potential reaches threshold.  Distal context can pull the neuron's
output a tick earlier, but only proximal drive makes it fire at all.
"""

from neutnn.neuron import (ABSENT, DendriteSpec, NeuronSpec, SegmentSpec, neuron_forward,
                           segment_fire_time, segment_potentials)

# two ramp synapses of weight 3, spikes at ticks 0 and 2
print("ramp potentials:", segment_potentials([3, 3], [0, 2], "rnl", 8))
print("fire time, theta=5:", segment_fire_time([3, 3], [0, 2], SegmentSpec("proximal", 2, 5)))

# a step response reaches full weight immediately
print("step potentials:", segment_potentials([3, 3], [0, 2], "snl", 8))

neuron = NeuronSpec((DendriteSpec((
    SegmentSpec("proximal", 2, 7, "snl", offset=0),
    SegmentSpec("distal", 2, 7, "snl", offset=2),
)),), alpha=1)
w = [7, 0, 7, 0]
for ctx in (1, ABSENT):
    t, segs = neuron_forward(neuron, w, [4, ABSENT, ctx, ABSENT])
    shown = ["-" if v >= ABSENT else v for v in segs]
    print(f"context at {ctx if ctx < ABSENT else '-'}: segments {shown}, neuron fires at {t}")
