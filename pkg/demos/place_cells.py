"""
Place cells and where-am-I recall
=================================

The full place-cell structure is large (three minicolumns, 1.23M synapses);
counting it is instant.  A much smaller model then learns each location of
a 5x5 world: the feature underfoot drives the proximal segment, the four
neighbouring features feed a distal segment.  With a single repeated feature,
nothing tells locations apart; with distinct neighbourhoods, distal context
does.
"""

from neutnn.network import count_synapses
from neutnn.placecells import (PlaceCellConfig, build_orientation_model, build_place_cells,
                               environment_suite, run_orientation_task, train_orientation)

print("structural synapses:", count_synapses(build_place_cells()))
print("desk-scale synapses:", count_synapses(build_place_cells(PlaceCellConfig.desk())))

envs = environment_suite(seed=0)
model = build_orientation_model(25, 4)
trained = {e.id: train_orientation(model, e, 16, seed=0) for e in envs}
on = run_orientation_task(model, trained, envs, 200, seed=1)
off = run_orientation_task(model, trained, envs, 200, seed=1, distal=False)
for (eid, n, r), (_, _, r0) in zip(on, off):
    print(f"{eid:10s} recall {r:.3f}   without distal {r0:.3f}")
