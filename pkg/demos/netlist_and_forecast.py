"""
From model to netlist to cost estimate
======================================

Emit the structural netlist of a pruned model, check it, rebuild the model
from it, and estimate leakage and area from the synapse count in each
cell library.
"""

import warnings

from neutnn.hwgen import (check_connectivity, compare_pdks, emit_netlist, fit_ppa, netlist_to_model,
                          parse_netlist)
from neutnn.network import count_synapses, init_weights
from neutnn.presets import clustering_model
from neutnn.pruning import PruneConfig, prune

model = clustering_model()
w, report = prune(init_weights(model, 0), PruneConfig(threshold=4, mode="remove_zero"))

text = emit_netlist(model, w)
print("\n".join(text.splitlines()[:14]))
print("...")
nl = parse_netlist(text)
print("stats:", nl.stats)
print("connectivity problems:", check_connectivity(nl))
back, bw = netlist_to_model(nl)
print("round trip identical:", back == model and bw == w)

for pdk in ("FreePDK45", "ASAP7", "TNN7"):
    m = fit_ppa(pdk)
    print(f"{pdk:9s} leak {m.leak_slope:.3e} {m.leak_unit}/syn, worst error {m.leak_max_rel_error:.1%}; "
          f"minimax worst {fit_ppa(pdk, method='minimax').leak_max_rel_error:.1%}")

s = count_synapses(model, "remove_zero", w)
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    for method in ("ols", "minimax"):
        # small designs sit below most of the table, where the least-squares 45 nm
        # line dips under zero and gets clamped
        for f in compare_pdks(s, method):
            print(f"{method:7s} {s} synapses on {f.pdk.value:9s}: {f.leakage_uw:8.3f} uW  {f.area:10.1f} um2")
