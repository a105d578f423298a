"""Structural netlist emission, parsing and round-trip reconstruction.

The document is line-oriented UTF-8 text with LF endings.  Record kinds, in
emission order::

    netlist 1
    meta <key>=<value> ...
    module <name> <port>=<dir>:<type>[<width>] ...
    inst <name> <module> parent=<name> <key>=<value> ...     (depth first)
    net <name> driver=<instance>
    stat <key> <value>

Instance names are hierarchical: ``L0``, ``L0.P3.M1`` (minicolumn) or
``L0.P3.G`` (CV group), ``L0.P3.N4``, ``L0.P3.N4.D0``, ``L0.P3.N4.D0.S2``,
``L0.P3.N4.D0.S2.Y7``.  Neuron indices are layer-wide; synapse indices are
local to their segment and keep their original value when pruned synapses
are left out.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from ..network import (CVGroupSpec, LayerSpec, MinicolumnSpec, ModelSpec, PruneMode, WeightMatrix,
                       add_layer)
from ..neuron import DendriteSpec, NeuronSpec, SegmentSpec
from ..temporal import GammaCycle

__all__ = ["Netlist", "emit_netlist", "iter_netlist", "parse_netlist", "netlist_to_model",
           "check_connectivity", "require_validated"]

FLOORPLAN_DENSITY = "0.60"
CLOCK_HZ = 100_000

_MODULES = (
    "module synapse in=in:spike[1] out=out:response[1]",
    "module segment in=in:response[synapses] out=out:spike[1]",
    "module dendrite in=in:spike[segments] prox=out:spike[1] dist=out:spike[1]",
    "module neuron prox=in:spike[dendrites] dist=in:spike[dendrites] out=out:spike[1]",
    "module minicolumn in=in:spike[neurons] out=out:spike[neurons]",
    "module cvgroup in=in:spike[units] enable=in:bit[units] out=out:spike[units]",
    "module layer x=in:spike[input_width] y=out:spike[output_width]",
    "module top x=in:spike[input_width] y=out:spike[output_width]",
)


def _shape(s) -> str:
    return "x".join(str(v) for v in s)


def _kernel(k) -> str:
    return "-" if k is None else "x".join(f"{a}:{b}" for a, b in k)


def require_validated(model: ModelSpec) -> None:
    """Raise unless the model was assembled through the width-checked builder."""
    if not model.layers:
        raise ValueError("model has no layers")
    prev = None
    seen = set()
    for i, layer in enumerate(model.layers):
        if layer.id is None or layer.id in seen:
            raise ValueError(f"layer {i} was not added through add_layer (missing or duplicate id)")
        seen.add(layer.id)
        for n in layer.neurons:
            for s in n.segments():
                if s.threshold is None:
                    raise ValueError(f"layer {layer.id!r} has unresolved segment thresholds")
        if prev is not None and prev.output_width != layer.input_width:
            raise ValueError(f"layer {layer.id!r} input width {layer.input_width} != "
                             f"previous output width {prev.output_width}")
        prev = layer


def iter_netlist(model: ModelSpec, weights: WeightMatrix | None = None, mode: PruneMode | str | None = None):
    """Yield the netlist document line by line (without newlines)."""
    require_validated(model)
    if mode is None:
        mode = weights.mode if weights is not None and weights.mode is not None else PruneMode.KEEP_ZERO
    mode = PruneMode(mode)
    if weights is not None:
        weights.check(model)
    elif mode is PruneMode.REMOVE_ZERO:
        raise ValueError("remove_zero emission needs the pruned weights")
    g = model.gamma
    yield "netlist 1"
    yield (f"meta t_max={g.t_max} weight_bits={g.weight_bits} mode={mode.value} "
           f"density={FLOORPLAN_DENSITY} clock_hz={CLOCK_HZ} weights={int(weights is not None)}")
    yield from _MODULES
    yield f"inst top top parent=- input_width={model.input_width} output_width={model.output_width}"

    counts = Counter()
    offsets = model.layer_offsets()
    for li, layer in enumerate(model.layers):
        counts["layer"] += 1
        yield (f"inst L{li} layer parent=top id={layer.id} kind={layer.kind.value} "
               f"learning={layer.learning.value} input_shape={_shape(layer.input_shape)} "
               f"rails={layer.rails} kernel={_kernel(layer.kernel)} positions={layer.positions}")
        src = "x" if li == 0 else f"L{li - 1}.y"
        patch = layer.patch_index()
        per = layer.synapses_per_position
        if layer.kind.value == "cv":
            groups = [("G", "cvgroup", f"units={layer.cv_group.class_count}", layer.cv_group.units)]
        else:
            groups = [(f"M{m}", "minicolumn", f"neurons={len(mc.neurons)} wta_k={mc.wta_k}", mc.neurons)
                      for m, mc in enumerate(layer.minicolumns)]
        for p in range(layer.positions):
            base = offsets[li] + p * per
            lines = patch[p]
            n_index = 0
            for gname, gmod, gattrs, neurons in groups:
                counts[gmod] += 1
                gfull = f"L{li}.P{p}.{gname}"
                yield f"inst {gfull} {gmod} parent=L{li} {gattrs}"
                for neuron in neurons:
                    counts["neuron"] += 1
                    nname = f"L{li}.P{p}.N{n_index}"
                    n_index += 1
                    yield f"inst {nname} neuron parent={gfull} dendrites={len(neuron.dendrites)} alpha={neuron.alpha}"
                    for di, dend in enumerate(neuron.dendrites):
                        counts["dendrite"] += 1
                        dname = f"{nname}.D{di}"
                        yield f"inst {dname} dendrite parent={nname} segments={len(dend.segments)}"
                        for si, seg in enumerate(dend.segments):
                            counts["segment"] += 1
                            sname = f"{dname}.S{si}"
                            yield (f"inst {sname} segment parent={dname} kind={seg.kind.value} "
                                   f"response={seg.response.value} threshold={seg.threshold} "
                                   f"synapses={seg.synapses} offset={seg.offset}")
                            for y in range(seg.synapses):
                                site = base + y
                                line = lines[seg.offset + y]
                                if weights is None:
                                    yield f"inst {sname}.Y{y} synapse parent={sname} in={src}[{line}]"
                                    counts["synapse"] += 1
                                    continue
                                cut = weights.pruned[site]
                                if cut and mode is PruneMode.REMOVE_ZERO:
                                    continue
                                counts["synapse"] += 1
                                extra = " pruned=1" if cut else ""
                                yield (f"inst {sname}.Y{y} synapse parent={sname} in={src}[{line}] "
                                       f"w={weights.values[site]}{extra}")
                            base += seg.synapses

    for k in range(model.input_width):
        yield f"net x[{k}] driver=top"
    for li, layer in enumerate(model.layers):
        per_pos = layer.outputs_per_position
        for j in range(layer.output_width):
            yield f"net L{li}.y[{j}] driver=L{li}.P{j // per_pos}.N{j % per_pos}"
    for key in ("layer", "minicolumn", "cvgroup", "neuron", "dendrite", "segment", "synapse"):
        yield f"stat instances.{key} {counts[key]}"
    yield f"stat total_synapses {counts['synapse']}"


def emit_netlist(model: ModelSpec, weights: WeightMatrix | None = None,
                 mode: PruneMode | str | None = None) -> str:
    return "\n".join(iter_netlist(model, weights, mode)) + "\n"


@dataclass
class Netlist:
    meta: dict[str, str] = field(default_factory=dict)
    modules: dict[str, dict[str, str]] = field(default_factory=dict)
    instances: list[tuple[str, str, str, dict[str, str]]] = field(default_factory=list)
    nets: dict[str, list[str]] = field(default_factory=dict)
    stats: dict[str, int] = field(default_factory=dict)

    @property
    def total_synapses(self) -> int:
        return self.stats["total_synapses"]


def _kv(fields, lineno):
    out = {}
    for f in fields:
        if "=" not in f:
            raise ValueError(f"line {lineno}: expected key=value, got {f!r}")
        k, v = f.split("=", 1)
        out[k] = v
    return out


def parse_netlist(text: str) -> Netlist:
    nl = Netlist()
    lines = text.split("\n")
    if not lines or lines[0] != "netlist 1":
        raise ValueError("line 1: not a version-1 netlist document")
    for lineno, line in enumerate(lines[1:], 2):
        if not line:
            continue
        parts = line.split(" ")
        rec = parts[0]
        if rec == "meta":
            nl.meta.update(_kv(parts[1:], lineno))
        elif rec == "module":
            nl.modules[parts[1]] = _kv(parts[2:], lineno)
        elif rec == "inst":
            attrs = _kv(parts[3:], lineno)
            nl.instances.append((parts[1], parts[2], attrs.pop("parent"), attrs))
        elif rec == "net":
            nl.nets.setdefault(parts[1], []).append(_kv(parts[2:], lineno)["driver"])
        elif rec == "stat":
            nl.stats[parts[1]] = int(parts[2])
        else:
            raise ValueError(f"line {lineno}: unknown record {rec!r}")
    return nl


def check_connectivity(nl: Netlist) -> list[str]:
    """Problems found: nets without exactly one driver, dangling synapse inputs, orphans."""
    problems = []
    names = {name for name, *_ in nl.instances}
    for net, drivers in nl.nets.items():
        if len(drivers) != 1:
            problems.append(f"net {net} has {len(drivers)} drivers")
        elif drivers[0] not in names:
            problems.append(f"net {net} driven by unknown instance {drivers[0]}")
    for name, module, parent, attrs in nl.instances:
        if parent != "-" and parent not in names:
            problems.append(f"{name}: unknown parent {parent}")
        if module == "synapse" and attrs["in"] not in nl.nets:
            problems.append(f"{name}: input net {attrs['in']} is undeclared")
    return problems


def _ints(text: str):
    return tuple(int(v) for v in text.split("x"))


def netlist_to_model(nl: Netlist) -> tuple[ModelSpec, WeightMatrix | None]:
    """Rebuild the model (and weights, when present) from the instance tree."""
    gamma = GammaCycle(int(nl.meta["t_max"]), int(nl.meta["weight_bits"]))
    mode = PruneMode(nl.meta["mode"])
    children: dict[str, list] = {}
    for inst in nl.instances:
        children.setdefault(inst[2], []).append(inst)

    model = ModelSpec(gamma)
    weight_blocks = []
    has_weights = nl.meta.get("weights") == "1"
    for lname, _, _, la in children.get("top", []):
        neuron_specs_by_group = []
        first_pos = f"{lname}.P0."
        for gname, gmod, _, ga in children.get(lname, []):
            if not gname.startswith(first_pos):
                continue
            neurons = []
            for nname, _, _, na in children.get(gname, []):
                dends = []
                for dname, _, _, _ in children.get(nname, []):
                    segs = [SegmentSpec(sa["kind"], int(sa["synapses"]), int(sa["threshold"]),
                                        sa["response"], int(sa["offset"]))
                            for _, _, _, sa in children.get(dname, [])]
                    dends.append(DendriteSpec(tuple(segs)))
                neurons.append(NeuronSpec(tuple(dends), int(na["alpha"])))
            neuron_specs_by_group.append((gmod, ga, tuple(neurons)))
        kernel = None if la["kernel"] == "-" else tuple(tuple(int(v) for v in k.split(":"))
                                                         for k in la["kernel"].split("x"))
        common = dict(input_shape=_ints(la["input_shape"]), rails=int(la["rails"]), kernel=kernel,
                      learning=la["learning"], id=la["id"])
        if la["kind"] == "cv":
            layer = LayerSpec(cv_group=CVGroupSpec(neuron_specs_by_group[0][2]), **common)
        else:
            mcs = tuple(MinicolumnSpec(ns, int(ga["wta_k"])) for _, ga, ns in neuron_specs_by_group)
            layer = LayerSpec(minicolumns=mcs, **common)
        model = add_layer(model, layer)

        if has_weights:
            built = model.layers[-1]
            values = np.zeros(built.positions * built.synapses_per_position, dtype=np.int16)
            pruned = np.ones(len(values), dtype=bool)
            site = 0
            for gname, _, _, _ in children.get(lname, []):
                for nname, *_ in children.get(gname, []):
                    for dname, *_ in children.get(nname, []):
                        for sname, _, _, sa in children.get(dname, []):
                            for yname, _, _, ya in children.get(sname, []):
                                y = int(yname.rsplit(".Y", 1)[1])
                                values[site + y] = int(ya["w"])
                                pruned[site + y] = ya.get("pruned") == "1"
                            site += int(sa["synapses"])
            weight_blocks.append((values, pruned))
    weights = None
    if has_weights:
        weights = WeightMatrix(np.concatenate([v for v, _ in weight_blocks]), gamma.w_max,
                               np.concatenate([p for _, p in weight_blocks]), mode)
    return model, weights
