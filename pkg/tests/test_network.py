import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from reference import random_neuron, scalar_layer
from neutnn.network import (ABSENT, CVGroupSpec, LayerSpec, MinicolumnSpec, ModelSpec, PruneMode,
                            WeightMatrix, WidthMismatchError, add_layer, count_synapses,
                            cv_group_classify, init_weights, k_wta, minicolumn_forward, model_forward,
                            output_width, predict, vote)
from neutnn.neuron import DendriteSpec, NeuronSpec, SegmentKind, SegmentSpec
from neutnn.presets import mnist_full_model
from neutnn.placecells import ColumnShape, PlaceCellConfig, build_place_cells


def point(n, theta=None, kind=SegmentKind.PROXIMAL, response="rnl", offset=0):
    return NeuronSpec((DendriteSpec((SegmentSpec(kind, n, theta, response, offset),)),))


def mc_layer(width, neurons, k=None, s=None, shape=None, rails=1, wta_k=1, seg=None, **kw):
    shape = shape or (width,)
    kernel = None if k is None else tuple((k, s) for _ in shape)
    patch = (int(np.prod([k] * len(shape))) if k else int(np.prod(shape))) * rails
    mc = MinicolumnSpec.uniform(point(seg or patch), neurons, wta_k)
    return LayerSpec(shape, minicolumns=(mc,), rails=rails, kernel=kernel, **kw)


def test_output_width_examples():
    assert output_width(mc_layer(10, 4, 10, 1)) == 4
    assert output_width(mc_layer(9, 2, 3, 3)) == 6
    layer = LayerSpec((28, 28), cv_group=CVGroupSpec.uniform(point(25), 10), kernel=((5, 1), (5, 1)))
    assert layer.positions == 576 == oracles.positions(28, 5, 1) ** 2
    assert output_width(layer) == 5760


def test_kernel_larger_than_input():
    with pytest.raises(ValueError, match="larger than input"):
        mc_layer(4, 2, 5, 1, seg=4)


def test_layer_validation():
    mc = MinicolumnSpec.uniform(point(3), 2)
    with pytest.raises(ValueError):
        LayerSpec((3,))
    with pytest.raises(ValueError):
        LayerSpec((3,), minicolumns=(mc,), cv_group=CVGroupSpec.uniform(point(3), 2))
    with pytest.raises(ValueError):
        LayerSpec((3,), minicolumns=(mc,), learning="supervised")
    with pytest.raises(ValueError):
        LayerSpec((3,), cv_group=CVGroupSpec.uniform(point(3), 2), learning="unsupervised")
    with pytest.raises(ValueError, match="each position sees"):
        LayerSpec((2,), minicolumns=(mc,))
    with pytest.raises(ValueError):
        MinicolumnSpec.uniform(point(3), 2, wta_k=3)
    two = NeuronSpec((DendriteSpec((SegmentSpec(),)), DendriteSpec((SegmentSpec(),))))
    with pytest.raises(ValueError, match="exactly one dendrite"):
        CVGroupSpec((two,))


def test_patch_index_layout():
    layer = mc_layer(None, 1, 2, 1, shape=(3, 3), rails=2)
    idx = layer.patch_index()
    assert idx.shape == (4, 8)
    # top-left field covers sites 0,1,3,4 with both rails interleaved
    assert idx[0].tolist() == [0, 1, 2, 3, 6, 7, 8, 9]
    assert idx[3].tolist() == [8, 9, 10, 11, 14, 15, 16, 17]


def test_add_layer_accepts_and_names():
    m = add_layer(ModelSpec(), mc_layer(10, 4))
    m = add_layer(m, mc_layer(4, 2))
    assert [l.id for l in m.layers] == ["layer0", "layer1"]
    assert m.layers[0].neurons[0].dendrites[0].segments[0].threshold == 35
    with pytest.raises(ValueError, match="duplicate"):
        add_layer(m, mc_layer(2, 2, id="layer1"))


def test_add_layer_576_chain():
    first = LayerSpec((28, 28), cv_group=CVGroupSpec.uniform(point(25), 1), kernel=((5, 1), (5, 1)))
    m = add_layer(ModelSpec(), first)
    assert m.output_width == 576
    m = add_layer(m, mc_layer(576, 3, seg=576))
    assert len(m.layers) == 2


def test_add_layer_diagnostic():
    first = LayerSpec((28, 28), cv_group=CVGroupSpec.uniform(point(25), 1), kernel=((5, 1), (5, 1)))
    m = add_layer(ModelSpec(), first)
    with pytest.raises(WidthMismatchError) as err:
        add_layer(m, mc_layer(100, 3, seg=100))
    text = str(err.value)
    assert "576" in text and "100" in text
    assert err.value.suggestions and err.value.expected == 576 and err.value.got == 100


@settings(max_examples=60, deadline=None)
@given(st.integers(4, 12), st.integers(1, 4), st.integers(1, 3), st.integers(1, 3), st.integers(1, 40))
def test_add_layer_predicate_is_exactly_width_equality(w, k, s, n, next_w):
    k = min(k, w)
    m = add_layer(ModelSpec(), mc_layer(w, n, k, s))
    nxt = mc_layer(next_w, 1)
    if m.output_width == next_w:
        assert len(add_layer(m, nxt).layers) == 2
    else:
        with pytest.raises(WidthMismatchError) as err:
            add_layer(m, nxt)
        # every structural suggestion names the target width
        assert err.value.suggestions


def test_k_wta_examples():
    assert k_wta([ABSENT] * 3, 1).tolist() == [ABSENT] * 3
    assert k_wta([3, 1, 1, ABSENT], 1).tolist() == [ABSENT, 1, ABSENT, ABSENT]
    assert k_wta([3, 1, 2, 5], 2).tolist() == [ABSENT, 1, 2, ABSENT]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.one_of(st.integers(0, 7), st.just(ABSENT)), min_size=1, max_size=10), st.integers(1, 10))
def test_k_wta_matches_oracle(times, k):
    k = min(k, len(times))
    out = k_wta(times, k)
    assert out.tolist() == oracles.keep_k_earliest(times, k)
    assert np.sum(out < ABSENT) <= k


def test_vote_and_cv_examples():
    assert vote([ABSENT] * 10) is None
    assert vote([5, 5, 5, 5, 5, 5, 5, 1, 5, 5]) == 7
    assert vote([4, 4, 9]) == 0
    group = CVGroupSpec.uniform(point(2, 7, response="snl"), 3)
    # unit0 has no weight, units 1 and 2 both fire at tick 2
    w = [0, 0, 7, 0, 7, 0]
    assert cv_group_classify(group, w, [2, 5]) == 1
    assert cv_group_classify(group, w, [2, 5], enables=[1, 0, 1]) == 2
    assert cv_group_classify(group, w, [ABSENT, ABSENT]) is None
    with pytest.raises(ValueError):
        cv_group_classify(group, w, [2, 5], enables=[1])


def test_minicolumn_forward_matches_oracle():
    rng = np.random.default_rng(3)
    mc = MinicolumnSpec(tuple(point(4, int(t)) for t in rng.integers(1, 20, 5)), wta_k=2)
    for _ in range(50):
        w = rng.integers(0, 8, 20)
        x = rng.integers(0, 8, 4)
        times = [oracles.fire_time(w[4 * i:4 * i + 4], x, True, n.dendrites[0].segments[0].threshold, 8)
                 for i, n in enumerate(mc.neurons)]
        assert minicolumn_forward(mc, w, x).tolist() == oracles.keep_k_earliest(times, 2)


@pytest.mark.parametrize("seed", range(25))
def test_vectorized_forward_matches_scalar(seed):
    rng = np.random.default_rng(seed)
    rails = int(rng.integers(1, 3))
    span = 4 * rails
    mcs = tuple(MinicolumnSpec(tuple(random_neuron(rng, span) for _ in range(rng.integers(1, 4))),
                               1) for _ in range(rng.integers(1, 3)))
    mcs = tuple(MinicolumnSpec(mc.neurons, int(rng.integers(1, len(mc.neurons) + 1))) for mc in mcs)
    first = LayerSpec((4, 5), minicolumns=mcs, rails=rails, kernel=((2, 1), (2, 2)))
    m = add_layer(ModelSpec(), first)
    second = LayerSpec((m.output_width,), cv_group=CVGroupSpec(tuple(
        NeuronSpec((random_neuron(rng, m.output_width).dendrites[0],)) for _ in range(3))))
    m = add_layer(m, second)
    w = init_weights(m, seed)
    x = rng.integers(0, 8, m.input_width)
    x[rng.random(x.size) < 0.3] = ABSENT
    outs = model_forward(m, w, x)
    off = m.layer_offsets()
    h = x
    for i, layer in enumerate(m.layers):
        h = scalar_layer(layer, w.values[off[i]:off[i + 1]], h)
        assert outs[i].tolist() == h.tolist()
    batch = np.stack([x, np.full_like(x, ABSENT)])
    both = model_forward(m, w, batch)
    assert both[-1][0].tolist() == outs[-1].tolist()
    assert np.all(both[-1][1] == ABSENT)


def test_forward_is_repeatable():
    m = add_layer(ModelSpec(), mc_layer(8, 4, 4, 2, wta_k=2))
    w = init_weights(m, 1)
    x = np.arange(8) % 8
    a = model_forward(m, w, x)
    b = model_forward(m, w, x)
    assert all(np.array_equal(p, q) for p, q in zip(a, b))


def test_forward_width_mismatch():
    m = add_layer(ModelSpec(), mc_layer(8, 2))
    with pytest.raises(ValueError, match="width"):
        model_forward(m, init_weights(m), np.zeros(7, dtype=int))


def test_predict_readouts():
    unit = point(1, 7, response="snl")
    layer = LayerSpec((2,), cv_group=CVGroupSpec.uniform(unit, 2), kernel=((1, 1),))
    m = add_layer(ModelSpec(), layer)
    # position 0: unit1 only; position 1: both units tie
    w = WeightMatrix([0, 7, 7, 7], 7)
    assert predict(m, w, [[0, 0]]).tolist() == [1]
    assert predict(m, w, [[ABSENT, ABSENT]]).tolist() == [-1]
    mc = add_layer(ModelSpec(), mc_layer(2, 3, seg=2))
    wm = WeightMatrix([0, 0, 7, 7, 7, 7], 7)
    assert predict(mc, wm, [[0, 0], [ABSENT, ABSENT]]).tolist() == [1, -1]


def test_weight_matrix_invariants():
    with pytest.raises(ValueError):
        WeightMatrix([0, 8], 7)
    with pytest.raises(ValueError):
        WeightMatrix([3], 7, [True])
    w = WeightMatrix([0, 3], 7, [True, False], "keep_zero")
    assert w.pruned_count == 1 and w.mode is PruneMode.KEEP_ZERO
    assert w.copy() == w


def test_count_synapses_full_scale_configs():
    assert count_synapses(mnist_full_model()) == 2_488_320
    cfg = PlaceCellConfig()
    assert cfg.column_a.synapse_count == 454_400
    assert cfg.column_b.synapse_count == 388_800
    assert count_synapses(build_place_cells(cfg)) == 1_232_000
    assert count_synapses(build_place_cells(PlaceCellConfig.desk())) == 200
    assert ColumnShape(3, 2, 2, 5).synapse_count == 60


def test_count_synapses_modes():
    m = add_layer(ModelSpec(), mc_layer(6, 2))
    w = WeightMatrix([0] * 6 + [1] * 6, 7, [True] * 6 + [False] * 6, "remove_zero")
    assert count_synapses(m, "keep_zero") == 12
    assert count_synapses(m, "remove_zero", w) == 6
    with pytest.raises(ValueError):
        count_synapses(m, "remove_zero")


def test_silent_input_gives_silent_output():
    m = add_layer(ModelSpec(), mc_layer(8, 3, 4, 2))
    m = add_layer(m, mc_layer(m.output_width, 2))
    outs = model_forward(m, init_weights(m, 0), np.full(8, ABSENT))
    assert all(np.all(o == ABSENT) for o in outs)
