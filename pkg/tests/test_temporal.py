import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from neutnn.temporal import (ABSENT, GammaCycle, accuracy, encode_image, encode_timeseries,
                             is_absent, rand_index, round_half_up)


def test_gamma_defaults():
    g = GammaCycle()
    assert (g.t_max, g.weight_bits, g.w_max) == (8, 3, 7)
    assert GammaCycle(16, 4).w_max == 15


@pytest.mark.parametrize("t_max,bits", [(1, 3), (8, 0)])
def test_gamma_rejects_bad_values(t_max, bits):
    with pytest.raises(ValueError):
        GammaCycle(t_max, bits)


def test_absent_sorts_after_everything():
    assert sorted([ABSENT, 3, 0]) == [0, 3, ABSENT]
    assert is_absent(ABSENT) and not is_absent(7)


def test_round_half_up():
    assert round_half_up([0.5, 1.5, 2.5, 3.49]).tolist() == [1, 2, 3, 3]


def test_encode_extremes():
    v = encode_timeseries([1.0, 3.0, 2.0])
    assert v[1] == 0 and v[0] == 7


def test_encode_dual_rail_example():
    assert encode_timeseries([0.0, 0.5, 1.0], dual_rail=True).tolist() == [7, 0, 4, 4, 0, 7]


def test_encode_constant_sequence_spikes_at_zero():
    assert encode_timeseries([2.0, 2.0], dual_rail=True).tolist() == [0, 0, 0, 0]


@pytest.mark.parametrize("bad", [[], [1.0, float("nan")], [float("inf")]])
def test_encode_rejects(bad):
    with pytest.raises(ValueError):
        encode_timeseries(bad)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=40), st.integers(2, 16))
def test_encoding_properties(samples, t_max):
    g = GammaCycle(t_max)
    single = encode_timeseries(samples, g)
    order = np.argsort(samples, kind="stable")
    # monotone: larger value never spikes later
    assert np.all(np.diff(single[order]) <= 0)
    assert single.min() >= 0 and single.max() < t_max
    dual = encode_timeseries(samples, g, dual_rail=True)
    pos, neg = dual[0::2], dual[1::2]
    assert np.array_equal(pos, single)
    if max(samples) != min(samples):
        assert np.all(np.abs(pos + neg - (t_max - 1)) <= 1)


def test_encode_image_examples():
    assert np.all(encode_image(np.zeros((3, 3), dtype=np.uint8)) == ABSENT)
    img = np.array([[255, 128], [0, 1]], dtype=np.uint8)
    # (1 - 128/255) * 7 = 3.486, which rounds to 3
    assert encode_image(img).tolist() == [0, 3, ABSENT, 7]


def test_encode_image_stack_and_threshold():
    stack = np.array([[[10, 20]], [[30, 0]]], dtype=np.uint8)
    out = encode_image(stack, absent_threshold=15)
    assert out.shape == (2, 2)
    assert out[0, 0] == ABSENT and out[1, 1] == ABSENT
    with pytest.raises(ValueError):
        encode_image(np.zeros(5))


def test_rand_index_examples():
    assert rand_index([0, 1, 1, 2], [0, 1, 1, 2]) == 1.0
    assert rand_index([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
    assert rand_index([0, 0, 1, 1], [0, 1, 1, 1]) == 0.5


def test_rand_index_errors():
    with pytest.raises(ValueError):
        rand_index([0, 1], [0])
    with pytest.raises(ValueError):
        rand_index([0], [0])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=2, max_size=30))
def test_rand_index_matches_pair_oracle(pairs):
    a, b = zip(*pairs)
    r = rand_index(a, b)
    assert r == pytest.approx(oracles.rand_index(a, b))
    assert r == pytest.approx(rand_index(b, a))
    assert r == pytest.approx(rand_index([x + 10 for x in a], b))


def test_rand_index_large_path_agrees():
    rng = np.random.default_rng(0)
    a = rng.integers(0, 4, 2500)
    b = rng.integers(0, 3, 2500)
    from neutnn.temporal import _rand_index_contingency

    small_a, small_b = a[:300], b[:300]
    assert _rand_index_contingency(small_a, small_b) == pytest.approx(oracles.rand_index(small_a, small_b))
    assert 0.0 <= rand_index(a, b) <= 1.0


def test_accuracy():
    assert accuracy([1, 2, 3], [1, 0, 3]) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        accuracy([], [])
    with pytest.raises(ValueError):
        accuracy([1], [1, 2])
