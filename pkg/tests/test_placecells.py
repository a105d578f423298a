import numpy as np
import pytest

from neutnn.network import ABSENT, WeightMatrix, count_synapses, model_forward
from neutnn.placecells import (ColumnShape, Environment, PlaceCellConfig, build_orientation_model,
                               build_place_cells, environment_suite, load_environment, observation,
                               results_csv, run_orientation_task, save_environment, train_orientation)


def test_structural_counts():
    m = build_place_cells()
    layer = m.layers[0]
    assert [mc.synapse_count for mc in layer.minicolumns] == [454_400, 388_800, 388_800]
    assert count_synapses(m) == 1_232_000
    assert count_synapses(build_place_cells(PlaceCellConfig.desk())) == 80 + 60 + 60


def test_structure_of_a_neuron():
    neuron = build_place_cells(PlaceCellConfig.desk()).layers[0].minicolumns[0].neurons[0]
    assert len(neuron.dendrites) == 2
    segs = neuron.dendrites[0].segments
    assert [s.kind.value for s in segs] == ["proximal", "distal"]
    assert [s.offset for s in segs] == [0, 5]


def test_desk_place_cells_respond():
    m = build_place_cells(PlaceCellConfig(ColumnShape(2, 1, 2, 3), ColumnShape(2, 1, 2, 3)))
    w = WeightMatrix(np.full(m.synapse_sites, 7), 7)
    out = model_forward(m, w, np.array([0, 0, 0, 0, 0, 0]))[0]
    # each column keeps one winner; distal context pulls fire time to tick 0
    assert (out < ABSENT).sum() == 3


def test_environment_context_wraps():
    env = Environment("e", np.arange(9).reshape(3, 3), 9)
    assert env.context(0) == (6, 1, 3, 2)
    assert env.context(4) == (1, 5, 7, 3)
    with pytest.raises(ValueError):
        Environment("bad", np.array([[0, 5]]), 4)


def test_observation_layout():
    env = Environment("e", np.array([[0, 1], [2, 3]]), 4)
    v = observation(env, 0)
    assert np.flatnonzero(v == 0).tolist() == [0, 4 + 2, 8 + 1, 12 + 2, 16 + 1]
    assert (v == ABSENT).sum() == 15


def test_environment_file_round_trip(tmp_path):
    env = environment_suite(seed=3)[1]
    path = tmp_path / "env.txt"
    save_environment(env, path)
    back = load_environment(path)
    assert back.id == env.id and back.features == env.features
    assert back.grid.tolist() == env.grid.tolist()


def test_environment_file_errors(tmp_path):
    p = tmp_path / "e.txt"
    p.write_text("features 2\n0 1\n")
    with pytest.raises(ValueError, match="header"):
        load_environment(p)
    p.write_text("environment x\nfeatures 2\n0 1\n0\n")
    with pytest.raises(ValueError, match="equal length"):
        load_environment(p)
    p.write_text("environment x  # comment\nfeatures 2\n0 a\n")
    with pytest.raises(ValueError, match=":3:"):
        load_environment(p)


def test_suite_signatures():
    envs = environment_suite(seed=0)
    assert [e.id for e in envs] == ["ambiguous", "distinct0", "distinct1"]
    assert np.all(envs[0].grid == 0)
    for env in envs[1:]:
        sigs = {(int(env.grid.flat[i]),) + env.context(i) for i in range(env.locations)}
        assert len(sigs) == env.locations


@pytest.fixture(scope="module")
def trained_suite():
    envs = environment_suite(seed=0)
    model = build_orientation_model(25, 4)
    trained = {e.id: train_orientation(model, e, 16, seed=0) for e in envs}
    return model, trained, envs


def test_distinct_environments_are_memorized(trained_suite):
    model, trained, envs = trained_suite
    rows = dict((e, r) for e, _, r in run_orientation_task(model, trained, envs, 200, seed=1))
    assert rows["distinct0"] == 1.0 and rows["distinct1"] == 1.0
    assert rows["ambiguous"] < 0.2


def test_distal_context_helps(trained_suite):
    model, trained, envs = trained_suite
    on = run_orientation_task(model, trained, envs, 200, seed=1)
    off = run_orientation_task(model, trained, envs, 200, seed=1, distal=False)
    for (_, _, a), (_, _, b) in zip(on, off):
        assert a >= b
    assert on[1][2] > off[1][2]


def test_task_errors(trained_suite):
    model, trained, envs = trained_suite
    with pytest.raises(ValueError, match="zero trials"):
        run_orientation_task(model, trained, envs, 0)
    with pytest.raises(ValueError, match="no trained weights"):
        run_orientation_task(model, {}, envs, 5)
    small = environment_suite((2, 2), 4, distinct=0)
    with pytest.raises(ValueError, match="locations"):
        run_orientation_task(model, {"ambiguous": trained["ambiguous"]}, small, 5)


def test_results_csv():
    text = results_csv([("a", 10, 0.5)])
    assert text == "environment,trials,recall\na,10,0.500000\n"
