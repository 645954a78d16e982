import json

import numpy as np
import pytest

from realmpc import cnn
from realmpc.errors import ModelError
from realmpc.simnet import Session


def test_plain_identity_fc_and_square():
    m = cnn.ModelSpec((3,), [cnn.Layer("fc", np.eye(3))])
    assert np.array_equal(cnn.infer_plain(m, [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])
    m = cnn.ModelSpec((1,), [cnn.Layer("square")])
    assert cnn.infer_plain(m, [3.0]) == pytest.approx([9.0])


def test_relu_of_negative():
    m = cnn.ModelSpec((2,), [cnn.Layer("relu")])
    r = cnn.run_inference(m, [-0.5, 0.25], n=3)
    assert r.logits == pytest.approx([0.0, 0.25], abs=1e-9)


def test_maxpool_window_uses_six_comparisons():
    m = cnn.ModelSpec((1, 2, 2), [cnn.Layer("maxpool", window=2)])
    r = cnn.run_inference(m, np.array([[[1.0, 5.0], [3.0, 2.0]]]), n=2)
    assert r.comparisons == 6 == cnn.window_pairs(2)
    assert r.logits.ravel() == pytest.approx([5.0])
    assert r.rounds == 2


def test_maxpool_argmax_matches_plain(rng):
    m = cnn.ModelSpec((2, 4, 4), [cnn.Layer("maxpool", window=2)])
    x = rng.normal(size=(2, 4, 4))
    r = cnn.run_inference(m, x, n=3)
    assert np.allclose(r.logits, r.plain, atol=1e-9)
    assert r.comparisons == 6 * 8


def test_sigmoid_extremes():
    m = cnn.ModelSpec((5,), [cnn.Layer("sigmoid")])
    r = cnn.run_inference(m, [-60.0, -3.0, 0.0, 2.0, 60.0], n=3)
    assert np.allclose(r.logits, r.plain, atol=1e-9)


def test_meanpool_is_local():
    m = cnn.ModelSpec((1, 2, 2), [cnn.Layer("meanpool", window=2)])
    r = cnn.run_inference(m, np.arange(4.0).reshape(1, 2, 2))
    assert r.logits.ravel() == pytest.approx([1.5])
    assert r.rounds == 0


@pytest.mark.parametrize("arch", sorted(cnn.ARCHITECTURES))
def test_architectures_match_plain(arch):
    for t in range(3):
        rng = np.random.default_rng(t)
        m = cnn.ARCHITECTURES[arch](rng)
        r = cnn.run_inference(m, rng.uniform(0, 1, m.input_shape), n=2, seed=t)
        assert r.max_error < 1e-4
        assert r.logits.shape == (10,)


@pytest.mark.parametrize("arch", sorted(cnn.ARCHITECTURES))
def test_rounds_do_not_depend_on_width(arch):
    rounds = set()
    for w in (2, 6):
        m = cnn.ARCHITECTURES[arch](np.random.default_rng(0), width=w)
        rounds.add(cnn.run_inference(m, np.ones(m.input_shape)).rounds)
    assert len(rounds) == 1


def test_golden_square_net():
    m = cnn.square_net(np.random.default_rng(2024))
    x = np.linspace(0, 1, 64).reshape(1, 8, 8)
    golden = [-0.2696045471935131, 0.5770849047632666, 0.11300940469507306, -0.36786900584243665,
              -0.7683159076236148, -0.16038191061244883, 0.007864569251326448, -0.5427680966382221,
              0.4303147878196084, 0.308093105439936]
    assert np.allclose(cnn.infer_plain(m, x), golden, rtol=1e-12)
    assert cnn.run_inference(m, x, n=2).max_error < 1e-4


def test_shape_errors():
    with pytest.raises(ModelError):
        cnn.ModelSpec((4,), [cnn.Layer("fc", np.ones((2, 3)))])
    with pytest.raises(ModelError):
        cnn.ModelSpec((1, 3, 3), [cnn.Layer("maxpool", window=2)])
    m = cnn.ModelSpec((3,), [cnn.Layer("relu")])
    s = Session(2)
    with pytest.raises(ModelError):
        s.run(cnn.infer_secure(s, m, s.share(np.ones(4))))


def test_model_json_round_trip(tmp_path):
    m = cnn.relu_pool_net(np.random.default_rng(1))
    path = tmp_path / "m.json"
    m.save(path)
    back = cnn.ModelSpec.load(path)
    x = np.random.default_rng(2).uniform(size=m.input_shape)
    assert np.array_equal(cnn.infer_plain(m, x), cnn.infer_plain(back, x))
    path.write_text(json.dumps({"input_shape": [2], "layers": [{"kind": "fc"}]}))
    with pytest.raises(ModelError):
        cnn.ModelSpec.load(path)
