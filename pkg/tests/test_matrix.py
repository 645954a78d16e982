import numpy as np
import pytest

from realmpc import catalog
from realmpc import matrix as mx
from realmpc.errors import ConfigurationError, DomainError, ProtocolAbort
from realmpc.simnet import Session

from conftest import opened


def _run(fn, n, *mats, seed=0):
    s = Session(n, seed=seed)
    return s.run(fn(s, *[s.share(np.asarray(m, float)) for m in mats])), s


@pytest.mark.parametrize("fn", [mx.sec_mat_mul1, mx.sec_mat_mul2])
def test_identity_product(fn, rng):
    Y = rng.normal(size=(3, 3))
    out, s = _run(fn, 3, np.eye(3), Y)
    assert np.allclose(opened(out), Y, atol=1e-6)
    assert s.transcript.rounds == 1


def test_matmul_costs():
    _, s = _run(mx.sec_mat_mul1, 2, np.eye(2), np.eye(2))
    assert s.transcript.comm_lunits == 32
    _, s = _run(mx.sec_mat_mul2, 2, np.zeros((2, 2)), np.eye(2))
    assert s.transcript.comm_lunits == 16


def test_zero_matrix_product():
    out, _ = _run(mx.sec_mat_mul2, 3, np.zeros((2, 2)), np.ones((2, 2)))
    assert np.allclose(opened(out), 0.0, atol=1e-6)


def test_shape_mismatch():
    with pytest.raises(ConfigurationError):
        _run(mx.sec_mat_mul2, 2, np.eye(2), np.eye(3))


def test_inverse_of_scaled_identity():
    out, s = _run(mx.sec_mat_inv, 2, 2 * np.eye(2))
    assert np.allclose(opened(out), 0.5 * np.eye(2), atol=1e-9)
    assert s.transcript.rounds == 2
    _, s = _run(mx.sec_mat_inv, 3, 2 * np.eye(2))
    assert s.transcript.comm_lunits == 72


def test_singular_input_aborts():
    with pytest.raises(ProtocolAbort):
        _run(mx.sec_mat_inv, 2, np.ones((3, 3)))


def test_chain_of_identities():
    out, s = _run(lambda s, *X: mx.sec_multi_mat_mul(s, list(X)), 3, *[np.eye(3)] * 4)
    assert np.allclose(opened(out), np.eye(3), atol=1e-5)
    assert s.transcript.rounds == 5


def test_chain_matches_plain(rng):
    Xs = [catalog.random_matrix(rng, 3) for _ in range(3)]
    out, _ = _run(lambda s, *X: mx.sec_multi_mat_mul(s, list(X)), 2, *Xs)
    want = Xs[0] @ Xs[1] @ Xs[2]
    assert np.allclose(opened(out), want, rtol=1e-5, atol=1e-4)


def test_eigen_diagonal():
    res, s = _run(mx.sec_eigen, 3, np.diag([2.0, 3.0]))
    vals = res.values.sum(0)
    assert vals == pytest.approx([3.0, 2.0], abs=1e-5)
    assert s.transcript.exposure_count("eigen-ratio") == 1


def test_eigen_vectors_satisfy_definition(rng):
    X = catalog.random_matrix(rng, 3, "symmetric")
    res, _ = _run(mx.sec_eigen, 2, X)
    vals, vecs = res.values.sum(0), res.vectors.sum(0)
    resid = np.linalg.norm(X @ vecs - vecs * vals, axis=0) / np.linalg.norm(vecs, axis=0)
    assert resid.max() < 1e-4
    assert np.allclose(np.sort(vals), np.linalg.eigvalsh(X), atol=1e-5)


def test_eigen_rejects_complex_spectrum():
    with pytest.raises(DomainError):
        _run(mx.sec_eigen, 2, np.array([[0.0, -1.0], [1.0, 0.0]]))


@pytest.mark.parametrize("pid", ["secmatmul1", "secmatmul2", "secmatinv", "secmultmatmul", "seceigen"])
def test_rounds_independent_of_dimension(pid):
    rounds = {catalog.execute(pid, 2, None, {"d": d}, seed=d).transcript.rounds for d in (2, 4, 8)}
    assert len(rounds) == 1
