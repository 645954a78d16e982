"""Matrix protocols on additive shares of square matrices.

Share arrays have shape ``(n, *batch, d, d)``.  Masking matrices used by the
inversion, chain product and eigen protocols are sampled by the parties
themselves; the dealer only provides triples and scalar masks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError, ProtocolAbort
from .scalar import sec_mul, sec_recip_str
from .simnet import Open, Reveal, Send, exchange, open_value, parallel

# masked products carry a relative error near 1e-11, so a truly singular ZX
# opens with a condition number around 1e11; anything above this is rejected
COND_LIMIT = 1e9
MASK_ATTEMPTS = 3


def _square(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim < 3 or X.shape[-1] != X.shape[-2]:
        raise ConfigurationError(f"expected square matrix shares, got shape {X.shape}")
    return X


def _check_pair(X, Y):
    X, Y = _square(X), _square(Y)
    if X.shape != Y.shape:
        raise ConfigurationError(f"shape mismatch {X.shape} vs {Y.shape}")
    return X, Y


def party_matrices(s, shape) -> np.ndarray:
    """Each party samples its own share of a random masking matrix."""
    return np.stack([s.party_random(i, shape) for i in range(s.n)])


def sec_mat_mul1(s, X, Y, tag="secmatmul1"):
    """Entrywise Beaver products of every x_jk * y_kl, then local sums."""
    X, Y = _check_pair(X, Y)
    prods = yield from sec_mul(s, X[..., :, :, None], Y[..., None, :, :], tag=tag)
    return prods.sum(axis=-2)


def sec_mat_mul2(s, X, Y, tag="secmatmul2"):
    """Matrix Beaver triple: open E = X - A and F = Y - B in one round."""
    X, Y = _check_pair(X, Y)
    m = s.dealer.matrix_triple(X.shape[-1], X.shape[1:-2]).use()
    E, F = yield from exchange(Open(X - m["A"], None, tag), Open(Y - m["B"], None, tag))
    Z = m["C"] + E @ m["B"] + m["A"] @ F
    Z[0] += E @ F
    return Z


def _well_conditioned(W) -> bool:
    with np.errstate(all="ignore"):
        c = np.linalg.cond(W)
    return bool(np.all(np.isfinite(c)) and np.all(c < COND_LIMIT))


def sec_mat_inv(s, X, tag="secmatinv"):
    """Inverse via a party-sampled mask Z: open ZX, output (ZX)^-1 Z_i.

    A numerically singular ZX triggers a fresh mask, at most three attempts.
    """
    X = _square(X)
    for _ in range(MASK_ATTEMPTS):
        Z = party_matrices(s, X.shape[1:])
        ZX = yield from sec_mat_mul2(s, Z, X, tag=tag)
        W = yield from open_value(ZX, None, tag)
        if _well_conditioned(W):
            return np.linalg.inv(W) @ Z
    raise ProtocolAbort("masked matrix stayed singular; input is likely not invertible")


def sec_multi_mat_mul(s, Xs, tag="secmultmatmul"):
    """Product X^1 ... X^m in five rounds regardless of m and d.

    Masks Z^0..Z^m turn each factor into T^j = (Z^(j-1))^-1 X^j Z^j, which
    is opened; the public product of the T^j is unmasked with Z^0 on the
    left and (Z^m)^-1 on the right.
    """
    Xs = [_square(X) for X in Xs]
    if len(Xs) < 2:
        raise ConfigurationError("need at least two matrices")
    for X in Xs[1:]:
        _check_pair(Xs[0], X)
    m = len(Xs)
    d = Xs[0].shape[-1]
    batch = Xs[0].shape[1:-2]
    Z = party_matrices(s, (m + 1,) + batch + (d, d))
    Xst = np.stack(Xs, axis=1)
    Zinv, XZ = yield from parallel(sec_mat_inv(s, Z, tag), sec_mat_mul2(s, Xst, Z[:, 1:], tag))
    T = yield from sec_mat_mul2(s, Zinv[:, :-1], XZ, tag)
    Tp = yield from open_value(T, None, tag)
    P = Tp[0]
    for j in range(1, m):
        P = P @ Tp[j]
    left = Z[:, 0] @ P
    return (yield from sec_mat_mul2(s, left, Zinv[:, -1], tag))


@dataclass
class EigenResult:
    values: np.ndarray   # (n, d) additive shares of eigenvalues, descending
    vectors: np.ndarray  # (n, d, d) additive shares; column j pairs with value j


def sec_eigen(s, X, tag="seceigen"):
    """Eigen-decomposition via the masked similar matrix t * P^-1 X P.

    Party 1 receives the masked matrix, solves it in the clear and sends back
    the scaled eigenvalues and the eigenvectors of the masked matrix.  The
    ratios of eigenvalues become known to party 1, which is recorded.
    """
    X = _square(X)
    if X.ndim != 3:
        raise ConfigurationError("seceigen handles one matrix at a time")
    d = X.shape[-1]
    t = s.dealer.mask((), positive=True).use()["t"]
    P = party_matrices(s, (d, d))

    def scaled_product():
        tX = yield from sec_mul(s, np.broadcast_to(t[:, None, None], X.shape), X, tag=tag)
        return (yield from sec_mat_mul2(s, tX, P, tag))

    tXP, Pinv, tinv = yield from parallel(scaled_product(), sec_mat_inv(s, P, tag), sec_recip_str(s, t, tag=tag))
    Ysh = yield from sec_mat_mul2(s, Pinv, tXP, tag)
    (Y,) = yield [Reveal(Ysh, 0, None, tag)]
    vals, vecs = _plain_eigen(Y)
    s.expose("eigen-ratio", "1", tag)
    (payload,) = yield [Send(np.concatenate([vals, vecs.ravel()]), 0, None, tag)]
    vals, vecs = payload[:d], payload[d:].reshape(d, d)
    return EigenResult(tinv[:, None] * vals[None, :], P @ vecs)


def _plain_eigen(Y):
    vals, vecs = np.linalg.eig(Y)
    scale = max(1.0, float(np.max(np.abs(vals))))
    if np.any(np.abs(vals.imag) > 1e-9 * scale):
        raise DomainError("matrix has complex eigenvalues; unsupported input")
    with np.errstate(all="ignore"):
        c = np.linalg.cond(vecs)
    if not np.isfinite(c) or c > COND_LIMIT:
        raise DomainError("matrix is not diagonalizable; unsupported input")
    vals, vecs = vals.real, vecs.real
    order = np.argsort(-vals, kind="stable")
    return vals[order], vecs[:, order]
