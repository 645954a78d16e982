"""Share domain, additive/multiplicative splitting and reconstruction.

Protocol code works on *share arrays*: numpy arrays of shape ``(n, *shape)``
where row ``i`` holds the share of party ``i + 1``.  The small dataclasses
below are the per-party record view used at API boundaries and for
persistence.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, ReconstructionError


@dataclass(frozen=True)
class ShareDomain:
    """Numeric settings for one session.

    ``prg_low``/``prg_high`` bound the magnitude of every dealer or party
    generated random value; the sign is drawn uniformly.
    """

    precision: int = 64
    l: int = 64
    prg_low: float = 2.0**-5
    prg_high: float = 2.0**15

    def __post_init__(self):
        if self.precision != 64:
            raise ConfigurationError("only 64-bit floating point shares are implemented")
        if self.l < self.precision:
            raise ConfigurationError("wire width l must be at least the float precision")
        if not (0 < self.prg_low < self.prg_high):
            raise ConfigurationError("need 0 < prg_low < prg_high")

    def sample(self, rng: np.random.Generator, shape=(), positive: bool = False) -> np.ndarray:
        mag = rng.uniform(self.prg_low, self.prg_high, size=shape)
        if positive:
            return mag
        return np.where(rng.random(size=shape) < 0.5, -mag, mag)

    def zero_tol(self, n: int) -> float:
        """Largest magnitude treated as an exact zero after a masked product.

        Beaver-style products over floats carry an absolute error of roughly
        ``n * prg_high**2 * eps``; opened values below a small multiple of that
        are indistinguishable from zero at share precision.
        """
        return 16.0 * n * self.prg_high**2 * np.finfo(np.float64).eps

    def reshare_zero_tol(self, n: int) -> float:
        """Zero threshold for the opened x*c of additive-to-multiplicative resharing.

        The mask c is a product of n dealer draws, so |c| can reach
        ``prg_high**n`` and the product error scales with it.  Nonzero
        secrets below roughly ``16 * n * prg_high * eps`` relative to that
        bound can be mistaken for zero.
        """
        return 16.0 * n * self.prg_high ** (n + 1) * np.finfo(np.float64).eps


DEFAULT_DOMAIN = ShareDomain()


@dataclass(frozen=True)
class AdditiveShare:
    party: int
    value: float


@dataclass(frozen=True)
class MultiplicativeShare:
    party: int
    value: float


@dataclass(frozen=True)
class MatrixShare:
    party: int
    dim: int
    entries: np.ndarray


def _check_n(n: int) -> None:
    if n < 2:
        raise ConfigurationError(f"need at least 2 parties, got {n}")


def share_additive(secret, n: int, rng: np.random.Generator,
                   domain: ShareDomain = DEFAULT_DOMAIN) -> np.ndarray:
    """Vectorised additive split; returns an ``(n, *shape)`` share array."""
    _check_n(n)
    secret = np.asarray(secret, dtype=np.float64)
    head = domain.sample(rng, (n - 1,) + secret.shape)
    last = secret - head.sum(axis=0)
    return np.concatenate([head, last[None]], axis=0)


def share_multiplicative(secret, n: int, rng: np.random.Generator,
                         domain: ShareDomain = DEFAULT_DOMAIN,
                         allow_zero: bool = False) -> np.ndarray:
    """Vectorised multiplicative split.

    A zero secret cannot be hidden: some share has to be zero.  It is only
    produced when ``allow_zero`` is set, in which case the last party holds
    the zero.
    """
    _check_n(n)
    secret = np.asarray(secret, dtype=np.float64)
    if not allow_zero and np.any(secret == 0):
        raise DomainError("MSS cannot hide zero")
    head = domain.sample(rng, (n - 1,) + secret.shape)
    last = secret / head.prod(axis=0)
    return np.concatenate([head, last[None]], axis=0)


def split_additive(secret: float, n: int, rng: np.random.Generator,
                   domain: ShareDomain = DEFAULT_DOMAIN) -> list[AdditiveShare]:
    arr = share_additive(float(secret), n, rng, domain)
    return [AdditiveShare(i + 1, float(v)) for i, v in enumerate(arr)]


def split_multiplicative(secret: float, n: int, rng: np.random.Generator,
                         domain: ShareDomain = DEFAULT_DOMAIN,
                         allow_zero: bool = False) -> list[MultiplicativeShare]:
    arr = share_multiplicative(float(secret), n, rng, domain, allow_zero)
    return [MultiplicativeShare(i + 1, float(v)) for i, v in enumerate(arr)]


def _ordered_values(shares: Sequence, n: int | None) -> list[float]:
    parties = [s.party for s in shares]
    expected = n if n is not None else len(shares)
    if len(set(parties)) != len(parties):
        raise ReconstructionError("duplicate party index")
    if sorted(parties) != list(range(1, expected + 1)):
        raise ReconstructionError(f"need exactly one share for each of parties 1..{expected}")
    return [s.value for s in sorted(shares, key=lambda s: s.party)]


def reconstruct_additive(shares: Sequence[AdditiveShare], n: int | None = None) -> float:
    return float(np.sum(_ordered_values(shares, n)))


def reconstruct_multiplicative(shares: Sequence[MultiplicativeShare], n: int | None = None) -> float:
    return float(np.prod(_ordered_values(shares, n)))


def open_array(shares: np.ndarray) -> np.ndarray:
    """Plain reconstruction of an additive share array (test/oracle helper)."""
    return np.asarray(shares).sum(axis=0)


def open_mul_array(shares: np.ndarray) -> np.ndarray:
    return np.asarray(shares).prod(axis=0)


def matrix_shares(arr: np.ndarray) -> list[MatrixShare]:
    arr = np.asarray(arr)
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise ConfigurationError("matrix share array must have shape (n, d, d)")
    return [MatrixShare(i + 1, arr.shape[1], arr[i].copy()) for i in range(arr.shape[0])]


# --- persistence -----------------------------------------------------------

@dataclass(frozen=True)
class ShareRecord:
    session: str
    party: int
    role: str
    index: tuple
    value: float


def format_value(v: float) -> str:
    return format(float(v), ".17g")


def records_from_array(session: str, role: str, arr: np.ndarray) -> list[ShareRecord]:
    arr = np.asarray(arr, dtype=np.float64)
    out = []
    for p in range(arr.shape[0]):
        for idx in np.ndindex(arr.shape[1:]):
            out.append(ShareRecord(session, p + 1, role, tuple(int(i) for i in idx), float(arr[(p,) + idx])))
    return out


def array_from_records(records: Iterable[ShareRecord], role: str) -> np.ndarray:
    recs = [r for r in records if r.role == role]
    if not recs:
        raise ReconstructionError(f"no records with role {role!r}")
    n = max(r.party for r in recs)
    shape = tuple(max(r.index[k] for r in recs) + 1 for k in range(len(recs[0].index)))
    arr = np.full((n,) + shape, np.nan)
    for r in recs:
        arr[(r.party - 1,) + r.index] = r.value
    return arr


def dump_records(records: Iterable[ShareRecord], fh: IO[str]) -> None:
    for r in records:
        fh.write(json.dumps({"session": r.session, "party": r.party, "role": r.role,
                             "index": list(r.index), "value": format_value(r.value)}) + "\n")


def load_records(fh: IO[str]) -> list[ShareRecord]:
    out = []
    for line in fh:
        line = line.strip()
        if not line:
            continue
        d = json.loads(line)
        out.append(ShareRecord(d["session"], int(d["party"]), d["role"], tuple(d["index"]), float(d["value"])))
    return out
