"""Trusted dealer: offline correlated randomness with operation counters.

Counting conventions (per scalar element):

* drawing one random value costs one PRG call;
* an additive split among ``k`` parties draws ``k - 1`` shares (PRG) and
  fixes the last one with ``k - 1`` subtractions;
* every product the dealer forms costs one multiplication.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import ProtocolAbort
from .shares import DEFAULT_DOMAIN, ShareDomain, records_from_array


@dataclass
class Counters:
    prg: int = 0
    add: int = 0
    mul: int = 0

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.prg, self.add, self.mul)


@dataclass
class Material:
    """One item of offline material; each item may be consumed once."""

    kind: str
    shape: tuple
    group: tuple
    parts: dict
    sign: str = ""
    used: bool = False

    def use(self) -> dict:
        if self.used:
            raise ProtocolAbort(f"one-time {self.kind} material consumed twice")
        self.used = True
        return self.parts


@dataclass
class DealerBundle:
    protocol: str
    n: int
    items: list = field(default_factory=list)
    counters: Counters = field(default_factory=Counters)
    offline_scalars: int = 0

    def records(self, session: str = "bundle"):
        out = []
        for k, item in enumerate(self.items):
            for part, arr in item.parts.items():
                out.extend(records_from_array(session, f"{item.kind}-{part}#{k}", arr))
        return out


class Dealer:
    """Generates material on demand, or serves it from a pre-dealt bundle."""

    def __init__(self, n: int, rng: np.random.Generator,
                 domain: ShareDomain = DEFAULT_DOMAIN, bundle: DealerBundle | None = None):
        self.n = n
        self.rng = rng
        self.domain = domain
        self.counters = Counters()
        self.offline_scalars = 0
        self.issued: list[Material] = []
        self._queue = deque(bundle.items) if bundle is not None else None
        if bundle is not None:
            self.counters = Counters(*bundle.counters.as_tuple())
            self.offline_scalars = bundle.offline_scalars

    # -- primitive accounting -------------------------------------------
    def _group(self, group) -> tuple:
        return tuple(range(self.n)) if group is None else tuple(group)

    def _rand(self, shape, positive=False) -> np.ndarray:
        self.counters.prg += int(np.prod(shape, dtype=int))
        return self.domain.sample(self.rng, shape, positive)

    def _mul(self, a, b):
        self.counters.mul += int(np.size(a * b))
        return a * b

    def _split(self, value: np.ndarray, group: tuple) -> np.ndarray:
        k = len(group)
        size = int(np.size(value))
        head = self.domain.sample(self.rng, (k - 1,) + np.shape(value))
        self.counters.prg += (k - 1) * size
        self.counters.add += (k - 1) * size
        out = np.zeros((self.n,) + np.shape(value))
        out[list(group[:-1])] = head
        out[group[-1]] = value - head.sum(axis=0)
        self.offline_scalars += k * size
        return out

    def _emit(self, kind, shape, group, build, sign=""):
        group = self._group(group)
        shape = tuple(shape)
        if self._queue is not None:
            if not self._queue:
                raise ProtocolAbort(f"dealer bundle exhausted while requesting {kind}")
            item = self._queue.popleft()
            if (item.kind, item.shape, item.group, item.sign) != (kind, shape, group, sign):
                raise ProtocolAbort(f"bundle item mismatch: wanted {kind}{shape}, found {item.kind}{item.shape}")
        else:
            item = Material(kind, shape, group, build(shape, group), sign)
        self.issued.append(item)
        return item

    # -- material kinds -------------------------------------------------
    def triple(self, shape=(), group=None) -> Material:
        def build(shape, group):
            a = self._rand(shape)
            b = self._rand(shape)
            c = self._mul(a, b)
            return {"a": self._split(a, group), "b": self._split(b, group), "c": self._split(c, group)}
        return self._emit("triple", shape, group, build)

    def triple3(self, shape=(), group=None) -> Material:
        """Shares of a, b, c and of every product ab, ac, bc, abc."""
        def build(shape, group):
            a, b, c = self._rand(shape), self._rand(shape), self._rand(shape)
            ab = self._mul(a, b)
            ac = self._mul(a, c)
            bc = self._mul(b, c)
            abc = self._mul(ab, c)
            vals = {"a": a, "b": b, "c": c, "ab": ab, "ac": ac, "bc": bc, "abc": abc}
            return {k: self._split(v, group) for k, v in vals.items()}
        return self._emit("triple3", shape, group, build)

    def reshare_pair(self, shape=()) -> Material:
        """Additive and multiplicative shares of one random nonzero c.

        The multiplicative shares are drawn directly; c is their product.
        """
        def build(shape, group):
            mul = np.stack([self._rand(shape) for _ in range(self.n)])
            c = mul[0]
            for i in range(1, self.n):
                c = self._mul(c, mul[i])
            self.offline_scalars += self.n * int(np.prod(shape, dtype=int))
            return {"add": self._split(c, group), "mul": mul}
        return self._emit("reshare", shape, None, build)

    def mask(self, shape=(), positive=False, group=None) -> Material:
        sign = "positive" if positive else "nonzero"

        def build(shape, group):
            return {"t": self._split(self._rand(shape, positive), group)}
        return self._emit("mask", shape, group, build, sign)

    def matrix_triple(self, d: int, batch=()) -> Material:
        shape = tuple(batch) + (d, d)

        def build(shape, group):
            A = self._rand(shape)
            B = self._rand(shape)
            C = A @ B
            count = int(np.prod(batch, dtype=int))
            self.counters.mul += count * d**3
            self.counters.add += count * (d**3 - d**2)
            return {"A": self._split(A, group), "B": self._split(B, group), "C": self._split(C, group)}
        return self._emit("matrix-triple", shape, None, build)

    def zero_refresh(self, shape=()) -> np.ndarray:
        """Additive shares of exactly zero for re-randomising held shares."""
        def build(shape, group):
            head = self._rand((self.n - 1,) + tuple(shape))
            self.counters.add += (self.n - 1) * int(np.prod(shape, dtype=int))
            self.offline_scalars += self.n * int(np.prod(shape, dtype=int))
            return {"z": np.concatenate([head, -head.sum(axis=0)[None]])}
        return self._emit("zero", shape, None, build).use()["z"]

    def replay(self, requests) -> None:
        """Issue fresh material for a recorded sequence of requests."""
        for m in requests:
            if m.kind == "triple":
                self.triple(m.shape, m.group)
            elif m.kind == "triple3":
                self.triple3(m.shape, m.group)
            elif m.kind == "reshare":
                self.reshare_pair(m.shape)
            elif m.kind == "mask":
                self.mask(m.shape, m.sign == "positive", m.group)
            elif m.kind == "matrix-triple":
                self.matrix_triple(m.shape[-1], m.shape[:-2])
            elif m.kind == "zero":
                self.zero_refresh(m.shape)

    def snapshot(self, protocol: str) -> DealerBundle:
        """Fresh, unconsumed copies of everything issued so far."""
        items = [Material(m.kind, m.shape, m.group, {k: v.copy() for k, v in m.parts.items()}, m.sign)
                 for m in self.issued]
        return DealerBundle(protocol, self.n, items, Counters(*self.counters.as_tuple()),
                            self.offline_scalars)


def deal_zero_refresh(n: int, rng: np.random.Generator, domain: ShareDomain = DEFAULT_DOMAIN):
    from .shares import AdditiveShare
    z = Dealer(n, rng, domain).zero_refresh(())
    return [AdditiveShare(i + 1, float(v)) for i, v in enumerate(z)]


def deal(protocol: str, n: int, params: dict | None = None,
         rng: np.random.Generator | None = None, domain: ShareDomain = DEFAULT_DOMAIN) -> DealerBundle:
    """Pre-size and generate a bundle by dry-running the protocol.

    The dry run executes the protocol on sample inputs while a dealer records
    every request; the returned bundle holds that material, never consumed.
    """
    from .catalog import dry_run_bundle
    return dry_run_bundle(protocol, n, params or {}, rng, domain)
