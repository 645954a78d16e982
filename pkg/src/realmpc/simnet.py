"""Deterministic synchronous network simulator.

Protocols are written as generator functions.  Whenever a protocol needs to
communicate it yields a list of requests (``Open``, ``Reveal``,
``SignExchange``, ``Send``) and receives the list of results.  One yield is
one synchronous round.  ``parallel`` and ``RoundPlan`` interleave several
generators so that requests issued at the same step share a round; this is
how independent sub-protocols are overlapped.

Costs follow an all-to-all topology: opening a value inside a group of ``k``
parties costs ``k(k-1)`` scalars, revealing to one member costs ``k - 1``,
and the sign-bit exchange costs ``k(k-1)`` bits.
"""
from __future__ import annotations

import graphlib
import inspect
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

import numpy as np

from .dealer import Dealer, DealerBundle
from .errors import PlanError, ProtocolAbort
from .shares import DEFAULT_DOMAIN, ShareDomain, share_additive, share_multiplicative


# --- requests ---------------------------------------------------------------

@dataclass
class Open:
    shares: np.ndarray
    group: tuple | None = None
    tag: str = ""
    mode: str = "add"


@dataclass
class Reveal:
    shares: np.ndarray
    target: int = 0
    group: tuple | None = None
    tag: str = ""


@dataclass
class SignExchange:
    shares: np.ndarray
    group: tuple | None = None
    tag: str = ""


@dataclass
class Send:
    """A value known to ``source`` is sent to every other group member."""

    value: np.ndarray
    source: int = 0
    group: tuple | None = None
    tag: str = ""


def exchange(*requests):
    results = yield list(requests)
    return results


def open_value(shares, group=None, tag=""):
    (v,) = yield [Open(shares, group, tag)]
    return v


def open_product(shares, group=None, tag=""):
    (v,) = yield [Open(shares, group, tag, mode="mul")]
    return v


def reveal(shares, target=0, group=None, tag=""):
    (v,) = yield [Reveal(shares, target, group, tag)]
    return v


# --- composition ------------------------------------------------------------

class RoundPlan:
    """A DAG of protocol steps.

    Each step is a callable receiving the results of its dependencies and
    returning either a protocol generator or a plain value (local step).  A
    step starts as soon as its dependencies have finished, so independent
    steps share rounds.
    """

    def __init__(self):
        self.steps: dict[str, Callable] = {}
        self.deps: dict[str, tuple] = {}

    def add(self, name: str, fn: Callable, deps=()) -> "RoundPlan":
        if name in self.steps:
            raise PlanError(f"duplicate step {name!r}")
        self.steps[name] = fn
        self.deps[name] = tuple(deps)
        return self

    def validate(self) -> None:
        for name, ds in self.deps.items():
            for d in ds:
                if d not in self.steps:
                    raise PlanError(f"step {name!r} depends on unknown step {d!r}")
        try:
            tuple(graphlib.TopologicalSorter(self.deps).static_order())
        except graphlib.CycleError as exc:
            raise PlanError(f"dependency cycle: {exc.args[1]}") from None

    def execute(self):
        """Generator driving all steps; returns ``{name: result}``."""
        self.validate()
        results: dict[str, Any] = {}
        waiting = list(self.steps)
        running: dict[str, Any] = {}
        pending: dict[str, list] = {}

        def start_ready():
            progressed = True
            while progressed:
                progressed = False
                for name in list(waiting):
                    if all(d in results for d in self.deps[name]):
                        waiting.remove(name)
                        out = self.steps[name](*[results[d] for d in self.deps[name]])
                        if not inspect.isgenerator(out):
                            results[name] = out
                            progressed = True
                            continue
                        try:
                            pending[name] = out.send(None)
                            running[name] = out
                        except StopIteration as stop:
                            results[name] = stop.value
                            progressed = True

        start_ready()
        while running:
            order = [k for k in self.steps if k in running]
            batch, sizes = [], []
            for k in order:
                batch.extend(pending[k])
                sizes.append(len(pending[k]))
            answers = yield batch
            pos = 0
            for k, size in zip(order, sizes):
                chunk = answers[pos:pos + size]
                pos += size
                try:
                    pending[k] = running[k].send(chunk)
                except StopIteration as stop:
                    results[k] = stop.value
                    del running[k]
                    del pending[k]
            start_ready()
        return results


def parallel(*gens):
    """Run protocol generators side by side; returns their results in order."""
    plan = RoundPlan()
    for i, g in enumerate(gens):
        plan.add(str(i), (lambda g=g: g))
    res = yield from plan.execute()
    return [res[str(i)] for i in range(len(gens))]


# --- transcript ---------------------------------------------------------------

@dataclass(frozen=True)
class ExposureEvent:
    kind: str
    party: str
    protocol: str
    count: int = 1


@dataclass
class View:
    round: int
    tag: str
    kind: str
    value: np.ndarray


@dataclass
class Transcript:
    n: int
    l: int = 64
    rounds: int = 0
    scalars: int = 0
    bits: int = 0
    offline_scalars: int = 0
    breakdown: dict = field(default_factory=dict)
    exposures: list = field(default_factory=list)
    views: list = field(default_factory=list)

    @property
    def comm_lunits(self) -> Fraction:
        return Fraction(self.scalars) + Fraction(self.bits, self.l)

    @property
    def offline_bits(self) -> int:
        return self.offline_scalars * self.l

    @property
    def online_bits(self) -> int:
        return self.scalars * self.l + self.bits

    def exposure_count(self, kind: str | None = None) -> int:
        return sum(e.count for e in self.exposures if kind is None or e.kind == kind)

    def _meter(self, tag: str, scalars: int = 0, bits: int = 0) -> None:
        self.scalars += scalars
        self.bits += bits
        row = self.breakdown.setdefault(tag or "-", [0, 0])
        row[0] += scalars
        row[1] += bits


# --- session ------------------------------------------------------------------

class Session:
    """One execution context: parties, dealer, randomness and transcript.

    All randomness derives from ``seed``: the dealer, the data owner who
    splits inputs, and each party get independent child streams.
    """

    def __init__(self, n: int, seed: int = 0, domain: ShareDomain = DEFAULT_DOMAIN,
                 bundle: DealerBundle | None = None, record_views: bool = False):
        if n < 2:
            from .errors import ConfigurationError
            raise ConfigurationError("a session needs at least 2 parties")
        self.n = n
        self.seed = seed
        self.domain = domain
        root = np.random.SeedSequence(seed)
        dealer_seq, owner_seq, *party_seqs = root.spawn(n + 2)
        self.dealer = Dealer(n, np.random.default_rng(dealer_seq), domain, bundle)
        self.owner_rng = np.random.default_rng(owner_seq)
        self.party_rngs = [np.random.default_rng(s) for s in party_seqs]
        self.transcript = Transcript(n, domain.l)
        self.record_views = record_views

    # convenience
    @property
    def zero_tol(self) -> float:
        return self.domain.zero_tol(self.n)

    @property
    def reshare_zero_tol(self) -> float:
        return self.domain.reshare_zero_tol(self.n)

    def share(self, secret) -> np.ndarray:
        return share_additive(secret, self.n, self.owner_rng, self.domain)

    def share_mul(self, secret, allow_zero: bool = False) -> np.ndarray:
        return share_multiplicative(secret, self.n, self.owner_rng, self.domain, allow_zero)

    def party_random(self, party: int, shape=()) -> np.ndarray:
        return self.domain.sample(self.party_rngs[party], shape)

    def expose(self, kind: str, party: str, protocol: str, count: int = 1) -> None:
        if count:
            self.transcript.exposures.append(ExposureEvent(kind, party, protocol, int(count)))

    def group(self, group) -> tuple:
        return tuple(range(self.n)) if group is None else tuple(group)

    # execution
    def run(self, gen):
        """Drive a protocol generator to completion and return its result."""
        if not inspect.isgenerator(gen):
            return gen
        try:
            batch = gen.send(None)
        except StopIteration as stop:
            self._sync_offline()
            return stop.value
        while True:
            if batch:
                self.transcript.rounds += 1
            answers = [self._serve(r) for r in batch]
            try:
                batch = gen.send(answers)
            except StopIteration as stop:
                self._sync_offline()
                return stop.value

    def _sync_offline(self):
        self.transcript.offline_scalars = self.dealer.offline_scalars

    def _record(self, tag, kind, value):
        if self.record_views:
            self.transcript.views.append(View(self.transcript.rounds, tag, kind, np.array(value, copy=True)))

    def _serve(self, req):
        g = list(self.group(req.group))
        k = len(g)
        t = self.transcript
        if isinstance(req, Open):
            sh = np.asarray(req.shares, dtype=np.float64)
            if sh.shape[0] != self.n:
                raise ProtocolAbort("open with missing party shares")
            size = int(np.prod(sh.shape[1:], dtype=int))
            val = sh[g].prod(axis=0) if req.mode == "mul" else sh[g].sum(axis=0)
            t._meter(req.tag, scalars=k * (k - 1) * size)
            self._record(req.tag, "open-" + req.mode, val)
            return val
        if isinstance(req, Reveal):
            sh = np.asarray(req.shares, dtype=np.float64)
            if sh.shape[0] != self.n:
                raise ProtocolAbort("reveal with missing party shares")
            size = int(np.prod(sh.shape[1:], dtype=int))
            val = sh[g].sum(axis=0)
            t._meter(req.tag, scalars=(k - 1) * size)
            self._record(req.tag, "reveal", val)
            return val
        if isinstance(req, SignExchange):
            sh = np.asarray(req.shares, dtype=np.float64)
            size = int(np.prod(sh.shape[1:], dtype=int))
            val = np.prod(np.sign(sh[g]), axis=0).astype(np.int64)
            t._meter(req.tag, bits=k * (k - 1) * size)
            self._record(req.tag, "signs", val)
            return val
        if isinstance(req, Send):
            val = np.asarray(req.value, dtype=np.float64)
            t._meter(req.tag, scalars=(k - 1) * int(val.size))
            self._record(req.tag, "send", val)
            return val
        raise PlanError(f"unknown request {type(req).__name__}")


def run_plan(session: Session, plan: RoundPlan) -> dict:
    return session.run(plan.execute())
