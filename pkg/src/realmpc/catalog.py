"""Protocol registry: stable string ids, sample inputs, plaintext oracles.

``execute`` is the single entry point used by the CLI, the cost audit and
the dealer dry run: it shares plaintext inputs, runs the protocol in a fresh
session and reconstructs the output.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import matrix as mx
from . import mss
from . import scalar as sc
from .cost import Measurement
from .dealer import Dealer, DealerBundle
from .errors import CatalogError, DomainError
from .shares import DEFAULT_DOMAIN, ShareDomain
from .simnet import Session, Transcript


@dataclass(frozen=True)
class Entry:
    pid: str
    family: str          # "scalar", "matrix" or "mss"
    arity: int | str     # number of inputs, or "m" for a variable count
    in_fmt: str          # "add", "mul" or "matrix"
    out_fmt: str         # "add", "mul", "sign", "matrix" or "eigen"
    build: Callable      # (session, shares, params) -> protocol generator
    oracle: Callable     # (values, params) -> plaintext result
    sample: Callable     # (rng, params, shape) -> list of plaintext inputs


REGISTRY: dict[str, Entry] = {}


def _reg(*args):
    e = Entry(*args)
    REGISTRY[e.pid] = e


def get(pid: str) -> Entry:
    try:
        return REGISTRY[pid]
    except KeyError:
        raise CatalogError(f"unknown protocol {pid!r}") from None


def protocol_ids() -> list[str]:
    return list(REGISTRY)


# --- samplers -------------------------------------------------------------------

def _unif(lo, hi):
    return lambda rng, shape: rng.uniform(lo, hi, shape)


def _nonzero(lo, hi):
    def f(rng, shape):
        return rng.uniform(lo, hi, shape) * rng.choice([-1.0, 1.0], shape)
    return f


def _loguni(lo, hi):
    return lambda rng, shape: np.exp(rng.uniform(np.log(lo), np.log(hi), shape))


def _inputs(*fs):
    return lambda rng, p, shape: [f(rng, shape) for f in fs]


def _m_inputs(f):
    return lambda rng, p, shape: [f(rng, shape) for _ in range(p.get("m", 3))]


def _mats(count_key=None, kind="general"):
    def f(rng, p, shape):
        d = p.get("d", 2)
        count = p.get("m", 3) if count_key else (2 if kind == "pair" else 1)
        return [random_matrix(rng, d, kind, shape) for _ in range(count)]
    return f


def random_matrix(rng, d, kind="general", shape=()):
    """Well-conditioned random test matrices: general, pair or symmetric."""
    A = rng.normal(size=tuple(shape) + (d, d))
    if kind == "symmetric":
        return (A + np.swapaxes(A, -1, -2)) / 2
    return A + d * np.eye(d)


# --- oracles --------------------------------------------------------------------------

def _exp_ranged_oracle(v, p):
    x = v[0]
    base = p.get("base", np.e)
    bound = p.get("bound", 32)
    grows = base > 1
    with np.errstate(over="ignore"):
        out = np.power(base, x)
    hi = x >= bound
    lo = x < -bound + 1
    out = np.where(hi, np.inf if grows else 0.0, out)
    return np.where(lo, 0.0 if grows else np.inf, out)


def _pre_oracle(v, p):
    x = v[0]
    a = Fraction(p.get("a", Fraction(1, 3))).limit_denominator(10**6)
    factor = sc.branch_factor(a, p.get("convention", "real"))
    mag = np.abs(x) ** float(a)
    if factor is None:
        return np.where(x < 0, np.nan, mag)
    return np.where(x < 0, factor * mag, mag)


_TRIG = {"sin": np.sin, "cos": np.cos, "tan": np.tan, "cot": lambda t: 1 / np.tan(t),
         "sec": lambda t: 1 / np.cos(t), "csc": lambda t: 1 / np.sin(t)}
_INV = {"arctan": np.arctan, "arccot": lambda x: np.pi / 2 - np.arctan(x), "arcsin": np.arcsin,
        "arccos": np.arccos, "arcsec": lambda x: np.arccos(1 / x), "arccsc": lambda x: np.arcsin(1 / x)}
_INV_SAMPLE = {"arctan": _unif(-10, 10), "arccot": _unif(-10, 10), "arcsin": _unif(-1, 1),
               "arccos": _unif(-1, 1), "arcsec": _nonzero(1, 10), "arccsc": _nonzero(1, 10)}


def _register_all():
    base = lambda p: p.get("base", np.e)  # noqa: E731
    _reg("secmul", "scalar", 2, "add", "add", lambda s, x, p: sc.sec_mul(s, *x),
         lambda v, p: v[0] * v[1], _inputs(_unif(-10, 10), _unif(-10, 10)))
    _reg("secmul3", "scalar", 3, "add", "add", lambda s, x, p: sc.sec_mul3(s, *x),
         lambda v, p: v[0] * v[1] * v[2], _inputs(*[_unif(-10, 10)] * 3))
    _reg("secmulres", "scalar", 1, "mul", "add", lambda s, x, p: sc.sec_mul_res(s, x[0]),
         lambda v, p: v[0], _inputs(_nonzero(0.1, 10)))
    _reg("secaddres", "scalar", 1, "add", "mul", lambda s, x, p: sc.sec_add_res(s, x[0]),
         lambda v, p: v[0], _inputs(_nonzero(0.1, 10)))
    _reg("seccmp", "scalar", 2, "add", "sign", lambda s, x, p: sc.sec_cmp(s, *x),
         lambda v, p: np.sign(v[0] - v[1]), _inputs(_unif(-10, 10), _unif(-10, 10)))
    _reg("seccmp-str", "scalar", 2, "add", "sign", lambda s, x, p: sc.sec_cmp_str(s, *x),
         lambda v, p: np.sign(v[0] - v[1]), _inputs(_unif(-10, 10), _unif(-10, 10)))
    _reg("secexp", "scalar", 1, "add", "add", lambda s, x, p: sc.sec_exp(s, x[0], base(p)),
         lambda v, p: np.power(base(p), v[0]), _inputs(_unif(-10, 10)))
    _reg("secexp-ranged", "scalar", 1, "add", "add",
         lambda s, x, p: sc.sec_exp_ranged(s, x[0], base(p), p.get("bound", 32)),
         _exp_ranged_oracle, _inputs(_unif(-40, 40)))
    _reg("seclog", "scalar", 1, "add", "add", lambda s, x, p: sc.sec_log(s, x[0], base(p)),
         lambda v, p: np.log(v[0]) / np.log(base(p)), _inputs(_loguni(1e-2, 1e2)))
    _reg("secpow", "scalar", 1, "add", "add", lambda s, x, p: sc.sec_pow(s, x[0], p.get("a", 3)),
         lambda v, p: np.power(v[0], float(p.get("a", 3))), _inputs(_nonzero(0.1, 5)))
    _reg("secpre", "scalar", 1, "add", "add",
         lambda s, x, p: sc.sec_pre(s, x[0], p.get("a", Fraction(1, 3)), p.get("convention", "real"),
                                    p.get("positive", False)),
         _pre_oracle, _inputs(_nonzero(0.1, 10)))
    _reg("secmultmul", "scalar", "m", "add", "add", lambda s, x, p: sc.sec_mult_mul(s, list(x)),
         lambda v, p: np.prod(np.stack(v), axis=0), _m_inputs(_nonzero(0.1, 5)))
    _reg("secdiv", "scalar", 2, "add", "add", lambda s, x, p: sc.sec_div(s, *x),
         lambda v, p: v[0] / v[1], _inputs(_unif(-10, 10), _nonzero(0.1, 10)))
    _reg("secdiv-str", "scalar", 2, "add", "add", lambda s, x, p: sc.sec_div_str(s, *x),
         lambda v, p: v[0] / v[1], _inputs(_unif(-10, 10), _nonzero(0.1, 10)))
    for kind, fn in _TRIG.items():
        _reg("sec" + kind, "scalar", 1, "add", "add",
             (lambda k: lambda s, x, p: sc.sec_trig(s, k, x[0]))(kind),
             (lambda f: lambda v, p: f(v[0]))(fn), _inputs(_unif(-np.pi, np.pi)))
    for kind, fn in _INV.items():
        _reg("sec" + kind, "scalar", 1, "add", "add",
             (lambda k: lambda s, x, p: sc.sec_inv_trig(s, k, x[0]))(kind),
             (lambda f: lambda v, p: f(v[0]))(fn), _inputs(_INV_SAMPLE[kind]))

    _reg("secmatmul1", "matrix", 2, "matrix", "matrix", lambda s, x, p: mx.sec_mat_mul1(s, *x),
         lambda v, p: v[0] @ v[1], _mats(kind="pair"))
    _reg("secmatmul2", "matrix", 2, "matrix", "matrix", lambda s, x, p: mx.sec_mat_mul2(s, *x),
         lambda v, p: v[0] @ v[1], _mats(kind="pair"))
    _reg("secmatinv", "matrix", 1, "matrix", "matrix", lambda s, x, p: mx.sec_mat_inv(s, x[0]),
         lambda v, p: np.linalg.inv(v[0]), _mats())
    _reg("secmultmatmul", "matrix", "m", "matrix", "matrix", lambda s, x, p: mx.sec_multi_mat_mul(s, list(x)),
         _chain_oracle, _mats(count_key="m"))
    _reg("seceigen", "matrix", 1, "matrix", "eigen", lambda s, x, p: mx.sec_eigen(s, x[0]),
         _eigen_oracle, _mats(kind="symmetric"))

    _reg("mss-add", "mss", 2, "mul", "mul", lambda s, x, p: mss.mss_add_sub(s, *x, op="+"),
         lambda v, p: v[0] + v[1], _inputs(_loguni(0.1, 10), _loguni(0.1, 10)))
    _reg("mss-sub", "mss", 2, "mul", "mul", lambda s, x, p: mss.mss_add_sub(s, *x, op="-"),
         lambda v, p: v[0] - v[1], _inputs(_loguni(10, 20), _loguni(0.1, 5)))
    _reg("mss-cmp", "mss", 2, "mul", "sign", lambda s, x, p: mss.mss_cmp(s, *x),
         lambda v, p: np.sign(v[0] - v[1]), _inputs(_nonzero(0.1, 10), _nonzero(0.1, 10)))
    _reg("mss-exp", "mss", 1, "mul", "mul", lambda s, x, p: mss.mss_exp(s, x[0], base(p)),
         lambda v, p: np.power(base(p), v[0]), _inputs(_nonzero(0.1, 5)))
    _reg("mss-log", "mss", 1, "mul", "mul", lambda s, x, p: mss.mss_log(s, x[0], base(p)),
         lambda v, p: np.log(v[0]) / np.log(base(p)), _inputs(_loguni(1.5, 100)))
    _reg("mss-pow", "mss", 1, "mul", "mul", lambda s, x, p: mss.mss_pow(s, x[0], p.get("a", 3)),
         lambda v, p: np.power(v[0], float(p.get("a", 3))), _inputs(_nonzero(0.1, 5)))
    for kind, fn in list(_TRIG.items()) + list(_INV.items()):
        sampler = _INV_SAMPLE.get(kind, _unif(0.1, 1.4))
        if kind in ("arctan", "arccot"):
            sampler = _nonzero(0.1, 10)
        elif kind in ("arcsin", "arccos"):
            sampler = _unif(0.05, 0.95)
        _reg("mss-" + kind, "mss", 1, "mul", "mul",
             (lambda k: lambda s, x, p: mss.mss_trig(s, k, x[0]))(kind),
             (lambda f: lambda v, p: f(v[0]))(fn), _inputs(sampler))


def _chain_oracle(v, p):
    out = v[0]
    for M in v[1:]:
        out = out @ M
    return out


def _eigen_oracle(v, p):
    vals = np.linalg.eigvalsh(v[0]) if np.allclose(v[0], np.swapaxes(v[0], -1, -2)) else np.linalg.eigvals(v[0])
    return np.sort(np.real(vals))[..., ::-1]


_register_all()


# --- execution --------------------------------------------------------------------------

@dataclass
class RunResult:
    pid: str
    n: int
    params: dict
    output: object                 # reconstructed plaintext (or public signs / eigen tuple)
    shares: object
    transcript: Transcript
    dealer: tuple                  # (prg, add, mul)
    session: Session = field(repr=False, default=None)

    def measurement(self) -> Measurement:
        t = self.transcript
        return Measurement(self.pid, self.n, self.params.get("d"), self.params.get("m"), t.l,
                           t.rounds, t.scalars, t.bits, *self.dealer, exposures=t.exposure_count())


def share_inputs(session: Session, entry: Entry, values) -> list:
    out = []
    for v in values:
        if entry.in_fmt == "mul":
            out.append(session.share_mul(v))
        else:
            out.append(session.share(v))
    return out


def reconstruct(entry: Entry, shares):
    if entry.out_fmt == "sign":
        return np.asarray(shares)
    if entry.out_fmt == "mul":
        return np.prod(shares, axis=0)
    if entry.out_fmt == "eigen":
        return (shares.values.sum(axis=0), shares.vectors.sum(axis=0))
    return np.sum(shares, axis=0)


def normalize_params(entry: Entry, params: dict | None, values=None) -> dict:
    p = dict(params or {})
    if entry.family == "matrix":
        p.setdefault("d", 2)
    if entry.arity == "m":
        p["m"] = len(values) if values is not None else p.get("m", 3)
    return p


def execute(pid: str, n: int, values=None, params: dict | None = None, seed: int = 0,
            domain: ShareDomain = DEFAULT_DOMAIN, bundle: DealerBundle | None = None,
            record_views: bool = False, shape=()) -> RunResult:
    """Share plaintext ``values``, run protocol ``pid`` and reconstruct the output.

    With ``values`` omitted, sample inputs are drawn from the protocol's
    default domain using a generator derived from ``seed``.
    """
    entry = get(pid)
    p = normalize_params(entry, params, values)
    if values is None:
        rng = np.random.default_rng([seed, 7])
        values = entry.sample(rng, p, shape)
        p = normalize_params(entry, p, values)
    if entry.family == "matrix" and values:
        p["d"] = int(np.shape(values[0])[-1])
    if isinstance(entry.arity, int) and len(values) != entry.arity:
        raise DomainError(f"{pid} takes {entry.arity} input(s), got {len(values)}")
    values = [np.asarray(v, dtype=np.float64) for v in values]
    s = Session(n, seed=seed, domain=domain, bundle=bundle, record_views=record_views)
    shares = share_inputs(s, entry, values)
    out = s.run(entry.build(s, shares, p))
    return RunResult(pid, n, p, reconstruct(entry, out), out, s.transcript,
                     s.dealer.counters.as_tuple(), s)


def oracle(pid: str, values, params: dict | None = None):
    entry = get(pid)
    return entry.oracle([np.asarray(v, dtype=np.float64) for v in values], normalize_params(entry, params, values))


def measure(pid: str, n: int, params: dict | None = None, seed: int = 0,
            domain: ShareDomain = DEFAULT_DOMAIN) -> Measurement:
    return execute(pid, n, None, params, seed, domain).measurement()


def dry_run_bundle(pid: str, n: int, params: dict, rng=None, domain: ShareDomain = DEFAULT_DOMAIN) -> DealerBundle:
    """Record the material a protocol requests, then deal it afresh."""
    probe = execute(pid, n, None, params, seed=0, domain=domain)
    rng = rng if rng is not None else np.random.default_rng()
    dealer = Dealer(n, rng, domain)
    dealer.replay(probe.session.dealer.issued)
    return dealer.snapshot(pid)
