"""Protocols whose inputs and outputs are multiplicative shares.

Each one brackets an additive-share protocol with resharing, except powers,
which are purely local.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError
from .scalar import (INV_TRIG_KINDS, TRIG_KINDS, _check_base, _sin_cos, sec_add_res, sec_cmp_str,
                     sec_inv_trig, sec_mul_res, sec_trig)
from .simnet import parallel


def mss_add_sub(s, xm, ym, op="+", tag=None):
    if op not in "+-":
        raise DomainError(f"op must be '+' or '-', got {op!r}")
    tag = tag or ("mss-add" if op == "+" else "mss-sub")
    ax, ay = yield from parallel(sec_mul_res(s, xm, tag=tag), sec_mul_res(s, ym, tag=tag))
    return (yield from sec_add_res(s, ax + ay if op == "+" else ax - ay, tag=tag))


def mss_cmp(s, xm, ym, tag="mss-cmp"):
    ax, ay = yield from parallel(sec_mul_res(s, xm, tag=tag), sec_mul_res(s, ym, tag=tag))
    return (yield from sec_cmp_str(s, ax, ay, tag=tag))


def mss_exp(s, xm, base=np.e, tag="mss-exp"):
    base = _check_base(base)
    ax = yield from sec_mul_res(s, xm, tag=tag)
    return np.power(base, ax)


def mss_log(s, xm, base=np.e, tag="mss-log"):
    base = _check_base(base)
    local = np.log(np.abs(np.asarray(xm, dtype=np.float64))) / np.log(base)
    return (yield from sec_add_res(s, local, tag=tag))


def mss_pow(s, xm, a: int):
    """Local only: the product of a-th powers is the a-th power of the product."""
    if int(a) != a:
        raise DomainError("mss_pow needs an integer exponent")
    return np.power(np.asarray(xm, dtype=np.float64), int(a))
    yield  # pragma: no cover - makes this a (zero-round) protocol generator


def mss_trig(s, kind, xm, tag=None):
    tag = tag or "mss-" + kind
    if kind not in TRIG_KINDS + INV_TRIG_KINDS:
        raise DomainError(f"unknown function {kind!r}")
    ax = yield from sec_mul_res(s, xm, tag=tag)
    if kind in ("tan", "cot", "sec", "csc"):
        # reshare sin and/or cos, then the quotient is local in this format
        parts = ("sin", "cos") if kind in ("tan", "cot") else (("cos",) if kind == "sec" else ("sin",))
        vals = yield from _sin_cos(s, ax, parts, tag)
        ms = yield from sec_add_res(s, np.stack(vals, axis=1), tag=tag)
        if kind == "tan":
            return ms[:, 0] / ms[:, 1]
        if kind == "cot":
            return ms[:, 1] / ms[:, 0]
        return 1.0 / ms[:, 0]
    if kind in TRIG_KINDS:
        v = yield from sec_trig(s, kind, ax, tag=tag)
    else:
        v = yield from sec_inv_trig(s, kind, ax, tag=tag)
    return (yield from sec_add_res(s, v, tag=tag))


def mss_arctan(s, xm, tag="mss-arctan"):
    return (yield from mss_trig(s, "arctan", xm, tag))
