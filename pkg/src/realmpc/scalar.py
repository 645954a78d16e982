"""Number-valued protocols over additive shares.

Every protocol is a generator function ``proto(session, ...)`` consuming and
producing share arrays of shape ``(n, *shape)``; run it with
``session.run(proto(session, ...))`` or compose it inside another protocol
with ``yield from``.  Comparison protocols return a public array of signs.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

from .errors import DomainError, ProtocolAbort
from .simnet import Open, SignExchange, exchange, open_value, parallel, reveal


# --- small local helpers --------------------------------------------------

def _arr(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def public_shares(s, value, shape=(), group=None) -> np.ndarray:
    """A trivial sharing of a public value: the group leader holds it."""
    g = s.group(group)
    out = np.zeros((s.n,) + tuple(shape))
    out[g[0]] = value
    return out


def add_public(s, x, value, group=None) -> np.ndarray:
    out = _arr(x).copy()
    out[s.group(group)[0]] += value
    return out


def _zero_signs(s, v) -> np.ndarray:
    return np.where(np.abs(v) <= s.zero_tol, 0, np.sign(v)).astype(np.int64)


# --- multiplication family --------------------------------------------------

def sec_mul(s, x, y, group=None, tag="secmul"):
    """Beaver multiplication: one round, two openings."""
    x, y = np.broadcast_arrays(_arr(x), _arr(y))
    m = s.dealer.triple(x.shape[1:], group).use()
    e, f = yield from exchange(Open(x - m["a"], group, tag), Open(y - m["b"], group, tag))
    z = m["c"] + e * m["b"] + f * m["a"]
    z[s.group(group)[0]] += e * f
    return z


def sec_mul3(s, x, y, z, group=None, tag="secmul3"):
    """Product of three shared values in one round.

    With e = x - a, f = y - b, g = z - c opened,
    xyz = efg + ef*c + eg*b + fg*a + x*bc + y*ac + z*ab - 2*abc,
    where the three mixed products are Beaver multiplications running in the
    same round as the openings.
    """
    x, y, z = np.broadcast_arrays(_arr(x), _arr(y), _arr(z))
    m = s.dealer.triple3(x.shape[1:], group).use()

    def openings():
        return (yield from exchange(Open(x - m["a"], group, tag), Open(y - m["b"], group, tag),
                                    Open(z - m["c"], group, tag)))

    (e, f, g), xbc, yac, zab = yield from parallel(
        openings(), sec_mul(s, m["bc"], x, group, tag), sec_mul(s, m["ac"], y, group, tag),
        sec_mul(s, m["ab"], z, group, tag))
    out = e * f * m["c"] + e * g * m["b"] + f * g * m["a"] + xbc + yac + zab - 2.0 * m["abc"]
    out[s.group(group)[0]] += e * f * g
    return out


# --- resharing ----------------------------------------------------------------

def sec_mul_res(s, xm, tag="secmulres", record_zero=True):
    """Multiplicative to additive shares: one round."""
    xm = _arr(xm)
    m = s.dealer.reshare_pair(xm.shape[1:]).use()
    if record_zero:
        s.expose("mss-zero", "all", tag, int(np.any(xm == 0, axis=0).sum()))
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = yield from open_product(xm / m["mul"], tag=tag)
    return alpha * m["add"]


def open_product(shares, tag=""):
    (v,) = yield [Open(shares, None, tag, mode="mul")]
    return v


def _mul_res_log2(s, log2mag, tag):
    """Resharing for positive multiplicative shares given as log2 magnitudes.

    Each party sends the log2 magnitude and sign of its share divided by its
    mask share instead of the raw float, so exponentials of large additive
    shares never overflow locally.  The opened value is the same ratio.
    """
    m = s.dealer.reshare_pair(log2mag.shape[1:]).use()
    msg = log2mag - np.log2(np.abs(m["mul"]))
    (lsum,) = yield [Open(msg, None, tag)]
    # the sum above was metered as one opening; recover the signed ratio
    sign = np.prod(np.sign(m["mul"]), axis=0)
    alpha = sign * np.exp2(lsum)
    return alpha * m["add"]


def sec_add_res(s, x, tag="secaddres", zero_kind="mss-zero"):
    """Additive to multiplicative shares: two rounds.

    Party 1 learns x*c.  When that value is zero at share precision the
    secret is zero; party 1 then holds an exact zero share and, if
    ``zero_kind`` is set, an exposure event is recorded.
    """
    x = _arr(x)
    m = s.dealer.reshare_pair(x.shape[1:]).use()
    xc = yield from sec_mul(s, x, m["add"], tag=tag)
    v = yield from reveal(xc, 0, tag=tag)
    zero = np.abs(v) <= s.reshare_zero_tol
    v = np.where(zero, 0.0, v)
    if zero_kind:
        s.expose(zero_kind, "1", tag, int(zero.sum()))
    out = 1.0 / m["mul"]
    out[0] = v / m["mul"][0]
    return out


# --- comparison ---------------------------------------------------------------

def sec_cmp(s, x, y, tag="seccmp"):
    """Public sign of x - y via additive-to-multiplicative resharing: three rounds."""
    dm = yield from sec_add_res(s, _arr(x) - _arr(y), tag=tag, zero_kind=None)
    (sign,) = yield [SignExchange(dm, None, tag)]
    s.expose("equality", "all", tag, int((sign == 0).sum()))
    return sign


def sec_cmp_str(s, x, y, group=None, tag="seccmp-str"):
    """Public sign of x - y by opening t*(x - y) for a positive mask t: two rounds."""
    d = _arr(x) - _arr(y)
    t = s.dealer.mask(d.shape[1:], positive=True, group=group).use()["t"]
    td = yield from sec_mul(s, t, d, group, tag)
    v = yield from open_value(td, group, tag)
    sign = _zero_signs(s, v)
    s.expose("equality", "all", tag, int((sign == 0).sum()))
    return sign


# --- division -----------------------------------------------------------------

def sec_div(s, x, y, tag="secdiv"):
    """x / y through multiplicative shares: three rounds; exposes x = 0 to party 1."""
    xm, ym = yield from parallel(sec_add_res(s, x, tag=tag), sec_add_res(s, y, tag=tag))
    with np.errstate(divide="ignore", invalid="ignore"):
        q = xm / ym
    return (yield from sec_mul_res(s, q, tag=tag, record_zero=False))


def sec_div_str(s, x, y, group=None, tag="secdiv-str"):
    """x / y by opening t*y for a nonzero mask t: two rounds, no zero exposure."""
    x, y = np.broadcast_arrays(_arr(x), _arr(y))
    t = s.dealer.mask(y.shape[1:], positive=False, group=group).use()["t"]
    tx, ty = yield from parallel(sec_mul(s, t, x, group, tag), sec_mul(s, t, y, group, tag))
    v = yield from open_value(ty, group, tag)
    with np.errstate(divide="ignore", invalid="ignore"):
        return tx / v


def sec_recip_str(s, y, numerator=1.0, group=None, tag="secdiv-str"):
    """numerator / y for a public numerator: one masked product and one opening."""
    y = _arr(y)
    t = s.dealer.mask(y.shape[1:], positive=False, group=group).use()["t"]
    ty = yield from sec_mul(s, t, y, group, tag)
    v = yield from open_value(ty, group, tag)
    with np.errstate(divide="ignore", invalid="ignore"):
        return t * (np.asarray(numerator) / v)


# --- exponential, logarithm, powers ---------------------------------------------

def _check_base(base: float) -> float:
    base = float(base)
    if not (base > 0 and base != 1):
        raise DomainError(f"exponential/logarithm base must be positive and not 1, got {base}")
    return base


def sec_exp(s, x, base=np.e, tag="secexp"):
    """a**x: local exponentiation of additive shares, then one resharing round."""
    base = _check_base(base)
    x = _arr(x)
    return (yield from _mul_res_log2(s, x * np.log2(base), tag))


def _exp_ranged(s, x, base, bound, tag):
    n = s.n
    x = _arr(x)
    shape = x.shape[1:]
    mod = 2 * bound
    k = np.round(x / mod)
    y = x - mod * k
    js = np.arange(-n, n + 1)
    taus = bound - mod * js
    lhs = np.stack([x, x] + [y] * len(js), axis=1)
    rhs = np.stack([public_shares(s, bound, shape), public_shares(s, -bound + 1, shape)]
                   + [public_shares(s, tau, shape) for tau in taus], axis=1)
    signs = yield from sec_cmp_str(s, lhs, rhs, tag=tag)
    above = signs[0] >= 0
    below = signs[1] < 0
    inside = ~(above | below)
    z = js[0] - 1 + (signs[2:] < 0).sum(axis=0)
    ey = yield from sec_exp(s, y, base, tag=tag)
    with np.errstate(over="ignore"):
        scale = np.where(inside, np.power(base, mod * np.where(inside, z, 0).astype(np.float64)), 1.0)
    out = ey * scale
    grows = base > 1
    overflow = (above & grows) | (below & ~grows)
    underflow = ~inside & ~overflow
    return out, overflow, underflow


def sec_exp_ranged(s, x, base=np.e, bound=32, tag="secexp-ranged"):
    """a**x with range handling.

    Inputs outside [-bound + 1, bound) yield the public sentinel +inf or 0.
    In range, each party reduces its share modulo 2*bound; the integer number
    of wraps is recovered from batched threshold comparisons on the reduced
    sum and folded back as a public scale factor.
    """
    base = _check_base(base)
    out, over, under = yield from _exp_ranged(s, x, base, bound, tag)
    out = np.where(over | under, 0.0, out)
    out[0] = np.where(over, np.inf, out[0])
    return out


def sec_log(s, x, base=np.e, tag="seclog"):
    base = _check_base(base)
    xm = yield from sec_add_res(s, x, tag=tag)
    with np.errstate(divide="ignore"):
        return np.log(np.abs(xm)) / np.log(base)


def sec_pow(s, x, a: int, tag="secpow"):
    """x**a for an integer exponent: three rounds."""
    if int(a) != a:
        raise DomainError("secpow needs an integer exponent; use secpre for rationals")
    a = int(a)
    xm = yield from sec_add_res(s, x, tag=tag)
    if a <= 0 and np.any(xm[0] == 0):
        raise DomainError("0**0 is undefined" if a == 0 else "zero base with negative exponent")
    pm = xm ** a
    return (yield from sec_mul_res(s, pm, tag=tag, record_zero=False))


def branch_factor(a: Fraction, convention):
    """Public value of (-1)**a, or None when undefined.

    ``convention`` is ``"real"`` (real odd roots: defined when the reduced
    denominator is odd) or an explicit number.
    """
    if convention == "real":
        return float((-1) ** a.numerator) if a.denominator % 2 == 1 else None
    return None if convention is None else float(convention)


def sec_pre(s, x, a, convention="real", positive=False, tag="secpre"):
    """x**a for a rational exponent: sign test, |x|**a pipeline, public branch factor."""
    x = _arr(x)
    frac = Fraction(a).limit_denominator(10**6) if not isinstance(a, Fraction) else a
    factor = 1.0
    neg = np.zeros(x.shape[1:], dtype=bool)
    if not positive:
        sign = yield from sec_cmp_str(s, x, np.zeros_like(x), tag=tag)
        if np.any(sign == 0):
            raise DomainError("secpre requires a nonzero base")
        neg = sign < 0
        if np.any(neg):
            factor = branch_factor(frac, convention)
            if factor is None:
                raise DomainError(f"(-1)**{frac} is undefined under convention {convention!r}")
    xm = yield from sec_add_res(s, x, tag=tag)
    pm = np.abs(xm) ** float(frac)
    out = yield from sec_mul_res(s, pm, tag=tag, record_zero=False)
    return out * np.where(neg, factor, 1.0)


def sec_mult_mul(s, xs, tag="secmultmul"):
    """Product of m >= 3 shared values in three rounds, independent of m."""
    if len(xs) < 3:
        raise DomainError("secmultmul needs at least three operands")
    ms = yield from parallel(*[sec_add_res(s, x, tag=tag) for x in xs])
    prod = ms[0]
    for v in ms[1:]:
        prod = prod * v
    return (yield from sec_mul_res(s, prod, tag=tag, record_zero=False))


# --- trigonometry -----------------------------------------------------------------

def _angle_terms(s, theta, kind):
    """Multiplicative shares of every signed term of the angle-sum expansion.

    sin(sum) sums over subsets S of odd size, cos(sum) over even size, of
    (-1)**(|S| // 2) * prod_{i in S} sin(theta_i) * prod_{i not in S} cos(theta_i).
    Party 1 carries the sign.  Returns an array of shape (n, terms, *shape).
    """
    n = s.n
    sn, cs = np.sin(theta), np.cos(theta)
    parity = 1 if kind == "sin" else 0
    terms = []
    for bits in itertools.product((0, 1), repeat=n):
        size = sum(bits)
        if size % 2 != parity:
            continue
        t = np.where(np.array(bits, dtype=bool).reshape((n,) + (1,) * (theta.ndim - 1)), sn, cs)
        if (size // 2) % 2:
            t = t.copy()
            t[0] = -t[0]
        terms.append(t)
    return np.stack(terms, axis=1)


def _sin_cos(s, theta, kinds, tag):
    theta = _arr(theta)
    stacks = [_angle_terms(s, theta, k) for k in kinds]
    sizes = [st.shape[1] for st in stacks]
    allterms = np.concatenate(stacks, axis=1)
    add = yield from sec_mul_res(s, allterms, tag=tag)
    out, pos = [], 0
    for size in sizes:
        out.append(add[:, pos:pos + size].sum(axis=1))
        pos += size
    return out


TRIG_KINDS = ("sin", "cos", "tan", "cot", "sec", "csc")


def sec_trig(s, kind, theta, tag=None):
    """sin/cos in one round; quotient kinds add a masked division (three rounds)."""
    if kind not in TRIG_KINDS:
        raise DomainError(f"unknown trigonometric function {kind!r}")
    tag = tag or "sec" + kind
    if kind in ("sin", "cos"):
        (v,) = yield from _sin_cos(s, theta, (kind,), tag)
        return v
    if kind in ("tan", "cot"):
        sn, cs = yield from _sin_cos(s, theta, ("sin", "cos"), tag)
        num, den = (sn, cs) if kind == "tan" else (cs, sn)
        return (yield from sec_div_str(s, num, den, tag=tag))
    (v,) = yield from _sin_cos(s, theta, ("cos" if kind == "sec" else "sin",), tag)
    return (yield from sec_recip_str(s, v, tag=tag))


def sec_sin(s, theta, tag="secsin"):
    return (yield from sec_trig(s, "sin", theta, tag))


def sec_cos(s, theta, tag="seccos"):
    return (yield from sec_trig(s, "cos", theta, tag))


# --- arctangent ---------------------------------------------------------------------

def _arctan_iteration(s, num, den, u_next, level, tag):
    """One peel-off step among parties level..n (0-based ``level``..n-1).

    The running value is num/den (den is None for a plain shared value;
    num may be a public float).  Party ``level`` ends up holding
    r = (v - u)/(1 + v*u) in the clear, corrected by -sgn(r)*pi when u*r > 1.
    """
    g = tuple(range(level, s.n))
    lead = g[0]
    shape = u_next.shape[1:]
    t = s.dealer.mask(shape, positive=False, group=g).use()["t"]
    if den is None:
        td, tvu = yield from parallel(sec_mul(s, t, num - u_next, g, tag), sec_mul3(s, t, num, u_next, g, tag))
        tden = t + tvu
    elif np.ndim(num) == 0:
        tuq, tq, tu = yield from parallel(sec_mul3(s, t, u_next, den, g, tag), sec_mul(s, t, den, g, tag),
                                          sec_mul(s, t, u_next, g, tag))
        td = num * t - tuq
        tden = tq + num * tu
    else:
        tp, tuq, tq, tpu = yield from parallel(sec_mul(s, t, num, g, tag), sec_mul3(s, t, u_next, den, g, tag),
                                               sec_mul(s, t, den, g, tag), sec_mul3(s, t, num, u_next, g, tag))
        td = tp - tuq
        tden = tq + tpu
    v = yield from open_value(tden, g, tag)
    if np.any(np.abs(v) <= s.zero_tol):
        raise ProtocolAbort("1 + x*u vanished in an arctangent step", retryable=True)
    r = yield from reveal(td / v, lead, g, tag)
    r_sh = np.zeros((s.n,) + shape)
    r_sh[lead] = r
    tp = s.dealer.mask(shape, positive=True, group=g).use()["t"]
    prod = yield from sec_mul3(s, tp, r_sh, u_next, g, tag)
    sign = _zero_signs(s, (yield from open_value(prod - tp, g, tag)))
    return np.arctan(r) - np.where(sign > 0, np.sign(r) * np.pi, 0.0)


def sec_arctan_ratio(s, num, den=None, tag="secarctan"):
    """arctan(num/den) (or arctan(num) when ``den`` is None).

    Parties l+1..n pre-sample shares of u^(l+1) so that all n-1 peel-off
    iterations run concurrently; party n adds arctan(u^n).
    """
    n = s.n
    ref = _arr(num) if np.ndim(num) else _arr(den)
    shape = ref.shape[1:]
    us = [None]
    for level in range(1, n):
        u = np.zeros((n,) + shape)
        for j in range(level, n):
            u[j] = s.party_random(j, shape)
        us.append(u)
    steps = []
    for level in range(n - 1):
        if level == 0:
            steps.append(_arctan_iteration(s, num, den, us[1], 0, tag))
        else:
            steps.append(_arctan_iteration(s, us[level], None, us[level + 1], level, tag))
    parts = yield from parallel(*steps)
    out = np.zeros((n,) + shape)
    for level, val in enumerate(parts):
        out[level] = val
    out[n - 1] += np.arctan(us[n - 1][n - 1])
    return out


def sec_arctan(s, x, tag="secarctan"):
    return (yield from sec_arctan_ratio(s, _arr(x), None, tag))


def with_retry(factory, attempts: int = 3):
    """Rerun a protocol with fresh randomness after a retryable abort."""
    for k in range(attempts):
        try:
            return (yield from factory())
        except ProtocolAbort as exc:
            if not exc.retryable or k == attempts - 1:
                raise


def _sqrt_product(s, factors, signed=None, tag=""):
    """Additive shares of sqrt(|prod factors|), times sgn(signed) if given.

    All operands are reshared to multiplicative form in parallel; the root is
    taken share by share and one resharing round returns to additive form.
    """
    ops = list(factors) + ([signed] if signed is not None else [])
    ms = yield from parallel(*[sec_add_res(s, f, tag=tag) for f in ops])
    prod = np.ones_like(ms[0])
    for m in ms[:len(factors)]:
        prod = prod * np.sqrt(np.abs(m))
    if signed is not None:
        with np.errstate(divide="ignore", invalid="ignore"):
            prod = prod * np.sign(ms[-1])
    return (yield from sec_mul_res(s, prod, tag=tag, record_zero=False))


INV_TRIG_KINDS = ("arctan", "arccot", "arcsin", "arccos", "arcsec", "arccsc")


def sec_inv_trig(s, kind, x, tag=None):
    """Inverse trigonometric functions built on the arctangent protocol.

    arcsin x = 2 arctan(x / (1 + sqrt(1 - x^2)))       for |x| <= 1
    arccsc x = 2 arctan(1 / (x + sgn(x) sqrt(x^2 - 1))) for |x| >= 1
    with arccos, arcsec and arccot obtained as pi/2 minus their partner.
    """
    if kind not in INV_TRIG_KINDS:
        raise DomainError(f"unknown inverse trigonometric function {kind!r}")
    tag = tag or "sec" + kind
    x = _arr(x)
    half_pi = np.pi / 2
    if kind in ("arctan", "arccot"):
        v = yield from with_retry(lambda: sec_arctan_ratio(s, x, None, tag))
        return v if kind == "arctan" else add_public(s, -v, half_pi)
    if kind in ("arcsin", "arccos"):
        root = yield from _sqrt_product(s, [add_public(s, -x, 1.0), add_public(s, x, 1.0)], tag=tag)
        den = add_public(s, root, 1.0)
        v = 2.0 * (yield from with_retry(lambda: sec_arctan_ratio(s, x, den, tag)))
        return v if kind == "arcsin" else add_public(s, -v, half_pi)
    root = yield from _sqrt_product(s, [add_public(s, x, -1.0), add_public(s, x, 1.0)], signed=x, tag=tag)
    den = x + root
    v = 2.0 * (yield from with_retry(lambda: sec_arctan_ratio(s, 1.0, den, tag)))
    return v if kind == "arccsc" else add_public(s, -v, half_pi)
