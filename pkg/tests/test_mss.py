import math

import numpy as np
import pytest

from realmpc import catalog
from realmpc import mss

from conftest import run


def prod(x):
    return np.prod(x, axis=0)


def test_add_sub():
    out, s = run(lambda s, a, b: mss.mss_add_sub(s, a, b, "+"), 2, 2.0, 3.0, mul=True)
    assert prod(out) == pytest.approx(5.0, rel=1e-9)
    assert (s.transcript.rounds, s.transcript.comm_lunits) == (3, 9)
    out, _ = run(lambda s, a, b: mss.mss_add_sub(s, a, b, "-"), 3, 2.0, 3.0, mul=True)
    assert prod(out) == pytest.approx(-1.0, rel=1e-9)


def test_sub_to_zero_is_exposed():
    out, s = run(lambda s, a, b: mss.mss_add_sub(s, a, b, "-"), 3, 4.0, 4.0, mul=True)
    assert s.transcript.exposure_count("mss-zero") == 1


def test_cmp():
    out, s = run(mss.mss_cmp, 2, 4.0, 4.0, mul=True)
    assert out == 0
    assert s.transcript.comm_lunits == 10
    out, _ = run(mss.mss_cmp, 3, -1.0, 1.0, mul=True)
    assert out == -1


def test_exp_log():
    out, s = run(mss.mss_exp, 3, 1.0, mul=True, base=2.0)
    assert prod(out) == pytest.approx(2.0, rel=1e-9)
    assert s.transcript.rounds == 1
    out, s = run(mss.mss_log, 3, math.e, mul=True)
    assert prod(out) == pytest.approx(1.0, rel=1e-9)
    assert s.transcript.rounds == 2


def test_pow_is_local():
    out, s = run(mss.mss_pow, 3, 3.0, mul=True, a=2)
    assert prod(out) == pytest.approx(9.0, rel=1e-12)
    assert (s.transcript.rounds, s.transcript.scalars, s.transcript.bits) == (0, 0, 0)
    out, _ = run(mss.mss_pow, 2, 2.0, mul=True, a=-1)
    assert prod(out) == pytest.approx(0.5, rel=1e-12)


def test_trig_and_arctan():
    out, s = run(lambda s, x: mss.mss_trig(s, "sin", x), 3, math.pi / 2, mul=True)
    assert prod(out) == pytest.approx(1.0, rel=1e-9)
    assert s.transcript.rounds == 4
    out, _ = run(mss.mss_arctan, 2, 1.0, mul=True)
    assert prod(out) == pytest.approx(math.pi / 4, rel=1e-9)


@pytest.mark.parametrize("kind", ["tan", "cot", "sec", "csc"])
def test_quotient_trig_four_rounds(kind):
    out, s = run(lambda s, x: mss.mss_trig(s, kind, x), 3, 0.7, mul=True)
    want = {"tan": math.tan, "cot": lambda t: 1 / math.tan(t), "sec": lambda t: 1 / math.cos(t),
            "csc": lambda t: 1 / math.sin(t)}[kind](0.7)
    assert prod(out) == pytest.approx(want, rel=1e-9)
    assert s.transcript.rounds == 4


@pytest.mark.parametrize("pid", [p for p in catalog.protocol_ids() if p.startswith("mss-")])
def test_sandwich_identity(pid):
    entry = catalog.get(pid)
    rng = np.random.default_rng(3)
    vals = entry.sample(rng, {}, (20,))
    res = catalog.execute(pid, 3, vals, seed=3)
    want = catalog.oracle(pid, vals)
    assert np.allclose(res.output, want, rtol=1e-9, atol=1e-9)
