import numpy as np
import pytest

from realmpc import catalog
from realmpc.errors import PlanError, ProtocolAbort
from realmpc.simnet import Open, Reveal, RoundPlan, Session, SignExchange, exchange, open_value, parallel, run_plan


def test_open_cost_two_parties():
    s = Session(2)
    v = s.run(open_value(s.share(5.0)))
    assert v == pytest.approx(5.0)
    assert (s.transcript.rounds, s.transcript.scalars) == (1, 2)


def test_parallel_opens_share_a_round():
    s = Session(3)
    a, b = s.run(parallel(open_value(s.share(1.0)), open_value(s.share(2.0))))
    assert (a, b) == pytest.approx((1.0, 2.0))
    assert (s.transcript.rounds, s.transcript.scalars) == (1, 12)


def test_reveal_costs_n_minus_one():
    s = Session(4)
    (v,) = s.run(exchange(Reveal(s.share(3.0), 0)))
    assert v == pytest.approx(3.0)
    assert s.transcript.scalars == 3


def test_sign_exchange():
    s = Session(3)
    sh = s.share_mul(-2.5)
    (sg,) = s.run(exchange(SignExchange(sh)))
    assert sg == -1
    assert s.transcript.bits == 6


def test_missing_share_aborts():
    s = Session(3)
    with pytest.raises(ProtocolAbort):
        s.run(exchange(Open(s.share(1.0)[:2])))


def test_empty_plan_zero_rounds():
    s = Session(2)
    run_plan(s, RoundPlan())
    assert s.transcript.rounds == 0


def test_plan_cycle_rejected():
    p = RoundPlan()
    p.add("a", lambda b: 0, deps=("b",))
    p.add("b", lambda a: 0, deps=("a",))
    with pytest.raises(PlanError):
        p.validate()


def test_plan_interleaves_independent_steps():
    s = Session(2)
    x = s.share(2.0)

    def step():
        return open_value(x)

    def after(a):
        return open_value(s.share(a + 1))

    p = RoundPlan().add("a", step).add("b", step).add("c", after, deps=("a",))
    out = run_plan(s, p)
    assert out["c"] == pytest.approx(3.0)
    assert s.transcript.rounds == 2


def test_run_is_deterministic():
    a = catalog.execute("secsin", 3, None, {}, seed=11, shape=(4,))
    b = catalog.execute("secsin", 3, None, {}, seed=11, shape=(4,))
    assert np.array_equal(a.shares, b.shares)
    assert a.transcript.breakdown == b.transcript.breakdown


def test_sin_one_round_any_n():
    for n in (2, 3, 4, 5):
        assert catalog.execute("secsin", n).transcript.rounds == 1


def test_arctan_rounds_within_budget():
    r = catalog.execute("secarctan", 3).transcript.rounds
    assert r <= 6
