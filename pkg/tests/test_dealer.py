import numpy as np
import pytest

from realmpc import catalog
from realmpc.dealer import Dealer, deal, deal_zero_refresh
from realmpc.errors import CatalogError, ProtocolAbort
from realmpc.simnet import Session


@pytest.mark.parametrize("pid,n,want", [
    ("secmul", 3, (8, None, None)),
    ("secmulres", 2, (3, None, 1)),
    ("secdiv", 2, (19, None, None)),
])
def test_bundle_counters(pid, n, want):
    b = deal(pid, n, {}, np.random.default_rng(0))
    got = b.counters.as_tuple()
    for g, w in zip(got, want):
        if w is not None:
            assert g == w


def test_unknown_protocol():
    with pytest.raises(CatalogError):
        deal("secfoo", 2)


def test_zero_refresh_two_parties(rng):
    r1, r2 = deal_zero_refresh(2, rng)
    assert r1.value == -r2.value
    assert 2.0 ** -5 <= abs(r1.value) <= 2.0 ** 15


def test_triple_is_consistent(rng):
    d = Dealer(3, rng)
    m = d.triple((4,)).use()
    assert np.allclose(m["a"].sum(0) * m["b"].sum(0), m["c"].sum(0), rtol=1e-12, atol=1e-6)


def test_reshare_pair_links_formats(rng):
    d = Dealer(4, rng)
    m = d.reshare_pair((5,)).use()
    assert np.allclose(np.prod(m["mul"], axis=0), m["add"].sum(0), rtol=1e-9)


def test_material_single_use(rng):
    m = Dealer(2, rng).mask(())
    m.use()
    with pytest.raises(ProtocolAbort):
        m.use()


def test_bundle_drives_a_run():
    b = deal("secmul", 3, {}, np.random.default_rng(9))
    res = catalog.execute("secmul", 3, [np.array(3.0), np.array(5.0)], bundle=b)
    assert res.output == pytest.approx(15.0, abs=1e-6)
    assert res.dealer == (8, 6, 1)


def test_exhausted_bundle_aborts():
    b = deal("secmul", 2, {}, np.random.default_rng(9))
    s = Session(2, bundle=b)
    from realmpc.scalar import sec_mul
    x = s.share(1.0)
    s.run(sec_mul(s, x, x))
    with pytest.raises(ProtocolAbort):
        s.run(sec_mul(s, x, x))


def test_multiplicative_material_is_sampled_not_divided(rng):
    # every multiplicative share is a direct draw in the dealer's magnitude range
    m = Dealer(5, rng).reshare_pair((1000,)).use()["mul"]
    assert np.all(np.abs(m) >= 2.0 ** -5) and np.all(np.abs(m) <= 2.0 ** 15)
