from fractions import Fraction

import pytest

from realmpc import catalog
from realmpc.cost import Measurement, audit, known_protocols, predict
from realmpc.errors import CatalogError


def test_secmul_prediction():
    p = predict("secmul", 4)
    assert (p.rounds, p.comm_lunits()) == (1, 24)


def test_seccmp_prediction_has_bit_term():
    p = predict("seccmp", 2, l=64)
    assert p.scalars == 5 and p.bits == 2
    assert p.comm_lunits(64) == 5 + Fraction(2, 64)


def test_multmul_prediction():
    assert predict("secmultmul", 3, m=3).comm_lunits() == 48


def test_secdiv_dealer_prg():
    assert predict("secdiv", 2).prg == 19


def test_unknown_protocol():
    with pytest.raises(CatalogError):
        predict("secfoo", 2)


def test_matching_run_is_green():
    m = catalog.measure("secmul", 3)
    rep = audit(m, predict("secmul", 3))
    assert rep.ok and not rep.flagged


def test_report_only_row_flags_one_extra_round():
    pred = predict("secarctan", 3)
    m = Measurement("secarctan", 3, None, None, 64, 6, 0, 0, 0, 0, 0)
    rep = audit(m, pred, include_dealer=False)
    assert rep.ok and rep.flagged
    assert rep.check("rounds").delta == 1
    m = Measurement("secarctan", 3, None, None, 64, 7, 0, 0, 0, 0, 0)
    assert not audit(m, pred, include_dealer=False).ok


def test_strict_row_fails_on_any_mismatch():
    pred = predict("secmul", 2)
    m = Measurement("secmul", 2, None, None, 64, 1, 5, 0, 5, 3, 1)
    rep = audit(m, pred)
    assert not rep.ok
    assert rep.check("comm_lunits").status == "FAIL"


def test_mss_pow_zero_cells():
    rep = audit(catalog.measure("mss-pow", 3), predict("mss-pow", 3))
    assert rep.ok
    assert rep.check("comm_lunits").measured == 0 and rep.check("rounds").measured == 0


def test_records_are_stable():
    rep = audit(catalog.measure("seccmp", 2), predict("seccmp", 2))
    keys = [k for k, _ in rep.as_records()]
    assert keys[:4] == ["protocol", "n", "d", "m"]
    assert dict(rep.as_records())["comm_lunits_measured"] == "161/32"


def test_every_catalog_row_is_known():
    missing = [p for p in known_protocols() if p not in catalog.protocol_ids()]
    assert missing == []
