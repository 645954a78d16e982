import numpy as np
import pytest

from realmpc.simnet import Session


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def run(proto, n, *secrets, seed=0, mul=False, **kw):
    """Share plain secrets, run ``proto(session, *shares, **kw)``, return (output shares, session)."""
    s = Session(n, seed=seed)
    shares = [s.share_mul(v) if mul else s.share(v) for v in secrets]
    return s.run(proto(s, *shares, **kw)), s


def opened(shares):
    return np.asarray(shares).sum(axis=0)
