import numpy as np

from ncflo.linalg import haar_unitary
from ncflo.rng import RngStream, derive_seed, splitmix64


def test_same_seed_identical_draws():
    a = haar_unitary(8, RngStream(42))
    b = haar_unitary(8, RngStream(42))
    assert a.tobytes() == b.tobytes()


def test_child_streams_are_independent():
    root = RngStream(7)
    u1 = haar_unitary(4, root.child(0))
    u2 = haar_unitary(4, root.child(1))
    assert not np.allclose(u1, u2)
    # deriving the same child twice gives the same stream
    again = haar_unitary(4, RngStream(7).child(0))
    assert u1.tobytes() == again.tobytes()


def test_derive_seed_is_stable():
    # frozen values: the mixing function is part of the bundle contract
    assert derive_seed(0, 0) == derive_seed(0, 0)
    vals = {derive_seed(0, i) for i in range(100)}
    assert len(vals) == 100
    assert all(0 <= v < 2**64 for v in vals)
    assert splitmix64(0) == 16294208416658607535


def test_derive_seed_golden_values():
    # regression pin so old manifests stay reproducible
    assert derive_seed(0, 0) == 15204172177749531820
    assert derive_seed(12345, 6) == 7819233323111174187
