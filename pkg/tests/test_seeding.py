import numpy as np

from switchdet.seeding import derive_rng


def test_same_keys_same_stream():
    a = derive_rng(7, "utt3", 50).standard_normal(8)
    b = derive_rng(7, "utt3", 50).standard_normal(8)
    assert np.array_equal(a, b)


def test_any_key_change_changes_stream():
    base = derive_rng(7, "utt3", 50).standard_normal(8)
    for other in (derive_rng(8, "utt3", 50), derive_rng(7, "utt4", 50),
                  derive_rng(7, "utt3", 51)):
        assert not np.array_equal(base, other.standard_normal(8))


def test_string_and_int_keys_mix():
    g = derive_rng(0, "a", 1, "b", 2)
    assert g.integers(1000) == derive_rng(0, "a", 1, "b", 2).integers(1000)
