import pytest

from core.seeding import MASK_64, derive_seed, replicate_rng


def test_seeds_are_deterministic_and_distinct():
    seeds = [derive_seed(2024, i) for i in range(1000)]
    assert seeds == [derive_seed(2024, i) for i in range(1000)]
    assert len(set(seeds)) == len(seeds)
    assert all(0 <= seed <= MASK_64 for seed in seeds)


def test_root_seed_changes_every_stream():
    assert all(derive_seed(1, i) != derive_seed(2, i) for i in range(100))


def test_zero_is_a_fixed_point_of_the_mixer():
    assert derive_seed(0, 0) == 0


def test_large_roots_wrap_to_64_bits():
    assert 0 <= derive_seed(MASK_64, 12345) <= MASK_64


def test_negative_inputs_are_rejected():
    with pytest.raises(ValueError):
        derive_seed(-1, 0)
    with pytest.raises(ValueError):
        derive_seed(0, -1)


def test_replicate_generators_reproduce():
    assert replicate_rng(7, 3).random(5).tolist() == replicate_rng(7, 3).random(5).tolist()
    assert replicate_rng(7, 3).random() != replicate_rng(7, 4).random()
