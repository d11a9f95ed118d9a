import numpy as np

MASK_64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def derive_seed(root: int, index: int) -> int:
    """Seed of replicate ``index``: SplitMix64 finalizer of root XOR index * golden gamma (mod 2^64)."""
    if root < 0 or index < 0:
        raise ValueError(f"root seed and replicate index must be nonnegative, got {root}, {index}")
    z = (root ^ ((index * GOLDEN_GAMMA) & MASK_64)) & MASK_64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK_64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK_64
    return z ^ (z >> 31)


def replicate_rng(root: int, index: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root, index))
