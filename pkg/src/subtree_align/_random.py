import hashlib

import numpy as np


def as_generator(seed):
    """Accept an int, a SeedSequence, a Generator or None."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _key_int(key):
    if isinstance(key, (int, np.integer)):
        return int(key) & 0xFFFFFFFF
    # floats and strings hashed through their repr so 1.4 and 1.40 agree
    if isinstance(key, float):
        key = repr(float(key))
    digest = hashlib.sha256(str(key).encode()).digest()
    return int.from_bytes(digest[:4], "little")


def derived_seed(seed, *keys):
    """A SeedSequence determined only by ``seed`` and the given keys."""
    return np.random.SeedSequence(
        entropy=int(seed), spawn_key=tuple(_key_int(k) for k in keys)
    )
