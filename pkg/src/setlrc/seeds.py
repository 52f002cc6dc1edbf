"""Deterministic derivation of child seeds from a master seed."""

import numpy as np


def derive_seed(*parts):
    """Hash integer ``parts`` into a 63-bit seed.

    The same parts always give the same seed; different parts give
    statistically independent streams.
    """
    ss = np.random.SeedSequence([int(p) for p in parts])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
