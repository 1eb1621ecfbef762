"""Counter-based random sub-streams.

Every random event is keyed by integers (call, generation, operator,
individual, ...) so the stream it sees does not depend on how many other
events ran before it or on which thread ran them.
"""

import numpy as np


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


def call_seed(master_seed: int, call: int) -> int:
    """Seed of one independent call, re-runnable on its own."""
    return int(np.random.SeedSequence(int(master_seed), spawn_key=(int(call),)).generate_state(1)[0])
