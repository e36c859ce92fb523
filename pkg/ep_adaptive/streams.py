"""
Seed splitting.

Every random quantity is drawn from ``substream(seed, *key)`` where ``key`` is a
fixed tuple of non-negative integers naming its purpose, so results do not
depend on evaluation order or on the number of worker threads.
"""
from numpy.random import Generator, SeedSequence, default_rng

NULL_DRAWS = 0
GIBBS = 1
RESTARTS = 2
REPLICATES = 3
DESIGNS = 4


def seed_sequence(seed: int, *key: int) -> SeedSequence:
    return SeedSequence(seed, spawn_key=tuple(int(k) for k in key))


def substream(seed: int, *key: int) -> Generator:
    return default_rng(seed_sequence(seed, *key))


def child_seed(seed: int, *key: int) -> int:
    """
    64-bit integer seed derived from ``(seed, key)``, for handing to code that
    takes a plain seed
    """
    state, = seed_sequence(seed, *key).generate_state(1, dtype='uint64')
    return int(state)
