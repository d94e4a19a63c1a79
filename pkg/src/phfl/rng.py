"""Named, order-independent random streams.

Every draw comes from ``SeedSequence([seed, purpose, *keys])`` so the value
seen by a client in a round never depends on how many other draws were
made before it, or on which worker made them.
"""
import numpy as np

FADING = 1
RECEPTION = 2
BATCHES = 3
RANDOM_DELTA = 4
GEOMETRY = 5
MODEL_INIT = 6
PARTITION = 7
DATASET = 8
PROFILES = 9


def stream(seed, purpose, *keys):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(purpose), *map(int, keys)])))
