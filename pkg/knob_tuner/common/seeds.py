import numpy as np


def derive_seed(*keys):
    """Derive a stable 32-bit seed from integer keys, e.g. (run seed, iteration)."""
    sequence = np.random.SeedSequence([int(k) & 0xFFFFFFFF for k in keys])
    return int(sequence.generate_state(1)[0])
