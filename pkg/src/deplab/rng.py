"""Counter-based random streams keyed by (master seed, stream path).

Every replicate of every experiment draws from its own Philox stream, so
results do not depend on how replicates are scheduled across workers.
"""

import numpy as np

# top-level stream domains
NULL = 0
ALTERNATIVE = 1
PERMUTATION = 2
TIE_BREAK = 3


def stream(seed, *path):
    """Return a Generator for the stream ``path`` under master ``seed``.

    The same ``(seed, *path)`` always yields a bitwise identical sequence.
    """
    if seed is None:
        raise ValueError("a seed is required")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))
