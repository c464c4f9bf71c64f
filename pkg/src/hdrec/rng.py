"""Named random streams on a counter-based generator.

Every stochastic routine derives its own stream from (seed, *tags) through
``SeedSequence`` feeding Philox, so independent stages never share state and
per-angle work can run in any order with identical results.
"""

from __future__ import annotations

import numpy as np

# Tags namespace the sub-streams hanging off one user seed.
TAG_LOW_DOSE = 0
TAG_NORMAL_DOSE = 1
TAG_UNIFORM_BASELINE = 2
TAG_MODEL_INIT = 3
TAG_PATCHES = 4
TAG_SHUFFLE = 5
TAG_SPLIT = 6
TAG_PHANTOM = 7
TAG_SWEEP_POINT = 8


def stream(seed: int, *tags: int) -> np.random.Generator:
    """Return a Philox generator keyed by ``seed`` and an optional tag path."""
    seq = np.random.SeedSequence([int(seed), *map(int, tags)])
    return np.random.Generator(np.random.Philox(seq))
