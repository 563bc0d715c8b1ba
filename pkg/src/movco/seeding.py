"""Deterministic random-stream derivation.

One master seed governs an entire run. Every stochastic task (an
individual's fitness evaluation, one generation's genetic operators, one
SPSA iteration, ...) draws from its own substream derived from the master
seed and a small integer path, so parallel and serial execution produce
bit-identical results.

The path convention is::

    substream(seed, SPACE, *indices)

where SPACE is one of the constants below and the indices identify the
task (generation number, individual slot, iteration counter, ...).
Substreams are independent PCG64 generators obtained through
``numpy.random.SeedSequence`` spawn keys.
"""

from __future__ import annotations

import numpy as np

# Stream spaces. Keep values stable: they are part of the reproducibility
# contract of result files.
SPACE_INIT = 0        # initial population parameter draws, path (SPACE, individual)
SPACE_EVAL = 1        # fitness/objective sampling, path (SPACE, generation, individual)
SPACE_OPS = 2         # genetic operator draws, path (SPACE, generation)
SPACE_EXTRACT = 3     # final best-solution resampling, path (SPACE,)
SPACE_SPSA = 4        # SPSA perturbation draws, path (SPACE, iteration)
SPACE_OBJECTIVE = 5   # baseline objective sampling, path (SPACE, evaluation counter)
SPACE_CHECKPOINT = 6  # post-hoc metric sampling at budget checkpoints, path (SPACE, row)
SPACE_INSTANCE = 7    # per-instance seeds in a generated batch, path (SPACE, index)


def substream(seed: int, *path: int) -> np.random.Generator:
    """Return the generator for the substream identified by ``path``."""
    seq = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.PCG64(seq))


def derive_seed(seed: int, *path: int) -> int:
    """Collapse a substream identity into a single embeddable integer seed."""
    seq = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(p) for p in path))
    return int(seq.generate_state(1, dtype=np.uint64)[0])
