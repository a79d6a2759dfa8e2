"""
Seeding Utilities
Splittable per-trial seeds derived from one master seed
"""

from typing import Tuple

import numpy as np


def trial_sequence(master: int, point: int, trial: int) -> np.random.SeedSequence:
    """Seed sequence of one (sweep point, trial) cell"""
    return np.random.SeedSequence(master, spawn_key=(point, trial))


def trial_seeds(master: int, point: int, trial: int) -> Tuple[int, int]:
    """
    Independent (scene seed, noise seed) for one trial

    The pair depends only on (master, point, trial), so trials can run in
    any order or process.
    """
    scene, noise = trial_sequence(master, point, trial).generate_state(2, dtype=np.uint32)
    return int(scene), int(noise)
