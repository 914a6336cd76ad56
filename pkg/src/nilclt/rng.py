"""Counter-based random streams keyed by (master seed, path id).

Each path owns a Philox stream whose counter starts at ``(0, 0, stream,
path_id)``, so the numbers a path sees never depend on how paths are
batched or spread over workers.
"""

import numpy as np

WALK_STREAM = 0
NOISE_STREAM = 1


def master_key(seed: int) -> np.ndarray:
    return np.random.SeedSequence(int(seed)).generate_state(2, np.uint64)


def path_generator(seed: int, path_id: int, stream: int = 0, key=None) -> np.random.Generator:
    if path_id < 0:
        raise ValueError("path id must be nonnegative")
    key = master_key(seed) if key is None else key
    return np.random.Generator(np.random.Philox(key=key, counter=[0, 0, int(stream), int(path_id)]))


def uniforms(seed: int, path_ids, size: int, stream: int = WALK_STREAM) -> np.ndarray:
    """``(len(path_ids), size)`` uniforms, row ``i`` from path ``path_ids[i]``."""
    key = master_key(seed)
    out = np.empty((len(path_ids), size))
    for i, pid in enumerate(path_ids):
        out[i] = path_generator(seed, pid, stream, key).random(size)
    return out


def normals(seed: int, path_ids, shape, stream: int = NOISE_STREAM) -> np.ndarray:
    key = master_key(seed)
    shape = tuple(shape)
    out = np.empty((len(path_ids),) + shape)
    for i, pid in enumerate(path_ids):
        out[i] = path_generator(seed, pid, stream, key).standard_normal(shape)
    return out
