"""Counter-based random streams keyed by (root seed, replicate, index).

Every variate used by the experiment harness is a pure function of
``(root, replicate, index, word)``, so draws do not depend on the order in
which replicates are evaluated or on how work is split across threads.

Constants (SplitMix64, Steele et al. 2014):

* increment ``GAMMA = 0x9E3779B97F4A7C15``
* finalizer multipliers ``0xBF58476D1CE4E5B9`` and ``0x94D049BB133111EB``
  with shifts 30, 27, 31.

``stream_key(root, rep, i) = mix(mix(mix(root) ^ rep) ^ i)`` and word ``j`` of
a stream is ``mix(key + (j + 1) * GAMMA)``; a word ``w`` becomes the uniform
``(w >> 11) * 2**-53`` in ``[0, 1)``.
"""

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z):
    """SplitMix64 finalizer on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _mix64_array(z):
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
        return z ^ (z >> np.uint64(31))


def stream_key(root, replicate, index):
    return mix64(mix64(mix64(root) ^ (replicate & MASK64)) ^ (index & MASK64))


def stream_keys(root, replicates, indices):
    """Array of keys, shape ``(len(replicates), len(indices))``."""
    reps = np.asarray(replicates, dtype=np.uint64)
    idx = np.asarray(indices, dtype=np.uint64)
    r = np.uint64(mix64(root))
    k = _mix64_array(r ^ reps)[:, None]
    return _mix64_array(k ^ idx[None, :])


def uniforms(keys, words):
    """Uniform doubles for ``keys[..., None]`` at word offsets ``words``."""
    keys = np.asarray(keys, dtype=np.uint64)
    w = np.asarray(words, dtype=np.uint64)
    with np.errstate(over="ignore"):
        state = keys[..., None] + (w + np.uint64(1)) * np.uint64(GAMMA)
    out = _mix64_array(state)
    return (out >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def normals(keys, first_word, count):
    """``count`` standard normals per key via Box-Muller on word pairs."""
    words = first_word + np.arange(2 * count)
    u = uniforms(keys, words)
    u1 = u[..., 0::2]
    u2 = u[..., 1::2]
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)


def derive_seed(root, *tags):
    """Derive a 64-bit seed for a numpy Generator from a root and integer tags."""
    key = mix64(root)
    for t in tags:
        key = mix64(key ^ (t & MASK64))
    return key
