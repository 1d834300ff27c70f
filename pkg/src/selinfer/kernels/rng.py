"""Counter-based uniform generator (SplitMix64 keyed per stream).

Draw ``k`` of stream ``(seed, stream_id)`` is a pure function of the three
integers, so a block of replicates can be generated in one vectorized call
and yields exactly the values that per-replicate sequential draws would.
Only 64-bit integer arithmetic is involved, which makes the sequence
identical on every platform and for both backends.
"""

import numpy as np

from .._accel import dispatch, njit

MASK64 = (1 << 64) - 1
GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
STREAM_SALT = np.uint64(0xD1B54A32D192ED03)
S30 = np.uint64(30)
S27 = np.uint64(27)
S31 = np.uint64(31)
S11 = np.uint64(11)
ONE = np.uint64(1)
TWO_M53 = 2.0**-53


def _mix64_py(z):
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_key(seed, stream_id):
    """64-bit key of a stream; the state SplitMix64 starts from."""
    k = _mix64_py((seed & MASK64) + 0x9E3779B97F4A7C15)
    s = _mix64_py(((stream_id & MASK64) * 0xD1B54A32D192ED03) & MASK64)
    return _mix64_py(k ^ s)


def draw_bits_py(key, counter):
    return _mix64_py(key + (counter + 1) * 0x9E3779B97F4A7C15)


def _mix64_np(z):
    z = (z ^ (z >> S30)) * MIX1
    z = (z ^ (z >> S27)) * MIX2
    return z ^ (z >> S31)


def _keys_numpy(seed, stream_ids):
    with np.errstate(over="ignore"):
        k = _mix64_np(np.uint64(seed & MASK64) + GOLDEN)
        s = _mix64_np(np.asarray(stream_ids, dtype=np.uint64) * STREAM_SALT)
        return _mix64_np(k ^ s)


def _bits_numpy(seed, stream_ids, n_draws, offset=0):
    keys = _keys_numpy(seed, stream_ids)
    counters = np.arange(offset + 1, offset + n_draws + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix64_np(keys[:, None] + counters[None, :] * GOLDEN)


def _uniform_block_numpy(seed, stream_ids, n_draws, offset=0, open_interval=False):
    bits = _bits_numpy(seed, stream_ids, n_draws, offset) >> S11
    u = bits.astype(np.float64)
    if open_interval:
        u += 0.5
    return u * TWO_M53


@njit(cache=True)
def _mix64_nb(z):
    z = (z ^ (z >> S30)) * MIX1
    z = (z ^ (z >> S27)) * MIX2
    return z ^ (z >> S31)


@njit(cache=True)
def _uniform_block_kernel(seed, stream_ids, n_draws, offset, shift):
    k = _mix64_nb(seed + GOLDEN)
    out = np.empty((stream_ids.shape[0], n_draws))
    for r in range(stream_ids.shape[0]):
        s = _mix64_nb(stream_ids[r] * STREAM_SALT)
        key = _mix64_nb(k ^ s)
        for c in range(n_draws):
            ctr = np.uint64(offset + c) + ONE
            z = _mix64_nb(key + ctr * GOLDEN)
            out[r, c] = (np.float64(z >> S11) + shift) * TWO_M53
    return out


def _uniform_block_numba(seed, stream_ids, n_draws, offset=0, open_interval=False):
    ids = np.ascontiguousarray(np.asarray(stream_ids, dtype=np.uint64))
    return _uniform_block_kernel(
        np.uint64(seed & MASK64), ids, int(n_draws), int(offset), 0.5 if open_interval else 0.0
    )


uniform_block = dispatch(_uniform_block_numba, _uniform_block_numpy)
uniform_block.__doc__ = """Uniform draws for many streams at once.

Returns an array of shape ``(len(stream_ids), n_draws)`` whose row ``r`` holds
draws ``offset .. offset + n_draws - 1`` of stream ``(seed, stream_ids[r])``.
Values lie in ``[0, 1)``, or in ``(0, 1)`` with ``open_interval=True``
(used before inverse-transform normal sampling).
"""
