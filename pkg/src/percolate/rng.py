"""Counter-based pseudorandom uniforms.

Every random quantity in this package is a pure function of a 64-bit seed
and a small tuple of integer labels (vertex ids, edge endpoints, trial
indices).  This makes realizations reproducible, order-independent, and --
crucially for the coupling constructions -- lets two models share the exact
same uniform for the same edge.

The mixer is the splitmix64 finalizer applied to an absorb chain.  It is
statistical-quality only, not cryptographic.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError

_MASK = (1 << 64) - 1
_IV = 0x6A09E667F3BCC909
_GOLD = 0x9E3779B97F4A7C15
_P1 = 0xBF58476D1CE4E5B9
_P2 = 0x94D049BB133111EB
_INV53 = 2.0 ** -53

# Stream tags: distinct constants so that derived streams never collide.
COST_STREAM = 0x636F73745D17A1B3
TRIAL_STREAM = 0x747269616CF00D2B
POSITION_STREAM = 0x706F7369742E3D91


def _mix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _P1) & _MASK
    z = ((z ^ (z >> 27)) * _P2) & _MASK
    return z ^ (z >> 31)


def _absorb(h: int, w: int) -> int:
    return _mix64(((h + _GOLD) & _MASK) ^ (w & _MASK))


def _hash_words(seed: int, *words: int) -> int:
    h = _mix64((seed & _MASK) ^ _IV)
    for w in words:
        h = _absorb(h, w)
    return h


def _u01(h: int) -> float:
    return (h >> 11) * _INV53


def stream_seed(seed: int, tag: int) -> int:
    """Derive an independent child seed for a named stream."""
    return _hash_words(seed, tag)


def trial_seed(seed: int, index: int) -> int:
    """Seed for the index-th independent Monte Carlo trial."""
    return _hash_words(seed, TRIAL_STREAM, index)


def edge_uniform(seed: int, u: int, v: int) -> float:
    """Uniform in [0, 1) attached to the unordered pair {u, v}.

    Symmetric in (u, v) and deterministic in (seed, {u, v}).
    """
    if u == v:
        raise DomainError(f"edge_uniform needs two distinct endpoints, got u == v == {u}")
    lo, hi = (u, v) if u < v else (v, u)
    return _u01(_hash_words(seed, lo, hi))


def vertex_uniform(seed: int, index: int) -> float:
    """Uniform in [0, 1) attached to a single vertex."""
    return _u01(_hash_words(seed, index))


def position_uniform(seed: int, index: int, axis: int) -> float:
    """Uniform in [0, 1) for coordinate `axis` of vertex `index`."""
    return _u01(_hash_words(stream_seed(seed, POSITION_STREAM), index, axis))


# ---------------------------------------------------------------------------
# Vectorized variants.  Bit-identical to the scalar functions above; the
# equivalence is pinned by tests.
# ---------------------------------------------------------------------------

def _mix64_vec(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(_P1)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(_P2)
    return z ^ (z >> np.uint64(31))


def _absorb_vec(h: np.ndarray, w: np.ndarray) -> np.ndarray:
    return _mix64_vec((h + np.uint64(_GOLD)) ^ w)


def seed_state(seed: int) -> np.uint64:
    """Pre-mixed per-seed state reused across vectorized calls."""
    return np.uint64(_mix64((seed & _MASK) ^ _IV))


def absorb_indices(state: np.uint64, idx: np.ndarray) -> np.ndarray:
    """Absorb one word per element; used to share hash prefixes."""
    idx = np.asarray(idx, dtype=np.uint64)
    return _absorb_vec(np.broadcast_to(state, idx.shape).copy(), idx)


def uniforms_from_states(states: np.ndarray, words: np.ndarray) -> np.ndarray:
    """Finish a hash chain with one more absorbed word, as uniforms."""
    h = _absorb_vec(states, np.asarray(words, dtype=np.uint64))
    return (h >> np.uint64(11)).astype(np.float64) * _INV53


def edge_uniforms(seed: int, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
    """Vectorized `edge_uniform` over aligned endpoint arrays."""
    us = np.asarray(us, dtype=np.int64)
    vs = np.asarray(vs, dtype=np.int64)
    if np.any(us == vs):
        raise DomainError("edge_uniforms called with a self-pair")
    lo = np.minimum(us, vs).astype(np.uint64)
    hi = np.maximum(us, vs).astype(np.uint64)
    state = seed_state(seed)
    return uniforms_from_states(absorb_indices(state, lo), hi)


def vertex_uniforms(seed: int, indices: np.ndarray) -> np.ndarray:
    """Vectorized `vertex_uniform`."""
    idx = np.asarray(indices, dtype=np.uint64)
    h = absorb_indices(seed_state(seed), idx)
    return (h >> np.uint64(11)).astype(np.float64) * _INV53


def position_uniforms(seed: int, n: int, d: int) -> np.ndarray:
    """(n, d) array of per-vertex, per-axis uniforms."""
    pos_seed = stream_seed(seed, POSITION_STREAM)
    state = seed_state(pos_seed)
    idx = np.repeat(np.arange(n, dtype=np.uint64), d)
    axes = np.tile(np.arange(d, dtype=np.uint64), n)
    u = uniforms_from_states(absorb_indices(state, idx), axes)
    return u.reshape(n, d)


def trial_seeds(seed: int, n: int) -> np.ndarray:
    """uint64 array of trial_seed(seed, 0..n-1), bit-identical to the scalar."""
    h1 = np.uint64(_absorb(_mix64((seed & _MASK) ^ _IV), TRIAL_STREAM))
    return _absorb_vec(np.broadcast_to(h1, (n,)).copy(), np.arange(n, dtype=np.uint64))


def vertex_uniform_each(seeds: np.ndarray, word: int) -> np.ndarray:
    """vertex_uniform(s, word) evaluated for an array of seeds at once."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    h = _mix64_vec(seeds ^ np.uint64(_IV))
    return uniforms_from_states(h, np.full(seeds.shape, word, dtype=np.uint64))
