"""Random subsets of a ground set, deterministically seeded.

Inclusion draws are counter-based: element x goes into the sample iff
hash64(seed, index(x)) < p, where hash64 is a splitmix64-style mixer.  The
draw for a given (seed, element) never depends on evaluation order or on how
many other elements are probed, so resampling, subsampling and parallel
sweeps all reproduce byte-identically.

Derived seeds (per ensemble member, per trial, per grid cell) come from a
blake2b digest of labelled parts, so they are stable across processes and
Python versions regardless of PYTHONHASHSEED.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .core import GroundSet, WeightFunction, make_measure

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)


def _mix64(z):
    """splitmix64 finalizer, vectorized over uint64 arrays (wraparound wanted)."""
    with np.errstate(over="ignore"):
        z = (z + np.uint64(0x9E3779B97F4A7C15)) & _MASK
        z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _MASK
        z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _MASK
        return z ^ (z >> np.uint64(31))


def uniform01(seed, indices):
    """Uniform [0,1) draw per index, keyed by (seed, index) only."""
    idx = np.asarray(indices, dtype=np.uint64)
    keyed = _mix64(idx ^ _mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF)))
    return (keyed >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


def stable_hash(*parts):
    """64-bit seed derived from labelled parts; stable across runs/processes."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(repr(part).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "big")


def derive_seed(master, *labels):
    return stable_hash("derive", master, *labels)


def sample_subset(domain: GroundSet, p: float, seed: int) -> np.ndarray:
    """Element indices of a density-p random subset of X (sorted int64)."""
    if not 0 <= p <= 1:
        raise ValueError("density p must lie in [0, 1]")
    draws = uniform01(seed, np.arange(domain.size))
    return np.nonzero(draws < p)[0].astype(np.int64)


def subsample(subset, ratio: float, seed: int) -> np.ndarray:
    """Keep each element of subset independently with probability ratio.

    Draws are keyed by element index, so subsample(sample_subset(X, p), q/p)
    has the inclusion law of sample_subset(X, q) when the two seeds are
    independent.
    """
    if not 0 <= ratio <= 1:
        raise ValueError("ratio must lie in [0, 1]")
    idx = np.asarray(subset, dtype=np.int64)
    if idx.size == 0:
        return idx.copy()
    keep = uniform01(seed, idx) < ratio
    return idx[keep]


@dataclass
class RandomEnsemble:
    """m independent density-p subsets U_1..U_m of one ground set."""

    domain: GroundSet
    p: float
    m: int
    master_seed: int
    sets: list = field(default_factory=list)
    seeds: list = field(default_factory=list)

    def associated_measure(self, i) -> WeightFunction:
        """mu_i = p^{-1} on U_i (1-based i, matching position indices)."""
        return make_measure(self.domain, self.sets[i - 1], "associated", p=self.p)

    def measures(self):
        return [self.associated_measure(i) for i in range(1, self.m + 1)]

    def averaged_measure(self) -> WeightFunction:
        """mu = m^{-1} (mu_1 + ... + mu_m)."""
        acc = np.zeros(self.domain.size)
        for mu in self.measures():
            acc = acc + mu.dense()
        return WeightFunction(self.domain, values=acc / self.m)


def sample_ensemble(domain: GroundSet, p: float, m: int, master_seed: int) -> RandomEnsemble:
    seeds = [derive_seed(master_seed, "ensemble", i) for i in range(m)]
    sets = [sample_subset(domain, p, s) for s in seeds]
    return RandomEnsemble(domain, p, m, master_seed, sets, seeds)


def normalized_restriction(f: WeightFunction, subset, p: float, q: float) -> WeightFunction:
    """(p/q) f on the subset, 0 elsewhere.

    For f supported on a density-p set and the subset a density-(q/p)
    subsample, this renormalizes so that averaging over subsamples recovers f.
    """
    if not 0 < q <= p <= 1:
        raise ValueError("need 0 < q <= p <= 1")
    idx = np.asarray(subset, dtype=np.int64)
    scale = p / q
    if f.is_sparse:
        keep = set(int(i) for i in idx)
        return WeightFunction(f.domain, sparse={
            i: scale * v for i, v in f.sparse_items().items() if i in keep})
    v = np.zeros(f.domain.size)
    v[idx] = scale * f.dense()[idx]
    return WeightFunction(f.domain, values=v)


def translate_indices(domain: GroundSet, subset, a: int) -> np.ndarray:
    """Index-translation V + a on the fixed element ordering (mod |X|)."""
    idx = np.asarray(subset, dtype=np.int64)
    return np.sort((idx + int(a)) % domain.size)


def restrict_translated(f: WeightFunction, subset, a: int) -> WeightFunction:
    """Characteristic-normalized restriction of f to the translate V + a."""
    shifted = translate_indices(f.domain, subset, a)
    if shifted.size == 0:
        raise ValueError("cannot restrict to an empty translate")
    scale = f.domain.size / shifted.size
    v = np.zeros(f.domain.size)
    v[shifted] = scale * f.dense()[shifted]
    return WeightFunction(f.domain, values=v)


# --- set serialization: one JSON header line, then one index per line -----

def save_set(path, domain: GroundSet, subset, p=None, seed=None):
    idx = np.asarray(subset, dtype=np.int64)
    with open(path, "w") as fh:
        header = {"domain": domain.to_json(), "size": int(idx.size)}
        if p is not None:
            header["p"] = p
        if seed is not None:
            header["seed"] = seed
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for i in idx:
            fh.write(f"{int(i)}\n")


def load_set(path):
    with open(path) as fh:
        header = json.loads(fh.readline())
        idx = np.array([int(line) for line in fh if line.strip()], dtype=np.int64)
    if idx.size != header["size"]:
        raise ValueError(f"corrupt set file {path}: size mismatch")
    return GroundSet.from_json(header["domain"]), idx, header
