"""Homogeneous systems of ordered k-tuples over a ground set.

A sequence system S is a set of ordered k-tuples of elements of a ground set
X.  The fiber S_j(x) is the set of tuples whose j-th entry is x (positions
are 1-based).  S is homogeneous when, for each j, all fibers S_j(x) have the
same size; summing over x this forces |S_j(x)| * |X| = |S| for every j, so
the common size is also independent of j.

S has two degrees of freedom when agreeing in any two positions forces two
tuples to be equal.  For such systems the pair intersections S_1(x) n S_k(y)
have size 0 or a constant sigma, and t(x) counts the y with a non-empty
intersection.

Built-in kinds:

  ap          -- arithmetic progressions (x, x+d, ..., x+(k-1)d) in Z_n, d != 0
                 (optionally d = 0 included for degenerate-count experiments);
  interval-ap -- non-wrapping progressions inside {0..n-1}; a deliberately
                 NON-homogeneous control system;
  polyap      -- progressions with power gaps a, a+d^r, ..., a+(k-1)d^r with
                 1 <= d <= floor((n/k)^{1/r}); the range cap restores two
                 degrees of freedom;
  homothety   -- homothetic images a + d.P of a fixed point set P in Z_n^r;
  schur       -- triples (x, y, x+y) over Z_n with 0 removed, entries pairwise
                 distinct;
  copies      -- labelled ordered copies of a pattern hypergraph K inside the
                 complete k-uniform hypergraph on n vertices: tuples are the
                 edge images (phi(e_1), ..., phi(e_r)) under injections phi.

All tuples are reported as tuples of ELEMENT INDICES into the ground set, so
weight-function arrays can be indexed directly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import GroundSet, _rank_subset

ENUM_GUARD = 10 ** 7


class EnumerationGuardError(RuntimeError):
    """Raised when an exact enumeration would exceed the work guard."""


def is_probable_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for n < 3.3e24."""
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
    for sp in small:
        if n % sp == 0:
            return n == sp
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = (x * x) % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class PatternHypergraph:
    """k-uniform pattern with labelled (ordered) edges."""

    k: int
    num_vertices: int
    edges: tuple  # tuple of sorted vertex-tuples; order fixes tuple positions

    def __post_init__(self):
        seen = set()
        for e in self.edges:
            if len(e) != self.k or len(set(e)) != self.k:
                raise ValueError(f"edge {e} is not a {self.k}-set")
            if any(not 0 <= v < self.num_vertices for v in e):
                raise ValueError(f"edge {e} has a vertex out of range")
            if tuple(sorted(e)) != tuple(e):
                raise ValueError(f"edge {e} must be stored sorted")
            if e in seen:
                raise ValueError(f"repeated edge {e}")
            seen.add(e)
        if not self.edges:
            raise ValueError("pattern needs at least one edge")

    @property
    def num_edges(self):
        return len(self.edges)

    @staticmethod
    def complete(t):
        """K_t as a graph pattern (k = 2)."""
        return PatternHypergraph(
            2, t, tuple(tuple(e) for e in itertools.combinations(range(t), 2)))

    @staticmethod
    def cycle(length):
        if length < 3:
            raise ValueError("cycle needs length >= 3")
        edges = [tuple(sorted((i, (i + 1) % length))) for i in range(length)]
        return PatternHypergraph(2, length, tuple(edges))

    @staticmethod
    def complete_uniform(v, k):
        return PatternHypergraph(
            k, v, tuple(tuple(e) for e in itertools.combinations(range(v), k)))

    @staticmethod
    def fano():
        """The seven-point plane as a 3-uniform pattern."""
        lines = [(0, 1, 3), (1, 2, 4), (2, 3, 5), (3, 4, 6),
                 (0, 4, 5), (1, 5, 6), (0, 2, 6)]
        return PatternHypergraph(3, 7, tuple(tuple(sorted(l)) for l in lines))

    def to_json(self):
        return {"k": self.k, "v": self.num_vertices,
                "edges": [list(e) for e in self.edges]}

    @staticmethod
    def from_json(d):
        if isinstance(d, PatternHypergraph):
            return d
        if isinstance(d, str):
            return _pattern_by_name(d)
        edges = tuple(tuple(sorted(e)) for e in d["edges"])
        v = d.get("v", 1 + max(max(e) for e in edges))
        return PatternHypergraph(d["k"], v, edges)


def _pattern_by_name(name):
    name = name.upper().replace("_", "")
    if name.startswith("K") and name[1:].isdigit():
        return PatternHypergraph.complete(int(name[1:]))
    if name.startswith("C") and name[1:].isdigit():
        return PatternHypergraph.cycle(int(name[1:]))
    if name == "FANO":
        return PatternHypergraph.fano()
    raise ValueError(f"unknown pattern name {name!r}")


@dataclass
class SystemReport:
    check: str
    ok: bool
    detail: dict = field(default_factory=dict)
    witness: object = None
    notes: list = field(default_factory=list)

    def to_json(self):
        return {"check": self.check, "ok": bool(self.ok), "detail": self.detail,
                "witness": self.witness, "notes": self.notes}


@dataclass
class PairProfile:
    sigma: object            # the constant intersection size, if uniform
    t: object                # the constant |K(x)|, if uniform
    uniform: bool
    observed_sigma: list
    observed_t: list
    checked_x: int
    notes: list = field(default_factory=list)

    def to_json(self):
        return {"sigma": self.sigma, "t": self.t, "uniform": self.uniform,
                "observed_sigma": self.observed_sigma,
                "observed_t": self.observed_t,
                "checked_x": self.checked_x, "notes": self.notes}


class SequenceSystem:
    """Base class; subclasses fill in fibers and (optionally) completions."""

    kind = "abstract"
    claims_two_dof = False
    gamma = None  # fiber growth exponent |S_j(x)| ~ |X|^gamma, when meaningful

    def __init__(self, ground: GroundSet, k: int):
        self.ground = ground
        self.k = k
        self.notes = []
        self._fiber_cache = {}

    # --- interface -------------------------------------------------------

    @property
    def size(self):
        raise NotImplementedError

    def fiber_matrix(self, j, x):
        """All tuples with position j equal to element-index x, as an
        (fiber, k) int64 array of element indices."""
        raise NotImplementedError

    def enumerate_fiber(self, j, x):
        for row in self.fiber_matrix(j, x):
            yield tuple(int(v) for v in row)

    def fiber_size(self, j):
        if j not in self._fiber_cache:
            self._fiber_cache[j] = int(self.fiber_matrix(j, 0).shape[0])
        return self._fiber_cache[j]

    def fiber_count(self, j, x):
        """|S_j(x)| for one specific x (cheap closed forms where available)."""
        return int(self.fiber_matrix(j, x).shape[0])

    def sample_fiber(self, j, x, count, seed):
        mat = self.fiber_matrix(j, x)
        rng = np.random.default_rng(seed)
        return mat[rng.integers(0, mat.shape[0], size=count)]

    def complete_pair(self, i, j, a, b):
        """The unique tuple with positions i, j equal to a, b -- or None.

        Only meaningful for systems claiming two degrees of freedom."""
        raise ValueError(f"{self.kind} system does not support pair completion")

    def pair_intersection(self, x, y):
        """Tuples in S_1(x) n S_k(y), as a (m, k) array."""
        if self.claims_two_dof:
            s = self.complete_pair(1, self.k, x, y)
            if s is None:
                return np.empty((0, self.k), dtype=np.int64)
            return np.array([s], dtype=np.int64)
        mat = self.fiber_matrix(1, x)
        return mat[mat[:, self.k - 1] == y]

    def tuples(self, guard=ENUM_GUARD):
        """Iterate all of S (disjoint union of the S_1(x))."""
        if self.size > guard:
            raise EnumerationGuardError(
                f"|S| = {self.size} exceeds guard {guard}; use sampled modes")
        for x in range(self.ground.size):
            yield from self.enumerate_fiber(1, x)

    def descriptor(self):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.descriptor()})"


def _require_prime(n, kind, require_prime):
    if require_prime and not is_probable_prime(n):
        raise ValueError(
            f"{kind} system demands prime n for its fiber guarantees; "
            f"{n} is composite (pass require_prime=False to override)")


class APSystem(SequenceSystem):
    """(x, x+d, ..., x+(k-1)d) mod n; d != 0 unless allow_d0."""

    kind = "ap"
    claims_two_dof = True
    gamma = Fraction(1)

    def __init__(self, n, k, allow_d0=False, require_prime=True):
        if k < 2 or n <= k:
            raise ValueError("ap system needs 2 <= k < n")
        _require_prime(n, "ap", require_prime)
        super().__init__(GroundSet.cyclic(n), k)
        self.n = n
        self.allow_d0 = allow_d0
        self._dvals = np.arange(0 if allow_d0 else 1, n, dtype=np.int64)

    @property
    def size(self):
        return self.n * len(self._dvals)

    def fiber_matrix(self, j, x):
        offs = np.arange(1, self.k + 1, dtype=np.int64) - j
        return (x + np.outer(self._dvals, offs)) % self.n

    def fiber_count(self, j, x):
        return len(self._dvals)

    def complete_pair(self, i, j, a, b):
        if i == j:
            raise ValueError("positions must differ")
        try:
            inv = pow(int(j - i), -1, self.n)
        except ValueError:
            return None
        d = ((b - a) * inv) % self.n
        if d == 0 and not self.allow_d0:
            return None
        return tuple((a + (h - i) * d) % self.n for h in range(1, self.k + 1))

    def complete_pairs_bulk(self, i, j, a, bs):
        """Vectorized completion for one a against many b's.

        Returns (tuples, valid_b): an (m, k) matrix of completed tuples and
        the b values they belong to."""
        if i == j:
            raise ValueError("positions must differ")
        inv = pow(int(j - i), -1, self.n)
        bs = np.asarray(bs, dtype=np.int64)
        d = ((bs - a) * inv) % self.n
        if not self.allow_d0:
            keep = d != 0
            bs, d = bs[keep], d[keep]
        offs = np.arange(1, self.k + 1, dtype=np.int64) - i
        return (a + np.outer(d, offs)) % self.n, bs

    def descriptor(self):
        return {"kind": "ap", "n": self.n, "k": self.k, "allow_d0": self.allow_d0}


class IntervalAPSystem(SequenceSystem):
    """Non-wrapping progressions in {0..n-1}; fibers shrink near the ends,
    so this system is NOT homogeneous -- kept as a diagnostics control."""

    kind = "interval-ap"
    claims_two_dof = True

    def __init__(self, n, k):
        if k < 2 or n <= k:
            raise ValueError("interval-ap system needs 2 <= k < n")
        super().__init__(GroundSet.cyclic(n), k)
        self.n = n

    @property
    def size(self):
        dmax = (self.n - 1) // (self.k - 1)
        return sum(self.n - (self.k - 1) * d for d in range(1, dmax + 1))

    def fiber_matrix(self, j, x):
        rows = []
        d = 1
        while True:
            lo = x - (j - 1) * d
            hi = x + (self.k - j) * d
            if lo < 0 or hi >= self.n:
                # all larger d fail the same side only if both shrink; the
                # window is monotone in d, so we can stop
                break
            rows.append([x + (h - j) * d for h in range(1, self.k + 1)])
            d += 1
        return (np.array(rows, dtype=np.int64)
                if rows else np.empty((0, self.k), dtype=np.int64))

    def complete_pair(self, i, j, a, b):
        if i == j:
            raise ValueError("positions must differ")
        step, rem = divmod(b - a, j - i)
        if rem or step < 1:
            return None
        first = a - (i - 1) * step
        last = first + (self.k - 1) * step
        if first < 0 or last >= self.n:
            return None
        return tuple(first + (h - 1) * step for h in range(1, self.k + 1))

    def descriptor(self):
        return {"kind": "interval-ap", "n": self.n, "k": self.k}


class PolyAPSystem(SequenceSystem):
    """a, a+d^r, ..., a+(k-1)d^r mod n with 1 <= d <= floor((n/k)^{1/r}).

    The range cap keeps the powers d^r distinct as integers below n, which is
    what restores two degrees of freedom."""

    kind = "polyap"
    claims_two_dof = True

    def __init__(self, n, k, r, require_prime=True):
        if k < 2 or r < 1:
            raise ValueError("polyap system needs k >= 2, r >= 1")
        _require_prime(n, "polyap", require_prime)
        super().__init__(GroundSet.cyclic(n), k)
        self.n, self.r = n, r
        dmax = 1
        while k * (dmax + 1) ** r <= n:
            dmax += 1
        if k * dmax ** r > n:
            raise ValueError(f"no admissible gap for n={n}, k={k}, r={r}")
        self.gamma = Fraction(1, r)
        self._dvals = np.arange(1, dmax + 1, dtype=np.int64)
        self._powers = (self._dvals ** r) % n
        self._power_to_d = {int(pw): int(d)
                            for d, pw in zip(self._dvals, self._powers)}

    @property
    def size(self):
        return self.n * len(self._dvals)

    def fiber_matrix(self, j, x):
        offs = np.arange(1, self.k + 1, dtype=np.int64) - j
        return (x + np.outer(self._powers, offs)) % self.n

    def fiber_count(self, j, x):
        return len(self._dvals)

    def complete_pair(self, i, j, a, b):
        if i == j:
            raise ValueError("positions must differ")
        try:
            inv = pow(int(j - i), -1, self.n)
        except ValueError:
            return None
        gap = ((b - a) * inv) % self.n
        if gap not in self._power_to_d:
            return None
        return tuple((a + (h - i) * gap) % self.n for h in range(1, self.k + 1))

    def descriptor(self):
        return {"kind": "polyap", "n": self.n, "k": self.k, "r": self.r}


class HomothetySystem(SequenceSystem):
    """Images a + d.P of a point set P = (p_1..p_k) in Z_n^r, d != 0 mod n."""

    kind = "homothety"
    claims_two_dof = True

    def __init__(self, n, r, points, require_prime=True):
        pts = tuple(tuple(int(c) % n for c in pt) for pt in points)
        if len(pts) < 2:
            raise ValueError("homothety system needs at least 2 points")
        if any(len(pt) != r for pt in pts):
            raise ValueError(f"points must have {r} coordinates")
        if len(set(pts)) != len(pts):
            raise ValueError("points must be distinct mod n")
        _require_prime(n, "homothety", require_prime)
        super().__init__(GroundSet.grid(n, r), len(pts))
        self.n, self.r = n, r
        self.points = pts
        self._P = np.array(pts, dtype=np.int64)  # (k, r)
        dvals = []
        for d in range(1, n):
            degenerate = any(
                all((d * (self._P[i, t] - self._P[j, t])) % n == 0 for t in range(r))
                for i in range(self.k) for j in range(i + 1, self.k))
            if not degenerate:
                dvals.append(d)
        if not dvals:
            raise ValueError("every dilation is degenerate for this point set")
        self.gamma = Fraction(1, r)
        self._dvals = np.array(dvals, dtype=np.int64)
        self._radix = np.array([n ** t for t in range(r)], dtype=np.int64)

    @property
    def size(self):
        return self.n ** self.r * len(self._dvals)

    def _encode(self, coords):
        # coords: (..., r) little-endian base-n
        return (coords * self._radix).sum(axis=-1)

    def fiber_matrix(self, j, x):
        base = np.array(self.ground.element(x), dtype=np.int64)  # (r,)
        rel = self._P - self._P[j - 1]                            # (k, r)
        coords = (base[None, None, :] + self._dvals[:, None, None] * rel[None, :, :]) % self.n
        return self._encode(coords)

    def fiber_count(self, j, x):
        return len(self._dvals)

    def complete_pair(self, i, j, a, b):
        if i == j:
            raise ValueError("positions must differ")
        xa = np.array(self.ground.element(a), dtype=np.int64)
        xb = np.array(self.ground.element(b), dtype=np.int64)
        rel = (self._P[j - 1] - self._P[i - 1]) % self.n
        diff = (xb - xa) % self.n
        d = None
        for t in range(self.r):
            if rel[t] % self.n != 0:
                try:
                    d = (int(diff[t]) * pow(int(rel[t]), -1, self.n)) % self.n
                except ValueError:
                    return None
                break
        if d is None or d == 0:
            return None
        if np.any((d * rel) % self.n != diff):
            return None
        if d not in self._dvals:
            return None
        coords = (xa[None, :] + d * (self._P - self._P[i - 1])) % self.n
        return tuple(int(v) for v in self._encode(coords))

    def descriptor(self):
        return {"kind": "homothety", "n": self.n, "r": self.r,
                "points": [list(pt) for pt in self.points]}


class SchurSystem(SequenceSystem):
    """Triples (x, y, x+y) over Z_n with 0 removed, entries pairwise distinct.

    Ground elements are the residues 1..n-1; element index = residue - 1.
    The measured fiber size is n-3 for odd prime n (excluding y in {a, -a});
    conventions that allow x = y would report n-2 instead -- the measured
    value is what all checks use.
    """

    kind = "schur"
    claims_two_dof = True
    gamma = Fraction(1)

    def __init__(self, n, require_prime=True):
        if n < 5:
            raise ValueError("schur system needs n >= 5")
        _require_prime(n, "schur", require_prime)
        super().__init__(GroundSet.cyclic(n, exclude_zero=True), 3)
        self.n = n
        self.notes.append(
            "fiber size measured with all three entries pairwise distinct "
            "(n-3 for odd prime n); conventions permitting x = y would give n-2")

    @property
    def size(self):
        return sum(self.fiber_matrix(1, x).shape[0] for x in range(self.ground.size))

    def _residue_rows(self, j, res):
        n = self.n
        others = np.arange(1, n, dtype=np.int64)
        if j == 1:
            y = others[(others != res) & (others != (n - res) % n)]
            return np.stack([np.full_like(y, res), y, (res + y) % n], axis=1)
        if j == 2:
            x = others[(others != res) & (others != (n - res) % n)]
            return np.stack([x, np.full_like(x, res), (x + res) % n], axis=1)
        half = (res * pow(2, -1, n)) % n
        x = others[(others != res) & (others != half)]
        y = (res - x) % n
        rows = np.stack([x, y, np.full_like(x, res)], axis=1)
        return rows[np.all(rows != 0, axis=1)]

    def fiber_matrix(self, j, x):
        return self._residue_rows(j, x + 1) - 1  # residues -> indices

    def complete_pair(self, i, j, a, b):
        if i == j:
            raise ValueError("positions must differ")
        ra, rb = a + 1, b + 1
        vals = {i: ra, j: rb}
        n = self.n
        if 1 in vals and 2 in vals:
            third = (vals[1] + vals[2]) % n
        elif 1 in vals:
            third = (vals[3] - vals[1]) % n
        else:
            third = (vals[3] - vals[2]) % n
        missing = ({1, 2, 3} - set(vals)).pop()
        vals[missing] = third
        triple = (vals[1], vals[2], vals[3])
        if 0 in triple or len(set(triple)) != 3:
            return None
        if (triple[0] + triple[1]) % n != triple[2]:
            return None
        return tuple(v - 1 for v in triple)

    def descriptor(self):
        return {"kind": "schur", "n": self.n}


class CopySystem(SequenceSystem):
    """Labelled ordered copies of a pattern K in the complete k-uniform
    hypergraph on n vertices.

    S is the set of injections phi: V(K) -> [n], one tuple per injection,
    with entries the edge images phi(e_1)..phi(e_r).  |S| = n(n-1)...(n-v+1)
    and the fiber through a fixed edge has size k!(n-k)...(n-v+1).
    """

    kind = "copies"
    claims_two_dof = False

    def __init__(self, n, pattern: PatternHypergraph):
        if n < pattern.num_vertices:
            raise ValueError("host needs at least as many vertices as the pattern")
        super().__init__(GroundSet.ksubsets(n, pattern.k), pattern.num_edges)
        self.n = n
        self.pattern = pattern
        self._rank_cache = {}
        if pattern.num_vertices > pattern.k:
            self.gamma = Fraction(1)  # placeholder; copies use 1/m_k instead

    @property
    def size(self):
        return math.perm(self.n, self.pattern.num_vertices)

    def edge_rank(self, verts):
        key = tuple(sorted(verts))
        if key not in self._rank_cache:
            self._rank_cache[key] = _rank_subset(key, self.n, self.pattern.k)
        return self._rank_cache[key]

    def fiber_size(self, j):
        kk, v = self.pattern.k, self.pattern.num_vertices
        return math.factorial(kk) * math.perm(self.n - kk, v - kk)

    def fiber_count(self, j, x):
        return self.fiber_size(j)

    def injection_tuple(self, phi):
        """Edge-image tuple of a vertex map given as a sequence over V(K)."""
        return tuple(self.edge_rank([phi[u] for u in e]) for e in self.pattern.edges)

    def fiber_matrix(self, j, x, guard=ENUM_GUARD):
        if self.fiber_size(j) > guard:
            raise EnumerationGuardError(
                f"copy fiber of size {self.fiber_size(j)} exceeds guard {guard}; "
                "use sample_fiber")
        root = self.pattern.edges[j - 1]
        x_set = self.ground.element(x)
        others = [u for u in range(self.pattern.num_vertices) if u not in root]
        rest_pool = [w for w in range(self.n) if w not in x_set]
        rows = []
        for root_img in itertools.permutations(x_set):
            for rest_img in itertools.permutations(rest_pool, len(others)):
                phi = {}
                for u, w in zip(root, root_img):
                    phi[u] = w
                for u, w in zip(others, rest_img):
                    phi[u] = w
                rows.append(self.injection_tuple(phi))
        return np.array(rows, dtype=np.int64)

    def sample_fiber(self, j, x, count, seed):
        root = self.pattern.edges[j - 1]
        x_set = self.ground.element(x)
        others = [u for u in range(self.pattern.num_vertices) if u not in root]
        rest_pool = np.array([w for w in range(self.n) if w not in x_set])
        rng = np.random.default_rng(seed)
        rows = []
        for _ in range(count):
            root_img = rng.permutation(len(x_set))
            rest_img = rng.permutation(len(rest_pool))[: len(others)]
            phi = {u: x_set[root_img[t]] for t, u in enumerate(root)}
            for t, u in enumerate(others):
                phi[u] = int(rest_pool[rest_img[t]])
            rows.append(self.injection_tuple(phi))
        return np.array(rows, dtype=np.int64)

    def sample_injection(self, seed):
        rng = np.random.default_rng(seed)
        return list(rng.permutation(self.n)[: self.pattern.num_vertices])

    def pair_intersection(self, x, y, guard=ENUM_GUARD):
        e_first = self.pattern.edges[0]
        e_last = self.pattern.edges[-1]
        x_set, y_set = self.ground.element(x), self.ground.element(y)
        shared = [u for u in e_last if u in e_first]
        rows = []
        for root_img in itertools.permutations(x_set):
            phi = dict(zip(e_first, root_img))
            # e_last vertices already placed must land inside y
            if any(phi[u] not in y_set for u in shared):
                continue
            free_last = [u for u in e_last if u not in phi]
            target = [w for w in y_set if w not in [phi[u] for u in shared]]
            if len(free_last) != len(target):
                continue
            for last_img in itertools.permutations(target):
                phi2 = dict(phi)
                for u, w in zip(free_last, last_img):
                    phi2[u] = w
                rest = [u for u in range(self.pattern.num_vertices) if u not in phi2]
                pool = [w for w in range(self.n) if w not in phi2.values()]
                if math.perm(len(pool), len(rest)) > guard:
                    raise EnumerationGuardError("pair intersection exceeds guard")
                for rest_img in itertools.permutations(pool, len(rest)):
                    phi3 = dict(phi2)
                    for u, w in zip(rest, rest_img):
                        phi3[u] = w
                    tup = self.injection_tuple(phi3)
                    if tup[-1] == y:  # guard against shared-vertex edge cases
                        rows.append(tup)
        if not rows:
            return np.empty((0, self.k), dtype=np.int64)
        # one row per injection: S is a set of injections, so no dedup here
        return np.array(sorted(rows), dtype=np.int64)

    def tuples(self, guard=ENUM_GUARD):
        if self.size > guard:
            raise EnumerationGuardError(
                f"|S| = {self.size} exceeds guard {guard}")
        for phi in itertools.permutations(range(self.n), self.pattern.num_vertices):
            yield self.injection_tuple(phi)

    def descriptor(self):
        return {"kind": "copies", "n": self.n, "pattern": self.pattern.to_json()}


def build_system(descriptor=None, **kwargs) -> SequenceSystem:
    """Build a system from a JSON-style descriptor (or keyword arguments)."""
    d = dict(descriptor or {})
    d.update(kwargs)
    kind = d.pop("kind")
    if kind == "ap":
        return APSystem(d["n"], d["k"], d.get("allow_d0", False),
                        d.get("require_prime", True))
    if kind == "interval-ap":
        return IntervalAPSystem(d["n"], d["k"])
    if kind == "polyap":
        return PolyAPSystem(d["n"], d["k"], d["r"], d.get("require_prime", True))
    if kind == "homothety":
        return HomothetySystem(d["n"], d["r"], d["points"],
                               d.get("require_prime", True))
    if kind == "schur":
        return SchurSystem(d["n"], d.get("require_prime", True))
    if kind == "copies":
        return CopySystem(d["n"], PatternHypergraph.from_json(d["pattern"]))
    raise ValueError(f"unknown system kind {kind!r}")


# --- diagnostics ----------------------------------------------------------

def verify_homogeneity(sys: SequenceSystem, sample=None, seed=0,
                       guard=ENUM_GUARD) -> SystemReport:
    """Measure fiber sizes by enumeration, for all x (sample=None) or for
    `sample` random x per position."""
    X = sys.ground.size
    if sample is None:
        xs = range(X)
        budget = X
        for j in range(1, sys.k + 1):
            budget_j = X * max(sys.fiber_size(j), 1)
            if budget_j > guard:
                raise EnumerationGuardError(
                    f"exhaustive homogeneity check needs {budget_j} fiber rows "
                    f"at position {j}; pass sample=N")
    else:
        rng = np.random.default_rng(seed)
        xs = rng.integers(0, X, size=sample)
    sizes = {}
    witness = None
    ok = True
    checked = 0
    for j in range(1, sys.k + 1):
        seen = {}
        for x in xs:
            m = int(sys.fiber_matrix(j, int(x)).shape[0])
            seen.setdefault(m, int(x))
            checked += 1
        sizes[j] = sorted(seen)
        if len(seen) > 1:
            ok = False
            witness = {"j": j, "sizes": {str(m): x for m, x in seen.items()}}
    # homogeneity also forces the per-position sizes to agree with |S|/|X|
    flat = {s[0] for s in sizes.values() if len(s) == 1}
    if ok and len(flat) > 1:
        ok = False
        witness = {"per_position_sizes": {j: s[0] for j, s in sizes.items()}}
    return SystemReport("homogeneity", ok,
                        detail={"fiber_sizes": sizes, "checked": checked,
                                "mode": "exhaustive" if sample is None else "sampled"},
                        witness=witness, notes=list(sys.notes))


def verify_two_dof(sys: SequenceSystem, mode="exhaustive", samples=2000, seed=0,
                   guard=ENUM_GUARD) -> SystemReport:
    """Does agreement in two positions force equality?

    exhaustive: one pass over S per position pair with a completion map --
    O(|S| k^2) but logically equivalent to comparing all pairs.
    sampled: random tuples probed against reconstruction (two-dof claimants)
    or against re-randomized injections (copy systems).
    """
    k = sys.k
    if mode == "exhaustive":
        work = sys.size * k * (k - 1) // 2
        if work > guard:
            raise EnumerationGuardError(
                f"exhaustive two-dof pass needs {work} map insertions; "
                "use mode='sampled'")
        for i in range(1, k + 1):
            for j in range(i + 1, k + 1):
                seen = {}
                for s in sys.tuples(guard=guard):
                    key = (s[i - 1], s[j - 1])
                    if key in seen and seen[key] != s:
                        return SystemReport(
                            "two_dof", False,
                            detail={"mode": "exhaustive"},
                            witness={"positions": (i, j),
                                     "s": list(seen[key]), "t": list(s)})
                    seen[key] = s
        return SystemReport("two_dof", True,
                            detail={"mode": "exhaustive",
                                    "pairs_checked": k * (k - 1) // 2})
    # sampled
    rng = np.random.default_rng(seed)
    X = sys.ground.size
    failures = 0
    witness = None
    for probe in range(samples):
        i, j = sorted(rng.choice(np.arange(1, k + 1), size=2, replace=False))
        if isinstance(sys, CopySystem):
            phi = sys.sample_injection(int(rng.integers(0, 2 ** 62)))
            s = sys.injection_tuple(phi)
            # keep the vertices of edges i and j, re-randomize the rest
            keep = set(sys.pattern.edges[i - 1]) | set(sys.pattern.edges[j - 1])
            pool = [w for w in range(sys.n)
                    if w not in [phi[u] for u in keep]]
            rng.shuffle(pool)
            free = [u for u in range(sys.pattern.num_vertices) if u not in keep]
            phi2 = list(phi)
            for u, w in zip(free, pool):
                phi2[u] = w
            t = sys.injection_tuple(phi2)
            if t != s and t[i - 1] == s[i - 1] and t[j - 1] == s[j - 1]:
                failures += 1
                if witness is None:
                    witness = {"positions": (int(i), int(j)),
                               "s": list(s), "t": list(t)}
        else:
            x = int(rng.integers(0, X))
            row = sys.sample_fiber(1, x, 1, int(rng.integers(0, 2 ** 62)))[0]
            s = tuple(int(v) for v in row)
            t = sys.complete_pair(int(i), int(j), s[i - 1], s[j - 1])
            if t != s:
                failures += 1
                if witness is None:
                    witness = {"positions": (int(i), int(j)), "s": list(s),
                               "completed": None if t is None else list(t)}
    return SystemReport("two_dof", failures == 0,
                        detail={"mode": "sampled", "probes": samples,
                                "failures": failures},
                        witness=witness)


def pair_profile(sys: SequenceSystem, sample=None, seed=0,
                 guard=ENUM_GUARD) -> PairProfile:
    """Intersection profile of S_1(x) with the S_k(y).

    For each probed x, bucket the fiber S_1(x) by its final entry: the bucket
    sizes are the non-zero |S_1(x) n S_k(y)| and the bucket count is t(x).
    """
    X = sys.ground.size
    if sample is None:
        budget = X * max(sys.fiber_size(1), 1)
        if budget > guard:
            raise EnumerationGuardError(
                f"exhaustive pair profile needs {budget} rows; pass sample=N")
        xs = np.arange(X)
    else:
        rng = np.random.default_rng(seed)
        xs = rng.integers(0, X, size=sample)
    sigma_seen, t_seen = set(), set()
    for x in xs:
        mat = sys.fiber_matrix(1, int(x))
        if mat.shape[0] == 0:
            t_seen.add(0)
            continue
        _, counts = np.unique(mat[:, sys.k - 1], return_counts=True)
        sigma_seen.update(int(c) for c in counts)
        t_seen.add(int(counts.size))
    uniform = len(sigma_seen) == 1 and len(t_seen) == 1
    return PairProfile(
        sigma=next(iter(sigma_seen)) if len(sigma_seen) == 1 else None,
        t=next(iter(t_seen)) if len(t_seen) == 1 else None,
        uniform=uniform,
        observed_sigma=sorted(sigma_seen),
        observed_t=sorted(t_seen),
        checked_x=len(xs),
        notes=list(sys.notes))
