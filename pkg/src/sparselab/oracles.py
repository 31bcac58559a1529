"""Exact brute-force oracles and adversarial heuristics.

Everything here is ground truth for the rest of the package: pattern
densities as exact rationals, minimum configuration counts over all subsets
of a given density, labeled copy counts, minimum monochromatic counts over
all colourings, extremal numbers by branch and bound, and certified
configuration-free subsets / low-monochromatic colourings found by greedy
plus local search.

Exhaustive enumerations carry hard guards and raise rather than degrade;
heuristic results are always re-counted from scratch before being returned.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import GroundSet
from .sample import derive_seed
from .systems import CopySystem, PatternHypergraph, SequenceSystem

EXHAUSTIVE_GUARD = 2 ** 24


# --- pattern statistics ---------------------------------------------------

@dataclass
class PatternStats:
    m_k: Fraction
    strictly_balanced: bool
    witness: dict | None
    critical_exponent: Fraction

    @property
    def m_k_float(self):
        return float(self.m_k)

    def to_json(self):
        return {"m_k": [self.m_k.numerator, self.m_k.denominator],
                "m_k_float": self.m_k_float,
                "strictly_balanced": self.strictly_balanced,
                "witness": self.witness,
                "critical_exponent": [self.critical_exponent.numerator,
                                      self.critical_exponent.denominator]}


def pattern_stats(K: PatternHypergraph) -> PatternStats:
    """Exact density m_k = (e_K - 1)/(v_K - k), strict balance verdict with
    a violating sub-pattern witness if any, and the copy-system exponent
    1/m_k."""
    v, e, k = K.num_vertices, K.num_edges, K.k
    if v <= k:
        raise ValueError("density undefined: pattern needs more than k vertices")
    m_k = Fraction(e - 1, v - k)
    balanced, witness = True, None
    # induced sub-patterns dominate any sub-pattern on the same vertices,
    # so scanning proper vertex subsets suffices
    for width in range(k + 1, v):
        for W in itertools.combinations(range(v), width):
            Wset = set(W)
            e_L = sum(1 for edge in K.edges if Wset.issuperset(edge))
            if e_L < 1:
                continue
            m_L = Fraction(e_L - 1, width - k)
            if m_L >= m_k:
                balanced, witness = False, {"vertices": list(W), "edges": e_L,
                                            "m_k": [m_L.numerator,
                                                    m_L.denominator]}
                break
        if not balanced:
            break
    return PatternStats(m_k, balanced, witness, 1 / m_k)


def critical_exponent(sys: SequenceSystem) -> Fraction:
    """Threshold exponent alpha with p ~ |X|^{-alpha}: 1/m_k for copy
    systems, gamma/(k-1) for two-degrees-of-freedom systems."""
    if isinstance(sys, CopySystem):
        return pattern_stats(sys.pattern).critical_exponent
    if sys.gamma is None:
        raise ValueError(f"no critical exponent known for {sys.kind} systems")
    return Fraction(sys.gamma) / (sys.k - 1)


# --- host graphs ----------------------------------------------------------

@dataclass(frozen=True)
class HostGraph:
    """A k-uniform host: n vertices plus a set of sorted vertex tuples."""

    n: int
    edges: frozenset
    k: int = 2

    @staticmethod
    def from_edges(n, edges, k=2):
        clean = frozenset(tuple(sorted(e)) for e in edges)
        for e in clean:
            if len(e) != k or not all(0 <= u < n for u in e):
                raise ValueError(f"bad edge {e} for n={n}, k={k}")
        return HostGraph(n, clean, k)

    @staticmethod
    def complete(n, k=2):
        return HostGraph(n, frozenset(itertools.combinations(range(n), k)), k)

    @staticmethod
    def cycle(n):
        return HostGraph.from_edges(
            n, [tuple(sorted((i, (i + 1) % n))) for i in range(n)])

    def relabel(self, perm):
        return HostGraph.from_edges(
            self.n, [tuple(perm[u] for u in e) for e in self.edges], self.k)


def _injections(host: HostGraph, K: PatternHypergraph):
    """Yield all vertex maps [v_K] -> [n] preserving edges (as tuples)."""
    v = K.num_vertices
    # for each pattern vertex, the edges completed at its assignment step
    ready = [[e for e in K.edges if max(e) == u] for u in range(v)]
    phi = [-1] * v
    used = [False] * host.n

    def extend(u):
        if u == v:
            yield tuple(phi)
            return
        for w in range(host.n):
            if used[w]:
                continue
            phi[u] = w
            if all(tuple(sorted(phi[t] for t in e)) in host.edges
                   for e in ready[u]):
                used[w] = True
                yield from extend(u + 1)
                used[w] = False
        phi[u] = -1

    yield from extend(0)


def supersaturation_count(G: HostGraph, K: PatternHypergraph) -> int:
    """Exact number of labeled copies: injections of V(K) into G preserving
    every edge."""
    if K.k != G.k:
        raise ValueError("pattern and host uniformity differ")
    return sum(1 for _ in _injections(G, K))


# --- minimum counts over subsets and colourings ---------------------------

def _tuple_list(sys, guard=EXHAUSTIVE_GUARD):
    return [tuple(int(v) for v in s) for s in sys.tuples(guard=guard)]


def varnavides_count(sys: SequenceSystem, rho, guard=EXHAUSTIVE_GUARD,
                     node_budget=None):
    """Minimum number of tuples fully inside B, over all B with
    |B| >= rho |X| (attained at |B| = ceil(rho |X|) by monotonicity).

    Exhaustive when C(|X|, m) fits the guard; otherwise branch and bound
    under node_budget.  Returns (count, minimizing subset).
    """
    X = sys.ground.size
    m = math.ceil(rho * X)
    if m <= 0:
        return 0, []
    if m > X:
        raise ValueError("density above 1")
    tuples_ = _tuple_list(sys)
    masks = []
    for s in tuples_:
        bits = 0
        for v in s:
            bits |= 1 << v
        masks.append(bits)
    if math.comb(X, m) <= guard:
        best, witness = None, None
        for B in itertools.combinations(range(X), m):
            bbits = 0
            for v in B:
                bbits |= 1 << v
            cnt = sum(1 for mk in masks if mk & bbits == mk)
            if best is None or cnt < best:
                best, witness = cnt, list(B)
                if best == 0:
                    break
        return best, witness
    if node_budget is None:
        raise ValueError(
            f"C({X},{m}) exceeds the exhaustive guard; pass node_budget for "
            "branch-and-bound or use adversary_free_subset for a heuristic")
    # branch and bound over include/exclude element decisions
    best = [len(masks) + 1, None]
    nodes = [0]

    def forced_count(chosen_bits):
        return sum(1 for mk in masks if mk & chosen_bits == mk)

    def walk(x, chosen, chosen_bits):
        nodes[0] += 1
        if nodes[0] > node_budget:
            raise ValueError(
                "node budget exceeded; use adversary_free_subset for a "
                "heuristic witness")
        if len(chosen) == m:
            cnt = forced_count(chosen_bits)
            if cnt < best[0]:
                best[0], best[1] = cnt, list(chosen)
            return
        if X - x < m - len(chosen):
            return
        if forced_count(chosen_bits) >= best[0]:
            return
        chosen.append(x)
        walk(x + 1, chosen, chosen_bits | (1 << x))
        chosen.pop()
        walk(x + 1, chosen, chosen_bits)

    walk(0, [], 0)
    return best[0], best[1]


def _copies_in_host(host: HostGraph, K: PatternHypergraph):
    """Distinct unordered copies, each as a frozenset of host edges."""
    seen = set()
    for phi in _injections(host, K):
        img = frozenset(tuple(sorted(phi[u] for u in e)) for e in K.edges)
        seen.add(img)
    return sorted(seen, key=sorted)


def ramsey_multiplicity(host: HostGraph, K: PatternHypergraph, r,
                        mode="exhaustive", guard=EXHAUSTIVE_GUARD,
                        budget=20000, seed=0):
    """Minimum number of monochromatic (unordered) copies of K over all
    r-colourings of the host's edges.

    Exhaustive mode fixes the first edge's colour (colour permutations are
    symmetries) and scans the rest; heuristic mode is greedy + local search
    and reports an upper bound.  Returns (count, colouring dict).
    """
    if r < 1:
        raise ValueError("need at least one colour")
    edges = sorted(host.edges)
    E = len(edges)
    index = {e: i for i, e in enumerate(edges)}
    copies = _copies_in_host(host, K)
    copy_idx = [sorted(index[e] for e in c) for c in copies]
    if r == 1 or not copy_idx:
        return len(copy_idx), {str(e): 0 for e in edges}

    def mono_count(col):
        total = 0
        for c in copy_idx:
            first = col[c[0]]
            if all(col[i] == first for i in c[1:]):
                total += 1
        return total

    if mode == "exhaustive":
        if r ** E > guard:
            raise ValueError(
                f"{r}^{E} colourings exceed the exhaustive guard; "
                "use mode='heuristic'")
        best, witness = None, None
        for rest in itertools.product(range(r), repeat=E - 1):
            col = (0,) + rest
            cnt = mono_count(col)
            if best is None or cnt < best:
                best, witness = cnt, col
                if best == 0:
                    break
        return best, {str(e): witness[i] for i, e in enumerate(edges)}
    if mode != "heuristic":
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(derive_seed(seed, "ramsey"))
    best, witness = None, None
    evals = 0
    while evals < budget:
        col = list(rng.integers(0, r, size=E))
        improved = True
        while improved and evals < budget:
            improved = False
            for i in range(E):
                base = col[i]
                scores = []
                for c in range(r):
                    col[i] = c
                    scores.append((mono_count(col), c))
                    evals += 1
                cnt, c = min(scores)
                col[i] = c
                if c != base and cnt < scores[base][0]:
                    improved = True
        cnt = mono_count(col)           # certified recount
        if best is None or cnt < best:
            best, witness = cnt, list(col)
        if best == 0:
            break
    return best, {str(e): witness[i] for i, e in enumerate(edges)}


def ramsey_multiplicity_system(sys: SequenceSystem, r, mode="exhaustive",
                               guard=EXHAUSTIVE_GUARD, budget=20000, seed=0):
    """Minimum number of monochromatic ORDERED tuples of S over all
    r-colourings of the ground set (the system-side analogue; counts are
    ordered because S is)."""
    if r < 1:
        raise ValueError("need at least one colour")
    X = sys.ground.size
    tuples_ = _tuple_list(sys)
    if r == 1 or not tuples_:
        return len(tuples_), [0] * X

    def mono_count(col):
        return sum(1 for s in tuples_
                   if all(col[v] == col[s[0]] for v in s[1:]))

    if mode == "exhaustive":
        if r ** X > guard:
            raise ValueError(
                f"{r}^{X} colourings exceed the exhaustive guard; "
                "use mode='heuristic'")
        best, witness = None, None
        for rest in itertools.product(range(r), repeat=X - 1):
            col = (0,) + rest
            cnt = mono_count(col)
            if best is None or cnt < best:
                best, witness = cnt, list(col)
                if best == 0:
                    break
        return best, witness
    rng = np.random.default_rng(derive_seed(seed, "ramsey-sys"))
    best, witness = None, None
    evals = 0
    while evals < budget:
        col = list(rng.integers(0, r, size=X))
        improved = True
        while improved and evals < budget:
            improved = False
            for i in range(X):
                base = col[i]
                scores = []
                for c in range(r):
                    col[i] = c
                    scores.append((mono_count(col), c))
                    evals += 1
                cnt, c = min(scores)
                col[i] = c
                if c != base and cnt < scores[base][0]:
                    improved = True
        cnt = mono_count(col)
        if best is None or cnt < best:
            best, witness = cnt, list(col)
        if best == 0:
            break
    return best, witness


# --- extremal numbers -----------------------------------------------------

def _has_copy_through(edge_set, new_edge, K, n):
    """Does edge_set + new_edge contain a copy of K using new_edge?"""
    all_edges = edge_set | {new_edge}
    v = K.num_vertices
    for anchor in K.edges:
        for img in itertools.permutations(new_edge):
            phi = [-1] * v
            used = set()
            for u, w in zip(anchor, img):
                phi[u] = w
                used.add(w)
            rest = [u for u in range(v) if phi[u] < 0]

            def extend(pos):
                if pos == len(rest):
                    return all(tuple(sorted(phi[t] for t in e)) in all_edges
                               for e in K.edges)
                u = rest[pos]
                for w in range(n):
                    if w in used:
                        continue
                    phi[u] = w
                    complete = [e for e in K.edges
                                if u in e and all(phi[t] >= 0 for t in e)]
                    if all(tuple(sorted(phi[t] for t in e)) in all_edges
                           for e in complete):
                        used.add(w)
                        if extend(pos + 1):
                            used.discard(w)
                            return True
                        used.discard(w)
                phi[u] = -1
                return False

            if extend(0):
                return True
    return False


def extremal_number(n, K: PatternHypergraph, budget=10 ** 7):
    """ex(n, K): the largest K-free edge count in the complete k-uniform
    host on n vertices, by include-first branch and bound with the trivial
    remaining-edges bound.  Returns (value, witness edge list)."""
    all_edges = list(itertools.combinations(range(n), K.k))
    E = len(all_edges)
    best = [-1, None]
    nodes = [0]

    def walk(i, chosen):
        nodes[0] += 1
        if nodes[0] > budget:
            raise ValueError("branch-and-bound budget exceeded")
        if len(chosen) + (E - i) <= best[0]:
            return
        if i == E:
            if len(chosen) > best[0]:
                best[0] = len(chosen)
                best[1] = sorted(chosen)
            return
        e = all_edges[i]
        if not _has_copy_through(chosen, e, K, n):
            chosen.add(e)
            walk(i + 1, chosen)
            chosen.discard(e)
        walk(i + 1, chosen)

    walk(0, set())
    return best[0], [list(e) for e in best[1]]


# --- adversarial witnesses ------------------------------------------------

def tuples_within(sys: SequenceSystem, U, guard=10 ** 7):
    """All tuples of S with every coordinate in U (exact, support-restricted).

    Two-dof systems complete ordered (s_1, s_2) pairs from U x U; copy
    systems backtrack vertex images over the sub-host spanned by U.
    """
    U = sorted(int(u) for u in U)
    U_set = set(U)
    out = []
    if isinstance(sys, CopySystem):
        K = sys.pattern
        host_edges = frozenset(sys.ground.element(u) for u in U)
        host = HostGraph(sys.n, host_edges, K.k)
        for phi in _injections(host, K):
            out.append(tuple(sys.edge_rank([phi[u] for u in e])
                             for e in K.edges))
        return out
    if not sys.claims_two_dof:
        # fall back to scanning fibers rooted inside U
        total = 0
        for a in U:
            mat = sys.fiber_matrix(1, a)
            total += mat.shape[0]
            if total > guard:
                raise ValueError("support enumeration exceeds guard")
            inside = np.all(np.isin(mat, U), axis=1)
            out.extend(tuple(int(v) for v in row) for row in mat[inside])
        return out
    if len(U) ** 2 > guard:
        raise ValueError("support enumeration exceeds guard")
    for a in U:
        for b in U:
            if a == b:
                continue
            s = sys.complete_pair(1, 2, a, b)
            if s is not None and all(v in U_set for v in s):
                out.append(tuple(int(v) for v in s))
    return out


@dataclass
class AdversaryReport:
    subset: list
    density: float
    removed: list
    tuples_in_U: int
    certified: bool
    detail: dict = field(default_factory=dict)

    def to_json(self):
        return {"subset": self.subset, "density": self.density,
                "removed": self.removed, "tuples_in_U": self.tuples_in_U,
                "certified": self.certified, "detail": self.detail}


def adversary_free_subset(sys: SequenceSystem, U, budget=10 ** 6,
                          seed=0) -> AdversaryReport:
    """Greedy removal of high-coverage elements until no tuple survives,
    followed by a re-add pass; the returned subset is certified free by an
    independent recount.  Density is |A|/|U| (1.0 for empty U)."""
    U = sorted(int(u) for u in U)
    if not U:
        return AdversaryReport([], 1.0, [], 0, True)
    tuples_ = tuples_within(sys, U, guard=budget)
    cover = {u: set() for u in U}
    for t, s in enumerate(tuples_):
        for v in set(s):
            cover[v].add(t)
    alive = set(range(len(tuples_)))
    A = set(U)
    removed = []
    while alive:
        u = max(A, key=lambda v: (len(cover[v] & alive), -v))
        A.discard(u)
        removed.append(u)
        alive -= cover[u]
    # re-add any removed element whose tuples stay broken without it
    for u in sorted(removed):
        if all(any(v not in A and v != u for v in set(s))
               for s in (tuples_[t] for t in cover[u])):
            A.add(u)
    removed = sorted(set(U) - A)
    leftovers = tuples_within(sys, sorted(A), guard=budget)
    if leftovers:
        raise AssertionError("adversary produced an uncertified subset")
    return AdversaryReport(sorted(A), len(A) / len(U), removed,
                           len(tuples_), True)


def adversary_colouring(sys: SequenceSystem, U, r, budget=5000, seed=0):
    """Colour U with r colours to minimize monochromatic tuples of S inside
    U; local search with restarts.  Returns (colouring dict, count), with
    the count re-derived from the returned colouring."""
    if r < 1:
        raise ValueError("need at least one colour")
    U = sorted(int(u) for u in U)
    if not U:
        return {}, 0
    tuples_ = tuples_within(sys, U)
    pos = {u: i for i, u in enumerate(U)}
    touching = [[] for _ in U]
    tidx = [tuple(pos[v] for v in s) for s in tuples_]
    for t, s in enumerate(tidx):
        for i in set(s):
            touching[i].append(t)

    def mono(col, t):
        s = tidx[t]
        first = col[s[0]]
        return all(col[i] == first for i in s[1:])

    def total(col):
        return sum(1 for t in range(len(tidx)) if mono(col, t))

    if r >= len(U):
        col = list(range(len(U)))
        cnt = total(col)
        return {str(u): col[i] for i, u in enumerate(U)}, cnt
    rng = np.random.default_rng(derive_seed(seed, "colouring"))
    best_cnt, best_col = None, None
    evals = 0
    while evals < budget:
        col = list(rng.integers(0, r, size=len(U)))
        improved = True
        while improved and evals < budget:
            improved = False
            for i in range(len(U)):
                base = col[i]
                scores = []
                for c in range(r):
                    col[i] = c
                    scores.append((sum(1 for t in touching[i]
                                       if mono(col, t)), c))
                    evals += 1
                _, c = min(scores)
                col[i] = c
                if c != base and min(scores)[0] < scores[base][0]:
                    improved = True
        cnt = total(col)
        if best_cnt is None or cnt < best_cnt:
            best_cnt, best_col = cnt, list(col)
        if best_cnt == 0:
            break
    recount = total(best_col)
    assert recount == best_cnt
    return {str(u): best_col[i] for i, u in enumerate(U)}, recount
