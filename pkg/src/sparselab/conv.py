"""Convolution calculus over a sequence system.

For a system S of k-tuples and functions h_1..h_k on the ground set, the
j-th convolution is

    conv_j(h_1,..,h_k)(x) = E_{s in S_j(x)} prod_{i != j} h_i(s_i)

(the j-th argument is never evaluated; we pass k-1 functions in increasing
position order).  The capped convolution truncates pointwise at the fixed
cap 2.  The counting functional is E_{s in S} f(s_1)...f(s_k), which by
adjointness equals <f, conv_1(f,..,f)>.

Counting supports three evaluation modes:

  exact    -- enumerate S fiber by fiber (guarded);
  support  -- enumerate only tuples through the support of f: ordered support
              pairs at two determining positions for two-degrees-of-freedom
              systems, vertex-restricted injection backtracking for copy
              systems;
  mc       -- sampled tuples, with a reported standard error.

Monte Carlo caveat: capping an estimated convolution is biased relative to
capping the true value; sampled modes report their standard error and are
meant for regimes where the fiber estimate is already tight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import WeightFunction, inner_product
from .systems import (ENUM_GUARD, CopySystem, EnumerationGuardError,
                      SequenceSystem)

CAP = 2.0


def _dense_list(sys, funcs, expect):
    if len(funcs) != expect:
        raise ValueError(f"need {expect} functions, got {len(funcs)}")
    out = []
    for f in funcs:
        if f.domain != sys.ground:
            raise ValueError("function domain does not match the system")
        out.append(f.dense())
    return out


@dataclass
class ConvolutionResult:
    j: int
    at: object            # None for all of X, else int64 array of x indices
    values: np.ndarray
    mode: str
    stderr: object = None  # per-point standard errors for mc fibers

    def function(self, domain) -> WeightFunction:
        if self.at is not None:
            raise ValueError("partial evaluation; no full function available")
        return WeightFunction(domain, values=self.values)

    def max(self):
        return float(np.max(self.values)) if self.values.size else 0.0


def _fiber_products(sys, j, arrs, x, samples=0, seed=0):
    """(mean, stderr, fiber_rows) of prod_{i != j} h_i(s_i) over S_j(x)."""
    if samples:
        mat = sys.sample_fiber(j, x, samples, seed)
    else:
        mat = sys.fiber_matrix(j, x)
    if mat.shape[0] == 0:
        return 0.0, 0.0, 0
    prod = np.ones(mat.shape[0])
    pos = 0
    for i in range(1, sys.k + 1):
        if i == j:
            continue
        prod *= arrs[pos][mat[:, i - 1]]
        pos += 1
    mean = float(prod.mean())
    err = float(prod.std(ddof=1) / math.sqrt(prod.size)) if samples and prod.size > 1 else 0.0
    return mean, err, mat.shape[0]


def convolve(sys: SequenceSystem, j: int, funcs, mode="exact", xs=None,
             fiber_samples=0, seed=0, guard=ENUM_GUARD) -> ConvolutionResult:
    """conv_j of k-1 functions (increasing position order, position j skipped).

    mode "exact" enumerates each requested fiber; mode "mc" samples
    fiber_samples tuples per point and reports a per-point standard error.
    xs=None evaluates at every x (guarded), else only at the given indices.
    """
    if not 1 <= j <= sys.k:
        raise ValueError(f"position j={j} out of range 1..{sys.k}")
    arrs = _dense_list(sys, funcs, sys.k - 1)
    X = sys.ground.size
    if xs is None:
        points = np.arange(X)
        if mode == "exact" and X * max(sys.fiber_size(j), 1) > guard:
            raise EnumerationGuardError(
                f"full exact convolution needs {X * sys.fiber_size(j)} rows; "
                "pass xs= or use mode='mc'")
    else:
        points = np.asarray(xs, dtype=np.int64)
    if mode == "exact":
        fiber_samples = 0
    elif mode != "mc":
        raise ValueError(f"unknown mode {mode!r}")
    elif fiber_samples <= 0:
        raise ValueError("mode='mc' needs fiber_samples > 0")
    vals = np.empty(points.size)
    errs = np.zeros(points.size) if fiber_samples else None
    for t, x in enumerate(points):
        m, e, _ = _fiber_products(sys, j, arrs, int(x), fiber_samples,
                                  seed + 31 * t)
        vals[t] = m
        if fiber_samples:
            errs[t] = e
    return ConvolutionResult(j, None if xs is None else points, vals,
                             mode, errs)


def capped_convolve(sys, j, funcs, mode="exact", xs=None, fiber_samples=0,
                    seed=0, guard=ENUM_GUARD) -> ConvolutionResult:
    """min(conv_j, 2); arguments must be non-negative."""
    for f in funcs:
        low = (min(f.sparse_items().values(), default=0.0) if f.is_sparse
               else float(f.dense().min()))
        if low < 0:
            raise ValueError("capped convolution needs non-negative arguments")
    res = convolve(sys, j, funcs, mode, xs, fiber_samples, seed, guard)
    res.values = np.minimum(res.values, CAP)
    return res


def count_functional(sys: SequenceSystem, f: WeightFunction, mode="auto",
                     samples=0, seed=0, guard=ENUM_GUARD):
    """E_{s in S} f(s_1)...f(s_k).  Returns (value, stderr); stderr is 0 for
    the deterministic modes."""
    if f.domain != sys.ground:
        raise ValueError("function domain does not match the system")
    if mode == "auto":
        supp = f.support_indices()
        if sys.claims_two_dof and supp.size ** 2 * sys.k <= guard:
            mode = "support"
        elif isinstance(sys, CopySystem) and supp.size * sys.k <= guard:
            mode = "support"
        elif sys.size * sys.k <= guard:
            mode = "exact"
        else:
            raise EnumerationGuardError(
                f"|S| = {sys.size} and support {supp.size} both exceed the "
                "guard; use mode='mc'")
    if mode == "exact":
        if sys.size * sys.k > guard:
            raise EnumerationGuardError(
                f"exact count needs {sys.size * sys.k} evaluations")
        arr = f.dense()
        total = 0.0
        count = 0
        for x in range(sys.ground.size):
            mat = sys.fiber_matrix(1, x)
            if mat.shape[0] == 0:
                continue
            prod = arr[mat[:, 0]].copy()
            for i in range(1, sys.k):
                prod *= arr[mat[:, i]]
            total += float(prod.sum())
            count += mat.shape[0]
        return total / sys.size, 0.0
    if mode == "support":
        return _support_count(sys, f, guard), 0.0
    if mode == "mc":
        if samples <= 0:
            raise ValueError("mode='mc' needs samples > 0")
        return _mc_count(sys, f, samples, seed)
    raise ValueError(f"unknown mode {mode!r}")


def _support_count(sys, f, guard):
    supp = f.support_indices()
    if supp.size == 0:
        return 0.0
    if isinstance(sys, CopySystem):
        return _copy_support_count(sys, f, guard)
    if not sys.claims_two_dof:
        raise ValueError("support mode needs two degrees of freedom or copies")
    if supp.size ** 2 * sys.k > guard:
        raise EnumerationGuardError(
            f"support enumeration needs {supp.size ** 2 * sys.k} completions")
    arr = f.dense()
    # fast vectorized path when the system can complete pairs in bulk
    bulk = getattr(sys, "complete_pairs_bulk", None)
    if bulk is not None:
        total = 0.0
        for a in supp:
            mats, valid = bulk(1, 2, int(a), supp)
            if mats.shape[0] == 0:
                continue
            prod = arr[mats[:, 0]].copy()
            for i in range(1, sys.k):
                prod *= arr[mats[:, i]]
            total += float(prod.sum())
        return total / sys.size
    total = 0.0
    for a in supp:
        fa = arr[a]
        for b in supp:
            s = sys.complete_pair(1, 2, int(a), int(b))
            if s is None:
                continue
            prod = fa * arr[s[1]]
            for i in range(2, sys.k):
                prod *= arr[s[i]]
            total += prod
    return total / sys.size


def _copy_support_count(sys, f, guard):
    """Sum of injection products via backtracking restricted to vertices
    incident to the support of f."""
    ground = sys.ground
    supp = f.support_indices()
    vals = {}
    verts = set()
    for i in supp:
        e = ground.element(int(i))
        vals[e] = f.value_at(int(i))
        verts.update(e)
    verts = sorted(verts)
    pattern = sys.pattern
    covered = set(u for e in pattern.edges for u in e)
    isolated = pattern.num_vertices - len(covered)
    order = sorted(covered)
    # edges become checkable once their last vertex (in `order`) is placed
    rank_of = {u: t for t, u in enumerate(order)}
    ready = {t: [] for t in range(len(order))}
    for e in pattern.edges:
        ready[max(rank_of[u] for u in e)].append(e)
    total = 0.0
    phi = {}
    used = set()

    def recurse(t, acc):
        nonlocal total
        if t == len(order):
            total += acc
            return
        u = order[t]
        for w in verts:
            if w in used:
                continue
            phi[u] = w
            used.add(w)
            acc2 = acc
            ok = True
            for e in ready[t]:
                img = tuple(sorted(phi[v] for v in e))
                fv = vals.get(img, 0.0)
                if fv == 0.0:
                    ok = False
                    break
                acc2 *= fv
            if ok:
                recurse(t + 1, acc2)
            used.discard(w)
            del phi[u]

    recurse(0, 1.0)
    if isolated:
        total *= math.perm(sys.n - len(order), isolated)
    return total / sys.size


def _mc_count(sys, f, samples, seed):
    arr = f.dense()
    rng = np.random.default_rng(seed)
    xs = rng.integers(0, sys.ground.size, size=samples)
    vals = np.empty(samples)
    X = sys.ground.size
    for t, x in enumerate(xs):
        x = int(x)
        rows = sys.fiber_count(1, x)
        if rows == 0:
            vals[t] = 0.0
            continue
        mat = sys.sample_fiber(1, x, 1, int(rng.integers(0, 2 ** 62)))
        prod = 1.0
        for i in range(sys.k):
            prod *= arr[mat[0, i]]
        # weight by the fiber mass at x: identically 1 for homogeneous
        # systems, and it keeps non-homogeneous ones unbiased
        vals[t] = prod * rows * X / sys.size
    mean = float(vals.mean())
    err = float(vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return mean, err


def split_capped_count(sys: SequenceSystem, fs, mode="exact", tuple_samples=0,
                       x_samples=0, seed=0, guard=ENUM_GUARD):
    """E over index tuples (i_1..i_k) in [m]^k of
    <f_{i_1}, capped conv_1(f_{i_2},..,f_{i_k})>.

    Linearity in the first slot lets us average the f_i once and loop only
    over the m^{k-1} trailing tuples.  Returns (value, stderr, detail).
    """
    m = len(fs)
    if m == 0:
        raise ValueError("need at least one function")
    arrs = _dense_list(sys, fs, m)
    fbar = WeightFunction(sys.ground, values=sum(arrs) / m)
    k = sys.k
    X = sys.ground.size
    if mode == "exact":
        work = m ** (k - 1) * X * max(sys.fiber_size(1), 1)
        if work > guard:
            raise EnumerationGuardError(
                f"exact split count needs {work} rows; use mode='mc'")
        total = 0.0
        n_tuples = 0
        for combo in np.ndindex(*([m] * (k - 1))):
            res = capped_convolve(sys, 1, [fs[c] for c in combo], guard=guard)
            total += inner_product(fbar, res.function(sys.ground))
            n_tuples += 1
        return total / n_tuples, 0.0, {"mode": "exact", "tuples": n_tuples}
    if mode != "mc":
        raise ValueError(f"unknown mode {mode!r}")
    if tuple_samples <= 0 or x_samples <= 0:
        raise ValueError("mode='mc' needs tuple_samples and x_samples")
    rng = np.random.default_rng(seed)
    fbar_arr = fbar.dense()
    draws = np.empty(tuple_samples * x_samples)
    t = 0
    for _ in range(tuple_samples):
        combo = rng.integers(0, m, size=k - 1)
        sel = [arrs[c] for c in combo]
        for _ in range(x_samples):
            x = int(rng.integers(0, X))
            mean, _, _ = _fiber_products(sys, 1, sel, x)
            draws[t] = fbar_arr[x] * min(mean, CAP)
            t += 1
    value = float(draws.mean())
    err = float(draws.std(ddof=1) / math.sqrt(draws.size))
    return value, err, {"mode": "mc", "tuple_samples": tuple_samples,
                        "x_samples": x_samples}


def counting_gap_bound(sys: SequenceSystem, f: WeightFunction,
                       g: WeightFunction, guard=ENUM_GUARD):
    """Telescoping bound: |E prod f - E prod g| is at most
    sum_j |<f - g, conv_j(g,..,g,f,..,f)>| (g before position j, f after).

    Returns {"lhs": .., "rhs": .., "terms": [..]} and checks the inequality
    to 1e-9."""
    k = sys.k
    lhs = abs(count_functional(sys, f, mode="exact", guard=guard)[0]
              - count_functional(sys, g, mode="exact", guard=guard)[0])
    diff = WeightFunction(sys.ground, values=f.dense() - g.dense())
    terms = []
    for j in range(1, k + 1):
        args = [g] * (j - 1) + [f] * (k - j)
        res = convolve(sys, j, args, guard=guard)
        terms.append(abs(inner_product(diff, res.function(sys.ground))))
    rhs = float(sum(terms))
    if lhs > rhs + 1e-9:
        raise AssertionError(
            f"telescoping bound violated: lhs={lhs} rhs={rhs}")
    return {"lhs": lhs, "rhs": rhs, "terms": terms}


@dataclass
class WKernelValue:
    value: float
    intersection_size: int

    @property
    def empty(self):
        return self.intersection_size == 0


def w_kernel(sys: SequenceSystem, mid_funcs, x, y, guard=ENUM_GUARD) -> WKernelValue:
    """W(x, y) = E over S_1(x) n S_k(y) of prod_{i=2..k-1} mid_i(s_i)."""
    if len(mid_funcs) != sys.k - 2:
        raise ValueError(f"need {sys.k - 2} middle functions")
    arrs = [f.dense() for f in mid_funcs]
    inter = sys.pair_intersection(int(x), int(y))
    if inter.shape[0] == 0:
        return WKernelValue(0.0, 0)
    prod = np.ones(inter.shape[0])
    for i in range(2, sys.k):
        prod *= arrs[i - 2][inter[:, i - 1]]
    return WKernelValue(float(prod.mean()), int(inter.shape[0]))
