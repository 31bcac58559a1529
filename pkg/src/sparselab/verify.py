"""Measure-system property checks, condition checks, and tail bounds.

The numbered properties of an ensemble of associated measures mu_1..mu_m
over a system S (cap fixed at 2 throughout):

  0. ||mu_i||_1 = 1 + o(1).  The pass statistic is the deviation of the
     AVERAGED measure mu = m^{-1} sum mu_i (per-set deviations are reported
     in the witness); tolerance is caller-supplied.
  1. ||conv_j(mu_..) - capped conv_j(mu_..)||_1 <= eta for distinct index
     tuples: the L1 mass above the cap.
  2. sup_x conv_j(1,..,1, mu_..) <= 2 for j >= 2 with distinct indices
     (constant 1 in the leading slots).
  3. |<mu - 1, xi>| < lambda for xi a product of at most d basic
     anti-uniform functions (optionally mixed with set indicators).

The conditions for a single density p over fresh sets U_1..U_k:

  1. every mixed convolution with at least one constant slot stays below 3/2;
  2. the pair kernel W(x, y) = E over S_1(x) n S_k(y) of the middle measures
     stays below alpha * p * t(x), with t(x) the number of occupied y.

Closed-form tail bounds live at the bottom; the Janson-Rucinski bounds
return the minimizing rooted sub-pattern found by exhaustive edge-subset
scan.  Their leading constants are caller-supplied knobs, not derived.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .conv import CAP, capped_convolve, convolve, w_kernel
from .core import WeightFunction, expectation, inner_product, lp_norm
from .sample import derive_seed, sample_ensemble, sample_subset
from .systems import ENUM_GUARD, SequenceSystem

# full-X convolution evaluation is used below this much fiber work
EXACT_FULL_GUARD = 4 * 10 ** 6


@dataclass
class PropertyReport:
    name: str
    ok: bool
    statistic: float
    threshold: float
    stderr: float = 0.0
    witness: dict = field(default_factory=dict)
    detail: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_json(self):
        return {"name": self.name, "ok": bool(self.ok),
                "statistic": self.statistic, "threshold": self.threshold,
                "stderr": self.stderr, "witness": self.witness,
                "detail": self.detail, "notes": self.notes}


@dataclass
class BasicAntiUniform:
    """A sampled basic anti-uniform function: capped conv_j with bounded
    functions in the leading slots and measure-dominated ones trailing."""

    function: object          # WeightFunction (full evaluation)
    j: int
    indices: tuple            # profile: ensemble indices used in f-slots
    g_mode: str
    detail: dict = field(default_factory=dict)


def _distinct_tuples(m, length):
    if length == 0:
        return [()]
    return list(itertools.permutations(range(1, m + 1), length))


def _full_eval_ok(sys, guard=EXACT_FULL_GUARD):
    return sys.ground.size * max(sys.fiber_size(1), 1) <= guard


def _conv_values(sys, j, args, xs, seed):
    """Values of conv_j(args) either on all of X or at sampled xs."""
    if xs is None:
        return convolve(sys, j, args).values
    return convolve(sys, j, args, xs=xs).values


def sample_anti_uniform(sys: SequenceSystem, ensemble, j, indices,
                        g_mode="random_indicator", g_value=0.5,
                        f_mode="full", seed=0, supplied_g=None,
                        guard=EXACT_FULL_GUARD) -> BasicAntiUniform:
    """One basic anti-uniform function, evaluated on all of X.

    Leading slots (positions < j) hold [0,1]-bounded g's chosen by g_mode;
    trailing slots hold f's with 0 <= f <= mu_i for the given distinct
    ensemble indices.
    """
    k = sys.k
    if not 1 <= j <= k:
        raise ValueError(f"position j={j} out of range")
    indices = tuple(indices)
    if len(indices) != k - j:
        raise ValueError(f"need {k - j} trailing indices for j={j}")
    if len(set(indices)) != len(indices):
        raise ValueError("ensemble indices in a profile must be distinct")
    if any(not 1 <= i <= ensemble.m for i in indices):
        raise ValueError("ensemble index out of range")
    if not _full_eval_ok(sys, guard):
        raise ValueError("system too large for full anti-uniform evaluation; "
                         "evaluate through check_properties with sampled x")
    domain = sys.ground
    gs = []
    for slot in range(j - 1):
        if g_mode == "constant":
            gs.append(WeightFunction.constant(domain, g_value))
        elif g_mode == "random_indicator":
            sub = sample_subset(domain, g_value, derive_seed(seed, "g", slot))
            gs.append(WeightFunction.indicator(domain, sub))
        elif g_mode == "supplied":
            gs.append(supplied_g[slot])
        else:
            raise ValueError(f"unknown g_mode {g_mode!r}")
    fs = []
    for slot, i in enumerate(indices):
        mu = ensemble.associated_measure(i)
        if f_mode == "full":
            fs.append(mu)
        elif f_mode == "masked":
            keep = sample_subset(domain, 0.75, derive_seed(seed, "f", slot))
            mask = np.zeros(domain.size)
            mask[keep] = 1.0
            fs.append(WeightFunction(domain, values=mu.dense() * mask))
        else:
            raise ValueError(f"unknown f_mode {f_mode!r}")
    res = capped_convolve(sys, j, gs + fs)
    return BasicAntiUniform(res.function(domain), j, indices, g_mode,
                            detail={"f_mode": f_mode, "seed": seed})


def check_properties(sys: SequenceSystem, ensemble, which=(0, 1, 2, 3),
                     eta=0.1, tol0=0.05, threshold2=CAP, lam=0.1,
                     x_samples=128, pair_budget=12, p3_products=40,
                     p3_degree=3, p3_indicator_sets=(), seed=0) -> list:
    """Run the numbered property checks; returns one PropertyReport each.

    Large systems are probed at x_samples random points per index tuple
    (exact fiber averages at each probed x); small ones exactly over X.
    """
    reports = []
    m = ensemble.m
    k = sys.k
    rng = np.random.default_rng(derive_seed(seed, "properties"))
    mus = ensemble.measures()
    dense_mus = [mu.dense() for mu in mus]
    exact = _full_eval_ok(sys)
    X = sys.ground.size

    if 0 in which:
        per_set = [abs(lp_norm(mu, 1) - 1.0) for mu in mus]
        avg = ensemble.averaged_measure()
        stat = abs(lp_norm(avg, 1) - 1.0)
        worst = int(np.argmax(per_set))
        reports.append(PropertyReport(
            "property0", stat <= tol0, stat, tol0,
            witness={"per_set_deviation": per_set, "worst_index": worst + 1},
            detail={"mode": "exact"},
            notes=["pass statistic is the averaged-measure deviation; "
                   "per-set deviations are in the witness"]))

    if 1 in which:
        combos = [(j, t) for j in range(1, k + 1)
                  for t in _distinct_tuples(m, k - 1)]
        if len(combos) > pair_budget:
            pick = rng.choice(len(combos), size=pair_budget, replace=False)
            combos = [combos[i] for i in pick]
        stat, err, worst = 0.0, 0.0, None
        for j, tup in combos:
            args = [mus[i - 1] for i in tup]
            xs = None if exact else rng.integers(0, X, size=x_samples)
            vals = _conv_values(sys, j, args, xs, seed)
            excess = np.maximum(vals - CAP, 0.0)
            est = float(excess.mean())
            e = 0.0 if exact else float(excess.std(ddof=1) / math.sqrt(excess.size))
            if est > stat:
                stat, err, worst = est, e, {"j": j, "indices": list(tup)}
        reports.append(PropertyReport(
            "property1", stat <= eta, stat, eta, stderr=err,
            witness=worst or {},
            detail={"mode": "exact" if exact else "sampled_x",
                    "combos_checked": len(combos), "x_samples": x_samples}))

    if 2 in which:
        stat, worst = 0.0, None
        checked = 0
        for j in range(2, k + 1):
            for tup in _distinct_tuples(m, k - j):
                args = ([WeightFunction.constant(sys.ground, 1.0)] * (j - 1)
                        + [mus[i - 1] for i in tup])
                xs = None if exact else rng.integers(0, X, size=x_samples)
                vals = _conv_values(sys, j, args, xs, seed)
                top = float(vals.max()) if vals.size else 0.0
                checked += 1
                if top > stat:
                    stat, worst = top, {"j": j, "indices": list(tup)}
        reports.append(PropertyReport(
            "property2", stat <= threshold2, stat, threshold2,
            witness=worst or {},
            detail={"mode": "exact" if exact else "sampled_x",
                    "combos_checked": checked}))

    if 3 in which:
        if not exact:
            raise ValueError(
                "property 3 needs full anti-uniform evaluation; system too "
                "large (restrict `which` or shrink the system)")
        ones = np.ones(X)
        avg = ensemble.averaged_measure().dense() - ones
        diff = WeightFunction(sys.ground, values=avg)
        indicators = [WeightFunction.indicator(sys.ground, V)
                      for V in p3_indicator_sets]
        stat, worst = 0.0, None
        for t in range(p3_products):
            n_factors = int(rng.integers(1, p3_degree + 1))
            prod = np.ones(X)
            profile = []
            for h in range(n_factors):
                if indicators and rng.uniform() < 0.25:
                    pickv = int(rng.integers(0, len(indicators)))
                    prod = prod * indicators[pickv].dense()
                    profile.append({"indicator": pickv})
                    continue
                j = int(rng.integers(1, k + 1))
                tup = tuple(rng.permutation(m)[: k - j] + 1)
                phi = sample_anti_uniform(
                    sys, ensemble, j, tup,
                    g_mode="random_indicator",
                    g_value=float(rng.uniform(0.25, 1.0)),
                    seed=derive_seed(seed, "p3", t, h))
                prod = prod * phi.function.dense()
                profile.append({"j": j, "indices": list(tup)})
            val = abs(inner_product(diff, WeightFunction(sys.ground, values=prod)))
            if val > stat:
                stat, worst = val, {"profile": profile}
        reports.append(PropertyReport(
            "property3", stat < lam, stat, lam, witness=worst or {},
            detail={"products": p3_products, "max_degree": p3_degree,
                    "with_indicators": bool(indicators)}))

    return reports


def eta_j_good(sys, j, measures, eta, x_samples=256, seed=0) -> PropertyReport:
    """Is the supplied measure tuple (eta, j)-good: L1 cap excess at most eta?"""
    exact = _full_eval_ok(sys)
    rng = np.random.default_rng(derive_seed(seed, "etaj"))
    xs = None if exact else rng.integers(0, sys.ground.size, size=x_samples)
    vals = _conv_values(sys, j, list(measures), xs, seed)
    excess = np.maximum(vals - CAP, 0.0)
    stat = float(excess.mean())
    err = 0.0 if exact else float(excess.std(ddof=1) / math.sqrt(excess.size))
    return PropertyReport("eta_j_good", stat <= eta, stat, eta, stderr=err,
                          detail={"j": j, "mode": "exact" if exact else "sampled_x"})


def check_conditions(sys: SequenceSystem, p, trials=1, alpha=0.1, seed=0,
                     x_samples=64, pair_samples=200, threshold1=1.5) -> list:
    """Check the two single-density conditions over `trials` fresh set draws."""
    k = sys.k
    X = sys.ground.size
    exact = _full_eval_ok(sys)
    stat1, worst1 = 0.0, None
    stat2, worst2 = 0.0, None
    hits = 0
    for trial in range(trials):
        ens = sample_ensemble(sys.ground, p, k, derive_seed(seed, "cond", trial))
        mus = ens.measures()
        rng = np.random.default_rng(derive_seed(seed, "cond-probe", trial))
        # condition 1: at least one constant slot
        for j in range(1, k + 1):
            positions = [i for i in range(1, k + 1) if i != j]
            for width in range(1, k - 1):
                for L in itertools.combinations(positions, width):
                    args = []
                    for i in positions:
                        if i in L:
                            args.append(mus[i - 1])
                        else:
                            args.append(WeightFunction.constant(sys.ground, 1.0))
                    xs = None if exact else rng.integers(0, X, size=x_samples)
                    vals = _conv_values(sys, j, args, xs, seed)
                    top = float(vals.max()) if vals.size else 0.0
                    if top > stat1:
                        stat1 = top
                        worst1 = {"trial": trial, "j": j, "measure_slots": list(L)}
        # condition 2: kernel against alpha p t
        mid = mus[1: k - 1]
        for probe in range(pair_samples):
            x = int(rng.integers(0, X))
            row = sys.sample_fiber(1, x, 1, int(rng.integers(0, 2 ** 62)))[0]
            y = int(row[k - 1])
            t_x = int(np.unique(sys.fiber_matrix(1, x)[:, k - 1]).size)
            if t_x == 0:
                continue
            res = w_kernel(sys, mid, x, y)
            if res.value > 0:
                hits += 1
            ratio = res.value / (alpha * p * t_x)
            if ratio > stat2:
                stat2 = ratio
                worst2 = {"trial": trial, "x": x, "y": y, "W": res.value,
                          "t": t_x}
    return [
        PropertyReport("condition1", stat1 <= threshold1, stat1, threshold1,
                       witness=worst1 or {},
                       detail={"trials": trials,
                               "mode": "exact" if exact else "sampled_x"}),
        PropertyReport("condition2", stat2 <= 1.0, stat2, 1.0,
                       witness=worst2 or {},
                       detail={"trials": trials, "alpha": alpha,
                               "pair_samples": pair_samples,
                               "nonzero_kernels": hits},
                       notes=["statistic is max W(x,y) / (alpha p t(x))"]),
    ]


# --- closed-form tail bounds ---------------------------------------------

def chernoff_bound(delta, p, size):
    """P(||X_p| - p|X|| >= delta p |X|) <= 2 exp(-delta^2 p |X| / 4)."""
    if delta <= 0 or not 0 < p <= 1 or size <= 0:
        raise ValueError("need delta > 0, 0 < p <= 1, size > 0")
    return 2.0 * math.exp(-delta ** 2 * p * size / 4.0)


def bernstein_bound(t, M, var_sum):
    """exp(-t^2 / (2 (sum of variances + M t / 3))) for |Y_j| <= M."""
    if t <= 0 or M <= 0 or var_sum < 0:
        raise ValueError("need t > 0, M > 0, var_sum >= 0")
    return math.exp(-t ** 2 / (2.0 * (var_sum + M * t / 3.0)))


def correlation_bound(lam, p, size, C):
    """One-sided: P(<mu - 1, psi> >= lam) <= exp(-lam^2 p |X| / 3 C^2) for
    0 <= psi <= C with C >= lam."""
    if lam <= 0 or C < lam or not 0 < p <= 1 or size <= 0:
        raise ValueError("need 0 < lam <= C, 0 < p <= 1, size > 0")
    return math.exp(-lam ** 2 * p * size / (3.0 * C ** 2))


def azuma_bound(lam, c, t):
    """exp(-lam^2 / (2 c^2 t)) for t increments of size at most c."""
    if lam <= 0 or c <= 0 or t <= 0:
        raise ValueError("need lam, c, t > 0")
    return math.exp(-lam ** 2 / (2.0 * c ** 2 * t))


def capped_excess_eta(alpha):
    """Expected mass above the cap: at most eta = 7 alpha e^{-1/(14 alpha)},
    valid when the conditional means stay below 3/2 and the per-point bound
    is alpha."""
    if alpha <= 0:
        raise ValueError("need alpha > 0")
    return 7.0 * alpha * math.exp(-1.0 / (14.0 * alpha))


def rooted_copy_expectation(pattern, root, n, p, edge_subset=None):
    """E Y_L^e = p^{e_L - 1} k! (n-k)(n-k-1)...(n-v_L+1) for the sub-pattern
    L spanned by edge_subset (which must contain the root edge index)."""
    edges = pattern.edges
    if not 0 <= root < len(edges):
        raise ValueError("root edge index out of range")
    subset = tuple(sorted(edge_subset)) if edge_subset is not None \
        else tuple(range(len(edges)))
    if root not in subset:
        raise ValueError("edge subset must contain the root edge")
    verts = set()
    for e in subset:
        verts.update(edges[e])
    v_L, e_L, kk = len(verts), len(subset), pattern.k
    value = p ** (e_L - 1) * math.factorial(kk)
    for i in range(kk, v_L):
        value *= (n - i)
    return value, v_L


def jr_rooted_bound(pattern, root, n, p, c=1.0):
    """2 n^{v_K} exp(-c min_L (E Y_L^e)^{1/v_L}) over rooted sub-patterns L,
    scanned exhaustively; returns (value, minimizer info)."""
    edges = list(range(pattern.num_edges))
    rest = [e for e in edges if e != root]
    best = None
    for width in range(len(rest) + 1):
        for extra in itertools.combinations(rest, width):
            subset = tuple(sorted((root,) + extra))
            ey, v_L = rooted_copy_expectation(pattern, root, n, p, subset)
            score = ey ** (1.0 / v_L)
            if best is None or score < best[0]:
                best = (score, subset, v_L, ey)
    score, subset, v_L, ey = best
    value = 2.0 * n ** pattern.num_vertices * math.exp(-c * score)
    return value, {"min_exponent": score, "edge_subset": list(subset),
                   "v_L": v_L, "expected_rooted_copies": ey}


def jr_two_edge_bound(pattern, e1, e2, n, p, gamma, c=1.0):
    """Two-edge-rooted variant: 2 n^{v_K} exp(-c min_L (gamma E Y_L^{e1,e2})^{1/v_L})
    for gamma >= 2, with E Y_L^{e1,e2} = p^{e_L-2} n^{v_L - h}, h = |e1 u e2|."""
    if gamma < 2:
        raise ValueError("two-edge-rooted bound needs gamma >= 2")
    if e1 == e2:
        raise ValueError("root edges must differ")
    h = len(set(pattern.edges[e1]) | set(pattern.edges[e2]))
    rest = [e for e in range(pattern.num_edges) if e not in (e1, e2)]
    best = None
    for width in range(len(rest) + 1):
        for extra in itertools.combinations(rest, width):
            subset = tuple(sorted((e1, e2) + extra))
            verts = set()
            for e in subset:
                verts.update(pattern.edges[e])
            v_L, e_L = len(verts), len(subset)
            ey = p ** (e_L - 2) * n ** (v_L - h)
            score = (gamma * ey) ** (1.0 / v_L)
            if best is None or score < best[0]:
                best = (score, subset, v_L, ey)
    score, subset, v_L, ey = best
    value = 2.0 * n ** pattern.num_vertices * math.exp(-c * score)
    return value, {"min_exponent": score, "edge_subset": list(subset),
                   "v_L": v_L, "expected_rooted_copies": ey, "h": h}


def tail_bound(kind, **params):
    """Dispatcher used by the CLI; returns {"kind", "value", ...extras}."""
    if kind == "chernoff":
        return {"kind": kind, "value": chernoff_bound(
            params["delta"], params["p"], params["size"])}
    if kind == "bernstein":
        return {"kind": kind, "value": bernstein_bound(
            params["t"], params["M"], params["var_sum"])}
    if kind == "correlation":
        return {"kind": kind, "value": correlation_bound(
            params["lam"], params["p"], params["size"], params["C"])}
    if kind == "azuma":
        return {"kind": kind, "value": azuma_bound(
            params["lam"], params["c"], params["t"])}
    if kind == "capped-excess":
        return {"kind": kind, "value": capped_excess_eta(params["alpha"])}
    if kind == "jr-rooted":
        value, info = jr_rooted_bound(params["pattern"], params["root"],
                                      params["n"], params["p"],
                                      params.get("c", 1.0))
        return {"kind": kind, "value": value, **info}
    if kind == "jr-two-edge":
        value, info = jr_two_edge_bound(params["pattern"], params["e1"],
                                        params["e2"], params["n"], params["p"],
                                        params["gamma"], params.get("c", 1.0))
        return {"kind": kind, "value": value, **info}
    raise ValueError(f"unknown tail bound kind {kind!r}")
