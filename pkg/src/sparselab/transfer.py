"""Dense-model machinery: sampled anti-uniform families, the family norm,
a minimax LP solver producing the dense model g, positive-part polynomial
approximation, counting-lemma verification, and randomized rounding.

Everything is stated relative to a FINITE sampled family of basic
anti-uniform functions (capped convolutions with bounded leading slots and
measure-dominated trailing slots, constant 1 always included, optional set
indicators appended).  Guarantees are family-relative by design; the
achieved norm is always recomputed exactly from the returned g rather than
trusted from the solver.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as npcheb
from numpy.polynomial import polynomial as nppoly
from scipy.optimize import linprog

from .conv import count_functional, split_capped_count
from .core import GroundSet, WeightFunction, expectation, inner_product
from .sample import derive_seed, uniform01
from .verify import sample_anti_uniform

_G_CONSTANTS = (1.0, 0.75, 0.5, 0.25)


@dataclass
class AntiUniformFamily:
    domain: GroundSet
    members: list                    # WeightFunction, constant 1 first
    descriptors: list                # one dict per member
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.members)

    def matrix(self) -> np.ndarray:
        """Member values stacked into a (len, |X|) array (cached)."""
        cached = getattr(self, "_matrix", None)
        if cached is None or cached.shape[0] != len(self.members):
            cached = np.stack([m.dense() for m in self.members])
            self._matrix = cached
        return cached

    def prefix(self, size) -> "AntiUniformFamily":
        if not 1 <= size <= len(self.members):
            raise ValueError("prefix size out of range")
        return AntiUniformFamily(self.domain, self.members[:size],
                                 self.descriptors[:size],
                                 dict(self.provenance, prefix=size))


def _structured_profiles(k, m):
    """Deterministic enumeration of (j, indices, g constant) profiles.

    j = 1 has no bounded slots, so the g constant is emitted only once.
    """
    out = []
    for j in range(1, k + 1):
        for tup in itertools.permutations(range(1, m + 1), k - j):
            if j == 1:
                out.append((j, tup, None))
            else:
                for c in _G_CONSTANTS:
                    out.append((j, tup, c))
    return out


def build_family(sys, ensemble, size, sets=None, seed=0) -> AntiUniformFamily:
    """A family of `size` basic anti-uniform functions over sys/ensemble.

    Construction order is deterministic given the seed, and families of different
    sizes with the same seed agree on their common prefix.  Supplied sets
    become indicator members appended beyond `size`.
    """
    if size < 1:
        raise ValueError("family size must be at least 1")
    domain = sys.ground
    members = [WeightFunction.constant(domain, 1.0)]
    descriptors = [{"kind": "constant"}]
    for j, tup, c in _structured_profiles(sys.k, ensemble.m):
        if len(members) >= size:
            break
        if c is None:
            phi = sample_anti_uniform(sys, ensemble, j, tup, seed=seed)
            desc = {"kind": "basic", "j": j, "indices": list(tup)}
        else:
            phi = sample_anti_uniform(sys, ensemble, j, tup,
                                      g_mode="constant", g_value=c, seed=seed)
            desc = {"kind": "basic", "j": j, "indices": list(tup),
                    "g_constant": c}
        members.append(phi.function)
        descriptors.append(desc)
    idx = 0
    while len(members) < size:
        rng = np.random.default_rng(derive_seed(seed, "family", idx))
        j = int(rng.integers(1, sys.k + 1))
        tup = tuple(int(v) for v in rng.permutation(ensemble.m)[: sys.k - j] + 1)
        g_value = float(rng.uniform(0.25, 1.0))
        f_mode = "masked" if rng.uniform() < 0.5 else "full"
        phi = sample_anti_uniform(sys, ensemble, j, tup,
                                  g_mode="random_indicator", g_value=g_value,
                                  f_mode=f_mode,
                                  seed=derive_seed(seed, "family", idx))
        members.append(phi.function)
        descriptors.append({"kind": "basic", "j": j, "indices": list(tup),
                            "g_density": g_value, "f_mode": f_mode})
        idx += 1
    for V in (sets or []):
        members.append(WeightFunction.indicator(domain, V))
        descriptors.append({"kind": "indicator",
                            "size": int(np.asarray(V).size)})
    return AntiUniformFamily(domain, members, descriptors,
                             provenance={"size": size, "seed": seed,
                                         "system": sys.descriptor(),
                                         "ensemble_seed": ensemble.master_seed,
                                         "indicators": len(sets or [])})


def antiuniform_norm(h: WeightFunction, family: AntiUniformFamily) -> float:
    """max over members of |<h, phi>|."""
    if not family.members:
        raise ValueError("family is empty")
    vals = family.matrix() @ h.dense() / family.domain.size
    return float(np.abs(vals).max())


@dataclass
class DenseModelResult:
    g: WeightFunction
    achieved_norm: float
    scaling: float                   # the applied (1+eps)^{-1}
    lp_optimum: float
    status: str
    family_size: int
    iterations: int = 0

    def to_json(self):
        return {"g": [repr(v) for v in self.g.dense()],
                "achieved_norm": repr(self.achieved_norm),
                "scaling": repr(self.scaling),
                "lp_optimum": repr(self.lp_optimum),
                "status": self.status, "family_size": self.family_size,
                "iterations": self.iterations}


def solve_dense_model(f: WeightFunction, family: AntiUniformFamily,
                      eps=0.0, tolerance=1e-9, maxiter=None) -> DenseModelResult:
    """min over 0 <= g <= 1 of max_phi |<f/(1+eps) - g, phi>| as an LP.

    Variables (g, t); two rows per family member.  achieved_norm comes from
    a final exact pass, never from the solver's objective.
    """
    fd = f.dense()
    if fd.min() < 0:
        raise ValueError("dense-model input must be nonnegative")
    X = family.domain.size
    scaling = 1.0 / (1.0 + eps)
    target = fd * scaling
    Phi = family.matrix() / X
    b = Phi @ target
    M = Phi.shape[0]
    c = np.zeros(X + 1)
    c[-1] = 1.0
    A = np.zeros((2 * M, X + 1))
    A[:M, :X] = Phi
    A[M:, :X] = -Phi
    A[:, -1] = -1.0
    b_ub = np.concatenate([b, -b])
    bounds = [(0.0, 1.0)] * X + [(0.0, None)]
    options = {}
    if maxiter is not None:
        options["maxiter"] = maxiter
    res = linprog(c, A_ub=A, b_ub=b_ub, bounds=bounds, method="highs",
                  options=options or None)
    if res.x is not None:
        g_arr = np.clip(res.x[:X], 0.0, 1.0)
        status = "optimal" if res.status == 0 else f"best-so-far:{res.message}"
        lp_opt = float(res.fun) if res.fun is not None else math.inf
    else:
        g_arr = np.clip(target, 0.0, 1.0)
        status = f"fallback:{res.message}"
        lp_opt = math.inf
    g = WeightFunction(family.domain, values=g_arr)
    achieved = float(np.abs(Phi @ (target - g_arr)).max())
    return DenseModelResult(g, achieved, scaling, lp_opt, status,
                            len(family), int(getattr(res, "nit", 0) or 0))


@dataclass
class ColouringModelResult:
    gs: list
    achieved_norm: float
    lp_optimum: float
    status: str

    def to_json(self):
        return {"gs": [[repr(v) for v in g.dense()] for g in self.gs],
                "achieved_norm": repr(self.achieved_norm),
                "lp_optimum": repr(self.lp_optimum), "status": self.status}


def solve_dense_model_colouring(fs, family: AntiUniformFamily,
                                eps=0.0) -> ColouringModelResult:
    """Coupled solves: min t s.t. |<f_i/(1+eps) - g_i, phi>| <= t for all i
    and phi, with the pointwise budget g_1 + ... + g_r <= 1."""
    r = len(fs)
    if r < 1:
        raise ValueError("need at least one function")
    X = family.domain.size
    scaling = 1.0 / (1.0 + eps)
    targets = [f.dense() * scaling for f in fs]
    for t in targets:
        if t.min() < 0:
            raise ValueError("dense-model inputs must be nonnegative")
    Phi = family.matrix() / X
    M = Phi.shape[0]
    nvar = r * X + 1
    c = np.zeros(nvar)
    c[-1] = 1.0
    rows = []
    rhs = []
    for i in range(r):
        b = Phi @ targets[i]
        block = np.zeros((2 * M, nvar))
        block[:M, i * X:(i + 1) * X] = Phi
        block[M:, i * X:(i + 1) * X] = -Phi
        block[:, -1] = -1.0
        rows.append(block)
        rhs.append(np.concatenate([b, -b]))
    budget = np.zeros((X, nvar))
    for i in range(r):
        budget[:, i * X:(i + 1) * X] = np.eye(X)
    rows.append(budget)
    rhs.append(np.ones(X))
    res = linprog(c, A_ub=np.vstack(rows), b_ub=np.concatenate(rhs),
                  bounds=[(0.0, 1.0)] * (r * X) + [(0.0, None)],
                  method="highs")
    if res.x is None:
        raise RuntimeError(f"colouring LP failed: {res.message}")
    gs = [WeightFunction(family.domain,
                         values=np.clip(res.x[i * X:(i + 1) * X], 0.0, 1.0))
          for i in range(r)]
    achieved = max(float(np.abs(Phi @ (targets[i] - gs[i].dense())).max())
                   for i in range(r))
    status = "optimal" if res.status == 0 else f"best-so-far:{res.message}"
    return ColouringModelResult(gs, achieved, float(res.fun), status)


# --- positive-part polynomial --------------------------------------------

@dataclass
class PolynomialApprox:
    coefficients: list               # a_0..a_d, monomial basis on [-2,2]
    degree: int
    certified_error: float
    grid_error: float
    weight_sum: float                # M = sum_{j>=1} |a_j|

    def __call__(self, x):
        return nppoly.polyval(x, np.asarray(self.coefficients))

    def to_json(self):
        return json.dumps({"coefficients": [repr(c) for c in self.coefficients],
                           "degree": self.degree,
                           "certified_error": repr(self.certified_error),
                           "grid_error": repr(self.grid_error),
                           "weight_sum": repr(self.weight_sum)})

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls([float(c) for c in d["coefficients"]], d["degree"],
                   float(d["certified_error"]), float(d["grid_error"]),
                   float(d["weight_sum"]))


def _certify(coeffs, grid_points=10 ** 4):
    grid = np.linspace(-2.0, 2.0, grid_points)
    vals = nppoly.polyval(grid, coeffs)
    grid_err = float(np.abs(vals - np.maximum(grid, 0.0)).max())
    deriv = nppoly.polyder(coeffs)
    lip = float(np.abs(nppoly.polyval(grid, deriv)).max())
    spacing = 4.0 / (grid_points - 1)
    return grid_err, grid_err + (lip + 1.0) * spacing / 2.0


def approx_positive_part(eps) -> PolynomialApprox:
    """Polynomial P with |P(x) - max(x, 0)| <= eps on [-2,2].

    Built from the even Chebyshev series of |u| on [-1,1] via
    max(x,0) = (x + 2|x/2|)/2, with the truncation degree raised until the
    10^4-point grid plus a Lipschitz slack certifies the target error.
    """
    if not 0 < eps < 1:
        raise ValueError("need 0 < eps < 1")
    for terms in range(1, 400):
        cheb = np.zeros(2 * terms + 1)
        cheb[0] = 2.0 / math.pi
        for k in range(1, terms + 1):
            cheb[2 * k] = (4.0 / math.pi) * (-1.0) ** (k + 1) / (4 * k * k - 1)
        r = npcheb.cheb2poly(cheb)             # |u| ~ R(u) on [-1,1]
        a = r / (2.0 ** np.arange(r.size))     # R(x/2) in x
        a[1] += 0.5                            # P(x) = x/2 + R(x/2)
        grid_err, certified = _certify(a)
        if certified <= eps:
            weight = float(np.abs(a[1:]).sum())
            return PolynomialApprox([float(v) for v in a], int(a.size - 1),
                                    certified, grid_err, weight)
    raise ValueError(f"no certified polynomial found for eps={eps}")


# --- counting-lemma verification and rounding -----------------------------

def verify_counting_lemma(sys, fs, g, eta, mode="exact", tuple_samples=0,
                          x_samples=0, count_samples=0, seed=0) -> dict:
    """Compare the m-fold split capped count of fs with the plain count of
    the dense model g; flag gap <= 4 eta + 3 * combined stderr."""
    split_val, split_err, detail = split_capped_count(
        sys, fs, mode=mode, tuple_samples=tuple_samples, x_samples=x_samples,
        seed=derive_seed(seed, "split"))
    count_mode = "auto" if count_samples == 0 else "mc"
    cnt_val, cnt_err = count_functional(sys, g, mode=count_mode,
                                        samples=count_samples,
                                        seed=derive_seed(seed, "count"))
    stderr = math.sqrt(split_err ** 2 + cnt_err ** 2)
    gap = abs(split_val - cnt_val)
    threshold = 4.0 * eta + 3.0 * stderr
    return {"split_value": split_val, "split_stderr": split_err,
            "count_value": cnt_val, "count_stderr": cnt_err,
            "gap": gap, "eta": eta, "threshold": threshold,
            "ok": gap <= threshold, "mode": mode,
            "split_detail": detail}


def round_to_indicator(g: WeightFunction, seed=0) -> WeightFunction:
    """h(x) = 1 with probability g(x), independently; deterministic in seed."""
    vals = g.dense()
    if vals.min() < 0 or vals.max() > 1:
        raise ValueError("rounding input must have values in [0, 1]")
    u = uniform01(seed, np.arange(g.domain.size))
    return WeightFunction(g.domain, values=(u < vals).astype(float))


def azuma_rounding_bound(eps, size, k):
    """P(count(h) deviates from count(g) by eps/2) <= 2 exp(-eps^2 |X| / 8 k^2)."""
    if eps <= 0 or size <= 0 or k < 1:
        raise ValueError("need eps > 0, size > 0, k >= 1")
    return 2.0 * math.exp(-eps ** 2 * size / (8.0 * k * k))
