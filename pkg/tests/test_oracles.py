"""Tests for the brute-force oracles and adversarial heuristics."""

import itertools
from fractions import Fraction

import numpy as np
import pytest

from sparselab.conv import count_functional
from sparselab.core import make_measure
from sparselab.oracles import (
    AdversaryReport,
    HostGraph,
    adversary_colouring,
    adversary_free_subset,
    critical_exponent,
    extremal_number,
    pattern_stats,
    ramsey_multiplicity,
    ramsey_multiplicity_system,
    supersaturation_count,
    tuples_within,
    varnavides_count,
)
from sparselab.systems import PatternHypergraph, build_system

from bruteforce import brute_aps

K3 = PatternHypergraph.complete(3)
K4 = PatternHypergraph.complete(4)
C4 = PatternHypergraph.cycle(4)


# --- pattern statistics ---------------------------------------------------

def test_pattern_stats_exact_rationals():
    s3 = pattern_stats(K3)
    assert s3.m_k == Fraction(2) and s3.critical_exponent == Fraction(1, 2)
    s4 = pattern_stats(K4)
    assert s4.m_k == Fraction(5, 2) and s4.critical_exponent == Fraction(2, 5)
    fano = pattern_stats(PatternHypergraph.fano())
    assert fano.m_k == Fraction(3, 2)
    assert fano.critical_exponent == Fraction(2, 3)
    assert s3.strictly_balanced and s4.strictly_balanced
    assert fano.strictly_balanced


def test_pattern_stats_unbalanced_witness():
    # K4 with a pendant edge: overall density drops but the K4 inside keeps
    # its own, so strict balance fails with that sub-pattern as witness
    edges = list(K4.edges) + [(3, 4)]
    K = PatternHypergraph(2, 5, tuple(edges))
    stats = pattern_stats(K)
    assert stats.m_k == Fraction(6, 3)
    assert not stats.strictly_balanced
    # the witness is a proper sub-pattern at least as dense as the whole
    w = stats.witness
    assert len(w["vertices"]) < 5
    assert Fraction(*w["m_k"]) >= stats.m_k
    with pytest.raises(ValueError):
        pattern_stats(PatternHypergraph(2, 2, ((0, 1),)))


def test_critical_exponents_by_kind():
    assert critical_exponent(build_system(kind="ap", n=13, k=3)) == Fraction(1, 2)
    assert critical_exponent(build_system(kind="ap", n=13, k=5)) == Fraction(1, 4)
    assert critical_exponent(
        build_system(kind="copies", n=8, pattern="K4")) == Fraction(2, 5)
    assert critical_exponent(
        build_system(kind="schur", n=13)) == Fraction(1, 2)
    poly = build_system(kind="polyap", n=53, k=3, r=2)
    assert critical_exponent(poly) == Fraction(1, 4)


# --- varnavides -----------------------------------------------------------

def test_varnavides_full_density_gives_all_tuples():
    sys = build_system(kind="ap", n=5, k=3)
    count, witness = varnavides_count(sys, 1.0)
    assert count == sys.size == 20
    assert witness == list(range(5))


def test_varnavides_z5_free_size_two():
    sys = build_system(kind="ap", n=5, k=3)
    # every 3-subset of Z_5 carries an AP, so density 3/5 forces tuples...
    count3, _ = varnavides_count(sys, 3 / 5)
    assert count3 > 0
    # ...while 2-element subsets never do: max AP-free size is 2
    count2, witness = varnavides_count(sys, 2 / 5)
    assert count2 == 0 and len(witness) == 2


def test_varnavides_monotone_in_density():
    sys = build_system(kind="ap", n=13, k=3)
    counts = [varnavides_count(sys, m / 13)[0] for m in (2, 5, 8, 10, 13)]
    assert counts == sorted(counts)
    assert counts[0] == 0 and counts[-1] == sys.size


def test_varnavides_branch_and_bound_agrees():
    sys = build_system(kind="ap", n=7, k=3)
    exact, _ = varnavides_count(sys, 5 / 7)
    bb, witness = varnavides_count(sys, 5 / 7, guard=10, node_budget=10 ** 5)
    assert bb == exact
    assert len(witness) == 5
    with pytest.raises(ValueError, match="adversary_free_subset"):
        varnavides_count(sys, 5 / 7, guard=10)
    with pytest.raises(ValueError, match="budget"):
        varnavides_count(sys, 5 / 7, guard=10, node_budget=3)


# --- supersaturation and cross-agreement ----------------------------------

def test_supersaturation_known_values():
    assert supersaturation_count(HostGraph.complete(5), K3) == 60
    assert supersaturation_count(HostGraph.cycle(5), K3) == 0
    empty = HostGraph.from_edges(6, [])
    assert supersaturation_count(empty, K3) == 0
    assert supersaturation_count(HostGraph.complete(4), C4) == 3 * 8
    with pytest.raises(ValueError):
        supersaturation_count(HostGraph.complete(5),
                              PatternHypergraph.complete_uniform(4, 3))


def _hosts(n, rng):
    yield HostGraph.complete(n)
    yield HostGraph.cycle(n)
    full = list(itertools.combinations(range(n), 2))
    keep = [e for e in full if rng.uniform() < 0.5]
    if keep:
        yield HostGraph.from_edges(n, keep)


def test_supersaturation_matches_count_functional():
    # labeled copies == count_functional on the copy system with the host's
    # characteristic measure, renormalized by |S| (|X|/|E|)^{-e_K}
    rng = np.random.default_rng(12)
    for n in (5, 6, 7):
        for K in (K3, K4, C4):
            if K.num_vertices > n:
                continue
            sys = build_system(kind="copies", n=n, pattern=K)
            for host in _hosts(n, rng):
                direct = supersaturation_count(host, K)
                edges = [sys.ground.index(e) for e in host.edges]
                f = make_measure(sys.ground, edges, "characteristic")
                cnt, err = count_functional(sys, f, mode="exact")
                assert err == 0.0
                scaled = cnt * sys.size * (
                    len(edges) / sys.ground.size) ** K.num_edges
                assert scaled == pytest.approx(direct, abs=1e-6)


# --- ramsey multiplicity --------------------------------------------------

def _recount_mono(witness, n, r):
    total = 0
    for tri in itertools.combinations(range(n), 3):
        cols = {witness[str(e)] for e in itertools.combinations(tri, 2)}
        if len(cols) == 1:
            total += 1
    return total


def test_ramsey_k6_two_mono_triangles():
    count, witness = ramsey_multiplicity(HostGraph.complete(6), K3, 2)
    assert count == 2
    assert _recount_mono(witness, 6, 2) == 2


def test_ramsey_k5_zero():
    count, witness = ramsey_multiplicity(HostGraph.complete(5), K3, 2)
    assert count == 0
    assert _recount_mono(witness, 5, 2) == 0


def test_ramsey_one_colour_counts_all_copies():
    count, _ = ramsey_multiplicity(HostGraph.complete(6), K3, 1)
    assert count == 20   # C(6,3) unordered triangles


def test_ramsey_invariant_under_relabeling():
    rng = np.random.default_rng(3)
    host = HostGraph.complete(6)
    base, _ = ramsey_multiplicity(host, K3, 2)
    for _ in range(3):
        perm = list(rng.permutation(6))
        again, _ = ramsey_multiplicity(host.relabel(perm), K3, 2)
        assert again == base


def test_ramsey_guard_and_heuristic():
    big = HostGraph.complete(8)     # 2^27 colourings: over the guard
    with pytest.raises(ValueError, match="heuristic"):
        ramsey_multiplicity(big, K3, 2)
    count, witness = ramsey_multiplicity(HostGraph.complete(5), K3, 2,
                                         mode="heuristic", budget=4000, seed=1)
    assert count == 0
    assert _recount_mono(witness, 5, 2) == 0


def test_ramsey_system_variant():
    sys = build_system(kind="schur", n=7)
    total = len(list(sys.tuples()))
    full, _ = ramsey_multiplicity_system(sys, 1)
    assert full == total
    count, witness = ramsey_multiplicity_system(sys, 2)
    assert 0 <= count <= total
    assert len(witness) == sys.ground.size
    again, _ = ramsey_multiplicity_system(sys, 2)
    assert again == count


# --- extremal numbers -----------------------------------------------------

def test_extremal_known_values():
    val4, wit4 = extremal_number(4, K3)
    assert val4 == 4
    val5, wit5 = extremal_number(5, K3)
    assert val5 == 6
    assert len(wit5) == 6
    # the witness is triangle-free
    assert supersaturation_count(
        HostGraph.from_edges(5, [tuple(e) for e in wit5]), K3) == 0


def test_extremal_pattern_too_large():
    val, wit = extremal_number(3, K4)
    assert val == 3 and len(wit) == 3    # all edges fit, no K4 possible
    with pytest.raises(ValueError):
        extremal_number(6, K3, budget=5)


# --- adversaries ----------------------------------------------------------

def test_tuples_within_matches_bruteforce():
    sys = build_system(kind="ap", n=13, k=3)
    rng = np.random.default_rng(4)
    U = sorted(rng.choice(13, size=8, replace=False))
    got = set(tuples_within(sys, U))
    expected = {s for s in brute_aps(13, 3) if set(s).issubset(U)}
    assert got == expected


def test_tuples_within_copy_system():
    sys = build_system(kind="copies", n=5, pattern="K3")
    all_edges = list(range(sys.ground.size))
    assert len(tuples_within(sys, all_edges)) == 60
    # C_5 edge subset holds no triangle
    cyc = [sys.ground.index(tuple(sorted((i, (i + 1) % 5)))) for i in range(5)]
    assert tuples_within(sys, cyc) == []


def test_adversary_free_subset_z5():
    sys = build_system(kind="ap", n=5, k=3)
    rep = adversary_free_subset(sys, range(5))
    assert isinstance(rep, AdversaryReport)
    assert rep.certified
    assert len(rep.subset) == 2 and rep.density == pytest.approx(0.4)
    assert rep.tuples_in_U == 20


def test_adversary_free_subset_trivial_cases():
    sys = build_system(kind="ap", n=13, k=3)
    rep = adversary_free_subset(sys, [])
    assert rep.subset == [] and rep.density == 1.0
    rep2 = adversary_free_subset(sys, [0, 1])
    assert rep2.subset == [0, 1] and rep2.density == 1.0


def test_adversary_free_subset_sparse_set():
    sys = build_system(kind="ap", n=101, k=3)
    rng = np.random.default_rng(8)
    U = sorted(rng.choice(101, size=20, replace=False))
    rep = adversary_free_subset(sys, U)
    assert rep.certified
    assert rep.density >= 0.5
    assert set(rep.subset) | set(rep.removed) == set(U)


def test_adversary_colouring_pentagon():
    sys = build_system(kind="copies", n=5, pattern="K3")
    U = list(range(sys.ground.size))
    colouring, count = adversary_colouring(sys, U, 2, budget=6000, seed=2)
    assert count == 0
    assert len(colouring) == 10


def test_adversary_colouring_many_colours():
    sys = build_system(kind="ap", n=13, k=3)
    colouring, count = adversary_colouring(sys, range(13), 13)
    assert count == 0
    assert sorted(int(c) for c in colouring.values()) == list(range(13))


def test_adversary_colouring_deterministic():
    sys = build_system(kind="ap", n=11, k=3)
    a = adversary_colouring(sys, range(11), 2, budget=800, seed=5)
    b = adversary_colouring(sys, range(11), 2, budget=800, seed=5)
    assert a == b
