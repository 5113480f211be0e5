"""Auxiliary-search tests: partition enumeration, the fast advantage
objective against the direct evaluation route, hill-climb quality against
the exhaustive grid, and frontier tracing."""

import numpy as np
import pytest

import swsecrecy as sw
from swsecrecy.auxsearch import (
    SearchBudget,
    enumerate_vmaps,
    make_advantage_objective,
    make_multi_tap_objective,
    maximize_delta_uncoded,
    maximize_multi_tap,
    oracle_grid_u,
    trace_inner_frontier,
)
from swsecrecy.errors import AlphabetTooLarge, TooLarge, ValidationError
from swsecrecy.probcore import (
    Alphabet,
    Channel,
    attach_channel,
    marginal,
    mutual_information,
)

from conftest import (
    copy_source_with_eve,
    degraded_cascade,
    dsbs_with_eve,
    random_joint,
)

DELTA_DEGRADED = 0.21108145213899854  # h(0.18) - h(0.1), hand-derived


# ---- helper partitions --------------------------------------------------

def test_identity_partition_always_qualifies(rng):
    j = random_joint(rng, (2, 3, 2), names=["A", "C", "E"])
    vmaps = enumerate_vmaps(j)
    assert any(len(set(v.labels)) == j.alphabet("C").size for v in vmaps)


def test_deterministic_helper_admits_all_partitions():
    # C a function of A: every partition keeps C reconstructible from (A, V)
    a = Alphabet("A", ("0", "1", "2"))
    c = Alphabet("C", ("0", "1", "2"))
    mass = np.zeros((3, 3))
    mass[0, 0] = mass[1, 1] = mass[2, 2] = 1 / 3
    j = sw.build_joint([("A", a), ("C", c)], mass)
    j = attach_channel(j, sw.constant_channel(("A", a), "E"), "A")
    assert len(enumerate_vmaps(j)) == 5  # all set partitions of three symbols


def test_generic_pair_admits_identity_only():
    j = dsbs_with_eve(0.1, 0.25)
    vmaps = enumerate_vmaps(j)
    assert [v.labels for v in vmaps] == [(0, 1)]


def test_partition_guard():
    a = Alphabet("A", ("0", "1"))
    c = Alphabet("C", tuple(str(i) for i in range(11)))
    mass = np.full((2, 11), 1.0 / 22)
    j = sw.build_joint([("A", a), ("C", c)], mass)
    with pytest.raises(AlphabetTooLarge):
        enumerate_vmaps(j)


# ---- objective identity (fast route vs direct route) --------------------

def test_advantage_objective_matches_direct_evaluation(rng):
    for _ in range(25):
        j = random_joint(rng, (2, 2, 2), names=["A", "B", "E"])
        p_ab = marginal(j, ("A", "B")).mass
        p_ae = marginal(j, ("A", "E")).mass
        f = make_advantage_objective(p_ab, p_ae)
        m = int(rng.integers(1, 4))
        q = rng.dirichlet(np.ones(m), size=2)
        alpha_u = Alphabet("U", tuple(f"u{i}" for i in range(m)))
        ch = Channel("A", j.alphabet("A"), "U", alpha_u, q)
        ext = attach_channel(j, ch, "A")
        direct = (mutual_information(ext, "A", "B", "U")
                  - mutual_information(ext, "A", "E", "U"))
        assert f(q) == pytest.approx(direct, abs=1e-12)


def test_multi_tap_objective_single_tap_reduces(rng):
    j = random_joint(rng, (2, 2, 2), names=["A", "B", "E"])
    p_ab = marginal(j, ("A", "B")).mass
    p_ae = marginal(j, ("A", "E")).mass
    single = make_advantage_objective(p_ab, p_ae)
    multi = make_multi_tap_objective(p_ab, [p_ae])
    q = np.array([[0.7, 0.3], [0.2, 0.8]])
    assert multi(q) == pytest.approx(max(single(q), 0.0), abs=1e-15)


# ---- maximization -------------------------------------------------------

def test_degraded_cascade_constant_u_is_optimal():
    j = degraded_cascade(0.1, 0.1)
    res = maximize_delta_uncoded(j, budget=SearchBudget(restarts=8, iterations=200))
    assert res.value == pytest.approx(DELTA_DEGRADED, abs=5e-3)
    assert res.aux.effective_cardinality == 1
    assert "lower bound" in res.note


def test_oracle_matches_on_degraded_cascade():
    j = degraded_cascade(0.1, 0.1)
    res = oracle_grid_u(j, card_u=2, resolution=0.05)
    assert res.value == pytest.approx(DELTA_DEGRADED, abs=1e-2)


def test_oracle_guards():
    j = degraded_cascade()
    with pytest.raises(AlphabetTooLarge):
        oracle_grid_u(j, card_u=5)
    with pytest.raises(TooLarge):
        oracle_grid_u(j, card_u=2, resolution=0.01)


def test_search_at_least_oracle_on_random_sources(rng):
    # the climb must not fall more than 0.01 below the coarse exhaustive grid
    budget = SearchBudget(restarts=8, iterations=150, seed=7)
    for _ in range(50):
        j = random_joint(rng, (2, 2, 2), names=["A", "B", "E"])
        got = maximize_delta_uncoded(j, card_u=2, budget=budget)
        want = oracle_grid_u(j, card_u=2, resolution=0.05)
        assert got.value >= want.value - 1e-2


def test_cardinality_monotone_with_nested_initialization():
    j = dsbs_with_eve(0.1, 0.3)
    budget = SearchBudget(restarts=6, iterations=120, seed=3)
    vals = [maximize_delta_uncoded(j, card_u=k, budget=budget, b="C").value
            for k in (1, 2, 3, 4)]
    for lo, hi in zip(vals, vals[1:]):
        assert hi >= lo - 1e-12


def test_search_is_deterministic():
    j = dsbs_with_eve(0.1, 0.3)
    budget = SearchBudget(restarts=6, iterations=120, seed=11)
    r1 = maximize_delta_uncoded(j, budget=budget, b="C")
    r2 = maximize_delta_uncoded(j, budget=budget, b="C")
    assert r1.value == r2.value
    assert np.array_equal(r1.aux.channel.matrix, r2.aux.channel.matrix)


def test_budget_validation():
    with pytest.raises(ValidationError):
        SearchBudget(restarts=0)
    with pytest.raises(ValidationError):
        SearchBudget(grid_resolution=0.0)


def test_multi_tap_search_matches_single_when_one_tap():
    j = degraded_cascade(0.1, 0.1)
    budget = SearchBudget(restarts=6, iterations=120)
    single = maximize_delta_uncoded(j, budget=budget)
    multi = maximize_multi_tap(j, ["E"], budget=budget)
    assert multi.value == pytest.approx(single.value, abs=1e-9)


# ---- frontier tracing ---------------------------------------------------

def test_flagship_grid_point():
    j = copy_source_with_eve(0.25)
    tr = trace_inner_frontier(j, ra_grid=[0.0], rc_grid=[1.0],
                              budget=SearchBudget(restarts=6, iterations=150))
    cell = tr.cells[0]
    assert cell.feasible
    assert cell.delta == pytest.approx(0.8112781244591328, abs=1e-4)
    assert cell.floor_ok


def test_frontier_infeasible_marker():
    j = dsbs_with_eve(0.1, 0.25)
    tr = trace_inner_frontier(j, ra_grid=[1.0], rc_grid=[0.2],
                              budget=SearchBudget(restarts=2, iterations=40))
    assert not tr.cells[0].feasible
    assert "infeasible" in tr.cells[0].provenance


def test_frontier_convex_dominates_raw():
    j = dsbs_with_eve(0.1, 0.25)
    tr = trace_inner_frontier(
        j, ra_grid=np.linspace(0.2, 1.0, 4), rc_grid=np.linspace(0.5, 1.2, 4),
        budget=SearchBudget(restarts=3, iterations=60))
    for raw_p, cvx_p in zip(tr.raw.points, tr.convex.points):
        assert cvx_p.delta >= raw_p.delta - 1e-12
    assert tr.convex.convexified


def test_helper_cap_inactive_for_admissible_pairs(rng):
    # for every searched pair, the advantage stays below both helper caps
    for _ in range(10):
        j = random_joint(rng, (2, 2, 2), names=["A", "C", "E"])
        tr = trace_inner_frontier(j, ra_grid=[1.0], rc_grid=[2.0],
                                  budget=SearchBudget(restarts=3, iterations=60))
        i_ac = tr.constants["I(A;C)"]
        h_ca = tr.constants["H(C|A)"]
        for s in tr.searched:
            assert s.advantage <= i_ac + 1e-9
            assert s.advantage <= s.i_cv - h_ca + 1e-9
