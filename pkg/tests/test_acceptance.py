"""End-to-end acceptance gates for the whole package.

Each test prints one verdict line of the form

    ACCEPTANCE nn [PASS/FAIL] description

to the real stdout (capture suspended) and then asserts the verdict, so
the suite both reports and enforces every gate, including the stated
runtime budgets.
"""

import json
import math
from time import perf_counter

import numpy as np
import pytest

from swsecrecy.auxsearch import (
    maximize_delta_uncoded,
    oracle_grid_u,
    trace_inner_frontier,
)
from swsecrecy.binsim import (
    estimate_error,
    exact_equivocation,
    generate_codebooks,
    plan_scheme,
    xor_pair_bins,
)
from swsecrecy.cli import main
from swsecrecy.probcore import (
    Alphabet,
    Channel,
    InfoQuery,
    attach_channel,
    binary_symmetric_channel,
    build_joint,
    constant_channel,
    degradedness_test,
    entropy,
    info_measure,
    mutual_information,
)
from swsecrecy.regions import (
    RateTriple,
    contains,
    corollary1_region,
    corollary2_region,
    corollary3_region,
    corollary4_region,
    corollary5_region,
    outer_overapprox,
)

from conftest import (
    copy_source_with_eve,
    degraded_cascade,
    dsbs_joint,
    dsbs_with_eve,
    oracle_conditional_entropy,
    random_joint,
    uniform_binary_source,
)

H_01 = 0.4689955935892812
H_018 = 0.6800770457282798
H_025 = 0.8112781244591328
DELTA_DEGRADED = H_018 - H_01


@pytest.fixture
def report(capsys):
    def go(num: int, ok: bool, description: str) -> None:
        line = (f"ACCEPTANCE {num:02d} "
                f"[{'PASS' if ok else 'FAIL'}] {description}")
        with capsys.disabled():
            print(line, flush=True)
        assert ok, line
    return go


def _identity_v(j, c="C"):
    alpha = j.alphabet(c)
    return Channel(c, alpha, "V",
                   Alphabet("V", tuple(f"v{i}" for i in range(alpha.size))),
                   np.eye(alpha.size))


def _const_u(j, a="A"):
    return constant_channel((a, j.alphabet(a)), "U")


def test_acceptance_01_oracle_equivalence(report):
    t0 = perf_counter()
    rng = np.random.default_rng(11)
    joints = [
        dsbs_joint(0.1),
        dsbs_with_eve(0.1, 0.25),
        copy_source_with_eve(None),
        degraded_cascade(),
        uniform_binary_source(),
    ]
    for i in range(1000):
        shape = tuple(int(rng.integers(1, 4)) for _ in range(3))
        joints.append(random_joint(rng, shape, names=("A", "B", "C"),
                                   sparsify=0.25 if i % 3 == 0 else 0.0))
    worst = 0.0
    chain_worst = 0.0
    floor = 0.0
    for j in joints:
        names = j.names
        queries = [((names[0],), ())]
        if len(names) > 1:
            queries += [((names[0],), names[1:]),
                        ((names[0],), (names[1],)),
                        (tuple(names), ())]
        for target, given in queries:
            got = info_measure(j, InfoQuery(target=target, given=given))
            want = oracle_conditional_entropy(j, target, given)
            worst = max(worst, abs(got - want))
            floor = min(floor, got)
        if len(names) > 1:
            lhs = entropy(j, names[:2])
            rhs = entropy(j, names[0]) + entropy(j, names[1], names[0])
            chain_worst = max(chain_worst, abs(lhs - rhs))
            floor = min(floor, mutual_information(j, names[0], names[1]))
    elapsed = perf_counter() - t0
    ok = (worst <= 1e-12 and chain_worst <= 1e-12 and floor >= 0.0
          and elapsed < 10.0)
    report(1, ok,
            f"information measures match the brute-force oracle on "
            f"{len(joints)} joints (worst {worst:.1e}, chain "
            f"{chain_worst:.1e}, {elapsed:.1f}s < 10s)")


def test_acceptance_02_uncoded_region_closed_form(report):
    t0 = perf_counter()
    desc = corollary1_region(dsbs_joint(0.0))
    want = {"H(C|A)": 0.0, "H(A|C)": 0.0, "H(A,C)": 1.0,
            "I(A;C)": 1.0, "H(A)": 1.0}
    exact = all(desc.constants[k] == v for k, v in want.items())
    inside = contains(desc, RateTriple(0.5, 1.0, 0.5))
    outside = contains(desc, RateTriple(0.5, 1.0, 0.4))
    elapsed = perf_counter() - t0
    ok = (exact and inside.member and not outside.member
          and "equivocation-floor" in outside.violated and elapsed < 1.0)
    report(2, ok,
            f"copy-source region constants exact and membership verdicts "
            f"reproduced ({elapsed:.2f}s < 1s)")


def test_acceptance_03_degraded_cascade_search(report):
    t0 = perf_counter()
    j = degraded_cascade(0.1, 0.1)
    got = maximize_delta_uncoded(j)
    grid = oracle_grid_u(j, card_u=2, resolution=0.05)
    elapsed = perf_counter() - t0
    ok = (abs(got.value - DELTA_DEGRADED) <= 5e-3
          and got.aux.effective_cardinality == 1
          and abs(grid.value - got.value) <= 1e-2
          and elapsed < 60.0)
    report(3, ok,
            f"degraded-cascade advantage {got.value:.6f} vs closed form "
            f"{DELTA_DEGRADED:.6f}, constant preprocessing, grid oracle "
            f"within 0.01 ({elapsed:.1f}s < 60s)")


def test_acceptance_04_flagship_frontier_point(report):
    t0 = perf_counter()
    j = copy_source_with_eve(0.25)
    trace = trace_inner_frontier(j, [0.0], [1.0])
    cell = trace.cells[0]
    outer = outer_overapprox(j, 0.0, 1.0)
    elapsed = perf_counter() - t0
    ok = (cell.feasible and abs(cell.delta - H_025) <= 1e-4
          and outer.delta_upper >= cell.delta - 1e-12
          and outer.delta_upper <= 1.0 + 1e-12
          and elapsed < 60.0)
    report(4, ok,
            f"flagship point delta {cell.delta:.6f} vs {H_025:.6f}, outer "
            f"{outer.delta_upper:.6f} sandwiches it ({elapsed:.1f}s < 60s)")


def test_acceptance_05_sandwich_and_inactive_cap(report):
    t0 = perf_counter()
    rng = np.random.default_rng(7)
    worst_gap = -np.inf
    worst_slack = -np.inf
    for _ in range(20):
        j = random_joint(rng, (2, 2, 2), names=("A", "C", "E"))
        ra = np.linspace(0.0, entropy(j, "A"), 5)
        rc = np.linspace(0.0, entropy(j, "C"), 5)
        trace = trace_inner_frontier(j, ra, rc)
        i_ac = trace.constants["I(A;C)"]
        h_ca = trace.constants["H(C|A)"]
        for s in trace.searched:
            worst_slack = max(worst_slack, s.advantage - i_ac,
                              s.advantage - (s.i_cv - h_ca))
        for cell in trace.cells:
            if not cell.feasible:
                continue
            out = outer_overapprox(j, cell.r_a, cell.r_c)
            worst_gap = max(worst_gap, cell.delta - out.delta_upper)
    elapsed = perf_counter() - t0
    ok = worst_gap <= 1e-9 and worst_slack <= 1e-9 and elapsed < 300.0
    report(5, ok,
            f"inner within outer on 20 random sources x 5x5 grid (worst gap "
            f"{worst_gap:.1e}) and the helper-rate cap never binds for "
            f"admissible pairs (worst slack {worst_slack:.1e}) "
            f"({elapsed:.1f}s < 300s)")


def _suite_exact_configs():
    """Every exact-mode simulator configuration the test suite exercises."""
    out = []
    j = dsbs_with_eve(0.1, None)
    aux = (_const_u(j), _identity_v(j))
    for n, seed in ((8, 0), (8, 3), (12, 0), (12, 1)):
        out.append(("dsbs", plan_scheme(j, aux, n=n, seed=seed), None))
    out.append(("dsbs-undercoded",
                plan_scheme(j, aux, n=12, seed=0,
                            override_exponents={"source-bins": H_01 - 0.1}),
                None))
    jg = dsbs_with_eve(0.1, 0.25)
    out.append(("dsbs-noisy-tap",
                plan_scheme(jg, (_const_u(jg), _identity_v(jg)), n=8, seed=6),
                None))
    jc = copy_source_with_eve(None)
    auxc = (_const_u(jc), _identity_v(jc))
    out.append(("copy", plan_scheme(jc, auxc, n=12, seed=1), None))
    out.append(("copy-identity-bins",
                plan_scheme(jc, auxc, n=8, seed=2,
                            override_exponents={"source-bins": 1.0}),
                np.arange(2 ** 8)))
    out.append(("dsbs-one-bin",
                plan_scheme(j, aux, n=8, seed=2,
                            override_exponents={"source-bins": 0.0}),
                None))
    ja = uniform_binary_source("A")
    ja = attach_channel(ja, binary_symmetric_channel(0.1, "A", "C"), "A")
    ja = attach_channel(ja, Channel("A", ja.alphabet("A"), "E",
                                    Alphabet("E", ("0", "1")), np.eye(2)), "A")
    out.append(("tap-sees-source",
                plan_scheme(ja, (_const_u(ja), _identity_v(ja)), n=6, seed=3),
                None))
    pcfg = _pad_config()
    out.append(("pad", pcfg, xor_pair_bins(pcfg)))
    return out


def _pad_config():
    pa = Alphabet("A", ("00", "01", "10", "11"))
    pc = Alphabet("C", ("00", "01", "10", "11"))
    mass = np.zeros((4, 4))
    mass[np.arange(4), np.arange(4)] = 0.25
    j = build_joint([("A", pa), ("C", pc)], mass)
    j = attach_channel(j, constant_channel(("A", pa), "E"), "A")
    merge = Channel("C", pc, "V", Alphabet("V", ("v0",)), np.ones((4, 1)))
    return plan_scheme(j, (_const_u(j), merge), n=4, seed=9,
                       override_exponents={"source-bins": 1.0})


def test_acceptance_06_equivocation_floor_and_ceiling(report):
    t0 = perf_counter()
    ok = True
    details = []
    for label, cfg, bins in _suite_exact_configs():
        cb = generate_codebooks(cfg, source_bins=bins)
        rep = exact_equivocation(cb, cfg)
        if rep.mode != "exact":
            ok = False
            details.append(f"{label}: not exact")
            continue
        floor = rep.bounds["H(A|E)"] - rep.message_rate_alice
        if not (rep.per_symbol >= floor - 1e-9
                and rep.per_symbol <= rep.bounds["H(A|E)"] + 1e-9):
            ok = False
            details.append(f"{label}: {rep.per_symbol:.6f} outside "
                           f"[{floor:.6f}, {rep.bounds['H(A|E)']:.6f}]")
    elapsed = perf_counter() - t0
    ok = ok and elapsed < 120.0
    report(6, ok,
            f"equivocation obeys the converse floor and tap ceiling on all "
            f"exact-mode configurations incl. undercoded "
            f"({'; '.join(details) or 'no violations'}, "
            f"{elapsed:.1f}s < 120s)")


def test_acceptance_07_pad_corner_exact(report):
    t0 = perf_counter()
    cfg = _pad_config()
    cb = generate_codebooks(cfg, source_bins=xor_pair_bins(cfg))
    rep = exact_equivocation(cb, cfg)
    # each source symbol is a (payload, key) pair, so the payload's
    # uncertainty at the tap is the pair uncertainty minus the key bit
    key_bits = 1.0
    payload_uncertainty = rep.bounds["H(A|E)"] - key_bits
    elapsed = perf_counter() - t0
    ok = (abs(rep.per_symbol - 1.0) <= 1e-12
          and abs(rep.message_rate_alice - 1.0) <= 1e-12
          and rep.per_symbol == min(key_bits, payload_uncertainty)
          and elapsed < 1.0)
    report(7, ok,
            f"pad scheme conceals exactly {rep.per_symbol!r} bits per "
            f"symbol = min(key rate, tap uncertainty) ({elapsed:.2f}s < 1s)")


def test_acceptance_08_achievability_trend(report):
    t0 = perf_counter()
    j = dsbs_with_eve(0.1, None)
    aux = (_const_u(j), _identity_v(j))
    medians = []
    for n in (8, 12, 16):
        pes = []
        for seed in range(5):
            cfg = plan_scheme(j, aux, n=n, margins=(0.2,) * 4, delta=0.15,
                              seed=seed)
            pes.append(estimate_error(cfg, 2000).p_e)
        medians.append(float(np.median(pes)))
    under = plan_scheme(j, aux, n=12, seed=0,
                        override_exponents={"source-bins": H_01 - 0.1})
    p_under = estimate_error(under, 2000).p_e
    elapsed = perf_counter() - t0
    ok = (medians[0] >= medians[1] >= medians[2] and medians[2] < 0.5
          and p_under >= 0.9 and elapsed < 600.0)
    report(8, ok,
            f"median error rate falls with block length "
            f"{[round(m, 4) for m in medians]}, undercoded control fails at "
            f"{p_under:.3f} >= 0.9 ({elapsed:.1f}s < 600s)")


def test_acceptance_09_degradedness_feasibility(report):
    t0 = perf_counter()
    ch_b = binary_symmetric_channel(0.1, "A", "B")
    ch_e = binary_symmetric_channel(0.18, "A", "E")
    got = degradedness_test(ch_b, ch_e)
    replay = float(np.abs(ch_b.matrix @ got.witness.matrix
                          - ch_e.matrix).max()) if got.witness else np.inf
    bad = degradedness_test(binary_symmetric_channel(0.3, "A", "B"),
                            binary_symmetric_channel(0.1, "A", "E"))
    elapsed = perf_counter() - t0
    ok = (got.feasible and got.residual < 1e-7 and replay < 1e-7
          and not bad.feasible and elapsed < 5.0)
    report(9, ok,
            f"cascade degradation feasible (residual {got.residual:.1e}, "
            f"witness replays to {replay:.1e}) and the impossible pair is "
            f"rejected ({elapsed:.2f}s < 5s)")


def test_acceptance_10_multi_receiver_consistency(report):
    t0 = perf_counter()
    two = degraded_cascade(0.1, 0.1, a="A", b="B1", e="B2")
    two = attach_channel(two, binary_symmetric_channel(0.1, "B2", "E"), "B2")
    c3 = corollary3_region(two, ("B1", "B2"))
    fold_ok = (
        math.isclose(c3.constants["max_k H(A|B_k)"],
                     max(p["H(A|B_k)"] for p in c3.per_receiver),
                     abs_tol=1e-15)
        and math.isclose(c3.constants["min_k advantage"],
                         min(p["advantage_k"] for p in c3.per_receiver),
                         abs_tol=1e-15))
    casc = degraded_cascade(0.1, 0.1)
    u = _const_u(casc)
    c2 = corollary2_region(casc, u)
    c5 = corollary5_region(casc, ("E",), u)
    c4 = corollary4_region(casc, ("B",), u)
    tol = 1e-10
    c5_ok = (abs(c5.constants["H(A|B)"] - c2.constants["H(A|B)"]) <= tol
             and abs(c5.per_receiver[0]["H(A|E_k)"]
                     - c2.constants["H(A|E)"]) <= tol
             and abs(c5.per_receiver[0]["advantage_k"]
                     - c2.constants["advantage"]) <= tol)
    c4_ok = (abs(c4.constants["H(A|B_K)"] - c2.constants["H(A|B)"]) <= tol
             and abs(c4.constants["H(A|E)"] - c2.constants["H(A|E)"]) <= tol
             and abs(c4.constants["advantage"]
                     - c2.constants["advantage"]) <= tol)
    elapsed = perf_counter() - t0
    ok = fold_ok and c5_ok and c4_ok and elapsed < 30.0
    report(10, ok,
            f"multi-receiver folds match per-receiver constants and the "
            f"single-receiver specializations agree within 1e-10 "
            f"({elapsed:.2f}s < 30s)")


def test_acceptance_11_deterministic_structured_output(report, tmp_path):
    t0 = perf_counter()
    dsbs = {
        "variables": [{"name": "A", "symbols": ["0", "1"]},
                      {"name": "C", "symbols": ["0", "1"]}],
        "distribution": [0.45, 0.05, 0.05, 0.45],
        "roles": {"A": "alice-source", "C": "charlie-source"},
        "options": {"block-lengths": [8], "trials": 300,
                    "ra-grid": [0.5, 1.0], "rc-grid": [1.0]},
    }
    cascade = {
        "variables": [{"name": "A", "symbols": ["0", "1"]},
                      {"name": "B", "symbols": ["0", "1"]},
                      {"name": "E", "symbols": ["0", "1"]}],
        "distribution": [0.405, 0.045, 0.005, 0.045,
                         0.045, 0.005, 0.045, 0.405],
        "roles": {"A": "alice-source", "B": "bob-side-info",
                  "E": "eve-side-info"},
    }
    flagship = {
        "variables": [{"name": "A", "symbols": ["0", "1"]},
                      {"name": "C", "symbols": ["0", "1"]},
                      {"name": "E", "symbols": ["0", "1"]}],
        "distribution": [0.375, 0.125, 0.0, 0.0, 0.0, 0.0, 0.125, 0.375],
        "roles": {"A": "alice-source", "C": "charlie-source",
                  "E": "eve-side-info"},
        "options": {"ra-grid": [0.0], "rc-grid": [1.0]},
    }
    paths = {}
    for name, doc in (("dsbs", dsbs), ("cascade", cascade),
                      ("flagship", flagship)):
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(doc))
        paths[name] = str(p)
    runs = [
        (["info"], "dsbs"),
        (["region", "corollary1"], "dsbs"),
        (["region", "corollary2"], "cascade"),
        (["region", "theorem1-inner"], "flagship"),
        (["region", "theorem1-outer-overapprox"], "flagship"),
        (["simulate"], "dsbs"),
        (["check", "degraded"], "cascade"),
        (["check", "markov"], "cascade"),
        (["check", "sandwich"], "dsbs"),
    ]
    ok = True
    details = []
    for argv, which in runs:
        blobs = []
        digests = []
        for rep in (1, 2):
            out = tmp_path / f"{'-'.join(argv)}-{rep}.json"
            code = main([*argv, "--config", paths[which],
                         "--format", "structured", "--out", str(out)])
            if code != 0:
                ok = False
                details.append(f"{' '.join(argv)}: exit {code}")
                break
            blob = out.read_bytes()
            blobs.append(blob)
            digests.append(
                json.loads(blob)["manifest"]["config-digest"])
        if len(blobs) == 2 and (blobs[0] != blobs[1]
                                or digests[0] != digests[1]):
            ok = False
            details.append(f"{' '.join(argv)}: outputs differ")
    elapsed = perf_counter() - t0
    report(11, ok,
            f"all {len(runs)} commands re-run byte-identically with equal "
            f"manifest digests ({'; '.join(details) or 'no differences'}, "
            f"{elapsed:.1f}s)")
