"""Search over auxiliary variables entering the secrecy bounds.

Two auxiliaries appear: a helper summary V obtained from the helper source
by a deterministic partition of its alphabet (kept enumerable), and a
preprocessing channel U conditioning on the primary source.  The secrecy
advantage maximized here is

    I(A;X|U) - I(A;E|U)  =  H(A,E) - H(A,X) + H(X,U) - H(E,U)

for a product-form attachment of U, where X is the decoder-side variable
(V or uncoded side info) and E the tap.  That identity keeps each
objective evaluation down to two small matrix products.

The U search is a seeded multi-restart hill climb over rows of p(u|a) with
nested initialization across cardinalities: the best channel found with m
symbols seeds the search with m+1, so the reported optimum is monotone in
the allowed cardinality.  Results are lower bounds on the true optimum; an
exhaustive simplex-grid oracle is provided for small instances.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import AlphabetTooLarge, TooLarge, ValidationError
from .probcore import (
    Alphabet,
    Channel,
    JointDistribution,
    attach_channel,
    entropy,
    marginal,
    mutual_information,
)
from .regions import FrontierSamples, RateTriple, convexify

#: values within this of each other are treated as tied by the search
_TIE_TOL = 1e-12
#: columns of p(u|a) identical within this merge into one effective symbol
_MERGE_TOL = 1e-9
#: admissibility tolerance for helper partitions
_VMAP_TOL = 1e-10

_MAX_PARTITION_ALPHABET = 10
_ORACLE_MAX_ALPHABET = 3
_ORACLE_MAX_CARD = 3
_ORACLE_MIN_RESOLUTION = 0.05


@dataclass(frozen=True)
class VMap:
    """Deterministic partition of the helper alphabet, as a channel."""

    labels: tuple[int, ...]
    channel: Channel

    @property
    def num_blocks(self) -> int:
        return max(self.labels) + 1


@dataclass(frozen=True)
class AuxChannelU:
    """Preprocessing channel p(u | source symbol)."""

    channel: Channel

    @property
    def cardinality(self) -> int:
        return self.channel.to_alphabet.size

    @property
    def effective_cardinality(self) -> int:
        return _effective_cardinality(self.channel.matrix)


@dataclass(frozen=True)
class SearchBudget:
    """Restart and iteration counts for the hill climb, plus the oracle grid."""

    restarts: int = 32
    iterations: int = 500
    grid_resolution: float = 0.05
    seed: int = 0

    def __post_init__(self) -> None:
        if self.restarts < 1 or self.iterations < 0:
            raise ValidationError("budget needs restarts >= 1, iterations >= 0")
        if not 0.0 < self.grid_resolution <= 0.5:
            raise ValidationError("grid resolution must lie in (0, 0.5]")


@dataclass(frozen=True)
class SearchResult:
    aux: AuxChannelU
    value: float
    note: str


@dataclass(frozen=True)
class VSearch:
    """Search outcome for one helper partition."""

    vmap: VMap
    u: AuxChannelU
    advantage: float
    i_cv: float
    h_av: float
    i_av: float


@dataclass(frozen=True)
class FrontierCell:
    r_a: float
    r_c: float
    feasible: bool
    delta: float
    floor: float
    floor_ok: bool
    v_index: int | None
    provenance: str


@dataclass(frozen=True)
class FrontierTrace:
    cells: tuple[FrontierCell, ...]
    raw: FrontierSamples
    convex: FrontierSamples
    searched: tuple[VSearch, ...]
    constants: dict[str, float]


# ---- helper partitions --------------------------------------------------

def _partitions(n: int):
    """Restricted-growth strings: every set partition of n items, once."""
    labels = [0] * n

    def rec(i: int, maxlab: int):
        if i == n:
            yield tuple(labels)
            return
        for lab in range(maxlab + 2):
            labels[i] = lab
            yield from rec(i + 1, max(maxlab, lab))

    yield from rec(1, 0) if n > 1 else iter([(0,) * n])


def enumerate_vmaps(j: JointDistribution, a: str = "A", c: str = "C",
                    v_name: str = "V") -> tuple[VMap, ...]:
    """All deterministic helper partitions keeping the helper reconstructible.

    A partition qualifies when H(C | A, V) = 0 within 1e-10 on the extended
    joint; the identity partition always does.  Partitions are enumerated in
    canonical label order, so no relabeled duplicates appear.
    """
    calpha = j.alphabet(c)
    if calpha.size > _MAX_PARTITION_ALPHABET:
        raise AlphabetTooLarge(
            f"helper alphabet size {calpha.size} exceeds "
            f"{_MAX_PARTITION_ALPHABET} for partition enumeration"
        )
    out = []
    for labels in _partitions(calpha.size):
        nb = max(labels) + 1
        mat = np.zeros((calpha.size, nb))
        mat[np.arange(calpha.size), labels] = 1.0
        ch = Channel(c, calpha, v_name,
                     Alphabet(v_name, tuple(f"v{i}" for i in range(nb))), mat)
        ext = attach_channel(j, ch, c)
        if entropy(ext, c, (a, v_name)) <= _VMAP_TOL:
            out.append(VMap(labels=labels, channel=ch))
    return tuple(out)


# ---- secrecy-advantage objective ---------------------------------------

def _entropy_arr(m: np.ndarray) -> float:
    pos = m[m > 0]
    return float(-(pos * np.log2(pos)).sum()) if pos.size else 0.0


def make_advantage_objective(p_ax: np.ndarray, p_ae: np.ndarray):
    """Objective Q -> I(A;X|U) - I(A;E|U) for product attachments Q = p(u|a)."""
    p_ax = np.asarray(p_ax, dtype=float)
    p_ae = np.asarray(p_ae, dtype=float)
    const = _entropy_arr(p_ae) - _entropy_arr(p_ax)
    xa = p_ax.T.copy()
    ea = p_ae.T.copy()

    def f(q: np.ndarray) -> float:
        return const + _entropy_arr(xa @ q) - _entropy_arr(ea @ q)

    return f


def make_multi_tap_objective(p_ab: np.ndarray, p_ae_list, weights=None):
    """Objective Q -> min_k w_k * [H(A|E_k,U) - H(A|B,U)]^+ for a shared U."""
    parts = [make_advantage_objective(p_ab, p_ae) for p_ae in p_ae_list]
    if weights is None:
        weights = [1.0] * len(parts)
    if len(weights) != len(parts):
        raise ValidationError("one weight per tap required")

    def f(q: np.ndarray) -> float:
        return min(w * max(g(q), 0.0) for w, g in zip(weights, parts))

    return f


# ---- hill climb ---------------------------------------------------------

_STEPS = (0.5, 0.2, 0.05, 0.01)


def _hill_climb(f, q0: np.ndarray, iterations: int, rng: np.random.Generator):
    q = q0.copy()
    best = f(q)
    n_a, m = q.shape
    if m == 1:
        return q, best
    for _ in range(iterations):
        a = int(rng.integers(n_a))
        u = int(rng.integers(m))
        t = _STEPS[int(rng.integers(len(_STEPS)))]
        cand = q.copy()
        cand[a] = (1.0 - t) * q[a]
        cand[a, u] += t
        val = f(cand)
        if val > best + 1e-15:
            q = cand
            best = val
    return q, best


def _effective_cardinality(q: np.ndarray, tol: float = _MERGE_TOL) -> int:
    reps: list[np.ndarray] = []
    for u in range(q.shape[1]):
        col = q[:, u]
        if col.max() <= tol:
            continue
        if not any(np.abs(col - r).max() <= tol for r in reps):
            reps.append(col)
    return len(reps)


def _pad_columns(q: np.ndarray, m: int) -> np.ndarray:
    out = np.zeros((q.shape[0], m))
    out[:, : q.shape[1]] = q
    return out


def _staged_search(f, n_a: int, card_u: int, budget: SearchBudget):
    """Best channel per cardinality 1..card_u with nested initialization."""
    stage_best: list[tuple[float, np.ndarray]] = []
    prev_q: np.ndarray | None = None
    for m in range(1, card_u + 1):
        starts: list[np.ndarray] = []
        const = np.zeros((n_a, m))
        const[:, 0] = 1.0
        starts.append(const)
        if prev_q is not None:
            starts.append(_pad_columns(prev_q, m))
        if m >= n_a:
            ident = np.zeros((n_a, m))
            ident[np.arange(n_a), np.arange(n_a)] = 1.0
            starts.append(ident)
        best_val = -np.inf
        best_q = starts[0]
        for r in range(max(budget.restarts, len(starts))):
            rng = np.random.default_rng((budget.seed, m, r))
            q0 = starts[r] if r < len(starts) else rng.dirichlet(np.ones(m), size=n_a)
            q1, v1 = _hill_climb(f, q0, budget.iterations, rng)
            if v1 > best_val + _TIE_TOL or (
                abs(v1 - best_val) <= _TIE_TOL
                and _effective_cardinality(q1) < _effective_cardinality(best_q)
            ):
                best_val, best_q = v1, q1
        stage_best.append((best_val, best_q))
        prev_q = best_q
    # highest value wins; ties prefer the smallest effective alphabet
    win_val = max(v for v, _ in stage_best)
    candidates = [(v, q) for v, q in stage_best if v >= win_val - _TIE_TOL]
    candidates.sort(key=lambda t: (_effective_cardinality(t[1]), t[1].shape[1]))
    return candidates[0][1], win_val


def _as_aux(q: np.ndarray, source_alpha: Alphabet, src_name: str,
            u_name: str = "U") -> AuxChannelU:
    m = q.shape[1]
    alpha = Alphabet(u_name, tuple(f"u{i}" for i in range(m)))
    return AuxChannelU(channel=Channel(src_name, source_alpha, u_name, alpha, q))


_LOCAL_NOTE = "local search; value is a lower bound on the true optimum"


def maximize_delta_uncoded(j_abe: JointDistribution, card_u: int | None = None,
                           budget: SearchBudget | None = None,
                           a: str = "A", b: str = "B", e: str = "E") -> SearchResult:
    """Maximize the advantage [I(A;B|U) - I(A;E|U)]^+ over channels p(u|a).

    The search evaluates a constant U first (its value is the unconditioned
    advantage), then hill-climbs from seeded restarts at every cardinality
    up to ``card_u``, nesting the best lower-cardinality channel into each
    larger search.  Deterministic for a fixed budget seed.
    """
    budget = budget or SearchBudget()
    src_alpha = j_abe.alphabet(a)
    n_a = src_alpha.size
    card = card_u if card_u is not None else n_a + 2
    if card < 1:
        raise ValidationError(f"card_u must be positive, got {card}")
    p_ab = marginal(j_abe, (a, b)).mass
    p_ae = marginal(j_abe, (a, e)).mass
    f = make_advantage_objective(p_ab, p_ae)
    q, val = _staged_search(f, n_a, card, budget)
    return SearchResult(aux=_as_aux(q, src_alpha, a), value=max(val, 0.0),
                        note=_LOCAL_NOTE)


def maximize_multi_tap(j: JointDistribution, e_names, card_u: int | None = None,
                       budget: SearchBudget | None = None, weights=None,
                       a: str = "A", b: str = "B") -> SearchResult:
    """Maximize the worst-tap advantage min_k w_k [H(A|E_k,U) - H(A|B,U)]^+."""
    budget = budget or SearchBudget()
    src_alpha = j.alphabet(a)
    n_a = src_alpha.size
    card = card_u if card_u is not None else n_a + 2
    p_ab = marginal(j, (a, b)).mass
    p_ae_list = [marginal(j, (a, en)).mass for en in e_names]
    f = make_multi_tap_objective(p_ab, p_ae_list, weights)
    q, val = _staged_search(f, n_a, card, budget)
    return SearchResult(aux=_as_aux(q, src_alpha, a), value=max(val, 0.0),
                        note=_LOCAL_NOTE)


# ---- exhaustive oracle --------------------------------------------------

def _compositions(total: int, parts: int):
    for cuts in itertools.combinations(range(total + parts - 1), parts - 1):
        out = []
        prev = -1
        for cut in cuts:
            out.append(cut - prev - 1)
            prev = cut
        out.append(total + parts - 1 - prev - 1)
        yield tuple(out)


def oracle_grid_u(j_abe: JointDistribution, card_u: int = 2,
                  resolution: float = 0.05,
                  a: str = "A", b: str = "B", e: str = "E") -> SearchResult:
    """Exhaustive simplex-grid maximization of the uncoded advantage.

    Every row of p(u|a) ranges over the full probability grid with the given
    resolution.  Guarded to tiny instances; intended as an independent check
    on the hill climb, not as a production search.
    """
    src_alpha = j_abe.alphabet(a)
    n_a = src_alpha.size
    if n_a > _ORACLE_MAX_ALPHABET:
        raise AlphabetTooLarge(
            f"oracle limited to source alphabets of size {_ORACLE_MAX_ALPHABET}"
        )
    if card_u > _ORACLE_MAX_CARD:
        raise AlphabetTooLarge(f"oracle limited to card_u <= {_ORACLE_MAX_CARD}")
    if resolution < _ORACLE_MIN_RESOLUTION:
        raise TooLarge(
            f"oracle resolution below {_ORACLE_MIN_RESOLUTION} is too fine"
        )
    k = int(round(1.0 / resolution))
    rows = np.array(list(_compositions(k, card_u)), dtype=float) / k
    nrows = rows.shape[0]

    p_ab = marginal(j_abe, (a, b)).mass
    p_ae = marginal(j_abe, (a, e)).mass
    const = _entropy_arr(p_ae) - _entropy_arr(p_ab)

    def batch_entropy(t: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.where(t > 0, np.log2(np.where(t > 0, t, 1.0)), 0.0)
        return -(t * lg).sum(axis=(1, 2))

    best_val = -np.inf
    best_q = None
    total = nrows ** n_a
    batch = 4096
    for start in range(0, total, batch):
        idx = np.arange(start, min(start + batch, total))
        digits = np.empty((idx.size, n_a), dtype=np.int64)
        rem = idx.copy()
        for pos in range(n_a - 1, -1, -1):
            digits[:, pos] = rem % nrows
            rem //= nrows
        qs = rows[digits]  # (batch, n_a, card_u)
        h_bu = batch_entropy(np.einsum("ax,bau->bxu", p_ab, qs))
        h_eu = batch_entropy(np.einsum("ax,bau->bxu", p_ae, qs))
        vals = const + h_bu - h_eu
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val = float(vals[i])
            best_q = qs[i].copy()
    return SearchResult(aux=_as_aux(best_q, src_alpha, a),
                        value=max(best_val, 0.0),
                        note="exhaustive grid at resolution "
                             f"{resolution:g}")


# ---- inner-bound frontier ----------------------------------------------

def trace_inner_frontier(j_ace: JointDistribution, ra_grid, rc_grid,
                         card_u: int | None = None,
                         budget: SearchBudget | None = None,
                         a: str = "A", c: str = "C", e: str = "E",
                         v_name: str = "V") -> FrontierTrace:
    """Best provable equivocation at each rate grid point, then time-shared.

    For every admissible helper partition the secrecy advantage is maximized
    over U once (it does not depend on the rates); each grid point then
    selects among the partitions satisfying its two rate constraints, caps
    the result by the helper-rate bound min{R_C - H(C|A), I(A;C)}, and
    records whether the converse floor [H(A|E) - R_A]^+ is met.  Grid
    points with no admissible partition are marked infeasible.
    """
    budget = budget or SearchBudget()
    src_alpha = j_ace.alphabet(a)
    n_a = src_alpha.size
    card = card_u if card_u is not None else n_a + 2

    h_ca = entropy(j_ace, c, a)
    i_ac = mutual_information(j_ace, a, c)
    h_ae = entropy(j_ace, a, e)
    h_a = entropy(j_ace, a)
    p_ae = marginal(j_ace, (a, e)).mass

    searched = []
    for vm in enumerate_vmaps(j_ace, a=a, c=c, v_name=v_name):
        ext = attach_channel(j_ace, vm.channel, c)
        p_av = marginal(ext, (a, v_name)).mass
        f = make_advantage_objective(p_av, p_ae)
        q, raw_val = _staged_search(f, n_a, card, budget)
        searched.append(VSearch(
            vmap=vm,
            u=_as_aux(q, src_alpha, a),
            advantage=max(raw_val, 0.0),
            i_cv=mutual_information(ext, c, v_name),
            h_av=entropy(ext, a, v_name),
            i_av=mutual_information(ext, a, v_name),
        ))

    cells = []
    pts = []
    prov = []
    for r_a in ra_grid:
        for r_c in rc_grid:
            helper_cap = min(r_c - h_ca, i_ac)
            floor = max(h_ae - r_a, 0.0)
            feas = [
                (i, s) for i, s in enumerate(searched)
                if s.i_cv <= r_c + 1e-9 and s.h_av <= r_a + 1e-9
            ]
            if not feas:
                cells.append(FrontierCell(r_a, r_c, False, 0.0, floor, False,
                                          None, "infeasible: no admissible V"))
                continue
            vi, vs = max(feas, key=lambda t: t[1].advantage)
            delta = min(vs.advantage, helper_cap)
            if delta < -1e-12:
                cells.append(FrontierCell(
                    r_a, r_c, False, 0.0, floor, False, None,
                    "infeasible: helper rate below reconstruction minimum"))
                continue
            delta = max(delta, 0.0)
            tag = (f"aux(v={''.join(map(str, vs.vmap.labels))},"
                   f"u={vs.u.effective_cardinality})")
            cells.append(FrontierCell(
                r_a, r_c, True, delta, floor,
                delta >= floor - 1e-9, vi, tag))
            pts.append(RateTriple(r_a, r_c, delta))
            prov.append(tag)

    raw = FrontierSamples(points=tuple(pts), convexified=False,
                          provenance=tuple(prov))
    return FrontierTrace(
        cells=tuple(cells),
        raw=raw,
        convex=convexify(raw),
        searched=tuple(searched),
        constants={"H(C|A)": h_ca, "I(A;C)": i_ac, "H(A|E)": h_ae, "H(A)": h_a},
    )
