"""Rate-region descriptors for compression with an equivocation constraint.

Each region is reduced to a small set of named information constants plus a
fixed inequality system; membership testing, frontier sampling, and
time-sharing convexification operate on those descriptors.  Two membership
semantics are supported: ``as-written`` keeps every inequality including
lower bounds on the equivocation, while ``delta-downward-closed`` drops the
lower bounds and asks only whether at least the stated equivocation is
achievable at the given rates.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    MarkovPreconditionFailed,
    NotInPin,
    UnknownVariable,
    ValidationError,
)
from .probcore import (
    Channel,
    JointDistribution,
    attach_channel,
    entropy,
    marginal,
    markov_residual,
    mutual_information,
)

KINDS = (
    "theorem1-inner",
    "theorem1-outer-overapprox",
    "corollary1",
    "corollary2",
    "lemma1",
    "eve-si-at-bob",
    "eve-si-at-alice",
    "corollary3",
    "corollary4",
    "corollary5",
)

SEMANTICS = ("as-written", "delta-downward-closed")

#: default tolerance for membership comparisons
CONTAINS_TOL = 1e-9

#: auxiliary-pair admissibility tolerance for the helper reconstruction
PIN_TOL = 1e-10


@dataclass(frozen=True)
class RateTriple:
    """Alice rate, helper (Charlie) rate, and equivocation, all in bits."""

    r_a: float
    r_c: float
    delta: float


@dataclass(frozen=True)
class RatePair:
    """Alice rate and equivocation for settings with uncoded side info."""

    r_a: float
    delta: float


@dataclass(frozen=True)
class RegionDescriptor:
    """A rate region reduced to named constants plus an inequality system."""

    kind: str
    constants: dict[str, float]
    semantics: str = "as-written"
    aux_witness: tuple[Channel, ...] = ()
    per_receiver: tuple[dict[str, float], ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValidationError(f"unknown region kind {self.kind!r}")
        if self.semantics not in SEMANTICS:
            raise ValidationError(f"unknown semantics {self.semantics!r}")


@dataclass(frozen=True)
class FrontierSamples:
    """Sampled frontier points with per-point provenance strings."""

    points: tuple[RateTriple | RatePair, ...]
    convexified: bool
    provenance: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.points) != len(self.provenance):
            raise DimensionMismatch("provenance must parallel points")


@dataclass(frozen=True)
class ContainsResult:
    member: bool
    violated: tuple[str, ...]

    def __bool__(self) -> bool:
        return self.member


@dataclass(frozen=True)
class InnerPointResult:
    """Evaluation of one auxiliary pair at one rate point."""

    feasible: bool
    delta_max: float
    bounds: dict[str, float]
    violated: tuple[str, ...]
    descriptor: RegionDescriptor


@dataclass(frozen=True)
class OuterPointResult:
    """Certified over-approximation of the achievable equivocation."""

    feasible: bool
    delta_upper: float
    descriptor: RegionDescriptor


def _as_channel(obj) -> Channel:
    if isinstance(obj, Channel):
        return obj
    ch = getattr(obj, "channel", None)
    if isinstance(ch, Channel):
        return ch
    raise DimensionMismatch(f"expected a channel-like object, got {type(obj)!r}")


# ---- single-point evaluators -------------------------------------------

def inner_point(j_ace: JointDistribution, u, v, r_a: float, r_c: float,
                a: str = "A", c: str = "C", e: str = "E") -> InnerPointResult:
    """Evaluate the achievable equivocation promised by one auxiliary pair.

    ``u`` conditions on the source variable ``a``; ``v`` conditions on the
    helper variable ``c`` and must allow exact reconstruction of the helper
    from (source, V), i.e. H(C | A, V) = 0 within 1e-10.  Raises
    :class:`NotInPin` otherwise.
    """
    u_ch = _as_channel(u)
    v_ch = _as_channel(v)
    ext = attach_channel(j_ace, v_ch, c)
    v_name = v_ch.to_name
    h_cav = entropy(ext, c, (a, v_name))
    if h_cav > PIN_TOL:
        raise NotInPin(
            f"H({c}|{a},{v_name}) = {h_cav:.3e} exceeds {PIN_TOL:.0e}; "
            "the helper is not reconstructible from (source, V)"
        )
    ext = attach_channel(ext, u_ch, a)
    u_name = u_ch.to_name
    # product attachment guarantees these chains; verify defensively
    for x, y, z in ((u_name, a, (c, e, v_name)), (v_name, c, (a, e))):
        if markov_residual(ext, x, y, z) > PIN_TOL:
            raise NotInPin(f"chain {x}-{y}-{z} violated")

    i_cv = mutual_information(ext, c, v_name)
    h_av = entropy(ext, a, v_name)
    advantage = (mutual_information(ext, a, v_name, u_name)
                 - mutual_information(ext, a, e, u_name))
    h_ca = entropy(j_ace, c, a)
    i_ac = mutual_information(j_ace, a, c)
    h_ae = entropy(j_ace, a, e)
    helper_cap = min(r_c - h_ca, i_ac)
    floor = max(h_ae - r_a, 0.0)
    delta_max = min(max(advantage, 0.0), helper_cap)

    violated = []
    if r_c < i_cv - CONTAINS_TOL:
        violated.append("charlie-rate")
    if r_a < h_av - CONTAINS_TOL:
        violated.append("alice-rate")
    if floor > delta_max + CONTAINS_TOL:
        violated.append("equivocation-floor")
    desc = RegionDescriptor(
        kind="theorem1-inner",
        constants={
            "I(C;V)": i_cv,
            "H(A|V)": h_av,
            "advantage": max(advantage, 0.0),
            "H(C|A)": h_ca,
            "I(A;C)": i_ac,
            "H(A|E)": h_ae,
        },
        aux_witness=(u_ch, v_ch),
    )
    return InnerPointResult(
        feasible=not violated,
        delta_max=max(delta_max, 0.0),
        bounds={"advantage": max(advantage, 0.0),
                "helper_cap": helper_cap,
                "floor": floor},
        violated=tuple(violated),
        descriptor=desc,
    )


def outer_overapprox(j_ace: JointDistribution, r_a: float, r_c: float,
                     card_u: int | None = None, budget=None,
                     a: str = "A", c: str = "C", e: str = "E") -> OuterPointResult:
    """Upper bound on the equivocation over every searched auxiliary family.

    The two terms of the secrecy advantage are bounded independently: within
    product-form attachments, I(A;V|U) is maximized by a constant U (since
    H(V|U) <= H(V) and H(V|A,U) = H(V|A)), giving I(A;V); I(A;E|U) is
    bounded below by 0 (attained by the copy channel U = A).  Those
    term-wise optima make the bound independent of the numerical search
    budget, so ``card_u`` and ``budget`` are accepted for interface
    uniformity but do not affect the value.  Unconditional caps H(A|E),
    I(A;C) and R_C - H(C|A) are applied on top.
    """
    del card_u, budget
    from .auxsearch import enumerate_vmaps

    h_ca = entropy(j_ace, c, a)
    i_ac = mutual_information(j_ace, a, c)
    h_ae = entropy(j_ace, a, e)
    family = []
    best = None
    for vm in enumerate_vmaps(j_ace, a=a, c=c):
        ext = attach_channel(j_ace, vm.channel, c)
        vn = vm.channel.to_name
        ent = {
            "I(C;V)": mutual_information(ext, c, vn),
            "H(A|V)": entropy(ext, a, vn),
            "I(A;V)": mutual_information(ext, a, vn),
        }
        family.append(ent)
        if (ent["I(C;V)"] <= r_c + CONTAINS_TOL
                and ent["H(A|V)"] <= r_a + CONTAINS_TOL):
            if best is None or ent["I(A;V)"] > best:
                best = ent["I(A;V)"]
    desc = RegionDescriptor(
        kind="theorem1-outer-overapprox",
        constants={"H(C|A)": h_ca, "I(A;C)": i_ac, "H(A|E)": h_ae},
        per_receiver=tuple(family),
    )
    if best is None:
        return OuterPointResult(feasible=False, delta_upper=0.0, descriptor=desc)
    delta_upper = min(best, h_ae, r_c - h_ca, i_ac)
    return OuterPointResult(
        feasible=delta_upper >= -CONTAINS_TOL,
        delta_upper=max(delta_upper, 0.0),
        descriptor=desc,
    )


# ---- closed-form regions ------------------------------------------------

def corollary1_region(j_ac: JointDistribution, a: str = "A", c: str = "C") -> RegionDescriptor:
    """Region when the eavesdropper sees only the public message."""
    return RegionDescriptor(
        kind="corollary1",
        constants={
            "H(C|A)": entropy(j_ac, c, a),
            "H(A|C)": entropy(j_ac, a, c),
            "H(A,C)": entropy(j_ac, (a, c)),
            "I(A;C)": mutual_information(j_ac, a, c),
            "H(A)": entropy(j_ac, a),
        },
    )


def corollary2_region(j_abe: JointDistribution, u,
                      a: str = "A", b: str = "B", e: str = "E") -> RegionDescriptor:
    """Region with uncoded side information at the decoder.

    ``u`` is the auxiliary channel conditioning on the source; use the
    search module to find a good one.
    """
    u_ch = _as_channel(u)
    ext = attach_channel(j_abe, u_ch, a)
    un = u_ch.to_name
    adv = (mutual_information(ext, a, b, un) - mutual_information(ext, a, e, un))
    return RegionDescriptor(
        kind="corollary2",
        constants={
            "H(A|B)": entropy(j_abe, a, b),
            "H(A|E)": entropy(j_abe, a, e),
            "advantage": max(adv, 0.0),
        },
        aux_witness=(u_ch,),
    )


def lemma1_region(j_ae: JointDistribution, h_b: float,
                  a: str = "A", e: str = "E") -> RegionDescriptor:
    """Region when the shared randomness is independent of source and tap."""
    if h_b < 0:
        raise ValidationError(f"negative entropy H(B) = {h_b}")
    h_ae = entropy(j_ae, a, e)
    return RegionDescriptor(
        kind="lemma1",
        constants={
            "H(A)": entropy(j_ae, a),
            "H(A|E)": h_ae,
            "H(B)": h_b,
            "delta-cap": min(h_b, h_ae),
        },
    )


def eve_si_regions(j_abe: JointDistribution, a: str = "A", b: str = "B",
                   e: str = "E") -> tuple[RegionDescriptor, RegionDescriptor]:
    """Regions when the tap side info is also known downstream.

    Returns a pair: first assuming the decoder also knows the tap's
    observation, then assuming the encoder does as well.
    """
    common = {
        "I(A;B|E)": mutual_information(j_abe, a, b, e),
        "H(A|E)": entropy(j_abe, a, e),
    }
    at_bob = RegionDescriptor(
        kind="eve-si-at-bob",
        constants={"H(A|B,E)": entropy(j_abe, a, (b, e)), **common},
    )
    at_alice = RegionDescriptor(
        kind="eve-si-at-alice",
        constants={"H(A|B)": entropy(j_abe, a, b), **common},
    )
    return at_bob, at_alice


def corollary3_region(j: JointDistribution, b_names: Sequence[str],
                      a: str = "A", e: str = "E",
                      markov_tol: float = PIN_TOL) -> RegionDescriptor:
    """Region for several decoders whose side info shields the tap.

    Requires the chain (source) - (B_k) - (tap) for every receiver k;
    raises :class:`MarkovPreconditionFailed` naming the worst offender.
    """
    b_names = tuple(b_names)
    if not b_names:
        raise UnknownVariable("corollary3 needs at least one receiver")
    worst = (None, 0.0)
    for bn in b_names:
        r = markov_residual(j, a, bn, e)
        if r > worst[1]:
            worst = (bn, r)
    if worst[1] > markov_tol:
        raise MarkovPreconditionFailed(
            f"chain {a}-{worst[0]}-{e} fails: residual {worst[1]:.3e} bits"
        )
    h_ae = entropy(j, a, e)
    per = tuple(
        {"H(A|B_k)": entropy(j, a, bn), "advantage_k": h_ae - entropy(j, a, bn)}
        for bn in b_names
    )
    return RegionDescriptor(
        kind="corollary3",
        constants={
            "H(A|E)": h_ae,
            "max_k H(A|B_k)": max(p["H(A|B_k)"] for p in per),
            "min_k advantage": min(p["advantage_k"] for p in per),
        },
        per_receiver=per,
    )


def corollary4_region(j: JointDistribution, b_names: Sequence[str], u,
                      a: str = "A", e: str = "E",
                      markov_tol: float = PIN_TOL) -> RegionDescriptor:
    """Region for a chain of increasingly-informed decoders.

    Requires the chain (source) - B_1 - ... - B_K; the constants depend on
    the last (most informed) receiver only.
    """
    b_names = tuple(b_names)
    if not b_names:
        raise UnknownVariable("corollary4 needs at least one receiver")
    past = [a]
    for i in range(len(b_names) - 1):
        r = mutual_information(j, tuple(past), b_names[i + 1], b_names[i])
        if r > markov_tol:
            raise MarkovPreconditionFailed(
                f"chain ...-{b_names[i]}-{b_names[i + 1]} fails: "
                f"residual {r:.3e} bits"
            )
        past.append(b_names[i])
    last = b_names[-1]
    u_ch = _as_channel(u)
    ext = attach_channel(j, u_ch, a)
    un = u_ch.to_name
    adv = (mutual_information(ext, a, last, un)
           - mutual_information(ext, a, e, un))
    return RegionDescriptor(
        kind="corollary4",
        constants={
            "H(A|B_K)": entropy(j, a, last),
            "H(A|E)": entropy(j, a, e),
            "advantage": max(adv, 0.0),
        },
        aux_witness=(u_ch,),
    )


def corollary5_region(j: JointDistribution, e_names: Sequence[str], u,
                      a: str = "A", b: str = "B") -> RegionDescriptor:
    """Region with one decoder and several independent taps sharing one U."""
    e_names = tuple(e_names)
    if not e_names:
        raise UnknownVariable("corollary5 needs at least one tap")
    u_ch = _as_channel(u)
    ext = attach_channel(j, u_ch, a)
    un = u_ch.to_name
    h_abu = entropy(ext, a, (b, un))
    per = tuple(
        {
            "H(A|E_k)": entropy(j, a, en),
            "advantage_k": max(entropy(ext, a, (en, un)) - h_abu, 0.0),
        }
        for en in e_names
    )
    return RegionDescriptor(
        kind="corollary5",
        constants={"H(A|B)": entropy(j, a, b)},
        per_receiver=per,
        aux_witness=(u_ch,),
    )


# ---- membership ---------------------------------------------------------

def _point_dims(kind: str) -> type:
    return RateTriple if kind in (
        "theorem1-inner", "theorem1-outer-overapprox", "corollary1"
    ) else RatePair


def contains(rd: RegionDescriptor, point: RateTriple | RatePair,
             tol: float = CONTAINS_TOL) -> ContainsResult:
    """Test membership of a rate/equivocation point.

    With ``as-written`` semantics every stated inequality is checked,
    including lower bounds tying the equivocation to the rates; with
    ``delta-downward-closed`` semantics the lower bounds are dropped, so a
    member point means "at least this much equivocation is achievable here".
    """
    want = _point_dims(rd.kind)
    if not isinstance(point, want):
        raise DimensionMismatch(
            f"kind {rd.kind!r} expects {want.__name__}, got {type(point).__name__}"
        )
    k = rd.constants
    lower_bounds_active = rd.semantics == "as-written"
    failures: list[str] = []

    def need(label: str, ok: bool) -> None:
        if not ok:
            failures.append(label)

    d = point.delta
    need("delta-nonneg", d >= -tol)

    if rd.kind == "corollary1":
        need("charlie-rate", point.r_c >= k["H(C|A)"] - tol)
        need("alice-rate", point.r_a >= k["H(A|C)"] - tol)
        need("sum-rate", point.r_a + point.r_c >= k["H(A,C)"] - tol)
        need("delta-cap", d <= min(k["I(A;C)"], point.r_c - k["H(C|A)"]) + tol)
        if lower_bounds_active:
            need("equivocation-floor", d >= max(k["H(A)"] - point.r_a, 0.0) - tol)

    elif rd.kind == "theorem1-inner":
        need("charlie-rate", point.r_c >= k["I(C;V)"] - tol)
        need("alice-rate", point.r_a >= k["H(A|V)"] - tol)
        need("advantage-cap", d <= k["advantage"] + tol)
        need("helper-cap", d <= min(k["I(A;C)"], point.r_c - k["H(C|A)"]) + tol)
        if lower_bounds_active:
            need("equivocation-floor",
                 d >= max(k["H(A|E)"] - point.r_a, 0.0) - tol)

    elif rd.kind == "theorem1-outer-overapprox":
        feas = [
            f for f in rd.per_receiver
            if f["I(C;V)"] <= point.r_c + tol and f["H(A|V)"] <= point.r_a + tol
        ]
        if not feas:
            failures.append("rate-feasibility")
        else:
            cap = min(max(f["I(A;V)"] for f in feas), k["H(A|E)"],
                      point.r_c - k["H(C|A)"], k["I(A;C)"])
            need("delta-cap", d <= cap + tol)
        if lower_bounds_active:
            need("equivocation-floor",
                 d >= max(k["H(A|E)"] - point.r_a, 0.0) - tol)

    elif rd.kind == "corollary2":
        need("alice-rate", point.r_a >= k["H(A|B)"] - tol)
        need("delta-cap", d <= k["advantage"] + tol)
        if lower_bounds_active:
            need("rate-equivocation-sum", point.r_a + d >= k["H(A|E)"] - tol)

    elif rd.kind == "lemma1":
        need("alice-rate", point.r_a >= k["H(A)"] - tol)
        need("delta-cap", d <= k["delta-cap"] + tol)

    elif rd.kind == "eve-si-at-bob":
        need("alice-rate", point.r_a >= k["H(A|B,E)"] - tol)
        need("delta-cap", d <= k["I(A;B|E)"] + tol)
        if lower_bounds_active:
            need("rate-equivocation-sum", point.r_a + d >= k["H(A|E)"] - tol)

    elif rd.kind == "eve-si-at-alice":
        need("alice-rate", point.r_a >= k["H(A|B)"] - tol)
        need("delta-cap", d <= k["I(A;B|E)"] + tol)
        if lower_bounds_active:
            need("rate-equivocation-sum", point.r_a + d >= k["H(A|E)"] - tol)

    elif rd.kind == "corollary3":
        need("alice-rate", point.r_a >= k["max_k H(A|B_k)"] - tol)
        need("delta-cap", d <= k["min_k advantage"] + tol)
        if lower_bounds_active:
            need("rate-equivocation-sum", point.r_a + d >= k["H(A|E)"] - tol)

    elif rd.kind == "corollary4":
        need("alice-rate", point.r_a >= k["H(A|B_K)"] - tol)
        need("delta-cap", d <= k["advantage"] + tol)
        if lower_bounds_active:
            need("rate-equivocation-sum", point.r_a + d >= k["H(A|E)"] - tol)

    elif rd.kind == "corollary5":
        need("alice-rate", point.r_a >= k["H(A|B)"] - tol)
        for i, p in enumerate(rd.per_receiver, start=1):
            need(f"delta-cap[{i}]", d <= p["advantage_k"] + tol)
            if lower_bounds_active:
                need(f"rate-equivocation-sum[{i}]",
                     point.r_a + d >= p["H(A|E_k)"] - tol)

    return ContainsResult(member=not failures, violated=tuple(failures))


# ---- convexification ----------------------------------------------------

LAMBDA_STEP = 0.05


def convexify(samples: FrontierSamples, tol: float = 1e-12) -> FrontierSamples:
    """Lift each sampled point to the best pairwise time-sharing mixture.

    A mixture of two achievable points is achievable at the mixed rates, and
    anything achievable at lower rates stays achievable at higher ones, so a
    point's equivocation is raised to the best mixture whose rates it
    dominates.  Iterates to a fixed point, which makes the operation
    idempotent.
    """
    pts = samples.points
    n = len(pts)
    if n <= 1:
        return replace(samples, convexified=True)
    first = pts[0]
    triple = isinstance(first, RateTriple)
    for p in pts:
        if isinstance(p, RateTriple) != triple:
            raise DimensionMismatch("mixed point types in frontier samples")
    rates = np.array(
        [[p.r_a, p.r_c] if triple else [p.r_a] for p in pts], dtype=float
    )
    deltas = np.array([p.delta for p in pts], dtype=float)
    prov = list(samples.provenance)
    lams = np.round(np.arange(LAMBDA_STEP, 1.0 - LAMBDA_STEP / 2, LAMBDA_STEP), 10)

    for _ in range(max(n, 4)):
        changed = False
        for i in range(n):
            for jj in range(i + 1, n):
                for lam in lams:
                    mr = lam * rates[i] + (1 - lam) * rates[jj]
                    md = lam * deltas[i] + (1 - lam) * deltas[jj]
                    mask = np.all(rates >= mr - 1e-12, axis=1) & (deltas < md - tol)
                    if mask.any():
                        changed = True
                        for kk in np.nonzero(mask)[0]:
                            deltas[kk] = md
                            prov[kk] = f"time-shared({i},{jj},{lam:.2f})"
        if not changed:
            break

    if triple:
        new_pts = tuple(
            RateTriple(p.r_a, p.r_c, float(dv)) for p, dv in zip(pts, deltas)
        )
    else:
        new_pts = tuple(RatePair(p.r_a, float(dv)) for p, dv in zip(pts, deltas))
    return FrontierSamples(points=new_pts, convexified=True, provenance=tuple(prov))
