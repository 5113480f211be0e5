"""Monte Carlo simulator for the layered random-binning code.

Implements the achievability scheme at desk-scale block lengths: i.i.d.
codebook generation for the two auxiliary layers, uniform random binning,
typicality encoding and decoding with deterministic smallest-index
tie-breaking, Monte Carlo error estimation, and equivocation computed
exactly by enumerating the (source, tap) sequence space.

Typicality throughout is the two-sided entropy-window test: a tuple of
sequences is jointly delta-typical when its per-symbol surprisal lies
within a relative slack delta of the joint entropy.  Sequences containing
a zero-probability symbol combination have infinite surprisal and are
never typical.

The encoders are total: on failure they fall back to index 0 so a message
is always emitted, which keeps the encoding map deterministic and lets the
equivocation accounting cover failure events exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    IndexOutOfRange,
    InvariantViolation,
    LengthMismatch,
    NotInPin,
    TooLarge,
    ValidationError,
)
from .probcore import (
    Channel,
    JointDistribution,
    attach_channel,
    entropy,
    marginal,
    mutual_information,
)

#: largest allowed codebook/bin-domain size, as a power of two
_MAX_CODE_BITS = 26
#: largest (source sequences) x (tap sequences) state space enumerated exactly
_EXACT_STATE_BITS = 26
#: tap-sequence sample count for the Monte Carlo equivocation estimate
_MC_SAMPLES = 1 << 14
#: admissibility tolerance for the helper reconstruction H(C|A,V) = 0
_PIN_TOL = 1e-10

COUNT_KEYS = ("u-codewords", "aux-bins", "source-bins", "v-codewords")

#: seed-stream tags: codebook stages and the per-trial / tap-sample streams
_STREAM_TRIAL = 1
_STREAM_TAP = 2
_STREAM_U_CODE = 11
_STREAM_AUX_BIN = 12
_STREAM_SOURCE_BIN = 13
_STREAM_V_CODE = 14


# ---- configuration ------------------------------------------------------

@dataclass(frozen=True)
class SchemeConfig:
    """Planned code: block length, margins, and the derived layer sizes.

    ``exponents`` holds the per-count rate exponents actually used (base
    information quantity plus margin, after the constant-U collapse and any
    explicit overrides); ``counts`` are their integer ceilings 2^(n x).
    ``info`` records the underlying information constants of the attached
    auxiliary pair for reporting.
    """

    n: int
    margins: tuple[float, float, float, float]
    delta: float
    source: JointDistribution
    u: Channel
    v: Channel
    seed: int
    a: str
    c: str
    e: str
    exponents: dict[str, float]
    counts: dict[str, int]
    rate_alice: float
    info: dict[str, float]


@dataclass(frozen=True)
class Message:
    """What Bob receives: Alice's two bin indices and Charlie's codeword."""

    aux_bin: int
    source_bin: int
    w2: int


@dataclass(frozen=True)
class AliceEncoding:
    w1: int
    aux_bin: int
    source_bin: int
    failure: bool


@dataclass(frozen=True)
class CharlieEncoding:
    w2: int
    failure: bool


@dataclass(frozen=True)
class DecodeResult:
    a_hat: np.ndarray | None
    c_hat: np.ndarray | None
    failure: bool
    failed_step: str | None


@dataclass(frozen=True)
class TrialOutcome:
    encoder_failure: bool
    decode_correct_a: bool
    decode_correct_c: bool


@dataclass(frozen=True)
class ErrorEstimate:
    trials: int
    errors: int
    p_e: float
    wilson_low: float
    wilson_high: float
    breakdown: dict[str, int]


@dataclass(frozen=True)
class EquivocationReport:
    """Equivocation of the realized code, exact or clearly-labeled estimate.

    ``per_symbol`` is H(source block | intercepted message, tap block)
    divided by the block length.  In exact mode the report is checked
    against the universal floor and ceilings before being returned.
    """

    n: int
    total_bits: float
    per_symbol: float
    message_rate_alice: float
    bounds: dict[str, float]
    mode: str


@dataclass(frozen=True)
class ExperimentReport:
    error: ErrorEstimate
    equivocation: EquivocationReport
    theory: dict[str, float]


def _channel_of(obj) -> Channel:
    if isinstance(obj, Channel):
        return obj
    ch = getattr(obj, "channel", None)
    if isinstance(ch, Channel):
        return ch
    raise ValidationError(f"expected a channel-like object, got {type(obj)!r}")


def _ceil_pow2(x: float) -> int:
    # snap near-integers before the ceiling to absorb float drift
    val = 2.0 ** x
    near = round(val)
    if near >= 1 and abs(val - near) < 1e-6 * max(near, 1):
        return int(near)
    return max(1, math.ceil(val))


def plan_scheme(source: JointDistribution, aux, n: int,
                margins=(0.2, 0.2, 0.2, 0.2), delta: float = 0.15,
                seed: int = 0, override_exponents: dict[str, float] | None = None,
                a: str = "A", c: str = "C", e: str = "E") -> SchemeConfig:
    """Derive codebook and bin counts for a block length and margin choice.

    The four count exponents are I(A;U) + m1, I(A;U|V) + m2, H(A|V,U) + m3
    and I(C;V) + m4.  When I(A;U) = 0 the secrecy layer degenerates and
    both the u-codebook and the auxiliary bin count collapse to one entry
    regardless of margins.  ``override_exponents`` replaces whole exponents
    (margin included) by key; it exists for structured constructions such
    as keyed pads and deliberately undersized bin maps.

    Raises :class:`NotInPin` when V does not keep the helper
    reconstructible from (source, V), and :class:`TooLarge` when any count
    or the source sequence space would exceed 2**26.
    """
    if n < 1:
        raise ValidationError(f"block length must be >= 1, got {n}")
    margins = tuple(float(m) for m in margins)
    if len(margins) != 4 or any(m <= 0 for m in margins):
        raise ValidationError("margins must be four positive values in bits")
    if not 0.0 < delta < 1.0:
        raise ValidationError(f"typicality slack must lie in (0, 1), got {delta}")
    u_ch, v_ch = (_channel_of(aux[0]), _channel_of(aux[1]))

    ext_v = attach_channel(source, v_ch, c)
    vn = v_ch.to_name
    h_cav = entropy(ext_v, c, (a, vn))
    if h_cav > _PIN_TOL:
        raise NotInPin(
            f"H({c}|{a},{vn}) = {h_cav:.3e} bits; the auxiliary pair does "
            "not keep the helper reconstructible"
        )
    ext = attach_channel(ext_v, u_ch, a)
    un = u_ch.to_name

    i_au = mutual_information(ext, a, un)
    i_au_v = mutual_information(ext, a, un, vn)
    h_avu = entropy(ext, a, (vn, un))
    i_cv = mutual_information(ext, c, vn)
    info = {
        "I(A;U)": i_au,
        "I(A;U|V)": i_au_v,
        "H(A|V,U)": h_avu,
        "I(C;V)": i_cv,
        "H(A|V)": entropy(ext, a, vn),
        "H(A|E)": entropy(source, a, e),
        "advantage": max(
            mutual_information(ext, a, vn, un)
            - mutual_information(ext, a, e, un), 0.0),
    }

    collapse = i_au <= 1e-12
    exponents = {
        "u-codewords": 0.0 if collapse else i_au + margins[0],
        "aux-bins": 0.0 if collapse else i_au_v + margins[1],
        "source-bins": h_avu + margins[2],
        "v-codewords": i_cv + margins[3],
    }
    if override_exponents:
        for key, val in override_exponents.items():
            if key not in COUNT_KEYS:
                raise ValidationError(f"unknown count key {key!r}")
            if not math.isfinite(val) or val < 0:
                raise ValidationError(f"exponent for {key!r} must be finite "
                                      f"and nonnegative, got {val}")
            exponents[key] = float(val)

    n_a = source.alphabet(a).size
    widest = max(max(exponents.values()), math.log2(n_a))
    if n * widest > _MAX_CODE_BITS + 1e-9:
        raise TooLarge(
            f"n * max-exponent = {n * widest:.2f} bits exceeds "
            f"{_MAX_CODE_BITS}; shrink n or the margins"
        )
    counts = {k: _ceil_pow2(n * x) for k, x in exponents.items()}
    rate_alice = (math.log2(counts["aux-bins"])
                  + math.log2(counts["source-bins"])) / n
    return SchemeConfig(
        n=n, margins=margins, delta=delta, source=source, u=u_ch, v=v_ch,
        seed=seed, a=a, c=c, e=e, exponents=exponents, counts=counts,
        rate_alice=rate_alice, info=info,
    )


# ---- codebooks ----------------------------------------------------------

def _log2_table(p: np.ndarray) -> np.ndarray:
    out = np.full(p.shape, -np.inf)
    np.log2(p, out=out, where=p > 0)
    return out


def _deterministic_image(matrix: np.ndarray) -> np.ndarray | None:
    hard = matrix >= 1.0 - 1e-12
    if np.all(hard.sum(axis=1) == 1):
        return np.argmax(matrix, axis=1).astype(np.int8)
    return None


def _draw_iid(rng: np.random.Generator, p: np.ndarray, shape) -> np.ndarray:
    cum = np.cumsum(p)
    cum[-1] = 1.0
    return np.searchsorted(cum, rng.random(shape), side="right").astype(np.int8)


def _mixed_digits(idx: np.ndarray, base: int, n: int) -> np.ndarray:
    out = np.empty((idx.size, n), dtype=np.int8)
    rem = idx.astype(np.int64, copy=True)
    for pos in range(n - 1, -1, -1):
        out[:, pos] = rem % base
        rem //= base
    return out


def _pack_rows(rows: np.ndarray, base: int) -> np.ndarray:
    n = rows.shape[-1]
    powers = base ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return rows.astype(np.int64) @ powers


@dataclass(frozen=True)
class _Tables:
    """Log-probability tables and entropies backing the typicality tests."""

    lp_a: np.ndarray
    lp_au: np.ndarray
    lp_uv: np.ndarray
    lp_auv: np.ndarray
    lp_cv: np.ndarray
    p_ae: np.ndarray
    h_a: float
    h_au: float
    h_uv: float
    h_auv: float
    h_cv: float
    h_ae_joint: float
    h_a_given_e: float
    u_image: np.ndarray | None
    v_image: np.ndarray | None
    recon: np.ndarray


class Codebooks:
    """Generated codewords, bin maps, and derived lookup structures.

    Immutable by convention after generation.  Index structures (digit
    tables, per-bin membership, first-occurrence codeword lookups) are
    built lazily and cached, so cheap uses stay cheap.
    """

    def __init__(self, cfg: SchemeConfig, u_codebook: np.ndarray,
                 v_codebook: np.ndarray, aux_bin_of: np.ndarray,
                 source_bin_of: np.ndarray, tables: _Tables):
        self.cfg = cfg
        self.u_codebook = u_codebook
        self.v_codebook = v_codebook
        self.aux_bin_of = aux_bin_of
        self.source_bin_of = source_bin_of
        self.tables = tables

    @cached_property
    def a_digits(self) -> np.ndarray:
        n_a = self.cfg.source.alphabet(self.cfg.a).size
        return _mixed_digits(np.arange(n_a ** self.cfg.n), n_a, self.cfg.n)

    @cached_property
    def _source_order(self):
        order = np.argsort(self.source_bin_of, kind="stable")
        return order, self.source_bin_of[order]

    def source_bin_members(self, b: int) -> np.ndarray:
        order, sb = self._source_order
        return order[np.searchsorted(sb, b, "left"):
                     np.searchsorted(sb, b, "right")]

    @cached_property
    def _aux_order(self):
        order = np.argsort(self.aux_bin_of, kind="stable")
        return order, self.aux_bin_of[order]

    def aux_bin_members(self, b: int) -> np.ndarray:
        order, ab = self._aux_order
        return order[np.searchsorted(ab, b, "left"):
                     np.searchsorted(ab, b, "right")]

    @cached_property
    def v_lookup(self):
        base = self.v_codebook.max(initial=0) + 1 if self.v_codebook.size else 1
        packed = _pack_rows(self.v_codebook, max(int(base), 2))
        return np.unique(packed, return_index=True)

    @cached_property
    def u_lookup(self):
        base = self.u_codebook.max(initial=0) + 1 if self.u_codebook.size else 1
        packed = _pack_rows(self.u_codebook, max(int(base), 2))
        return np.unique(packed, return_index=True)


def generate_codebooks(cfg: SchemeConfig,
                       source_bins: np.ndarray | None = None) -> Codebooks:
    """Draw the codebooks and bin maps deterministically from the seed.

    Codewords are i.i.d. from the attached marginals p(u) and p(v); bin
    maps are i.i.d. uniform.  ``source_bins`` substitutes a caller-provided
    source-bin assignment (length |alphabet|^n, values within the planned
    bin count), used for structured constructions; everything else still
    follows the seed.
    """
    ext = attach_channel(attach_channel(cfg.source, cfg.v, cfg.c), cfg.u, cfg.a)
    a, c, e, vn, un = cfg.a, cfg.c, cfg.e, cfg.v.to_name, cfg.u.to_name
    p_u = marginal(ext, (un,)).mass
    p_v = marginal(ext, (vn,)).mass
    p_au = marginal(ext, (a, un)).mass
    p_uv = marginal(ext, (un, vn)).mass
    p_auv = marginal(ext, (a, un, vn)).mass
    p_cv = marginal(ext, (c, vn)).mass
    p_ae = marginal(ext, (a, e)).mass
    p_acv = marginal(ext, (a, c, vn)).mass

    # reconstruction map (a, v) -> c; zero-mass pairs are marked impossible
    n_sym_a, n_sym_c, n_sym_v = p_acv.shape
    recon = np.full((n_sym_a, n_sym_v), -1, dtype=np.int16)
    for ai in range(n_sym_a):
        for vi in range(n_sym_v):
            col = p_acv[ai, :, vi]
            if col.sum() > 1e-15:
                recon[ai, vi] = int(np.argmax(col))

    tables = _Tables(
        lp_a=_log2_table(marginal(ext, (a,)).mass),
        lp_au=_log2_table(p_au),
        lp_uv=_log2_table(p_uv),
        lp_auv=_log2_table(p_auv),
        lp_cv=_log2_table(p_cv),
        p_ae=p_ae,
        h_a=entropy(ext, a),
        h_au=entropy(ext, (a, un)),
        h_uv=entropy(ext, (un, vn)),
        h_auv=entropy(ext, (a, un, vn)),
        h_cv=entropy(ext, (c, vn)),
        h_ae_joint=entropy(ext, (a, e)),
        h_a_given_e=entropy(ext, a, e),
        u_image=_deterministic_image(cfg.u.matrix),
        v_image=_deterministic_image(cfg.v.matrix),
        recon=recon,
    )

    n = cfg.n
    u_cb = _draw_iid(np.random.default_rng((cfg.seed, _STREAM_U_CODE)),
                     p_u, (cfg.counts["u-codewords"], n))
    aux_bin_of = np.random.default_rng((cfg.seed, _STREAM_AUX_BIN)).integers(
        cfg.counts["aux-bins"], size=cfg.counts["u-codewords"])
    seq_space = cfg.source.alphabet(a).size ** n
    if source_bins is None:
        source_bin_of = np.random.default_rng(
            (cfg.seed, _STREAM_SOURCE_BIN)).integers(
            cfg.counts["source-bins"], size=seq_space)
    else:
        source_bin_of = np.asarray(source_bins, dtype=np.int64)
        if source_bin_of.shape != (seq_space,):
            raise ValidationError(
                f"source-bin map must have shape ({seq_space},), "
                f"got {source_bin_of.shape}")
        if source_bin_of.size and (
                source_bin_of.min() < 0
                or source_bin_of.max() >= cfg.counts["source-bins"]):
            raise IndexOutOfRange(
                "source-bin map entries must lie within "
                f"[0, {cfg.counts['source-bins']})")
    v_cb = _draw_iid(np.random.default_rng((cfg.seed, _STREAM_V_CODE)),
                     p_v, (cfg.counts["v-codewords"], n))
    return Codebooks(cfg, u_cb, v_cb, aux_bin_of, source_bin_of, tables)


def xor_pair_bins(cfg: SchemeConfig) -> np.ndarray:
    """Structured source-bin map realizing additive-key concealment.

    Requires a four-symbol source alphabet read as (payload bit, key bit)
    pairs: symbol index = 2*payload + key.  Each sequence maps to the bin
    whose index is the per-symbol XOR of the two bits, so the emitted bin
    index is the payload masked by the key.  The planned source-bin count
    must be exactly 2^n.
    """
    n_sym = cfg.source.alphabet(cfg.a).size
    if n_sym != 4:
        raise ValidationError(
            f"paired source needs a four-symbol alphabet, got {n_sym}")
    if cfg.counts["source-bins"] != 2 ** cfg.n:
        raise ValidationError(
            "keyed-pad binning needs exactly 2^n source bins; plan with an "
            "override exponent of 1.0")
    digits = _mixed_digits(np.arange(4 ** cfg.n), 4, cfg.n)
    bits = (digits >> 1) ^ (digits & 1)
    return _pack_rows(bits, 2)


# ---- typicality ---------------------------------------------------------

def _in_window(neg_logp, h: float, n: int, delta: float):
    lo = n * h * (1.0 - delta) - 1e-9
    hi = n * h * (1.0 + delta) + 1e-9
    return (neg_logp >= lo) & (neg_logp <= hi)


def _check_seq(seq: np.ndarray, size: int, n: int, label: str) -> np.ndarray:
    seq = np.asarray(seq)
    if seq.shape != (n,):
        raise LengthMismatch(f"{label} must have length {n}, got {seq.shape}")
    if seq.size and (seq.min() < 0 or seq.max() >= size):
        raise IndexOutOfRange(f"{label} symbols must lie within [0, {size})")
    return seq.astype(np.int64)


# ---- encoding -----------------------------------------------------------

def encode_alice(cb: Codebooks, cfg: SchemeConfig, a_seq) -> AliceEncoding:
    """Map a source block to (auxiliary bin, source bin).

    w1 is the smallest u-codeword index jointly typical with the block;
    when none qualifies the encoder falls back to w1 = 0 and flags the
    failure, still emitting a message.
    """
    t = cb.tables
    a_seq = _check_seq(a_seq, t.lp_a.shape[0], cfg.n, "source block")
    source_bin = int(cb.source_bin_of[_pack_rows(a_seq, t.lp_a.shape[0])])

    w1 = 0
    failure = True
    if cfg.counts["u-codewords"] == 1:
        neg = -t.lp_au[a_seq, cb.u_codebook[0]].sum()
        failure = not bool(_in_window(neg, t.h_au, cfg.n, cfg.delta))
    elif t.u_image is not None:
        img = t.u_image[a_seq]
        neg = -t.lp_au[a_seq, img].sum()
        if _in_window(neg, t.h_au, cfg.n, cfg.delta):
            uniq, first = cb.u_lookup
            key = _pack_rows(img, max(int(cb.u_codebook.max(initial=0)) + 1, 2))
            pos = np.searchsorted(uniq, key)
            if pos < uniq.size and uniq[pos] == key:
                w1 = int(first[pos])
                failure = False
    else:
        lp = t.lp_au[a_seq[None, :], cb.u_codebook].sum(axis=1)
        mask = _in_window(-lp, t.h_au, cfg.n, cfg.delta)
        hits = np.nonzero(mask)[0]
        if hits.size:
            w1 = int(hits[0])
            failure = False
    return AliceEncoding(w1=w1, aux_bin=int(cb.aux_bin_of[w1]),
                         source_bin=source_bin, failure=failure)


def encode_charlie(cb: Codebooks, cfg: SchemeConfig, c_seq) -> CharlieEncoding:
    """Pick the smallest v-codeword index jointly typical with the block.

    For a deterministic helper partition the only candidate with positive
    probability is the symbol-wise image, so the search reduces to one
    first-occurrence lookup.
    """
    t = cb.tables
    c_seq = _check_seq(c_seq, t.lp_cv.shape[0], cfg.n, "helper block")
    if t.v_image is not None:
        img = t.v_image[c_seq]
        neg = -t.lp_cv[c_seq, img].sum()
        if _in_window(neg, t.h_cv, cfg.n, cfg.delta):
            uniq, first = cb.v_lookup
            key = _pack_rows(img, max(int(cb.v_codebook.max(initial=0)) + 1, 2))
            pos = np.searchsorted(uniq, key)
            if pos < uniq.size and uniq[pos] == key:
                return CharlieEncoding(w2=int(first[pos]), failure=False)
        return CharlieEncoding(w2=0, failure=True)
    lp = t.lp_cv[c_seq[None, :], cb.v_codebook].sum(axis=1)
    mask = _in_window(-lp, t.h_cv, cfg.n, cfg.delta)
    hits = np.nonzero(mask)[0]
    if hits.size:
        return CharlieEncoding(w2=int(hits[0]), failure=False)
    return CharlieEncoding(w2=0, failure=True)


# ---- decoding -----------------------------------------------------------

def decode_bob(cb: Codebooks, cfg: SchemeConfig, msg: Message) -> DecodeResult:
    """Three-step decoding with uniqueness required at each typicality step.

    Step 1 recovers the u-codeword from its auxiliary bin (structurally
    when the bin holds one entry, otherwise the unique entry jointly
    typical with Charlie's codeword).  Step 2 recovers the source block as
    the unique bin member jointly typical with (U, V).  Step 3 rebuilds the
    helper block through the (source, V) -> helper reconstruction map.
    """
    t = cb.tables
    if not 0 <= msg.aux_bin < cfg.counts["aux-bins"]:
        raise IndexOutOfRange(f"auxiliary bin {msg.aux_bin} out of range")
    if not 0 <= msg.source_bin < cfg.counts["source-bins"]:
        raise IndexOutOfRange(f"source bin {msg.source_bin} out of range")
    if not 0 <= msg.w2 < cfg.counts["v-codewords"]:
        raise IndexOutOfRange(f"v-codeword index {msg.w2} out of range")
    v_seq = cb.v_codebook[msg.w2].astype(np.int64)

    cand = cb.aux_bin_members(msg.aux_bin)
    if cand.size == 1:
        u_idx = int(cand[0])
    else:
        lp = t.lp_uv[cb.u_codebook[cand], v_seq[None, :]].sum(axis=1)
        hits = cand[_in_window(-lp, t.h_uv, cfg.n, cfg.delta)]
        if hits.size != 1:
            return DecodeResult(None, None, True, "step-1")
        u_idx = int(hits[0])
    u_seq = cb.u_codebook[u_idx].astype(np.int64)

    members = cb.source_bin_members(msg.source_bin)
    a_hat = None
    seen = 0
    # chunked scan with early exit once ambiguity is certain
    for lo in range(0, members.size, 4096):
        part = members[lo:lo + 4096]
        digs = cb.a_digits[part]
        lp = t.lp_auv[digs, u_seq[None, :], v_seq[None, :]].sum(axis=1)
        hits = np.nonzero(_in_window(-lp, t.h_auv, cfg.n, cfg.delta))[0]
        seen += hits.size
        if hits.size and a_hat is None:
            a_hat = digs[hits[0]].astype(np.int64)
        if seen > 1:
            return DecodeResult(None, None, True, "step-2")
    if seen != 1:
        return DecodeResult(None, None, True, "step-2")

    c_hat = t.recon[a_hat, v_seq]
    if np.any(c_hat < 0):
        return DecodeResult(a_hat, None, True, "step-3")
    return DecodeResult(a_hat, c_hat.astype(np.int64), False, None)


# ---- error estimation ---------------------------------------------------

def _wilson(errors: int, trials: int, z: float = 1.959963984540054):
    phat = errors / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials
                         + z * z / (4 * trials * trials)) / denom
    return max(center - half, 0.0), min(center + half, 1.0)


def estimate_error(cfg: SchemeConfig, trials: int,
                   cb: Codebooks | None = None) -> ErrorEstimate:
    """Monte Carlo block-error probability with a Wilson 95% interval.

    Each trial draws an i.i.d. (source, helper) block from its own seed
    stream, runs both encoders and the decoder, and counts an error on any
    encoder failure, decode failure, or wrong reconstruction.  The
    breakdown attributes each error to its first cause.
    """
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    if cb is None:
        cb = generate_codebooks(cfg)
    p_ac = marginal(cfg.source, (cfg.a, cfg.c)).mass
    n_c = p_ac.shape[1]
    cum = np.cumsum(p_ac.reshape(-1))
    cum[-1] = 1.0

    breakdown = {k: 0 for k in ("encoder-alice", "encoder-charlie", "step-1",
                                "step-2", "step-3", "wrong-output")}
    errors = 0
    for t_idx in range(trials):
        rng = np.random.default_rng((cfg.seed, _STREAM_TRIAL, t_idx))
        flat = np.searchsorted(cum, rng.random(cfg.n), side="right")
        a_seq = flat // n_c
        c_seq = flat % n_c
        alice = encode_alice(cb, cfg, a_seq)
        charlie = encode_charlie(cb, cfg, c_seq)
        if alice.failure or charlie.failure:
            errors += 1
            breakdown["encoder-alice" if alice.failure
                      else "encoder-charlie"] += 1
            continue
        dec = decode_bob(cb, cfg, Message(alice.aux_bin, alice.source_bin,
                                          charlie.w2))
        if dec.failure:
            errors += 1
            breakdown[dec.failed_step] += 1
            continue
        ok_a = bool(np.array_equal(dec.a_hat, a_seq))
        ok_c = bool(np.array_equal(dec.c_hat, c_seq))
        if not (ok_a and ok_c):
            errors += 1
            breakdown["wrong-output"] += 1
    lo, hi = _wilson(errors, trials)
    return ErrorEstimate(trials=trials, errors=errors, p_e=errors / trials,
                         wilson_low=lo, wilson_high=hi, breakdown=breakdown)


# ---- equivocation -------------------------------------------------------

def _messages_for_all(cb: Codebooks, cfg: SchemeConfig) -> np.ndarray:
    """Message index of every source sequence under the realized encoder."""
    t = cb.tables
    n_a = t.lp_a.shape[0]
    seq_space = n_a ** cfg.n
    n_u = cfg.counts["u-codewords"]
    if n_u == 1:
        w1 = np.zeros(seq_space, dtype=np.int64)
    elif t.u_image is not None:
        digs = cb.a_digits
        img = t.u_image[digs]
        neg = -np.take_along_axis(
            t.lp_au[digs], img[..., None].astype(np.int64), axis=2
        )[..., 0].sum(axis=1)
        typical = _in_window(neg, t.h_au, cfg.n, cfg.delta)
        uniq, first = cb.u_lookup
        keys = _pack_rows(img, max(int(cb.u_codebook.max(initial=0)) + 1, 2))
        pos = np.clip(np.searchsorted(uniq, keys), 0, uniq.size - 1)
        found = uniq[pos] == keys
        w1 = np.where(typical & found, first[pos], 0).astype(np.int64)
    else:
        if seq_space * n_u > 1 << _EXACT_STATE_BITS:
            raise TooLarge(
                "soft preprocessing channel: scanning "
                f"{seq_space} x {n_u} pairs exceeds the 2^{_EXACT_STATE_BITS} "
                "work guard")
        w1 = np.zeros(seq_space, dtype=np.int64)
        for lo in range(0, seq_space, 4096):
            digs = cb.a_digits[lo:lo + 4096]
            lp = t.lp_au[digs[:, None, :], cb.u_codebook[None, :, :]].sum(axis=2)
            mask = _in_window(-lp, t.h_au, cfg.n, cfg.delta)
            has = mask.any(axis=1)
            w1[lo:lo + 4096] = np.where(has, np.argmax(mask, axis=1), 0)
    return cb.aux_bin_of[w1] * cfg.counts["source-bins"] + cb.source_bin_of


def _entropy_bits(w: np.ndarray) -> float:
    pos = w[w > 0]
    return float(-(pos * np.log2(pos)).sum()) if pos.size else 0.0


def exact_equivocation(cb: Codebooks, cfg: SchemeConfig) -> EquivocationReport:
    """Equivocation H(source block | message, tap block) of the realized code.

    Exact mode enumerates every (source, tap) sequence pair, accumulating
    the joint law of (message, tap block) in slices over the tap space;
    the equivocation is n*H(A,E) minus that law's entropy.  Beyond the
    2^26 state guard the result degrades to a clearly-labeled Monte Carlo
    plug-in estimate over sampled tap blocks, whose value is not held to
    the exact-mode invariants.
    """
    t = cb.tables
    n = cfg.n
    n_a = t.lp_a.shape[0]
    n_e = t.p_ae.shape[1]
    seq_a = n_a ** n
    if seq_a > 1 << _EXACT_STATE_BITS:
        raise TooLarge(f"{seq_a} source sequences exceed the "
                       f"2^{_EXACT_STATE_BITS} enumeration guard")
    seq_e = n_e ** n
    exact = seq_a * seq_e <= 1 << _EXACT_STATE_BITS

    m_of_a = _messages_for_all(cb, cfg)
    uniq_m, m_dense = np.unique(m_of_a, return_inverse=True)
    order = np.argsort(m_dense, kind="stable")
    starts = np.searchsorted(m_dense[order], np.arange(uniq_m.size))
    msg_bits = (math.log2(cfg.counts["aux-bins"])
                + math.log2(cfg.counts["source-bins"]))
    p_a_vec = np.exp2(t.lp_a[cb.a_digits].sum(axis=1))

    if exact:
        if seq_e == 1:
            h_me = _entropy_bits(np.add.reduceat(p_a_vec[order], starts))
            mass = float(p_a_vec.sum())
        else:
            h_me = 0.0
            mass = 0.0
            block = max(1, min(seq_e, (1 << 22) // seq_a))
            for lo in range(0, seq_e, block):
                e_digits = _mixed_digits(np.arange(lo, min(lo + block, seq_e)),
                                         n_e, n)
                prob = np.ones((seq_a, e_digits.shape[0]))
                for i in range(n):
                    prob *= t.p_ae[cb.a_digits[:, i]][:, e_digits[:, i]]
                w = np.add.reduceat(prob[order], starts, axis=0)
                h_me += _entropy_bits(w)
                mass += float(w.sum())
        if abs(mass - 1.0) > 1e-6:
            raise InvariantViolation(
                f"joint mass accumulated to {mass!r}, expected 1")
        total = n * t.h_ae_joint - h_me
        per_symbol = total / n
    else:
        rng = np.random.default_rng((cfg.seed, _STREAM_TAP))
        p_e_marg = t.p_ae.sum(axis=0)
        samples = _draw_iid(rng, p_e_marg, (_MC_SAMPLES, n))
        acc = 0.0
        batch = max(1, (1 << 22) // seq_a)
        for lo in range(0, _MC_SAMPLES, batch):
            e_batch = samples[lo:lo + batch]
            prob = np.ones((seq_a, e_batch.shape[0]))
            for i in range(n):
                prob *= t.p_ae[cb.a_digits[:, i]][:, e_batch[:, i]]
            z = prob.sum(axis=0)
            grouped = np.add.reduceat(prob[order], starts, axis=0)
            # per-sample H(A-block | message, tap=e): the log Z terms cancel
            num = (-np.where(prob > 0, prob * np.log2(
                np.where(prob > 0, prob, 1.0)), 0.0).sum(axis=0)
                + np.where(grouped > 0, grouped * np.log2(
                    np.where(grouped > 0, grouped, 1.0)), 0.0).sum(axis=0))
            good = z > 0
            acc += float((num[good] / z[good]).sum())
        total = acc / _MC_SAMPLES
        per_symbol = total / n
        return EquivocationReport(
            n=n, total_bits=total, per_symbol=per_symbol,
            message_rate_alice=msg_bits / n,
            bounds={"H(A|E)": t.h_a_given_e,
                    "delta-target": cfg.info["advantage"]},
            mode="monte-carlo-estimate",
        )

    report = EquivocationReport(
        n=n, total_bits=total, per_symbol=per_symbol,
        message_rate_alice=msg_bits / n,
        bounds={"H(A|E)": t.h_a_given_e, "delta-target": cfg.info["advantage"]},
        mode="exact",
    )
    _enforce_report(report, t)
    return report


def _enforce_report(rep: EquivocationReport, t: _Tables) -> None:
    ceiling = min(t.h_a, t.h_a_given_e)
    floor = t.h_a_given_e - rep.message_rate_alice
    if rep.per_symbol < -1e-9 or rep.per_symbol > ceiling + 1e-9:
        raise InvariantViolation(
            f"per-symbol equivocation {rep.per_symbol!r} outside "
            f"[0, {ceiling!r}]")
    if rep.per_symbol < floor - 1e-9:
        raise InvariantViolation(
            f"per-symbol equivocation {rep.per_symbol!r} below the universal "
            f"floor {floor!r}")


def run_experiment(cfg: SchemeConfig, trials: int) -> ExperimentReport:
    """Joint simulation/theory document for one planned configuration."""
    cb = generate_codebooks(cfg)
    err = estimate_error(cfg, trials, cb=cb)
    eq = exact_equivocation(cb, cfg)
    theory = {
        "delta-target": cfg.info["advantage"],
        "H(A|E)": cfg.info["H(A|E)"],
        "equivocation-floor": max(cfg.info["H(A|E)"] - cfg.rate_alice, 0.0),
        "rate-alice": cfg.rate_alice,
    }
    return ExperimentReport(error=err, equivocation=eq, theory=theory)
