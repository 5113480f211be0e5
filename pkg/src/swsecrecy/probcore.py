"""Exact discrete probability tables and information measures.

Joint distributions over a handful of named finite alphabets are stored as
dense row-major arrays.  Every information quantity is reported in bits
(log base 2) with the convention 0*log(0) = 0.  Conditional mutual
informations are computed as differences of joint entropies and clamped at
zero from below, so tiny negative values from rounding never escape.

All operations are pure: inputs are never mutated and returned tables are
marked read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import (
    AlphabetMismatch,
    DimensionMismatch,
    NameCollision,
    NegativeMass,
    NotNormalizable,
    UnknownVariable,
)

#: mass below this magnitude may be clamped to zero silently
_NEG_CLAMP = 1e-15
#: total-mass deviation repaired by renormalization
_NORM_REPAIR = 1e-9
#: row-stochasticity tolerance for channels
_ROW_TOL = 1e-12
#: LP residual below which a degradedness witness counts as feasible
DEGRADED_RESIDUAL_TOL = 1e-7


@dataclass(frozen=True)
class Alphabet:
    """A named finite symbol set; symbol order fixes the array axis order."""

    name: str
    symbols: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.symbols:
            raise DimensionMismatch(f"alphabet {self.name!r} has no symbols")
        if len(set(self.symbols)) != len(self.symbols):
            raise NameCollision(f"alphabet {self.name!r} repeats a symbol")
        object.__setattr__(self, "symbols", tuple(str(s) for s in self.symbols))

    @property
    def size(self) -> int:
        return len(self.symbols)

    def index(self, symbol: str) -> int:
        try:
            return self.symbols.index(symbol)
        except ValueError:
            raise UnknownVariable(
                f"symbol {symbol!r} not in alphabet {self.name!r}"
            ) from None


Axis = tuple[str, Alphabet]


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(np.asarray(arr, dtype=float))
    out.setflags(write=False)
    return out


class JointDistribution:
    """Dense joint probability table over named variables.

    Parameters
    ----------
    axes : sequence of (variable-name, Alphabet)
        One entry per array axis, in storage order.
    mass : ndarray
        Probability mass, shape matching the alphabet sizes, summing to 1
        within 1e-12 (use :func:`build_joint` to repair slightly-off input).
    """

    __slots__ = ("axes", "mass")

    def __init__(self, axes: Sequence[Axis], mass: np.ndarray) -> None:
        axes = tuple((str(n), a) for n, a in axes)
        names = [n for n, _ in axes]
        if len(set(names)) != len(names):
            raise NameCollision(f"duplicate variable names in {names}")
        arr = np.asarray(mass, dtype=float)
        shape = tuple(a.size for _, a in axes)
        if arr.shape != shape:
            raise DimensionMismatch(
                f"mass shape {arr.shape} does not match alphabets {shape}"
            )
        if arr.min(initial=0.0) < -_NEG_CLAMP:
            raise NegativeMass(f"negative mass {arr.min():.3e}")
        arr = np.where(arr < 0, 0.0, arr)
        total = float(arr.sum())
        if abs(total - 1.0) > 1e-12:
            raise NotNormalizable(f"mass sums to {total!r}, expected 1")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "mass", _readonly(arr))

    def __setattr__(self, name, value):  # immutability guard
        raise AttributeError("JointDistribution is immutable")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.axes)

    @property
    def alphabets(self) -> tuple[Alphabet, ...]:
        return tuple(a for _, a in self.axes)

    def alphabet(self, name: str) -> Alphabet:
        return self.axes[self.axis(name)][1]

    def axis(self, name: str) -> int:
        for i, (n, _) in enumerate(self.axes):
            if n == name:
                return i
        raise UnknownVariable(
            f"variable {name!r} not among {self.names}"
        )

    def __repr__(self) -> str:
        dims = "x".join(str(a.size) for a in self.alphabets)
        return f"JointDistribution({'/'.join(self.names)}; {dims})"


@dataclass(frozen=True)
class Channel:
    """Row-stochastic conditional table p(to | from)."""

    from_name: str
    from_alphabet: Alphabet
    to_name: str
    to_alphabet: Alphabet
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        shape = (self.from_alphabet.size, self.to_alphabet.size)
        if m.shape != shape:
            raise DimensionMismatch(
                f"channel matrix shape {m.shape}, expected {shape}"
            )
        if m.min(initial=0.0) < -_NEG_CLAMP:
            raise NegativeMass(f"negative channel entry {m.min():.3e}")
        m = np.where(m < 0, 0.0, m)
        rows = m.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > _ROW_TOL):
            worst = float(np.abs(rows - 1.0).max())
            raise NotNormalizable(f"channel rows off stochastic by {worst:.3e}")
        object.__setattr__(self, "matrix", _readonly(m))


@dataclass(frozen=True)
class ConditionalTable:
    """p(to | given...) with rows of zero conditioning mass flagged.

    ``table`` has shape (given sizes..., |to|); flagged rows are set to the
    uniform distribution so downstream arithmetic stays finite.
    """

    to: Axis
    given: tuple[Axis, ...]
    table: np.ndarray
    zero_mass: np.ndarray

    def as_channel(self) -> Channel:
        if len(self.given) != 1:
            raise DimensionMismatch(
                "as_channel needs exactly one conditioning variable"
            )
        (gname, galpha) = self.given[0]
        return Channel(gname, galpha, self.to[0], self.to[1], self.table)


@dataclass(frozen=True)
class InfoQuery:
    """Request for a conditional entropy H(target | given), in bits."""

    target: tuple[str, ...]
    given: tuple[str, ...] = ()
    base: int = 2

    def __post_init__(self) -> None:
        object.__setattr__(self, "target", tuple(self.target))
        object.__setattr__(self, "given", tuple(self.given))
        if self.base != 2:
            raise DimensionMismatch("only base-2 information measures are supported")
        if not self.target:
            raise UnknownVariable("empty target in info query")
        if set(self.target) & set(self.given):
            raise NameCollision("target and given overlap")


@dataclass(frozen=True)
class DegradednessResult:
    """Outcome of the stochastic-degradedness feasibility test."""

    feasible: bool
    residual: float
    witness: Channel | None


# ---- construction -------------------------------------------------------

def build_joint(axes: Sequence[Axis], mass: Iterable[float] | np.ndarray) -> JointDistribution:
    """Build a joint table, repairing tiny normalization drift.

    Negative entries below -1e-15 are rejected; smaller ones are clamped to
    zero.  A total within 1e-9 of 1 is renormalized exactly; anything
    further off raises :class:`NotNormalizable`.
    """
    axes = tuple((str(n), a) for n, a in axes)
    shape = tuple(a.size for _, a in axes)
    arr = np.asarray(list(mass) if not isinstance(mass, np.ndarray) else mass, dtype=float)
    if arr.ndim == 1:
        if arr.size != int(np.prod(shape)):
            raise DimensionMismatch(
                f"flat mass has {arr.size} entries, expected {int(np.prod(shape))}"
            )
        arr = arr.reshape(shape)
    if arr.shape != shape:
        raise DimensionMismatch(f"mass shape {arr.shape}, expected {shape}")
    if arr.min(initial=0.0) < -_NEG_CLAMP:
        raise NegativeMass(f"negative mass {arr.min():.3e}")
    arr = np.where(arr < 0, 0.0, arr)
    total = float(arr.sum())
    if abs(total - 1.0) > _NORM_REPAIR:
        raise NotNormalizable(f"mass sums to {total!r}, outside repair tolerance")
    if total <= 0:
        raise NotNormalizable("mass sums to zero")
    return JointDistribution(axes, arr / total)


def marginal(j: JointDistribution, keep: Sequence[str]) -> JointDistribution:
    """Sum out every variable not in ``keep``; axes follow the ``keep`` order."""
    keep = tuple(keep)
    if not keep:
        raise UnknownVariable("marginal needs at least one variable")
    idx = [j.axis(n) for n in keep]
    if len(set(idx)) != len(idx):
        raise NameCollision(f"duplicate variables in {keep}")
    drop = tuple(i for i in range(len(j.axes)) if i not in idx)
    arr = j.mass.sum(axis=drop) if drop else j.mass
    # after the sum the surviving axes sit in ascending original order
    remaining = sorted(idx)
    arr = arr.transpose([remaining.index(i) for i in idx])
    axes = [j.axes[i] for i in idx]
    return JointDistribution(axes, arr / arr.sum())


def conditional(j: JointDistribution, to: str, given: Sequence[str]) -> ConditionalTable:
    """Conditional table p(to | given), zero-mass rows flagged and made uniform."""
    given = tuple(given)
    if not given:
        raise UnknownVariable("conditional needs a conditioning set")
    sub = marginal(j, (*given, to))
    num = sub.mass
    den = num.sum(axis=-1)
    zero = den <= 0.0
    safe = np.where(zero, 1.0, den)
    table = num / safe[..., None]
    k = sub.alphabets[-1].size
    table = np.where(zero[..., None], 1.0 / k, table)
    return ConditionalTable(
        to=sub.axes[-1],
        given=tuple(sub.axes[:-1]),
        table=_readonly(table),
        zero_mass=zero.copy(),
    )


# ---- information measures -----------------------------------------------

def _entropy_of(mass: np.ndarray) -> float:
    m = np.asarray(mass, dtype=float)
    pos = m[m > 0]
    return float(-(pos * np.log2(pos)).sum()) if pos.size else 0.0


def info_measure(j: JointDistribution, query: InfoQuery) -> float:
    """Evaluate H(target | given) in bits.

    Computed as H(target, given) - H(given); small negative rounding
    residue is clamped to zero.
    """
    h_joint = _entropy_of(marginal(j, query.target + query.given).mass)
    h_given = _entropy_of(marginal(j, query.given).mass) if query.given else 0.0
    return max(h_joint - h_given, 0.0)


def entropy(j: JointDistribution, target: Sequence[str] | str,
            given: Sequence[str] | str = ()) -> float:
    """Convenience wrapper: H(target | given) with string or sequence args."""
    t = (target,) if isinstance(target, str) else tuple(target)
    g = (given,) if isinstance(given, str) else tuple(given)
    return info_measure(j, InfoQuery(target=t, given=g))


def mutual_information(j: JointDistribution, x: Sequence[str] | str,
                       y: Sequence[str] | str, given: Sequence[str] | str = ()) -> float:
    """I(x; y | given) = H(x | given) - H(x | y, given), clamped at zero."""
    xs = (x,) if isinstance(x, str) else tuple(x)
    ys = (y,) if isinstance(y, str) else tuple(y)
    gs = (given,) if isinstance(given, str) else tuple(given)
    val = entropy(j, xs, gs) - entropy(j, xs, ys + gs)
    return max(val, 0.0)


def markov_residual(j: JointDistribution, x: str, y: str, z) -> float:
    """I(x; z | y) in bits; zero within 1e-10 certifies the chain x - y - z."""
    zs = (z,) if isinstance(z, str) else tuple(z)
    return mutual_information(j, x, zs, y)


# ---- channel attachment -------------------------------------------------

def attach_channel(j: JointDistribution, ch: Channel, parent: str) -> JointDistribution:
    """Extend the joint with a new variable conditionally independent of
    everything else given ``parent``.

    The new axis is appended last.  The construction guarantees the Markov
    chain (new) - parent - (rest) exactly.
    """
    k = j.axis(parent)
    palpha = j.axes[k][1]
    if ch.from_alphabet.symbols != palpha.symbols:
        raise AlphabetMismatch(
            f"channel input alphabet {ch.from_alphabet.symbols} does not match "
            f"variable {parent!r} with {palpha.symbols}"
        )
    if ch.to_name in j.names:
        raise NameCollision(f"variable {ch.to_name!r} already present")
    view_shape = [1] * j.mass.ndim + [ch.to_alphabet.size]
    view_shape[k] = palpha.size
    extended = j.mass[..., None] * ch.matrix.reshape(view_shape)
    axes = (*j.axes, (ch.to_name, ch.to_alphabet))
    return JointDistribution(axes, extended)


# ---- degradedness -------------------------------------------------------

def degradedness_test(ch_b: Channel, ch_e: Channel) -> DegradednessResult:
    """Decide whether ``ch_e`` is a stochastically degraded version of ``ch_b``.

    Searches for a row-stochastic postprocessing M with
    p(e|a) = sum_b p(b|a) M(e|b) by linear programming, minimizing the
    worst-case absolute residual.  Feasible when that residual is at most
    1e-7; the witness channel is returned for replay.
    """
    if ch_b.from_alphabet.symbols != ch_e.from_alphabet.symbols:
        raise AlphabetMismatch("channels must share their input alphabet")
    pb = ch_b.matrix
    pe = ch_e.matrix
    na, nb = pb.shape
    ne = pe.shape[1]
    nvar = nb * ne + 1  # flattened M plus the residual bound t

    cost = np.zeros(nvar)
    cost[-1] = 1.0

    # |(pb @ M)[a, e] - pe[a, e]| <= t for every (a, e)
    rows = []
    rhs = []
    for a in range(na):
        for e in range(ne):
            coeff = np.zeros(nvar)
            for b in range(nb):
                coeff[b * ne + e] = pb[a, b]
            plus = coeff.copy()
            plus[-1] = -1.0
            rows.append(plus)
            rhs.append(pe[a, e])
            minus = -coeff
            minus[-1] = -1.0
            rows.append(minus)
            rhs.append(-pe[a, e])
    a_ub = np.array(rows)
    b_ub = np.array(rhs)

    a_eq = np.zeros((nb, nvar))
    for b in range(nb):
        a_eq[b, b * ne:(b + 1) * ne] = 1.0
    b_eq = np.ones(nb)

    bounds = [(0.0, 1.0)] * (nb * ne) + [(0.0, 2.0)]
    res = linprog(cost, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                  bounds=bounds, method="highs")
    if not res.success:
        raise NotNormalizable(f"degradedness LP failed: {res.message}")

    residual = float(res.fun)
    feasible = residual <= DEGRADED_RESIDUAL_TOL
    witness = None
    if feasible:
        m = np.clip(res.x[:-1].reshape(nb, ne), 0.0, None)
        m = m / m.sum(axis=1, keepdims=True)
        witness = Channel(ch_b.to_name, ch_b.to_alphabet,
                          ch_e.to_name, ch_e.to_alphabet, m)
    return DegradednessResult(feasible=feasible, residual=residual, witness=witness)


# ---- convenience constructors ------------------------------------------

def binary_alphabet(name: str) -> Alphabet:
    return Alphabet(name, ("0", "1"))


def binary_symmetric_channel(crossover: float, from_name: str, to_name: str) -> Channel:
    """Binary channel flipping its input with the given probability."""
    if not 0.0 <= crossover <= 1.0:
        raise NotNormalizable(f"crossover {crossover} outside [0, 1]")
    q = float(crossover)
    return Channel(
        from_name, binary_alphabet(from_name),
        to_name, binary_alphabet(to_name),
        np.array([[1 - q, q], [q, 1 - q]]),
    )


def constant_channel(from_axis: Axis, to_name: str) -> Channel:
    """Channel mapping every input to a single dummy symbol."""
    name, alpha = from_axis
    return Channel(name, alpha, to_name, Alphabet(to_name, ("*",)),
                   np.ones((alpha.size, 1)))
