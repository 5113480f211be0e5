"""Shared helpers: an independent brute-force oracle for information
measures, and builders for the standard test sources."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from swsecrecy.probcore import (
    Alphabet,
    JointDistribution,
    attach_channel,
    binary_alphabet,
    binary_symmetric_channel,
    build_joint,
    constant_channel,
)

# ---- brute-force oracle (kept deliberately loop-based and numpy-free in
# ---- its arithmetic so it cannot share a bug with the library path)


def oracle_entropy(j: JointDistribution, names) -> float:
    """Marginal entropy in bits via explicit enumeration and fsum."""
    names = tuple(names)
    pos = [j.names.index(n) for n in names]
    acc: dict[tuple, float] = {}
    for idx in itertools.product(*[range(a.size) for a in j.alphabets]):
        key = tuple(idx[p] for p in pos)
        acc[key] = acc.get(key, 0.0) + float(j.mass[idx])
    return math.fsum(-p * math.log2(p) for p in acc.values() if p > 0.0)


def oracle_conditional_entropy(j: JointDistribution, target, given=()) -> float:
    target = tuple(target)
    given = tuple(given)
    if not given:
        return oracle_entropy(j, target)
    return oracle_entropy(j, target + given) - oracle_entropy(j, given)


def oracle_mutual_information(j: JointDistribution, x, y, given=()) -> float:
    x = (x,) if isinstance(x, str) else tuple(x)
    y = (y,) if isinstance(y, str) else tuple(y)
    return oracle_conditional_entropy(j, x, given) - oracle_conditional_entropy(
        j, x, y + tuple(given)
    )


# ---- random and named sources ------------------------------------------


def random_joint(rng: np.random.Generator, shape, names=None, sparsify=0.0):
    """Random dense joint over the given shape; optionally zero some cells."""
    if names is None:
        names = [chr(ord("X") + i) for i in range(len(shape))]
    mass = rng.gamma(1.0, size=shape)
    if sparsify > 0.0:
        mask = rng.random(shape) < sparsify
        if mask.all():
            mask.flat[int(rng.integers(mask.size))] = False
        mass = np.where(mask, 0.0, mass)
    mass = mass / mass.sum()
    axes = [
        (n, Alphabet(n, tuple(str(k) for k in range(s))))
        for n, s in zip(names, shape)
    ]
    return build_joint(axes, mass)


def uniform_binary_source(name="A") -> JointDistribution:
    return build_joint([(name, binary_alphabet(name))], [0.5, 0.5])


def dsbs_joint(crossover=0.1, a="A", c="C") -> JointDistribution:
    """Doubly symmetric binary pair: uniform bit plus a symmetric flip."""
    base = uniform_binary_source(a)
    return attach_channel(base, binary_symmetric_channel(crossover, a, c), a)


def dsbs_with_eve(crossover=0.1, eve_crossover=None, a="A", c="C", e="E"):
    """(A, C) doubly symmetric; E constant unless an eavesdropper channel
    crossover from A is given."""
    j = dsbs_joint(crossover, a, c)
    if eve_crossover is None:
        return attach_channel(j, constant_channel((a, j.alphabet(a)), e), a)
    return attach_channel(j, binary_symmetric_channel(eve_crossover, a, e), a)


def copy_source_with_eve(eve_crossover=None, a="A", c="C", e="E"):
    """C is an exact copy of a uniform bit A; E as in dsbs_with_eve."""
    return dsbs_with_eve(0.0, eve_crossover, a, c, e)


def degraded_cascade(p_b=0.1, p_e=0.1, a="A", b="B", e="E"):
    """A uniform, B a noisy view of A, E a noisier view through B."""
    j = attach_channel(uniform_binary_source(a), binary_symmetric_channel(p_b, a, b), a)
    return attach_channel(j, binary_symmetric_channel(p_e, b, e), b)


@pytest.fixture
def rng():
    return np.random.default_rng(20260825)
