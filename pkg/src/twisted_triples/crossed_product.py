"""The algebra C(S^1) x| Gamma of finite sums  sum_phi a_phi U*_phi.

Product and involution::

    (f U*_phi)(g U*_psi) = f (g o phi) U*_{psi o phi}
    (f U*_phi)^*         = (conj f o phi^-1) U*_{phi^-1}

Gamma is the free group on a set of named generator diffeomorphisms.  A
:class:`GroupWord` ``(l_1, ..., l_k)`` is realized by ``l_1 o ... o l_k``,
so the word of ``psi o phi`` is the reduced concatenation of the letters
of ``psi`` followed by those of ``phi``.
"""
from __future__ import annotations

import json
import re
import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .circle_kernel import ALIAS_TOL, CircleDiffeo, PeriodicFunction, max_coeff_diff

Letter = tuple[str, int]


@dataclass(frozen=True)
class GroupWord:
    """Freely reduced word in named generators and their inverses."""

    letters: tuple[Letter, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", _reduce(self.letters))

    @classmethod
    def identity(cls) -> "GroupWord":
        return cls(())

    @classmethod
    def generator(cls, name: str, power: int = 1) -> "GroupWord":
        sign = 1 if power > 0 else -1
        return cls(tuple((name, sign) for _ in range(abs(power))))

    @classmethod
    def parse(cls, text: str) -> "GroupWord":
        """Parse ``"a b^-1 a"`` (whitespace or ``*`` separated); ``""``/``"e"`` is 1."""
        text = text.strip()
        if text in ("", "e", "1", "id"):
            return cls.identity()
        letters = []
        for tok in re.split(r"[\s*]+", text):
            m = re.fullmatch(r"([A-Za-z_][A-Za-z0-9_]*)(?:\^(-?\d+))?", tok)
            if not m:
                raise ValueError(f"bad word token {tok!r}")
            letters.extend(cls.generator(m.group(1), int(m.group(2) or 1)).letters)
        return cls(tuple(letters))

    @property
    def is_identity(self) -> bool:
        return not self.letters

    def inverse(self) -> "GroupWord":
        return GroupWord(tuple((g, -e) for g, e in reversed(self.letters)))

    def after(self, inner: "GroupWord") -> "GroupWord":
        """Word of ``self o inner``."""
        return GroupWord(self.letters + inner.letters)

    def __str__(self) -> str:
        if not self.letters:
            return "e"
        return " ".join(g if e == 1 else f"{g}^-1" for g, e in self.letters)


def _reduce(letters: Iterable[Letter]) -> tuple[Letter, ...]:
    out: list[Letter] = []
    for g, e in letters:
        if e not in (1, -1):
            raise ValueError("letter exponents must be +1 or -1")
        if out and out[-1][0] == g and out[-1][1] == -e:
            out.pop()
        else:
            out.append((g, e))
    return tuple(out)


class DiffeoGroup:
    """Free group on named orientation-preserving circle diffeomorphisms."""

    def __init__(self, generators: Mapping[str, CircleDiffeo]):
        self.generators = dict(generators)
        self._cache: dict[GroupWord, CircleDiffeo] = {GroupWord(): CircleDiffeo.identity()}

    def word(self, text: str) -> GroupWord:
        w = GroupWord.parse(text)
        for g, _ in w.letters:
            if g not in self.generators:
                raise KeyError(f"unknown generator {g!r}")
        return w

    def realize(self, word: GroupWord) -> CircleDiffeo:
        """Diffeomorphism of a word (cached)."""
        if word in self._cache:
            return self._cache[word]
        if len(word.letters) == 1:
            g, e = word.letters[0]
            phi = self.generators[g]
            out = phi if e == 1 else phi.invert()
        else:
            head = GroupWord(word.letters[:1])
            tail = GroupWord(word.letters[1:])
            out = self.realize(head).compose(self.realize(tail))
            if np.max(np.abs(out.displacement.coeffs)) < 1e-12:
                warnings.warn(f"word {word} is numerically the identity; "
                              "kept distinct (free group)", RuntimeWarning)
        self._cache[word] = out
        return out

    def __repr__(self) -> str:
        return f"DiffeoGroup({sorted(self.generators)})"


def _clean(f: PeriodicFunction) -> PeriodicFunction:
    return f.trim(ALIAS_TOL * 1e-2)


class CrossedProductElement:
    """Finite sum ``sum_w a_w U*_w`` over group words ``w``."""

    __slots__ = ("group", "_terms")

    def __init__(self, group: DiffeoGroup,
                 terms: Mapping[GroupWord, PeriodicFunction] | None = None):
        self.group = group
        clean = {}
        for w, f in (terms or {}).items():
            if not isinstance(f, PeriodicFunction):
                f = PeriodicFunction.constant(complex(f))
            if np.any(f.coeffs != 0):
                clean[w] = f
        self._terms = clean

    # construction -----------------------------------------------------
    @classmethod
    def function(cls, group: DiffeoGroup, f) -> "CrossedProductElement":
        return cls(group, {GroupWord(): f})

    @classmethod
    def unitary(cls, group: DiffeoGroup, word: GroupWord | str) -> "CrossedProductElement":
        """``U*_word``."""
        if isinstance(word, str):
            word = group.word(word)
        return cls(group, {word: PeriodicFunction.constant(1.0)})

    @classmethod
    def monomial(cls, group: DiffeoGroup, f, word: GroupWord | str) -> "CrossedProductElement":
        """``f U*_word``."""
        if isinstance(word, str):
            word = group.word(word)
        return cls(group, {word: f})

    @classmethod
    def one(cls, group: DiffeoGroup) -> "CrossedProductElement":
        return cls.function(group, PeriodicFunction.constant(1.0))

    # access ------------------------------------------------------------
    @property
    def terms(self) -> dict[GroupWord, PeriodicFunction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def coefficient(self, word: GroupWord) -> PeriodicFunction:
        return self._terms.get(word, PeriodicFunction.zero())

    def is_zero(self) -> bool:
        return not self._terms

    def map_terms(self, fn) -> "CrossedProductElement":
        """Apply ``fn(word, coeff) -> coeff`` termwise."""
        return CrossedProductElement(self.group, {w: fn(w, f) for w, f in self._terms.items()})

    # vector space ----------------------------------------------------
    def _check(self, other: "CrossedProductElement"):
        if other.group is not self.group:
            raise ValueError("elements live over different groups")

    def __add__(self, other):
        if not isinstance(other, CrossedProductElement):
            other = CrossedProductElement.function(self.group, complex(other))
        self._check(other)
        terms = dict(self._terms)
        for w, f in other._terms.items():
            terms[w] = terms[w] + f if w in terms else f
        return CrossedProductElement(self.group, terms)

    __radd__ = __add__

    def __neg__(self):
        return self.map_terms(lambda w, f: -f)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, CrossedProductElement):
            return multiply(self, other)
        c = complex(other)
        return self.map_terms(lambda w, f: f * c)

    def __rmul__(self, other):
        c = complex(other)
        return self.map_terms(lambda w, f: f * c)

    def distance(self, other: "CrossedProductElement") -> float:
        """Max coefficient difference over all words."""
        self._check(other)
        words = set(self._terms) | set(other._terms)
        if not words:
            return 0.0
        return max(max_coeff_diff(self.coefficient(w), other.coefficient(w)) for w in words)

    def __repr__(self) -> str:
        body = " + ".join(f"f[{f.band}] U*({w})" for w, f in self._terms.items()) or "0"
        return f"CrossedProductElement({body})"

    # serialization ---------------------------------------------------
    def to_json(self) -> str:
        rows = []
        for w, f in self._terms.items():
            n = f.band
            rows.append({"word": str(w),
                         "coeffs": [[k - n, c.real, c.imag]
                                    for k, c in enumerate(f.coeffs) if c != 0]})
        return json.dumps(rows)

    @classmethod
    def from_json(cls, group: DiffeoGroup, text: str) -> "CrossedProductElement":
        rows = json.loads(text)
        el = cls(group)
        for row in rows:
            el = el + cls.monomial(group, PeriodicFunction.from_triples(row["coeffs"]),
                                   group.word(row["word"]))
        return el


def multiply(a: CrossedProductElement, b: CrossedProductElement) -> CrossedProductElement:
    """Bilinear extension of ``(f U*_phi)(g U*_psi) = f (g o phi) U*_{psi o phi}``."""
    a._check(b)
    group = a.group
    out: dict[GroupWord, PeriodicFunction] = {}
    for wa, f in a.items():
        phi = group.realize(wa)
        for wb, g in b.items():
            coeff = _clean(f * g.compose(phi))
            w = wb.after(wa)
            out[w] = out[w] + coeff if w in out else coeff
    return CrossedProductElement(group, out)


def involution(a: CrossedProductElement) -> CrossedProductElement:
    """``(f U*_phi)^* = (conj f o phi^-1) U*_{phi^-1}``."""
    group = a.group
    out: dict[GroupWord, PeriodicFunction] = {}
    for w, f in a.items():
        winv = w.inverse()
        out[winv] = _clean(f.conj().compose(group.realize(winv)))
    return CrossedProductElement(group, out)


def sigma_power(a: CrossedProductElement, m: int) -> CrossedProductElement:
    """``sigma^m``: multiply each ``a_phi`` by ``(phi')^m``."""
    if m == 0:
        return a
    group = a.group
    return a.map_terms(
        lambda w, f: _clean(f * group.realize(w).derivative_power(m)))


def sigma(a: CrossedProductElement) -> CrossedProductElement:
    """Twisting automorphism ``sigma(g U*_phi) = phi' g U*_phi``."""
    return sigma_power(a, 1)


def sigma_inverse(a: CrossedProductElement) -> CrossedProductElement:
    return sigma_power(a, -1)


def sigma_analytic(a: CrossedProductElement, z: complex) -> CrossedProductElement:
    """Analytic continuation ``(phi')^{i z}`` of the modular group; ``z = -i`` gives sigma."""
    z = complex(z)
    if z == 0:
        return a
    group = a.group
    return a.map_terms(
        lambda w, f: _clean(f * group.realize(w).derivative_power(1j * z)))


def sigma_t(a: CrossedProductElement, t: float) -> CrossedProductElement:
    """Modular group ``sigma_t(g U*_phi) = (phi')^{it} g U*_phi`` for real ``t``."""
    return sigma_analytic(a, float(t))


def delta(a: CrossedProductElement) -> CrossedProductElement:
    """Generator of the modular group: ``delta(f U*_phi) = i log(phi') f U*_phi``."""
    group = a.group
    return a.map_terms(
        lambda w, f: _clean(f * (1j * group.realize(w).log_derivative())))


def state(a: CrossedProductElement) -> complex:
    """Canonical state: integral of the identity-word coefficient."""
    return a.coefficient(GroupWord()).quadrature()


class CrossedProductAlgebra:
    """Algebra handle used by the cochain machinery."""

    def __init__(self, group: DiffeoGroup):
        self.group = group

    def mul(self, a, b):
        return multiply(a, b)

    def one(self):
        return CrossedProductElement.one(self.group)

    def zero(self):
        return CrossedProductElement(self.group)

    def distance(self, a, b) -> float:
        return a.distance(b)

    def random_element(self, rng: np.random.Generator, band: int = 3,
                       terms: int = 2) -> CrossedProductElement:
        """Sum of ``terms`` monomials with random low-band coefficients."""
        return sum((random_monomial(self.group, rng, band) for _ in range(terms)),
                   self.zero())


def random_monomial(group: DiffeoGroup, rng: np.random.Generator, band: int = 3,
                    max_len: int = 1) -> CrossedProductElement:
    """``f U*_w`` with ``f`` of band ``band`` and ``w`` a random short word."""
    names = sorted(group.generators)
    n = int(rng.integers(0, max_len + 1)) if names else 0
    letters = tuple((names[int(rng.integers(len(names)))], int(rng.choice([-1, 1])))
                    for _ in range(n))
    scale = 1.0 / (1.0 + np.arange(band + 1))
    triples = [(k, *(rng.normal(size=2) * scale[abs(k)])) for k in range(-band, band + 1)]
    return CrossedProductElement.monomial(group, PeriodicFunction.from_triples(triples),
                                          GroupWord(letters))
