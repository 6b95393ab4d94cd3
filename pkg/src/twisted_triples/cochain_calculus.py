"""Multilinear cochains over an algebra and the cyclic-cohomology operators.

An algebra handle is any object with ``mul(a, b)``, ``one()``, ``zero()``
and ``distance(a, b)``; elements must support ``+`` and scalar ``*``.
Cochains are black-box evaluators, so the same code serves the crossed
product and finite matrix algebras.

Conventions::

    b psi(a0..a_{n+1}) = sum_{i=0}^{n} (-1)^i psi(.., a_i a_{i+1}, ..)
                         + (-1)^{n+1} psi(a_{n+1} a0, a1, .., an)
    lambda psi(a0..an) = (-1)^n psi(an, a0, .., a_{n-1})
    B = A o B0,   A = sum_{j=0}^{n-1} lambda^j   (no 1/(n) or (n+1) factor)
    B0 psi(a0..a_{n-1}) = psi(1, a0, ..) - (-1)^n psi(a0, .., a_{n-1}, 1)
"""
from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DegreeMismatchError, NotDerivationError, NotUnitalError


class Cochain:
    """Degree ``n`` multilinear functional on ``(n+1)``-tuples."""

    def __init__(self, degree: int, evaluator: Callable[..., complex], algebra=None,
                 name: str = "psi"):
        if degree < 0:
            raise ValueError("degree must be >= 0")
        self.degree = degree
        self.evaluator = evaluator
        self.algebra = algebra
        self.name = name

    def __call__(self, *args) -> complex:
        if len(args) != self.degree + 1:
            raise DegreeMismatchError(
                f"{self.name} has degree {self.degree}, got {len(args)} arguments")
        return complex(self.evaluator(*args))

    def _same(self, other: "Cochain"):
        if other.degree != self.degree:
            raise DegreeMismatchError("cochains of different degree")

    def __add__(self, other: "Cochain") -> "Cochain":
        self._same(other)
        return Cochain(self.degree, lambda *a: self(*a) + other(*a), self.algebra,
                       f"({self.name} + {other.name})")

    def __sub__(self, other: "Cochain") -> "Cochain":
        return self + (-1) * other

    def __mul__(self, c) -> "Cochain":
        c = complex(c)
        return Cochain(self.degree, lambda *a: c * self(*a), self.algebra, self.name)

    __rmul__ = __mul__

    def __neg__(self):
        return (-1) * self

    def __repr__(self) -> str:
        return f"Cochain({self.name}, degree={self.degree})"


def zero_cochain(degree: int, algebra=None) -> Cochain:
    return Cochain(degree, lambda *a: 0.0, algebra, "0")


def _unit(algebra):
    one = getattr(algebra, "one", None)
    if one is None:
        raise NotUnitalError("algebra handle has no unit")
    u = one()
    if u is None:
        raise NotUnitalError("algebra is not unital")
    return u


def hochschild_b(psi: Cochain) -> Cochain:
    n = psi.degree
    mul = psi.algebra.mul

    def ev(*a):
        total = 0j
        for i in range(n + 1):
            args = a[:i] + (mul(a[i], a[i + 1]),) + a[i + 2:]
            total += (-1) ** i * psi(*args)
        total += (-1) ** (n + 1) * psi(mul(a[n + 1], a[0]), *a[1:n + 1])
        return total

    return Cochain(n + 1, ev, psi.algebra, f"b{psi.name}")


def cyclic_lambda(psi: Cochain) -> Cochain:
    n = psi.degree
    sign = (-1) ** n
    return Cochain(n, lambda *a: sign * psi(a[-1], *a[:-1]), psi.algebra,
                   f"lambda{psi.name}")


def cyclic_antisymmetrize(psi: Cochain) -> Cochain:
    """``A psi = sum_{j=0}^{n} lambda^j psi``."""
    n = psi.degree

    def ev(*a):
        total = 0j
        for j in range(n + 1):
            rot = a[n + 1 - j:] + a[:n + 1 - j]
            total += (-1) ** (n * j) * psi(*rot)
        return total

    return Cochain(n, ev, psi.algebra, f"A{psi.name}")


def connes_B(psi: Cochain) -> Cochain:
    """Connes boundary ``B = A o B0`` (degree ``n - 1``)."""
    n = psi.degree
    if n == 0:
        return Cochain(0, lambda *a: 0.0, psi.algebra, f"B{psi.name}")
    # validate up front so non-unital algebras fail at construction
    _unit(psi.algebra)

    def b0(*a):
        one = _unit(psi.algebra)
        return psi(one, *a) - (-1) ** n * psi(*a, one)

    out = cyclic_antisymmetrize(Cochain(n - 1, b0, psi.algebra, f"B0{psi.name}"))
    out.name = f"B{psi.name}"
    return out


def check_derivation(delta: Callable, algebra, samples: Iterable[tuple] | None = None,
                     tol: float = 1e-10, rng: np.random.Generator | None = None,
                     count: int = 3) -> float:
    """Max Leibniz defect ``|delta(ab) - delta(a) b - a delta(b)|`` over samples."""
    if samples is None:
        gen = getattr(algebra, "random_element", None)
        if gen is None:
            return 0.0
        rng = rng or np.random.default_rng(0)
        samples = [(gen(rng), gen(rng)) for _ in range(count)]
    worst = 0.0
    for a, b in samples:
        lhs = delta(algebra.mul(a, b))
        rhs = algebra.mul(delta(a), b) + algebra.mul(a, delta(b))
        worst = max(worst, algebra.distance(lhs, rhs))
    if worst > tol:
        raise NotDerivationError(f"Leibniz defect {worst:.2e} > {tol:.1e}")
    return worst


def lie_derivative(psi: Cochain, delta: Callable, samples: Iterable[tuple] | None = None,
                   tol: float = 1e-10, check: bool = True) -> Cochain:
    """``L_delta psi(a0..an) = sum_i psi(.., delta(a_i), ..)``."""
    if check:
        check_derivation(delta, psi.algebra, samples, tol)
    n = psi.degree

    def ev(*a):
        return sum(psi(*(a[:i] + (delta(a[i]),) + a[i + 1:])) for i in range(n + 1))

    return Cochain(n, ev, psi.algebra, f"L{psi.name}")


def contraction_e(psi: Cochain, delta: Callable) -> Cochain:
    """``e_delta psi(a0, a1, a2) = -psi(delta(a2) a0, a1)`` for degree-1 ``psi``."""
    if psi.degree != 1:
        raise DegreeMismatchError("e_delta is defined here for degree-1 cochains only")
    mul = psi.algebra.mul
    return Cochain(2, lambda a0, a1, a2: -psi(mul(delta(a2), a0), a1), psi.algebra,
                   f"e{psi.name}")


def contraction_E(psi: Cochain, delta: Callable | None = None) -> Cochain:
    """``E_delta psi(a0) = psi(1, a0)`` for degree-1 ``psi``."""
    if psi.degree != 1:
        raise DegreeMismatchError("E_delta is defined here for degree-1 cochains only")
    one = _unit(psi.algebra)
    return Cochain(0, lambda a0: psi(one, a0), psi.algebra, f"E{psi.name}")


@dataclass
class CocycleReport:
    name: str
    kind: str
    b_residual: float
    lambda_residual: float | None
    tolerance: float
    samples: int
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _residuals(psi: Cochain, samples: Sequence[tuple], cyclic: bool):
    bpsi = hochschild_b(psi)
    lpsi = cyclic_lambda(psi)
    rb, rl = 0.0, 0.0
    count = 0
    for s in samples:
        count += 1
        if len(s) == psi.degree + 2:
            rb = max(rb, abs(bpsi(*s)))
        elif len(s) == psi.degree + 1 and cyclic:
            rl = max(rl, abs(lpsi(*s) - psi(*s)))
        else:
            raise DegreeMismatchError("sample tuple has the wrong length")
    return rb, rl, count


def _sample_tuples(psi: Cochain, samples, cyclic: bool):
    """Accept either explicit tuples or a callable ``k -> k-tuple``."""
    if callable(samples):
        out = [samples(psi.degree + 2)]
        if cyclic:
            out.append(samples(psi.degree + 1))
        return out
    return list(samples)


def is_hochschild_cocycle(psi: Cochain, samples, tol: float = 1e-8) -> CocycleReport:
    """Max ``|b psi|`` over ``(n+2)``-tuples in ``samples``."""
    samples = _sample_tuples(psi, samples, False)
    rb, _, count = _residuals(psi, samples, False)
    return CocycleReport(psi.name, "hochschild", rb, None, tol, count, rb < tol)


def is_cyclic_cocycle(psi: Cochain, samples, tol: float = 1e-8) -> CocycleReport:
    """Max ``|b psi|`` on ``(n+2)``-tuples and ``|lambda psi - psi|`` on ``(n+1)``-tuples."""
    samples = _sample_tuples(psi, samples, True)
    rb, rl, count = _residuals(psi, samples, True)
    return CocycleReport(psi.name, "cyclic", rb, rl, tol, count, rb < tol and rl < tol)


class MatrixAlgebra:
    """``M_d(C)`` (or a block subalgebra) as an algebra handle."""

    def __init__(self, dim: int):
        self.dim = dim

    def mul(self, a, b):
        return a @ b

    def one(self):
        return np.eye(self.dim, dtype=complex)

    def zero(self):
        return np.zeros((self.dim, self.dim), dtype=complex)

    def distance(self, a, b) -> float:
        return float(np.max(np.abs(a - b))) if np.size(a) else 0.0

    def random_element(self, rng: np.random.Generator):
        d = self.dim
        return rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))


class NonUnitalAlgebra(MatrixAlgebra):
    """Strictly upper triangular matrices: an algebra with no unit."""

    def one(self):
        return None

    def random_element(self, rng: np.random.Generator):
        return np.triu(super().random_element(rng), 1)


def random_matrix_cochain(degree: int, algebra: MatrixAlgebra, rng: np.random.Generator
                          ) -> Cochain:
    """Multilinear cochain ``sum_idx T[idx] prod_i a_i[idx_i]`` with random tensor T."""
    d = algebra.dim
    shape = (d * d,) * (degree + 1)
    T = rng.normal(size=shape) + 1j * rng.normal(size=shape)

    def ev(*a):
        out = T
        for m in reversed(a):
            out = out @ np.ravel(m)
        return out

    return Cochain(degree, ev, algebra, f"rand{degree}")


def random_tuples(algebra, rng: np.random.Generator) -> Callable[[int], tuple]:
    return lambda k: tuple(algebra.random_element(rng) for _ in range(k))


def multilinearity_defect(psi: Cochain, rng: np.random.Generator, trials: int = 3) -> float:
    """Max defect of ``psi(.., x + c y, ..) - psi(.., x, ..) - c psi(.., y, ..)``."""
    gen = psi.algebra.random_element
    worst = 0.0
    for _, slot in itertools.product(range(trials), range(psi.degree + 1)):
        args = [gen(rng) for _ in range(psi.degree + 1)]
        x, y = args[slot], gen(rng)
        c = complex(*rng.normal(size=2))
        mix = args.copy()
        mix[slot] = x + c * y
        alt = args.copy()
        alt[slot] = y
        worst = max(worst, abs(psi(*mix) - psi(*args) - c * psi(*alt)))
    return worst
