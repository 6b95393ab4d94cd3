"""Cocycles on the crossed product ``C(S^1) x| Gamma``.

* ``tau(a0, a1) = state(a0 d(a1))``: the transverse fundamental cocycle.
  On monomials ``tau(f U*_phi, g U*_psi) = int f (g o phi)' dx`` when
  ``psi o phi = 1`` and 0 otherwise.
* ``Psi_1(a0, a1)``: residue of ``pi(a0) (D pi(sigma^-1 a1) - pi(a1) D) |D|^-1``.
  On a pair with ``psi = phi^-1`` it equals::

      -2i int f (g o phi)' dx - i int f (g o phi) (log phi')' dx

  and it vanishes on words with nondegenerate fixed points.  The closed
  form satisfies ``Psi_1 = -2i tau + L_delta tau``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .circle_kernel import CircleDiffeo, PeriodicFunction
from .cochain_calculus import Cochain, connes_B, contraction_e, lie_derivative
from .crossed_product import (CrossedProductAlgebra, CrossedProductElement, DiffeoGroup,
                              GroupWord, delta, sigma_inverse, sigma_power)
from .errors import LocalizationError
from .operator_rep import TWO_PI, TruncatedOperator, represent
from .spectral_traces import HeatFitConfig, residue_functional

DEFAULT_N = 512
HALO = 1.5


@dataclass
class MonomialPair:
    """Arguments ``(f U*_phi, g U*_psi)`` of a degree-one cochain."""

    group: DiffeoGroup
    f: PeriodicFunction
    phi: GroupWord
    g: PeriodicFunction
    psi: GroupWord

    @classmethod
    def localized(cls, group: DiffeoGroup, f, phi: GroupWord | str, g) -> "MonomialPair":
        """Pair with ``psi = phi^-1``."""
        if isinstance(phi, str):
            phi = group.word(phi)
        return cls(group, f, phi, g, phi.inverse())

    @property
    def total_word(self) -> GroupWord:
        """Word of ``psi o phi``."""
        return self.psi.after(self.phi)

    @property
    def is_localized(self) -> bool:
        return self.total_word.is_identity

    @property
    def closed_form_valid(self) -> bool:
        return self.is_localized

    def elements(self) -> tuple[CrossedProductElement, CrossedProductElement]:
        G = self.group
        return (CrossedProductElement.monomial(G, self.f, self.phi),
                CrossedProductElement.monomial(G, self.g, self.psi))

    def twisted(self, m: int) -> "MonomialPair":
        """``(sigma^m a0, sigma^m a1)``."""
        if m == 0:
            return self
        a, b = (sigma_power(x, m) for x in self.elements())
        return MonomialPair(self.group, a.coefficient(self.phi), self.phi,
                            b.coefficient(self.psi), self.psi)

    def to_dict(self) -> dict:
        def co(h):
            return [[k - h.band, c.real, c.imag] for k, c in enumerate(h.coeffs) if c != 0]
        return {"f": co(self.f), "phi": str(self.phi), "g": co(self.g), "psi": str(self.psi)}


# transverse fundamental cocycle ------------------------------------------

def _tau_monomial(f, phi_word, g, psi_word, group) -> complex:
    if not psi_word.after(phi_word).is_identity:
        return 0j
    phi = group.realize(phi_word)
    return f.product(g.compose(phi).derivative()).quadrature()


def tau(pair: MonomialPair) -> complex:
    """``int f (g o phi)' dx`` on the localized stratum, 0 elsewhere."""
    return _tau_monomial(pair.f, pair.phi, pair.g, pair.psi, pair.group)


def _bilinear(monomial_fn):
    def ev(a: CrossedProductElement, b: CrossedProductElement) -> complex:
        total = 0j
        for wa, f in a.items():
            for wb, g in b.items():
                total += monomial_fn(f, wa, g, wb, a.group)
        return total
    return ev


def tau_cochain(group: DiffeoGroup) -> Cochain:
    return Cochain(1, _bilinear(_tau_monomial), CrossedProductAlgebra(group), "tau")


def delta_tau(pair: MonomialPair) -> complex:
    """``L_delta tau`` on a localized pair: ``-i int f (g o phi) (log phi')'``."""
    if not pair.is_localized:
        return 0j
    phi = pair.group.realize(pair.phi)
    return -1j * pair.f.product(pair.g.compose(phi)).product(phi.dlog_derivative()).quadrature()


# closed form of Psi_1 -----------------------------------------------------

def _psi1_monomial(f, phi_word, g, psi_word, group) -> complex:
    if not psi_word.after(phi_word).is_identity:
        return 0j
    phi = group.realize(phi_word)
    gphi = g.compose(phi)
    first = f.product(gphi.derivative()).quadrature()
    second = f.product(gphi).product(phi.dlog_derivative()).quadrature()
    return -2j * first - 1j * second


def psi1_closed(pair: MonomialPair) -> complex:
    """Localized closed form; raises LocalizationError off the stratum."""
    if not pair.is_localized:
        raise LocalizationError(f"psi o phi = {pair.total_word} is not the identity")
    return _psi1_monomial(pair.f, pair.phi, pair.g, pair.psi, pair.group)


def psi1_closed_cochain(group: DiffeoGroup) -> Cochain:
    """Closed form extended bilinearly, zero off the localized stratum."""
    return Cochain(1, _bilinear(_psi1_monomial), CrossedProductAlgebra(group), "Psi1")


# spectral Psi_1 -----------------------------------------------------------

def psi1_operator(a0: CrossedProductElement, a1: CrossedProductElement, N: int,
                  halo: float = HALO) -> TruncatedOperator:
    """Diagonal of ``pi(a0) (D pi(sigma^-1 a1) - pi(a1) D)`` on modes ``|k| <= N``.

    Built at truncation ``ceil(halo N)`` so that intermediate modes are not cut.
    """
    M = max(N, int(math.ceil(halo * N)))
    lam = TWO_PI * np.arange(-M, M + 1)
    p0 = represent(a0, M).matrix
    p1 = represent(a1, M).matrix
    ps = represent(sigma_inverse(a1), M).matrix
    C = lam[:, None] * ps - p1 * lam[None, :]
    diag = np.einsum("ij,ji->i", p0, C)[M - N: M + N + 1]
    return TruncatedOperator(np.diag(diag), N, "Psi1 operator")


def psi1_spectral_elements(a0, a1, N: int = DEFAULT_N, cfg: HeatFitConfig | None = None,
                           halo: float = HALO, full: bool = False, strict: bool = True):
    """Residue ``Psi_1(a0, a1)``; words are carried by the operator itself."""
    X = psi1_operator(a0, a1, N, halo)
    res = residue_functional(X, None, None, cfg, strict=strict)
    return res if full else res.value


def psi1_spectral(pair: MonomialPair, N: int = DEFAULT_N, cfg: HeatFitConfig | None = None,
                  halo: float = HALO, full: bool = False, strict: bool = True):
    """Spectral ``Psi_1`` on a monomial pair (any words).

    Off the localized stratum the curve has no ``t^{-1/2}`` term and the fit
    may stall above its residual bound; pass ``strict=False`` there.
    """
    a0, a1 = pair.elements()
    return psi1_spectral_elements(a0, a1, N, cfg, halo, full, strict)


def psi1_spectral_cochain(group: DiffeoGroup, N: int = DEFAULT_N,
                          cfg: HeatFitConfig | None = None) -> Cochain:
    return Cochain(1, lambda a, b: psi1_spectral_elements(a, b, N, cfg),
                   CrossedProductAlgebra(group), "Psi1_spec")


def psi_gauge_m(pair: MonomialPair, m: int, N: int = DEFAULT_N,
                cfg: HeatFitConfig | None = None, closed: bool = False) -> complex:
    """``Psi^(m)(a0, a1) = Psi_1(sigma^m a0, sigma^m a1)``."""
    tw = pair.twisted(m)
    return psi1_closed(tw) if closed else psi1_spectral(tw, N, cfg)


# identity check --------------------------------------------------------

@dataclass
class IdentityReport:
    psi1_closed: complex
    psi1_spectral: complex | None
    rhs: complex
    closed_residual: float
    spectral_residual: float | None
    closed_tol: float = 1e-9
    spectral_tol: float = 1e-3

    @property
    def passed(self) -> bool:
        ok = self.closed_residual < self.closed_tol
        if self.spectral_residual is not None:
            ok = ok and self.spectral_residual < self.spectral_tol
        return ok

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in list(d.items()):
            if isinstance(v, complex):
                d[k] = [v.real, v.imag]
        d["passed"] = self.passed
        return d


def psi1_identity_check(pair: MonomialPair, N: int | None = DEFAULT_N,
                        cfg: HeatFitConfig | None = None) -> IdentityReport:
    """Compare ``Psi_1`` with ``-2i tau + L_delta tau``.

    The right side uses the generic Lie derivative of ``tau`` through the
    crossed-product derivation ``delta``.  ``N=None`` skips the spectral side.
    """
    if not pair.is_localized:
        raise LocalizationError("identity check needs psi = phi^-1")
    group = pair.group
    t = tau_cochain(group)
    L = lie_derivative(t, delta)
    a0, a1 = pair.elements()
    rhs = -2j * t(a0, a1) + L(a0, a1)
    closed = psi1_closed(pair)
    spectral = None if N is None else psi1_spectral(pair, N, cfg)
    return IdentityReport(closed, spectral, rhs, abs(closed - rhs),
                          None if spectral is None else abs(spectral - rhs))


def cartan_residual(pair: MonomialPair) -> float:
    """``|L_delta tau - B(e_delta tau)|`` on a pair (``E_delta tau = 0``)."""
    t = tau_cochain(pair.group)
    L = lie_derivative(t, delta, check=False)
    Be = connes_B(contraction_e(t, delta))
    a0, a1 = pair.elements()
    return abs(L(a0, a1) - Be(a0, a1))


def random_localized_pair(group: DiffeoGroup, word: GroupWord | str,
                          rng: np.random.Generator, band: int = 4) -> MonomialPair:
    def rand():
        scale = 1.0 / (1.0 + np.arange(band + 1))
        return PeriodicFunction.from_triples(
            [(k, *(rng.normal(size=2) * scale[abs(k)])) for k in range(-band, band + 1)])
    return MonomialPair.localized(group, rand(), word, rand())


def pair_from_dict(data: dict, group: DiffeoGroup | None = None) -> MonomialPair:
    """``{f, g: [[k, re, im], ...], phi: literal or word, psi?: word}``."""
    if group is None:
        group = DiffeoGroup({"a": CircleDiffeo.from_literal(data["phi"])})
        phi = GroupWord.generator("a")
    else:
        phi = group.word(data["phi"])
    f = PeriodicFunction.from_triples(data["f"])
    g = PeriodicFunction.from_triples(data["g"])
    psi = group.word(data["psi"]) if isinstance(data.get("psi"), str) else phi.inverse()
    return MonomialPair(group, f, phi, g, psi)
