"""Fourier-mode truncations of operators on L^2(R/Z).

Matrices are indexed by modes ``k = -N..N`` (row/column ``k + N``) in the
basis ``e_k(x) = exp(2 pi i k x)``.  Every matrix here is the exact
compression ``P_N T P_N`` of the infinite operator, computed column by
column: the image of ``e_k`` is sampled on an oversampled grid and
transformed back to modes.

Conventions
-----------
* ``dirac(N)`` is ``(1/i) d/dx`` with eigenvalue ``2 pi k``.
* ``abs_dirac(N, zero_patch)`` replaces the zero eigenvalue of ``|D|`` by
  ``zero_patch`` (default 1) so that negative powers exist; the heat
  semigroup keeps the true eigenvalue 0.
* Statements about bounded operators are checked on the interior block
  ``|k| <= N/2``; the outer band is a truncation halo.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from .circle_kernel import TWO_PI, CircleDiffeo, PeriodicFunction, grid_size, uniform_grid
from .crossed_product import CrossedProductElement, GroupWord, sigma
from .errors import AliasingError, DegenerateSpectrumError, TruncationError

LEAK_BOUND = 1e-10
HEAT_FLOOR = 1e-16


@dataclass(frozen=True, eq=False)
class TruncatedOperator:
    """Dense matrix on Fourier modes ``|k| <= N``."""

    matrix: np.ndarray
    N: int
    label: str = ""

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2 * self.N + 1, 2 * self.N + 1):
            raise ValueError(f"matrix shape {m.shape} does not match N={self.N}")
        object.__setattr__(self, "matrix", m)

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def adjoint(self) -> "TruncatedOperator":
        return TruncatedOperator(self.matrix.conj().T, self.N, f"({self.label})*")

    def opnorm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    def interior(self, radius: int | None = None) -> "TruncatedOperator":
        """Compression to modes ``|k| <= radius`` (default ``N // 2``)."""
        r = self.N // 2 if radius is None else radius
        s = slice(self.N - r, self.N + r + 1)
        return TruncatedOperator(self.matrix[s, s], r, self.label)

    def compress(self, N: int) -> "TruncatedOperator":
        return self.interior(N)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def diagonal(self) -> np.ndarray:
        return np.diag(self.matrix)

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, TruncatedOperator):
            if other.N != self.N:
                raise ValueError("truncation levels differ")
            return other.matrix
        return other

    def __matmul__(self, other):
        return TruncatedOperator(self.matrix @ self._coerce(other), self.N,
                                 f"{self.label}{getattr(other, 'label', '')}")

    def __add__(self, other):
        return TruncatedOperator(self.matrix + self._coerce(other), self.N, self.label)

    def __sub__(self, other):
        return TruncatedOperator(self.matrix - self._coerce(other), self.N, self.label)

    def __neg__(self):
        return TruncatedOperator(-self.matrix, self.N, self.label)

    def __mul__(self, c):
        return TruncatedOperator(self.matrix * complex(c), self.N, self.label)

    __rmul__ = __mul__

    # binary dump: row-major (re, im) little-endian float64 + JSON header
    def save(self, path: str | Path) -> None:
        path = Path(path)
        pairs = np.empty(self.matrix.shape + (2,), dtype="<f8")
        pairs[..., 0] = self.matrix.real
        pairs[..., 1] = self.matrix.imag
        path.with_suffix(".bin").write_bytes(pairs.tobytes(order="C"))
        path.with_suffix(".json").write_text(json.dumps({"N": self.N, "label": self.label}))

    @classmethod
    def load(cls, path: str | Path) -> "TruncatedOperator":
        path = Path(path)
        header = json.loads(path.with_suffix(".json").read_text())
        n = 2 * header["N"] + 1
        raw = np.frombuffer(path.with_suffix(".bin").read_bytes(), dtype="<f8")
        pairs = raw.reshape(n, n, 2)
        return cls(pairs[..., 0] + 1j * pairs[..., 1], header["N"], header["label"])


def identity(N: int) -> TruncatedOperator:
    return TruncatedOperator(np.eye(2 * N + 1), N, "I")


def dirac(N: int) -> TruncatedOperator:
    """``(1/i) d/dx``: diag(2 pi k)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return TruncatedOperator(np.diag(TWO_PI * np.arange(-N, N + 1)).astype(complex), N, "D")


def abs_dirac(N: int, zero_patch: float = 1.0) -> TruncatedOperator:
    """``|D|`` with the k = 0 eigenvalue replaced by ``zero_patch``."""
    d = TWO_PI * np.abs(np.arange(-N, N + 1)).astype(float)
    d[N] = zero_patch
    return TruncatedOperator(np.diag(d).astype(complex), N, "|D|")


def dirac_power(N: int, s: float, signed: bool = False, zero_patch: float = 1.0
                ) -> TruncatedOperator:
    """``|D|^s`` (or ``D |D|^{s-1}`` when ``signed``) with the zero mode patched."""
    k = np.arange(-N, N + 1)
    d = TWO_PI * np.abs(k).astype(float)
    d[N] = zero_patch
    vals = d ** s
    if signed:
        vals = vals * np.where(k < 0, -1.0, 1.0)
    return TruncatedOperator(np.diag(vals).astype(complex), N, f"|D|^{s:g}")


def phase(N: int) -> TruncatedOperator:
    """Sign of D (Hilbert transform), +1 on the zero mode."""
    k = np.arange(-N, N + 1)
    return TruncatedOperator(np.diag(np.where(k < 0, -1.0, 1.0)).astype(complex), N, "F")


def _work_grid(N: int, phis: list[CircleDiffeo], weights: list[PeriodicFunction]) -> int:
    stretch = max([1.0] + [float(np.max(np.real(p.derivative().samples(
        max(256, grid_size(p.derivative().band)))))) for p in phis])
    need = int(math.ceil(N * stretch)) + max([0] + [w.band for w in weights]) + 32
    return max(grid_size(N), grid_size(need))


def _composition_matrix(weight: PeriodicFunction, phi: CircleDiffeo, N: int,
                        G: int | None = None, chunk: int = 256) -> tuple[np.ndarray, float]:
    """Matrix of ``xi -> weight * (xi o phi)`` on modes |k| <= N.

    Returns the matrix and the aliasing ratio measured in the top quarter of
    the work grid.
    """
    G = G or _work_grid(N, [phi], [weight])
    x = uniform_grid(G)
    w = weight.samples(G)
    y = phi(x)
    ks = np.arange(-N, N + 1)
    out = np.empty((2 * N + 1, 2 * N + 1), dtype=complex)
    alias = 0.0
    for start in range(0, ks.size, chunk):
        kk = ks[start:start + chunk]
        cols = w[:, None] * np.exp(TWO_PI * 1j * np.multiply.outer(y, kk))
        c = np.fft.fft(cols, axis=0) / G
        # modes j >= 0 at rows 0..N, negative modes at G-N..G-1
        out[:, start:start + kk.size] = np.concatenate([c[G - N:], c[: N + 1]], axis=0)
        energy = np.sum(np.abs(c) ** 2, axis=0)
        q = G // 4
        top = np.sum(np.abs(c[q: G - q]) ** 2, axis=0)
        alias = max(alias, float(np.max(np.sqrt(top / np.maximum(energy, 1e-300)))))
    return out, alias


def represent(a: CrossedProductElement, N: int, leak_bound: float = LEAK_BOUND
              ) -> TruncatedOperator:
    """Compression of ``pi(a) xi = sum a_phi (phi')^{1/2} (xi o phi)``."""
    group = a.group
    phis = [group.realize(w) for w, _ in a.items()]
    weights = [f * p.derivative_power(0.5) if p.displacement.band else f
               for (w, f), p in zip(a.items(), phis)]
    G = _work_grid(N, phis, weights)
    mat = np.zeros((2 * N + 1, 2 * N + 1), dtype=complex)
    for phi, wt in zip(phis, weights):
        m, alias = _composition_matrix(wt, phi, N, G)
        if alias > leak_bound:
            raise AliasingError(f"representation aliasing {alias:.2e} > {leak_bound:.1e}")
        mat += m
    return TruncatedOperator(mat, N, "pi(a)")


def multiplication(f: PeriodicFunction, N: int) -> TruncatedOperator:
    """Toeplitz matrix ``T[j, k] = f_{j-k}``."""
    ks = np.arange(-N, N + 1)
    diff = ks[:, None] - ks[None, :]
    c = f.padded(max(f.band, 2 * N))
    return TruncatedOperator(c[diff + max(f.band, 2 * N)], N, "M_f")


def pullback(phi: CircleDiffeo, N: int, label: str = "V^-1") -> TruncatedOperator:
    """``xi -> xi o phi`` (no density factor), i.e. ``V_phi^-1``."""
    m, alias = _composition_matrix(PeriodicFunction.constant(1.0), phi, N)
    if alias > LEAK_BOUND:
        raise AliasingError(f"translation aliasing {alias:.2e}")
    return TruncatedOperator(m, N, label)


def translation(word: GroupWord, group, N: int) -> TruncatedOperator:
    """``V_phi xi = xi o phi^-1`` (no density factor)."""
    return pullback(group.realize(word.inverse()), N, f"V[{word}]")


def inverse_translation(word: GroupWord, group, N: int) -> TruncatedOperator:
    """``V_phi^-1 xi = xi o phi``."""
    return translation(word.inverse(), group, N)


def twisted_commutator(D: TruncatedOperator, a: CrossedProductElement, N: int | None = None
                       ) -> TruncatedOperator:
    """``D pi(a) - pi(sigma(a)) D``; exact compression when D is diagonal."""
    N = D.N if N is None else N
    pa = represent(a, N)
    psa = represent(sigma(a), N)
    return TruncatedOperator(D.matrix @ pa.matrix - psa.matrix @ D.matrix, N, "d_sigma(a)")


def abs_twisted_commutator(a: CrossedProductElement, N: int) -> TruncatedOperator:
    """``|D| pi(a) - pi(sigma(a)) |D|`` (zero mode of |D| is 0 here)."""
    d = TWO_PI * np.abs(np.arange(-N, N + 1))
    pa = represent(a, N).matrix
    psa = represent(sigma(a), N).matrix
    return TruncatedOperator(d[:, None] * pa - psa * d[None, :], N, "|d|_sigma(a)")


def commutator_element(a: CrossedProductElement) -> CrossedProductElement:
    """Element ``c`` with ``D pi(a) - pi(sigma a) D = pi(c)``.

    On a monomial ``g U*_phi`` the coefficient is
    ``(1/i) (g phi'^{1/2})' phi'^{-1/2}``.
    """
    group = a.group

    def coeff(w, g):
        phi = group.realize(w)
        return (g * phi.derivative_power(0.5)).derivative() * phi.derivative_power(-0.5) * (-1j)

    return a.map_terms(coeff)


def commutator_sup(a: CrossedProductElement, samples: int = 1 << 16) -> float:
    """``sup |c|`` for the single coefficient of a monomial ``a``."""
    terms = list(commutator_element(a).items())
    if len(terms) != 1:
        raise ValueError("commutator_sup expects a monomial")
    c = terms[0][1]
    x = uniform_grid(samples)
    j = int(np.argmax(np.abs(c.samples(samples))))
    dx = 1.0 / samples
    # polish the grid maximum
    opt = minimize_scalar(lambda y: -abs(c(y)), bounds=(x[j] - dx, x[j] + dx),
                          method="bounded", options={"xatol": 1e-13})
    return float(max(-opt.fun, abs(c(x[j]))))


def norm_ladder(a: CrossedProductElement, Ns=(64, 128, 256, 512), absolute: bool = False
                ) -> list[tuple[int, float, float]]:
    """Interior operator norms of the (|D|-)twisted commutator along ``Ns``.

    Returns ``(N, value, |value(N) - value(previous N)|)``; the first delta is nan.
    """
    rows = []
    prev = None
    for N in Ns:
        T = abs_twisted_commutator(a, N) if absolute else twisted_commutator(dirac(N), a)
        v = T.interior().opnorm()
        rows.append((N, v, float("nan") if prev is None else abs(v - prev)))
        prev = v
    return rows


def heat(D: TruncatedOperator, t: float, zero_patch: float | None = None,
         floor: float = HEAT_FLOOR) -> TruncatedOperator:
    """``exp(-t D^2)`` for diagonal D.

    Raises TruncationError when ``exp(-t (2 pi N)^2) > floor``.  With
    ``zero_patch`` the zero eigenvalue is replaced (finite-rank change).
    """
    if t <= 0:
        raise ValueError("t must be positive")
    lam = np.real(np.diag(D.matrix)).copy()
    edge = math.exp(-t * float(np.max(lam ** 2)))
    if edge > floor:
        raise TruncationError(
            f"exp(-t (2 pi N)^2) = {edge:.2e} > {floor:.0e}; t = {t:.3e} too small for N = {D.N}")
    if zero_patch is not None:
        lam[lam == 0] = zero_patch
    return TruncatedOperator(np.diag(np.exp(-t * lam ** 2)).astype(complex), D.N, "heat")


def t_min(N: int, floor: float = HEAT_FLOOR) -> float:
    """Smallest heat time for which the truncation edge is below ``floor``."""
    return -math.log(floor) / (TWO_PI * N) ** 2


def summability_exponent(T: TruncatedOperator, lo: float = 1 / 8, hi: float = 1 / 2) -> float:
    """Slope ``alpha`` of ``log s_j ~ -alpha log j`` for ``j`` in ``[lo N, hi N]``."""
    s = np.linalg.svd(T.matrix, compute_uv=False)
    s = s[s > 1e-14 * max(s[0], 1e-300)] if s.size and s[0] > 0 else s[:0]
    if s.size < 8:
        raise DegenerateSpectrumError(f"only {s.size} nonzero singular values")
    j = np.arange(1, s.size + 1)
    sel = (j >= max(1, int(lo * T.N))) & (j <= int(hi * T.N))
    if np.count_nonzero(sel) < 8:
        raise DegenerateSpectrumError("fit window holds fewer than 8 singular values")
    slope = np.polyfit(np.log(j[sel]), np.log(s[sel]), 1)[0]
    return float(-slope)
