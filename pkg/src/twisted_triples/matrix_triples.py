"""Finite-dimensional graded twisted spectral triples.

A triple on ``C^{2m} = H_+ (+) H_-`` has grading ``gamma = diag(I, -I)``,
an odd self-adjoint invertible ``D = [[0, D_-], [D_+, 0]]`` and the
automorphism ``sigma(a) = e^{2h} a e^{-2h}`` for an even self-adjoint
``h``.  Algebra elements are even: ``a = diag(a_+, a_-)``.

Since every operator is a matrix, all trace identities hold exactly and
are checked to rounding error.

Normalizations
--------------
* ``chern_phi = Phi^+ - Phi^-`` with
  ``Phi^pm = Tr prod_i D_pm^-1 (D_pm a^i_pm - sigma(a^i)_mp D_pm)``.
* For an idempotent ``e``, ``Phi^pm(e, .., e) = rank e_pm - rank f_pm``
  exactly, so the index pairing carries no extra constant.
* ``Phi_F(a0..an) = Tr(gamma F [F, a0] .. [F, an])`` and the homotopy
  endpoint satisfy ``Phi_1 = (-1)^{n/2} Phi_F``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .cochain_calculus import Cochain
from .errors import (DegreeMismatchError, GradingError, NotIdempotentError,
                     NotSelfAdjointError, SingularDError)

MAX_DEGREE = 4
RANK_TOL = 1e-9


def _herm(x: np.ndarray) -> np.ndarray:
    return x.conj().T


def _expm_herm(h: np.ndarray, s: complex = 1.0) -> np.ndarray:
    """``exp(s h)`` for Hermitian ``h`` via its eigendecomposition."""
    w, V = np.linalg.eigh(h)
    return (V * np.exp(s * w)) @ _herm(V)


def _is_even(x: np.ndarray, m: int, tol: float = 0.0) -> bool:
    return (np.max(np.abs(x[:m, m:]), initial=0.0) <= tol
            and np.max(np.abs(x[m:, :m]), initial=0.0) <= tol)


def grading(m: int) -> np.ndarray:
    return np.diag(np.r_[np.ones(m), -np.ones(m)]).astype(complex)


def rank(x: np.ndarray, tol: float = RANK_TOL) -> int:
    s = np.linalg.svd(x, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


@dataclass(eq=False)
class MatrixTwistedTriple:
    """Graded twisted triple ``(C^{2m}, D, sigma = Ad e^{2h})``."""

    D: np.ndarray
    h: np.ndarray
    label: str = "triple"
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.D = np.asarray(self.D, dtype=complex)
        self.h = np.asarray(self.h, dtype=complex)
        n = self.D.shape[0]
        if n % 2 or self.D.shape != (n, n) or self.h.shape != (n, n):
            raise GradingError("D and h must be square of even size")
        if np.max(np.abs(self.D - _herm(self.D))) > 1e-12 * max(1.0, np.max(np.abs(self.D))):
            raise NotSelfAdjointError("D is not self-adjoint")
        if np.max(np.abs(self.h - _herm(self.h)), initial=0.0) > 1e-12:
            raise NotSelfAdjointError("h is not self-adjoint")
        m = n // 2
        scale = max(1.0, float(np.max(np.abs(self.D))))
        if max(np.max(np.abs(self.D[:m, :m])), np.max(np.abs(self.D[m:, m:]))) > 1e-14 * scale:
            raise GradingError("D must be odd: D gamma + gamma D = 0")
        if not _is_even(self.h, m):
            raise GradingError("h must be even")
        if np.linalg.svd(self.D, compute_uv=False)[-1] <= 1e-14 * np.max(np.abs(self.D)):
            raise SingularDError("D is not invertible")

    # structure ------------------------------------------------------------
    @property
    def m(self) -> int:
        return self.D.shape[0] // 2

    @property
    def dim(self) -> int:
        return self.D.shape[0]

    @property
    def gamma(self) -> np.ndarray:
        return grading(self.m)

    @property
    def D_plus(self) -> np.ndarray:
        """``D_+ : H_+ -> H_-``."""
        return self.D[self.m:, :self.m]

    @property
    def D_minus(self) -> np.ndarray:
        """``D_- : H_- -> H_+``."""
        return self.D[:self.m, self.m:]

    @property
    def D_inv(self) -> np.ndarray:
        if "Dinv" not in self._cache:
            try:
                self._cache["Dinv"] = np.linalg.inv(self.D)
            except np.linalg.LinAlgError as exc:
                raise SingularDError(str(exc)) from exc
        return self._cache["Dinv"]

    def sigma_power(self, s: complex) -> tuple[np.ndarray, np.ndarray]:
        """``(e^{2 s h}, e^{-2 s h})``, the conjugating pair of ``sigma^s``."""
        key = ("sig", complex(s))
        if key not in self._cache:
            self._cache[key] = (_expm_herm(self.h, 2 * s), _expm_herm(self.h, -2 * s))
        return self._cache[key]

    def sigma(self, a: np.ndarray, s: complex = 1.0) -> np.ndarray:
        """``sigma^s(a) = e^{2 s h} a e^{-2 s h}`` (complex ``s`` allowed)."""
        L, R = self.sigma_power(s)
        return L @ a @ R

    def sigma_it(self, a: np.ndarray, t: complex) -> np.ndarray:
        """Modular group ``sigma_{it}(a) = e^{-2 t h} a e^{2 t h}``; ``sigma_t = Ad e^{2ith}``."""
        return self.sigma(a, -t)

    def blocks(self, a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        m = self.m
        if not _is_even(a, m, 1e-12 * max(1.0, np.max(np.abs(a), initial=0))):
            raise GradingError("algebra elements must be even")
        return a[:m, :m], a[m:, m:]

    def abs_D(self) -> np.ndarray:
        if "absD" not in self._cache:
            w, V = np.linalg.eigh(self.D)
            self._cache["absD"] = (V * np.abs(w)) @ _herm(V)
            self._cache["eig"] = (w, V)
        return self._cache["absD"]

    def D_power_t(self, t: float) -> np.ndarray:
        """``D_t = D |D|^{-t}``."""
        self.abs_D()
        w, V = self._cache["eig"]
        return (V * (w * np.abs(w) ** (-t))) @ _herm(V)

    def phase(self) -> np.ndarray:
        return self.D_power_t(1.0)

    # io -------------------------------------------------------------------
    def save(self, path: str | Path) -> None:
        """``<path>.bin``: D then h, row-major (re, im) little-endian float64."""
        path = Path(path)
        data = np.stack([self.D, self.h])
        pairs = np.stack([data.real, data.imag], axis=-1).astype("<f8")
        path.with_suffix(".bin").write_bytes(pairs.tobytes(order="C"))
        path.with_suffix(".json").write_text(json.dumps(
            {"dim": self.dim, "label": self.label, "matrices": ["D", "h"]}))

    @classmethod
    def load(cls, path: str | Path) -> "MatrixTwistedTriple":
        path = Path(path)
        head = json.loads(path.with_suffix(".json").read_text())
        n = head["dim"]
        raw = np.frombuffer(path.with_suffix(".bin").read_bytes(), dtype="<f8")
        arr = raw.reshape(2, n, n, 2)
        mats = arr[..., 0] + 1j * arr[..., 1]
        return cls(mats[0], mats[1], head.get("label", "triple"))


def untwisted_triple(D_plus: np.ndarray, label: str = "triple") -> MatrixTwistedTriple:
    m = D_plus.shape[0]
    z = np.zeros((m, m), dtype=complex)
    D = np.block([[z, _herm(D_plus)], [D_plus, z]])
    return MatrixTwistedTriple(D, np.zeros((2 * m, 2 * m), dtype=complex), label)


def perturb(T: MatrixTwistedTriple, h: np.ndarray) -> MatrixTwistedTriple:
    """``D' = e^h D e^h`` with ``sigma = Ad e^{2h}``; ``T`` must be untwisted."""
    h = np.asarray(h, dtype=complex)
    if np.max(np.abs(T.h), initial=0.0) > 0:
        raise ValueError("perturb expects a triple with trivial sigma")
    if np.max(np.abs(h - _herm(h)), initial=0.0) > 1e-12:
        raise NotSelfAdjointError("h is not self-adjoint")
    if not _is_even(h, T.m, 1e-14):
        raise GradingError("h must be even")
    E = _expm_herm(h)
    D = E @ T.D @ E
    return MatrixTwistedTriple((D + _herm(D)) / 2, h, T.label + "'")


def random_unitary(m: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_even(m: int, rng: np.random.Generator, hermitian: bool = False,
                normalize: bool = True) -> np.ndarray:
    """Random even matrix, scaled to operator norm 1 when ``normalize``."""
    def blk():
        x = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
        return (x + _herm(x)) / 2 if hermitian else x
    out = np.zeros((2 * m, 2 * m), dtype=complex)
    out[:m, :m] = blk()
    out[m:, m:] = blk()
    return out / np.linalg.norm(out, 2) if normalize else out


def random_triple(m: int, rng: np.random.Generator, h_scale: float = 0.3,
                  spread: tuple[float, float] = (1.0, 2.0)) -> MatrixTwistedTriple:
    """Perturbation by a random even ``h`` (``||h|| = h_scale``) of an untwisted
    triple whose ``D_+`` has singular values in ``spread``."""
    s = rng.uniform(*spread, size=m)
    Dp = (random_unitary(m, rng) * s) @ _herm(random_unitary(m, rng))
    h = h_scale * random_even(m, rng, hermitian=True)
    return perturb(untwisted_triple(Dp), h)


# commutators --------------------------------------------------------------

def twisted_commutator(T: MatrixTwistedTriple, a: np.ndarray) -> np.ndarray:
    """``d_sigma(a) = D a - sigma(a) D``."""
    return T.D @ a - T.sigma(a) @ T.D


def gauge_potential(T: MatrixTwistedTriple, pairs: Sequence[tuple[np.ndarray, np.ndarray]]
                    ) -> np.ndarray:
    """``A = sum a_i d_sigma(b_i)``."""
    out = np.zeros_like(T.D)
    for a, b in pairs:
        out = out + a @ twisted_commutator(T, b)
    return out


def bimodule_action(T: MatrixTwistedTriple, a: np.ndarray, omega: np.ndarray,
                    b: np.ndarray) -> np.ndarray:
    """``a . omega . b = sigma(a) omega b``."""
    return T.sigma(a) @ omega @ b


def potential_span_rank(T: MatrixTwistedTriple, basis: Sequence[np.ndarray],
                        extra: Sequence[np.ndarray] = ()) -> int:
    """Rank of ``{a d_sigma(b) : a, b in basis}`` together with ``extra``."""
    vecs = [np.ravel(a @ twisted_commutator(T, b)) for a in basis for b in basis]
    vecs += [np.ravel(x) for x in extra]
    return rank(np.array(vecs))


# Chern cocycles -----------------------------------------------------------

def _check_degree(n: int, args: Sequence, max_degree: int):
    if n % 2 or n < 0 or n > max_degree:
        raise DegreeMismatchError(f"n must be even and <= {max_degree}, got {n}")
    if len(args) != n + 1:
        raise DegreeMismatchError(f"expected {n + 1} arguments, got {len(args)}")


def chern_phi(T: MatrixTwistedTriple, n: int, args: Sequence[np.ndarray],
              max_degree: int = MAX_DEGREE) -> complex:
    """``Tr(gamma D^-1 d_sigma a0 ... D^-1 d_sigma an)``."""
    _check_degree(n, args, max_degree)
    Dinv = T.D_inv
    prod = T.gamma
    for a in args:
        prod = prod @ (Dinv @ twisted_commutator(T, a))
    return complex(np.trace(prod))


def phi_pm(T: MatrixTwistedTriple, n: int, args: Sequence[np.ndarray],
           max_degree: int = MAX_DEGREE) -> tuple[complex, complex]:
    """Half characters ``(Phi^+, Phi^-)``."""
    _check_degree(n, args, max_degree)
    Dp, Dm = T.D_plus, T.D_minus
    Dp_inv, Dm_inv = np.linalg.inv(Dp), np.linalg.inv(Dm)
    m = T.m
    P = np.eye(m, dtype=complex)
    M = np.eye(m, dtype=complex)
    for a in args:
        ap, am = T.blocks(a)
        sp, sm = T.blocks(T.sigma(a))
        P = P @ (Dp_inv @ (Dp @ ap - sm @ Dp))
        M = M @ (Dm_inv @ (Dm @ am - sp @ Dm))
    return complex(np.trace(P)), complex(np.trace(M))


@dataclass
class IdempotentData:
    e: np.ndarray
    tag: str = "projection"

    def __post_init__(self):
        self.e = np.asarray(self.e, dtype=complex)
        if np.max(np.abs(self.e @ self.e - self.e)) > 1e-12 * max(1.0, np.max(np.abs(self.e))):
            raise NotIdempotentError("e^2 != e")

    @classmethod
    def projection(cls, p: np.ndarray) -> "IdempotentData":
        return cls(p, "projection")

    @classmethod
    def twisted(cls, T: MatrixTwistedTriple, p: np.ndarray) -> "IdempotentData":
        """``e = e^{-h} p e^{h}``, so that ``e* = sigma(e)``."""
        return cls(_expm_herm(T.h, -1) @ p @ _expm_herm(T.h, 1), "twisted")

    def f_pm(self, T: MatrixTwistedTriple) -> tuple[np.ndarray, np.ndarray]:
        """``f_pm = D_pm^-1 sigma(e)_mp D_pm``."""
        sp, sm = T.blocks(T.sigma(self.e))
        Dp, Dm = T.D_plus, T.D_minus
        return np.linalg.solve(Dp, sm @ Dp), np.linalg.solve(Dm, sp @ Dm)

    def sigma_adjoint_defect(self, T: MatrixTwistedTriple) -> float:
        return float(np.max(np.abs(_herm(self.e) - T.sigma(self.e))))


def diagonal_projection(m: int, plus: Sequence[int], minus: Sequence[int]) -> np.ndarray:
    """Even coordinate projection onto the listed basis vectors of ``H_+``, ``H_-``."""
    d = np.zeros(2 * m)
    d[list(plus)] = 1
    d[[m + i for i in minus]] = 1
    return np.diag(d).astype(complex)


@dataclass
class IndexResult:
    index_plus: int
    index_minus: int
    phi_plus: complex
    phi_minus: complex

    @property
    def residual(self) -> float:
        return max(abs(self.phi_plus - self.index_plus), abs(self.phi_minus - self.index_minus))

    def as_tuple(self):
        return self.index_plus, self.index_minus, self.phi_plus, self.phi_minus


def index_pair(T: MatrixTwistedTriple, e: IdempotentData | np.ndarray, n: int = 0,
               tol: float = 1e-9, check: bool = True) -> IndexResult:
    """Fredholm indices of ``f_pm e_pm`` and the half characters on ``(e, .., e)``.

    With ``check`` the half characters must match the indices to ``tol`` and
    ``Index^+ = -Index^-``; otherwise the raw values are returned.
    """
    if not isinstance(e, IdempotentData):
        e = IdempotentData(e)
    ep, em = T.blocks(e.e)
    fp, fm = e.f_pm(T)
    ind_p = rank(ep) - rank(fp)
    ind_m = rank(em) - rank(fm)
    pp, pm = phi_pm(T, n, [e.e] * (n + 1), max(n, MAX_DEGREE))
    res = IndexResult(ind_p, ind_m, pp, pm)
    if not check:
        return res
    if res.residual > tol:
        raise AssertionError(f"half characters differ from indices by {res.residual:.2e}")
    if ind_p != -ind_m:
        raise AssertionError(f"Index+ = {ind_p} but Index- = {ind_m}")
    return res


def homotopy_indices(T: MatrixTwistedTriple, e: IdempotentData, n: int = 0,
                     ts: Sequence[float] | None = None) -> list[IndexResult]:
    """Indices along ``t -> sigma_{it}(e) = e^{-2th} e e^{2th}``."""
    ts = np.linspace(0.0, 1.0, 11) if ts is None else ts
    return [index_pair(T, IdempotentData(T.sigma(e.e, -t), e.tag), n) for t in ts]


# Fredholm module and homotopy --------------------------------------------

@dataclass
class PhaseReport:
    F: np.ndarray
    residuals: list[float]

    @property
    def max_residual(self) -> float:
        return max(self.residuals, default=0.0)


def untwist_phase(T: MatrixTwistedTriple, samples: Sequence[np.ndarray] = ()) -> PhaseReport:
    """``F = D |D|^-1`` and the residuals of
    ``[F, a] = |D|^-1 ((D a - sigma(a) D) - (|D| a - sigma(a) |D|) F)``."""
    F = T.phase()
    A = T.abs_D()
    Ainv = np.linalg.inv(A)
    out = []
    for a in samples:
        sa = T.sigma(a)
        rhs = Ainv @ ((T.D @ a - sa @ T.D) - (A @ a - sa @ A) @ F)
        out.append(float(np.max(np.abs(F @ a - a @ F - rhs))))
    return PhaseReport(F, out)


def phi_F(T: MatrixTwistedTriple, n: int, args: Sequence[np.ndarray],
          max_degree: int = MAX_DEGREE) -> complex:
    """``Tr(gamma F [F, a0] ... [F, an])``."""
    _check_degree(n, args, max_degree)
    F = T.phase()
    prod = T.gamma @ F
    for a in args:
        prod = prod @ (F @ a - a @ F)
    return complex(np.trace(prod))


def homotopy_phi_t(T: MatrixTwistedTriple, t: float, n: int, args: Sequence[np.ndarray],
                   max_degree: int = MAX_DEGREE) -> complex:
    """``Tr(gamma prod D_t^-1 (D_t a - sigma^{1-t}(a) D_t))`` with ``D_t = D |D|^{-t}``."""
    _check_degree(n, args, max_degree)
    Dt = T.D_power_t(t)
    Dt_inv = np.linalg.inv(Dt)
    prod = T.gamma
    for a in args:
        prod = prod @ (Dt_inv @ (Dt @ a - T.sigma(a, 1 - t) @ Dt))
    return complex(np.trace(prod))


def phi_F_endpoint_sign(n: int) -> int:
    """``Phi_1 = (-1)^{n/2} Phi_F``."""
    return (-1) ** (n // 2)


def pi_t_form(T: MatrixTwistedTriple, t: float, n: int, args: Sequence[np.ndarray],
              max_degree: int = MAX_DEGREE) -> complex:
    """``Tr prod_i X_i`` with ``X = sigma_{-it}(a_+) - D_- sigma_{i - it}(a_-) D_-^-1``.

    Here ``sigma_z = Ad e^{2izh}``, so ``sigma_z = sigma^{iz}``.
    """
    _check_degree(n, args, max_degree)
    m = T.m
    Dm = T.D_minus
    Dm_inv = np.linalg.inv(Dm)
    prod = np.eye(m, dtype=complex)
    for a in args:
        x_plus = T.blocks(T.sigma(a, t))[0]          # sigma_{-it} = sigma^{t}
        y_minus = T.blocks(T.sigma(a, t - 1))[1]     # sigma_{i-it} = sigma^{t-1}
        prod = prod @ (x_plus - Dm @ y_minus @ Dm_inv)
    return complex(np.trace(prod))


def phi_plus_adjoint(T: MatrixTwistedTriple, n: int, args: Sequence[np.ndarray]) -> complex:
    """``(Phi^+)*(a0..an) = conj Phi^+(an*, .., a0*)``."""
    rev = [_herm(a) for a in reversed(args)]
    return complex(np.conj(phi_pm(T, n, rev, max(n, MAX_DEGREE))[0]))


@dataclass
class EndpointReport:
    phi0: complex
    phi_plus_star: complex
    phi1: complex
    minus_phi_minus: complex

    @property
    def residuals(self) -> tuple[float, float]:
        return abs(self.phi0 - self.phi_plus_star), abs(self.phi1 - self.minus_phi_minus)

    def to_dict(self) -> dict:
        r0, r1 = self.residuals
        return {"phi0": [self.phi0.real, self.phi0.imag],
                "phi_plus_star": [self.phi_plus_star.real, self.phi_plus_star.imag],
                "phi1": [self.phi1.real, self.phi1.imag],
                "minus_phi_minus": [self.minus_phi_minus.real, self.minus_phi_minus.imag],
                "residual0": r0, "residual1": r1}


def adjoint_chern_endpoints(T: MatrixTwistedTriple, args: Sequence[np.ndarray]) -> EndpointReport:
    n = len(args) - 1
    return EndpointReport(pi_t_form(T, 0.0, n, args, max(n, MAX_DEGREE)),
                          phi_plus_adjoint(T, n, args),
                          pi_t_form(T, 1.0, n, args, max(n, MAX_DEGREE)),
                          -phi_pm(T, n, args, max(n, MAX_DEGREE))[1])


class EvenAlgebra:
    """Even (block-diagonal) matrices as an algebra handle for cochains."""

    def __init__(self, m: int):
        self.m = m

    def mul(self, a, b):
        return a @ b

    def one(self):
        return np.eye(2 * self.m, dtype=complex)

    def zero(self):
        return np.zeros((2 * self.m, 2 * self.m), dtype=complex)

    def distance(self, a, b) -> float:
        return float(np.max(np.abs(a - b)))

    def random_element(self, rng: np.random.Generator):
        return random_even(self.m, rng)


def chern_cochain(T: MatrixTwistedTriple, n: int, which: str = "phi", t: float = 0.0):
    """``chern_phi`` (or ``Phi_t`` / ``Phi_F``) as a cochain on the even algebra."""
    fns = {"phi": lambda *a: chern_phi(T, n, a, max(n, MAX_DEGREE)),
           "t": lambda *a: homotopy_phi_t(T, t, n, a, max(n, MAX_DEGREE)),
           "F": lambda *a: phi_F(T, n, a, max(n, MAX_DEGREE))}
    if which not in fns:
        raise ValueError(f"which must be one of {sorted(fns)}")
    return Cochain(n, fns[which], EvenAlgebra(T.m), f"Phi_{which}")


def example_triple() -> MatrixTwistedTriple:
    """Fixed 8-dimensional triple (seed 2024) used by the CLI examples."""
    return random_triple(4, np.random.default_rng(2024))
