"""Band-limited functions and diffeomorphisms of the circle R/Z.

A :class:`PeriodicFunction` stores Fourier coefficients ``c_k`` for
``|k| <= band`` (array index ``k + band``) and is evaluated as
``sum_k c_k exp(2 pi i k x)``.  A :class:`CircleDiffeo` is a degree-one
lift ``x -> x + p(x)`` with ``p`` a real :class:`PeriodicFunction`.

Every operation that can leave the band (composition, pointwise maps,
inversion) either takes an explicit output band and raises
:class:`~twisted_triples.errors.AliasingError` when the measured tail is
too large, or picks the band adaptively by doubling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import optimize

from .errors import AliasingError, ConvergenceError, NonMonotoneError

DEFAULT_BAND = 32
ALIAS_TOL = 1e-13
MAX_BAND = 2048
TWO_PI = 2.0 * np.pi


def grid_size(band: int) -> int:
    """Smallest power of two >= 4 (band + 1)."""
    return 1 << max(2, math.ceil(math.log2(4 * (band + 1))))


def uniform_grid(m: int) -> np.ndarray:
    return np.arange(m) / m


def _coeffs_from_samples(samples: np.ndarray) -> tuple[np.ndarray, int]:
    """Centered Fourier coefficients of samples on a uniform grid.

    Returns the coefficient array for |k| <= kmax with kmax = (m - 1) // 2
    (the Nyquist mode of an even grid is dropped).
    """
    m = samples.shape[-1]
    c = np.fft.fft(samples, axis=-1) / m
    kmax = (m - 1) // 2
    out = np.concatenate([c[..., m - kmax:], c[..., : kmax + 1]], axis=-1)
    return out, kmax


def _tail_ratio(c: np.ndarray, kmax: int, band: int, atol: float = 0.0) -> float:
    """Relative L2 mass of modes band < |k| <= kmax.

    Tails with absolute L2 mass at most ``atol`` count as zero.
    """
    total = float(np.sum(np.abs(c) ** 2))
    if total == 0.0 or band >= kmax:
        return 0.0
    e = np.abs(c) ** 2
    tail = float(np.sum(e[: kmax - band]) + np.sum(e[kmax + band + 1:]))
    if math.sqrt(tail) <= atol:
        return 0.0
    return math.sqrt(tail / total)


class PeriodicFunction:
    """Truncated Fourier series on R/Z.

    Parameters
    ----------
    coeffs : array_like
        Complex coefficients ``c_{-N}, ..., c_N`` (odd length ``2N + 1``).

    Notes
    -----
    Instances are immutable: the coefficient array is copied and marked
    read-only.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs: Sequence[complex] | np.ndarray):
        c = np.array(coeffs, dtype=complex)
        if c.ndim != 1 or c.size % 2 != 1:
            raise ValueError("coefficient array must be 1-D with odd length")
        c.setflags(write=False)
        self._c = c

    # ------------------------------------------------------------------
    # construction
    @classmethod
    def constant(cls, value: complex = 1.0) -> "PeriodicFunction":
        return cls([value])

    @classmethod
    def zero(cls) -> "PeriodicFunction":
        return cls([0.0])

    @classmethod
    def mode(cls, k: int, amplitude: complex = 1.0) -> "PeriodicFunction":
        """``amplitude * exp(2 pi i k x)``."""
        n = abs(k)
        c = np.zeros(2 * n + 1, dtype=complex)
        c[k + n] = amplitude
        return cls(c)

    @classmethod
    def cos(cls, k: int = 1, amplitude: float = 1.0) -> "PeriodicFunction":
        return cls.mode(k, amplitude / 2) + cls.mode(-k, amplitude / 2)

    @classmethod
    def sin(cls, k: int = 1, amplitude: float = 1.0) -> "PeriodicFunction":
        return cls.mode(k, amplitude / 2j) + cls.mode(-k, -amplitude / 2j)

    @classmethod
    def from_triples(cls, triples: Iterable[Sequence[float]]) -> "PeriodicFunction":
        """Build from ``(k, re, im)`` triples (config literal format)."""
        triples = [(int(k), float(re), float(im)) for k, re, im in triples]
        if not triples:
            return cls.zero()
        n = max(abs(k) for k, _, _ in triples)
        c = np.zeros(2 * n + 1, dtype=complex)
        for k, re, im in triples:
            c[k + n] += re + 1j * im
        return cls(c)

    @classmethod
    def from_samples(cls, samples: np.ndarray, band: int | None = None,
                     tol: float | None = ALIAS_TOL) -> "PeriodicFunction":
        """Least-squares band-limited fit to samples on the grid ``j / m``.

        Raises AliasingError when the relative tail beyond ``band`` exceeds
        ``tol`` (pass ``tol=None`` to truncate silently).
        """
        c, kmax = _coeffs_from_samples(np.asarray(samples, dtype=complex))
        if band is None:
            band = kmax
        if band > kmax:
            raise ValueError(f"grid of {len(samples)} points cannot resolve band {band}")
        if tol is not None:
            ratio = _tail_ratio(c, kmax, band)
            if ratio > tol:
                raise AliasingError(
                    f"tail ratio {ratio:.3e} beyond band {band} exceeds {tol:.1e}")
        return cls(c[kmax - band: kmax + band + 1])

    @classmethod
    def from_callable(cls, fn: Callable[[np.ndarray], np.ndarray],
                      band: int | None = None, tol: float = ALIAS_TOL,
                      start_band: int = 16, max_band: int = MAX_BAND,
                      atol: float = 0.0) -> "PeriodicFunction":
        """Sample ``fn`` on uniform grids and fit.

        With ``band=None`` the band doubles from ``start_band`` until the
        tail ratio drops below ``tol``; the result is then trimmed to the
        smallest band meeting ``tol``.  ``atol`` is an absolute floor for the
        tail, for functions that are themselves at roundoff level.
        """
        if band is not None:
            m = grid_size(band)
            return cls.from_samples(fn(uniform_grid(m)), band, tol)
        b = start_band
        while b <= max_band:
            m = grid_size(b)
            c, kmax = _coeffs_from_samples(np.asarray(fn(uniform_grid(m)), dtype=complex))
            if _tail_ratio(c, kmax, b, atol) <= tol:
                return cls(c[kmax - b: kmax + b + 1]).trim(tol)
            b *= 2
        raise AliasingError(f"no band <= {max_band} reaches tail ratio {tol:.1e}")

    # ------------------------------------------------------------------
    # basic data
    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def band(self) -> int:
        return (self._c.size - 1) // 2

    def coeff(self, k: int) -> complex:
        n = self.band
        return complex(self._c[k + n]) if abs(k) <= n else 0.0j

    @property
    def is_real(self) -> bool:
        scale = max(1.0, float(np.max(np.abs(self._c))))
        return bool(np.max(np.abs(self._c[::-1] - self._c.conj())) < 1e-13 * scale)

    def padded(self, band: int) -> np.ndarray:
        """Coefficient array zero-padded (or truncated) to ``band``."""
        n = self.band
        out = np.zeros(2 * band + 1, dtype=complex)
        m = min(n, band)
        out[band - m: band + m + 1] = self._c[n - m: n + m + 1]
        return out

    def tail_ratio(self, band: int) -> float:
        return _tail_ratio(self._c, self.band, band)

    def truncate(self, band: int) -> "PeriodicFunction":
        return PeriodicFunction(self.padded(band))

    def trim(self, tol: float = ALIAS_TOL) -> "PeriodicFunction":
        """Drop high modes whose relative tail is at most ``tol``."""
        n = self.band
        energy = np.abs(self._c) ** 2
        total = energy.sum()
        if total == 0.0:
            return PeriodicFunction.zero()
        # energy outside |k| <= b, for b = n, n-1, ..., 0
        shell = energy[n:] + energy[n::-1]
        shell[0] = energy[n]
        outside = np.concatenate([[0.0], np.cumsum(shell[::-1])])[::-1][1:]
        ok = np.nonzero(np.sqrt(outside / total) <= tol)[0]
        return self.truncate(int(ok[0]))

    # ------------------------------------------------------------------
    # evaluation
    def __call__(self, x) -> np.ndarray | complex:
        x = np.asarray(x, dtype=float)
        k = np.arange(-self.band, self.band + 1)
        vals = np.exp(TWO_PI * 1j * np.multiply.outer(x, k)) @ self._c
        return complex(vals) if vals.ndim == 0 else vals

    def samples(self, m: int) -> np.ndarray:
        """Values on the grid ``j / m`` via the inverse FFT."""
        n = self.band
        if m < 2 * n + 1:
            raise ValueError(f"grid of {m} points too coarse for band {n}")
        buf = np.zeros(m, dtype=complex)
        buf[: n + 1] = self._c[n:]
        if n:
            buf[m - n:] = self._c[:n]
        return np.fft.ifft(buf) * m

    def sup_norm(self, m: int | None = None) -> float:
        m = m or max(grid_size(self.band), 256)
        return float(np.max(np.abs(self.samples(m))))

    # ------------------------------------------------------------------
    # arithmetic
    def _binary(self, other, op) -> "PeriodicFunction":
        if not isinstance(other, PeriodicFunction):
            other = PeriodicFunction.constant(complex(other))
        b = max(self.band, other.band)
        return PeriodicFunction(op(self.padded(b), other.padded(b)))

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __neg__(self):
        return PeriodicFunction(-self._c)

    def __mul__(self, other):
        if isinstance(other, PeriodicFunction):
            return self.product(other)
        return PeriodicFunction(self._c * complex(other))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return PeriodicFunction(self._c / complex(scalar))

    def product(self, other: "PeriodicFunction", band: int | None = None) -> "PeriodicFunction":
        """Pointwise product; exact for ``band >= self.band + other.band``."""
        full = self.band + other.band
        if full == 0:
            return PeriodicFunction(self._c * other._c)
        m = grid_size(full)
        prod = PeriodicFunction.from_samples(self.samples(m) * other.samples(m), full, None)
        if band is None:
            return prod.trim(ALIAS_TOL * 1e-3)
        if prod.tail_ratio(band) > ALIAS_TOL:
            raise AliasingError(f"product does not fit in band {band}")
        return prod.truncate(band)

    def conj(self) -> "PeriodicFunction":
        return PeriodicFunction(self._c[::-1].conj())

    def derivative(self) -> "PeriodicFunction":
        k = np.arange(-self.band, self.band + 1)
        return PeriodicFunction(TWO_PI * 1j * k * self._c)

    def quadrature(self) -> complex:
        """Exact integral over one period (the zero mode)."""
        return complex(self._c[self.band])

    def apply(self, fn: Callable[[np.ndarray], np.ndarray], band: int | None = None,
              tol: float = ALIAS_TOL) -> "PeriodicFunction":
        """Pointwise map ``x -> fn(self(x))`` refit to a band-limited function."""
        return PeriodicFunction.from_callable(
            lambda x: fn(self._eval_grid(x)), band=band, tol=tol,
            start_band=max(16, self.band))

    def _eval_grid(self, x: np.ndarray) -> np.ndarray:
        m = x.size
        if m >= 2 * self.band + 1 and np.allclose(x, uniform_grid(m), atol=0, rtol=0):
            return self.samples(m)
        return self(x)

    def compose(self, phi: "CircleDiffeo", band: int | None = None,
                tol: float = ALIAS_TOL) -> "PeriodicFunction":
        """``self o phi`` (see :func:`compose`)."""
        return compose(self, phi, band=band, tol=tol)

    def allclose(self, other: "PeriodicFunction", atol: float = 1e-12) -> bool:
        return max_coeff_diff(self, other) <= atol

    def __repr__(self) -> str:
        return f"PeriodicFunction(band={self.band})"


def max_coeff_diff(f: PeriodicFunction, g: PeriodicFunction) -> float:
    b = max(f.band, g.band)
    return float(np.max(np.abs(f.padded(b) - g.padded(b))))


def evaluate(f: PeriodicFunction, x) -> complex | np.ndarray:
    return f(x)


def quadrature(f: PeriodicFunction) -> complex:
    return f.quadrature()


def compose(f: PeriodicFunction, phi: "CircleDiffeo", band: int | None = None,
            tol: float = ALIAS_TOL) -> PeriodicFunction:
    """Fourier coefficients of ``f o phi``.

    Samples ``f(phi(x_j))`` on a uniform grid of at least ``4 (band + 1)``
    points and transforms.  With an explicit ``band`` an AliasingError is
    raised when the measured tail exceeds ``tol``; otherwise the band is
    chosen adaptively.
    """
    if phi.is_identity_exact:
        return f if band is None else f.truncate(band)
    return PeriodicFunction.from_callable(
        lambda x: f(phi(x)), band=band, tol=tol,
        start_band=max(16, f.band + phi.displacement.band))


@dataclass(frozen=True, eq=False)
class FixedPoint:
    x: float
    slope: float  # phi'(x*)

    @property
    def nondegenerate(self) -> bool:
        return abs(self.slope - 1.0) > 1e-9


@dataclass(frozen=True, eq=False)
class CircleDiffeo:
    """Orientation preserving diffeomorphism ``x -> x + p(x)`` of R/Z.

    ``__call__`` returns the lift (not reduced mod 1).
    """

    displacement: PeriodicFunction
    label: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        p = self.displacement
        if not p.is_real:
            raise ValueError("displacement must be real")
        if p.band and self.min_derivative() <= 0.0:
            raise NonMonotoneError(
                f"phi' has minimum {self.min_derivative():.3e} <= 0")

    # constructors -----------------------------------------------------
    @classmethod
    def identity(cls) -> "CircleDiffeo":
        return cls(PeriodicFunction.zero(), "id")

    @classmethod
    def rotation(cls, alpha: float) -> "CircleDiffeo":
        return cls(PeriodicFunction.constant(float(alpha)), f"rot({alpha:g})")

    @classmethod
    def sine(cls, epsilon: float) -> "CircleDiffeo":
        """``x + (eps / 2 pi) sin(2 pi x)``; fixed points 0 and 1/2 for eps != 0."""
        p = PeriodicFunction.sin(1, epsilon / TWO_PI)
        return cls(p, f"sine({epsilon:g})")

    @classmethod
    def from_literal(cls, lit) -> "CircleDiffeo":
        """Parse a config literal.

        Accepted: ``{"type": "sine", "epsilon": e}``,
        ``{"type": "rotation", "alpha": a}``, ``{"type": "identity"}``,
        ``{"type": "displacement", "coeffs": [[k, re, im], ...]}`` or a bare
        list of ``(k, re, im)`` triples.
        """
        if isinstance(lit, (list, tuple)):
            return cls(PeriodicFunction.from_triples(lit))
        kind = lit.get("type", "displacement")
        if kind == "sine":
            return cls.sine(float(lit["epsilon"]))
        if kind == "rotation":
            return cls.rotation(float(lit["alpha"]))
        if kind == "identity":
            return cls.identity()
        if kind == "displacement":
            return cls(PeriodicFunction.from_triples(lit["coeffs"]), lit.get("label", ""))
        raise ValueError(f"unknown diffeomorphism literal type {kind!r}")

    # evaluation -------------------------------------------------------
    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return x + np.real(self.displacement(x))

    @property
    def is_identity_exact(self) -> bool:
        return not np.any(self.displacement.coeffs)

    def _cached(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    def derivative(self) -> PeriodicFunction:
        """``phi' = 1 + p'``."""
        return self._cached("d1", lambda: 1.0 + self.displacement.derivative())

    def second_derivative(self) -> PeriodicFunction:
        return self._cached("d2", lambda: self.displacement.derivative().derivative())

    def min_derivative(self, m: int | None = None) -> float:
        d = self.derivative()
        m = m or max(1024, 8 * grid_size(d.band))
        return float(np.min(np.real(d.samples(m))))

    def derivative_power(self, z: complex) -> PeriodicFunction:
        """``(phi')**z`` for complex ``z`` via the principal logarithm."""
        z = complex(z)
        if z == 0:
            return PeriodicFunction.constant(1.0)
        if z == 1:
            return self.derivative()
        if self.displacement.band == 0:
            return PeriodicFunction.constant(1.0)
        return self._cached(("pow", z), lambda: self.derivative().apply(
            lambda v: np.exp(z * np.log(np.real(v)))))

    def log_derivative(self) -> PeriodicFunction:
        """Principal real ``log phi'``."""
        if self.displacement.band == 0:
            return PeriodicFunction.zero()
        return self._cached("log", lambda: self.derivative().apply(
            lambda v: np.log(np.real(v))))

    def dlog_derivative(self) -> PeriodicFunction:
        """``phi'' / phi'``, the density of ``d log phi'``."""
        if self.displacement.band == 0:
            return PeriodicFunction.zero()
        return self._cached("dlog", lambda: self.log_derivative().derivative())

    # group operations -------------------------------------------------
    def compose(self, other: "CircleDiffeo", tol: float = ALIAS_TOL) -> "CircleDiffeo":
        """``self o other``: x -> self(other(x))."""
        if other.is_identity_exact:
            return self
        if self.is_identity_exact:
            return other
        q, p = other.displacement, self.displacement
        r = PeriodicFunction.from_callable(
            lambda x: np.real(q._eval_grid(x)) + np.real(p(x + np.real(q._eval_grid(x)))),
            tol=tol, start_band=max(16, p.band + q.band))
        return CircleDiffeo(PeriodicFunction(_realify(r.coeffs)),
                            f"{self.label}*{other.label}")

    def invert(self, tol_inv: float = 1e-12, max_iter: int = 60) -> "CircleDiffeo":
        """Inverse diffeomorphism (cached), see :func:`invert`."""
        return self._cached(("inv", tol_inv), lambda: invert(self, tol_inv, max_iter))

    def fixed_points(self, m: int = 4096) -> list[FixedPoint]:
        """Solutions of ``phi(x) = x (mod 1)`` in [0, 1) with ``phi'(x*)``."""
        p = self.displacement
        x = uniform_grid(m)
        vals = np.real(p.samples(m)) if p.band else np.full(m, np.real(p.coeff(0)))
        lo, hi = math.floor(vals.min()), math.ceil(vals.max())
        d = self.derivative()
        out: list[FixedPoint] = []
        for n in range(lo, hi + 1):
            g = vals - n
            if np.all(np.abs(g) < 1e-14):
                raise ValueError("fixed point set is not isolated")
            for j in range(m):
                a, b = g[j], g[(j + 1) % m]
                if a == 0.0:
                    out.append(FixedPoint(x[j], float(np.real(d(x[j])))))
                elif a * b < 0:
                    xs = optimize.brentq(lambda t: np.real(p(t)) - n, x[j], x[j] + 1.0 / m,
                                         xtol=1e-15)
                    xs %= 1.0
                    out.append(FixedPoint(xs, float(np.real(d(xs)))))
        out.sort(key=lambda fp: fp.x)
        return out

    def to_literal(self) -> dict:
        c = self.displacement.coeffs
        n = self.displacement.band
        return {"type": "displacement", "label": self.label,
                "coeffs": [[k - n, c[k].real, c[k].imag] for k in range(c.size) if c[k] != 0]}

    def __repr__(self) -> str:
        return f"CircleDiffeo({self.label or 'band=%d' % self.displacement.band})"


def _realify(c: np.ndarray) -> np.ndarray:
    """Project coefficients onto the real-function subspace."""
    return 0.5 * (c + c[::-1].conj())


def invert(phi: CircleDiffeo, tol_inv: float = 1e-12, max_iter: int = 60) -> CircleDiffeo:
    """Inverse of ``phi`` as a band-limited displacement.

    For each grid point ``y`` the equation ``x + p(x) = y`` is solved by
    vectorized bisection on the bracket ``[y - max p, y - min p]`` followed
    by Newton steps; the samples ``q(y) = x - y`` are fitted by FFT with an
    adaptively doubled band.  The composition defect is then checked on a
    finer grid.
    """
    p = phi.displacement
    if p.band == 0:
        return CircleDiffeo(-p, f"{phi.label}^-1")
    if phi.min_derivative() <= 0:
        raise NonMonotoneError("cannot invert a non-monotone map")
    dp = phi.derivative()
    pmax = float(np.max(np.real(p.samples(max(256, grid_size(p.band))))))
    pmin = float(np.min(np.real(p.samples(max(256, grid_size(p.band))))))
    pad = 1e-9 + 1e-6 * (pmax - pmin)

    def solve(y: np.ndarray) -> np.ndarray:
        lo = y - pmax - pad
        hi = y - pmin + pad
        for _ in range(30):
            mid = 0.5 * (lo + hi)
            up = mid + np.real(p(mid)) > y
            hi = np.where(up, mid, hi)
            lo = np.where(up, lo, mid)
        x = 0.5 * (lo + hi)
        for _ in range(max_iter):
            r = x + np.real(p(x)) - y
            if np.max(np.abs(r)) < 1e-15:
                break
            x = x - r / np.real(dp(x))
        else:
            r = x + np.real(p(x)) - y
            if np.max(np.abs(r)) > 10 * tol_inv:
                raise ConvergenceError(
                    f"Newton residual {np.max(np.abs(r)):.3e} after {max_iter} steps")
        return x - y

    # roundoff of x - y near y ~ 1 sets the absolute floor
    q = PeriodicFunction.from_callable(solve, tol=min(ALIAS_TOL, tol_inv),
                                       start_band=max(16, 2 * p.band), atol=1e-15)
    psi = CircleDiffeo(PeriodicFunction(_realify(q.coeffs)), f"{phi.label}^-1")
    y = uniform_grid(4 * grid_size(q.band))
    defect = float(np.max(np.abs(phi(psi(y)) - y)))
    if defect > tol_inv:
        raise ConvergenceError(f"inverse composition defect {defect:.3e} > {tol_inv:.1e}")
    psi._cache[("inv", tol_inv)] = phi
    return psi


def composition_defect(phi: CircleDiffeo, psi: CircleDiffeo, m: int = 2048) -> float:
    """``max_x |phi(psi(x)) - x|`` on a uniform grid."""
    x = uniform_grid(m)
    return float(np.max(np.abs(phi(psi(x)) - x)))
