"""Residue functionals from heat-trace fits.

For an order-zero operator ``X`` on the circle the zeta function
``Tr(X |D|^{-1-s})`` is recovered from the heat curve through

    |D|^{-(s+1)} = Gamma((s+1)/2)^{-1} int_0^inf t^{(s-1)/2} e^{-t D^2} dt.

If ``Tr(X e^{-t D^2}) ~ sum_j a_{j/2} t^{j/2}`` (``j >= -1``) as ``t -> 0``, only
the ``t^{-1/2}`` term produces a pole at ``s = 0``, with residue
``(2/sqrt(pi)) a_{-1/2}``.  The curve is sampled on a log grid and
``sqrt(t) Tr(X e^{-t D^2})`` is fitted by a polynomial in ``sqrt(t)``.

Normalization
-------------
With eigenvalues ``2 pi k`` the raw residue of ``Tr(M_f |D|^{-1-s})`` is
``int f / pi``.  The reported value is multiplied by ``normalization``
(default ``2 pi``) so that the functional equals the cosphere integral of
the principal symbol, ``2 int f`` for ``M_f |D|^{-1}``, independent of
the length scale of the circle.  Pass ``normalization=1`` for the raw
spectral residue.

Window
------
A diffeomorphism ``chi`` with fixed points contributes terms like
``exp(-c^2 / 4t)``, ``c = max |chi(x) - x|``, which look like noise
until ``t << c^2``.  The fit therefore starts at ``t_max`` and halves the
window until the relative fit residual drops below ``residual_bound``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .circle_kernel import CircleDiffeo, PeriodicFunction
from .crossed_product import CrossedProductElement, GroupWord
from .errors import IllConditionedFit, TruncationError, UnreliableResidue
from .operator_rep import TruncatedOperator, dirac, phase, pullback, represent, t_min

RESIDUE_NORMALIZATION = 2 * math.pi


@dataclass
class HeatFitConfig:
    """Sampling grid and fit basis for heat-curve residues.

    Parameters
    ----------
    t_min : float or None
        Lower end of the grid; ``None`` uses the truncation limit of D.
    t_max : float
        Initial upper end; shrunk adaptively (see ``shrink``).
    count : int
        Number of log-spaced samples.
    j_max : int
        Basis ``t^{-1/2}, t^0, ..., t^{(j_max - 1)/2}`` has ``j_max + 1`` terms.
    condition_bound, residual_bound : float
        Fit acceptance thresholds.
    shrink : float
        Factor applied to ``t_max`` while the residual is too large.
    min_span : float
        Smallest allowed ``t_max / t_min``.
    """

    t_min: float | None = None
    t_max: float = 2e-3
    count: int = 24
    j_max: int = 4
    condition_bound: float = 1e8
    residual_bound: float = 1e-6
    shrink: float = 0.5
    min_span: float = 2.0

    @property
    def basis_powers(self) -> list[float]:
        return [(j - 1) / 2 for j in range(self.j_max + 1)]

    def grid(self, N: int, t_max: float | None = None) -> np.ndarray:
        lo = t_min(N) if self.t_min is None else self.t_min
        hi = self.t_max if t_max is None else t_max
        if lo < t_min(N) * (1 - 1e-12):
            raise TruncationError(f"t_min = {lo:.3e} below truncation limit {t_min(N):.3e}")
        if not hi > lo:
            raise ValueError("t grid must be strictly increasing")
        return np.geomspace(lo, hi, self.count)


@dataclass
class ResidueResult:
    value: complex
    fit_residual: float
    coefficients: dict[float, complex] = field(default_factory=dict)
    t_max: float = float("nan")
    condition: float = float("nan")
    reliable: bool = True

    def to_json(self) -> str:
        return json.dumps({
            "value_re": self.value.real, "value_im": self.value.imag,
            "fit_residual": self.fit_residual,
            "coefficients": [{"power": p, "value": [c.real, c.imag]}
                             for p, c in sorted(self.coefficients.items())],
        })

    @classmethod
    def from_json(cls, text: str) -> "ResidueResult":
        d = json.loads(text)
        coeffs = {row["power"]: complex(*row["value"]) for row in d["coefficients"]}
        return cls(complex(d["value_re"], d["value_im"]), d["fit_residual"], coeffs)


def _eigs(D: TruncatedOperator, zero_patch: float | None = None) -> np.ndarray:
    lam = np.diag(D.matrix)
    if np.any(np.abs(D.matrix - np.diag(lam)) > 0):
        raise ValueError("D must be diagonal")
    lam = np.real(lam).copy()
    if zero_patch is not None:
        lam[lam == 0] = zero_patch
    return lam ** 2


def heat_trace_curve(prefactor: TruncatedOperator, D: TruncatedOperator | None = None,
                     cfg: HeatFitConfig | None = None, t: np.ndarray | None = None,
                     zero_patch: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Sample ``t -> Tr(prefactor e^{-t D^2})``.

    Returns ``(t, values)``.  Only the diagonal of the prefactor enters.
    ``zero_patch`` replaces the zero eigenvalue of D (finite-rank change).
    """
    cfg = cfg or HeatFitConfig()
    D = D if D is not None else dirac(prefactor.N)
    lam2 = _eigs(D, zero_patch)
    t = cfg.grid(D.N) if t is None else np.asarray(t, dtype=float)
    if np.min(t) * np.max(lam2) < -math.log(1e-16) * (1 - 1e-12):
        raise TruncationError("heat grid reaches below the truncation limit")
    d = prefactor.diagonal()
    return t, np.exp(-np.outer(t, lam2)) @ d


# curves below this fraction of the absolute trace sum are roundoff
ROUNDOFF_FLOOR = 1e-8


def _fit(t: np.ndarray, c: np.ndarray, j_max: int, floor: float = 0.0):
    u = np.sqrt(t)
    y = c * u
    scale = u.max()
    V = np.vander(u / scale, j_max + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(V, y, rcond=None)
    cond = float(np.linalg.cond(V))
    ref = max(float(np.max(np.abs(y))), floor)
    resid = float(np.sqrt(np.mean(np.abs(V @ coef - y) ** 2)) / ref) if ref > 1e-300 else 0.0
    coef = coef / scale ** np.arange(j_max + 1)
    return coef, cond, resid


def _operator_part(P: TruncatedOperator, chi, group) -> TruncatedOperator:
    if chi is None:
        return P
    if isinstance(chi, GroupWord):
        if chi.is_identity:
            return P
        if group is None:
            raise ValueError("a GroupWord chi needs its group")
        chi = group.realize(chi)
    if not isinstance(chi, CircleDiffeo):
        raise TypeError("chi must be a GroupWord, CircleDiffeo or None")
    V = pullback(chi, P.N)
    # only the diagonal of V_chi^-1 P is needed
    diag = np.einsum("ij,ji->i", V.matrix, P.matrix)
    return TruncatedOperator(np.diag(diag), P.N, "V^-1 P")


def residue_functional(P: TruncatedOperator, chi=None, D: TruncatedOperator | None = None,
                       cfg: HeatFitConfig | None = None, *, group=None,
                       normalization: float = RESIDUE_NORMALIZATION,
                       zero_patch: float | None = None, strict: bool = True) -> ResidueResult:
    """Residue ``Res_{s=0} Tr(V_chi^-1 P |D|^{-1-s})``, scaled by ``normalization``.

    Parameters
    ----------
    P : TruncatedOperator
        Order-zero operator part; the ``|D|^{-1}`` factor is implicit.
    chi : GroupWord, CircleDiffeo or None
        Diffeomorphism whose ``V_chi^-1`` is applied on the left.
    strict : bool
        Raise ``UnreliableResidue`` when no window meets ``residual_bound``;
        otherwise return the best fit flagged ``reliable=False``.
    """
    cfg = cfg or HeatFitConfig()
    D = D if D is not None else dirac(P.N)
    X = _operator_part(P, chi, group)
    if not np.any(X.diagonal()):
        return ResidueResult(0j, 0.0, {p: 0j for p in cfg.basis_powers})
    absX = TruncatedOperator(np.diag(np.abs(X.diagonal())), X.N)
    lo = t_min(D.N) if cfg.t_min is None else cfg.t_min
    t_hi = cfg.t_max
    best = None
    while t_hi >= cfg.min_span * lo:
        t, c = heat_trace_curve(X, D, cfg, cfg.grid(D.N, t_hi), zero_patch)
        _, mass = heat_trace_curve(absX, D, cfg, t, zero_patch)
        floor = ROUNDOFF_FLOOR * float(np.max(np.real(mass) * np.sqrt(t)))
        coef, cond, resid = _fit(t, c, cfg.j_max, floor)
        if cond > cfg.condition_bound:
            break
        if best is None or resid < best[2]:
            best = (coef, cond, resid, t_hi)
        if resid <= cfg.residual_bound:
            break
        t_hi *= cfg.shrink
    if best is None:
        raise IllConditionedFit(f"fit condition number exceeds {cfg.condition_bound:.1e}")
    coef, cond, resid, t_hi = best
    value = complex(normalization * 2 / math.sqrt(math.pi) * coef[0])
    res = ResidueResult(value, resid, dict(zip(cfg.basis_powers, map(complex, coef))),
                        t_hi, cond, resid <= cfg.residual_bound)
    if strict and not res.reliable:
        raise UnreliableResidue(f"fit residual {resid:.2e} > {cfg.residual_bound:.1e}")
    return res


def dixmier_surrogate(T: TruncatedOperator, a: CrossedProductElement,
                      D: TruncatedOperator | None = None, cfg: HeatFitConfig | None = None,
                      *, order: str = "right", signed: bool = False,
                      normalization: float = RESIDUE_NORMALIZATION) -> complex:
    """Residue stand-in for ``Tr_omega(T pi(a) |D|^{-1})``.

    ``order="left"`` evaluates ``Tr_omega(pi(a) T |D|^{-1})``.  With
    ``signed`` the weight is ``D^{-1}`` instead of ``|D|^{-1}``.
    """
    if order not in ("right", "left"):
        raise ValueError("order must be 'right' or 'left'")
    pa = represent(a, T.N)
    X = T @ pa if order == "right" else pa @ T
    if signed:
        X = X @ phase(T.N)
    return residue_functional(X, None, D, cfg, normalization=normalization).value


def wodzicki_closed_form(f: PeriodicFunction) -> complex:
    """Wodzicki residue of ``M_f |D|^{-1}``: symbol summed over both cosphere points."""
    return 2 * f.quadrature()
