"""Command-line entry point.

Subcommands::

    verify-matrix   finite-dimensional triple identities
    verify-circle   crossed-product and residue checks, plus convergence CSVs
    compute EXPR    evaluate one expression from JSON arguments
    residue         residue functional of M_F |D|^-1, optionally twisted by chi

Exit status: 0 when every emitted row passes, 1 when some row fails,
2 for configuration errors, 3 for an unknown expression, 4 for a numerical
failure (aliasing, ill-conditioned fit, ...).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import matrix_triples as mt
from .circle_cocycles import (MonomialPair, pair_from_dict, psi1_closed, psi1_spectral, tau,
                              psi1_identity_check)
from .circle_kernel import CircleDiffeo, PeriodicFunction
from .errors import ConfigError, TwistedTriplesError, UnknownExpressionError
from .operator_rep import multiplication
from .report import (CheckReport, Timer, load_config, write_convergence_csv, write_meta,
                     write_reports)
from .spectral_traces import residue_functional, wodzicki_closed_form
from .suites import heat_config, run_circle_suite, run_matrix_suite

EXPRESSIONS = ("psi1_spectral", "psi1_closed", "tau", "residue", "index_pair", "chern_phi")


def function_from_literal(lit) -> PeriodicFunction:
    """Number, ``[[k, re, im], ...]``, ``"sin"``, ``"cos(2)"`` or ``{"sin": k, "amp": a}``."""
    if isinstance(lit, (int, float)):
        return PeriodicFunction.constant(float(lit))
    if isinstance(lit, list):
        return PeriodicFunction.from_triples(lit)
    if isinstance(lit, str):
        name, _, rest = lit.partition("(")
        k = int(rest.rstrip(")")) if rest else 1
        lit = {name.strip(): k}
    if isinstance(lit, dict):
        amp = float(lit.get("amp", 1.0))
        if "sin" in lit:
            return PeriodicFunction.sin(int(lit["sin"]), amp)
        if "cos" in lit:
            return PeriodicFunction.cos(int(lit["cos"]), amp)
        if "const" in lit:
            return PeriodicFunction.constant(float(lit["const"]))
    raise ConfigError(f"cannot parse function literal {lit!r}")


def _diffeo(lit) -> CircleDiffeo:
    if lit is None or lit == "identity":
        return CircleDiffeo.identity()
    try:
        return CircleDiffeo.from_literal(lit)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad diffeomorphism literal {lit!r}: {exc}") from exc


def _pair(args: dict) -> MonomialPair:
    data = dict(args)
    for key in ("f", "g"):
        if key not in data:
            raise ConfigError(f"missing argument {key!r}")
        f = function_from_literal(data[key])
        data[key] = [[k - f.band, c.real, c.imag] for k, c in enumerate(f.coeffs)]
    phi = data.get("phi", "identity")
    data["phi"] = {"type": "identity"} if phi in (None, "identity") else phi
    try:
        return pair_from_dict(data)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad pair arguments: {exc}") from exc


def _triple(args: dict) -> mt.MatrixTwistedTriple:
    src = args.get("triple", "example")
    if src == "example":
        return mt.example_triple()
    if isinstance(src, dict):
        return mt.random_triple(int(src["m"]), np.random.default_rng(int(src.get("seed", 0))),
                                float(src.get("h_scale", 0.3)))
    return mt.MatrixTwistedTriple.load(src)


def _row(check_id, ref, lhs, rhs, err, tol, params, ms, seed=None) -> CheckReport:
    return CheckReport(check_id, ref, lhs, rhs, float(err), float(tol), params, ms, seed)


def evaluate(expr: str, args: dict, cfg: dict, tol_scale: float = 1.0
             ) -> tuple[object, CheckReport | None]:
    """Value of ``expr`` and, when an oracle exists, its report row."""
    if expr not in EXPRESSIONS:
        raise UnknownExpressionError(f"unknown expression {expr!r}; choose from {EXPRESSIONS}")
    tols = cfg["tolerances"]
    N = int(args.get("N", cfg["n_trunc"]))
    timer = Timer()
    params = {"expr": expr, "args": args}
    if expr == "tau":
        pair = _pair(args)
        with timer.run():
            v = tau(pair)
        oracle = (pair.f.product(pair.g.compose(pair.group.realize(pair.phi)).derivative())
                  .quadrature() if pair.is_localized else 0j)
        return v, _row("compute.tau", "transverse fundamental cocycle", v, oracle,
                       abs(v - oracle), tols["identity_closed"] * tol_scale, params, timer.ms)
    if expr == "psi1_closed":
        pair = _pair(args)
        with timer.run():
            v = psi1_closed(pair)
        rhs = psi1_identity_check(pair, None).rhs
        return v, _row("compute.psi1_closed", "Psi_1 = -2i tau + L_delta tau", v, rhs,
                       abs(v - rhs), tols["identity_closed"] * tol_scale, params, timer.ms)
    if expr == "psi1_spectral":
        pair = _pair(args)
        with timer.run():
            v = psi1_spectral(pair, N, heat_config(cfg), strict=pair.is_localized)
        if pair.is_localized:
            ref = psi1_closed(pair)
            return v, _row("compute.psi1_spectral", "Psi_1 residue vs closed form", v, ref,
                           abs(v - ref), tols["identity_spectral"] * tol_scale, params, timer.ms)
        return v, None
    if expr == "residue":
        return _residue(args, cfg, tol_scale, "compute.residue")
    T = _triple(args)
    if expr == "index_pair":
        plus = args.get("plus", [0])
        minus = args.get("minus", [])
        n = int(args.get("n", 0))
        p = mt.diagonal_projection(T.m, plus, minus)
        with timer.run():
            r = mt.index_pair(T, mt.IdempotentData.twisted(T, p), n, check=False)
        value = {"index_plus": r.index_plus, "index_minus": r.index_minus,
                 "phi_plus": [r.phi_plus.real, r.phi_plus.imag],
                 "phi_minus": [r.phi_minus.real, r.phi_minus.imag]}
        err = max(r.residual, abs(r.index_plus + r.index_minus))
        return value, _row("compute.index_pair", "Index^pm[e] = Phi^pm(e, .., e)",
                           r.phi_plus, float(r.index_plus), err,
                           tols["matrix_index"] * tol_scale, params, timer.ms)
    # chern_phi
    n = int(args.get("n", 2))
    rng = np.random.default_rng(int(args.get("seed", cfg["seed"])))
    tup = [mt.random_even(T.m, rng) for _ in range(n + 1)]
    with timer.run():
        v = mt.chern_phi(T, n, tup)
        p, q = mt.phi_pm(T, n, tup)
    return v, _row("compute.chern_phi", "Phi = Phi^+ - Phi^-", v, p - q, abs(v - (p - q)),
                   tols["matrix_split"] * tol_scale, params, timer.ms,
                   int(args.get("seed", cfg["seed"])))


def _residue(args: dict, cfg: dict, tol_scale: float, check_id: str):
    N = int(args.get("N", cfg["n_trunc"]))
    F = function_from_literal(args.get("f", 1.0))
    chi = _diffeo(args.get("chi"))
    timer = Timer()
    with timer.run():
        r = residue_functional(multiplication(F, N), None if chi.is_identity_exact else chi,
                               cfg=heat_config(cfg), strict=False)
    params = {"N": N, "f": args.get("f", 1.0), "chi": args.get("chi"),
              "fit_residual": r.fit_residual, "t_max": r.t_max}
    tols = cfg["tolerances"]
    if chi.is_identity_exact:
        ref = wodzicki_closed_form(F)
        err = abs(r.value - ref) / max(abs(ref), 1e-300) if ref else abs(r.value)
        return r.value, _row(check_id, "residue of M_f |D|^-1 equals 2 int f", r.value, ref,
                             err, tols["zeta_rel"] * tol_scale, params, timer.ms)
    if chi.fixed_points() and all(p.nondegenerate for p in chi.fixed_points()):
        err = abs(r.value) / F.sup_norm()
        return r.value, _row(check_id, "residue vanishes at nondegenerate fixed points",
                             r.value, 0.0, err, tols["vanishing_rel"] * tol_scale, params,
                             timer.ms)
    return r.value, None


def _fmt(v) -> str:
    if isinstance(v, complex):
        return f"{v.real:.15g}{v.imag:+.15g}j"
    return json.dumps(v)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file")
    common.add_argument("--seed", type=int, help="base random seed")
    common.add_argument("--out", type=Path, default=Path("report.jsonl"),
                        help="JSON-lines report (appended)")
    common.add_argument("--n-trunc", type=int, help="Fourier truncation N")
    common.add_argument("--tol-scale", type=float, default=1.0,
                        help="multiply every tolerance")
    p = argparse.ArgumentParser(prog="twisted-triples", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("verify-matrix", parents=[common], help="matrix triple suite")
    sub.add_parser("verify-circle", parents=[common], help="circle suite")
    c = sub.add_parser("compute", parents=[common], help="evaluate one expression")
    c.add_argument("expr", help="one of " + ", ".join(EXPRESSIONS))
    c.add_argument("--args", default="{}", help="JSON object of arguments")
    r = sub.add_parser("residue", parents=[common], help="residue functional")
    r.add_argument("--f", default="1", help="function literal (JSON)")
    r.add_argument("--chi", default=None, help="diffeomorphism literal (JSON)")
    return p


def _json_arg(text: str | None):
    if text is None:
        return None
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        overrides = {}
        if ns.seed is not None:
            overrides["seed"] = ns.seed
        if ns.n_trunc is not None:
            overrides["n_trunc"] = ns.n_trunc
        cfg = load_config(ns.config, overrides)
        if ns.tol_scale < 0:
            raise ConfigError("--tol-scale must be >= 0")
        rows: list[CheckReport] = []
        if ns.command == "verify-matrix":
            rows = run_matrix_suite(cfg, ns.tol_scale)
        elif ns.command == "verify-circle":
            rows, ladders = run_circle_suite(cfg, ns.tol_scale)
            for name, ladder in ladders.items():
                path = Path(str(ns.out) + f".{name}.csv")
                write_convergence_csv(path, ladder)
                print(f"wrote {path}")
        else:
            if ns.command == "compute":
                args = _json_arg(ns.args)
                if not isinstance(args, dict):
                    raise ConfigError("--args must be a JSON object")
                value, row = evaluate(ns.expr, args, cfg, ns.tol_scale)
            else:
                args = {"f": _json_arg(ns.f), "chi": _json_arg(ns.chi)}
                value, row = _residue(args, cfg, ns.tol_scale, "residue")
            print(_fmt(value))
            rows = [row] if row is not None else []
        write_meta(ns.out, ns.command, {**cfg, "tol_scale": ns.tol_scale})
        if rows:
            write_reports(rows, ns.out)
        for row in sorted(rows, key=lambda r: r.check_id):
            flag = "PASS" if row.passed else "FAIL"
            print(f"{flag} {row.check_id}: abs_err={row.abs_err:.3e} tol={row.tol:.1e}")
        return 0 if all(r.passed for r in rows) else 1
    except UnknownExpressionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TwistedTriplesError as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
