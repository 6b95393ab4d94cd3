"""Check batteries behind ``verify-matrix`` and ``verify-circle``."""
from __future__ import annotations

from typing import Callable

import numpy as np

from . import matrix_triples as mt
from .circle_cocycles import (MonomialPair, cartan_residual, psi1_spectral,
                              random_localized_pair, tau_cochain, psi1_identity_check)
from .circle_kernel import CircleDiffeo, PeriodicFunction
from .cochain_calculus import cyclic_lambda, hochschild_b
from .crossed_product import (CrossedProductAlgebra, CrossedProductElement, DiffeoGroup,
                              GroupWord, multiply, sigma_inverse, state)
from .operator_rep import commutator_sup, multiplication, norm_ladder, represent
from .report import CheckReport, Timer
from .spectral_traces import (HeatFitConfig, dixmier_surrogate, residue_functional,
                              wodzicki_closed_form)


class _Suite:
    def __init__(self, cfg: dict, tol_scale: float = 1.0):
        self.cfg = cfg
        self.seed = int(cfg["seed"])
        self.tol_scale = float(tol_scale)
        self.rows: list[CheckReport] = []
        self._k = 0

    def tol(self, key: str) -> float:
        return self.cfg["tolerances"][key] * self.tol_scale

    def rng(self) -> np.random.Generator:
        self._k += 1
        return np.random.default_rng([self.seed, self._k])

    def add(self, check_id: str, ref: str, fn: Callable[[np.random.Generator], tuple],
            tol: float, params: dict | None = None) -> CheckReport:
        """``fn(rng) -> (lhs, rhs, abs_err)``."""
        rng = self.rng()
        timer = Timer()
        with timer.run():
            lhs, rhs, err = fn(rng)
        row = CheckReport(check_id, ref, lhs, rhs, float(err), tol, params or {},
                          timer.ms, self.seed)
        self.rows.append(row)
        return row


# matrix suite -------------------------------------------------------------

def _tuple(m, rng, k):
    return [mt.random_even(m, rng) for _ in range(k)]


def run_matrix_suite(cfg: dict, tol_scale: float = 1.0) -> list[CheckReport]:
    S = _Suite(cfg, tol_scale)
    mc = cfg["matrix"]
    ms = [d // 2 for d in mc["dims"]]
    trials = int(mc["trials"])
    hs = float(mc["h_scale"])

    def triples(rng, count=trials):
        for i in range(count):
            yield mt.random_triple(ms[i % len(ms)], rng, hs)

    def grading(rng):
        err = 0.0
        for T in triples(rng):
            err = max(err, np.max(np.abs(T.D @ T.gamma + T.gamma @ T.D)))
        return 0.0, 0.0, err
    S.add("matrix.grading.anticommute", "grading anticommutes with D", grading,
          S.tol("matrix_grading"))

    def unitarity(rng):
        err = 0.0
        for T in triples(rng):
            a = mt.random_even(T.m, rng)
            err = max(err, np.max(np.abs(T.sigma(a.conj().T) - T.sigma(a, -1).conj().T)))
        return 0.0, 0.0, err
    S.add("matrix.sigma.unitarity", "sigma(a*) = (sigma^-1(a))*", unitarity,
          S.tol("matrix_sigma_adjoint"))

    def factorization(rng):
        err = 0.0
        for i in range(trials):
            m = ms[i % len(ms)]
            T0 = mt.random_triple(m, rng, 0.0)
            h = hs * mt.random_even(m, rng, hermitian=True)
            T = mt.perturb(mt.untwisted_triple(T0.D_plus), h)
            a = mt.random_even(m, rng)
            E, Ei = T.sigma_power(0.5)
            b = E @ a @ Ei
            rhs = E @ (T0.D @ b - b @ T0.D) @ E
            err = max(err, np.max(np.abs(mt.twisted_commutator(T, a) - rhs)))
        return 0.0, 0.0, err
    S.add("matrix.perturb.factorization", "d'_sigma(a) = e^h [D, e^h a e^-h] e^h",
          factorization, S.tol("matrix_factorization"))

    def leibniz(rng):
        err = 0.0
        for T in triples(rng):
            a, b = _tuple(T.m, rng, 2)
            lhs = mt.twisted_commutator(T, a @ b)
            rhs = mt.twisted_commutator(T, a) @ b + T.sigma(a) @ mt.twisted_commutator(T, b)
            err = max(err, np.max(np.abs(lhs - rhs)))
        return 0.0, 0.0, err
    S.add("matrix.bimodule.leibniz", "d_sigma(ab) = d_sigma(a) b + sigma(a) d_sigma(b)",
          leibniz, S.tol("matrix_leibniz"))

    def span(rng):
        T = mt.random_triple(2, rng, hs)
        basis = _tuple(2, rng, 3)
        basis = [np.eye(4, dtype=complex)] + basis + [T.sigma(x) for x in basis]
        base = mt.potential_span_rank(T, basis)
        a, b, c, d = (basis[i] for i in (1, 2, 3, 4))
        omega = a @ mt.twisted_commutator(T, b)
        grown = mt.potential_span_rank(T, basis, [mt.bimodule_action(T, c, omega, d)])
        return float(grown), float(base), float(grown - base)
    S.add("matrix.bimodule.span", "sigma(a) omega b stays in the span of potentials", span,
          0.5 * S.tol_scale, {"note": "rank growth must be 0"})

    for n in mc["degrees"]:
        def cocycle(rng, n=n):
            eb = el = 0.0
            for T in triples(rng):
                c = mt.chern_cochain(T, n)
                args = _tuple(T.m, rng, n + 2)
                eb = max(eb, abs(hochschild_b(c)(*args)))
                el = max(el, abs(cyclic_lambda(c)(*args[:-1]) - c(*args[:-1])))
            return eb, el, max(eb, el)
        S.add(f"matrix.chern.cocycle.n{n}", "Chern character is a cyclic cocycle", cocycle,
              S.tol("matrix_cocycle"), {"n": n, "trials": trials})

    def conjugation(rng):
        err = 0.0
        for i in range(trials):
            m = ms[i % len(ms)]
            n = mc["degrees"][i % len(mc["degrees"])]
            T0 = mt.random_triple(m, rng, 0.0)
            h = hs * mt.random_even(m, rng, hermitian=True)
            T = mt.perturb(T0, h)
            args = _tuple(m, rng, n + 1)
            E, Ei = T.sigma_power(0.5)
            bs = [E @ a @ Ei for a in args]
            err = max(err, abs(mt.chern_phi(T, n, args) - mt.chern_phi(T0, n, bs)))
        return 0.0, 0.0, err
    S.add("matrix.chern.conjugation", "Phi_{D',sigma}(a) = Phi_{D,id}(e^h a e^-h)",
          conjugation, S.tol("matrix_conjugation"), {"trials": trials})

    def split(rng):
        err = 0.0
        for i, T in enumerate(triples(rng)):
            n = mc["degrees"][i % len(mc["degrees"])]
            args = _tuple(T.m, rng, n + 1)
            p, q = mt.phi_pm(T, n, args)
            err = max(err, abs(mt.chern_phi(T, n, args) - (p - q)))
        return 0.0, 0.0, err
    S.add("matrix.halfchar.split", "Phi = Phi^+ - Phi^-", split, S.tol("matrix_split"))

    idem = []
    stats = {"anti": 0, "rank": 0}

    def make_idempotents(rng):
        out = []
        count = int(mc["idempotents"])
        for i in range(count):
            m = ms[i % len(ms)]
            T = mt.random_triple(m, rng, hs)
            rp = int(rng.integers(0, m + 1))
            rm = int(rng.integers(0, m + 1))
            if rp == rm:
                rp = (rm + 1) % (m + 1)
            p = mt.diagonal_projection(m, range(rp), range(rm))
            U = np.zeros((2 * m, 2 * m), dtype=complex)
            U[:m, :m] = mt.random_unitary(m, rng)
            U[m:, m:] = mt.random_unitary(m, rng)
            p = U @ p @ U.conj().T
            out.append((T, mt.IdempotentData.twisted(T, p), rp - rm))
        return out

    def index(rng):
        idem.extend(make_idempotents(rng))
        err = 0.0
        worst_anti = 0
        ranks_ok = 0
        for T, e, expect in idem:
            for n in [0] + list(mc["degrees"]):
                r = mt.index_pair(T, e, n, check=False)
                err = max(err, r.residual)
                worst_anti = max(worst_anti, abs(r.index_plus + r.index_minus))
                ranks_ok = max(ranks_ok, abs(r.index_plus - expect))
        stats["anti"], stats["rank"] = worst_anti, ranks_ok
        return 0.0, 0.0, err
    S.add("matrix.index.halfchar", "Index^pm[e] = Phi^pm(e, .., e)", index,
          S.tol("matrix_index"), {"idempotents": int(mc["idempotents"])})
    S.add("matrix.index.antisymmetry", "Index^+ = -Index^- when e* = sigma(e)",
          lambda rng: (float(stats["anti"]), 0.0, float(stats["anti"])), 0.0)
    S.add("matrix.index.rank_count", "Index^+ = rank e_+ - rank e_-",
          lambda rng: (float(stats["rank"]), 0.0, float(stats["rank"])), 0.0)

    def sig_adj(rng):
        err = max(e.sigma_adjoint_defect(T) for T, e, _ in idem)
        return 0.0, 0.0, err
    S.add("matrix.idempotent.sigma_adjoint", "e* = sigma(e) for e = e^-h p e^h", sig_adj,
          S.tol("matrix_sigma_adjoint"))

    def homotopy_index(rng):
        dev = 0
        for T, e, _ in idem[:20]:
            path = mt.homotopy_indices(T, e, 0)
            vals = [(r.index_plus, r.index_minus) for r in path]
            dev = max(dev, max(abs(a - vals[0][0]) + abs(b - vals[0][1]) for a, b in vals))
        return float(dev), 0.0, float(dev)
    S.add("matrix.index.homotopy", "indices constant along sigma_it(e)", homotopy_index, 0.0,
          {"points": 11})

    for which in (0, 1):
        def endpoint(rng, which=which):
            err = 0.0
            for i, T in enumerate(triples(rng, 20)):
                n = mc["degrees"][i % len(mc["degrees"])]
                r = mt.adjoint_chern_endpoints(T, _tuple(T.m, rng, n + 1))
                err = max(err, r.residuals[which])
            return 0.0, 0.0, err
        ref = "Phi_0 = (Phi^+)*" if which == 0 else "Phi_1 = -Phi^-"
        S.add(f"matrix.endpoint.pi{which}", ref, endpoint, S.tol("matrix_endpoints"))

    def phase(rng):
        err = 0.0
        for T in triples(rng, 20):
            err = max(err, mt.untwist_phase(T, _tuple(T.m, rng, 3)).max_residual)
        return 0.0, 0.0, err
    S.add("matrix.phase.commutator", "[F, a] through twisted commutators", phase,
          S.tol("matrix_phase"))

    def homotopy_cocycle(rng):
        err = 0.0
        for i, T in enumerate(triples(rng, 20)):
            n = mc["degrees"][i % len(mc["degrees"])]
            args = _tuple(T.m, rng, n + 2)
            for t in mc["homotopy_t"]:
                c = mt.chern_cochain(T, n, "t", t)
                err = max(err, abs(hochschild_b(c)(*args)),
                          abs(cyclic_lambda(c)(*args[:-1]) - c(*args[:-1])))
        return 0.0, 0.0, err
    S.add("matrix.homotopy.cocycle", "Phi_t is a cyclic cocycle", homotopy_cocycle,
          S.tol("matrix_cocycle"), {"t": mc["homotopy_t"]})

    def endpoints_t(rng):
        e0 = e1 = 0.0
        for i, T in enumerate(triples(rng, 20)):
            n = mc["degrees"][i % len(mc["degrees"])]
            args = _tuple(T.m, rng, n + 1)
            e0 = max(e0, abs(mt.homotopy_phi_t(T, 0.0, n, args) - mt.chern_phi(T, n, args)))
            e1 = max(e1, abs(mt.homotopy_phi_t(T, 1.0, n, args)
                             - mt.phi_F_endpoint_sign(n) * mt.phi_F(T, n, args)))
        return e0, e1, max(e0, e1)
    S.add("matrix.homotopy.endpoints", "Phi_0 = Phi and Phi_1 = (-1)^(n/2) Phi_F",
          endpoints_t, S.tol("matrix_endpoints"))
    return S.rows


# circle suite -------------------------------------------------------------

def heat_config(cfg: dict) -> HeatFitConfig:
    return HeatFitConfig(**cfg["heat_fit"])


def _rand_fn(rng, band):
    scale = 1.0 / (1.0 + np.arange(band + 1))
    return PeriodicFunction.from_triples(
        [(k, *(rng.normal(size=2) * scale[abs(k)])) for k in range(-band, band + 1)])


def run_circle_suite(cfg: dict, tol_scale: float = 1.0) -> tuple[list[CheckReport], dict]:
    """Rows plus convergence ladders ``{name: [(N, value, delta), ...]}``."""
    S = _Suite(cfg, tol_scale)
    cc = cfg["circle"]
    N = int(cfg["n_trunc"])
    band = int(cfg["band"])
    hfc = heat_config(cfg)
    ladders: dict[str, list] = {}
    eps = float(cc["boundedness_epsilon"])
    group = DiffeoGroup({"s": CircleDiffeo.sine(eps), "r": CircleDiffeo.rotation(0.1234)})
    g = PeriodicFunction.from_triples(cc["boundedness_g"])
    a = CrossedProductElement.monomial(group, g, "s")
    Ns = [int(n) for n in cfg["n_ladder"]]

    def monotone_err(rows):
        deltas = [d for _, _, d in rows[1:]]
        return max([0.0] + [d2 - d1 for d1, d2 in zip(deltas, deltas[1:])])

    def boundedness(rng):
        rows = norm_ladder(a, Ns)
        ladders["boundedness"] = rows
        return rows[-1][2], 0.0, monotone_err(rows)
    S.add("circle.boundedness.cauchy", "twisted commutators are bounded (Cauchy in N)",
          boundedness, 0.0, {"N": Ns, "epsilon": eps})

    def boundedness_sup(rng):
        v = ladders["boundedness"][-1][1]
        sup = commutator_sup(a)
        return v, sup, abs(v - sup) / sup
    S.add("circle.boundedness.sup_match", "norm equals sup |(1/i)(g phi'^1/2)' phi'^-1/2|",
          boundedness_sup, S.tol("boundedness_sup_rel"), {"N": Ns[-1], "relative": True})

    def lipschitz(rng):
        rows = norm_ladder(a, Ns, absolute=True)
        ladders["lipschitz"] = rows
        return rows[-1][2], 0.0, monotone_err(rows)
    S.add("circle.lipschitz.cauchy", "|D|-twisted commutators are bounded (Cauchy in N)",
          lipschitz, 0.0, {"N": Ns})

    alg = CrossedProductAlgebra(group)

    def sigma_trace(rng):
        err = 0.0
        for _ in range(10):
            x, y = alg.random_element(rng, band), alg.random_element(rng, band)
            err = max(err, abs(state(multiply(x, y)) - state(multiply(y, sigma_inverse(x)))))
        return 0.0, 0.0, err
    S.add("circle.state.sigma_trace", "state(ab) = state(b sigma^-1(a))", sigma_trace,
          S.tol("sigma_trace"))

    def dixmier(rng):
        err, lhs, rhs = 0.0, 0j, 0j
        for _ in range(2):
            x = CrossedProductElement.monomial(group, _rand_fn(rng, 3), "s")
            T = represent(CrossedProductElement.monomial(group, _rand_fn(rng, 3), "s^-1"), N)
            lhs = dixmier_surrogate(T, sigma_inverse(x), cfg=hfc)
            rhs = dixmier_surrogate(T, x, cfg=hfc, order="left")
            err = max(err, abs(lhs - rhs))
        return lhs, rhs, err
    S.add("circle.dixmier.sigma_trace", "Tr_w(T sigma^-1(a) |D|^-1) = Tr_w(a T |D|^-1)",
          dixmier, S.tol("dixmier"), {"N": N})

    def zeta(rng):
        f = _rand_fn(rng, band) + 1.0
        val = residue_functional(multiplication(f, N), cfg=hfc).value
        ref = wodzicki_closed_form(f)
        return val, ref, abs(val - ref) / abs(ref)
    S.add("circle.residue.zeta", "residue of M_f |D|^-1 equals 2 int f", zeta,
          S.tol("zeta_rel"), {"N": N, "relative": True})

    for e in cc["epsilons"]:
        def vanish(rng, e=float(e)):
            chi = CircleDiffeo.sine(e)
            worst, val = 0.0, 0j
            for _ in range(int(cc["vanishing_samples"])):
                F = _rand_fn(rng, band)
                r = residue_functional(multiplication(F, N), chi, cfg=hfc, strict=False)
                if abs(r.value) / F.sup_norm() >= worst:
                    worst, val = abs(r.value) / F.sup_norm(), r.value
            return val, 0.0, worst
        S.add(f"circle.residue.vanishing.eps{e:g}",
              "residue vanishes for diffeomorphisms with nondegenerate fixed points",
              vanish, S.tol("vanishing_rel"), {"N": N, "epsilon": e, "relative_to": "sup|F|"})

    def psi1_fixed(rng):
        pair = MonomialPair(group, _rand_fn(rng, 3), group.word("s"), _rand_fn(rng, 3),
                            GroupWord())
        v = psi1_spectral(pair, N, hfc, strict=False)
        # the operator is V_s^-1 M_F with F = f g' (up to -i); scale as the vanishing rows
        return v, 0.0, abs(v) / pair.f.product(pair.g.derivative()).sup_norm()
    S.add("circle.psi1.localization", "Psi_1 is localized at the identity", psi1_fixed,
          S.tol("vanishing_rel"), {"N": N, "word": "s", "relative_to": "sup|f g'|"})

    words = ["s", "s^-1", "r", "s r"]

    def tau_cyclic(rng):
        t = tau_cochain(group)
        eb = el = 0.0
        for _ in range(3):
            x = [alg.random_element(rng, 3) for _ in range(3)]
            eb = max(eb, abs(hochschild_b(t)(*x)))
            el = max(el, abs(cyclic_lambda(t)(*x[:2]) - t(*x[:2])))
        return eb, el, max(eb, el)
    S.add("circle.tau.cyclic", "tau is a cyclic cocycle", tau_cyclic, S.tol("tau_cyclic"))

    def cartan(rng):
        err = max(cartan_residual(random_localized_pair(group, w, rng, 3)) for w in words)
        return 0.0, 0.0, err
    S.add("circle.tau.cartan", "L_delta tau = B(e_delta tau) + b(E_delta tau)", cartan,
          S.tol("cartan"))

    pairs: list[MonomialPair] = []

    def identity_closed(rng):
        pairs.extend(random_localized_pair(group, words[i % len(words)], rng, 3)
                     for i in range(20))
        err = max(psi1_identity_check(p, None).closed_residual for p in pairs)
        return 0.0, 0.0, err
    S.add("circle.identity.closed", "Psi_1 = -2i tau + L_delta tau (closed forms)",
          identity_closed, S.tol("identity_closed"), {"pairs": 20})

    def identity_spectral(rng):
        err, lhs, rhs = 0.0, 0j, 0j
        for p in pairs[: int(cc["pairs"])]:
            r = psi1_identity_check(p, N, hfc)
            if r.spectral_residual >= err:
                err, lhs, rhs = r.spectral_residual, r.psi1_spectral, r.rhs
        return lhs, rhs, err
    S.add("circle.identity.spectral", "Psi_1 = -2i tau + L_delta tau (residue side)",
          identity_spectral, S.tol("identity_spectral"), {"N": N, "pairs": int(cc["pairs"])})
    return S.rows, ladders
