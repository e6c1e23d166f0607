"""Executable identity suite.

Every check produces an :class:`IdentityCheck` record.  ``run_suite`` walks a
fixed registry, so report order never depends on scheduling, and each record
carries the cutoff and margin it was actually evaluated with.

Margins: symbolic identities are realized exactly below the cutoff, so their
comparisons only need the margin to stay off truncated products.  Comparisons
against the dense exponential of a truncated A_n are exact on every complete
excitation sector, which is guaranteed once the margin is at least the number
of atoms; the suite therefore uses ``max(config.margin, required)`` and records
the value it used.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction

import mpmath
import numpy as np

from . import evolve, fock, model, qdm
from .opalg import NumberFunction, OperatorEntry, QuantumMatrix, SubspaceProfile

__all__ = [
    "IdentityCheck",
    "SuiteConfig",
    "Report",
    "REGISTRY",
    "GROUPS",
    "run_suite",
    "check_opalg",
    "check_model",
    "check_fock",
    "check_qdm",
    "check_diagonalizations",
    "check_exponentials",
    "check_evolve",
    "check_appendix_entry11",
    "check_appendix_relations",
    "check_u1_ambiguity",
    "check_physics",
    "printed_u1_dressed",
    "printed_u1_dressed_D",
    "random_entry",
    "format_residual",
]


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    paper_anchor: str
    residual: float
    tolerance: float
    passed: bool
    cutoff: int | None = None
    margin: int | None = None
    params: dict = field(default_factory=dict)

    @classmethod
    def make(cls, name: str, anchor: str, residual: float, tolerance: float,
             cutoff: int | None = None, margin: int | None = None, **params) -> IdentityCheck:
        residual = float(residual)
        ok = bool(residual <= tolerance)  # NaN fails
        return cls(name, anchor, residual, float(tolerance), ok, cutoff, margin, params)

    def to_record(self) -> dict:
        return {"name": self.name, "paper_anchor": self.paper_anchor, "residual": self.residual,
                "tolerance": self.tolerance, "pass": self.passed, "cutoff": self.cutoff,
                "margin": self.margin, "params": self.params}


@dataclass(frozen=True)
class SuiteConfig:
    cutoff: int = 40
    margin: int = 6
    exact_tol: float = 1e-12
    oracle_tol: float = 1e-9
    unitary_tol: float = 1e-10
    appendix_tol: float = 1e-11
    tolerance: float | None = None
    only: tuple[str, ...] | None = None
    seed: int = 20240611
    tg_values: tuple[float, ...] = (0.3, 0.7, 1.3, 2.9)
    n_max: int = 30
    threads: int = 1

    def tol(self, kind: str) -> float:
        if self.tolerance is not None:
            return self.tolerance
        return getattr(self, f"{kind}_tol")

    def margin_for(self, required: int) -> int:
        m = max(self.margin, required)
        if 2 * m >= self.cutoff:
            raise fock.TruncationError(f"cutoff {self.cutoff} too small for margin {m}")
        return m


# ----------------------------------------------------------------------------
# small helpers
# ----------------------------------------------------------------------------


def format_residual(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return "%.17g" % x


def _max(values: Iterable[float]) -> float:
    return max((float(v) for v in values), default=0.0)


def _arr_max(a: np.ndarray) -> float:
    return float(np.abs(a).max()) if np.size(a) else 0.0


def random_number_function(rng: np.random.Generator) -> NumberFunction:
    """c0 + c1/sqrt(N+1) + c2·cos(N) with complex coefficients of modulus <= √2."""
    c = rng.uniform(-1, 1, size=3) + 1j * rng.uniform(-1, 1, size=3)
    return NumberFunction(lambda n: c[0] + c[1] / math.sqrt(n + 1) + c[2] * math.cos(n),
                          f"rand({c[0].real:.2f}{c[0].imag:+.2f}i, ...)")


def random_entry(rng: np.random.Generator, max_power: int = 2) -> OperatorEntry:
    raising = [(p, random_number_function(rng)) for p in range(1, max_power + 1) if rng.random() < 0.6]
    lowering = [(q, random_number_function(rng)) for q in range(1, max_power + 1) if rng.random() < 0.6]
    return OperatorEntry(random_number_function(rng), raising, lowering)


def _random_matrix(rng: np.random.Generator, dim: int, max_power: int = 1) -> QuantumMatrix:
    return QuantumMatrix([[random_entry(rng, max_power) for _ in range(dim)] for _ in range(dim)])


def _as_matrix(e: OperatorEntry) -> QuantumMatrix:
    return QuantumMatrix([[e]])


def _symbolic_diff(x: QuantumMatrix, y: QuantumMatrix, n_check: int = 50) -> float:
    return x.max_difference(y, n_check)


def _nf(fn, label: str) -> NumberFunction:
    return NumberFunction(fn, label)


# ----------------------------------------------------------------------------
# opalg
# ----------------------------------------------------------------------------


OPALG_CUTOFF = 30


def check_opalg(cfg: SuiteConfig) -> list[IdentityCheck]:
    rng = np.random.default_rng(cfg.seed)
    cut = min(cfg.cutoff, OPALG_CUTOFF)
    out = []

    m = cfg.margin_for(2)
    res = []
    for _ in range(50):
        x, y = random_entry(rng), random_entry(rng)
        sym = fock.realize(_as_matrix(x * y), cut)
        num = fock.realize(_as_matrix(x), cut) @ fock.realize(_as_matrix(y), cut)
        res.append(fock.interior_compare(sym, num, m))
    out.append(IdentityCheck.make("opalg.normal_ordering", "normal-ordering rewrite rules",
                                  _max(res), cfg.tol("exact"), cut, m, pairs=50, seed=cfg.seed))

    res = []
    for _ in range(50):
        x = random_entry(rng)
        res.append(fock.interior_compare(fock.realize(_as_matrix(x.adjoint()), cut),
                                         fock.realize(_as_matrix(x), cut).dagger(), m))
    out.append(IdentityCheck.make("opalg.adjoint", "adjoint of normal-ordered entries",
                                  _max(res), cfg.tol("exact"), cut, m, samples=50, seed=cfg.seed))

    m3 = cfg.margin_for(3)
    res = []
    for _ in range(100):
        x, y, z = (_random_matrix(rng, 2) for _ in range(3))
        res.append(fock.interior_compare(fock.realize((x @ y) @ z, cut), fock.realize(x @ (y @ z), cut), m3))
    out.append(IdentityCheck.make("opalg.associativity", "quantum matrix product",
                                  _max(res), 1e-10 if cfg.tolerance is None else cfg.tolerance,
                                  cut, m3, triples=100, seed=cfg.seed))

    A1 = model.build_A(1)
    target = QuantumMatrix.diagonal([_nf(lambda n: n + 1, "N+1"), NumberFunction.number()])
    out.append(IdentityCheck.make("opalg.A1_squared", "one-atom square A1² = diag(N+1, N)",
                                  _symbolic_diff(A1 @ A1, target), cfg.tol("exact"), n_check=50))

    B1 = model.build_spin_block(1).B
    D = QuantumMatrix.diagonal([_nf(lambda n: 2 * (2 * n + 3), "2(2N+3)"),
                                _nf(lambda n: 2 * (2 * n + 1), "2(2N+1)"),
                                _nf(lambda n: 2 * (2 * n - 1), "2(2N-1)")])
    out.append(IdentityCheck.make("opalg.B1_cubed", "two-atom relation B1³ = D·B1",
                                  _symbolic_diff(B1 @ B1 @ B1, D @ B1), cfg.tol("exact"), n_check=50))
    return out


# ----------------------------------------------------------------------------
# model
# ----------------------------------------------------------------------------


def check_model(cfg: SuiteConfig) -> list[IdentityCheck]:
    out = []
    res = []
    for n in model.SUPPORTED_ATOMS:
        s = model.collective_spin(n)
        res += [_arr_max(s.S_3 @ s.S_plus - s.S_plus @ s.S_3 - s.S_plus),
                _arr_max(s.S_3 @ s.S_minus - s.S_minus @ s.S_3 + s.S_minus),
                _arr_max(s.S_plus @ s.S_minus - s.S_minus @ s.S_plus - 2 * s.S_3)]
    out.append(IdentityCheck.make("model.su2", "collective spin su(2) relations", _max(res), cfg.tol("exact")))

    cut = cfg.cutoff
    a = fock.annihilation(cut)
    res = []
    for n in model.SUPPORTED_ATOMS:
        s = model.collective_spin(n)
        direct = np.kron(s.S_plus, a) + np.kron(s.S_minus, a.conj().T)
        res.append(_arr_max(fock.realize(model.build_A(n), cut).matrix - direct))
    out.append(IdentityCheck.make("model.A_tensor_form", "A = S+ ⊗ a + S- ⊗ a†", _max(res),
                                  cfg.tol("exact"), cut, 0))

    res = []
    for n in (2, 3):
        T = model.build_decomposition(n).T
        I = np.eye(T.shape[0])
        res += [_arr_max(T.T @ T - I), _arr_max(T @ T.T - I)]
    out.append(IdentityCheck.make("model.T_orthogonal", "intertwiners T are orthogonal", _max(res),
                                  1e-15 if cfg.tolerance is None else cfg.tolerance))

    for n in (2, 3):
        dec = model.build_decomposition(n)
        A = model.build_A(n)
        sym = _symbolic_diff(A.conjugate_by(dec.T.T), dec.block_matrix())
        num = fock.interior_compare(fock.realize(A, cut).lift(dec.T.T), fock.realize(dec.block_matrix(), cut),
                                    cfg.margin)
        out.append(IdentityCheck.make(f"model.decomposition_{n}", f"{n}-atom spin decomposition Tᵀ A T",
                                      max(sym, num), cfg.tol("exact"), cut, cfg.margin))

    res = []
    for twice in range(1, 9):
        B = model.build_spin_block(Fraction(twice, 2)).B
        res.append(_symbolic_diff(B.adjoint(), B))
    out.append(IdentityCheck.make("model.block_hermitian", "spin blocks B_j are self-adjoint",
                                  _max(res), cfg.tol("exact"), j_max=4))
    return out


# ----------------------------------------------------------------------------
# fock
# ----------------------------------------------------------------------------


def check_fock(cfg: SuiteConfig) -> list[IdentityCheck]:
    out = []
    cut = cfg.cutoff
    B1 = fock.realize(model.build_spin_block(1).B, cut).matrix
    weights = [1, 0, -1]  # S3 of the three components
    sectors = fock.sector_index_sets(cut, weights, list(range(1, cut)))
    res = []
    for m, idx in sectors.items():
        w = np.linalg.eigvalsh(B1[np.ix_(idx, idx)])
        q = math.sqrt(2 * (2 * m + 1))
        res.append(_arr_max(np.sort(w) - np.array([-q, 0.0, q])))
    out.append(IdentityCheck.make("fock.B1_sector_spectrum", "two-atom diagonal form, sector by sector",
                                  _max(res), cfg.tol("unitary"), cut, 0, sectors=f"1..{cut - 1}"))

    res_u, res_s = [], []
    for n in model.SUPPORTED_ATOMS:
        H = fock.realize(model.build_A(n), cut)
        m = cfg.margin_for(n)
        exc = model.atomic_excitations(n)
        labels = fock.sector_index_sets(cut, exc)
        inside = set(fock.interior_indices(cut, H.blockdim, m).tolist())
        for tg in cfg.tg_values:
            E = fock.expm_hermitian(H, -tg).matrix
            res_u.append(_arr_max(E @ E.conj().T - np.eye(E.shape[0])))
            leak = 0.0
            for key, idx in labels.items():
                rows = [i for i in idx if i in inside]
                cols = sorted(inside - set(idx))
                if rows and cols:
                    leak = max(leak, _arr_max(E[np.ix_(rows, cols)]))
            res_s.append(leak)
    out.append(IdentityCheck.make("fock.expm_unitary", "spectral exponential of A_n",
                                  _max(res_u), cfg.tol("unitary"), cut, None, tg=list(cfg.tg_values)))
    out.append(IdentityCheck.make("fock.sector_preservation", "total excitation is conserved",
                                  _max(res_s), cfg.tol("exact"), cut, cfg.margin_for(3), tg=list(cfg.tg_values)))
    return out


# ----------------------------------------------------------------------------
# qdm
# ----------------------------------------------------------------------------

_X3 = np.array([[0.5, 1 / math.sqrt(2), 0.5],
                [1 / math.sqrt(2), 0.0, -1 / math.sqrt(2)],
                [0.5, -1 / math.sqrt(2), 0.5]])


def check_qdm(cfg: SuiteConfig) -> list[IdentityCheck]:
    rng = np.random.default_rng(cfg.seed + 1)
    out = []
    orth, rec, cls, y2 = [], [], [], []
    for J in range(2, 9):
        es = qdm.classical_eigensystem(J)
        I = np.eye(J)
        orth += [_arr_max(es.X.T @ es.X - I), _arr_max(es.X @ es.X.T - I)]
        for _ in range(5):
            z = complex(rng.normal(), rng.normal())
            C = qdm.classical_matrix(J, z)
            c = qdm.classicalize(Fraction(J - 1, 2), z)
            cls.append(c.residual)
            for i, slope in enumerate(es.eigenvalue_slopes):
                w = c.W[:, i]
                rec.append(float(np.linalg.norm(C @ w - slope * abs(z) * w)))
        y2.append(_arr_max(es.Y[1] - np.array(es.eigenvalue_slopes) / math.sqrt(J - 1)))
    tol = cfg.tol("exact")
    out.append(IdentityCheck.make("qdm.X_orthogonal", "classical eigenvector matrix X", _max(orth), tol,
                                  J_range="2..8"))
    out.append(IdentityCheck.make("qdm.eigen_recursion", "classical eigenvalues (J-2i+1)|z|", _max(rec), tol,
                                  J_range="2..8", seed=cfg.seed + 1))
    out.append(IdentityCheck.make("qdm.classical_unitary", "C = W D_C W†", _max(cls), tol, J_range="2..8"))
    out.append(IdentityCheck.make("qdm.y2_formula", "second recursion coefficient", _max(y2), tol))
    out.append(IdentityCheck.make("qdm.X_j1_printed", "j = 1 classical matrix X",
                                  _arr_max(qdm.classical_eigensystem(3).X - _X3), tol))

    cut = cfg.cutoff
    dom, rng_res, purity, formula = [], [], [], []
    for J in range(2, 6):
        es = qdm.classical_eigensystem(J)
        iso = qdm.quantize(es)
        U1 = iso.U1
        dom.append(fock.profile_identity_residual(fock.realize(U1.adjoint() @ U1, cut), iso.domain))
        rng_res.append(fock.profile_identity_residual(fock.realize(U1 @ U1.adjoint(), cut), iso.range))
        block = model.build_spin_block(Fraction(J - 1, 2))
        raw = U1.adjoint() @ block.B @ U1
        ladder = 0.0
        for row in raw.entries:
            for e in row:
                for p, f, q in e.terms():
                    if p or q:
                        ladder = max(ladder, _max(abs(f(n)) for n in range(51)))
        purity.append(ladder)
        formula.append(_symbolic_diff(qdm.reduce(block, iso).R, qdm.reduced_formula(es)))
    out.append(IdentityCheck.make("qdm.isometry_domain", "quantized isometry U1† U1 = 1",
                                  _max(dom), tol, cut, 0, J_range="2..5", profile="H ⊕ H ⊕ ... ⊕ H"))
    out.append(IdentityCheck.make("qdm.isometry_range", "quantized isometry U1 U1† = 1",
                                  _max(rng_res), tol, cut, 0, J_range="2..5", profile="H ⊕ H_1 ⊕ ... ⊕ H_{J-1}"))
    out.append(IdentityCheck.make("qdm.reduction_purity", "R = U1† B U1 has no ladder operators",
                                  _max(purity), tol, J_range="2..5"))
    out.append(IdentityCheck.make("qdm.reduced_formula", "entries r_ki of R", _max(formula), tol,
                                  J_range="2..5"))

    s = math.sqrt
    printed = QuantumMatrix([
        [_nf(lambda n: s(n + 1) + s(n + 2), "√(N+1)+√(N+2)"),
         _nf(lambda n: -(s(n + 2) - s(n + 1)) / s(2), "-(√(N+2)-√(N+1))/√2"), 0],
        [_nf(lambda n: -(s(n + 2) - s(n + 1)) / s(2), "-(√(N+2)-√(N+1))/√2"), 0,
         _nf(lambda n: (s(n + 2) - s(n + 1)) / s(2), "(√(N+2)-√(N+1))/√2")],
        [0, _nf(lambda n: (s(n + 2) - s(n + 1)) / s(2), "(√(N+2)-√(N+1))/√2"),
         _nf(lambda n: -(s(n + 1) + s(n + 2)), "-(√(N+1)+√(N+2))")],
    ])
    R1 = qdm.reduce(model.build_spin_block(1), qdm.quantize(qdm.classical_eigensystem(3))).R
    out.append(IdentityCheck.make("qdm.R_j1_printed", "j = 1 reduced matrix R", _symbolic_diff(R1, printed), tol))

    closed = qdm.diagonalize(1, "closed_form")
    level = qdm.diagonalize(1, "per_level")
    n_max = cfg.n_max
    d_res = _arr_max(closed.diagonal_table(n_max) - level.diagonal_table(n_max))
    col_res = 0.0
    for n in range(n_max + 1):
        A = np.array([[closed.U2[k, i].diag(n).real for i in range(3)] for k in range(3)])
        B = np.array([[level.U2[k, i].diag(n).real for i in range(3)] for k in range(3)])
        signs = np.sign(np.sum(A * B, axis=0))
        col_res = max(col_res, _arr_max(A - B * signs))
    out.append(IdentityCheck.make("qdm.modes_agree_D", "closed form vs per-level D at j = 1", d_res,
                                  1e-10 if cfg.tolerance is None else cfg.tolerance, n_max=n_max))
    out.append(IdentityCheck.make("qdm.modes_agree_U2", "closed form vs per-level U2 at j = 1 (up to sign)",
                                  col_res, 1e-10 if cfg.tolerance is None else cfg.tolerance, n_max=n_max))
    return out


# ----------------------------------------------------------------------------
# diagonalizations and exponentials
# ----------------------------------------------------------------------------


def _reconstruction_checks(cfg: SuiteConfig, label: str, anchor: str, U: QuantumMatrix, D: QuantumMatrix,
                           B: QuantumMatrix, domain: SubspaceProfile, rng_profile: SubspaceProfile,
                           **params) -> list[IdentityCheck]:
    cut, m = cfg.cutoff, cfg.margin
    rec = fock.masked_compare(fock.realize(U @ D @ U.adjoint(), cut), fock.realize(B, cut), rng_profile, m)
    dom = fock.profile_identity_residual(fock.realize(U.adjoint() @ U, cut), domain)
    ran = fock.profile_identity_residual(fock.realize(U @ U.adjoint(), cut), rng_profile)
    return [
        IdentityCheck.make(f"diagonalization.{label}.reconstruction", anchor, rec, cfg.tol("oracle"), cut, m,
                           profile=repr(rng_profile), **params),
        IdentityCheck.make(f"diagonalization.{label}.UdagU", anchor + ": U†U = 1", dom, cfg.tol("exact"),
                           cut, 0, profile=repr(domain), **params),
        IdentityCheck.make(f"diagonalization.{label}.UUdag", anchor + ": UU† = 1", ran, cfg.tol("exact"),
                           cut, 0, profile=repr(rng_profile), **params),
    ]


def check_diagonalizations(cfg: SuiteConfig) -> list[IdentityCheck]:
    s = math.sqrt
    out = []
    n_max = cfg.n_max
    tol = cfg.tol("exact")

    half = qdm.diagonalize(Fraction(1, 2))
    one = qdm.diagonalize(1)
    three = qdm.three_atom_diagonalization()
    two_level = qdm.diagonalize(2, "per_level")

    out += _reconstruction_checks(cfg, "one_atom", "one-atom diagonal form", qdm.one_atom_U(), half.D,
                                  model.build_A(1), half.domain, half.range, j="1/2", mode="closed_form")
    out += _reconstruction_checks(cfg, "two_atom", "two-atom diagonal form", qdm.two_atom_U(), one.D,
                                  model.build_spin_block(1).B, one.domain, one.range, j="1", mode="closed_form")
    out += _reconstruction_checks(cfg, "three_atom", "three-atom diagonal form", three.U, three.D,
                                  model.build_spin_block(Fraction(3, 2)).B, three.domain, three.range,
                                  j="3/2", mode="closed_form")
    out += _reconstruction_checks(cfg, "spin_2", "generic spin-j quantum diagonalization", two_level.U,
                                  two_level.D, model.build_spin_block(2).B, two_level.domain, two_level.range,
                                  j="2", mode="per_level")

    d1 = _max(abs(half.diagonal_table(n_max)[n] - np.array([s(n + 1), -s(n + 1)])).max() for n in range(n_max + 1))
    out.append(IdentityCheck.make("diagonalization.one_atom.D", "one-atom D = diag(√(N+1), -√(N+1))", d1, tol,
                                  n_max=n_max))
    d2 = _max(abs(one.diagonal_table(n_max)[n] - np.array([s(2 * (2 * n + 3)), 0, -s(2 * (2 * n + 3))])).max()
              for n in range(n_max + 1))
    out.append(IdentityCheck.make("diagonalization.two_atom.D", "two-atom D = diag(q, 0, -q), q = √(2(2N+3))",
                                  d2, tol, n_max=n_max))
    rows = []
    for n in range(n_max + 1):
        M = n + 2
        lp, lm = 5 * M + s(16 * M * M + 9), 5 * M - s(16 * M * M + 9)
        rows.append(abs(three.diagonal_table(n_max)[n] - np.array([s(lp), s(lm), -s(lm), -s(lp)])).max())
    out.append(IdentityCheck.make("diagonalization.three_atom.D", "three-atom D from λ±(N+2)", _max(rows), tol,
                                  n_max=n_max))
    U = qdm.two_atom_U()
    e12 = _max(abs(U[0, 1].diag(n) - s(2) * s(n + 2) / s(2 * (2 * n + 3))) for n in range(n_max + 1))
    e00 = _max(abs(U[0, 0].diag(n) + s(n + 1) / s(2 * (2 * n + 3))) for n in range(n_max + 1))
    out.append(IdentityCheck.make("diagonalization.two_atom.U_entries", "two-atom U first-row entries",
                                  max(e12, e00), tol, n_max=n_max))
    return out


def _qdm_exponential_blocks(n: int, tg: float) -> QuantumMatrix:
    if n == 1:
        return qdm.diagonalize(Fraction(1, 2)).exponential(tg)
    if n == 2:
        return QuantumMatrix.block_diag(QuantumMatrix.identity(1), qdm.diagonalize(1).exponential(tg))
    half = qdm.diagonalize(Fraction(1, 2)).exponential(tg)
    return QuantumMatrix.block_diag(half, half, qdm.three_atom_diagonalization().exponential(tg))


def qdm_evolution_realized(n: int, tg: float, cutoff: int) -> fock.FockRealization:
    """U e^{-itgD} U† per block, rotated back to the atomic basis."""
    R = fock.realize(_qdm_exponential_blocks(n, tg), cutoff)
    return R if n == 1 else R.lift(model.build_decomposition(n).T)


def check_exponentials(cfg: SuiteConfig) -> list[IdentityCheck]:
    out = []
    cut = cfg.cutoff
    for n in model.SUPPORTED_ATOMS:
        m = cfg.margin_for(n)
        H = fock.realize(model.build_A(n), cut)
        for tg in cfg.tg_values:
            oracle = fock.expm_hermitian(H, -tg)
            closed = evolve.realize_evolution(n, tg, 1.0, cut)
            via_qdm = qdm_evolution_realized(n, tg, cut)
            r = max(fock.interior_compare(closed, oracle, m), fock.interior_compare(via_qdm, oracle, m),
                    fock.interior_compare(via_qdm, closed, m))
            out.append(IdentityCheck.make(f"exponential.n{n}.tg{tg:g}",
                                          f"{n}-atom exponential via U e^(-itgD) U†", r, cfg.tol("oracle"),
                                          cut, m, n=n, tg=tg))
        zero = max(fock.interior_compare(evolve.realize_evolution(n, 0.0, 1.0, cut),
                                         fock.FockRealization(cut, 2 ** n, np.eye(2 ** n * (cut + 1))), 0),
                   fock.interior_compare(qdm_evolution_realized(n, 0.0, cut),
                                         fock.FockRealization(cut, 2 ** n, np.eye(2 ** n * (cut + 1))), m))
        out.append(IdentityCheck.make(f"exponential.n{n}.t0", f"{n}-atom exponential at t = 0", zero,
                                      cfg.tol("exact"), cut, m, n=n))

    sp_res = []
    for tg in cfg.tg_values:
        sp = evolve.TwoAtomSpectral(tg)
        E = qdm.diagonalize(1).exponential(tg)
        sp_res.append(_max(abs(E[0, 0].diag(k) - (1 + (2 * k + 2) / (2 * k + 3) * sp.f(k + 1)))
                           for k in range(cfg.n_max + 1)))
    out.append(IdentityCheck.make("exponential.n2.entry11", "two-atom block exponential (1,1) entry",
                                  _max(sp_res), cfg.tol("oracle"), tg=list(cfg.tg_values), n_max=cfg.n_max))
    return out


# ----------------------------------------------------------------------------
# evolve invariants
# ----------------------------------------------------------------------------


def check_evolve(cfg: SuiteConfig) -> list[IdentityCheck]:
    out = []
    cut = cfg.cutoff
    for n in model.SUPPORTED_ATOMS:
        m = cfg.margin_for(n)
        I = fock.FockRealization(cut, 2 ** n, np.eye(2 ** n * (cut + 1)))
        uni, grp, sym = [], [], []
        for tg in cfg.tg_values:
            E = evolve.realize_evolution(n, tg, 1.0, cut)
            uni += [fock.interior_compare(E.dagger() @ E, I, m), fock.interior_compare(E @ E.dagger(), I, m)]
            half = evolve.realize_evolution(n, tg / 3, 1.0, cut)
            rest = evolve.realize_evolution(n, 2 * tg / 3, 1.0, cut)
            grp.append(fock.interior_compare(half @ rest, E, m))
            back = evolve.realize_evolution(n, -tg, 1.0, cut)
            sym.append(fock.interior_compare(E.dagger(), back, m))
        params = dict(n=n, tg=list(cfg.tg_values))
        out.append(IdentityCheck.make(f"evolve.n{n}.unitary", f"{n}-atom propagator is unitary", _max(uni),
                                      cfg.tol("unitary"), cut, m, **params))
        out.append(IdentityCheck.make(f"evolve.n{n}.group", f"{n}-atom propagator group law", _max(grp),
                                      cfg.tol("oracle"), cut, m, **params))
        out.append(IdentityCheck.make(f"evolve.n{n}.time_reversal", f"{n}-atom propagator adjoint = reversed time",
                                      _max(sym), cfg.tol("unitary"), cut, m, **params))
    return out


# ----------------------------------------------------------------------------
# (1,1) entry of the three-atom exponential
# ----------------------------------------------------------------------------


def _mp_d(M):
    return 16 * M ** 2 + 9


def check_appendix_entry11(cfg: SuiteConfig, n_range: Sequence[int] | None = None) -> list[IdentityCheck]:
    """2u11² = v+(N+2)/(2√d(N+2)), 2u12² = -v-(N+2)/(2√d(N+2)) and the assembled entry f2(N+2)."""
    n_range = range(cfg.n_max + 1) if n_range is None else n_range
    tol = cfg.tol("appendix")
    r11, r12, rent, rsym = [], [], [], []
    for n in n_range:
        p = qdm.three_atom_parameters(n)
        M = n + 2
        rd = math.sqrt(16 * M * M + 9)
        vp, vm = -2 * M - 3 + rd, -2 * M - 3 - rd
        u11, u12 = p.u(0, 0), p.u(0, 1)
        r11.append(abs(2 * u11 ** 2 - vp / (2 * rd)))
        r12.append(abs(2 * u12 ** 2 + vm / (2 * rd)))
        for tg in cfg.tg_values:
            sp = evolve.ThreeAtomSpectral(tg)
            mu4, nu4 = float(p.mu) / 4, float(p.nu) / 4
            assembled = 2 * u11 ** 2 * math.cos(tg * mu4) + 2 * u12 ** 2 * math.cos(tg * nu4)
            rent.append(abs(assembled - sp.f2(n + 2)))
        c = p.coefficients
        rsym.append(max(abs(c[0, 2] - c[0, 1]), abs(c[0, 3] + c[0, 0]), abs(c[1, 2] + c[1, 1]),
                        abs(c[1, 3] - c[1, 0]), abs(c[2, 2] - c[2, 1]), abs(c[2, 3] + c[2, 0]),
                        abs(c[3, 2] + c[3, 1]), abs(c[3, 3] - c[3, 0])))
    rng_s = f"{min(n_range)}..{max(n_range)}"
    p0 = qdm.three_atom_parameters(0)
    n0 = abs(2 * p0.u(0, 0) ** 2 - (-7 + math.sqrt(73)) / (2 * math.sqrt(73)))
    # the symmetric pattern must also be present in the assembled quantum matrix
    U = qdm.three_atom_diagonalization().U
    pairs = [((0, 2), (0, 1), 1), ((0, 3), (0, 0), -1), ((1, 2), (1, 1), -1), ((1, 3), (1, 0), 1),
             ((2, 2), (2, 1), 1), ((2, 3), (2, 0), -1), ((3, 2), (3, 1), -1), ((3, 3), (3, 0), 1)]
    structural = _max(U[a].max_difference(U[b].scale(sign), cfg.n_max) for a, b, sign in pairs)
    return [
        IdentityCheck.make("appendix.u11_squared", "three-atom (1,1) entry: 2u11² = v+/(2√d)", _max(r11), tol,
                           n_range=rng_s),
        IdentityCheck.make("appendix.u12_squared", "three-atom (1,1) entry: 2u12² = -v-/(2√d)", _max(r12), tol,
                           n_range=rng_s),
        IdentityCheck.make("appendix.entry11", "three-atom (1,1) entry equals f2(N+2)", _max(rent), tol,
                           n_range=rng_s, tg=list(cfg.tg_values)),
        IdentityCheck.make("appendix.n0_value", "three-atom (1,1) entry at N = 0, d(2) = 73", n0, tol),
        IdentityCheck.make("appendix.u_symmetry", "three-atom u_ki symmetry pattern", max(_max(rsym), structural),
                           cfg.tol("exact"), n_range=rng_s),
    ]


def check_appendix_relations(cfg: SuiteConfig, n_range: Sequence[int] | None = None) -> list[IdentityCheck]:
    """The β/γ relations used to prove the (1,1)-entry identity, each checked on its own."""
    n_range = range(cfg.n_max + 1) if n_range is None else n_range
    names = {
        "beta_sum": "β + 1/β = (μ-ν)/b",
        "beta_diff": "1/β - β = (x-y)/b",
        "gamma_sum": "γ + 1/γ = (μ+ν)/c",
        "gamma_diff": "1/γ - γ = (x+y)/c",
        "cross": "β/γ + γ/β = ((μ²-ν²) - (x²-y²))/(2bc)",
    }
    res = {k: 0.0 for k in names}
    with mpmath.workdps(40):
        for n in n_range:
            p = qdm.three_atom_parameters(n)
            b, c, x, y, mu, nu, be, ga = p.b, p.c, p.x, p.y, p.mu, p.nu, p.beta, p.gamma
            vals = {
                "beta_sum": be + 1 / be - (mu - nu) / b,
                "beta_diff": 1 / be - be - (x - y) / b,
                "gamma_sum": ga + 1 / ga - (mu + nu) / c,
                "gamma_diff": 1 / ga - ga - (x + y) / c,
                "cross": be / ga + ga / be - ((mu ** 2 - nu ** 2) - (x ** 2 - y ** 2)) / (2 * b * c),
            }
            for k, v in vals.items():
                res[k] = max(res[k], float(abs(v)))
    rng_s = f"{min(n_range)}..{max(n_range)}"
    return [IdentityCheck.make(f"appendix.relation_{k}", f"β/γ relation {names[k]}", res[k],
                               cfg.tol("appendix"), n_range=rng_s, digits=40) for k in names]


# ----------------------------------------------------------------------------
# U(1) ambiguity
# ----------------------------------------------------------------------------


def printed_u1_dressed() -> QuantumMatrix:
    """The dressed two-atom factor Ũ, entries in canonical placement."""
    s = math.sqrt
    q = lambda n: s(2 * (2 * n + 3))  # noqa: E731
    qt = lambda n: s(2 * (2 * n + 1))  # noqa: E731
    r2 = s(2)
    return QuantumMatrix([
        [OperatorEntry.annihilate(1, _nf(lambda n: -1 / q(n), "-1/√(2(2N+3))")),
         OperatorEntry.annihilate(1, _nf(lambda n: r2 * s(n + 2) / (s(n + 1) * q(n)),
                                         "√2√(N+2)/(√(N+1)√(2(2N+3)))")),
         OperatorEntry.annihilate(1, _nf(lambda n: 1 / q(n), "1/√(2(2N+3))"))],
        [-1 / r2, 0, -1 / r2],
        # printed with the function left of a†, i.e. a† f(N+1) here
        [OperatorEntry.create(1, _nf(lambda n: -1 / qt(n), "-1/√(2(2N+1))")),
         OperatorEntry.create(1, _nf(lambda n: -r2 * s(n) / (s(n + 1) * qt(n)), "-√2√N/(√(N+1)√(2(2N+1)))")),
         OperatorEntry.create(1, _nf(lambda n: 1 / qt(n), "1/√(2(2N+1))"))],
    ])


def printed_u1_dressed_D() -> QuantumMatrix:
    qt = lambda n: math.sqrt(2 * (2 * n + 1))  # noqa: E731
    return QuantumMatrix.diagonal([_nf(qt, "√(2(2N+1))"), 0, _nf(lambda n: -qt(n), "-√(2(2N+1))")])


def _dressing() -> QuantumMatrix:
    g = _nf(lambda n: 1 / math.sqrt(n + 1), "1/√(N+1)")
    return QuantumMatrix.diagonal([OperatorEntry.annihilate(1, g)] * 3)


def check_u1_ambiguity(cfg: SuiteConfig) -> list[IdentityCheck]:
    cut, m = cfg.cutoff, cfg.margin
    tol = cfg.tol("exact")
    n_max = 50
    U = qdm.two_atom_U()
    D = qdm.diagonalize(1).D
    U0 = _dressing()
    Dt_alg = (U0.adjoint() @ D @ U0).pruned(n_max)
    Dt = printed_u1_dressed_D()
    Ut = printed_u1_dressed()
    B1 = model.build_spin_block(1).B
    out = []

    # (a) D̃ = Ũ0† D Ũ0; both dressings annihilate the vacuum, so compare on n >= 1
    diag_ok = 0.0 if Dt_alg.is_diagonal() and all(e.is_pure_function for r in Dt_alg.entries for e in r) else 1.0
    fa = Dt_alg.diagonal_functions()
    fb = Dt.diagonal_functions()
    a_res = max(diag_ok, _max(fa[i].max_difference(fb[i], n_max, start=1) for i in range(3)))
    vac = _max(abs(f(0)) for f in fa)
    out.append(IdentityCheck.make("u1.shifted_D", "U(1) ambiguity: D̃ = Ũ0† D Ũ0 on H_1", a_res, tol,
                                  n_range=f"1..{n_max}", vacuum_value=vac))

    # (b) B1 = Ũ D̃ Ũ† with the printed factors, and Ũ = U Ũ0 away from the vacuum
    rec = fock.interior_compare(fock.realize(Ut @ Dt @ Ut.adjoint(), cut), fock.realize(B1, cut), m)
    rec_full = fock.masked_compare(fock.realize(Ut @ Dt @ Ut.adjoint(), cut), fock.realize(B1, cut), [0, 0, 0])
    prod = fock.realize(U @ U0, cut)
    printed = fock.realize(Ut, cut)
    cols = fock.masked_indices(cut, [1, 1, 1])
    dressing = _arr_max(prod.matrix[:, cols] - printed.matrix[:, cols])
    out.append(IdentityCheck.make("u1.reconstruction", "U(1) ambiguity: B1 = Ũ D̃ Ũ†", max(rec, rec_full),
                                  cfg.tol("unitary"), cut, m, whole_space_residual=rec_full))
    out.append(IdentityCheck.make("u1.dressed_factor", "U(1) ambiguity: Ũ = U Ũ0 on H_1 ⊕ H_1 ⊕ H_1",
                                  dressing, tol, cut, 0))

    # (c) the domain and range of Ũ
    dom = SubspaceProfile((0, 1, 0))
    ran = SubspaceProfile((0, 0, 1))
    r_dom = fock.profile_identity_residual(fock.realize(Ut.adjoint() @ Ut, cut), dom)
    r_ran = fock.profile_identity_residual(fock.realize(Ut @ Ut.adjoint(), cut), ran)
    out.append(IdentityCheck.make("u1.domain", "U(1) ambiguity: Ũ† Ũ = 1 on H ⊕ H_1 ⊕ H", r_dom, tol, cut, 0,
                                  profile=repr(dom)))
    out.append(IdentityCheck.make("u1.range", "U(1) ambiguity: Ũ Ũ† = 1 on H ⊕ H ⊕ H_1", r_ran, tol, cut, 0,
                                  profile=repr(ran)))

    # (d) D̃ differs from D at every level; residual counts coincident levels
    gaps = [abs(fb[0](n) - D.diagonal_functions()[0](n)) for n in range(cfg.n_max + 1)]
    coincident = sum(1 for g in gaps if g <= 1e-12)
    out.append(IdentityCheck.make("u1.D_differs", "U(1) ambiguity: D̃ ≠ D", coincident, 0.0,
                                  n_max=cfg.n_max, min_gap=min(gaps), gap_at_0=gaps[0]))
    return out


# ----------------------------------------------------------------------------
# physics
# ----------------------------------------------------------------------------

PHYSICS_EXAMPLES = (
    (1, "atoms=e;field=fock:0"),
    (1, "atoms=g;field=fock:0"),
    (2, "atoms=ee;field=fock:0"),
    (3, "atoms=eee;field=coherent:2,0"),
)


def _oracle_series(n: int, spec: str, times: np.ndarray, g: float, omega: float, cutoff: int,
                   margin: int) -> np.ndarray:
    """Excited populations from exp(-itH) with H realized directly (ω(S3 + N) + gA)."""
    st = evolve.parse_state(spec)
    L, s = 2 ** n, cutoff + 1
    spin = model.collective_spin(n)
    H = (omega * (np.kron(spin.S_3, np.eye(s)) + np.kron(np.eye(L), np.diag(np.arange(s))))
         + g * fock.realize(model.build_A(n), cutoff).matrix)
    w, V = np.linalg.eigh(H)
    psi0 = np.zeros(L * s, dtype=complex)
    psi0[st.component * s:(st.component + 1) * s] = evolve.field_amplitudes(st, cutoff, margin)
    c0 = V.conj().T @ psi0
    bits = np.array([[1.0 if not (k >> (n - 1 - a)) & 1 else 0.0 for a in range(n)] for k in range(L)])
    out = []
    for t in times:
        psi = V @ (np.exp(-1j * t * w) * c0)
        out.append(bits.T @ (np.abs(psi.reshape(L, s)) ** 2).sum(axis=1))
    return np.array(out)


def _fitting_cutoff(state: evolve.InitialState, cutoff: int, margin: int, limit: int = 400) -> int:
    """Smallest cutoff >= ``cutoff`` whose trusted levels hold the field state."""
    for c in range(cutoff, limit + 1):
        try:
            evolve.field_amplitudes(state, c, margin)
            return c
        except evolve.TruncationMassError:
            continue
    raise evolve.TruncationMassError(f"no cutoff up to {limit} holds the field state")


def check_physics(cfg: SuiteConfig) -> list[IdentityCheck]:
    out = []
    cut = cfg.cutoff
    ts = np.linspace(0.0, 2 * math.pi, 101)
    m = cfg.margin_for(1)
    series = evolve.evolve_state(evolve.full_propagator(1, 0.0, 1.0, 0.0),
                                 evolve.parse_state("atoms=e;field=fock:0"), ts, cut, m)
    out.append(IdentityCheck.make("physics.vacuum_rabi", "one-atom vacuum Rabi oscillation P_e = cos²(gt)",
                                  _arr_max(series.excited[:, 0] - np.cos(ts) ** 2), cfg.tol("unitary"), cut, m,
                                  g=1.0, omega=0.0, steps=len(ts)))
    for n, spec in PHYSICS_EXAMPLES:
        m = cfg.margin_for(n)
        state = evolve.parse_state(spec)
        c = _fitting_cutoff(state, cut, m)
        times = np.linspace(0.0, 5.0, 11)
        s = evolve.evolve_state(evolve.full_propagator(n, 0.0, 1.0, 1.0), state, times, c, m)
        extra = {} if c == cut else {"cutoff_raised_from": cut}
        r = max(_arr_max(s.norm - 1), _arr_max(s.excitation_distribution - s.excitation_distribution[0]))
        oracle = _oracle_series(n, spec, times, 1.0, 1.0, c, m)
        out.append(IdentityCheck.make(f"physics.conservation[{spec}]", "norm and excitation conservation", r,
                                      cfg.tol("unitary"), c, m, n=n, g=1.0, omega=1.0, **extra))
        out.append(IdentityCheck.make(f"physics.oracle_populations[{spec}]",
                                      "populations: closed form vs dense exponential",
                                      _arr_max(s.excited - oracle), cfg.tol("oracle"), c, m, n=n, **extra))
    return out


# ----------------------------------------------------------------------------
# suite
# ----------------------------------------------------------------------------

REGISTRY: tuple[tuple[str, Callable[[SuiteConfig], list[IdentityCheck]]], ...] = (
    ("opalg", check_opalg),
    ("model", check_model),
    ("fock", check_fock),
    ("qdm", check_qdm),
    ("diagonalization", check_diagonalizations),
    ("exponential", check_exponentials),
    ("evolve", check_evolve),
    ("appendix", lambda cfg: check_appendix_entry11(cfg) + check_appendix_relations(cfg)),
    ("u1", check_u1_ambiguity),
    ("physics", check_physics),
)
GROUPS = tuple(g for g, _ in REGISTRY)


@dataclass(frozen=True)
class Report:
    config: SuiteConfig
    checks: tuple[IdentityCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[IdentityCheck]:
        return [c for c in self.checks if not c.passed]

    def to_json(self) -> str:
        return "[\n" + ",\n".join(_record_json(c) for c in self.checks) + "\n]\n"


def _json_value(v) -> str:
    import json

    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else json.dumps(format_residual(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (np.floating,)):
        return _json_value(float(v))
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(str(k), ensure_ascii=False)}: {_json_value(x)}"
                               for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    return json.dumps(str(v), ensure_ascii=False)


def _record_json(c: IdentityCheck) -> str:
    parts = []
    for k, v in c.to_record().items():
        if k == "residual":
            text = format_residual(v) if math.isfinite(v) else _json_value(v)
        else:
            text = _json_value(v)
        parts.append(f'"{k}": {text}')
    return "  {" + ", ".join(parts) + "}"


def _selected(cfg: SuiteConfig) -> list[tuple[str, Callable]]:
    if not cfg.only:
        return list(REGISTRY)
    unknown = [o for o in cfg.only if o not in GROUPS]
    if unknown:
        raise ValueError(f"unknown check group(s) {unknown}; expected any of {GROUPS}")
    return [(g, fn) for g, fn in REGISTRY if g in cfg.only]


def _run_group(cfg: SuiteConfig, group: str, fn: Callable) -> list[IdentityCheck]:
    try:
        return fn(cfg)
    except fock.TruncationError as exc:
        return [IdentityCheck.make(f"{group}.configuration", "truncation policy", math.inf, 0.0,
                                   cfg.cutoff, cfg.margin, error=str(exc))]


def run_suite(config: SuiteConfig | None = None, **overrides) -> Report:
    cfg = replace(config or SuiteConfig(), **overrides)
    groups = _selected(cfg)
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            futures = [pool.submit(_run_group, cfg, g, fn) for g, fn in groups]
            results = [f.result() for f in futures]
    else:
        results = [_run_group(cfg, g, fn) for g, fn in groups]
    return Report(cfg, tuple(c for part in results for c in part))
