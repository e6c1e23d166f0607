"""Acceptance criteria 1-8, each at its stated tolerance.

Every criterion prints one ``PASS``/``FAIL`` line (visible with ``-s``) and
the same lines are repeated in the pytest terminal summary.  Run the file
directly with ``python3 tests/test_acceptance.py`` for just these checks.
"""

import io
import json
import math
from contextlib import redirect_stdout
from fractions import Fraction

import numpy as np
import pytest

import conftest
from tavis_qdm import cli
from tavis_qdm.evolve import ThreeAtomSpectral, evolution, evolve_state, full_propagator, parse_state
from tavis_qdm.fock import (
    expm_hermitian,
    interior_compare,
    masked_compare,
    profile_identity_residual,
    realize,
)
from tavis_qdm.model import atomic_excitations, build_A, build_decomposition, build_spin_block
from tavis_qdm.opalg import NumberFunction, OperatorEntry, QuantumMatrix, SubspaceProfile
from tavis_qdm.qdm import (
    classical_eigensystem,
    classical_matrix,
    diagonalize,
    three_atom_diagonalization,
    three_atom_parameters,
)

CUT, MARGIN = 40, 6
TGS = (0.3, 0.7, 1.3, 2.9)
s = math.sqrt


def report(k, title, residuals):
    """Record one line for criterion k; residuals maps label -> (value, tolerance)."""
    def ratio(item):
        v, tol = item[1]
        return v / tol if tol else (math.inf if v else 0.0)

    worst = max(residuals.items(), key=ratio)
    ok = all(v <= tol for v, tol in residuals.values())
    label, (v, tol) = worst
    line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {title} (worst {label}: {v:.3e} <= {tol:g})"
    conftest.ACCEPTANCE_LINES[k] = line
    print(line)
    bad = {name: val for name, val in residuals.items() if val[0] > val[1]}
    assert ok, bad


def oracle(n, tg):
    return expm_hermitian(realize(build_A(n), CUT), -tg)


# --- 1 ---------------------------------------------------------------------


def test_criterion_1_oracle_equivalence():
    res = {}
    for n in (1, 2, 3):
        for tg in TGS:
            res[f"n={n} tg={tg}"] = (interior_compare(realize(evolution(n, tg), CUT), oracle(n, tg), MARGIN), 1e-9)
    report(1, "closed-form propagators equal the dense exponential", res)


# --- 2 ---------------------------------------------------------------------


def test_criterion_2_algebraic_identities():
    A1 = build_A(1)
    target = QuantumMatrix.diagonal([NumberFunction(lambda n: n + 1), NumberFunction.number()])
    B1 = build_spin_block(1).B
    D = QuantumMatrix.diagonal([NumberFunction(lambda n: 2 * (2 * n + 3)), NumberFunction(lambda n: 2 * (2 * n + 1)),
                                NumberFunction(lambda n: 2 * (2 * n - 1))])
    sq = A1 @ A1
    res = {
        "A1^2 canonical": (0.0 if sq.is_diagonal() else 1.0, 1e-12),
        "A1^2": (sq.max_difference(target, 50), 1e-12),
        "B1^3": ((B1 @ B1 @ B1).max_difference(D @ B1, 50), 1e-12),
    }
    report(2, "A1^2 = diag(N+1, N) and B1^3 = D B1 for n = 0..50", res)


# --- 3 ---------------------------------------------------------------------


def test_criterion_3_reconstruction():
    res = {}
    for j, mode in ((Fraction(1, 2), "closed_form"), (Fraction(1), "closed_form"),
                    (Fraction(3, 2), "closed_form"), (Fraction(2), "per_level")):
        r = diagonalize(j, mode)
        B = realize(build_spin_block(j).B, CUT)
        got = realize(r.reconstruct(), CUT)
        res[f"B_{j} interior"] = (interior_compare(got, B, MARGIN), 1e-9)
        res[f"B_{j} on range"] = (masked_compare(got, B, r.range.floors, MARGIN), 1e-9)
        res[f"U†U on {r.domain!r} (j={j})"] = (
            profile_identity_residual(realize(r.U.adjoint() @ r.U, CUT), r.domain), 1e-12)
        res[f"UU† on {r.range!r} (j={j})"] = (
            profile_identity_residual(realize(r.U @ r.U.adjoint(), CUT), r.range), 1e-12)
    report(3, "B_j = U D U† and U†U = 1 on the subspace profiles", res)


# --- 4 ---------------------------------------------------------------------


def qdm_exponential(n, tg):
    half = diagonalize(Fraction(1, 2)).exponential(tg)
    if n == 1:
        return realize(half, CUT)
    if n == 2:
        inner = QuantumMatrix.block_diag(QuantumMatrix.identity(1), diagonalize(1).exponential(tg))
    else:
        inner = QuantumMatrix.block_diag(half, half, three_atom_diagonalization().exponential(tg))
    return realize(inner, CUT).lift(build_decomposition(n).T)


def test_criterion_4_triple_agreement():
    res = {}
    for n in (1, 2, 3):
        for tg in TGS:
            o = oracle(n, tg)
            c = realize(evolution(n, tg), CUT)
            q = qdm_exponential(n, tg)
            res[f"n={n} tg={tg}"] = (max(interior_compare(q, c, MARGIN), interior_compare(q, o, MARGIN),
                                         interior_compare(c, o, MARGIN)), 1e-9)
    report(4, "U e^{-itgD} U† = closed form = oracle", res)


# --- 5 ---------------------------------------------------------------------


def test_criterion_5_three_atom_entry11():
    tgs = (0.0,) + TGS
    u11_res = entry_res = 0.0
    for n in range(31):
        N = n + 2
        rd = s(16 * N * N + 9)
        vp = -2 * N - 3 + rd
        p = three_atom_parameters(n)
        u11, u12 = p.u(0, 0), p.u(0, 1)
        u11_res = max(u11_res, abs(2 * u11 ** 2 - vp / (2 * rd)))
        for tg in tgs:
            mu, nu = float(p.mu), float(p.nu)
            lhs = 2 * u11 ** 2 * math.cos(tg * mu / 4) + 2 * u12 ** 2 * math.cos(tg * nu / 4)
            entry_res = max(entry_res, abs(lhs - ThreeAtomSpectral(tg).f2(N)))
    report(5, "2u11^2 = v+(n+2)/(2√d(n+2)) and the (1,1) entry = f2(n+2), n = 0..30",
           {"2u11^2": (u11_res, 1e-11), "(1,1) entry": (entry_res, 1e-11)})


# --- 6 ---------------------------------------------------------------------


def nf(fn):
    return NumberFunction(fn)


def dressed_factors():
    # transcribed as printed: every function sits left of its a or a†
    q = lambda n: s(2 * (2 * n + 3))  # noqa: E731
    qm = lambda n: s(2 * (2 * n - 1))  # noqa: E731
    qt = lambda n: s(2 * (2 * n + 1))  # noqa: E731
    r2 = s(2)
    Ut = QuantumMatrix([
        [OperatorEntry.annihilate(1, nf(lambda n: -1 / q(n))),
         OperatorEntry.annihilate(1, nf(lambda n: r2 * s(n + 2) / (s(n + 1) * q(n)))),
         OperatorEntry.annihilate(1, nf(lambda n: 1 / q(n)))],
        [-1 / r2, 0, -1 / r2],
        # f(N) a† is only evaluated at N >= 1, where 2N - 1 > 0
        [OperatorEntry.create(1, nf(lambda n: -1 / qm(n)), side="left"),
         OperatorEntry.create(1, nf(lambda n: -r2 * s(n - 1) / (s(n) * qm(n))), side="left"),
         OperatorEntry.create(1, nf(lambda n: 1 / qm(n)), side="left")],
    ])
    Dt = QuantumMatrix.diagonal([nf(qt), 0, nf(lambda n: -qt(n))])
    return Ut, Dt


def test_criterion_6_u1_ambiguity():
    res = diagonalize(1)
    U0 = QuantumMatrix.diagonal([OperatorEntry.annihilate(1, nf(lambda n: 1 / s(n + 1)))] * 3)
    Dt_alg = (U0.adjoint() @ res.D @ U0).pruned()
    Ut, Dt = dressed_factors()
    fa, fb = Dt_alg.diagonal_functions(), Dt.diagonal_functions()
    # U0 kills the vacuum, so the conjugated diagonal is compared on H_1
    d_res = max(fa[i].max_difference(fb[i], 50, start=1) for i in range(3))
    B1 = realize(build_spin_block(1).B, CUT)
    rec = interior_compare(realize(Ut @ Dt @ Ut.adjoint(), CUT), B1, MARGIN)
    dom = profile_identity_residual(realize(Ut.adjoint() @ Ut, CUT), SubspaceProfile((0, 1, 0)))
    ran = profile_identity_residual(realize(Ut @ Ut.adjoint(), CUT), SubspaceProfile((0, 0, 1)))
    dress = realize(res.U @ U0, CUT).matrix - realize(Ut, CUT).matrix
    cols = [i * (CUT + 1) + n for i in range(3) for n in range(1, CUT + 1)]
    D = res.D.diagonal_functions()
    coincident = sum(1 for n in range(31) if abs(fb[0](n) - D[0](n)) <= 1e-12 or abs(fb[2](n) - D[2](n)) <= 1e-12)
    report(6, "U(1) ambiguity: D̃, B1 = Ũ D̃ Ũ†, domain/range of Ũ, D̃ ≠ D", {
        "D̃ = Ũ0† D Ũ0": (d_res, 1e-12),
        "Ũ = U Ũ0": (float(np.abs(dress[:, cols]).max()), 1e-12),
        "B1 = Ũ D̃ Ũ†": (rec, 1e-10),
        "Ũ†Ũ on H ⊕ H_1 ⊕ H": (dom, 1e-12),
        "ŨŨ† on H ⊕ H ⊕ H_1": (ran, 1e-12),
        "coincident levels n <= 30": (coincident, 0.0),
    })


# --- 7 ---------------------------------------------------------------------

CLI_EXAMPLES = (
    ["--atoms", "1", "--state", "atoms=e;field=fock:0", "--g", "1", "--omega", "0", "--t-max", "6.28",
     "--steps", "100"],
    ["--atoms", "1", "--state", "atoms=g;field=fock:0", "--g", "1", "--omega", "0", "--t-max", "6.28",
     "--steps", "100"],
    ["--atoms", "3", "--state", "atoms=eee;field=coherent:2,0", "--cutoff", "40", "--t-max", "6.28",
     "--steps", "20"],
)


def run_cli_evolve(args):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = cli.main(["evolve", *args, "--format", "json"])
    assert code == 0
    return json.loads(buf.getvalue())


def test_criterion_7_physics():
    times = np.linspace(0, 2 * np.pi, 401)
    series = evolve_state(full_propagator(1, 0.0, g=1.0, omega=0.0), parse_state("atoms=e;field=fock:0"), times)
    res = {"P_e = cos^2(gt)": (float(np.abs(series.excited[:, 0] - np.cos(times) ** 2).max()), 1e-10)}
    for args in CLI_EXAMPLES:
        data = run_cli_evolve(args)
        n, cut = data["atoms"], data["cutoff"]
        amps = np.array(data["amplitudes"]["real"]) + 1j * np.array(data["amplitudes"]["imag"])
        prob = np.abs(amps.reshape(len(amps), 2 ** n, cut + 1)) ** 2
        norm = np.sqrt(prob.sum(axis=(1, 2)))
        label = atomic_excitations(n)[:, None] + np.arange(cut + 1)[None, :]
        dist = np.array([[p[label == m].sum() for m in range(label.max() + 1)] for p in prob])
        state = data["state"]
        res[f"norm {state}"] = (float(np.abs(norm - 1).max()), 1e-10)
        res[f"reported norm {state}"] = (float(np.abs(np.array(data["norm"]) - 1).max()), 1e-10)
        res[f"excitation {state}"] = (float(np.abs(dist - dist[0]).max()), 1e-10)
        if state == "atoms=e;field=fock:0":
            t = np.array(data["times"])
            res["CLI Rabi"] = (float(np.abs(np.array(data["excited"])[:, 0] - np.cos(t) ** 2).max()), 1e-10)
    report(7, "vacuum Rabi oscillation and conservation in the CLI examples", res)


# --- 8 ---------------------------------------------------------------------


def test_criterion_8_classical_stage():
    res = {}
    rng = np.random.default_rng(8)
    for J in range(2, 9):
        es = classical_eigensystem(J)
        res[f"XᵀX J={J}"] = (float(np.abs(es.X.T @ es.X - np.eye(J)).max()), 1e-12)
        res[f"XXᵀ J={J}"] = (float(np.abs(es.X @ es.X.T - np.eye(J)).max()), 1e-12)
        slopes = np.array(es.eigenvalue_slopes)
        worst = 0.0
        for z in [1.0, *(rng.normal(size=4) + 1j * rng.normal(size=4))]:
            W = es.X * ((np.conj(z) / abs(z)) ** np.arange(J))[:, None]
            worst = max(worst, float(np.abs(classical_matrix(J, z) @ W - W * (slopes * abs(z))).max()))
        res[f"recursion J={J}"] = (worst, 1e-12)
    printed = np.array([[1 / 2, 1 / s(2), 1 / 2], [1 / s(2), 0, -1 / s(2)], [1 / 2, -1 / s(2), 1 / 2]])
    # "exactly": agreement to the last unit of the printed surds
    res["printed X, j=1"] = (float(np.abs(classical_eigensystem(3).X - printed).max()), 2 ** -52)
    report(8, "classical eigenvectors: orthogonality, recursion and the j = 1 matrix", res)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
