import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tavis_qdm.evolve import (
    InitialState,
    SpectralDomainError,
    ThreeAtomSpectral,
    TruncationMassError,
    TwoAtomSpectral,
    block_exponential_one,
    block_exponential_three_halves,
    cos_sqrt,
    evolution,
    evolution_one,
    evolve_state,
    field_amplitudes,
    full_propagator,
    parse_state,
    realize_evolution,
)
from tavis_qdm.fock import expm_hermitian, interior_compare, realize
from tavis_qdm.model import build_A, collective_spin
from tavis_qdm.opalg import QuantumMatrix

CUT, MARGIN = 40, 6
TGS = [0.3, 0.7, 1.3, 2.9]


def oracle(n, tg, cutoff=CUT):
    return expm_hermitian(realize(build_A(n), cutoff), -tg)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("tg", TGS)
def test_oracle_equivalence(n, tg):
    assert interior_compare(realize(evolution(n, tg), CUT), oracle(n, tg), MARGIN) <= 1e-9
    assert interior_compare(realize_evolution(n, tg, 1.0, CUT), oracle(n, tg), MARGIN) <= 1e-9


@pytest.mark.parametrize("n", [1, 2, 3])
def test_identity_at_t0(n):
    assert evolution(n, 0.0).max_difference(QuantumMatrix.identity(2 ** n), 30) <= 1e-15


def test_one_atom_entries():
    tg = 0.7
    U = evolution_one(tg)
    for n in range(20):
        assert U[0, 0].diag(n) == pytest.approx(math.cos(tg * math.sqrt(n + 1)))
        assert U[1, 1].diag(n) == pytest.approx(math.cos(tg * math.sqrt(n)))
    # vacuum Rabi: |e,0> -> cos(tg)|e,0> - i sin(tg)|g,1>
    (m, c), = U[1, 0].apply(0)
    assert m == 1 and c == pytest.approx(-1j * math.sin(tg))


def test_two_atom_center_entry():
    tg = 1.1
    E = block_exponential_one(tg)
    for n in range(30):
        assert E[1, 1].diag(n) == pytest.approx(math.cos(tg * math.sqrt(2 * (2 * n + 1))), abs=1e-14)


def test_three_atom_corner_entry_at_vacuum():
    tg = 0.9
    d = 16 * 4 + 9
    assert d == 73
    rd = math.sqrt(d)
    lp, lm = 10 + rd, 10 - rd
    vp, vm = -7 + rd, -7 - rd
    want = (vp * math.cos(tg * math.sqrt(lp)) - vm * math.cos(tg * math.sqrt(lm))) / (2 * rd)
    assert block_exponential_three_halves(tg)[0, 0].diag(0) == pytest.approx(want, abs=1e-14)


def test_spectral_functions_at_t0():
    two = TwoAtomSpectral(0.0)
    three = ThreeAtomSpectral(0.0)
    for n in range(1, 20):
        assert two.f(n) == 0 and two.h(n) == 0
        for name in ("f2", "f1", "f0", "fm1"):
            assert getattr(three, name)(n) == pytest.approx(1.0, abs=1e-14)
        for name in ("h1", "F1", "F0", "H1", "H0"):
            assert getattr(three, name)(n) == pytest.approx(0.0, abs=1e-14)


def test_negative_lambda_needs_zero_weight():
    # λ-(0) = -3 is only ever multiplied by v+(0) = 0
    three = ThreeAtomSpectral(1.3)
    lp, lm, vp, *_ = three.parts(0)
    assert lm == pytest.approx(-3) and vp == pytest.approx(0, abs=1e-15)
    assert math.isfinite(three.f0(0))
    two = TwoAtomSpectral(1.3)
    assert two.f(-1, weight=0.0) == 0.0
    with pytest.raises(SpectralDomainError):
        two.f(-1)


def test_cos_sqrt_at_zero():
    assert cos_sqrt(2.0, 0.0) == 1.0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_unitary_on_interior(n):
    U = realize(evolution(n, 1.7), CUT)
    assert interior_compare(U @ U.dagger(), realize(QuantumMatrix.identity(2 ** n), CUT), MARGIN) <= 1e-10


@pytest.mark.parametrize("n", [1, 2, 3])
def test_time_reversal(n):
    U = realize(evolution(n, 0.8), CUT)
    assert interior_compare(U.dagger(), realize(evolution(n, -0.8), CUT), MARGIN) <= 1e-10


@given(st.floats(-2, 2), st.floats(-2, 2), st.sampled_from([1, 2, 3]))
def test_group_property(t1, t2, n):
    cut = 24
    lhs = realize(evolution(n, t1 + t2), cut)
    rhs = realize(evolution(n, t1), cut) @ realize(evolution(n, t2), cut)
    assert interior_compare(lhs, rhs, 6) <= 1e-9


def test_propagator_at_t0_is_identity():
    for n in (1, 2, 3):
        P = full_propagator(n, 0.0).realize(12)
        assert np.abs(P.matrix - np.eye(len(P.matrix))).max() <= 1e-15


def test_omega_zero_is_interaction_only():
    P = full_propagator(2, 0.9, g=1.0, omega=0.0).realize(20)
    assert np.abs(P.matrix - realize_evolution(2, 0.9, 1.0, 20).matrix).max() <= 1e-15


def test_g_zero_is_pure_phase():
    series = evolve_state(full_propagator(2, 0.0, g=0.0), parse_state("atoms=eg;field=fock:3"),
                          np.linspace(0, 5, 11), cutoff=20)
    assert np.allclose(series.excited, [[1.0, 0.0]] * 11, atol=1e-14)
    assert np.allclose(series.mean_photons, 3.0, atol=1e-14)


def test_propagator_matches_dense_hamiltonian():
    n, t, g, w, cut = 2, 0.7, 1.3, 0.6, 30
    S = collective_spin(n)
    H = realize(build_A(n), cut).matrix * g
    H = H + w * (np.kron(S.S_3, np.eye(cut + 1)) + np.kron(np.eye(4), np.diag(np.arange(cut + 1))))
    w_, V = np.linalg.eigh(H)
    dense = (V * np.exp(-1j * t * w_)) @ V.conj().T
    P = full_propagator(n, t, g, w).realize(cut)
    idx = np.concatenate([np.arange(i * (cut + 1) + MARGIN, (i + 1) * (cut + 1) - MARGIN) for i in range(4)])
    assert np.abs(P.matrix[np.ix_(idx, idx)] - dense[np.ix_(idx, idx)]).max() <= 1e-9


def test_vacuum_rabi():
    times = np.linspace(0, 2 * np.pi, 201)
    series = evolve_state(full_propagator(1, 0.0, g=1.0, omega=0.0), parse_state("atoms=e;field=fock:0"), times)
    assert np.abs(series.excited[:, 0] - np.cos(times) ** 2).max() <= 1e-10


def test_ground_vacuum_is_stationary():
    times = np.linspace(0, 6, 13)
    series = evolve_state(full_propagator(1, 0.0), parse_state("atoms=g;field=fock:0"), times, cutoff=10,
                          margin=2)
    s = series.cutoff + 1
    amp = series.amplitudes[:, s]  # |g, 0>
    assert np.allclose(np.abs(amp), 1.0, atol=1e-14)
    assert np.allclose(series.excited, 0.0, atol=1e-14)


def test_two_atom_populations_against_oracle():
    times = np.linspace(0, 4, 9)
    cut = 30
    series = evolve_state(full_propagator(2, 0.0, omega=0.0), parse_state("atoms=ee;field=fock:0"), times, cut)
    s = cut + 1
    psi0 = np.zeros(4 * s, dtype=complex)
    psi0[0] = 1.0
    for k, t in enumerate(times):
        psi = oracle(2, t, cut).matrix @ psi0
        prob = np.abs(psi.reshape(4, s)) ** 2
        p1 = prob[0].sum() + prob[1].sum()
        p2 = prob[0].sum() + prob[2].sum()
        assert np.abs(series.excited[k] - [p1, p2]).max() <= 1e-9


def test_three_atom_coherent_conservation():
    times = np.linspace(0, 3, 7)
    series = evolve_state(full_propagator(3, 0.0), parse_state("atoms=eee;field=coherent:2,0"), times)
    assert np.abs(series.norm - 1).max() <= 1e-10
    assert np.abs(series.excitation_distribution - series.excitation_distribution[0]).max() <= 1e-10


def test_margin_must_cover_atoms():
    with pytest.raises(ValueError):
        evolve_state(full_propagator(3, 0.0), parse_state("atoms=eee;field=fock:0"), [0.0], margin=2)


def test_atom_count_mismatch():
    with pytest.raises(ValueError):
        evolve_state(full_propagator(2, 0.0), parse_state("atoms=e;field=fock:0"), [0.0])


def test_parse_state():
    st_ = parse_state("atoms=eg;field=coherent:1.5,-0.5")
    assert st_ == InitialState("eg", "coherent", alpha=1.5 - 0.5j)
    assert st_.component == 1
    assert parse_state("atoms=gge; field=fock:4").component == 6
    assert parse_state("field=fock:2;atoms=e").fock == 2


@pytest.mark.parametrize("bad", ["atoms=x;field=fock:0", "atoms=e", "atoms=e;field=fock:-1",
                                 "atoms=e;field=thermal:1", "atoms=e;field=fock", "atoms=e;field=fock:0;x=1",
                                 "atoms=e;fieldfock:0"])
def test_parse_state_errors(bad):
    with pytest.raises(ValueError):
        parse_state(bad)


def test_coherent_amplitudes():
    psi = field_amplitudes(parse_state("atoms=e;field=coherent:1,1"), 40, 6)
    assert np.linalg.norm(psi) == pytest.approx(1.0)
    ns = np.arange(41)
    assert (np.abs(psi) ** 2) @ ns == pytest.approx(2.0, abs=1e-10)
    assert np.all(psi[35:] == 0)


def test_coherent_tail_rejected():
    with pytest.raises(TruncationMassError):
        field_amplitudes(parse_state("atoms=e;field=coherent:4,0"), 20, 2)
    with pytest.raises(TruncationMassError):
        field_amplitudes(parse_state("atoms=e;field=fock:18"), 20, 4)
