"""Closed-form evolution operators exp(-i t g A_n) for one, two and three atoms.

The two- and three-atom propagators are assembled from the spin blocks:
exp(-itgA_n) = T · (⊕_b exp(-itgB_b)) · Tᵀ.  Each block exponential is a
quantum matrix whose entries are cosines and sines of tg·sqrt(λ(N)).  A few
entries reach Fock levels where λ < 0 (for example λ₋(0) = -3); the
coefficient multiplying such a term is always exactly zero, and the helpers
below refuse to evaluate a negative λ with a nonzero weight.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .fock import FockRealization, InteriorMask, realize, sector_index_sets
from .model import (
    atomic_excitations,
    build_decomposition,
    build_hamiltonian_phases,
    check_atoms,
    PhaseFactors,
)
from .opalg import NumberFunction, OperatorEntry, QuantumMatrix

__all__ = [
    "SpectralDomainError",
    "TruncationMassError",
    "TwoAtomSpectral",
    "ThreeAtomSpectral",
    "Propagator",
    "InitialState",
    "StateSeries",
    "cos_sqrt",
    "sinc_sqrt",
    "sqrt_sin",
    "evolution_one",
    "evolution_two",
    "evolution_three",
    "evolution",
    "block_exponential_half",
    "block_exponential_one",
    "block_exponential_three_halves",
    "realize_evolution",
    "full_propagator",
    "parse_state",
    "field_amplitudes",
    "evolve_state",
    "TAIL_TOL",
]

TAIL_TOL = 1e-12
_WEIGHT_TOL = 1e-12


class SpectralDomainError(ArithmeticError):
    """A negative spectral argument carried a nonzero weight."""


class TruncationMassError(ValueError):
    """Field state has too much weight beyond the trusted Fock levels."""


# ----------------------------------------------------------------------------
# entire functions of lambda
# ----------------------------------------------------------------------------


def cos_sqrt(tg: float, lam: float) -> float:
    """cos(tg·sqrt(λ)), continued to cosh(tg·sqrt(-λ)) for λ < 0."""
    if lam >= 0:
        return math.cos(tg * math.sqrt(lam))
    return math.cosh(tg * math.sqrt(-lam))


def sinc_sqrt(tg: float, lam: float) -> float:
    """sin(tg·sqrt(λ))/sqrt(λ), equal to tg at λ = 0."""
    if lam > 0:
        r = math.sqrt(lam)
        return math.sin(tg * r) / r
    if lam == 0:
        return tg
    r = math.sqrt(-lam)
    return math.sinh(tg * r) / r


def sqrt_sin(tg: float, lam: float) -> float:
    """sqrt(λ)·sin(tg·sqrt(λ)), equal to -sqrt(-λ)·sinh(tg·sqrt(-λ)) for λ < 0."""
    if lam >= 0:
        r = math.sqrt(lam)
        return r * math.sin(tg * r)
    r = math.sqrt(-lam)
    return -r * math.sinh(tg * r)


def _weighted(weight: float, fn, tg: float, lam: float) -> float:
    if lam < 0:
        if abs(weight) > _WEIGHT_TOL:
            raise SpectralDomainError(f"λ = {lam} < 0 with weight {weight}")
        return 0.0
    if weight == 0:
        return 0.0
    return weight * fn(tg, lam)


# ----------------------------------------------------------------------------
# spectral functions
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class TwoAtomSpectral:
    """f(N) = (-1 + cos(tg√(2(2N+1))))/2 and h(N) = sin(tg√(2(2N+1)))/√(2N+1)."""

    tg: float

    @staticmethod
    def lam(N: int) -> float:
        return 2 * (2 * N + 1)

    def f(self, N: int, weight: float = 1.0) -> float:
        """weight·f(N); a zero weight makes N = -1 admissible."""
        return _weighted(weight / 2, cos_sqrt, self.tg, self.lam(N)) - weight / 2

    def h(self, N: int) -> float:
        return math.sqrt(2) * _weighted(1.0, sinc_sqrt, self.tg, self.lam(N))


def _d(N: int) -> float:
    return 16 * N * N + 9


@dataclass(frozen=True)
class ThreeAtomSpectral:
    """The nine functions entering exp(-itgB_{3/2}).

    With d = 16N²+9, λ± = 5N ± √d, v± = -2N-3 ± √d and w± = 2N-3 ± √d, and
    c± = cos(tg√λ±), s± = sin(tg√λ±)/√λ±, S± = √λ± sin(tg√λ±):

        f2 = (v+ c+ - v- c-)/2√d      f1 = (w+ c+ - w- c-)/2√d
        f0 = (v+ c- - v- c+)/2√d      f-1 = (w+ c- - w- c+)/2√d
        h1 = (c+ - c-)/2√d
        F1 = (w+ s+ - w- s-)/2√d      F0 = (v+ s- - v- s+)/2√d
        H1 = (S+ - S-)/2√d            H0 = (s+ - s-)/2√d
    """

    tg: float

    @staticmethod
    def parts(N: int) -> tuple[float, float, float, float, float, float, float]:
        rd = math.sqrt(_d(N))
        return (5 * N + rd, 5 * N - rd, -2 * N - 3 + rd, -2 * N - 3 - rd,
                2 * N - 3 + rd, 2 * N - 3 - rd, 2 * rd)

    def _pair(self, N: int, fn, wp: float, wm: float, swap: bool = False) -> float:
        # (wp·fn(λ+) - wm·fn(λ-))/2√d, or with λ± exchanged
        lp, lm, *_, den = self.parts(N)
        if swap:
            lp, lm = lm, lp
        return (_weighted(wp, fn, self.tg, lp) - _weighted(wm, fn, self.tg, lm)) / den

    def f2(self, N: int) -> float:
        _, _, vp, vm, _, _, _ = self.parts(N)
        return self._pair(N, cos_sqrt, vp, vm)

    def f1(self, N: int) -> float:
        *_, wp, wm, _ = self.parts(N)
        return self._pair(N, cos_sqrt, wp, wm)

    def f0(self, N: int) -> float:
        _, _, vp, vm, _, _, _ = self.parts(N)
        return self._pair(N, cos_sqrt, vp, vm, swap=True)

    def fm1(self, N: int) -> float:
        *_, wp, wm, _ = self.parts(N)
        return self._pair(N, cos_sqrt, wp, wm, swap=True)

    def h1(self, N: int) -> float:
        return self._pair(N, cos_sqrt, 1.0, 1.0)

    def F1(self, N: int) -> float:
        *_, wp, wm, _ = self.parts(N)
        return self._pair(N, sinc_sqrt, wp, wm)

    def F0(self, N: int) -> float:
        _, _, vp, vm, _, _, _ = self.parts(N)
        return self._pair(N, sinc_sqrt, vp, vm, swap=True)

    def H1(self, N: int) -> float:
        return self._pair(N, sqrt_sin, 1.0, 1.0)

    def H0(self, N: int) -> float:
        return self._pair(N, sinc_sqrt, 1.0, 1.0)


# ----------------------------------------------------------------------------
# block exponentials
# ----------------------------------------------------------------------------


def _nf(fn, label: str) -> NumberFunction:
    return NumberFunction(fn, label)


def _left_of_a(q: int, fn, label: str, c: complex = 1) -> OperatorEntry:
    return OperatorEntry.annihilate(q, _nf(fn, label) * c, side="left")


def _left_of_ad(p: int, fn, label: str, c: complex = 1) -> OperatorEntry:
    return OperatorEntry.create(p, _nf(fn, label) * c, side="left")


def _right_of_ad(p: int, fn, label: str, c: complex = 1) -> OperatorEntry:
    return OperatorEntry.create(p, _nf(fn, label) * c, side="right")


def block_exponential_half(tg: float) -> QuantumMatrix:
    """exp(-itgB_{1/2}) = [[cos(tg√(N+1)), -i s(N+1) a], [-i a† s(N+1), cos(tg√N)]]."""
    s = lambda n: sinc_sqrt(tg, n + 1)  # noqa: E731
    return QuantumMatrix([
        [_nf(lambda n: math.cos(tg * math.sqrt(n + 1)), "cos(tg√(N+1))"),
         _left_of_a(1, s, "sin(tg√(N+1))/√(N+1)", -1j)],
        [_right_of_ad(1, s, "sin(tg√(N+1))/√(N+1)", -1j),
         _nf(lambda n: math.cos(tg * math.sqrt(n)), "cos(tg√N)")],
    ])


def block_exponential_one(tg: float) -> QuantumMatrix:
    """exp(-itgB_1) with f, h as in :class:`TwoAtomSpectral`."""
    sp = TwoAtomSpectral(tg)
    return QuantumMatrix([
        [_nf(lambda n: 1 + sp.f(n + 1, (2 * n + 2) / (2 * n + 3)), "1+(2N+2)/(2N+3)·f(N+1)"),
         _left_of_a(1, lambda n: sp.h(n + 1), "h(N+1)", -1j),
         _left_of_a(2, lambda n: sp.f(n + 1, 2 / (2 * n + 3)), "2/(2N+3)·f(N+1)")],
        [_right_of_ad(1, lambda n: sp.h(n + 1), "h(N+1)", -1j),
         _nf(lambda n: 1 + sp.f(n, 2.0), "1+2f(N)"),
         _left_of_a(1, sp.h, "h(N)", -1j)],
        [_right_of_ad(2, lambda n: sp.f(n + 1, 2 / (2 * n + 3)), "2/(2N+3)·f(N+1)"),
         _right_of_ad(1, sp.h, "h(N)", -1j),
         # the weight 2N/(2N-1) vanishes at N = 0, where f(N-1) leaves the real branch
         _nf(lambda n: 1 + sp.f(n - 1, 2 * n / (2 * n - 1)), "1+2N/(2N-1)·f(N-1)")],
    ])


def block_exponential_three_halves(tg: float) -> QuantumMatrix:
    """exp(-itgB_{3/2}); every function sits to the left of its a or a† power."""
    sp = ThreeAtomSpectral(tg)
    r3 = math.sqrt(3)
    return QuantumMatrix([
        [_nf(lambda n: sp.f2(n + 2), "f2(N+2)"),
         _left_of_a(1, lambda n: sp.F1(n + 2), "F1(N+2)", -1j * r3),
         _left_of_a(2, lambda n: sp.h1(n + 2), "h1(N+2)", 2 * r3),
         _left_of_a(3, lambda n: sp.H0(n + 2), "H0(N+2)", -6j)],
        [_left_of_ad(1, lambda n: sp.F1(n + 1), "F1(N+1)", -1j * r3),
         _nf(lambda n: sp.f1(n + 1), "f1(N+1)"),
         _left_of_a(1, lambda n: sp.H1(n + 1), "H1(N+1)", -2j),
         _left_of_a(2, lambda n: sp.h1(n + 1), "h1(N+1)", 2 * r3)],
        [_left_of_ad(2, sp.h1, "h1(N)", 2 * r3),
         _left_of_ad(1, sp.H1, "H1(N)", -2j),
         _nf(sp.f0, "f0(N)"),
         _left_of_a(1, sp.F0, "F0(N)", -1j * r3)],
        [_left_of_ad(3, lambda n: sp.H0(n - 1), "H0(N-1)", -6j),
         _left_of_ad(2, lambda n: sp.h1(n - 1), "h1(N-1)", 2 * r3),
         _left_of_ad(1, lambda n: sp.F0(n - 1), "F0(N-1)", -1j * r3),
         _nf(lambda n: sp.fm1(n - 1), "f-1(N-1)")],
    ])


def evolution_one(t: float, g: float = 1.0) -> QuantumMatrix:
    return block_exponential_half(t * g)


def evolution_two(t: float, g: float = 1.0) -> QuantumMatrix:
    dec = build_decomposition(2)
    inner = QuantumMatrix.block_diag(QuantumMatrix.identity(1), block_exponential_one(t * g))
    return inner.conjugate_by(dec.T)


def evolution_three(t: float, g: float = 1.0) -> QuantumMatrix:
    dec = build_decomposition(3)
    half = block_exponential_half(t * g)
    inner = QuantumMatrix.block_diag(half, half, block_exponential_three_halves(t * g))
    return inner.conjugate_by(dec.T)


def evolution(n: int, t: float, g: float = 1.0) -> QuantumMatrix:
    """exp(-itgA_n) for n in {1, 2, 3}."""
    check_atoms(n)
    return (evolution_one, evolution_two, evolution_three)[n - 1](t, g)


def realize_evolution(n: int, t: float, g: float, cutoff: int) -> FockRealization:
    """Realize exp(-itgA_n) block by block, then rotate with T."""
    check_atoms(n)
    tg = t * g
    if n == 1:
        return realize(block_exponential_half(tg), cutoff)
    if n == 2:
        inner = QuantumMatrix.block_diag(QuantumMatrix.identity(1), block_exponential_one(tg))
    else:
        half = block_exponential_half(tg)
        inner = QuantumMatrix.block_diag(half, half, block_exponential_three_halves(tg))
    return realize(inner, cutoff).lift(build_decomposition(n).T)


# ----------------------------------------------------------------------------
# full propagator and states
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class Propagator:
    """U(t) = (exp(-itωS3) ⊗ exp(-itωN)) · exp(-itgA_n) at resonance."""

    n: int
    t: float
    g: float
    omega: float
    interaction: QuantumMatrix = field(repr=False)
    phases: PhaseFactors = field(repr=False)

    def realize(self, cutoff: int) -> FockRealization:
        inter = realize_evolution(self.n, self.t, self.g, cutoff)
        field_phase = self.phases.field.values(cutoff)
        diag = np.concatenate([a * field_phase for a in self.phases.atomic])
        return FockRealization(cutoff, inter.blockdim, diag[:, None] * inter.matrix)

    def apply(self, psi: np.ndarray, cutoff: int) -> np.ndarray:
        return self.realize(cutoff).matrix @ psi


def full_propagator(n: int, t: float, g: float = 1.0, omega: float = 1.0) -> Propagator:
    check_atoms(n)
    return Propagator(n, t, g, omega, evolution(n, t, g), build_hamiltonian_phases(n, omega, t))


@dataclass(frozen=True)
class InitialState:
    """Product state |atoms⟩ ⊗ |field⟩; ``atoms`` is a string over {e, g}."""

    atoms: str
    field_kind: str
    fock: int = 0
    alpha: complex = 0j

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def component(self) -> int:
        # excited is basis index 0 for every atom, atom 1 is the most significant bit
        return int("".join("0" if c == "e" else "1" for c in self.atoms), 2)


def parse_state(spec: str) -> InitialState:
    """Parse ``atoms=<e/g string>;field=fock:<m>|coherent:<re>,<im>``."""
    parts = {}
    for item in spec.split(";"):
        item = item.strip()
        if not item:
            continue
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"malformed state item {item!r}")
        parts[key.strip()] = value.strip()
    if set(parts) != {"atoms", "field"}:
        raise ValueError(f"state spec needs exactly 'atoms' and 'field', got {sorted(parts)}")
    atoms = parts["atoms"]
    if not atoms or set(atoms) - {"e", "g"}:
        raise ValueError(f"atoms must be a nonempty string over 'e'/'g', got {atoms!r}")
    kind, sep, arg = parts["field"].partition(":")
    if not sep:
        raise ValueError(f"field must be 'fock:<m>' or 'coherent:<re>,<im>', got {parts['field']!r}")
    if kind == "fock":
        m = int(arg)
        if m < 0:
            raise ValueError("Fock level must be nonnegative")
        return InitialState(atoms, "fock", fock=m)
    if kind == "coherent":
        re, sep, im = arg.partition(",")
        return InitialState(atoms, "coherent", alpha=complex(float(re), float(im) if sep else 0.0))
    raise ValueError(f"unknown field kind {kind!r}")


def field_amplitudes(state: InitialState, cutoff: int, margin: int) -> np.ndarray:
    """Field amplitudes on |0⟩..|cutoff⟩, rejecting states with weight past cutoff - margin."""
    top = InteriorMask(margin).levels(cutoff)[-1]
    psi = np.zeros(cutoff + 1, dtype=complex)
    if state.field_kind == "fock":
        if state.fock > top:
            raise TruncationMassError(f"Fock level {state.fock} exceeds trusted level {top}")
        psi[state.fock] = 1.0
        return psi
    alpha = state.alpha
    if alpha == 0:
        psi[0] = 1.0
        return psi
    # log-space weights avoid overflow in alpha^n / sqrt(n!)
    mean = abs(alpha) ** 2
    ns = np.arange(cutoff + 1)
    log_fact = np.array([math.lgamma(k + 1) for k in ns])
    psi = np.exp(ns * math.log(abs(alpha)) - 0.5 * log_fact - mean / 2 + 1j * ns * np.angle(alpha))
    # Poisson mass above ``top``, summed term by term rather than as 1 - retained
    far = np.arange(top + 1, top + 1 + int(10 * mean) + 200)
    tail = float(np.exp(far * math.log(mean) - mean - np.array([math.lgamma(k + 1) for k in far])).sum())
    if tail > TAIL_TOL:
        raise TruncationMassError(f"coherent tail mass {tail:.3e} above level {top} exceeds {TAIL_TOL}")
    psi[top + 1:] = 0.0
    return psi / np.linalg.norm(psi)


@dataclass(frozen=True)
class StateSeries:
    """Time series of an evolved state; arrays are indexed by time first."""

    n: int
    cutoff: int
    times: np.ndarray
    amplitudes: np.ndarray = field(repr=False)
    excited: np.ndarray = field(repr=False)
    mean_photons: np.ndarray = field(repr=False)
    norm: np.ndarray = field(repr=False)
    excitation_distribution: np.ndarray = field(repr=False)


def evolve_state(p: Propagator, initial: InitialState, times: Sequence[float],
                 cutoff: int = 40, margin: int = 6) -> StateSeries:
    """Evolve ``initial`` with the propagator family of ``p`` (same n, g, ω) at each time."""
    if initial.n_atoms != p.n:
        raise ValueError(f"state has {initial.n_atoms} atoms, propagator {p.n}")
    if margin < p.n:
        raise ValueError(f"margin {margin} must be at least the atom count {p.n}")
    L = 2 ** p.n
    s = cutoff + 1
    psi0 = np.zeros(L * s, dtype=complex)
    psi0[initial.component * s:(initial.component + 1) * s] = field_amplitudes(initial, cutoff, margin)

    bits = np.array([[1.0 if not (k >> (p.n - 1 - a)) & 1 else 0.0 for a in range(p.n)]
                     for k in range(L)])
    levels = np.arange(s)
    exc = atomic_excitations(p.n)
    sectors = sector_index_sets(cutoff, exc)
    labels = sorted(sectors)

    times = np.asarray(list(times), dtype=float)
    amps, excited, photons, norms, dists = [], [], [], [], []
    for t in times:
        U = full_propagator(p.n, float(t), p.g, p.omega).realize(cutoff)
        psi = U.matrix @ psi0
        prob = np.abs(psi.reshape(L, s)) ** 2
        amps.append(psi)
        excited.append(bits.T @ prob.sum(axis=1))
        photons.append(float(prob.sum(axis=0) @ levels))
        norms.append(float(np.sqrt(prob.sum())))
        flat = prob.ravel()
        dists.append([flat[sectors[m]].sum() for m in labels])
    return StateSeries(p.n, cutoff, times, np.array(amps), np.array(excited), np.array(photons),
                       np.array(norms), np.array(dists))
