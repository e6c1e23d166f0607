"""Tavis-Cummings building blocks for one, two and three atoms.

Atomic basis: each atom is ordered (excited, ground), so sigma_+ = [[0, 1], [0, 0]]
raises ground to excited, and n atoms use the binary tensor order with atom 1
as the leftmost factor.  Component index 0 is therefore "all excited".
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .opalg import NumberFunction, OperatorEntry, QuantumMatrix

__all__ = [
    "SUPPORTED_ATOMS",
    "SIGMA_PLUS",
    "SIGMA_MINUS",
    "SIGMA_3",
    "CollectiveSpin",
    "SpinBlock",
    "Decomposition",
    "PhaseFactors",
    "check_atoms",
    "parse_spin",
    "collective_spin",
    "build_A",
    "build_spin_block",
    "build_decomposition",
    "build_hamiltonian_phases",
    "atomic_excitations",
]

SUPPORTED_ATOMS = (1, 2, 3)

SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=float)
SIGMA_MINUS = SIGMA_PLUS.T.copy()
SIGMA_3 = np.diag([1.0, -1.0])

_R2, _R3, _R6 = math.sqrt(2), math.sqrt(3), math.sqrt(6)

# Intertwiners: T^T A_n T is block diagonal.
_T2 = np.array([
    [0, 1, 0, 0],
    [1 / _R2, 0, 1 / _R2, 0],
    [-1 / _R2, 0, 1 / _R2, 0],
    [0, 0, 0, 1],
])

_T3 = np.array([
    [0, 0, 0, 0, 1, 0, 0, 0],
    [1 / _R2, 0, 1 / _R6, 0, 0, 1 / _R3, 0, 0],
    [-1 / _R2, 0, 1 / _R6, 0, 0, 1 / _R3, 0, 0],
    [0, 0, 0, _R2 / _R3, 0, 0, 1 / _R3, 0],
    [0, 0, -_R2 / _R3, 0, 0, 1 / _R3, 0, 0],
    [0, 1 / _R2, 0, -1 / _R6, 0, 0, 1 / _R3, 0],
    [0, -1 / _R2, 0, -1 / _R6, 0, 0, 1 / _R3, 0],
    [0, 0, 0, 0, 0, 0, 0, 1],
])


def check_atoms(n: int) -> int:
    if n not in SUPPORTED_ATOMS:
        raise ValueError(f"unsupported atom count {n!r}; expected one of {SUPPORTED_ATOMS}")
    return n


def parse_spin(j) -> Fraction:
    """Validate a spin quantum number: j >= 1/2 with 2j integral."""
    if isinstance(j, str):
        frac = Fraction(j)
    else:
        frac = Fraction(j).limit_denominator(2)
        if abs(float(frac) - float(j)) > 1e-12:
            raise ValueError(f"spin must be a half-integer, got {j!r}")
    if frac.denominator not in (1, 2) or frac < Fraction(1, 2):
        raise ValueError(f"spin must be a half-integer >= 1/2, got {j!r}")
    return frac


def _local(op: np.ndarray, i: int, n: int) -> np.ndarray:
    return np.kron(np.kron(np.eye(2 ** i), op), np.eye(2 ** (n - i - 1)))


@dataclass(frozen=True)
class CollectiveSpin:
    S_plus: np.ndarray = field(repr=False)
    S_minus: np.ndarray = field(repr=False)
    S_3: np.ndarray = field(repr=False)

    @property
    def L(self) -> int:
        return self.S_3.shape[0]


def collective_spin(n: int) -> CollectiveSpin:
    check_atoms(n)
    Sp = sum(_local(SIGMA_PLUS, i, n) for i in range(n))
    Sm = sum(_local(SIGMA_MINUS, i, n) for i in range(n))
    S3 = sum(_local(SIGMA_3, i, n) for i in range(n)) / 2
    return CollectiveSpin(Sp, Sm, S3)


def atomic_excitations(n: int) -> np.ndarray:
    """Number of excited atoms in each atomic basis state."""
    check_atoms(n)
    return np.array([n - bin(k).count("1") for k in range(2 ** n)], dtype=int)


_A = OperatorEntry.annihilate(1)
_AD = OperatorEntry.create(1)


def build_A(n: int) -> QuantumMatrix:
    """A = S_+ ⊗ a + S_- ⊗ a† as an L×L quantum matrix."""
    spin = collective_spin(n)
    L = spin.L
    rows = []
    for k in range(L):
        row = []
        for l in range(L):
            e = OperatorEntry.zero()
            if spin.S_plus[k, l]:
                e = e + _A.scale(float(spin.S_plus[k, l]))
            if spin.S_minus[k, l]:
                e = e + _AD.scale(float(spin.S_minus[k, l]))
            row.append(e)
        rows.append(row)
    return QuantumMatrix(rows)


def _surd_label(m: int) -> str:
    r = math.isqrt(m)
    return str(r) if r * r == m else f"√{m}"


@dataclass(frozen=True)
class SpinBlock:
    j: Fraction
    B: QuantumMatrix = field(repr=False)

    @property
    def J(self) -> int:
        return int(2 * self.j + 1)


def build_spin_block(j) -> SpinBlock:
    """Tridiagonal B_j: superdiagonal sqrt((J-k)k)·a, subdiagonal the adjoints."""
    spin = parse_spin(j)
    J = int(2 * spin + 1)
    rows = [[OperatorEntry.zero()] * J for _ in range(J)]
    for k in range(1, J):
        w = (J - k) * k
        c = NumberFunction.const(math.sqrt(w), _surd_label(w))
        rows[k - 1][k] = OperatorEntry.annihilate(1, c)
        rows[k][k - 1] = OperatorEntry.create(1, c)
    return SpinBlock(spin, QuantumMatrix(rows))


def _zero_block() -> SpinBlock:
    return SpinBlock(Fraction(0), QuantumMatrix.zeros(1))


@dataclass(frozen=True)
class Decomposition:
    n: int
    T: np.ndarray = field(repr=False)
    blocks: tuple[SpinBlock, ...]

    def block_matrix(self) -> QuantumMatrix:
        return QuantumMatrix.block_diag(*(b.B for b in self.blocks))

    @property
    def offsets(self) -> list[int]:
        out, off = [], 0
        for b in self.blocks:
            out.append(off)
            off += b.J
        return out


def build_decomposition(n: int) -> Decomposition:
    check_atoms(n)
    if n == 1:
        raise ValueError("a single atom needs no decomposition: A_1 is already B_1/2")
    if n == 2:
        return Decomposition(2, _T2.copy(), (_zero_block(), build_spin_block(1)))
    half = build_spin_block(Fraction(1, 2))
    return Decomposition(3, _T3.copy(), (half, half, build_spin_block(Fraction(3, 2))))


@dataclass(frozen=True)
class PhaseFactors:
    """exp(-i t ω S_3) on the atoms and n -> exp(-i t ω n) on the field."""

    atomic: np.ndarray
    field: NumberFunction


def build_hamiltonian_phases(n: int, omega: float, t: float) -> PhaseFactors:
    spin = collective_spin(n)
    s3 = np.diag(spin.S_3)
    atomic = np.exp(-1j * t * omega * s3)
    wt = t * omega
    field_phase = NumberFunction(lambda m: cmath.exp(-1j * wt * m), f"exp(-i·{wt!r}·N)")
    return PhaseFactors(atomic, field_phase)
