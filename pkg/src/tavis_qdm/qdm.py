"""Quantum diagonalization of the spin-j quantum matrices B_j.

The pipeline has three stages:

1. classicalize: replace a -> z, a† -> conj(z) and diagonalize the resulting
   tridiagonal matrix C(z) = W D_C W† (eigenvalues (J - 2i + 1)|z|);
2. quantize: promote W to the quantum isometry
   U1[k][i] = x_ki (a†)^(k-1) / sqrt((N+k-1)...(N+1));
3. reduce: R = U1† B U1 contains only functions of N, so R(n) is an ordinary
   real symmetric matrix at every Fock level and is diagonalized as
   R = U2 D U2†.

Then B = U D U† with U = U1 U2.  Closed forms are available for j = 1/2, 1 and
3/2; any j can be handled level by level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np

from .model import SpinBlock, build_spin_block, parse_spin
from .opalg import (
    EXACT_TOL,
    N_CHECK,
    NumberFunction,
    OperatorEntry,
    QuantumMatrix,
    SubspaceProfile,
    rising,
)

__all__ = [
    "AlgebraError",
    "DegenerateSpectrumError",
    "ClassicalEigenSystem",
    "Classicalization",
    "QuantumIsometry",
    "ReducedHermitian",
    "DiagonalizationResult",
    "ThreeAtomParameters",
    "classical_eigensystem",
    "classicalize",
    "quantize",
    "reduce",
    "reduced_formula",
    "diagonalize_reduced",
    "diagonalize",
    "three_atom_parameters",
    "three_atom_diagonalization",
    "one_atom_U",
    "two_atom_U",
    "CLOSED_FORM_SPINS",
    "normalize_mode",
]

CLOSED_FORM_SPINS = (Fraction(1, 2), Fraction(1), Fraction(3, 2))
_MODES = ("closed_form", "per_level")


class AlgebraError(RuntimeError):
    """An identity that must hold structurally did not."""


class DegenerateSpectrumError(RuntimeError):
    """A per-level eigenproblem has (near-)degenerate eigenvalues."""


def normalize_mode(mode: str) -> str:
    m = mode.replace("-", "_")
    if m not in _MODES:
        raise ValueError(f"unknown diagonalization mode {mode!r}; expected one of {_MODES}")
    return m


# ----------------------------------------------------------------------------
# (i) classical stage
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassicalEigenSystem:
    J: int
    X: np.ndarray = field(repr=False)
    Y: np.ndarray = field(repr=False)

    @property
    def eigenvalue_slopes(self) -> list[int]:
        return [self.J - 2 * i + 1 for i in range(1, self.J + 1)]


def _hop(J: int, k: int) -> float:
    """sqrt((J-k)k), the k-th superdiagonal weight (1-based k)."""
    return math.sqrt((J - k) * k)


def classical_eigensystem(J: int) -> ClassicalEigenSystem:
    if J < 2:
        raise ValueError(f"J must be >= 2, got {J}")
    Y = np.zeros((J, J))
    for i in range(1, J + 1):
        slope = J - 2 * i + 1
        Y[0, i - 1] = 1.0
        for k in range(1, J):
            prev = Y[k - 2, i - 1] if k >= 2 else 0.0
            Y[k, i - 1] = (slope * Y[k - 1, i - 1] - _hop(J, k - 1) * prev) / _hop(J, k)
    X = Y / np.sqrt((Y ** 2).sum(axis=0))
    return ClassicalEigenSystem(J, X, Y)


def classical_matrix(J: int, z: complex) -> np.ndarray:
    C = np.zeros((J, J), dtype=complex)
    for k in range(1, J):
        C[k - 1, k] = _hop(J, k) * z
        C[k, k - 1] = _hop(J, k) * np.conj(z)
    return C


@dataclass(frozen=True)
class Classicalization:
    C: np.ndarray = field(repr=False)
    W: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray
    residual: float


def classicalize(j, z: complex) -> Classicalization:
    """C(z) = W D_C W† with W_ki = x_ki (conj(z)/|z|)^(k-1)."""
    z = complex(z)
    if z == 0:
        raise ValueError("the classical unitary is undefined at z = 0")
    J = int(2 * parse_spin(j) + 1)
    es = classical_eigensystem(J)
    phase = np.conj(z) / abs(z)
    W = es.X * (phase ** np.arange(J))[:, None]
    evals = np.array(es.eigenvalue_slopes, dtype=float) * abs(z)
    C = classical_matrix(J, z)
    residual = float(np.abs(W @ np.diag(evals) @ W.conj().T - C).max())
    return Classicalization(C, W, evals, residual)


# ----------------------------------------------------------------------------
# (ii) quantization
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class QuantumIsometry:
    """U1 with U1† U1 = 1 on ``domain`` and U1 U1† = 1 on ``range``."""

    U1: QuantumMatrix = field(repr=False)
    domain: SubspaceProfile
    range: SubspaceProfile


def _inv_sqrt_rising(k: int) -> NumberFunction:
    r = rising(k)
    return NumberFunction(lambda n: 1 / math.sqrt(r(n).real), f"1/√((N+1)..(N+{k}))")


def _quantized_column_entry(k: int, coeff: NumberFunction) -> OperatorEntry:
    """(a†)^k / sqrt(N(N-1)...(N-k+1)) · coeff(N), stored as (a†)^k [coeff/sqrt((N+1)..(N+k))]."""
    if k == 0:
        return OperatorEntry(coeff)
    return OperatorEntry.create(k, _inv_sqrt_rising(k) * coeff)


def quantize(es: ClassicalEigenSystem) -> QuantumIsometry:
    J = es.J
    rows = []
    for k in range(J):
        row = []
        for i in range(J):
            x = float(es.X[k, i])
            row.append(OperatorEntry.zero() if x == 0 else _quantized_column_entry(k, NumberFunction.const(x)))
        rows.append(row)
    return QuantumIsometry(QuantumMatrix(rows), SubspaceProfile.full(J), SubspaceProfile(range(J)))


# ----------------------------------------------------------------------------
# (iii) reduction to a classical matrix of number functions
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ReducedHermitian:
    R: QuantumMatrix = field(repr=False)

    @property
    def J(self) -> int:
        return self.R.dim

    def per_level(self, n: int) -> np.ndarray:
        return np.array([[self.R.entries[k][i].diag(n).real for i in range(self.J)] for k in range(self.J)])


def reduce(block: SpinBlock, iso: QuantumIsometry, n_check: int = N_CHECK,
           tol: float = EXACT_TOL) -> ReducedHermitian:
    if block.J != iso.U1.dim:
        raise ValueError(f"block dimension {block.J} does not match isometry {iso.U1.dim}")
    U1 = iso.U1
    R = (U1.adjoint() @ block.B @ U1).pruned(n_check, tol)
    for k in range(R.dim):
        for i in range(R.dim):
            if not R.entries[k][i].is_pure_function:
                raise AlgebraError(f"R[{k}][{i}] retains ladder operators: {R.entries[k][i]}")
    return ReducedHermitian(R)


def reduced_formula(es: ClassicalEigenSystem) -> QuantumMatrix:
    """r_ki(N) = sum_l sqrt((J-l+1)(l-1)) (x_{l-1,k} x_{l,i} + x_{l,k} x_{l-1,i}) sqrt(N+l-1)."""
    J, X = es.J, es.X

    def entry(k: int, i: int) -> OperatorEntry:
        weights = [(l, _hop(J, l - 1) * (X[l - 2, k] * X[l - 1, i] + X[l - 1, k] * X[l - 2, i]))
                   for l in range(2, J + 1)]
        weights = [(l, w) for l, w in weights if abs(w) > 1e-15]
        if not weights:
            return OperatorEntry.zero()
        return OperatorEntry(NumberFunction(lambda n: sum(w * math.sqrt(n + l - 1) for l, w in weights),
                                            f"r_{k + 1}{i + 1}(N)"))

    return QuantumMatrix([[entry(k, i) for i in range(J)] for k in range(J)])


# ----------------------------------------------------------------------------
# closed forms
# ----------------------------------------------------------------------------


def _nf(fn, label: str) -> NumberFunction:
    return NumberFunction(fn, label)


def _sq(x: float) -> float:
    return math.sqrt(x)


def _j_half_factors() -> tuple[QuantumMatrix, QuantumMatrix]:
    D = QuantumMatrix.diagonal([_nf(lambda n: _sq(n + 1), "√(N+1)"),
                                _nf(lambda n: -_sq(n + 1), "-√(N+1)")])
    return QuantumMatrix.identity(2), D


def _j_one_factors() -> tuple[QuantumMatrix, QuantumMatrix]:
    q = lambda n: _sq(2 * (2 * n + 3))  # noqa: E731
    p = lambda n: _sq(n + 2) + _sq(n + 1)  # noqa: E731
    m = lambda n: _sq(n + 2) - _sq(n + 1)  # noqa: E731
    r2 = math.sqrt(2)
    U2 = QuantumMatrix([
        [_nf(lambda n: -(q(n) + p(n)) / (2 * q(n)), "-(q+s)/(2q)"),
         _nf(lambda n: m(n) / (r2 * q(n)), "d/(√2 q)"),
         _nf(lambda n: -(q(n) - p(n)) / (2 * q(n)), "-(q-s)/(2q)")],
        [_nf(lambda n: m(n) / (r2 * q(n)), "d/(√2 q)"),
         _nf(lambda n: p(n) / q(n), "s/q"),
         _nf(lambda n: -m(n) / (r2 * q(n)), "-d/(√2 q)")],
        [_nf(lambda n: (q(n) - p(n)) / (2 * q(n)), "(q-s)/(2q)"),
         _nf(lambda n: m(n) / (r2 * q(n)), "d/(√2 q)"),
         _nf(lambda n: (q(n) + p(n)) / (2 * q(n)), "(q+s)/(2q)")],
    ])
    D = QuantumMatrix.diagonal([_nf(q, "√(2(2N+3))"), 0, _nf(lambda n: -q(n), "-√(2(2N+3))")])
    return U2, D


def one_atom_U() -> QuantumMatrix:
    """(1/√2)[[1, 1], [a†/√N... , -a†/√N...]] written with a† on the left."""
    r = 1 / math.sqrt(2)
    c = _inv_sqrt_rising(1) * r
    return QuantumMatrix([
        [OperatorEntry.scalar(r), OperatorEntry.scalar(r)],
        [OperatorEntry.create(1, c), OperatorEntry.create(1, -c)],
    ])


def two_atom_U() -> QuantumMatrix:
    """The explicit two-atom unitary factor, transcribed entry by entry."""
    q = lambda n: _sq(2 * (2 * n + 3))  # noqa: E731
    L = lambda f, p, lab: OperatorEntry.create(p, _nf(f, lab), side="left")  # noqa: E731
    r2 = math.sqrt(2)
    return QuantumMatrix([
        [_nf(lambda n: -_sq(n + 1) / q(n), "-√(N+1)/√(2(2N+3))"),
         _nf(lambda n: r2 * _sq(n + 2) / q(n), "√2√(N+2)/√(2(2N+3))"),
         _nf(lambda n: _sq(n + 1) / q(n), "√(N+1)/√(2(2N+3))")],
        # 1/sqrt(N) to the left of a† is only ever evaluated at N >= 1
        [L(lambda n: -1 / (r2 * _sq(n)) if n else 0.0, 1, "-1/(√2√N)"),
         0,
         L(lambda n: -1 / (r2 * _sq(n)) if n else 0.0, 1, "-1/(√2√N)")],
        [L(lambda n: -1 / (_sq(n - 1) * _sq(2 * (2 * n - 1))) if n >= 2 else 0.0, 2,
           "-1/(√(N-1)√(2(2N-1)))"),
         L(lambda n: -r2 / (_sq(n) * _sq(2 * (2 * n - 1))) if n >= 2 else 0.0, 2,
           "-√2/(√N√(2(2N-1)))"),
         L(lambda n: 1 / (_sq(n - 1) * _sq(2 * (2 * n - 1))) if n >= 2 else 0.0, 2,
           "1/(√(N-1)√(2(2N-1)))")],
    ])


@dataclass(frozen=True)
class ThreeAtomParameters:
    """beta/gamma data at one Fock level, with 40-digit intermediates kept."""

    n: int
    x: mpmath.mpf
    y: mpmath.mpf
    b: mpmath.mpf
    c: mpmath.mpf
    mu: mpmath.mpf
    nu: mpmath.mpf
    beta: mpmath.mpf
    gamma: mpmath.mpf
    coefficients: np.ndarray = field(repr=False)

    def u(self, k: int, i: int) -> float:
        """Classical part of u_{k+1,i+1} (without the (a†)^k / sqrt(...) factor)."""
        return float(self.coefficients[k, i])


_MP_DPS = 40


@lru_cache(maxsize=None)
def three_atom_parameters(n: int) -> ThreeAtomParameters:
    # b, c and the beta/gamma numerators cancel catastrophically in doubles
    with mpmath.workdps(_MP_DPS):
        N = mpmath.mpf(n)
        s1, s2, s3 = mpmath.sqrt(N + 1), mpmath.sqrt(N + 2), mpmath.sqrt(N + 3)
        x = 3 * s1 + 6 * s2 + 3 * s3
        y = 3 * s1 - 2 * s2 + 3 * s3
        b = 2 * mpmath.sqrt(3) * (s1 - s3)
        c = mpmath.sqrt(3) * (s1 - 2 * s2 + s3)
        if b == 0 or c == 0:
            raise ArithmeticError(f"beta/gamma denominators vanish at n={n}")
        M = N + 2
        d = 16 * M ** 2 + 9
        mu = 4 * mpmath.sqrt(5 * M + mpmath.sqrt(d))
        nu = 4 * mpmath.sqrt(5 * M - mpmath.sqrt(d))
        beta = (mu - nu - (x - y)) / (2 * b)
        gamma = (mu + nu - (x + y)) / (2 * c)
        r2, r6 = mpmath.sqrt(2), mpmath.sqrt(6)
        norm = 1 / (4 * mpmath.sqrt((1 + beta ** 2) * (1 + gamma ** 2)))
        bg_m, bg_p = 1 - beta * gamma, 1 + beta * gamma
        sp, sm = beta + gamma, beta - gamma
        u11 = (r2 * bg_m + r6 * sp) * norm
        u12 = (r6 * bg_m - r2 * sp) * norm
        u21 = (r6 * bg_p + r2 * sm) * norm
        u22 = (r2 * bg_p - r6 * sm) * norm
        u31 = (r6 * bg_m - r2 * sp) * norm
        u32 = -(r2 * bg_m + r6 * sp) * norm
        u41 = (r2 * bg_p - r6 * sm) * norm
        u42 = -(r6 * bg_p + r2 * sm) * norm
        coeffs = np.array([
            [u11, u12, u12, -u11],
            [u21, u22, -u22, u21],
            [u31, u32, u32, -u31],
            [u41, u42, -u42, u41],
        ], dtype=object)
    return ThreeAtomParameters(n, x, y, b, c, mu, nu, beta, gamma, coeffs.astype(float))


def _three_atom_coefficient(k: int, i: int) -> NumberFunction:
    return NumberFunction(lambda n: three_atom_parameters(n).u(k, i), f"u{k + 1}{i + 1}(β,γ)")


def _lam(n: int, sign: int) -> float:
    M = n + 2
    return 5 * M + sign * math.sqrt(16 * M * M + 9)


def _j_three_halves_closed() -> tuple[QuantumMatrix, QuantumMatrix]:
    # columns 3 and 4 reuse the column-2 and column-1 functions:
    # even rows (u_k2, -u_k1), odd rows (-u_k2, u_k1)
    rows = []
    for k in range(4):
        c1, c2 = _three_atom_coefficient(k, 0), _three_atom_coefficient(k, 1)
        c3, c4 = (c2, -c1) if k % 2 == 0 else (-c2, c1)
        rows.append([_quantized_column_entry(k, c) for c in (c1, c2, c3, c4)])
    U = QuantumMatrix(rows)
    D = QuantumMatrix.diagonal([
        _nf(lambda n: math.sqrt(_lam(n, 1)), "√λ+(N+2)"),
        _nf(lambda n: math.sqrt(_lam(n, -1)), "√λ-(N+2)"),
        _nf(lambda n: -math.sqrt(_lam(n, -1)), "-√λ-(N+2)"),
        _nf(lambda n: -math.sqrt(_lam(n, 1)), "-√λ+(N+2)"),
    ])
    return U, D


# ----------------------------------------------------------------------------
# per-level numerics
# ----------------------------------------------------------------------------


class _LevelSolver:
    """Eigen-decomposition of R(n), computed on demand and cached per level."""

    def __init__(self, reduced: ReducedHermitian, gap_tol: float = 1e-10):
        self.reduced = reduced
        self.gap_tol = gap_tol
        self._cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def solve(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        try:
            return self._cache[n]
        except KeyError:
            pass
        Rn = self.reduced.per_level(n)
        w, V = np.linalg.eigh(Rn)
        order = np.argsort(w)[::-1]
        w, V = w[order], V[:, order]
        gaps = np.abs(np.diff(w))
        if gaps.size and gaps.min() < self.gap_tol:
            raise DegenerateSpectrumError(f"R({n}) has near-degenerate eigenvalues {w}")
        for i in range(V.shape[1]):
            col = V[:, i]
            first = np.flatnonzero(np.abs(col) > 1e-12)[0]
            if col[first] < 0:
                V[:, i] = -col
        self._cache[n] = (w, V)
        return w, V

    def tabulate(self, n_max: int) -> None:
        for n in range(n_max + 1):
            self.solve(n)


def diagonalize_reduced(reduced: ReducedHermitian, mode: str = "closed_form",
                        j=None) -> tuple[QuantumMatrix, QuantumMatrix]:
    """Return (U2, D) with R = U2 D U2†."""
    mode = normalize_mode(mode)
    J = reduced.J
    spin = parse_spin(j) if j is not None else parse_spin(Fraction(J - 1, 2))
    if int(2 * spin + 1) != J:
        raise ValueError(f"spin {spin} does not match reduced matrix of size {J}")
    if mode == "closed_form":
        if spin == Fraction(1, 2):
            return _j_half_factors()
        if spin == 1:
            return _j_one_factors()
        if spin == Fraction(3, 2):
            U, D = _j_three_halves_closed()
            Xt = classical_eigensystem(4).X.T
            U2 = QuantumMatrix([[_nf(lambda n, k=k, i=i: sum(Xt[k, l] * three_atom_parameters(n).u(l, i)
                                                             for l in range(4)), f"(XᵀU)_{k + 1}{i + 1}")
                                 for i in range(4)] for k in range(4)])
            return U2, D
        raise ValueError(f"no closed form for j={spin}; use mode='per_level'")
    solver = _LevelSolver(reduced)
    U2 = QuantumMatrix([[_nf(lambda n, k=k, i=i: solver.solve(n)[1][k, i], f"v{i + 1}[{k + 1}](N)")
                         for i in range(J)] for k in range(J)])
    D = QuantumMatrix.diagonal([_nf(lambda n, i=i: solver.solve(n)[0][i], f"λ{i + 1}(N)") for i in range(J)])
    return U2, D


@dataclass(frozen=True)
class DiagonalizationResult:
    """B_j = U D U† with U = U1 U2; U† U = 1 on ``domain``, U U† = 1 on ``range``."""

    j: Fraction
    mode: str
    U: QuantumMatrix = field(repr=False)
    D: QuantumMatrix = field(repr=False)
    U1: QuantumMatrix = field(repr=False)
    U2: QuantumMatrix = field(repr=False)
    R: ReducedHermitian = field(repr=False)
    domain: SubspaceProfile
    range: SubspaceProfile

    @property
    def J(self) -> int:
        return self.U.dim

    def reconstruct(self) -> QuantumMatrix:
        return self.U @ self.D @ self.U.adjoint()

    def exponential(self, tg: float) -> QuantumMatrix:
        """U exp(-i tg D) U†."""
        phases = [NumberFunction(lambda n, d=d: np.exp(-1j * tg * d(n)), lambda d=d: f"exp(-i·tg·{d.label})")
                  for d in self.D.diagonal_functions()]
        return self.U @ QuantumMatrix.diagonal(phases) @ self.U.adjoint()

    def diagonal_table(self, n_max: int) -> np.ndarray:
        fns = self.D.diagonal_functions()
        return np.array([[f(n).real for f in fns] for n in range(n_max + 1)])


def diagonalize(j, mode: str = "closed_form") -> DiagonalizationResult:
    spin = parse_spin(j)
    mode = normalize_mode(mode)
    block = build_spin_block(spin)
    es = classical_eigensystem(block.J)
    iso = quantize(es)
    reduced = reduce(block, iso)
    if mode == "closed_form" and spin == Fraction(3, 2):
        return three_atom_diagonalization()
    U2, D = diagonalize_reduced(reduced, mode, spin)
    U = iso.U1 @ U2
    return DiagonalizationResult(spin, mode, U, D, iso.U1, U2, reduced, iso.domain, iso.range)


def three_atom_diagonalization() -> DiagonalizationResult:
    block = build_spin_block(Fraction(3, 2))
    es = classical_eigensystem(4)
    iso = quantize(es)
    reduced = reduce(block, iso)
    U, D = _j_three_halves_closed()
    U2, _ = diagonalize_reduced(reduced, "closed_form", Fraction(3, 2))
    return DiagonalizationResult(Fraction(3, 2), "closed_form", U, D, iso.U1, U2, reduced,
                                 SubspaceProfile.full(4), SubspaceProfile(range(4)))
