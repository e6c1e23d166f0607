"""Dense realizations of quantum matrices on a truncated Fock space.

Basis ordering is component-major: the ket |i, n> (component i, Fock level n)
sits at index ``i * (cutoff + 1) + n``.  Realizations are exact for every
matrix element whose row and column both lie below the cutoff; amplitudes
that would leave the truncated space are dropped and tallied in
``truncation_loss``.  Products of realizations and exponentials of a realized
generator are only trustworthy on an interior band of Fock levels, which is
what :func:`interior_compare` looks at.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .opalg import QuantumMatrix, SubspaceProfile

__all__ = [
    "FockRealization",
    "InteriorMask",
    "TruncationError",
    "realize",
    "expm_hermitian",
    "interior_compare",
    "interior_indices",
    "masked_indices",
    "masked_compare",
    "profile_identity_residual",
    "default_margin",
    "annihilation",
    "sector_index_sets",
    "MIN_CUTOFF",
    "HERMITIAN_TOL",
]

MIN_CUTOFF = 4
HERMITIAN_TOL = 1e-12


class TruncationError(ValueError):
    """Cutoff/margin combination leaves no trustworthy interior."""


@dataclass(frozen=True)
class FockRealization:
    cutoff: int
    blockdim: int
    matrix: np.ndarray = field(repr=False)
    truncation_loss: float = 0.0

    def __post_init__(self):
        size = self.blockdim * (self.cutoff + 1)
        if self.matrix.shape != (size, size):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match {size}x{size}")

    @property
    def levels(self) -> int:
        return self.cutoff + 1

    def index(self, component: int, n: int) -> int:
        return component * (self.cutoff + 1) + n

    def block(self, i: int, j: int) -> np.ndarray:
        s = self.levels
        return self.matrix[i * s:(i + 1) * s, j * s:(j + 1) * s]

    def _like(self, matrix: np.ndarray) -> FockRealization:
        return FockRealization(self.cutoff, self.blockdim, matrix)

    def __matmul__(self, other: FockRealization) -> FockRealization:
        _check_compatible(self, other)
        return self._like(self.matrix @ other.matrix)

    def dagger(self) -> FockRealization:
        return self._like(self.matrix.conj().T)

    def lift(self, T: np.ndarray) -> FockRealization:
        """The realization of T · M · T† for a scalar blockdim×blockdim matrix T."""
        K = np.kron(np.asarray(T), np.eye(self.levels))
        return self._like(K @ self.matrix @ K.conj().T)


@dataclass(frozen=True)
class InteriorMask:
    """Fock levels in [margin, cutoff - margin] are trusted."""

    margin: int

    def __post_init__(self):
        if self.margin < 0:
            raise ValueError("margin must be nonnegative")

    def levels(self, cutoff: int) -> range:
        if 2 * self.margin >= cutoff:
            raise TruncationError(f"margin {self.margin} leaves no interior at cutoff {cutoff}")
        return range(self.margin, cutoff - self.margin + 1)


def default_margin(max_power: int) -> int:
    return 2 * max_power + 2


def _check_compatible(x: FockRealization, y: FockRealization) -> None:
    if x.cutoff != y.cutoff or x.blockdim != y.blockdim:
        raise ValueError(f"incompatible realizations: cutoff {x.cutoff}/{y.cutoff}, "
                         f"blockdim {x.blockdim}/{y.blockdim}")


def annihilation(cutoff: int) -> np.ndarray:
    """Truncated a with a|n> = sqrt(n)|n-1>."""
    return np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), 1).astype(complex)


def realize(M: QuantumMatrix, cutoff: int, margin: int | None = None) -> FockRealization:
    if cutoff < MIN_CUTOFF:
        raise TruncationError(f"cutoff must be >= {MIN_CUTOFF}, got {cutoff}")
    if margin is not None and 2 * margin >= cutoff:
        raise TruncationError(f"cutoff {cutoff} too small for margin {margin}")
    J = M.dim
    s = cutoff + 1
    out = np.zeros((J * s, J * s), dtype=complex)
    loss = 0.0
    for i in range(J):
        for j in range(J):
            entry = M.entries[i][j]
            if entry.is_zero:
                continue
            for n in range(s):
                for m, c in entry.apply(n):
                    if m <= cutoff:
                        out[i * s + m, j * s + n] += c
                    else:
                        loss += abs(c) ** 2
    return FockRealization(cutoff, J, out, loss)


def expm_hermitian(H: FockRealization, scale: float) -> FockRealization:
    """exp(i * scale * H) through the Hermitian eigendecomposition."""
    A = H.matrix
    err = np.abs(A - A.conj().T).max() if A.size else 0.0
    if err > HERMITIAN_TOL:
        raise ValueError(f"matrix is not Hermitian (deviation {err:.3e})")
    w, V = np.linalg.eigh((A + A.conj().T) / 2)
    E = (V * np.exp(1j * scale * w)) @ V.conj().T
    return FockRealization(H.cutoff, H.blockdim, E)


def interior_indices(cutoff: int, blockdim: int, margin: int) -> np.ndarray:
    levels = InteriorMask(margin).levels(cutoff)
    s = cutoff + 1
    return np.array([i * s + n for i in range(blockdim) for n in levels], dtype=int)


def interior_compare(x: FockRealization, y: FockRealization, margin: int) -> float:
    """Max |x - y| over rows and columns whose Fock index is in [margin, cutoff - margin]."""
    _check_compatible(x, y)
    if 2 * margin >= x.cutoff:
        raise TruncationError(f"margin {margin} >= cutoff/2 ({x.cutoff}/2)")
    idx = interior_indices(x.cutoff, x.blockdim, margin)
    diff = x.matrix[np.ix_(idx, idx)] - y.matrix[np.ix_(idx, idx)]
    return float(np.abs(diff).max()) if diff.size else 0.0


def masked_indices(cutoff: int, floors: Sequence[int], margin: int = 0) -> np.ndarray:
    """Indices of kets |i, n> with max(floors[i], margin) <= n <= cutoff - margin."""
    top = InteriorMask(margin).levels(cutoff)[-1]
    s = cutoff + 1
    return np.array([i * s + n for i, f in enumerate(floors) for n in range(max(f, margin), top + 1)],
                    dtype=int)


def masked_compare(x: FockRealization, y: FockRealization, floors: Sequence[int], margin: int = 0) -> float:
    """Like :func:`interior_compare`, with component i additionally restricted to n >= floors[i].

    Identities that hold only on a subspace profile (for instance B = U D U† on
    the range of U) are compared on exactly that profile.
    """
    _check_compatible(x, y)
    if len(floors) != x.blockdim:
        raise ValueError("floors length does not match block dimension")
    idx = masked_indices(x.cutoff, floors, margin)
    diff = x.matrix[np.ix_(idx, idx)] - y.matrix[np.ix_(idx, idx)]
    return float(np.abs(diff).max()) if diff.size else 0.0


def profile_identity_residual(X: FockRealization, profile: SubspaceProfile | Sequence[int],
                              top_margin: int = 0) -> float:
    """max ||X psi - psi|| over basis kets psi in the given subspace profile.

    Columns are restricted to Fock levels ``floor_i <= n <= cutoff - top_margin``;
    every row is inspected, so leakage out of the subspace counts.
    """
    profile = SubspaceProfile(profile)
    if len(profile) != X.blockdim:
        raise ValueError("profile length does not match block dimension")
    s = X.levels
    worst = 0.0
    for i, floor in enumerate(profile):
        for n in range(floor, X.cutoff - top_margin + 1):
            col = X.matrix[:, i * s + n].copy()
            col[i * s + n] -= 1.0
            worst = max(worst, float(np.linalg.norm(col)))
    return worst


def sector_index_sets(cutoff: int, weights: Sequence[float], labels: Sequence[float] | None = None
                      ) -> dict[float, list[int]]:
    """Group basis indices by conserved excitation ``weights[i] + n``.

    Sectors that would reach past the cutoff are incomplete; callers pick the
    labels they trust.
    """
    s = cutoff + 1
    out: dict[float, list[int]] = {}
    for i, w in enumerate(weights):
        for n in range(s):
            out.setdefault(w + n, []).append(i * s + n)
    if labels is not None:
        out = {k: out[k] for k in labels}
    return out
