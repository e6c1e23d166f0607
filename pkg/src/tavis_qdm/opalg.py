"""Normal-ordered operator algebra over a, a† and N = a†a.

Every operator on the Fock space that appears here is stored in the canonical
form

    f0(N) + sum_p (a†)^p f_p(N) + sum_q g_q(N) a^q ,

i.e. creation powers sit to the LEFT of their number function and
annihilation powers to the RIGHT of theirs.  Products are reduced back to this
form with the rules

    a f(N) = f(N+1) a,      f(N) a† = a† f(N+1),
    a^l (a†)^l = (N+1)...(N+l),      (a†)^l a^l = N(N-1)...(N-l+1).

Functions of N are opaque callables (:class:`NumberFunction`); identities are
decided by evaluating them on a finite range of Fock levels.
"""

from __future__ import annotations

import cmath
import math
from collections.abc import Callable, Iterable, Mapping, Sequence
from numbers import Number

import numpy as np

__all__ = [
    "DomainError",
    "NumberFunction",
    "OperatorEntry",
    "QuantumMatrix",
    "SubspaceProfile",
    "nf_shift",
    "entry_multiply",
    "entry_apply",
    "qm_multiply",
    "qm_adjoint",
    "N_CHECK",
    "EXACT_TOL",
]

N_CHECK = 50
EXACT_TOL = 1e-12


class DomainError(ValueError):
    """A number function was evaluated outside n >= 0."""


def _fmt_const(c: complex) -> str:
    c = complex(c)
    if c.imag == 0:
        r = c.real
        return str(int(r)) if r.is_integer() else repr(r)
    if c.real == 0:
        i = c.imag
        return f"{int(i) if i.is_integer() else i!r}i"
    return repr(c)


class NumberFunction:
    """A function n -> complex on the nonnegative integers.

    ``fn`` may be any callable accepting a Python ``int``.  Values are cached
    per instance; the object is otherwise immutable.  Labels are built lazily
    so that deep products do not pay for string concatenation.
    """

    __slots__ = ("_fn", "_label", "_const", "_cache", "_parts")

    def __init__(
        self,
        fn: Callable[[int], complex],
        label: str | Callable[[], str] | None = None,
        *,
        _const: complex | None = None,
    ):
        self._fn = fn
        self._label = label
        self._const = _const
        self._cache: dict[int, complex] = {}
        self._parts: tuple[NumberFunction, ...] | None = None

    @classmethod
    def const(cls, value: complex, label: str | None = None) -> NumberFunction:
        value = complex(value)
        return cls(lambda n: value, label if label is not None else _fmt_const(value), _const=value)

    @classmethod
    def zero(cls) -> NumberFunction:
        return _ZERO

    @classmethod
    def one(cls) -> NumberFunction:
        return _ONE

    @classmethod
    def number(cls) -> NumberFunction:
        """The number operator itself, n -> n."""
        return cls(lambda n: n, "N")

    @classmethod
    def coerce(cls, value) -> NumberFunction:
        if isinstance(value, NumberFunction):
            return value
        if isinstance(value, Number):
            return cls.const(value)
        if callable(value):
            return cls(value)
        raise TypeError(f"cannot interpret {value!r} as a function of N")

    # -- evaluation -------------------------------------------------------

    def __call__(self, n: int) -> complex:
        if self._const is not None:
            if n < 0:
                raise DomainError(f"number function evaluated at n={n}")
            return self._const
        try:
            return self._cache[n]
        except KeyError:
            pass
        if n < 0:
            raise DomainError(f"number function {self.label} evaluated at n={n}")
        value = complex(self._fn(int(n)))
        self._cache[n] = value
        return value

    eval = __call__

    def values(self, n_max: int, start: int = 0) -> np.ndarray:
        return np.array([self(n) for n in range(start, n_max + 1)], dtype=complex)

    # -- structure --------------------------------------------------------

    @property
    def label(self) -> str:
        lab = self._label
        if lab is None:
            return "<fn>"
        if callable(lab):
            lab = lab()
            self._label = lab
        return lab

    @property
    def constant(self) -> complex | None:
        return self._const

    @property
    def is_zero(self) -> bool:
        """Structural zero (constant 0); no evaluation is attempted."""
        return self._const is not None and self._const == 0

    @property
    def is_one(self) -> bool:
        return self._const is not None and self._const == 1

    def is_numerically_zero(self, n_check: int = N_CHECK, tol: float = EXACT_TOL) -> bool:
        if self.is_zero:
            return True
        return all(abs(self(n)) <= tol for n in range(n_check + 1))

    def close_to(self, other: NumberFunction, n_check: int = N_CHECK, tol: float = EXACT_TOL,
                 start: int = 0) -> bool:
        return self.max_difference(other, n_check, start) <= tol

    def max_difference(self, other: NumberFunction, n_check: int = N_CHECK, start: int = 0) -> float:
        other = NumberFunction.coerce(other)
        return max((abs(self(n) - other(n)) for n in range(start, n_check + 1)), default=0.0)

    def shift(self, k: int) -> NumberFunction:
        """n -> f(n + k)."""
        if k == 0 or self._const is not None:
            return self
        base = self
        return NumberFunction(lambda n: base(n + k), lambda: f"{base.label}|N->N{k:+d}")

    def map(self, op: Callable[[complex], complex], name: str) -> NumberFunction:
        base = self
        return NumberFunction(lambda n: op(base(n)), lambda: f"{name}({base.label})")

    def conj(self) -> NumberFunction:
        if self._const is not None:
            return NumberFunction.const(self._const.conjugate()) if self._const.imag else self
        base = self
        return NumberFunction(lambda n: base(n).conjugate(), lambda: f"conj({base.label})")

    def sqrt(self) -> NumberFunction:
        return self.map(cmath.sqrt, "sqrt")

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other) -> NumberFunction:
        other = NumberFunction.coerce(other)
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        if self._const is not None and other._const is not None:
            return NumberFunction.const(self._const + other._const)
        # flat sums keep evaluation depth independent of the number of summands
        parts = (self._parts or (self,)) + (other._parts or (other,))
        out = NumberFunction(lambda n: sum(f(n) for f in parts),
                             lambda: " + ".join(f.label for f in parts))
        out._parts = parts
        return out

    __radd__ = __add__

    def __neg__(self) -> NumberFunction:
        return self * -1

    def __sub__(self, other) -> NumberFunction:
        return self + (-NumberFunction.coerce(other))

    def __rsub__(self, other) -> NumberFunction:
        return NumberFunction.coerce(other) - self

    def __mul__(self, other) -> NumberFunction:
        other = NumberFunction.coerce(other)
        if self.is_zero or other.is_zero:
            return _ZERO
        if self.is_one:
            return other
        if other.is_one:
            return self
        if self._const is not None and other._const is not None:
            return NumberFunction.const(self._const * other._const)
        a, b = self, other
        return NumberFunction(lambda n: a(n) * b(n), lambda: f"({a.label})*({b.label})")

    __rmul__ = __mul__

    def __truediv__(self, other) -> NumberFunction:
        other = NumberFunction.coerce(other)
        if other._const is not None:
            return self * (1 / other._const)
        a, b = self, other
        return NumberFunction(lambda n: a(n) / b(n), lambda: f"({a.label})/({b.label})")

    def __repr__(self) -> str:
        return f"NumberFunction({self.label})"


_ZERO = NumberFunction.const(0)
_ONE = NumberFunction.const(1)


def nf_shift(f: NumberFunction, k: int) -> NumberFunction:
    """Return n -> f(n + k); evaluating where n + k < 0 raises DomainError."""
    return f.shift(k)


def rising(p: int) -> NumberFunction:
    """(N+1)(N+2)...(N+p) = a^p (a†)^p."""
    if p == 0:
        return _ONE
    label = "N+1" if p == 1 else f"(N+1)..(N+{p})"
    return NumberFunction(lambda n: math.prod(range(n + 1, n + p + 1)), label)


def _contract(F: NumberFunction, k: int) -> NumberFunction:
    """G with (a†)^k F(N) a^k = G(N), i.e. G(n) = F(n-k) n!/(n-k)!, zero below k."""
    if k == 0 or F.is_zero:
        return F

    def g(n: int) -> complex:
        if n < k:
            return 0.0
        return F(n - k) * math.prod(range(n - k + 1, n + 1))

    def label() -> str:
        falling = "N" if k == 1 else f"N(N-1)..(N-{k - 1})"
        return falling if F.is_one else f"({F.label}|N->N-{k})*{falling}"

    return NumberFunction(g, label)


# ----------------------------------------------------------------------------
# Operator entries
# ----------------------------------------------------------------------------


def _merge(terms: Iterable[tuple[int, NumberFunction]]) -> tuple[tuple[int, NumberFunction], ...]:
    acc: dict[int, NumberFunction] = {}
    for p, f in terms:
        if f.is_zero:
            continue
        acc[p] = acc[p] + f if p in acc else f
    return tuple((p, acc[p]) for p in sorted(acc) if not acc[p].is_zero)


class OperatorEntry:
    """Operator f0(N) + sum_p (a†)^p f_p(N) + sum_q g_q(N) a^q."""

    __slots__ = ("diag", "raising", "lowering")

    def __init__(
        self,
        diag: NumberFunction | complex = 0,
        raising: Mapping[int, NumberFunction] | Iterable[tuple[int, NumberFunction]] = (),
        lowering: Mapping[int, NumberFunction] | Iterable[tuple[int, NumberFunction]] = (),
    ):
        if isinstance(raising, Mapping):
            raising = raising.items()
        if isinstance(lowering, Mapping):
            lowering = lowering.items()
        raising = [(int(p), NumberFunction.coerce(f)) for p, f in raising]
        lowering = [(int(q), NumberFunction.coerce(g)) for q, g in lowering]
        if any(p < 1 for p, _ in raising) or any(q < 1 for q, _ in lowering):
            raise ValueError("operator powers must be >= 1")
        self.diag = NumberFunction.coerce(diag)
        self.raising = _merge(raising)
        self.lowering = _merge(lowering)

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls) -> OperatorEntry:
        return _ZERO_ENTRY

    @classmethod
    def scalar(cls, c: complex, label: str | None = None) -> OperatorEntry:
        return cls(NumberFunction.const(c, label))

    @classmethod
    def function(cls, f) -> OperatorEntry:
        return cls(NumberFunction.coerce(f))

    @classmethod
    def create(cls, p: int = 1, f=1, side: str = "right") -> OperatorEntry:
        """(a†)^p f(N) (``side="right"``) or f(N) (a†)^p (``side="left"``)."""
        f = NumberFunction.coerce(f)
        if p == 0:
            return cls(f)
        if side == "left":
            f = f.shift(p)
        elif side != "right":
            raise ValueError(f"side must be 'left' or 'right', not {side!r}")
        return cls(raising=[(p, f)])

    @classmethod
    def annihilate(cls, q: int = 1, f=1, side: str = "left") -> OperatorEntry:
        """f(N) a^q (``side="left"``) or a^q f(N) (``side="right"``)."""
        f = NumberFunction.coerce(f)
        if q == 0:
            return cls(f)
        if side == "right":
            f = f.shift(q)
        elif side != "left":
            raise ValueError(f"side must be 'left' or 'right', not {side!r}")
        return cls(lowering=[(q, f)])

    @classmethod
    def monomial(cls, p: int, F: NumberFunction, q: int) -> OperatorEntry:
        """(a†)^p F(N) a^q reduced to canonical form."""
        k = min(p, q)
        G = _contract(F, k)
        p, q = p - k, q - k
        if p:
            return cls(raising=[(p, G)])
        if q:
            return cls(lowering=[(q, G)])
        return cls(G)

    # -- structure --------------------------------------------------------

    def terms(self) -> list[tuple[int, NumberFunction, int]]:
        """All terms as (p, F, q) meaning (a†)^p F(N) a^q."""
        out = []
        if not self.diag.is_zero:
            out.append((0, self.diag, 0))
        out.extend((p, f, 0) for p, f in self.raising)
        out.extend((0, g, q) for q, g in self.lowering)
        return out

    @property
    def is_zero(self) -> bool:
        return self.diag.is_zero and not self.raising and not self.lowering

    @property
    def is_pure_function(self) -> bool:
        return not self.raising and not self.lowering

    @property
    def max_power(self) -> int:
        return max([p for p, _ in self.raising] + [q for q, _ in self.lowering] + [0])

    def pruned(self, n_check: int = N_CHECK, tol: float = EXACT_TOL) -> OperatorEntry:
        """Drop terms whose coefficient vanishes on n = 0..n_check."""
        diag = _ZERO if self.diag.is_numerically_zero(n_check, tol) else self.diag
        raising = [(p, f) for p, f in self.raising if not f.is_numerically_zero(n_check, tol)]
        lowering = [(q, g) for q, g in self.lowering if not g.is_numerically_zero(n_check, tol)]
        return OperatorEntry(diag, raising, lowering)

    def coefficient(self, power: int) -> NumberFunction:
        """Coefficient of a†^power (power > 0), a^-power (power < 0) or the diagonal."""
        if power == 0:
            return self.diag
        src = dict(self.raising) if power > 0 else dict(self.lowering)
        return src.get(abs(power), _ZERO)

    def powers(self) -> set[int]:
        out = {p for p, _ in self.raising} | {-q for q, _ in self.lowering}
        if not self.diag.is_zero:
            out.add(0)
        return out

    def max_difference(self, other: OperatorEntry, n_check: int = N_CHECK) -> float:
        worst = 0.0
        for power in self.powers() | other.powers():
            worst = max(worst, self.coefficient(power).max_difference(other.coefficient(power), n_check))
        return worst

    def close_to(self, other: OperatorEntry, n_check: int = N_CHECK, tol: float = EXACT_TOL) -> bool:
        return self.max_difference(other, n_check) <= tol

    # -- algebra ----------------------------------------------------------

    def adjoint(self) -> OperatorEntry:
        return OperatorEntry(
            self.diag.conj(),
            raising=[(q, g.conj()) for q, g in self.lowering],
            lowering=[(p, f.conj()) for p, f in self.raising],
        )

    @property
    def H(self) -> OperatorEntry:
        return self.adjoint()

    def __add__(self, other) -> OperatorEntry:
        if not isinstance(other, OperatorEntry):
            other = OperatorEntry(NumberFunction.coerce(other))
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        return OperatorEntry(self.diag + other.diag, self.raising + other.raising,
                             self.lowering + other.lowering)

    __radd__ = __add__

    def __neg__(self) -> OperatorEntry:
        return self.scale(-1)

    def __sub__(self, other) -> OperatorEntry:
        if not isinstance(other, OperatorEntry):
            other = OperatorEntry(NumberFunction.coerce(other))
        return self + (-other)

    def scale(self, c) -> OperatorEntry:
        c = NumberFunction.coerce(c) if not isinstance(c, Number) else c
        if isinstance(c, Number):
            if c == 0:
                return _ZERO_ENTRY
            if c == 1:
                return self
        return OperatorEntry(self.diag * c, [(p, f * c) for p, f in self.raising],
                             [(q, g * c) for q, g in self.lowering])

    def __mul__(self, other) -> OperatorEntry:
        if isinstance(other, OperatorEntry):
            return entry_multiply(self, other)
        if isinstance(other, Number):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other) -> OperatorEntry:
        if isinstance(other, Number):
            return self.scale(other)
        return NotImplemented

    def apply(self, n: int) -> list[tuple[int, complex]]:
        return entry_apply(self, n)

    def __str__(self) -> str:
        parts = []
        for p, F, q in self.terms():
            coeff = "" if F.is_one else F.label
            if p:
                op = "a†" if p == 1 else f"(a†)^{p}"
                parts.append(f"{op}·{coeff}" if coeff else op)
            elif q:
                op = "a" if q == 1 else f"a^{q}"
                parts.append(f"{coeff}·{op}" if coeff else op)
            else:
                parts.append(coeff or "1")
        return " + ".join(parts) if parts else "0"

    def __repr__(self) -> str:
        return f"OperatorEntry({self})"


_ZERO_ENTRY = OperatorEntry()


def _monomial_product(x: tuple[int, NumberFunction, int], y: tuple[int, NumberFunction, int]) -> OperatorEntry:
    p1, F1, q1 = x
    p2, F2, q2 = y
    # F1(N) a^q1 (a†)^p2 F2(N)
    if q1 >= p2:
        H = rising(p2) * F2
        mid = F1 * H.shift(q1 - p2)
        return OperatorEntry.monomial(p1, mid, q1 - p2 + q2)
    r = p2 - q1
    mid = F1.shift(r) * rising(q1).shift(r) * F2
    return OperatorEntry.monomial(p1 + r, mid, q2)


def entry_multiply(x: OperatorEntry, y: OperatorEntry) -> OperatorEntry:
    """Normal-form product x·y."""
    if x.is_zero or y.is_zero:
        return _ZERO_ENTRY
    acc = _ZERO_ENTRY
    for tx in x.terms():
        for ty in y.terms():
            acc = acc + _monomial_product(tx, ty)
    return acc


def _sqrt_falling(n: int, q: int) -> float:
    return math.sqrt(math.prod(range(n - q + 1, n + 1)))


def entry_apply(x: OperatorEntry, n: int) -> list[tuple[int, complex]]:
    """Action on |n>: the finitely many (m, c) with x|n> = sum c|m>."""
    out = []
    if not x.diag.is_zero:
        c = x.diag(n)
        if c != 0:
            out.append((n, c))
    for p, f in x.raising:
        c = f(n) * _sqrt_falling(n + p, p)
        if c != 0:
            out.append((n + p, c))
    for q, g in x.lowering:
        if n >= q:
            c = g(n - q) * _sqrt_falling(n, q)
            if c != 0:
                out.append((n - q, c))
    return out


# ----------------------------------------------------------------------------
# Quantum matrices
# ----------------------------------------------------------------------------


class QuantumMatrix:
    """A J×J grid of :class:`OperatorEntry`, immutable."""

    __slots__ = ("entries",)

    def __init__(self, entries: Sequence[Sequence]):
        rows = tuple(tuple(e if isinstance(e, OperatorEntry) else OperatorEntry(NumberFunction.coerce(e))
                           for e in row) for row in entries)
        if not rows or any(len(r) != len(rows) for r in rows):
            raise ValueError("quantum matrix must be square and non-empty")
        self.entries = rows

    @property
    def dim(self) -> int:
        return len(self.entries)

    def __getitem__(self, ij: tuple[int, int]) -> OperatorEntry:
        i, j = ij
        return self.entries[i][j]

    @classmethod
    def zeros(cls, dim: int) -> QuantumMatrix:
        return cls([[_ZERO_ENTRY] * dim for _ in range(dim)])

    @classmethod
    def identity(cls, dim: int) -> QuantumMatrix:
        one = OperatorEntry(_ONE)
        return cls([[one if i == j else _ZERO_ENTRY for j in range(dim)] for i in range(dim)])

    @classmethod
    def diagonal(cls, items: Sequence) -> QuantumMatrix:
        items = [e if isinstance(e, OperatorEntry) else OperatorEntry(NumberFunction.coerce(e)) for e in items]
        d = len(items)
        return cls([[items[i] if i == j else _ZERO_ENTRY for j in range(d)] for i in range(d)])

    @classmethod
    def from_scalar(cls, T: np.ndarray) -> QuantumMatrix:
        T = np.asarray(T)
        return cls([[OperatorEntry.scalar(complex(v)) if v != 0 else _ZERO_ENTRY for v in row] for row in T])

    @classmethod
    def block_diag(cls, *blocks: QuantumMatrix) -> QuantumMatrix:
        dim = sum(b.dim for b in blocks)
        rows = [[_ZERO_ENTRY] * dim for _ in range(dim)]
        off = 0
        for b in blocks:
            for i in range(b.dim):
                for j in range(b.dim):
                    rows[off + i][off + j] = b.entries[i][j]
            off += b.dim
        return cls(rows)

    def block(self, start: int, size: int) -> QuantumMatrix:
        return QuantumMatrix([row[start:start + size] for row in self.entries[start:start + size]])

    def adjoint(self) -> QuantumMatrix:
        d = self.dim
        return QuantumMatrix([[self.entries[j][i].adjoint() for j in range(d)] for i in range(d)])

    @property
    def H(self) -> QuantumMatrix:
        return self.adjoint()

    def __matmul__(self, other: QuantumMatrix) -> QuantumMatrix:
        return qm_multiply(self, other)

    def __add__(self, other: QuantumMatrix) -> QuantumMatrix:
        _check_dims(self, other)
        return QuantumMatrix([[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self.entries, other.entries)])

    def __neg__(self) -> QuantumMatrix:
        return self.scale(-1)

    def __sub__(self, other: QuantumMatrix) -> QuantumMatrix:
        return self + (-other)

    def scale(self, c) -> QuantumMatrix:
        return QuantumMatrix([[e.scale(c) for e in row] for row in self.entries])

    def __mul__(self, c) -> QuantumMatrix:
        if isinstance(c, Number):
            return self.scale(c)
        return NotImplemented

    __rmul__ = __mul__

    def conjugate_by(self, T: np.ndarray) -> QuantumMatrix:
        """T · M · T† for a scalar matrix T."""
        T = np.asarray(T)
        if T.shape != (self.dim, self.dim):
            raise ValueError(f"scalar matrix shape {T.shape} does not match dim {self.dim}")
        d = self.dim
        Tc = T.conj()
        rows = []
        for r in range(d):
            row = []
            for c in range(d):
                acc = _ZERO_ENTRY
                for k in range(d):
                    if T[r, k] == 0:
                        continue
                    for l in range(d):
                        w = T[r, k] * Tc[c, l]
                        if w != 0 and not self.entries[k][l].is_zero:
                            acc = acc + self.entries[k][l].scale(complex(w))
                row.append(acc)
            rows.append(row)
        return QuantumMatrix(rows)

    def pruned(self, n_check: int = N_CHECK, tol: float = EXACT_TOL) -> QuantumMatrix:
        return QuantumMatrix([[e.pruned(n_check, tol) for e in row] for row in self.entries])

    @property
    def max_power(self) -> int:
        return max(e.max_power for row in self.entries for e in row)

    def is_diagonal(self) -> bool:
        return all(self.entries[i][j].is_zero for i in range(self.dim) for j in range(self.dim) if i != j)

    def diagonal_functions(self) -> list[NumberFunction]:
        if not all(self.entries[i][i].is_pure_function for i in range(self.dim)):
            raise ValueError("diagonal entries are not pure number functions")
        return [self.entries[i][i].diag for i in range(self.dim)]

    def max_difference(self, other: QuantumMatrix, n_check: int = N_CHECK) -> float:
        _check_dims(self, other)
        return max(a.max_difference(b, n_check)
                   for ra, rb in zip(self.entries, other.entries) for a, b in zip(ra, rb))

    def close_to(self, other: QuantumMatrix, n_check: int = N_CHECK, tol: float = EXACT_TOL) -> bool:
        return self.max_difference(other, n_check) <= tol

    def to_strings(self) -> list[list[str | int]]:
        return [[0 if e.is_zero else str(e) for e in row] for row in self.entries]

    def __repr__(self) -> str:
        return f"QuantumMatrix(dim={self.dim})"


def _check_dims(x: QuantumMatrix, y: QuantumMatrix) -> None:
    if x.dim != y.dim:
        raise ValueError(f"dimension mismatch: {x.dim} vs {y.dim}")


def qm_multiply(x: QuantumMatrix, y: QuantumMatrix) -> QuantumMatrix:
    _check_dims(x, y)
    d = x.dim
    rows = []
    for i in range(d):
        row = []
        for j in range(d):
            acc = _ZERO_ENTRY
            for k in range(d):
                a, b = x.entries[i][k], y.entries[k][j]
                if not (a.is_zero or b.is_zero):
                    acc = acc + entry_multiply(a, b)
            row.append(acc)
        rows.append(row)
    return QuantumMatrix(rows)


def qm_adjoint(x: QuantumMatrix) -> QuantumMatrix:
    return x.adjoint()


class SubspaceProfile(tuple):
    """Per-component Fock floors (k_1, ..., k_J): component i lives in H_{k_i}."""

    def __new__(cls, floors: Iterable[int]):
        floors = tuple(int(k) for k in floors)
        if any(k < 0 for k in floors):
            raise ValueError("subspace floors must be nonnegative")
        return super().__new__(cls, floors)

    @classmethod
    def full(cls, dim: int) -> SubspaceProfile:
        return cls([0] * dim)

    @property
    def floors(self) -> tuple[int, ...]:
        return tuple(self)

    def __repr__(self) -> str:
        return "H" + " ⊕ H".join(f"_{k}" if k else "" for k in self)
