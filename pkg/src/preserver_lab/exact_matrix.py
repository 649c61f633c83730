"""Exact dense rational matrices and the special matrices used throughout.

Entries are Python ints when integral and :class:`fractions.Fraction`
otherwise, so integer-heavy work stays on the fast int path.  Matrix
units are addressed 1-based (``matrix_unit(n, 1, 2)`` is e_12); entry
access on :class:`RatMatrix` is 0-based like any Python sequence.

The vector-space basis of M_n is fixed as e_11, e_12, ..., e_1n, e_21,
..., e_nn (row-major).  Every n^2 x n^2 representation in the package
uses it.
"""
from __future__ import annotations

import random
from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Sequence


def as_rational(x) -> int | Fraction:
    """Normalize ``x`` to an int when integral, else a Fraction.

    Floats are rejected: nothing in this package may round.
    """
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, int):
        return x
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else x
    if isinstance(x, str):
        q = Fraction(x.strip())
        return q.numerator if q.denominator == 1 else q
    if isinstance(x, float):
        raise TypeError("floating-point values are not accepted; use Fraction or 'p/q'")
    q = Fraction(x)
    return q.numerator if q.denominator == 1 else q


def rational_str(x) -> str:
    """Canonical lowest-terms string ("3", "-3/2")."""
    return str(Fraction(x))


class RatMatrix:
    """Immutable rows x cols matrix over Q."""

    __slots__ = ("rows", "cols", "_d", "_hash")

    def __init__(self, entries: Iterable[Iterable]):
        data = tuple(tuple(as_rational(x) for x in row) for row in entries)
        if not data or not data[0]:
            raise ValueError("matrix must have at least one row and one column")
        cols = len(data[0])
        if any(len(r) != cols for r in data):
            raise ValueError("ragged rows")
        self.rows = len(data)
        self.cols = cols
        self._d = data
        self._hash = None

    @classmethod
    def _raw(cls, data: tuple[tuple, ...]) -> "RatMatrix":
        # trusted constructor: data already normalized
        m = object.__new__(cls)
        m.rows = len(data)
        m.cols = len(data[0])
        m._d = data
        m._hash = None
        return m

    # construction helpers
    @classmethod
    def zeros(cls, rows: int, cols: int | None = None) -> "RatMatrix":
        cols = rows if cols is None else cols
        return cls._raw(tuple((0,) * cols for _ in range(rows)))

    @classmethod
    def identity(cls, n: int) -> "RatMatrix":
        return cls._raw(tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n)))

    @classmethod
    def diagonal(cls, values: Sequence) -> "RatMatrix":
        vals = [as_rational(v) for v in values]
        n = len(vals)
        return cls._raw(tuple(tuple(vals[i] if i == j else 0 for j in range(n)) for i in range(n)))

    @classmethod
    def scalar(cls, n: int, value) -> "RatMatrix":
        return cls.diagonal([value] * n)

    @classmethod
    def from_vec(cls, n: int, vec: Sequence) -> "RatMatrix":
        """Inverse of :meth:`vec` for an n x n matrix."""
        if len(vec) != n * n:
            raise ValueError(f"expected {n * n} coordinates, got {len(vec)}")
        v = [as_rational(x) for x in vec]
        return cls._raw(tuple(tuple(v[i * n:(i + 1) * n]) for i in range(n)))

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence]) -> "RatMatrix":
        return cls(list(zip(*columns)))

    # access
    def __getitem__(self, idx):
        i, j = idx
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"entry ({i}, {j}) outside {self.rows}x{self.cols}")
        return self._d[i][j]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def tolist(self) -> list[list]:
        return [list(r) for r in self._d]

    def row(self, i: int) -> tuple:
        return self._d[i]

    def column(self, j: int) -> tuple:
        return tuple(r[j] for r in self._d)

    def vec(self) -> tuple:
        """Row-major coordinates in the fixed basis."""
        return tuple(x for r in self._d for x in r)

    def __iter__(self):
        return iter(self._d)

    # comparison
    def __eq__(self, other):
        if not isinstance(other, RatMatrix):
            return NotImplemented
        return self._d == other._d

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._d)
        return self._hash

    def __repr__(self):
        body = "; ".join(" ".join(rational_str(x) for x in r) for r in self._d)
        return f"RatMatrix([{body}])"

    def is_zero(self) -> bool:
        return all(x == 0 for r in self._d for x in r)

    def is_scalar(self) -> bool:
        if not self.is_square:
            return False
        c = self._d[0][0]
        return all((x == c) if i == j else (x == 0)
                   for i, r in enumerate(self._d) for j, x in enumerate(r))

    # arithmetic
    def _same_shape(self, other: "RatMatrix"):
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")

    def __add__(self, other):
        if not isinstance(other, RatMatrix):
            return NotImplemented
        self._same_shape(other)
        return RatMatrix._raw(tuple(tuple(_n(a + b) for a, b in zip(r, s))
                                    for r, s in zip(self._d, other._d)))

    def __sub__(self, other):
        if not isinstance(other, RatMatrix):
            return NotImplemented
        self._same_shape(other)
        return RatMatrix._raw(tuple(tuple(_n(a - b) for a, b in zip(r, s))
                                    for r, s in zip(self._d, other._d)))

    def __neg__(self):
        return RatMatrix._raw(tuple(tuple(-a for a in r) for r in self._d))

    def scale(self, c) -> "RatMatrix":
        c = as_rational(c)
        return RatMatrix._raw(tuple(tuple(_n(c * a) for a in r) for r in self._d))

    def __mul__(self, c):
        if isinstance(c, RatMatrix):
            raise TypeError("use @ for matrix multiplication")
        return self.scale(c)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if not isinstance(other, RatMatrix):
            return NotImplemented
        if self.cols != other.rows:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        cols = tuple(zip(*other._d))
        return RatMatrix._raw(tuple(tuple(_n(sum(a * b for a, b in zip(r, c))) for c in cols)
                                    for r in self._d))

    def apply_vec(self, v: Sequence) -> tuple:
        if len(v) != self.cols:
            raise ValueError("vector length mismatch")
        return tuple(_n(sum(a * b for a, b in zip(r, v))) for r in self._d)

    @property
    def T(self) -> "RatMatrix":
        return RatMatrix._raw(tuple(zip(*self._d)))

    def trace(self):
        if not self.is_square:
            raise ValueError("trace of a non-square matrix")
        return _n(sum(self._d[i][i] for i in range(self.rows)))

    def commutator(self, other: "RatMatrix") -> "RatMatrix":
        return self @ other - other @ self

    # elimination-based queries
    def rank(self) -> int:
        return len(_echelon_int(self._d)[0])

    def determinant(self):
        return determinant(self)

    def inverse(self) -> "RatMatrix":
        return inverse(self)

    def is_invertible(self) -> bool:
        return self.is_square and self.rank() == self.rows


def _n(x):
    if isinstance(x, Fraction) and x.denominator == 1:
        return x.numerator
    return x


# ---------------------------------------------------------------------------
# fraction-free elimination


def integer_row(row: Sequence) -> list[int]:
    """Scale a rational row to a primitive integer row (same span)."""
    dens = 1
    for x in row:
        if isinstance(x, Fraction):
            dens = lcm(dens, x.denominator)
    ints = [int(x * dens) for x in row]
    g = 0
    for x in ints:
        g = gcd(g, x)
    if g > 1:
        ints = [x // g for x in ints]
    return ints


class RowReducer:
    """Incremental fraction-free row echelon form over Z.

    Rows are kept primitive (content 1); each stored row has its pivot as
    the first nonzero entry.  ``add`` returns True when the rank grows.
    """

    def __init__(self, width: int):
        self.width = width
        self.pivots: dict[int, list[int]] = {}

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def reduce(self, row: Sequence) -> list[int]:
        r = integer_row(row)
        if len(r) != self.width:
            raise ValueError("row width mismatch")
        for col in sorted(self.pivots):
            a = r[col]
            if a == 0:
                continue
            p = self.pivots[col]
            pc = p[col]
            r = [pc * x - a * y for x, y in zip(r, p)]
            g = 0
            for x in r:
                g = gcd(g, x)
            if g > 1:
                r = [x // g for x in r]
        return r

    def add(self, row: Sequence) -> bool:
        if self.rank == self.width:
            return False
        r = self.reduce(row)
        for col, x in enumerate(r):
            if x != 0:
                if x < 0:
                    r = [-y for y in r]
                self.pivots[col] = r
                return True
        return False

    def kernel(self) -> list[tuple]:
        return _kernel_from_pivots(self.pivots, self.width)


def _echelon_int(data: Sequence[Sequence]) -> tuple[dict[int, list[int]], int]:
    red = RowReducer(len(data[0]))
    for row in data:
        red.add(row)
    return red.pivots, red.width


def _kernel_from_pivots(pivots: dict[int, list[int]], width: int) -> list[tuple]:
    """Basis of the right nullspace of the system held in ``pivots``.

    One basis vector per free column, with that free coordinate set to 1.
    """
    free = [c for c in range(width) if c not in pivots]
    order = sorted(pivots, reverse=True)
    basis = []
    for fc in free:
        x: list = [0] * width
        x[fc] = 1
        for pc in order:
            row = pivots[pc]
            s = sum(row[j] * x[j] for j in range(pc + 1, width) if row[j] and x[j])
            x[pc] = _n(Fraction(-s, row[pc])) if s else 0
        basis.append(tuple(x))
    return basis


def kernel_basis(m: RatMatrix) -> list[tuple]:
    """Exact basis of the right nullspace of ``m`` (length cols - rank)."""
    pivots, width = _echelon_int(m._d)
    return _kernel_from_pivots(pivots, width)


def determinant(m: RatMatrix):
    """Bareiss fraction-free determinant."""
    if not m.is_square:
        raise ValueError("determinant of a non-square matrix")
    n = m.rows
    # clear denominators row by row, remember the scale
    scale = Fraction(1)
    a = []
    for row in m:
        dens = 1
        for x in row:
            if isinstance(x, Fraction):
                dens = lcm(dens, x.denominator)
        a.append([int(x * dens) for x in row])
        scale /= dens
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = a[k][k]
        for i in range(k + 1, n):
            aik = a[i][k]
            ri = a[i]
            rk = a[k]
            for j in range(k + 1, n):
                ri[j] = (ri[j] * akk - aik * rk[j]) // prev
            ri[k] = 0
        prev = akk
    return _n(sign * a[n - 1][n - 1] * scale)


def inverse(m: RatMatrix) -> RatMatrix:
    """Exact inverse by Gauss-Jordan on [m | 1]."""
    if not m.is_square:
        raise ValueError("inverse of a non-square matrix")
    n = m.rows
    aug = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
           for i, row in enumerate(m)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("matrix is singular")
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        prow = [x / p for x in aug[col]]
        aug[col] = prow
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], prow)]
    return RatMatrix(row[n:] for row in aug)


def in_span(basis: Sequence[Sequence], v: Sequence) -> bool:
    """Exact test whether ``v`` lies in the span of ``basis``."""
    if not basis:
        return all(x == 0 for x in v)
    red = RowReducer(len(v))
    for b in basis:
        red.add(b)
    return all(x == 0 for x in red.reduce(v))


# ---------------------------------------------------------------------------
# special matrices


def matrix_unit(n: int, i: int, j: int) -> RatMatrix:
    """e_ij in M_n, 1-based."""
    if not (1 <= i <= n and 1 <= j <= n):
        raise ValueError(f"matrix unit e_{i}{j} is outside M_{n}")
    return RatMatrix._raw(tuple(tuple(1 if (r == i - 1 and c == j - 1) else 0 for c in range(n))
                                for r in range(n)))


def basis_index(n: int, i: int, j: int) -> int:
    """Position of e_ij (1-based) in the row-major basis."""
    return (i - 1) * n + (j - 1)


def staircase_indices(d: int) -> list[tuple[int, int]]:
    """Index pairs (1-based) of e_11, e_12, e_22, e_23, ... of length d.

    Even d ends with e_{k-1,k}, k = d/2 + 1; odd d ends with e_kk,
    k = (d + 1)/2.  The product in the listed order is e_1k.
    """
    if d < 1:
        raise ValueError("staircase length must be >= 1")
    out = []
    r = 1
    while len(out) < d:
        out.append((r, r))
        if len(out) < d:
            out.append((r, r + 1))
        r += 1
    return out


def staircase_corner(d: int) -> int:
    """The k with (in-order product) = e_1k."""
    return d // 2 + 1 if d % 2 == 0 else (d + 1) // 2


def staircase_units(d: int, n: int) -> list[RatMatrix]:
    if d < 1:
        raise ValueError("staircase length must be >= 1")
    if d >= 2 * n:
        raise ValueError(f"staircase of length {d} does not fit in M_{n} (need d < 2n)")
    return [matrix_unit(n, i, j) for i, j in staircase_indices(d)]


def random_matrix(n: int, rng: random.Random, lo: int = -2, hi: int = 2) -> RatMatrix:
    return RatMatrix._raw(tuple(tuple(rng.randint(lo, hi) for _ in range(n)) for _ in range(n)))


def random_invertible(n: int, rng: random.Random, lo: int = -2, hi: int = 2) -> RatMatrix:
    """Random invertible integer matrix with entries in [lo, hi]; retries on singularity."""
    while True:
        g = random_matrix(n, rng, lo, hi)
        if determinant(g) != 0:
            return g


def random_rank_one_idempotent(n: int, rng: random.Random) -> RatMatrix:
    """g e_11 g^-1 for a random small invertible g."""
    if n < 2:
        raise ValueError("need n >= 2")
    g = random_invertible(n, rng)
    return g @ matrix_unit(n, 1, 1) @ inverse(g)


def is_rank_one_idempotent(e: RatMatrix) -> bool:
    return e.is_square and e @ e == e and e.rank() == 1


def corner_units(e: RatMatrix) -> list[list[RatMatrix]]:
    """Matrix units h_ij (returned 0-based, h[i][j] = h_{i+1,j+1}) of (1-e)M_n(1-e).

    Built from a similarity P with P^-1 e P = e_11: the first column of P is
    a nonzero column of e and the rest span ker e.  Then h_ij =
    P e_{i+1,j+1} P^-1, so h_ij h_kl = delta_jk h_il and sum h_kk = 1 - e.
    """
    if not is_rank_one_idempotent(e):
        raise ValueError("corner_units needs a rank-one idempotent")
    n = e.rows
    u = next(e.column(j) for j in range(n) if any(x != 0 for x in e.column(j)))
    ker = kernel_basis(e)
    p = RatMatrix.from_columns([u] + ker)
    pinv = inverse(p)
    return [[p @ matrix_unit(n, i + 2, j + 2) @ pinv for j in range(n - 1)]
            for i in range(n - 1)]


def trace_form_gram(n: int) -> RatMatrix:
    """Gram matrix of (x, y) -> tr(xy) in the row-major unit basis."""
    if n < 1:
        raise ValueError("n must be >= 1")
    size = n * n
    rows = [[0] * size for _ in range(size)]
    for i in range(n):
        for j in range(n):
            # tr(e_ij e_kl) = 1 iff j == k and l == i
            rows[i * n + j][j * n + i] = 1
    return RatMatrix._raw(tuple(tuple(r) for r in rows))


def permutation_matrix(perm: Sequence[int]) -> RatMatrix:
    """Matrix sending basis vector j to basis vector perm[j] (0-based)."""
    n = len(perm)
    rows = [[0] * n for _ in range(n)]
    for j, p in enumerate(perm):
        rows[p][j] = 1
    return RatMatrix(rows)


# ---------------------------------------------------------------------------
# JSON


def matrix_to_json(m: RatMatrix) -> dict:
    if not m.is_square:
        raise ValueError("matrix JSON holds square matrices")
    return {"n": m.rows, "entries": [[rational_str(x) for x in r] for r in m]}


def matrix_from_json(obj: dict) -> RatMatrix:
    try:
        n = int(obj["n"])
        entries = obj["entries"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed matrix JSON: {exc}") from None
    m = RatMatrix([[as_rational(str(x)) for x in r] for r in entries])
    if m.shape != (n, n):
        raise ValueError(f"matrix JSON declares n={n} but entries are {m.rows}x{m.cols}")
    return m
