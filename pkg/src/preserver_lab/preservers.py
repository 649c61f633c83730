"""Linear maps on M_n, the standard form, and zero-preservation checks.

A map is stored as its n^2 x n^2 matrix acting on row-major coordinates.
The standard form is

    x -> alpha * a x a^-1 + g(x) 1        or        x -> alpha * a x^t a^-1 + g(x) 1

with g a linear functional given by its coordinates (g(x) = sum g_ij x_ij).
Writing g for the functional keeps f free for the polynomial.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .exact_matrix import (
    RatMatrix,
    RowReducer,
    as_rational,
    determinant,
    inverse,
    kernel_basis,
    matrix_from_json,
    matrix_to_json,
    matrix_unit,
    random_invertible,
    random_matrix,
    rational_str,
)
from .free_algebra import MultilinearPoly, classify
from .pi_lab import evaluate


class SamplingError(RuntimeError):
    """No zero of the polynomial could be produced within the retry budget."""


@dataclass(frozen=True)
class MatrixLinearMap:
    n: int
    rep: RatMatrix

    def __post_init__(self):
        if self.rep.shape != (self.n * self.n, self.n * self.n):
            raise ValueError(f"map on M_{self.n} needs a {self.n ** 2}x{self.n ** 2} matrix")

    def __call__(self, x: RatMatrix) -> RatMatrix:
        if x.shape != (self.n, self.n):
            raise ValueError("argument has the wrong size")
        return RatMatrix.from_vec(self.n, self.rep.apply_vec(x.vec()))

    def compose(self, other: "MatrixLinearMap") -> "MatrixLinearMap":
        """self after other."""
        return MatrixLinearMap(self.n, self.rep @ other.rep)

    def scaled(self, c) -> "MatrixLinearMap":
        return MatrixLinearMap(self.n, self.rep.scale(c))

    def inverse(self) -> "MatrixLinearMap":
        return MatrixLinearMap(self.n, inverse(self.rep))

    def is_invertible(self) -> bool:
        return self.rep.is_invertible()

    def image_of_unit(self, i: int, j: int) -> RatMatrix:
        """L(e_ij), 1-based."""
        col = self.rep.column((i - 1) * self.n + (j - 1))
        return RatMatrix.from_vec(self.n, col)

    @classmethod
    def from_function(cls, n: int, fn) -> "MatrixLinearMap":
        cols = [fn(matrix_unit(n, i, j)).vec() for i in range(1, n + 1) for j in range(1, n + 1)]
        return cls(n, RatMatrix.from_columns(cols))

    @classmethod
    def identity(cls, n: int) -> "MatrixLinearMap":
        return cls(n, RatMatrix.identity(n * n))

    def to_json(self) -> dict:
        return matrix_to_json(self.rep)

    @classmethod
    def from_json(cls, obj: dict) -> "MatrixLinearMap":
        rep = matrix_from_json(obj)
        size = rep.rows
        n = int(round(size ** 0.5))
        if n * n != size:
            raise ValueError(f"map JSON has size {size}, which is not a perfect square")
        return cls(n, rep)


@dataclass(frozen=True)
class StandardFormParams:
    alpha: Fraction | int
    a: RatMatrix
    g: tuple
    transpose: bool = False

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_rational(self.alpha))
        object.__setattr__(self, "g", tuple(as_rational(x) for x in self.g))
        if not self.a.is_square:
            raise ValueError("a must be square")
        if len(self.g) != self.n ** 2:
            raise ValueError(f"g needs {self.n ** 2} coordinates")

    @property
    def n(self) -> int:
        return self.a.rows

    def g_at(self, x: RatMatrix):
        return as_rational(sum(c * v for c, v in zip(self.g, x.vec()) if c))

    @property
    def g_of_one(self):
        n = self.n
        return as_rational(sum(self.g[i * n + i] for i in range(n)))

    def to_json(self) -> dict:
        return {
            "alpha": rational_str(self.alpha),
            "a": matrix_to_json(self.a),
            "g": [rational_str(x) for x in self.g],
            "transpose": self.transpose,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "StandardFormParams":
        try:
            return cls(alpha=as_rational(str(obj["alpha"])), a=matrix_from_json(obj["a"]),
                       g=tuple(as_rational(str(x)) for x in obj["g"]),
                       transpose=bool(obj["transpose"]))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed params JSON: {exc}") from None


def standard_rep(p: StandardFormParams) -> RatMatrix:
    """The n^2 x n^2 matrix of the standard-form map, without validity checks."""
    n = p.n
    a = p.a
    ainv = inverse(a)
    size = n * n
    cols = []
    for q in range(n):
        for r in range(n):
            # image of e_qr: alpha * a e a^-1 with e = e_qr or e_rq
            src, dst = (r, q) if p.transpose else (q, r)
            acol = a.column(src)
            brow = ainv.row(dst)
            col = [p.alpha * acol[i] * brow[j] for i in range(n) for j in range(n)]
            gq = p.g[q * n + r]
            if gq:
                for i in range(n):
                    col[i * n + i] += gq
            cols.append(col)
    return RatMatrix([[cols[c][r] for c in range(size)] for r in range(size)])


def standard_map(p: StandardFormParams) -> MatrixLinearMap:
    if p.alpha == 0:
        raise ValueError("alpha must be nonzero")
    if determinant(p.a) == 0:
        raise ValueError("a must be invertible")
    if p.g_of_one == -p.alpha:
        raise ValueError("g(1) = -alpha gives a singular map")
    return MatrixLinearMap(p.n, standard_rep(p))


def transpose_map(n: int) -> MatrixLinearMap:
    return MatrixLinearMap.from_function(n, lambda x: x.T)


def conjugation_map(a: RatMatrix, alpha=1) -> MatrixLinearMap:
    n = a.rows
    return standard_map(StandardFormParams(alpha, a, (0,) * (n * n)))


def random_standard_params(n: int, rng: random.Random, transpose: bool | None = None,
                           central: bool = True) -> StandardFormParams:
    """Random valid parameters: small alpha, invertible a, optional functional."""
    while True:
        alpha = Fraction(rng.choice([-3, -2, -1, 1, 2, 3]), rng.choice([1, 1, 2, 3]))
        a = random_invertible(n, rng)
        g = tuple(rng.randint(-2, 2) for _ in range(n * n)) if central else (0,) * (n * n)
        t = rng.random() < 0.5 if transpose is None else transpose
        p = StandardFormParams(alpha, a, g, t)
        if p.g_of_one != -p.alpha:
            return p


# ---------------------------------------------------------------------------
# zeros of f


def slot_map(f: MultilinearPoly, fixed: Sequence[RatMatrix | None], slot: int,
             n: int) -> RatMatrix:
    """Matrix of x -> f(a_1, ..., x at ``slot`` (0-based), ..., a_d)."""
    if len(fixed) != f.degree:
        raise ValueError("need one entry per slot")
    if not 0 <= slot < f.degree:
        raise ValueError("slot out of range")
    cols = []
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            args = list(fixed)
            args[slot] = matrix_unit(n, i, j)
            cols.append(evaluate(f, args).vec())
    return RatMatrix.from_columns(cols)


def _random_sample_matrix(n: int, rng: random.Random) -> RatMatrix:
    # half the time low rank, so slot maps like x -> a x have kernels
    if n == 1 or rng.random() < 0.5:
        return random_matrix(n, rng)
    return _low_rank(n, rng.randint(1, n - 1), rng)


def _low_rank(n: int, r: int, rng: random.Random) -> RatMatrix:
    u = RatMatrix([[rng.randint(-2, 2) for _ in range(r)] for _ in range(n)])
    v = RatMatrix([[rng.randint(-2, 2) for _ in range(n)] for _ in range(r)])
    return u @ v


def _fallback_zero(f: MultilinearPoly, n: int) -> tuple:
    d = f.degree
    if d >= 2 and n >= 2:
        # e_12 e_12 = 0, so every monomial vanishes
        t = tuple(matrix_unit(n, 1, 2) for _ in range(d))
    else:
        t = tuple(RatMatrix.zeros(n) for _ in range(d))
    return t


def sample_zero(f: MultilinearPoly, n: int, rng: random.Random, retries: int = 12,
                allow_fallback: bool = True) -> tuple:
    """A tuple with f(tuple) = 0: random matrices in all slots but one, and a
    random kernel element of the remaining slot map in that one."""
    d = f.degree
    if d < 1:
        raise ValueError("polynomial must have degree >= 1")
    for _ in range(retries):
        slot = rng.randrange(d)
        fixed: list = [None if k == slot else _random_sample_matrix(n, rng) for k in range(d)]
        ker = kernel_basis(slot_map(f, fixed, slot, n))
        if not ker:
            continue
        while True:
            coeffs = [rng.randint(-3, 3) for _ in ker]
            if any(coeffs):
                break
        vec = [sum(c * v[k] for c, v in zip(coeffs, ker)) for k in range(n * n)]
        fixed[slot] = RatMatrix.from_vec(n, vec)
        t = tuple(fixed)
        if not evaluate(f, t).is_zero():  # pragma: no cover - would be a kernel bug
            raise AssertionError("sampled tuple is not a zero")
        return t
    if allow_fallback:
        t = _fallback_zero(f, n)
        if evaluate(f, t).is_zero():
            return t
    raise SamplingError(f"no zero of {f} found in M_{n} after {retries} attempts")


@dataclass(frozen=True)
class PreserveVerdict:
    passed: bool
    trials_run: int
    counterexample: tuple | None = None  # (tuple, f(L(tuple)))

    def __post_init__(self):
        if not self.passed and self.counterexample is None:
            raise ValueError("a failed verdict needs a counterexample")


def _is_counterexample(f, L, t) -> RatMatrix | None:
    if not evaluate(f, t).is_zero():
        return None
    img = evaluate(f, [L(a) for a in t])
    return None if img.is_zero() else img


def minimize_counterexample(f: MultilinearPoly, L: MatrixLinearMap, t: tuple,
                            unit_budget: int = 20000) -> tuple[tuple, RatMatrix]:
    """Replace a counterexample by a sparser one.

    If the unit-tuple search space is small, the first counterexample made
    of matrix units (basis order) is returned; otherwise slots are greedily
    swapped for matrix units while the tuple stays a counterexample.
    """
    n, d = L.n, f.degree
    units = [matrix_unit(n, i, j) for i in range(1, n + 1) for j in range(1, n + 1)]
    if len(units) ** d <= unit_budget:
        for combo in itertools.product(units, repeat=d):
            img = _is_counterexample(f, L, combo)
            if img is not None:
                return tuple(combo), img
    cur = list(t)
    for k in range(d):
        for u in units:
            trial = cur[:k] + [u] + cur[k + 1:]
            if _is_counterexample(f, L, trial) is not None:
                cur = trial
                break
    img = _is_counterexample(f, L, cur)
    if img is None:  # pragma: no cover - minimization only keeps counterexamples
        raise AssertionError("minimization lost the counterexample")
    return tuple(cur), img


def check_preserves_zeros(f: MultilinearPoly, L: MatrixLinearMap, trials: int,
                          rng: random.Random, minimize: bool = True,
                          include_inverse: bool = False) -> PreserveVerdict:
    """Sample zeros of f and test whether L maps each to a zero.

    ``include_inverse`` runs the same check on L^-1 afterwards.
    """
    if f.degree < 1:
        raise ValueError("polynomial must have degree >= 1")
    maps = [L, L.inverse()] if include_inverse else [L]
    run = 0
    for M in maps:
        for _ in range(trials):
            t = sample_zero(f, M.n, rng)
            run += 1
            img = evaluate(f, [M(a) for a in t])
            if not img.is_zero():
                if minimize:
                    t, img = minimize_counterexample(f, M, t)
                return PreserveVerdict(False, run, (t, img))
    return PreserveVerdict(True, run)


# ---------------------------------------------------------------------------
# recovering the standard form


def _traceless_part(x: RatMatrix) -> RatMatrix:
    n = x.rows
    return x - RatMatrix.scalar(n, Fraction(x.trace(), n))


def _proportionality(u: RatMatrix, v: RatMatrix):
    """beta with u = beta v, or None."""
    uv, vv = u.vec(), v.vec()
    beta = None
    for a, b in zip(uv, vv):
        if b != 0:
            beta = Fraction(a) / b
            break
    if beta is None:
        return None
    if all(a == beta * b for a, b in zip(uv, vv)):
        return as_rational(beta)
    return None


def _normalize_gauge(a: RatMatrix) -> RatMatrix:
    first = next(x for x in a.vec() if x != 0)
    return a.scale(Fraction(1) / first)


def decompose_standard(L: MatrixLinearMap) -> StandardFormParams | None:
    """Parameters reproducing L exactly, or None when L has no standard form.

    The bracket of traceless images fixes +-alpha; the (anti)automorphism
    candidate x -> psi(x)/alpha on traceless x then determines a through the
    linear system chi(x) a = a x on the generators e_{i,i+1}, e_{i+1,i}.
    Both transpose flags are tried and the answer is validated by
    reassembling the map.  ``a`` is scaled so its first nonzero entry is 1.
    """
    n = L.n
    if n < 2:
        return None
    one = RatMatrix.identity(n)
    if not L(one).is_scalar():
        return None

    def psi(x: RatMatrix) -> RatMatrix:
        return _traceless_part(L(x))

    x, y = matrix_unit(n, 1, 2), matrix_unit(n, 2, 1)
    beta = _proportionality(psi(x).commutator(psi(y)), psi(x.commutator(y)))
    if beta is None or beta == 0:
        return None
    gens = [matrix_unit(n, i, i + 1) for i in range(1, n)] + \
           [matrix_unit(n, i + 1, i) for i in range(1, n)]
    psi_cache: dict = {}

    def theta_hat(z: RatMatrix, alpha) -> RatMatrix:
        tr = Fraction(z.trace(), n)
        key = z
        if key not in psi_cache:
            psi_cache[key] = psi(z - RatMatrix.scalar(n, tr))
        return psi_cache[key].scale(Fraction(1) / alpha) + RatMatrix.scalar(n, tr)

    for transpose in (False, True):
        alpha = -beta if transpose else beta
        red = RowReducer(n * n)
        for gen in gens:
            chi = theta_hat(gen.T if transpose else gen, alpha)
            # (chi a - a gen)_{rs} as a linear form in the entries of a
            for r in range(n):
                for s in range(n):
                    row = [0] * (n * n)
                    for k in range(n):
                        c = chi[r, k]
                        if c:
                            row[k * n + s] += c
                        g = gen[k, s]
                        if g:
                            row[r * n + k] -= g
                    if any(row):
                        red.add(row)
        ker = red.kernel()
        if len(ker) != 1:
            continue
        a = RatMatrix.from_vec(n, ker[0])
        if determinant(a) == 0:
            continue
        a = _normalize_gauge(a)
        ainv = inverse(a)
        g = []
        ok = True
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                e = matrix_unit(n, i, j)
                core = a @ (e.T if transpose else e) @ ainv
                rest = L(e) - core.scale(alpha)
                if not rest.is_scalar():
                    ok = False
                    break
                g.append(rest[0, 0])
            if not ok:
                break
        if not ok:
            continue
        params = StandardFormParams(alpha, a, tuple(g), transpose)
        if params.g_of_one == -alpha:
            continue
        if standard_rep(params) == L.rep:
            return params
    return None


# ---------------------------------------------------------------------------
# consequences for special polynomials


def sample_orthogonal_pair(n: int, rng: random.Random) -> tuple[RatMatrix, RatMatrix]:
    """(a, b) with ab = ba = 0, both nonzero: g p x p g^-1 and g (1-p) y (1-p) g^-1."""
    if n < 2:
        raise ValueError("need n >= 2")
    one = RatMatrix.identity(n)
    while True:
        k = rng.randint(1, n - 1)
        diag = [1] * k + [0] * (n - k)
        rng.shuffle(diag)
        p = RatMatrix.diagonal(diag)
        q = one - p
        g = random_invertible(n, rng)
        ginv = inverse(g)
        a = g @ p @ random_matrix(n, rng) @ p @ ginv
        b = g @ q @ random_matrix(n, rng) @ q @ ginv
        if not a.is_zero() and not b.is_zero():
            return a, b


def _unity_scalar(L: MatrixLinearMap):
    img = L(RatMatrix.identity(L.n))
    if not img.is_scalar() or img[0, 0] == 0:
        return None
    return img[0, 0]


def check_orthogonality_consequence(f: MultilinearPoly, L: MatrixLinearMap, trials: int,
                                    rng: random.Random) -> bool:
    """On orthogonal pairs (ab = ba = 0), images under L / lam anticommute when
    the coefficient sum of f is nonzero, and commute when it is zero but the
    x1-before-x2 sum is not.  Here L(1) = lam 1."""
    lam_hat = _unity_scalar(L)
    if lam_hat is None:
        raise ValueError("L(1) must be a nonzero scalar matrix")
    rep = classify(f)
    if not (rep.cond_a or rep.cond_b):
        raise ValueError("f satisfies neither the nonzero-sum nor the ordered-pair condition")
    psi = L.scaled(Fraction(1) / lam_hat)
    for _ in range(trials):
        a, b = sample_orthogonal_pair(L.n, rng)
        pa, pb = psi(a), psi(b)
        if rep.cond_a:
            if not (pa @ pb + pb @ pa).is_zero():
                return False
        elif pa @ pb != pb @ pa:
            return False
    return True


def is_scalar_multiple_of_jordan(L: MatrixLinearMap, trials: int,
                                 rng: random.Random) -> tuple[bool, object]:
    """(True, alpha) when L(1) = alpha 1 and L / alpha squares correctly.

    Random squares refute quickly; a "yes" is then confirmed exactly by the
    polarized identity psi(xy + yx) = psi(x)psi(y) + psi(y)psi(x) on all
    pairs of matrix units.
    """
    alpha = _unity_scalar(L)
    if alpha is None:
        return False, None
    n = L.n
    psi = L.scaled(Fraction(1) / alpha)
    for _ in range(trials):
        a = random_matrix(n, rng, -3, 3)
        pa = psi(a)
        if psi(a @ a) != pa @ pa:
            return False, None
    units = [matrix_unit(n, i, j) for i in range(1, n + 1) for j in range(1, n + 1)]
    imgs = [psi(u) for u in units]
    for p in range(len(units)):
        for q in range(p, len(units)):
            x, y = units[p], units[q]
            if psi(x @ y + y @ x) != imgs[p] @ imgs[q] + imgs[q] @ imgs[p]:
                return False, None
    return True, alpha
