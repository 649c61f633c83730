"""Membership tests for the named subgroups of GL(n^2) and the theta witness.

All tests are exact linear algebra in the row-major unit basis:

* G     similarities x -> a x a^-1: unital and multiplicative on basis pairs
* P     identity on traceless matrices, and L(1) - 1 traceless
* Q     L(1) = 1 and L(x) - x scalar for every x
* T     scalar on traceless matrices and scalar on 1
* T1    T with determinant 1
* O     preserves tr(xy); the "fix1" variants also fix 1; SO adds det = 1
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction

from .exact_matrix import RatMatrix, determinant, matrix_unit, rational_str, trace_form_gram
from .free_algebra import MultilinearPoly
from .pi_lab import evaluate, nonidentity_witness
from .preservers import MatrixLinearMap


class WitnessError(RuntimeError):
    """The theta construction failed to separate the zero sets."""


@dataclass(frozen=True)
class GroupMembershipReport:
    in_G: bool
    in_P: bool
    in_Q: bool
    in_T: bool
    in_T1: bool
    in_O_full: bool
    in_O_fix1: bool
    in_SO_full: bool
    in_SO_fix1: bool
    det: object
    fixes_unity: bool
    preserves_scalars: bool

    def to_dict(self) -> dict:
        out = asdict(self)
        out["det"] = rational_str(self.det)
        return out


def _traceless_basis(n: int) -> list[RatMatrix]:
    basis = [matrix_unit(n, i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]
    basis += [matrix_unit(n, i, i) - matrix_unit(n, i + 1, i + 1) for i in range(1, n)]
    return basis


def _is_multiplicative(L: MatrixLinearMap) -> bool:
    n = L.n
    units = {(i, j): matrix_unit(n, i, j) for i in range(1, n + 1) for j in range(1, n + 1)}
    imgs = {k: L.image_of_unit(*k) for k in units}
    zero = RatMatrix.zeros(n)
    for (i, j), a in imgs.items():
        for (k, l), b in imgs.items():
            expect = imgs[(i, l)] if j == k else zero
            if a @ b != expect:
                return False
    return True


def _preserves_trace_form(L: MatrixLinearMap) -> bool:
    gram = trace_form_gram(L.n)
    return L.rep.T @ gram @ L.rep == gram


def membership_report(L: MatrixLinearMap) -> GroupMembershipReport:
    n = L.n
    det = determinant(L.rep)
    if det == 0:
        raise ValueError("membership is defined for invertible maps only")
    one = RatMatrix.identity(n)
    l1 = L(one)
    fixes = l1 == one
    scal = l1.is_scalar()
    tl = _traceless_basis(n)
    tl_imgs = [L(x) for x in tl]

    on_traceless_identity = all(a == x for a, x in zip(tl_imgs, tl))
    in_P = on_traceless_identity and l1.trace() == n
    in_Q = fixes and all((L(matrix_unit(n, i, j)) - matrix_unit(n, i, j)).is_scalar()
                         for i in range(1, n + 1) for j in range(1, n + 1))
    in_T = scal
    if in_T:
        # the scalar on traceless matrices is read off e_12 -> s e_12
        s = Fraction(tl_imgs[0][0, 1])
        in_T = all(a == x.scale(s) for a, x in zip(tl_imgs, tl))
    in_O = _preserves_trace_form(L)
    return GroupMembershipReport(
        in_G=fixes and _is_multiplicative(L),
        in_P=in_P,
        in_Q=in_Q,
        in_T=in_T,
        in_T1=in_T and det == 1,
        in_O_full=in_O,
        in_O_fix1=in_O and fixes,
        in_SO_full=in_O and det == 1,
        in_SO_fix1=in_O and fixes and det == 1,
        det=det,
        fixes_unity=fixes,
        preserves_scalars=scal,
    )


_THETA_SWAPS = {(1, 2): (2, 1), (2, 1): (1, 2), (1, 1): (3, 3), (3, 3): (1, 1)}


def build_theta(n: int) -> MatrixLinearMap:
    """Swap e_12 <-> e_21 and e_11 <-> e_33, fixing every other unit."""
    if n < 3:
        raise ValueError("theta needs n >= 3")
    cols = []
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            ti, tj = _THETA_SWAPS.get((i, j), (i, j))
            cols.append(matrix_unit(n, ti, tj).vec())
    return MatrixLinearMap(n, RatMatrix.from_columns(cols))


def theta_breaks_zero_set(f: MultilinearPoly, n: int) -> tuple[tuple, tuple]:
    """(t, theta t) with f(t) != 0 and f(theta t) = 0, t the staircase witness."""
    d = f.degree
    if f.is_zero():
        raise ValueError("f must be nonzero")
    if d < 2:
        raise ValueError("needs degree >= 2")
    if n < 3:
        raise ValueError("needs n >= 3")
    if d >= 2 * n:
        raise ValueError(f"needs d < 2n, got d={d}, n={n}")
    theta = build_theta(n)
    t = nonidentity_witness(f, n)
    tt = tuple(theta(a) for a in t)
    if evaluate(f, t).is_zero():
        raise WitnessError("staircase tuple evaluates to zero")
    if not evaluate(f, tt).is_zero():
        raise WitnessError("theta image of the staircase is not a zero of f")
    return t, tt
