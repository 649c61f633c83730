import random

import pytest

from preserver_lab.exact_matrix import (
    RatMatrix,
    determinant,
    matrix_unit,
    random_invertible,
    trace_form_gram,
)
from preserver_lab.free_algebra import as_multilinear, random_multilinear, standard_poly
from preserver_lab.group_lab import (
    build_theta,
    membership_report,
    theta_breaks_zero_set,
)
from preserver_lab.pi_lab import evaluate
from preserver_lab.preservers import (
    MatrixLinearMap,
    check_preserves_zeros,
    conjugation_map,
    transpose_map,
)

E = matrix_unit


def test_theta_permutes_the_named_units():
    n = 3
    theta = build_theta(n)
    assert theta(E(n, 1, 2)) == E(n, 2, 1)
    assert theta(E(n, 2, 1)) == E(n, 1, 2)
    assert theta(E(n, 1, 1)) == E(n, 3, 3)
    assert theta(E(n, 3, 3)) == E(n, 1, 1)
    assert theta(E(n, 2, 3)) == E(n, 2, 3)
    assert theta.compose(theta) == MatrixLinearMap.identity(n)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_theta_in_special_orthogonal_fixing_one(n):
    theta = build_theta(n)
    gram = trace_form_gram(n)
    assert theta.rep.T @ gram @ theta.rep == gram
    assert determinant(theta.rep) == 1
    assert theta(RatMatrix.identity(n)) == RatMatrix.identity(n)
    rep = membership_report(theta)
    assert rep.in_SO_fix1 and rep.in_O_fix1 and rep.in_SO_full
    assert not rep.in_G


def test_theta_needs_room():
    with pytest.raises(ValueError):
        build_theta(2)


def test_conjugation_membership():
    rng = random.Random(0)
    for n in (2, 3):
        a = random_invertible(n, rng)
        rep = membership_report(conjugation_map(a))
        assert rep.in_G and rep.fixes_unity and rep.preserves_scalars
        assert not rep.in_T or a.is_scalar()


def test_conjugation_by_orthogonal_is_in_o():
    p = RatMatrix([[0, 1, 0], [0, 0, 1], [1, 0, 0]])
    rep = membership_report(conjugation_map(p))
    assert rep.in_G and rep.in_O_fix1


def test_transpose_membership():
    rep = membership_report(transpose_map(2))
    assert rep.in_O_fix1 and not rep.in_G and rep.det == -1
    assert not rep.in_SO_fix1
    rep3 = membership_report(transpose_map(3))
    assert rep3.det == -1 and rep3.in_O_fix1


def test_scalar_family_membership():
    n = 3
    rep = membership_report(MatrixLinearMap.identity(n).scaled(2))
    assert rep.in_T and not rep.in_T1 and not rep.fixes_unity
    assert membership_report(MatrixLinearMap.identity(n)).in_T1


def test_p_and_q_families():
    n = 2
    one = RatMatrix.identity(n)
    # x -> x + tr(x) 1 fixes traceless matrices; L(1) - 1 = 2 is not traceless
    shift = MatrixLinearMap.from_function(n, lambda x: x + one.scale(x.trace()))
    rep = membership_report(shift)
    assert not rep.in_P and not rep.in_Q
    # x -> x + x_12 1 fixes 1 and changes every x by a scalar
    q = MatrixLinearMap.from_function(n, lambda x: x + one.scale(x[0, 1]))
    rep = membership_report(q)
    assert rep.in_Q and rep.fixes_unity and not rep.in_P
    # identity on traceless matrices, and L(1) - 1 = 2(e_11 - e_22) is traceless
    p = MatrixLinearMap.from_function(
        n, lambda x: x + (E(n, 1, 1) - E(n, 2, 2)).scale(x.trace()))
    rep = membership_report(p)
    assert rep.in_P and not rep.fixes_unity


def test_membership_report_dict():
    d = membership_report(build_theta(3)).to_dict()
    assert d["det"] == "1" and d["in_SO_fix1"] is True


def test_membership_rejects_singular():
    with pytest.raises(ValueError):
        membership_report(MatrixLinearMap(2, RatMatrix.zeros(4)))


@pytest.mark.parametrize("n", [3, 4, 5])
@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_theta_breaks_zero_sets(n, d):
    for f in (as_multilinear(" ".join(f"x{i}" for i in range(1, d + 1))), standard_poly(d)):
        t, tt = theta_breaks_zero_set(f, n)
        assert not evaluate(f, t).is_zero()
        assert evaluate(f, tt).is_zero()
        assert tt == tuple(build_theta(n)(a) for a in t)


def test_theta_monomial_value():
    mono = as_multilinear("x1 x2 x3 x4")
    t, tt = theta_breaks_zero_set(mono, 3)
    assert evaluate(mono, t) == E(3, 1, 3)


def test_theta_random_polys():
    rng = random.Random(3)
    for _ in range(10):
        d = rng.randint(2, 5)
        f = random_multilinear(d, rng)
        t, tt = theta_breaks_zero_set(f, 3)
        assert not evaluate(f, t).is_zero() and evaluate(f, tt).is_zero()


def test_theta_does_not_preserve_zeros():
    v = check_preserves_zeros(standard_poly(4), build_theta(3), 50, random.Random(1))
    assert not v.passed
    t, img = v.counterexample
    assert evaluate(standard_poly(4), t).is_zero() and not img.is_zero()


def test_theta_preconditions():
    with pytest.raises(ValueError):
        theta_breaks_zero_set(standard_poly(6), 3)
    with pytest.raises(ValueError):
        theta_breaks_zero_set(standard_poly(3), 2)
    with pytest.raises(ValueError):
        theta_breaks_zero_set(as_multilinear("x1"), 3)
