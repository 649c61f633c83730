import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from preserver_lab.exact_matrix import (
    RatMatrix,
    inverse,
    kernel_basis,
    matrix_unit,
    random_invertible,
    random_matrix,
    random_rank_one_idempotent,
    staircase_units,
)
from preserver_lab.free_algebra import (
    MultilinearPoly,
    as_multilinear,
    is_lie_generated_multilinear,
    random_lie_generated,
    random_multilinear,
    standard_poly,
)
from preserver_lab.pi_lab import (
    central_solutions,
    check_lemma23_microidentity,
    commutes_with_rank_one_idempotents,
    evaluate,
    evaluate_free_at,
    find_nonvanishing_unit_tuple,
    is_identity,
    lemma23_parameters,
    nonidentity_witness,
    resolve_workers,
    unit_tuple_value,
    units_to_tuple,
)

E = matrix_unit


def rand_tuple(d, n, rng):
    return tuple(random_matrix(n, rng) for _ in range(d))


def brute_central(f, n):
    # every equation from every unit tuple, one kernel computation
    d = f.degree
    units = [E(n, i, j) for i in range(1, n + 1) for j in range(1, n + 1)]
    rows = []
    for slot in range(d):
        for combo in itertools.product(units, repeat=d - 1):
            cols = []
            for c in units:
                args = list(combo)
                args.insert(slot, c)
                cols.append(evaluate_free_at(f, args).vec())
            rows.extend([cols[k][r] for k in range(n * n)] for r in range(n * n))
    return kernel_basis(RatMatrix(rows))


# evaluation

def test_evaluate_examples():
    n = 2
    assert evaluate(standard_poly(2), (E(n, 1, 2), E(n, 2, 1))) == E(n, 1, 1) - E(n, 2, 2)
    z = RatMatrix.zeros(3)
    assert evaluate(standard_poly(3), (z, z, z)).is_zero()
    mono = as_multilinear("x1 x2 x3 x4")
    assert evaluate(mono, staircase_units(4, 3)) == E(3, 1, 3)


def test_evaluate_rejects_bad_tuples():
    with pytest.raises(ValueError):
        evaluate(standard_poly(2), (E(2, 1, 1),))
    with pytest.raises(ValueError):
        evaluate(standard_poly(2), (E(2, 1, 1), E(3, 1, 1)))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(1, 3), st.integers(0, 10**6))
def test_evaluate_matches_naive(d, n, seed):
    rng = random.Random(seed)
    f = random_multilinear(d, rng)
    t = rand_tuple(d, n, rng)
    assert evaluate(f, t) == evaluate_free_at(f, t)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.sampled_from([2, 3]), st.integers(0, 10**6))
def test_multilinearity(d, n, seed):
    rng = random.Random(seed)
    f = random_multilinear(d, rng)
    t = list(rand_tuple(d, n, rng))
    slot = rng.randrange(d)
    a, b = random_matrix(n, rng), random_matrix(n, rng)
    alpha, beta = rng.randint(-3, 3), rng.randint(-3, 3)
    mixed = t.copy()
    mixed[slot] = a.scale(alpha) + b.scale(beta)
    ta, tb = t.copy(), t.copy()
    ta[slot], tb[slot] = a, b
    assert evaluate(f, mixed) == evaluate(f, ta).scale(alpha) + evaluate(f, tb).scale(beta)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.sampled_from([2, 3]), st.integers(0, 10**6))
def test_conjugation_invariance(d, n, seed):
    rng = random.Random(seed)
    f = random_multilinear(d, rng)
    t = rand_tuple(d, n, rng)
    g = random_invertible(n, rng)
    gi = inverse(g)
    assert evaluate(f, [g @ a @ gi for a in t]) == g @ evaluate(f, t) @ gi


def test_unit_tuple_value_matches_dense():
    rng = random.Random(2)
    f = random_multilinear(4, rng)
    for _ in range(50):
        units = tuple((rng.randrange(3), rng.randrange(3)) for _ in range(4))
        assert unit_tuple_value(f, units, 3) == evaluate(f, units_to_tuple(units, 3))


# identity testing

def test_identity_examples():
    assert is_identity(standard_poly(4), 2)
    assert not is_identity(standard_poly(3), 2)
    assert is_identity(standard_poly(2), 1)
    assert not is_identity(as_multilinear("x1 x2"), 3)


def test_identity_trivial_edges():
    assert is_identity(MultilinearPoly.zero(3), 2)
    assert not is_identity(as_multilinear("x1"), 2)


def test_identity_agrees_with_dense_sampling():
    rng = random.Random(4)
    f = standard_poly(4)
    for _ in range(500):
        assert evaluate(f, rand_tuple(4, 2, rng)).is_zero()


def test_found_tuple_really_is_nonvanishing():
    rng = random.Random(8)
    for _ in range(20):
        d = rng.randint(1, 4)
        f = random_multilinear(d, rng)
        hit = find_nonvanishing_unit_tuple(f, 2)
        if hit is None:
            for _ in range(30):
                assert evaluate(f, rand_tuple(d, 2, rng)).is_zero()
        else:
            assert not unit_tuple_value(f, hit, 2).is_zero()


def test_identity_result_independent_of_workers():
    f = as_multilinear("x1 x2 x3 - x3 x2 x1")
    single = find_nonvanishing_unit_tuple(f, 2, workers=1)
    multi = find_nonvanishing_unit_tuple(f, 2, workers=2)
    assert single == multi is not None
    assert find_nonvanishing_unit_tuple(standard_poly(4), 2, workers=2) is None


def test_resolve_workers(monkeypatch):
    monkeypatch.setenv("PRESERVER_LAB_THREADS", "3")
    assert resolve_workers(None) == 3
    monkeypatch.setenv("PRESERVER_LAB_THREADS", "0")
    assert resolve_workers(None) >= 1
    monkeypatch.setenv("PRESERVER_LAB_THREADS", "many")
    with pytest.raises(ValueError):
        resolve_workers(None)
    assert resolve_workers(2) == 2


# staircase witness

def test_witness_examples():
    v = evaluate(standard_poly(3), nonidentity_witness(standard_poly(3), 2))
    assert v in (E(2, 1, 2), -E(2, 1, 2))
    t = nonidentity_witness(as_multilinear("x1 x2"), 2)
    assert t == (E(2, 1, 1), E(2, 1, 2))
    assert evaluate(as_multilinear("x1 x2"), t) == E(2, 1, 2)
    assert not evaluate(standard_poly(5), nonidentity_witness(standard_poly(5), 3)).is_zero()


def test_witness_needs_small_degree():
    with pytest.raises(ValueError):
        nonidentity_witness(standard_poly(4), 2)


def test_witness_always_nonzero():
    rng = random.Random(12)
    for n in (3, 4, 5):
        for _ in range(17):
            d = rng.randint(1, min(2 * n - 1, 6))
            f = random_multilinear(d, rng)
            assert not evaluate(f, nonidentity_witness(f, n)).is_zero()


def test_staircase_order_unique_small():
    for d in range(2, 6):
        n = d // 2 + 1
        units = staircase_units(d, n)
        nonzero = 0
        for p in itertools.permutations(range(d)):
            prod = RatMatrix.identity(n)
            for k in p:
                prod = prod @ units[k]
            nonzero += not prod.is_zero()
        assert nonzero == 1


# central solutions

def test_central_examples():
    s4_3 = central_solutions(standard_poly(4), 3)
    assert s4_3 == [RatMatrix.identity(3)]
    assert len(central_solutions(standard_poly(4), 2)) == 4
    assert central_solutions(standard_poly(2), 2) == [RatMatrix.identity(2)]


def test_central_non_lie_generated_is_trivial():
    # x1 x2 with c = 1 leaves x1, not an identity; only c = 0 survives
    assert central_solutions(as_multilinear("x1 x2"), 3) == []
    assert central_solutions(standard_poly(5), 3) == []


@pytest.mark.parametrize("f_text,n", [
    ("x1 x2", 2), ("x1 x2 - x2 x1", 2), ("x1 x2 x3 - x3 x2 x1", 2),
    ("x1 x2 x3 - x1 x3 x2 - x2 x3 x1 + x3 x2 x1", 2), ("x1 x2 - x2 x1", 3),
])
def test_central_matches_full_system(f_text, n):
    f = as_multilinear(f_text)
    fast = central_solutions(f, n)
    slow = brute_central(f, n)
    assert len(fast) == len(slow)
    if slow:
        # same dimension and the union spans nothing more: equal spaces
        assert RatMatrix([b.vec() for b in fast] + list(slow)).rank() == len(slow)


def test_central_random_lie_generated_gives_scalars():
    rng = random.Random(21)
    for d in (2, 3, 4):
        f = random_lie_generated(d, rng)
        basis = central_solutions(f, 3, seed=d)
        assert basis == [RatMatrix.identity(3)]


def test_central_always_inside_scalars():
    rng = random.Random(22)
    for d in (2, 3, 4):
        f = random_multilinear(d, rng)
        basis = central_solutions(f, 3)
        assert all(b.is_scalar() for b in basis) and len(basis) <= 1
        assert (len(basis) == 1) == is_lie_generated_multilinear(f)


def test_central_is_seed_independent():
    f = standard_poly(4)
    assert central_solutions(f, 3, seed=1) == central_solutions(f, 3, seed=99)


def test_central_fallback_path():
    # no sampling rounds forces the exhaustive system
    assert central_solutions(standard_poly(2), 2, sample_rounds=0) == [RatMatrix.identity(2)]
    assert central_solutions(as_multilinear("x1 x2"), 2, sample_rounds=0) == []


# micro-identity

def test_corner_staircase_parameters():
    assert lemma23_parameters(4) == (1, 2)
    assert lemma23_parameters(5) == (2, 2)
    assert lemma23_parameters(2) == (0, 1)


def test_microidentity_examples():
    rng = random.Random(31)
    mono = as_multilinear("x1 x2 x3 x4")
    s4 = standard_poly(4)
    for _ in range(5):
        c = random_matrix(3, rng)
        assert check_lemma23_microidentity(mono, 3, c, E(3, 1, 1))
        assert check_lemma23_microidentity(s4, 3, c, random_rank_one_idempotent(3, rng))
    assert check_lemma23_microidentity(mono, 3, RatMatrix.identity(3), E(3, 1, 1))


def test_microidentity_random_polys():
    rng = random.Random(32)
    for d in range(2, 6):
        for _ in range(4):
            f = random_multilinear(d, rng)
            f = MultilinearPoly(d, {**f.coeffs, tuple(range(1, d + 1)): 1})
            n = 3
            c = random_matrix(n, rng)
            assert check_lemma23_microidentity(f, n, c, random_rank_one_idempotent(n, rng))


def test_microidentity_preconditions():
    with pytest.raises(ValueError):
        check_lemma23_microidentity(as_multilinear("x2 x1"), 3, RatMatrix.identity(3), E(3, 1, 1))
    with pytest.raises(ValueError):
        check_lemma23_microidentity(as_multilinear("x1 x2"), 3, RatMatrix.identity(3),
                                    RatMatrix.identity(3))


# rank-one idempotents

def test_commutes_with_idempotents_examples():
    rng = random.Random(0)
    assert commutes_with_rank_one_idempotents(RatMatrix.scalar(3, 3), 10, rng)
    assert not commutes_with_rank_one_idempotents(E(3, 1, 2), 10, rng)
    assert not commutes_with_rank_one_idempotents(RatMatrix.diagonal([1, 2]), 10, rng)
    assert not commutes_with_rank_one_idempotents(RatMatrix.diagonal([1, 2]), 0, rng)
