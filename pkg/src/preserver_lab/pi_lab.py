"""Evaluating multilinear polynomials on M_n and testing polynomial identities.

Identity testing never multiplies dense matrices.  By multilinearity f is
an identity of M_n iff it vanishes on every tuple of matrix units, and a
product of units is again a unit or zero, so a tuple's value is found by
walking the orderings whose consecutive units chain (column of one equals
row of the next).  Tuples are enumerated only up to relabeling of the
indices 1..n, since conjugating by a permutation matrix preserves
vanishing.
"""
from __future__ import annotations

import itertools
import os
import random
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from math import lcm
from typing import Sequence

from .exact_matrix import (
    RatMatrix,
    RowReducer,
    corner_units,
    in_span,
    is_rank_one_idempotent,
    kernel_basis,
    matrix_unit,
    random_rank_one_idempotent,
    staircase_indices,
)
from .free_algebra import MultilinearPoly, substitute_unit

MatrixTuple = tuple  # tuple[RatMatrix, ...]
UnitTuple = tuple  # tuple[tuple[int, int], ...], 0-based (row, col) per slot


def _check_tuple(f: MultilinearPoly, t: Sequence[RatMatrix]) -> int:
    if len(t) != f.degree:
        raise ValueError(f"polynomial of degree {f.degree} evaluated on {len(t)} matrices")
    if not t:
        raise ValueError("empty tuple")
    n = t[0].rows
    for a in t:
        if a.shape != (n, n):
            raise ValueError("tuple entries must all be n x n")
    return n


# ---------------------------------------------------------------------------
# dense evaluation


def _int_rows(m: RatMatrix) -> tuple[tuple[tuple[int, ...], ...], int]:
    den = 1
    for r in m:
        for x in r:
            if isinstance(x, Fraction):
                den = lcm(den, x.denominator)
    return tuple(tuple(int(x * den) for x in r) for r in m), den


def _imul(a, b):
    bt = tuple(zip(*b))
    return tuple(tuple(sum(x * y for x, y in zip(r, c)) for c in bt) for r in a)


def _izero(a) -> bool:
    return not any(any(r) for r in a)


def evaluate(f: MultilinearPoly, t: Sequence[RatMatrix]) -> RatMatrix:
    """f(a_1, ..., a_d), exactly.

    Shares prefix products across monomials and works on integer-scaled
    copies of the inputs; by multilinearity the true value is the integer
    result divided by the product of the scales.
    """
    n = _check_tuple(f, t)
    if f.is_zero():
        return RatMatrix.zeros(n)
    scaled = [_int_rows(a) for a in t]
    mats = [s[0] for s in scaled]
    den = 1
    for _, s in scaled:
        den *= s
    cden = 1
    for c in f._c.values():
        if isinstance(c, Fraction):
            cden = lcm(cden, c.denominator)
    items = [(tuple(v - 1 for v in p), int(c * cden)) for p, c in f._c.items()]
    acc = [[0] * n for _ in range(n)]
    d = f.degree

    def rec(group, depth, prod):
        if depth == d:
            c = group[0][1]
            for i in range(n):
                row, src = acc[i], prod[i]
                for j in range(n):
                    if src[j]:
                        row[j] += c * src[j]
            return
        buckets: dict = {}
        for item in group:
            buckets.setdefault(item[0][depth], []).append(item)
        for k, sub in buckets.items():
            nxt = mats[k] if prod is None else _imul(prod, mats[k])
            if _izero(nxt):
                continue
            rec(sub, depth + 1, nxt)

    rec(items, 0, None)
    total = den * cden
    return RatMatrix([[Fraction(x, total) for x in r] for r in acc])


def evaluate_free_at(f: MultilinearPoly, t: Sequence[RatMatrix]) -> RatMatrix:
    """Naive term-by-term evaluation; used as an independent oracle."""
    n = _check_tuple(f, t)
    out = RatMatrix.zeros(n)
    for p, c in f.items():
        prod = RatMatrix.identity(n)
        for v in p:
            prod = prod @ t[v - 1]
        out = out + prod.scale(c)
    return out


# ---------------------------------------------------------------------------
# matrix-unit tuples


def _coeff_trie(f: MultilinearPoly) -> dict:
    """Nested dict keyed by 0-based slot; the node at depth d is the coefficient."""
    trie: dict = {}
    d = f.degree
    for p, c in f._c.items():
        node = trie
        for depth, v in enumerate(p):
            if depth == d - 1:
                node[v - 1] = c
            else:
                node = node.setdefault(v - 1, {})
    return trie


def _unit_value(units: UnitTuple, trie: dict, d: int) -> dict:
    """Value of f on a unit tuple as {(row, col): coefficient}, zeros dropped."""
    by_row: dict = {}
    for k, (r, _) in enumerate(units):
        by_row.setdefault(r, []).append(k)
    used = [False] * d
    res: dict = {}

    def dfs(node, end, depth, start_row):
        if depth == d:
            key = (start_row, end)
            res[key] = res.get(key, 0) + node
            return
        for k in by_row.get(end, ()):
            if used[k]:
                continue
            child = node.get(k)
            if child is None:
                continue
            used[k] = True
            dfs(child, units[k][1], depth + 1, start_row)
            used[k] = False

    for k in range(d):
        child = trie.get(k)
        if child is None:
            continue
        used[k] = True
        dfs(child, units[k][1], 1, units[k][0])
        used[k] = False
    return {key: v for key, v in res.items() if v != 0}


def unit_tuple_value(f: MultilinearPoly, units: UnitTuple, n: int) -> RatMatrix:
    """f evaluated on unit tuple (0-based (row, col) pairs) via the product rule."""
    if len(units) != f.degree:
        raise ValueError("arity mismatch")
    vals = _unit_value(tuple(units), _coeff_trie(f), f.degree) if f.degree else {}
    rows = [[0] * n for _ in range(n)]
    for (r, c), v in vals.items():
        rows[r][c] = v
    return RatMatrix(rows)


def units_to_tuple(units: UnitTuple, n: int) -> MatrixTuple:
    return tuple(matrix_unit(n, r + 1, c + 1) for r, c in units)


def _has_trail(seq: Sequence[int], d: int) -> bool:
    # necessary condition for a chaining order using all d units
    bal: dict = {}
    for k in range(d):
        r, c = seq[2 * k], seq[2 * k + 1]
        if r != c:
            bal[r] = bal.get(r, 0) + 1
            bal[c] = bal.get(c, 0) - 1
    plus = minus = 0
    for v in bal.values():
        if v == 0:
            continue
        if v == 1:
            plus += 1
        elif v == -1:
            minus += 1
        else:
            return False
    return plus == minus and plus <= 1


def _rgs(length: int, n: int, prefix: Sequence[int] = ()):
    """Restricted growth strings (first occurrences appear in order 0, 1, ...)
    of the given length over labels 0..n-1 extending ``prefix``."""
    seq = list(prefix) + [0] * (length - len(prefix))
    top = max(prefix) + 1 if prefix else 0

    def rec(pos, top):
        if pos == length:
            yield seq
            return
        for v in range(min(top + 1, n)):
            seq[pos] = v
            yield from rec(pos + 1, max(top, v + 1))

    yield from rec(len(prefix), top)


def _scan_shard(args) -> UnitTuple | None:
    f, n, prefix = args
    d = f.degree
    trie = _coeff_trie(f)
    for seq in _rgs(2 * d, n, prefix):
        if not _has_trail(seq, d):
            continue
        units = tuple((seq[2 * k], seq[2 * k + 1]) for k in range(d))
        if _unit_value(units, trie, d):
            return units
    return None


def resolve_workers(workers: int | None = None) -> int:
    """Worker count; ``None`` reads PRESERVER_LAB_THREADS (0 = one per CPU)."""
    if workers is None:
        raw = os.environ.get("PRESERVER_LAB_THREADS", "1").strip() or "1"
        try:
            workers = int(raw)
        except ValueError:
            raise ValueError(f"PRESERVER_LAB_THREADS must be an integer, got {raw!r}") from None
    if workers <= 0:
        workers = os.cpu_count() or 1
    return workers


def find_nonvanishing_unit_tuple(f: MultilinearPoly, n: int,
                                 workers: int | None = 1) -> UnitTuple | None:
    """First unit tuple (in canonical enumeration order) where f is nonzero.

    With several workers the enumeration is sharded by a fixed label
    prefix; shards are consumed in order, so the answer does not depend on
    the worker count.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if f.is_zero():
        return None
    d = f.degree
    if d == 0:
        return ()
    workers = resolve_workers(workers)
    if workers == 1 or 2 * d < 6:
        return _scan_shard((f, n, ()))
    plen = min(2 * d, 5)
    shards = [(f, n, tuple(p)) for p in _rgs(plen, n)]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        for hit in ex.map(_scan_shard, shards, chunksize=1):
            if hit is not None:
                ex.shutdown(wait=False, cancel_futures=True)
                return hit
    return None


def is_identity(f: MultilinearPoly, n: int, workers: int | None = 1) -> bool:
    """True iff f vanishes on all of M_n (f must be multilinear)."""
    return find_nonvanishing_unit_tuple(f, n, workers) is None


# ---------------------------------------------------------------------------
# staircase witness


def least_support_permutation(f: MultilinearPoly) -> tuple:
    if f.is_zero():
        raise ValueError("zero polynomial has no monomials")
    return min(f._c)


def nonidentity_witness(f: MultilinearPoly, n: int) -> MatrixTuple:
    """Staircase units placed so that only the least monomial of f survives.

    Slot s(p) gets the p-th staircase unit, where s is the lexicographically
    least permutation with nonzero coefficient; the value is lam_s e_1k.
    """
    d = f.degree
    if d >= 2 * n:
        raise ValueError(f"degree {d} >= 2n = {2 * n}: no staircase witness in M_{n}")
    sigma = least_support_permutation(f)
    stairs = staircase_indices(d)
    slots: list = [None] * d
    for p, v in enumerate(sigma):
        slots[v - 1] = stairs[p]
    return tuple(matrix_unit(n, i, j) for i, j in slots)


# ---------------------------------------------------------------------------
# the central-solution system


def _slot_equations(trie: dict, units: Sequence, slot: int, d: int, n: int) -> dict:
    """Linear forms in c (row-major coordinates) for each entry of
    f(a_1, ..., c at ``slot``, ..., a_d) with the other slots matrix units."""
    by_row: dict = {}
    for k, u in enumerate(units):
        if k != slot:
            by_row.setdefault(u[0], []).append(k)
    others = [k for k in range(d) if k != slot]
    used = [False] * d
    eqs: dict = {}

    def add(entry, var, lam):
        e = eqs.setdefault(entry, {})
        e[var] = e.get(var, 0) + lam

    def contribute(left, right, lam):
        if left is not None and right is not None:
            add((left[0], right[1]), left[1] * n + right[0], lam)
        elif right is not None:
            t0, u0 = right
            for x in range(n):
                add((x, u0), x * n + t0, lam)
        elif left is not None:
            r0, s0 = left
            for y in range(n):
                add((r0, y), s0 * n + y, lam)
        else:
            for x in range(n):
                for y in range(n):
                    add((x, y), x * n + y, lam)

    def dfs(node, depth, placed, left, seg_start, end):
        if depth == d:
            right = None if seg_start is None else (seg_start, end)
            contribute(left, right, node)
            return
        if not placed:
            child = node.get(slot)
            if child is not None:
                lft = None if seg_start is None else (seg_start, end)
                dfs(child, depth + 1, True, lft, None, None)
        cands = others if seg_start is None else by_row.get(end, ())
        for k in cands:
            if used[k]:
                continue
            child = node.get(k)
            if child is None:
                continue
            used[k] = True
            r, c = units[k]
            dfs(child, depth + 1, placed, left, r if seg_start is None else seg_start, c)
            used[k] = False

    dfs(trie, 0, False, None, None, None)
    out = {}
    for entry, form in eqs.items():
        form = {v: c for v, c in form.items() if c != 0}
        if form:
            out[entry] = form
    return out


def _random_chained_units(d: int, n: int, slot: int, rng: random.Random) -> list:
    # a random walk of units, shuffled into the slots, so some ordering survives
    walk = [rng.randrange(n) for _ in range(d + 1)]
    steps = [(walk[p], walk[p + 1]) for p in range(d)]
    positions = list(range(d))
    rng.shuffle(positions)
    units: list = [None] * d
    others = [k for k in range(d) if k != slot]
    for k, p in zip(others, positions):
        units[k] = steps[p]
    return units


def _feed(red: RowReducer, eqs: dict, width: int) -> None:
    for entry in sorted(eqs):
        if red.rank == width:
            return
        row = [0] * width
        for v, c in eqs[entry].items():
            row[v] = c
        red.add(row)


def _is_identity_vec(vec: Sequence, n: int) -> bool:
    return RatMatrix.from_vec(n, vec).is_scalar()


def unity_solves_all(f: MultilinearPoly, n: int) -> bool:
    """Does c = 1 satisfy every equation, i.e. is each unit substitution of f
    an identity of M_n?"""
    return all(is_identity(substitute_unit(f, i), n) for i in range(1, f.degree + 1))


def central_solutions(f: MultilinearPoly, n: int, seed: int = 0,
                      sample_rounds: int | None = None) -> list[RatMatrix]:
    """Basis of {c : f(c, a_2..a_d) = ... = f(a_1..a_(d-1), c) = 0 for all a_i}.

    Equations come from matrix-unit tuples.  Random chained tuples are tried
    first; the search stops as soon as the answer is certain (rank n^2, or
    rank n^2 - 1 with a scalar kernel that is known to solve the full
    system).  Otherwise every unit tuple is fed in.
    """
    d = f.degree
    width = n * n
    if f.is_zero() or d == 0:
        return [RatMatrix.from_vec(n, [int(i == j) for j in range(width)]) for i in range(width)]
    trie = _coeff_trie(f)
    red = RowReducer(width)
    rng = random.Random(seed)
    rounds = sample_rounds if sample_rounds is not None else 40 * width
    one_ok = None

    def settled() -> bool:
        nonlocal one_ok
        if red.rank == width:
            return True
        if red.rank == width - 1:
            (k,) = red.kernel()
            if _is_identity_vec(k, n):
                if one_ok is None:
                    one_ok = unity_solves_all(f, n)
                return one_ok
        return False

    for r in range(rounds):
        slot = r % d
        if r % 2:
            units = [(rng.randrange(n), rng.randrange(n)) for _ in range(d)]
        else:
            units = _random_chained_units(d, n, slot, rng)
        units[slot] = (0, 0)
        _feed(red, _slot_equations(trie, units, slot, d, n), width)
        if red.rank >= width - 1 and settled():
            break
    else:
        all_units = [(i, j) for i in range(n) for j in range(n)]
        done = False
        for slot in range(d):
            for combo in itertools.product(all_units, repeat=d - 1):
                units = list(combo)
                units.insert(slot, (0, 0))
                _feed(red, _slot_equations(trie, units, slot, d, n), width)
                if red.rank == width:
                    done = True
                    break
            if done:
                break
    return [RatMatrix.from_vec(n, v) for v in red.kernel()]


def lemma23_parameters(d: int) -> tuple[int, int]:
    """(s, t) for the corner staircase: (d/2 - 1, d/2) or ((d-1)/2, (d-1)/2)."""
    if d % 2 == 0:
        return d // 2 - 1, d // 2
    return (d - 1) // 2, (d - 1) // 2


def check_lemma23_microidentity(f: MultilinearPoly, n: int, c: RatMatrix, e: RatMatrix) -> bool:
    """e f(e, c, h_11, h_12, h_22, ..., h_st) h_t1 == e c h_11 for the corner units h of e."""
    d = f.degree
    if d < 2:
        raise ValueError("needs degree >= 2")
    if f.coeff(tuple(range(1, d + 1))) != 1:
        raise ValueError("x1 x2 ... xd must be a monomial of f with coefficient 1")
    if d >= 2 * n:
        raise ValueError("needs d < 2n")
    if c.shape != (n, n) or e.shape != (n, n):
        raise ValueError("c and e must be n x n")
    if not is_rank_one_idempotent(e):
        raise ValueError("e must be a rank-one idempotent")
    s, t = lemma23_parameters(d)
    h = corner_units(e)
    args = [e, c] + [h[i - 1][j - 1] for i, j in staircase_indices(d - 2)] if d > 2 else [e, c]
    lhs = e @ evaluate(f, args) @ h[t - 1][0]
    rhs = e @ c @ h[0][0]
    return lhs == rhs


def _commutator_matrix(n: int, es: Sequence[RatMatrix]) -> RatMatrix:
    # rows: entries of [c, e] for each e, as linear forms in c
    rows = []
    width = n * n
    for e in es:
        cols = []
        for v in range(width):
            unit = RatMatrix.from_vec(n, [int(k == v) for k in range(width)])
            cols.append((unit @ e - e @ unit).vec())
        for r in range(width):
            rows.append([cols[v][r] for v in range(width)])
    return RatMatrix(rows)


def commutes_with_rank_one_idempotents(c: RatMatrix, trials: int, rng: random.Random) -> bool:
    """Does c commute with every rank-one idempotent?

    Random idempotents give a quick refutation; the decision itself is
    exact: c must lie in the common kernel of x -> [x, e] over the
    idempotents e_ii and e_11 + e_1j, which is exactly the scalars.
    """
    n = c.rows
    if not c.is_square:
        raise ValueError("c must be square")
    if n == 1:
        return True
    for _ in range(trials):
        e = random_rank_one_idempotent(n, rng)
        if c @ e != e @ c:
            return False
    es = [matrix_unit(n, i, i) for i in range(1, n + 1)]
    es += [matrix_unit(n, 1, 1) + matrix_unit(n, 1, j) for j in range(2, n + 1)]
    ker = kernel_basis(_commutator_matrix(n, es))
    return in_span(ker, c.vec())
