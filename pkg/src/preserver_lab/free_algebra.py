"""Noncommutative polynomials over Q and the multilinear subspace.

A word is a tuple of positive variable indices; ``()`` is the unity.  A
:class:`FreePoly` maps words to nonzero rationals.  A
:class:`MultilinearPoly` of degree d maps permutations of 1..d (one-line
notation, so the permutation ``s`` names the monomial
x_{s(1)} ... x_{s(d)}) to nonzero rationals.

Text form::

    poly  := term (('+'|'-') term)*      (optional sign before the first term)
    term  := [coeff ['*']] mono | coeff
    coeff := int | int '/' int
    mono  := '1' | var (['*'] var)*
    var   := 'x' int                     (index >= 1)
"""
from __future__ import annotations

import itertools
import random
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .exact_matrix import as_rational, rational_str

Word = tuple  # tuple[int, ...]


class PolySyntaxError(ValueError):
    """Raised on malformed polynomial text; ``pos`` is the 0-based offset."""

    def __init__(self, message: str, text: str, pos: int):
        self.text = text
        self.pos = pos
        super().__init__(f"{message} at position {pos}: {text!r}")


class NotMultilinearError(ValueError):
    pass


def _canon(terms: Iterable[tuple[Word, object]]) -> dict:
    out: dict = {}
    for w, c in terms:
        out[w] = out.get(w, 0) + c
    return {w: as_rational(c) for w, c in out.items() if c != 0}


class FreePoly:
    """Element of the free algebra Q<x1, x2, ...>. Immutable."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Word, object] | Iterable[tuple[Word, object]] = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        clean = []
        for w, c in items:
            w = tuple(w)
            if any((not isinstance(i, int)) or i < 1 for i in w):
                raise ValueError(f"variable indices must be positive integers: {w}")
            clean.append((w, as_rational(c)))
        self._terms = _canon(clean)

    @classmethod
    def _raw(cls, terms: dict) -> "FreePoly":
        p = object.__new__(cls)
        p._terms = terms
        return p

    @classmethod
    def one(cls) -> "FreePoly":
        return cls._raw({(): 1})

    @classmethod
    def zero(cls) -> "FreePoly":
        return cls._raw({})

    @classmethod
    def var(cls, i: int) -> "FreePoly":
        return cls({(i,): 1})

    @classmethod
    def monomial(cls, word: Sequence[int], coeff=1) -> "FreePoly":
        return cls({tuple(word): coeff})

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return sorted(self._terms.items())

    def coeff(self, word: Sequence[int]):
        return self._terms.get(tuple(word), 0)

    def __len__(self):
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        return max((len(w) for w in self._terms), default=-1)

    def variables(self) -> set[int]:
        return {i for w in self._terms for i in w}

    def __eq__(self, other):
        if isinstance(other, MultilinearPoly):
            other = other.to_free()
        if isinstance(other, (int, Fraction)):
            other = FreePoly({(): other})
        if not isinstance(other, FreePoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self):
        return f"FreePoly({format_poly(self)!r})"

    def __str__(self):
        return format_poly(self)

    def __add__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        t = dict(self._terms)
        for w, c in other._terms.items():
            t[w] = t.get(w, 0) + c
        return FreePoly._raw({w: as_rational(c) for w, c in t.items() if c != 0})

    __radd__ = __add__

    def __neg__(self):
        return FreePoly._raw({w: -c for w, c in self._terms.items()})

    def __sub__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return FreePoly.zero()
            return FreePoly._raw({w: as_rational(c * other) for w, c in self._terms.items()})
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return multiply(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * other
        return NotImplemented

    def relabel(self, mapping: Mapping[int, int]) -> "FreePoly":
        """Rename variables (letters not in ``mapping`` stay put)."""
        return FreePoly(_canon((tuple(mapping.get(i, i) for i in w), c)
                               for w, c in self._terms.items()))

    def substitute(self, images: Mapping[int, "FreePoly"]) -> "FreePoly":
        """Replace each variable x_i by ``images[i]`` (missing ones are kept)."""
        result = FreePoly.zero()
        cache = {}
        for w, c in self._terms.items():
            term = FreePoly({(): c})
            for i in w:
                if i not in cache:
                    cache[i] = images.get(i, FreePoly.var(i))
                term = term * cache[i]
            result = result + term
        return result


def _coerce(x) -> FreePoly | None:
    if isinstance(x, FreePoly):
        return x
    if isinstance(x, MultilinearPoly):
        return x.to_free()
    if isinstance(x, (int, Fraction)):
        return FreePoly({(): x})
    return None


def multiply(f: FreePoly, g: FreePoly) -> FreePoly:
    """Word-concatenation product."""
    t: dict = {}
    for w1, c1 in f._terms.items():
        for w2, c2 in g._terms.items():
            w = w1 + w2
            t[w] = t.get(w, 0) + c1 * c2
    return FreePoly._raw({w: as_rational(c) for w, c in t.items() if c != 0})


def commutator(f, g) -> FreePoly:
    f, g = _coerce(f), _coerce(g)
    return multiply(f, g) - multiply(g, f)


def partial_derivative(f: FreePoly, i: int) -> FreePoly:
    """Formal derivative: delete one occurrence of x_i, summed over occurrences."""
    if i < 1:
        raise ValueError("variable index must be >= 1")
    f = _coerce(f)
    out = []
    for w, c in f._terms.items():
        for pos, letter in enumerate(w):
            if letter == i:
                out.append((w[:pos] + w[pos + 1:], c))
    return FreePoly._raw(_canon(out))


# ---------------------------------------------------------------------------
# text form

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<var>x\d+)|(?P<op>[+\-*/])|(?P<bad>\S))")


def _tokenize(text: str):
    pos = 0
    toks = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:  # trailing whitespace
            break
        if m.lastgroup == "bad":
            start = m.start("bad")
            ch = text[start]
            if ch == ".":
                raise PolySyntaxError("coefficients must be integers or p/q rationals", text, start)
            raise PolySyntaxError(f"unexpected character {ch!r}", text, start)
        kind = m.lastgroup
        toks.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    return toks


def parse_poly(text: str) -> FreePoly:
    """Parse polynomial text (grammar in the module docstring)."""
    toks = _tokenize(text)
    if not toks:
        raise PolySyntaxError("empty polynomial", text, 0)
    i = 0
    terms = []

    def peek():
        return toks[i] if i < len(toks) else (None, None, len(text))

    sign = 1
    kind, val, pos = peek()
    if kind == "op" and val in "+-":
        sign = -1 if val == "-" else 1
        i += 1
    while True:
        kind, val, pos = peek()
        coeff = None
        if kind == "num":
            i += 1
            num = int(val)
            k2, v2, p2 = peek()
            if k2 == "op" and v2 == "/":
                i += 1
                k3, v3, p3 = peek()
                if k3 != "num":
                    raise PolySyntaxError("expected integer denominator", text, p3)
                if int(v3) == 0:
                    raise PolySyntaxError("zero denominator", text, p3)
                i += 1
                coeff = Fraction(num, int(v3))
            else:
                coeff = num
            k2, v2, p2 = peek()
            if k2 == "op" and v2 == "*":
                i += 1
                k3, _, p3 = peek()
                if k3 not in ("var", "num"):
                    raise PolySyntaxError("expected monomial after '*'", text, p3)
        kind, val, pos = peek()
        word: list[int] = []
        if kind == "num":
            if val != "1":
                raise PolySyntaxError("only '1' may stand as a monomial", text, pos)
            i += 1
        elif kind == "var":
            while True:
                idx = int(val[1:])
                if idx < 1:
                    raise PolySyntaxError("variable indices start at 1", text, pos)
                word.append(idx)
                i += 1
                kind, val, pos = peek()
                if kind == "op" and val == "*":
                    i += 1
                    kind, val, pos = peek()
                    if kind != "var":
                        raise PolySyntaxError("expected variable after '*'", text, pos)
                    continue
                if kind == "var":
                    continue
                break
        elif coeff is None:
            raise PolySyntaxError("expected a term", text, pos)
        terms.append((tuple(word), sign * (1 if coeff is None else coeff)))
        kind, val, pos = peek()
        if kind is None:
            break
        if kind == "op" and val in "+-":
            sign = -1 if val == "-" else 1
            i += 1
            if peek()[0] is None:
                raise PolySyntaxError("dangling operator", text, pos)
            continue
        raise PolySyntaxError(f"unexpected token {val!r}", text, pos)
    return FreePoly(terms)


def _word_str(w: Word) -> str:
    return " ".join(f"x{i}" for i in w)


def format_poly(f) -> str:
    """Deterministic printer; terms sorted lexicographically by word."""
    f = _coerce(f)
    if f.is_zero():
        return "0"
    parts = []
    for k, (w, c) in enumerate(sorted(f._terms.items())):
        neg = c < 0
        a = -c if neg else c
        if not w:
            body = rational_str(a)
        elif a == 1:
            body = _word_str(w)
        else:
            body = f"{rational_str(a)} {_word_str(w)}"
        if k == 0:
            parts.append(("-" if neg else "") + body)
        else:
            parts.append((" - " if neg else " + ") + body)
    return "".join(parts)


# ---------------------------------------------------------------------------
# multilinear polynomials


def _perm_sign(p: Sequence[int]) -> int:
    inv = sum(1 for a in range(len(p)) for b in range(a + 1, len(p)) if p[a] > p[b])
    return -1 if inv % 2 else 1


class MultilinearPoly:
    """Sum over permutations s of lam_s x_{s(1)} ... x_{s(d)}. Immutable.

    Degree 0 is allowed (a constant) so that unit substitution is total.
    """

    __slots__ = ("degree", "_c")

    def __init__(self, degree: int, coeffs: Mapping[Sequence[int], object] = ()):
        if degree < 0:
            raise ValueError("degree must be >= 0")
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        target = tuple(range(1, degree + 1))
        acc: dict = {}
        for perm, c in items:
            perm = tuple(perm)
            if tuple(sorted(perm)) != target:
                raise ValueError(f"{perm} is not a permutation of 1..{degree}")
            acc[perm] = acc.get(perm, 0) + as_rational(c)
        self.degree = degree
        self._c = {p: as_rational(c) for p, c in acc.items() if c != 0}

    @classmethod
    def _raw(cls, degree: int, coeffs: dict) -> "MultilinearPoly":
        m = object.__new__(cls)
        m.degree = degree
        m._c = coeffs
        return m

    @classmethod
    def zero(cls, degree: int) -> "MultilinearPoly":
        return cls._raw(degree, {})

    @classmethod
    def monomial(cls, perm: Sequence[int], coeff=1) -> "MultilinearPoly":
        return cls(len(perm), {tuple(perm): coeff})

    @classmethod
    def from_free(cls, f: FreePoly, degree: int | None = None) -> "MultilinearPoly":
        """View a free-algebra element as multilinear (raises if it is not)."""
        f = _coerce(f)
        if f.is_zero():
            return cls.zero(degree if degree is not None else 0)
        lengths = {len(w) for w in f._terms}
        if len(lengths) != 1:
            raise NotMultilinearError("terms of different degrees")
        d = lengths.pop()
        if degree is not None and degree != d:
            raise NotMultilinearError(f"expected degree {degree}, found {d}")
        target = tuple(range(1, d + 1))
        for w in f._terms:
            if tuple(sorted(w)) != target:
                raise NotMultilinearError(
                    f"monomial {_word_str(w) or '1'} does not use each of x1..x{d} exactly once")
        return cls._raw(d, dict(f._terms))

    @property
    def coeffs(self) -> dict:
        return dict(self._c)

    def items(self):
        return sorted(self._c.items())

    def coeff(self, perm: Sequence[int]):
        return self._c.get(tuple(perm), 0)

    def __len__(self):
        return len(self._c)

    def is_zero(self) -> bool:
        return not self._c

    def to_free(self) -> FreePoly:
        return FreePoly._raw(dict(self._c))

    def __eq__(self, other):
        if isinstance(other, MultilinearPoly):
            return self.degree == other.degree and self._c == other._c
        if isinstance(other, FreePoly):
            return self.to_free() == other
        return NotImplemented

    def __hash__(self):
        return hash((self.degree, frozenset(self._c.items())))

    def __repr__(self):
        return f"MultilinearPoly({self.degree}, {format_poly(self)!r})"

    def __str__(self):
        return format_poly(self)

    def __add__(self, other):
        if not isinstance(other, MultilinearPoly):
            return NotImplemented
        if other.degree != self.degree:
            raise ValueError("degree mismatch")
        t = dict(self._c)
        for p, c in other._c.items():
            t[p] = t.get(p, 0) + c
        return MultilinearPoly._raw(self.degree, {p: as_rational(c) for p, c in t.items() if c != 0})

    def __neg__(self):
        return MultilinearPoly._raw(self.degree, {p: -c for p, c in self._c.items()})

    def __sub__(self, other):
        if not isinstance(other, MultilinearPoly):
            return NotImplemented
        return self + (-other)

    def __mul__(self, c):
        if not isinstance(c, (int, Fraction)):
            return NotImplemented
        if c == 0:
            return MultilinearPoly.zero(self.degree)
        return MultilinearPoly._raw(self.degree, {p: as_rational(v * c) for p, v in self._c.items()})

    __rmul__ = __mul__


def as_multilinear(f) -> MultilinearPoly:
    if isinstance(f, MultilinearPoly):
        return f
    if isinstance(f, str):
        f = parse_poly(f)
    return MultilinearPoly.from_free(f)


def standard_poly(d: int) -> MultilinearPoly:
    """s_d = sum over S_d of sign(s) x_{s(1)} ... x_{s(d)}."""
    if d < 1:
        raise ValueError("standard polynomial needs d >= 1")
    return MultilinearPoly._raw(d, {p: _perm_sign(p)
                                    for p in itertools.permutations(range(1, d + 1))})


def substitute_unit(f: MultilinearPoly, i: int) -> MultilinearPoly:
    """f with x_i := 1, remaining variables renumbered 1..d-1 in order."""
    d = f.degree
    if not 1 <= i <= d:
        raise ValueError(f"slot {i} out of range 1..{d}")
    t: dict = {}
    for p, c in f._c.items():
        q = tuple(v if v < i else v - 1 for v in p if v != i)
        t[q] = t.get(q, 0) + c
    return MultilinearPoly._raw(d - 1, {q: as_rational(c) for q, c in t.items() if c != 0})


def is_lie_generated_multilinear(f: MultilinearPoly) -> bool:
    """All unit substitutions vanish (membership test for the subalgebra
    generated by 1 and Lie polynomials, multilinear inputs)."""
    return all(substitute_unit(f, i).is_zero() for i in range(1, f.degree + 1))


def reverse(f: MultilinearPoly) -> MultilinearPoly:
    """Reverse every monomial, so reverse(f)(a_1..a_d) = f(a_1^t..a_d^t)^t."""
    return MultilinearPoly._raw(f.degree, {p[::-1]: c for p, c in f._c.items()})


def collapse_last(f: MultilinearPoly) -> tuple:
    """(c_1..c_d) with f(x, ..., x, y) = sum_p c_p x^{p-1} y x^{d-p}.

    c_p sums the coefficients of monomials having x_d at position p.
    """
    d = f.degree
    out = [0] * d
    for p, c in f._c.items():
        out[p.index(d)] += c
    return tuple(as_rational(c) for c in out)


def total_coefficient(f: MultilinearPoly):
    return as_rational(sum(f._c.values()))


def ordered_pair_coefficient(f: MultilinearPoly):
    """Sum of coefficients of monomials where x_1 occurs before x_2."""
    if f.degree < 2:
        return 0
    return as_rational(sum(c for p, c in f._c.items() if p.index(1) < p.index(2)))


@dataclass(frozen=True)
class ClassificationReport:
    lam: object
    mu: object
    collapse: tuple
    cond_a: bool
    cond_b: bool
    cond_c: bool
    in_lie_generated: bool

    def to_dict(self) -> dict:
        return {
            "lambda": rational_str(self.lam),
            "mu": rational_str(self.mu),
            "collapse": [rational_str(c) for c in self.collapse],
            "condA": self.cond_a,
            "condB": self.cond_b,
            "condC": self.cond_c,
            "in_lie_generated": self.in_lie_generated,
        }


def classify(f: MultilinearPoly) -> ClassificationReport:
    if f.is_zero():
        raise ValueError("cannot classify the zero polynomial")
    lam = total_coefficient(f)
    mu = ordered_pair_coefficient(f)
    col = collapse_last(f)
    return ClassificationReport(
        lam=lam,
        mu=mu,
        collapse=col,
        cond_a=lam != 0,
        cond_b=lam == 0 and mu != 0,
        cond_c=lam == 0 and any(c != 0 for c in col),
        in_lie_generated=is_lie_generated_multilinear(f),
    )


# ---------------------------------------------------------------------------
# symbolic checks in two letters, x = x1 and y = x2


def _two_letter_eval(f: MultilinearPoly, first: FreePoly, second: FreePoly) -> FreePoly:
    images = {1: first, 2: second}
    one = FreePoly.one()
    for k in range(3, f.degree + 1):
        images[k] = one
    return f.to_free().substitute(images)


def symbolic_lemma31_identity(f: MultilinearPoly) -> bool:
    """f(x,y,1..1) + f(y,x,1..1) == lam (xy + yx), expanded in the free algebra."""
    if f.degree < 2:
        raise ValueError("needs degree >= 2")
    x, y = FreePoly.var(1), FreePoly.var(2)
    lhs = _two_letter_eval(f, x, y) + _two_letter_eval(f, y, x)
    rhs = (x * y + y * x) * total_coefficient(f)
    return lhs == rhs


def symbolic_lemma32_identity(f: MultilinearPoly) -> bool:
    """f(x,y,1..1) == mu xy + (lam - mu) yx, expanded in the free algebra."""
    if f.degree < 2:
        raise ValueError("needs degree >= 2")
    x, y = FreePoly.var(1), FreePoly.var(2)
    lam, mu = total_coefficient(f), ordered_pair_coefficient(f)
    return _two_letter_eval(f, x, y) == (x * y) * mu + (y * x) * (lam - mu)


# ---------------------------------------------------------------------------
# random generators


def random_multilinear(d: int, rng: random.Random, coeff_range: int = 3,
                       density: float | None = None) -> MultilinearPoly:
    """Random nonzero multilinear polynomial with coefficients in [-r, r]."""
    perms = list(itertools.permutations(range(1, d + 1)))
    while True:
        if density is None:
            k = rng.randint(1, min(len(perms), 12))
            chosen = rng.sample(perms, k)
        else:
            chosen = [p for p in perms if rng.random() < density]
        f = MultilinearPoly(d, {p: rng.randint(-coeff_range, coeff_range) for p in chosen})
        if not f.is_zero():
            return f


def left_normed(indices: Sequence[int]) -> FreePoly:
    """[x_{k1}, [x_{k2}, ..., [x_{k(r-1)}, x_{kr}]...]]."""
    acc = FreePoly.var(indices[-1])
    for k in reversed(indices[:-1]):
        acc = commutator(FreePoly.var(k), acc)
    return acc


def random_lie_generated(d: int, rng: random.Random, terms: int = 3,
                         coeff_range: int = 3) -> MultilinearPoly:
    """Random nonzero multilinear element of the subalgebra generated by Lie
    polynomials: a combination of products of commutators over set
    partitions of 1..d into blocks of size >= 2."""
    if d < 2:
        raise ValueError("nonzero Lie-generated multilinear polynomials need d >= 2")
    while True:
        total = FreePoly.zero()
        for _ in range(terms):
            letters = list(range(1, d + 1))
            rng.shuffle(letters)
            blocks = []
            rest = letters
            while rest:
                if len(rest) <= 3:
                    size = len(rest)
                else:
                    size = rng.randint(2, len(rest) - 2) if rng.random() < 0.5 else len(rest)
                blocks.append(rest[:size])
                rest = rest[size:]
            prod = FreePoly.one()
            for b in blocks:
                prod = prod * left_normed(b)
            total = total + prod * rng.choice([c for c in range(-coeff_range, coeff_range + 1) if c])
        if not total.is_zero():
            return MultilinearPoly.from_free(total, d)
