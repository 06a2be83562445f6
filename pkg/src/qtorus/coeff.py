"""Exact scalars: the rational function field Q(u) with u*u = q.

Every structure constant in the package is an element of this field.  The
variable is ``u`` rather than ``q`` so that half-integer powers of ``q``
are ordinary integer powers of ``u``.

Arithmetic is delegated to FLINT polynomials (``fmpq_poly``); values are
reduced eagerly and kept in a canonical form, so ``==`` and ``hash`` are
representation independent.  A prime-field specialization ``u -> u0 mod p``
is provided for fast probabilistic linear algebra.
"""
from __future__ import annotations

import ast
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import flint

__all__ = [
    "LaurentPoly",
    "FieldElement",
    "PrimeSpec",
    "DenominatorVanishes",
    "canonicalize",
    "upow",
    "qpow",
    "parse_field",
    "specialize",
    "ZERO",
    "ONE",
    "U",
    "Q",
    "HALF",
]


def _to_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, (flint.fmpq, flint.fmpz)):
        return Fraction(str(c))
    return Fraction(c)


class LaurentPoly:
    """Sparse Laurent polynomial in ``u`` with rational coefficients.

    ``terms`` maps exponents to nonzero :class:`~fractions.Fraction`
    coefficients.  Instances are treated as immutable.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[int, object] | None = None):
        out: dict[int, Fraction] = {}
        if terms:
            for e, c in terms.items():
                c = _to_fraction(c)
                if c:
                    out[int(e)] = c
        self.terms = out

    @classmethod
    def monomial(cls, exponent: int, coeff=1) -> "LaurentPoly":
        return cls({exponent: coeff})

    def is_zero(self) -> bool:
        return not self.terms

    def min_exp(self) -> int:
        return min(self.terms) if self.terms else 0

    def max_exp(self) -> int:
        return max(self.terms) if self.terms else 0

    def __add__(self, other: "LaurentPoly") -> "LaurentPoly":
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return LaurentPoly(out)

    def __neg__(self) -> "LaurentPoly":
        return LaurentPoly({e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "LaurentPoly") -> "LaurentPoly":
        return self + (-other)

    def __mul__(self, other: "LaurentPoly") -> "LaurentPoly":
        out: dict[int, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                out[e1 + e2] = out.get(e1 + e2, 0) + c1 * c2
        return LaurentPoly(out)

    def __eq__(self, other) -> bool:
        if isinstance(other, LaurentPoly):
            return self.terms == other.terms
        return NotImplemented

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __repr__(self) -> str:
        return f"LaurentPoly({self})"

    def __str__(self) -> str:
        return _format_terms(sorted(self.terms.items()))

    def shifted(self, k: int) -> "LaurentPoly":
        return LaurentPoly({e + k: c for e, c in self.terms.items()})

    def to_flint(self) -> tuple[flint.fmpq_poly, int]:
        """Return ``(p, e)`` with ``self == u**e * p`` and ``p`` an ordinary polynomial."""
        if not self.terms:
            return flint.fmpq_poly(0), 0
        e = self.min_exp()
        coeffs = [0] * (self.max_exp() - e + 1)
        for k, c in self.terms.items():
            coeffs[k - e] = flint.fmpq(c.numerator, c.denominator)
        return flint.fmpq_poly(coeffs), e

    @classmethod
    def from_flint(cls, p: flint.fmpq_poly, shift: int = 0) -> "LaurentPoly":
        return cls({i + shift: c for i, c in enumerate(p.coeffs()) if c != 0})


def canonicalize(raw: Iterable[tuple[int, object]] | Mapping[int, object]) -> LaurentPoly:
    """Collect a raw term list (repeated exponents allowed) into canonical form."""
    items = raw.items() if isinstance(raw, Mapping) else raw
    acc: dict[int, Fraction] = {}
    for e, c in items:
        acc[int(e)] = acc.get(int(e), Fraction(0)) + _to_fraction(c)
    return LaurentPoly(acc)


def _format_coeff(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _format_terms(items: list[tuple[int, Fraction]]) -> str:
    if not items:
        return "0"
    parts: list[str] = []
    for idx, (e, c) in enumerate(items):
        sign = "-" if c < 0 else "+"
        a = -c if c < 0 else c
        if e == 0:
            body = _format_coeff(a)
        else:
            mono = "u" if e == 1 else f"u^{e}"
            body = mono if a == 1 else f"{_format_coeff(a)}*{mono}"
        if idx == 0:
            parts.append(body if sign == "+" else f"-{body}")
        else:
            parts.append(f" {sign} {body}")
    return "".join(parts)


def _reduce(num: flint.fmpq_poly, den: flint.fmpq_poly) -> tuple[flint.fmpq_poly, flint.fmpq_poly]:
    if den == 0:
        raise ZeroDivisionError("division by zero in Q(u)")
    if num == 0:
        return _PZERO, _PONE
    if den.degree() > 0:
        g = num.gcd(den)
        if g.degree() > 0:
            num = num // g
            den = den // g
    lead = den[den.degree()]
    if lead != 1:
        num = num / lead
        den = den / lead
    return num, den


_PZERO = flint.fmpq_poly(0)
_PONE = flint.fmpq_poly(1)
_PU = flint.fmpq_poly([0, 1])


class FieldElement:
    """Exact element of Q(u), stored as a reduced quotient with monic denominator."""

    __slots__ = ("_n", "_d", "_hash")

    def __init__(self, value=0, den=None):
        if isinstance(value, FieldElement) and den is None:
            self._n, self._d = value._n, value._d
            self._hash = value._hash
            return
        n, nshift = _coerce_poly(value)
        if den is None:
            d, dshift = _PONE, 0
        else:
            d, dshift = _coerce_poly(den)
        shift = nshift - dshift
        if shift > 0:
            n = n * _PU ** shift
        elif shift < 0:
            d = d * _PU ** (-shift)
        self._n, self._d = _reduce(n, d)
        self._hash = None

    @classmethod
    def _raw(cls, n: flint.fmpq_poly, d: flint.fmpq_poly) -> "FieldElement":
        obj = cls.__new__(cls)
        obj._n, obj._d = n, d
        obj._hash = None
        return obj

    @classmethod
    def _make(cls, n, d) -> "FieldElement":
        n, d = _reduce(n, d)
        return cls._raw(n, d)

    # -- structure ---------------------------------------------------------
    def is_zero(self) -> bool:
        return self._n == 0

    def __bool__(self) -> bool:
        return self._n != 0

    def is_polynomial(self) -> bool:
        return self._d.degree() == 0

    @property
    def numerator(self) -> LaurentPoly:
        return self._canonical()[0]

    @property
    def denominator(self) -> LaurentPoly:
        return self._canonical()[1]

    def _canonical(self) -> tuple[LaurentPoly, LaurentPoly]:
        """Denominator with nonzero constant term, primitive over Z, positive constant term."""
        d = self._d
        k = 0
        coeffs = d.coeffs()
        while coeffs[k] == 0:
            k += 1
        dl = coeffs[k:]
        fr = [_to_fraction(c) for c in dl]
        # scale to a primitive integer vector with positive lowest coefficient
        from math import gcd, lcm

        den_l = 1
        for c in fr:
            den_l = lcm(den_l, c.denominator)
        ints = [int(c * den_l) for c in fr]
        g = 0
        for c in ints:
            g = gcd(g, c)
        if ints[0] < 0:
            g = -g
        scale = Fraction(den_l, g)  # d_int = (d/u^k) * scale
        den_poly = LaurentPoly({i: c // g for i, c in enumerate(ints)})
        num_poly = LaurentPoly.from_flint(self._n, -k)
        num_poly = LaurentPoly({e: c * scale for e, c in num_poly.terms.items()})
        return num_poly, den_poly

    # -- arithmetic ----------------------------------------------------------
    def __add__(self, other):
        o = _as_field(other)
        if o is None:
            return NotImplemented
        if self._d == o._d:
            if self._d.degree() == 0:
                return FieldElement._raw(self._n + o._n, self._d)
            return FieldElement._make(self._n + o._n, self._d)
        return FieldElement._make(self._n * o._d + o._n * self._d, self._d * o._d)

    __radd__ = __add__

    def __neg__(self):
        return FieldElement._raw(-self._n, self._d)

    def __sub__(self, other):
        o = _as_field(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = _as_field(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = _as_field(other)
        if o is None:
            return NotImplemented
        if self._d.degree() == 0 and o._d.degree() == 0:
            return FieldElement._raw(self._n * o._n, _PONE)
        return FieldElement._make(self._n * o._n, self._d * o._d)

    __rmul__ = __mul__

    def inverse(self) -> "FieldElement":
        if self._n == 0:
            raise ZeroDivisionError("division by zero in Q(u)")
        return FieldElement._make(self._d, self._n)

    def __truediv__(self, other):
        o = _as_field(other)
        if o is None:
            return NotImplemented
        if o._n == 0:
            raise ZeroDivisionError("division by zero in Q(u)")
        return FieldElement._make(self._n * o._d, self._d * o._n)

    def __rtruediv__(self, other):
        o = _as_field(other)
        if o is None:
            return NotImplemented
        return o / self

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        return FieldElement._raw(self._n ** n, self._d ** n)

    # -- comparison ------------------------------------------------------------
    def __eq__(self, other) -> bool:
        o = _as_field(other)
        if o is None:
            return NotImplemented
        return self._n == o._n and self._d == o._d

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((tuple(str(c) for c in self._n.coeffs()), tuple(str(c) for c in self._d.coeffs())))
        return self._hash

    def __repr__(self) -> str:
        return f"FieldElement({str(self)!r})"

    def __str__(self) -> str:
        num, den = self._canonical()
        if den.terms == {0: Fraction(1)}:
            return str(num)
        ns = str(num)
        if len(num.terms) > 1:
            ns = f"({ns})"
        return f"{ns}/({den})"

    def to_json(self) -> str:
        return str(self)

    # -- evaluation ------------------------------------------------------------
    def mod_eval(self, p: int, u0: int) -> int:
        """Image under u -> u0 in GF(p); raises DenominatorVanishes."""
        num = _poly_mod_eval(self._n, p, u0)
        den = _poly_mod_eval(self._d, p, u0)
        if den == 0:
            raise DenominatorVanishes(f"denominator vanishes at u={u0} mod {p}")
        return num * pow(den, -1, p) % p


def _poly_mod_eval(poly: flint.fmpq_poly, p: int, u0: int) -> int:
    d = int(poly.denom())
    if d % p == 0:
        raise DenominatorVanishes("coefficient denominator divisible by the modulus")
    acc = 0
    for c in reversed(poly.numer().coeffs()):
        acc = (acc * u0 + int(c)) % p
    return acc * pow(d, -1, p) % p


def _coerce_poly(value) -> tuple[flint.fmpq_poly, int]:
    if isinstance(value, LaurentPoly):
        return value.to_flint()
    if isinstance(value, FieldElement):
        raise TypeError("use FieldElement division for quotients of field elements")
    if isinstance(value, flint.fmpq_poly):
        return value, 0
    if isinstance(value, Fraction):
        return flint.fmpq_poly([flint.fmpq(value.numerator, value.denominator)]), 0
    if isinstance(value, (int, flint.fmpz, flint.fmpq)):
        return flint.fmpq_poly([value]), 0
    raise TypeError(f"cannot build a field element from {type(value).__name__}")


def _as_field(x) -> FieldElement | None:
    if isinstance(x, FieldElement):
        return x
    if isinstance(x, int):
        return FieldElement._raw(flint.fmpq_poly([x]) if x else _PZERO, _PONE)
    if isinstance(x, Fraction):
        return FieldElement(x)
    return None


ZERO = FieldElement(0)
ONE = FieldElement(1)
U = FieldElement(LaurentPoly({1: 1}))
Q = FieldElement(LaurentPoly({2: 1}))
HALF = FieldElement(Fraction(1, 2))

_upow_cache: dict[int, FieldElement] = {}


def upow(n: int) -> FieldElement:
    """Return ``u**n``; ``upow(2*k) == q**k``."""
    r = _upow_cache.get(n)
    if r is None:
        if n >= 0:
            r = FieldElement._raw(_PU ** n, _PONE)
        else:
            r = FieldElement._raw(_PONE, _PU ** (-n))
        if len(_upow_cache) < 4096:
            _upow_cache[n] = r
    return r


def qpow(n: int | Fraction) -> FieldElement:
    """``q**n`` for integer or half-integer ``n``."""
    twice = Fraction(n) * 2
    if twice.denominator != 1:
        raise ValueError(f"q-exponent {n} is not a half-integer")
    return upow(int(twice))


# -- parsing -------------------------------------------------------------------

_ALLOWED_BIN = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)


def parse_field(text: str) -> FieldElement:
    """Parse the canonical serialization (``"(1 - 3/2*u^-4)/(1 + u^2)"``); ``q`` is accepted too."""
    src = text.strip().replace("^", "**")
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"malformed field element {text!r}") from exc
    return _eval_node(tree.body, text)


def _eval_node(node, text) -> FieldElement:
    if isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
        return FieldElement(node.value)
    if isinstance(node, ast.Name):
        if node.id == "u":
            return U
        if node.id == "q":
            return Q
        raise ValueError(f"unknown symbol {node.id!r} in {text!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval_node(node.operand, text)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and isinstance(node.op, _ALLOWED_BIN):
        if isinstance(node.op, ast.Pow):
            exp = _int_exponent(node.right, text)
            return _eval_node(node.left, text) ** exp
        a = _eval_node(node.left, text)
        b = _eval_node(node.right, text)
        if isinstance(node.op, ast.Add):
            return a + b
        if isinstance(node.op, ast.Sub):
            return a - b
        if isinstance(node.op, ast.Mult):
            return a * b
        return a / b
    raise ValueError(f"unsupported syntax in field element {text!r}")


def _int_exponent(node, text) -> int:
    if isinstance(node, ast.Constant) and isinstance(node.value, int):
        return node.value
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        return -_int_exponent(node.operand, text)
    raise ValueError(f"exponent must be an integer literal in {text!r}")


# -- prime specialization ------------------------------------------------------

DEFAULT_PRIME = 4611686018427387847  # 2**62 - 57


class DenominatorVanishes(ArithmeticError):
    """The specialization point is a pole of the element."""


@dataclass(frozen=True)
class PrimeSpec:
    modulus: int = DEFAULT_PRIME
    u_value: int = 0
    guard_bound: int = 10_000

    def __post_init__(self):
        if not (0 < self.u_value % self.modulus):
            raise ValueError("u_value must be a nonzero residue")
        x = 1
        u0 = self.u_value % self.modulus
        for n in range(1, self.guard_bound + 1):
            x = x * u0 % self.modulus
            if x == 1:
                raise ValueError(f"u_value has multiplicative order {n} <= guard bound")

    @classmethod
    def random(cls, seed: int | None = None, modulus: int = DEFAULT_PRIME, guard_bound: int = 10_000) -> "PrimeSpec":
        rng = random.Random(seed)
        while True:
            u0 = rng.randrange(2, modulus - 1)
            try:
                return cls(modulus, u0, guard_bound)
            except ValueError:
                continue


def specialize(x: FieldElement, spec: PrimeSpec) -> int:
    """Ring homomorphism Q(u) -> GF(p), u -> spec.u_value."""
    return x.mod_eval(spec.modulus, spec.u_value)
