"""Basis keys, sparse elements and exact brackets for L, tau and affine sl2.

L is spanned by ``t0^i t^m`` (``i`` mod 2, ``m`` in Z^2, with ``t0^0 t^0``
excluded) and two central elements ``c1, c2``.  tau is gl2 over the rank-2
quantum torus with parameter q^2, centrally extended by ``K1, K2``.  The
affine algebra is the loop algebra of sl2 with central ``K``.
"""
from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, NamedTuple

from .coeff import HALF, ONE, ZERO, FieldElement, parse_field, upow

# -- keys ------------------------------------------------------------------------


class Torus(NamedTuple):
    i: int
    m: tuple[int, int]

    def __str__(self) -> str:
        return f"t0^{self.i} t^({self.m[0]},{self.m[1]})"


class Central(NamedTuple):
    n: int

    def __str__(self) -> str:
        return f"c{self.n}"


class Mat(NamedTuple):
    a: int
    b: int
    m: tuple[int, int]

    def __str__(self) -> str:
        return f"E{self.a}{self.b}(t^({self.m[0]},{self.m[1]}))"


class TauK(NamedTuple):
    n: int

    def __str__(self) -> str:
        return f"K{self.n}"


class Loop(NamedTuple):
    name: str  # "E12", "E21" or "H"
    j: int

    def __str__(self) -> str:
        return f"{self.name}(x^{self.j})"


class AffK(NamedTuple):
    def __str__(self) -> str:
        return "K"


C1 = Central(1)
C2 = Central(2)
K1 = TauK(1)
K2 = TauK(2)
KAFF = AffK()

TAGS = ("L", "Tau", "Aff")


def torus(i: int, m) -> Torus:
    """Validated L torus key."""
    i %= 2
    m = (int(m[0]), int(m[1]))
    if i == 0 and m == (0, 0):
        raise ValueError("t0^0 t^(0,0) is not a basis element of L")
    return Torus(i, m)


def tag_of(key) -> str:
    if isinstance(key, (Torus, Central)):
        return "L"
    if isinstance(key, (Mat, TauK)):
        return "Tau"
    if isinstance(key, (Loop, AffK)):
        return "Aff"
    raise TypeError(f"not a basis key: {key!r}")


def key_order(key):
    """Deterministic sort key: central elements first, then by degree data."""
    if isinstance(key, Central):
        return (0, key.n)
    if isinstance(key, Torus):
        return (1, key.m, key.i)
    if isinstance(key, TauK):
        return (0, key.n)
    if isinstance(key, Mat):
        return (1, key.m, key.a, key.b)
    if isinstance(key, AffK):
        return (0,)
    return (1, key.j, {"E12": 0, "H": 1, "E21": 2}[key.name])


# -- elements --------------------------------------------------------------------


@dataclass(frozen=True)
class AlgebraElement:
    """Finite linear combination of basis keys of one algebra."""

    tag: str
    terms: Mapping = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for k, c in self.terms.items():
            if tag_of(k) != self.tag:
                raise ValueError(f"key {k} does not belong to algebra {self.tag}")
            if isinstance(k, Torus) and k.i == 0 and k.m == (0, 0):
                raise ValueError("t0^0 t^(0,0) is not a basis element of L")
            c = FieldElement(c) if not isinstance(c, FieldElement) else c
            if c:
                clean[k] = c
        object.__setattr__(self, "terms", clean)

    @classmethod
    def zero(cls, tag: str) -> "AlgebraElement":
        return cls(tag, {})

    @classmethod
    def of(cls, key, coeff=ONE) -> "AlgebraElement":
        return cls(tag_of(key), {key: coeff})

    @classmethod
    def from_terms(cls, tag: str, terms: Mapping) -> "AlgebraElement":
        return cls(tag, terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def _check(self, other: "AlgebraElement") -> None:
        if other.tag != self.tag:
            raise ValueError(f"cannot combine {self.tag} and {other.tag} elements")

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._check(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, ZERO) + c
        return AlgebraElement(self.tag, out)

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(self.tag, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return self + (-other)

    def scale(self, c) -> "AlgebraElement":
        return AlgebraElement(self.tag, {k: c * v for k, v in self.terms.items()})

    def __rmul__(self, c) -> "AlgebraElement":
        return self.scale(c)

    def coeff(self, key) -> FieldElement:
        return self.terms.get(key, ZERO)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        return self.tag == other.tag and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.tag, frozenset(self.terms.items())))

    def sorted_terms(self) -> list:
        return sorted(self.terms.items(), key=lambda kv: key_order(kv[0]))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for k, c in self.sorted_terms():
            cs = str(c)
            if " " in cs or "/" in cs and not _simple_fraction(cs):
                cs = f"({cs})"
            parts.append(f"{cs}*{k}")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"AlgebraElement({self.tag}: {self})"


def _field(c) -> FieldElement:
    return c if isinstance(c, FieldElement) else FieldElement(c)


def _simple_fraction(s: str) -> bool:
    return re.fullmatch(r"-?\d+/\d+", s) is not None


def elem(*pairs, tag: str | None = None) -> AlgebraElement:
    """Build an element from ``(coeff, key)`` pairs."""
    terms: dict = {}
    for c, k in pairs:
        terms[k] = terms.get(k, ZERO) + _field(c)
    if tag is None:
        if not pairs:
            raise ValueError("tag required for an empty element")
        tag = tag_of(pairs[0][1])
    return AlgebraElement(tag, terms)


# -- grading ---------------------------------------------------------------------


@dataclass(frozen=True)
class GradingBasis:
    """Ordered Z-basis (m1, m2) of Z^2 with determinant +-1."""

    m1: tuple[int, int]
    m2: tuple[int, int]

    def __post_init__(self):
        object.__setattr__(self, "m1", (int(self.m1[0]), int(self.m1[1])))
        object.__setattr__(self, "m2", (int(self.m2[0]), int(self.m2[1])))
        if self.alpha not in (1, -1):
            raise ValueError(f"basis {self.m1};{self.m2} has determinant {self.alpha}, expected +-1")

    @property
    def alpha(self) -> int:
        (a, b), (c, d) = self.m1, self.m2
        return a * d - b * c

    @property
    def m21_even(self) -> bool:
        return self.m2[0] % 2 == 0

    @property
    def mprod(self) -> int:
        """The product m21*m22 that appears in all q-exponents of the grading."""
        return self.m2[0] * self.m2[1]

    def vector(self, j: int, k: int) -> tuple[int, int]:
        return (j * self.m1[0] + k * self.m2[0], j * self.m1[1] + k * self.m2[1])

    def coords(self, m) -> tuple[int, int]:
        (a, b), (c, d) = self.m1, self.m2
        al = self.alpha
        j = (m[0] * d - m[1] * c) * al
        k = (a * m[1] - b * m[0]) * al
        return j, k

    def beta(self) -> AlgebraElement:
        return elem((self.m1[0], C1), (self.m1[1], C2), tag="L")

    def gamma(self) -> AlgebraElement:
        """The central element m21*c1 + m22*c2."""
        return elem((self.m2[0], C1), (self.m2[1], C2), tag="L")

    def central_scalars(self, psi_beta, psi_gamma=ZERO) -> tuple[FieldElement, FieldElement]:
        """Solve c1, c2 from the values on beta and on m21*c1 + m22*c2."""
        (a, b), (c, d) = self.m1, self.m2
        al = self.alpha
        pb, pg = _field(psi_beta), _field(psi_gamma)
        return (d * pb - b * pg) * al, (a * pg - c * pb) * al

    def __str__(self) -> str:
        return f"({self.m1[0]},{self.m1[1]});({self.m2[0]},{self.m2[1]})"

    @classmethod
    def parse(cls, text: str) -> "GradingBasis":
        nums = [int(x) for x in re.findall(r"-?\d+", text)]
        if len(nums) != 4:
            raise ValueError(f"basis must have four integers, got {text!r}")
        return cls((nums[0], nums[1]), (nums[2], nums[3]))


STANDARD = GradingBasis((1, 0), (0, 1))


def grade_of(key, basis: GradingBasis) -> int:
    if isinstance(key, Central):
        return 0
    return basis.coords(key.m)[0]


def loop_index(key, basis: GradingBasis) -> int:
    """The m2-coordinate of a torus key (0 for central keys)."""
    if isinstance(key, Central):
        return 0
    return basis.coords(key.m)[1]


def enumerate_graded(j: int, window: int, basis: GradingBasis) -> list:
    if window < 0:
        raise ValueError("window must be >= 0")
    out = []
    for k in range(-window, window + 1):
        m = basis.vector(j, k)
        for i in (0, 1):
            if i == 0 and m == (0, 0):
                continue
            out.append(Torus(i, m))
    if j == 0:
        out += [C1, C2]
    return out


# -- brackets ----------------------------------------------------------------------


def _sign(e: int) -> int:
    return -1 if e % 2 else 1


@lru_cache(maxsize=1 << 20)
def bracket_keys_L(x, y) -> tuple:
    """Bracket of two L basis keys as a tuple of ``(key, coeff)`` pairs."""
    if isinstance(x, Central) or isinstance(y, Central):
        return ()
    i, (m1, m2) = x
    j, (n1, n2) = y
    a = _sign(m1 * j) * upow(2 * m2 * n1)
    b = _sign(i * n1) * upow(2 * m1 * n2)
    out = []
    s = (m1 + n1, m2 + n2)
    ij = (i + j) % 2
    if ij == 0 and s == (0, 0):
        # the torus coefficient a - b vanishes identically here
        if m1:
            out.append((C1, a * m1))
        if m2:
            out.append((C2, a * m2))
    else:
        c = a - b
        if c:
            out.append((Torus(ij, s), c))
    return tuple(out)


@lru_cache(maxsize=1 << 18)
def bracket_keys_tau(x, y) -> tuple:
    if isinstance(x, TauK) or isinstance(y, TauK):
        return ()
    i, j, (m1, m2) = x
    k, l, (n1, n2) = y
    s = (m1 + n1, m2 + n2)
    acc: dict = {}
    if j == k:
        key = Mat(i, l, s)
        acc[key] = acc.get(key, ZERO) + upow(4 * m2 * n1)
    if l == i:
        key = Mat(k, j, s)
        acc[key] = acc.get(key, ZERO) - upow(4 * n2 * m1)
    if s == (0, 0) and j == k and i == l:
        f = upow(4 * m2 * n1)
        if m1:
            acc[K1] = f * m1
        if m2:
            acc[K2] = f * m2
    return tuple((k_, c) for k_, c in acc.items() if c)


_SL2 = {
    ("E12", "E21"): (("H", 1),),
    ("E21", "E12"): (("H", -1),),
    ("H", "E12"): (("E12", 2),),
    ("E12", "H"): (("E12", -2),),
    ("H", "E21"): (("E21", -2),),
    ("E21", "H"): (("E21", 2),),
}
_FORM = {("E12", "E21"): 1, ("E21", "E12"): 1, ("H", "H"): 2}


@lru_cache(maxsize=1 << 16)
def bracket_keys_aff(x, y) -> tuple:
    if isinstance(x, AffK) or isinstance(y, AffK):
        return ()
    out = []
    for name, c in _SL2.get((x.name, y.name), ()):
        out.append((Loop(name, x.j + y.j), FieldElement(c)))
    if x.j + y.j == 0 and x.j and (x.name, y.name) in _FORM:
        out.append((KAFF, FieldElement(x.j * _FORM[(x.name, y.name)])))
    return tuple(out)


_BRACKETS = {"L": bracket_keys_L, "Tau": bracket_keys_tau, "Aff": bracket_keys_aff}


def bracket(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    if x.tag != y.tag:
        raise ValueError(f"cannot bracket {x.tag} with {y.tag}")
    fn = _BRACKETS[x.tag]
    acc: dict = {}
    for kx, cx in x.terms.items():
        for ky, cy in y.terms.items():
            for k, c in fn(kx, ky):
                acc[k] = acc.get(k, ZERO) + cx * cy * c
    return AlgebraElement(x.tag, acc)


def bracket_L(x: AlgebraElement, y: AlgebraElement, basis: GradingBasis | None = None) -> AlgebraElement:
    """Bracket in L; the grading basis plays no role in the structure constants."""
    if x.tag != "L" or y.tag != "L":
        raise ValueError("bracket_L expects L elements")
    return bracket(x, y)


def bracket_tau(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    if x.tag != "Tau" or y.tag != "Tau":
        raise ValueError("bracket_tau expects tau elements")
    return bracket(x, y)


def bracket_aff(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    if x.tag != "Aff" or y.tag != "Aff":
        raise ValueError("bracket_aff expects affine elements")
    return bracket(x, y)


def torus_product(x: Torus, y: Torus) -> tuple[FieldElement, tuple[int, tuple[int, int]]]:
    """Associative quantum-torus product of two monomials (coefficient, (i, m)).

    ``t0^0 t^0`` is allowed as a product result here since it is the unit.
    """
    i, (m1, m2) = x
    j, (n1, n2) = y
    c = _sign(m1 * j) * upow(2 * m2 * n1)
    return c, ((i + j) % 2, (m1 + n1, m2 + n2))


def in_tau_bar(x: AlgebraElement) -> bool:
    """Membership in the derived algebra: no identity component at degree 0."""
    if x.tag != "Tau":
        raise ValueError("expected a tau element")
    return x.coeff(Mat(1, 1, (0, 0))) == -x.coeff(Mat(2, 2, (0, 0)))


# -- text syntax -------------------------------------------------------------------

_KEY_PATTERNS = [
    (re.compile(r"t0\^\s*(-?\d+)\s*t\^\s*\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\)"), lambda g: torus(int(g[0]), (int(g[1]), int(g[2])))),
    (re.compile(r"\b(E)([12])([12])\s*\(\s*t\^\s*\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\)\s*\)"), lambda g: Mat(int(g[1]), int(g[2]), (int(g[3]), int(g[4])))),
    (re.compile(r"\b(E12|E21|H)\s*\(\s*x\^\s*(-?\d+)\s*\)"), lambda g: Loop(g[0], int(g[1]))),
    (re.compile(r"\bc([12])\b"), lambda g: Central(int(g[0]))),
    (re.compile(r"\bK([12])\b"), lambda g: TauK(int(g[0]))),
    (re.compile(r"\bK\b"), lambda g: KAFF),
]


def parse_element(text: str) -> AlgebraElement:
    """Parse a linear combination such as ``"2*t0^1 t^(1,0) - (1+u)/2*c1"``."""
    keys: list = []

    def sub(pattern, make):
        def repl(mo):
            keys.append(make(mo.groups()))
            return f" __k{len(keys) - 1} "
        return repl

    src = text
    for pat, make in _KEY_PATTERNS:
        src = pat.sub(sub(pat, make), src)
    if not keys:
        raise ValueError(f"no basis element found in {text!r}")
    tags = {tag_of(k) for k in keys}
    if len(tags) != 1:
        raise ValueError(f"mixed algebras in {text!r}")
    tag = tags.pop()
    src = src.replace("^", "**")
    try:
        tree = ast.parse(src.strip(), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"malformed element {text!r}") from exc
    val = _eval(tree.body, keys, tag, text)
    if isinstance(val, FieldElement):
        raise ValueError(f"{text!r} is a scalar, not an algebra element")
    return val


def _eval(node, keys, tag, text):
    if isinstance(node, ast.Name):
        if node.id.startswith("__k"):
            return AlgebraElement.of(keys[int(node.id[3:])])
        if node.id in ("u", "q"):
            return parse_field(node.id)
        raise ValueError(f"unknown symbol {node.id!r} in {text!r}")
    if isinstance(node, ast.Constant) and isinstance(node.value, int):
        return FieldElement(node.value)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval(node.operand, keys, tag, text)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Pow):
            base = _eval(node.left, keys, tag, text)
            if not isinstance(base, FieldElement):
                raise ValueError(f"cannot exponentiate an algebra element in {text!r}")
            exp = node.right
            sign = 1
            if isinstance(exp, ast.UnaryOp) and isinstance(exp.op, ast.USub):
                sign, exp = -1, exp.operand
            if not (isinstance(exp, ast.Constant) and isinstance(exp.value, int)):
                raise ValueError(f"exponent must be an integer in {text!r}")
            return base ** (sign * exp.value)
        a = _eval(node.left, keys, tag, text)
        b = _eval(node.right, keys, tag, text)
        fa, fb = isinstance(a, FieldElement), isinstance(b, FieldElement)
        if isinstance(node.op, ast.Add) or isinstance(node.op, ast.Sub):
            if fa != fb:
                raise ValueError(f"cannot add a scalar to an algebra element in {text!r}")
            return a + b if isinstance(node.op, ast.Add) else a - b
        if isinstance(node.op, ast.Mult):
            if fa and fb:
                return a * b
            if fa:
                return b.scale(a)
            if fb:
                return a.scale(b)
            raise ValueError(f"product of algebra elements in {text!r}; use a bracket")
        if isinstance(node.op, ast.Div):
            if not fb:
                raise ValueError(f"division by an algebra element in {text!r}")
            return a / b if fa else a.scale(b.inverse())
    raise ValueError(f"unsupported syntax in {text!r}")


# -- structural checks ---------------------------------------------------------------------


def box_keys(box: int, central: bool = True) -> list:
    """All L basis keys with torus indices in [-box, box]^2, both parities."""
    out = [C1, C2] if central else []
    for a in range(-box, box + 1):
        for b in range(-box, box + 1):
            for i in (0, 1):
                if i == 0 and (a, b) == (0, 0):
                    continue
                out.append(Torus(i, (a, b)))
    return out


def _nested(x, y, z) -> dict:
    """[x, [y, z]] on basis keys."""
    acc: dict = {}
    for k, c in bracket_keys_L(y, z):
        for k2, c2 in bracket_keys_L(x, k):
            acc[k2] = acc.get(k2, ZERO) + c * c2
    return acc


def jacobi_defect(x, y, z) -> dict:
    acc: dict = {}
    for part in (_nested(x, y, z), _nested(y, z, x), _nested(z, x, y)):
        for k, c in part.items():
            acc[k] = acc.get(k, ZERO) + c
    return {k: c for k, c in acc.items() if c}


@dataclass
class JacobiReport:
    triples: int
    pairs: int
    jacobi_failures: list
    skew_failures: list
    forbidden_hits: list
    grading_failures: list

    @property
    def ok(self) -> bool:
        return not (self.jacobi_failures or self.skew_failures or self.forbidden_hits or self.grading_failures)

    def to_json(self) -> dict:
        return {
            "checkedTriples": self.triples,
            "checkedPairs": self.pairs,
            "jacobiFailures": [list(map(str, t)) for t in self.jacobi_failures[:20]],
            "skewFailures": [list(map(str, t)) for t in self.skew_failures[:20]],
            "forbiddenKeyHits": [list(map(str, t)) for t in self.forbidden_hits[:20]],
            "gradingFailures": [list(map(str, t)) for t in self.grading_failures[:20]],
            "pass": self.ok,
        }


def jacobi_check(box: int = 2, random_triples: int = 200, random_box: int = 5, seed: int = 0,
                 basis: GradingBasis | None = None) -> JacobiReport:
    """Skew-symmetry, closure and grading on all pairs, Jacobi on all triples in the box plus random ones."""
    import itertools
    import random

    basis = basis or STANDARD
    keys = box_keys(box)
    forbidden = Torus(0, (0, 0))
    skew, hits, grading = [], [], []
    pairs = 0
    for x, y in itertools.product(keys, repeat=2):
        pairs += 1
        xy = dict(bracket_keys_L(x, y))
        yx = dict(bracket_keys_L(y, x))
        if any(xy.get(k, ZERO) + yx.get(k, ZERO) for k in set(xy) | set(yx)):
            skew.append((x, y))
        if forbidden in xy:
            hits.append((x, y))
        g = grade_of(x, basis) + grade_of(y, basis)
        if any(grade_of(k, basis) != g for k in xy):
            grading.append((x, y))
    failures = []
    triples = 0
    for x, y, z in itertools.combinations_with_replacement(keys, 3):
        triples += 1
        if jacobi_defect(x, y, z):
            failures.append((x, y, z))
    rng = random.Random(seed)
    pool = box_keys(random_box)
    for _ in range(random_triples):
        x, y, z = (rng.choice(pool) for _ in range(3))
        triples += 1
        if jacobi_defect(x, y, z):
            failures.append((x, y, z))
    return JacobiReport(triples, pairs, failures, skew, hits, grading)
