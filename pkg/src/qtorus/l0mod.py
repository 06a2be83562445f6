"""Finite-dimensional irreducible modules over the degree-0 subalgebra L0.

For even m21 these are characters psi.  For odd m21 they are evaluation
modules: tensor products of sl2 irreducibles on which the affine part acts
through loop parameters mu and the abelian part acts by the scalars psiA.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .algebra import (
    AlgebraElement,
    C1,
    C2,
    Central,
    GradingBasis,
    Torus,
    bracket,
    enumerate_graded,
)
from .coeff import HALF, ONE, ZERO, FieldElement, upow
from .linalg import rank

Matrix = list  # list of rows of FieldElement


class ParityError(ValueError):
    """Module data does not match the parity of m21."""


# -- small dense matrix helpers ------------------------------------------------------


def mzero(n: int, m: int | None = None) -> Matrix:
    return [[ZERO] * (n if m is None else m) for _ in range(n)]


def meye(n: int) -> Matrix:
    return [[ONE if r == c else ZERO for c in range(n)] for r in range(n)]


def mmul(a: Matrix, b: Matrix) -> Matrix:
    n, k = len(a), len(b)
    m = len(b[0]) if b else 0
    out = []
    for r in range(n):
        row = [ZERO] * m
        ar = a[r]
        for t in range(k):
            x = ar[t]
            if x:
                bt = b[t]
                for c in range(m):
                    if bt[c]:
                        row[c] = row[c] + x * bt[c]
        out.append(row)
    return out


def madd(a: Matrix, b: Matrix) -> Matrix:
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def msub(a: Matrix, b: Matrix) -> Matrix:
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mscale(a: Matrix, c) -> Matrix:
    return [[c * x for x in r] for r in a]


def mis_zero(a: Matrix) -> bool:
    return all(not x for r in a for x in r)


def mcomm(a: Matrix, b: Matrix) -> Matrix:
    return msub(mmul(a, b), mmul(b, a))


def kron(a: Matrix, b: Matrix) -> Matrix:
    n, m = len(a), len(b)
    out = mzero(n * m)
    for i in range(n):
        for j in range(n):
            if a[i][j]:
                for k in range(m):
                    for l in range(m):
                        if b[k][l]:
                            out[i * m + k][j * m + l] = a[i][j] * b[k][l]
    return out


def mvec(a: Matrix, v: Sequence) -> list:
    return [sum((x * y for x, y in zip(r, v) if x and y), ZERO) for r in a]


# -- sl2 ----------------------------------------------------------------------------------


@dataclass(frozen=True)
class Sl2Irrep:
    dim: int
    e12: Matrix
    e21: Matrix
    h: Matrix


def sl2_irrep(d: int) -> Sl2Irrep:
    """Irreducible sl2-module of dimension d on v_0..v_{d-1}, v_0 highest."""
    if d < 1:
        raise ValueError("sl2 irreducible dimension must be >= 1")
    e12, e21, h = mzero(d), mzero(d), mzero(d)
    for k in range(d):
        h[k][k] = FieldElement(d - 1 - 2 * k)
        if k + 1 < d:
            e21[k + 1][k] = ONE
        if k > 0:
            e12[k - 1][k] = FieldElement(k * (d - k))
    return Sl2Irrep(d, e12, e21, h)


# -- psi data --------------------------------------------------------------------------


def _poly_at(coeffs: Sequence, i: int) -> FieldElement:
    acc = ZERO
    for s, b in enumerate(coeffs):
        acc = acc + b * (i ** s)
    return acc


def _fe(x) -> FieldElement:
    return x if isinstance(x, FieldElement) else FieldElement(x)


@dataclass(frozen=True)
class ExpPolyDataEven:
    """Roots alpha_r and, per parity j, polynomial coefficient lists b_r^(j)."""

    roots: tuple
    coeffs: Mapping  # parity -> tuple of coefficient tuples, one per root

    def __post_init__(self):
        roots = tuple(_fe(a) for a in self.roots)
        if any(not a for a in roots):
            raise ValueError("roots must be nonzero")
        if len(set(roots)) != len(roots):
            raise ValueError("roots must be pairwise distinct")
        co = {}
        for j in (0, 1):
            lists = self.coeffs.get(j, ())
            if lists and len(lists) != len(roots):
                raise ValueError("one coefficient list per root is required")
            co[j] = tuple(tuple(_fe(b) for b in lst) for lst in lists) or tuple(() for _ in roots)
        object.__setattr__(self, "roots", roots)
        object.__setattr__(self, "coeffs", co)

    def numerator(self, j: int, i: int) -> FieldElement:
        acc = ZERO
        for a, lst in zip(self.roots, self.coeffs[j % 2]):
            if lst:
                acc = acc + _poly_at(lst, i) * a ** i
        return acc


@dataclass(frozen=True)
class ExpPolyDataOdd:
    roots: tuple
    coeffs: tuple  # one coefficient tuple per root

    def __post_init__(self):
        roots = tuple(_fe(a) for a in self.roots)
        if any(not a for a in roots):
            raise ValueError("roots must be nonzero")
        if len(set(roots)) != len(roots):
            raise ValueError("roots must be pairwise distinct")
        co = tuple(tuple(_fe(b) for b in lst) for lst in self.coeffs)
        if co and len(co) != len(roots):
            raise ValueError("one coefficient list per root is required")
        object.__setattr__(self, "roots", roots)
        object.__setattr__(self, "coeffs", co or tuple(() for _ in roots))

    def numerator(self, i: int) -> FieldElement:
        acc = ZERO
        for a, lst in zip(self.roots, self.coeffs):
            if lst:
                acc = acc + _poly_at(lst, i) * a ** i
        return acc


class Character:
    """One-dimensional L0-module for even m21, given by psi on degree-0 keys.

    ``values(j, k)`` returns psi(t0^j t^(k m2)); ``beta`` is psi(beta).  psi on
    m21*c1 + m22*c2 is zero by construction.
    """

    def __init__(self, basis: GradingBasis, values: Callable[[int, int], FieldElement], beta, name: str = "psi",
                 window: int | None = None):
        if not basis.m21_even:
            raise ParityError("characters are the irreducible L0-modules only for even m21")
        self.basis = basis
        self._values = values
        self.beta = _fe(beta)
        self.name = name
        self.window = window  # None means defined everywhere
        self.c1, self.c2 = basis.central_scalars(self.beta, ZERO)
        self._cache: dict = {}

    def value(self, j: int, k: int) -> FieldElement:
        j %= 2
        if j == 0 and k == 0:
            raise ValueError("t0^0 t^0 is not in L")
        if self.window is not None and abs(k) > self.window:
            raise IndexError(f"psi is only known for |k| <= {self.window}, asked k = {k}")
        key = (j, k)
        r = self._cache.get(key)
        if r is None:
            r = _fe(self._values(j, k))
            self._cache[key] = r
        return r

    def of_key(self, key) -> FieldElement:
        if key == C1:
            return self.c1
        if key == C2:
            return self.c2
        g, k = self.basis.coords(key.m)
        if g != 0:
            raise ValueError(f"{key} is not of degree 0")
        return self.value(key.i, k)

    def of_element(self, x: AlgebraElement) -> FieldElement:
        acc = ZERO
        for k, c in x.terms.items():
            acc = acc + c * self.of_key(k)
        return acc

    @classmethod
    def from_window(cls, basis: GradingBasis, values: Mapping[tuple[int, int], object], beta, name="psi-window"):
        """Explicit finite table ``(j, k) -> value``; the window is the largest |k| fully covered."""
        vals = {(j % 2, k): _fe(v) for (j, k), v in values.items()}
        w = 0
        while all((j, k) in vals for j in (0, 1) for k in (-(w + 1), w + 1)):
            w += 1
        if (1, 0) not in vals:
            raise ValueError("psi(t0^1 t^0) must be given")
        return cls(basis, lambda j, k: vals[(j, k)], beta, name, window=w)


def psi_from_exppoly_even(data: ExpPolyDataEven, basis: GradingBasis) -> Character:
    if not basis.m21_even:
        raise ParityError("even exp-polynomial data needs m21 even")
    al, mp = basis.alpha, basis.mprod

    def values(j: int, i: int) -> FieldElement:
        if i == 0:
            return HALF * data.numerator(1, 0)
        sign = -1 if j else 1
        den = (ONE - sign * upow(2 * i * al)) * upow(i * i * mp)
        return data.numerator(j, i) / den

    return Character(basis, values, data.numerator(0, 0), name="exp-poly")


def zero_character(basis: GradingBasis) -> Character:
    return Character(basis, lambda j, k: ZERO, ZERO, name="zero")


TWO_ROOT_EVEN_DATA = ExpPolyDataEven((1, -1), {0: ((1,), (1,)), 1: ((1,), (1,))})


def two_root_character(basis: GradingBasis, t01_value=None) -> Character:
    """The even exp-polynomial character with numerator (-1)^i + 1 in both parities.

    ``t01_value`` overrides psi(t0^1 t^0); by default it follows the
    exp-polynomial formula, which gives 1.
    """
    base = psi_from_exppoly_even(TWO_ROOT_EVEN_DATA, basis)
    if t01_value is None:
        return base
    v = _fe(t01_value)
    return Character(basis, lambda j, k: v if (j, k) == (1, 0) else base.value(j, k), base.beta, name="two-root-override")


class PsiA:
    """psi on the abelian part for odd m21: ``value(j)`` = psi(t0^0 t^(2j m2)), plus psi(beta)."""

    def __init__(self, values: Callable[[int], FieldElement], beta, window: int | None = None, name: str = "psiA"):
        self._values = values
        self.beta = _fe(beta)
        self.window = window
        self.name = name
        self._cache: dict = {}

    def value(self, j: int) -> FieldElement:
        if j == 0:
            raise ValueError("t0^0 t^0 is not in L")
        if self.window is not None and abs(j) > self.window:
            raise IndexError(f"psiA is only known for |j| <= {self.window}, asked j = {j}")
        r = self._cache.get(j)
        if r is None:
            r = _fe(self._values(j))
            self._cache[j] = r
        return r

    @classmethod
    def zero(cls) -> "PsiA":
        return cls(lambda j: ZERO, ZERO, name="zero")

    @classmethod
    def from_window(cls, values: Mapping[int, object], beta) -> "PsiA":
        vals = {j: _fe(v) for j, v in values.items()}
        w = 0
        while (w + 1) in vals and -(w + 1) in vals:
            w += 1
        return cls(lambda j: vals[j], beta, window=w, name="psiA-window")


def psi_from_exppoly_odd(data: ExpPolyDataOdd, basis: GradingBasis) -> PsiA:
    if basis.m21_even:
        raise ParityError("odd exp-polynomial data needs m21 odd")
    al, mp = basis.alpha, basis.mprod

    def values(i: int) -> FieldElement:
        den = (ONE - upow(4 * i * al)) * upow(4 * i * i * mp)
        return data.numerator(i) / den

    return PsiA(values, data.numerator(0), name="exp-poly")


@dataclass(frozen=True)
class EvalModuleSpec:
    mu: tuple
    dims: tuple
    psi_a: PsiA = field(default_factory=PsiA.zero)

    def __post_init__(self):
        mu = tuple(_fe(x) for x in self.mu)
        dims = tuple(int(d) for d in self.dims)
        if not mu or len(mu) != len(dims):
            raise ValueError("mu and dims must be nonempty and of equal length")
        if any(not x for x in mu) or len(set(mu)) != len(mu):
            raise ValueError("mu entries must be distinct and nonzero")
        if any(d < 1 for d in dims):
            raise ValueError("dims must be positive")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "dims", dims)


# -- modules ------------------------------------------------------------------------------


class L0Module:
    """Finite-dimensional L0-module with on-demand action matrices of degree-0 keys."""

    def __init__(self, basis: GradingBasis, dim: int, action: Callable[[object], Matrix], kind: str,
                 window: int, labels: Sequence[str] | None = None, source=None):
        self.basis = basis
        self.dim = dim
        self._action = action
        self.kind = kind
        self.window = window
        self.labels = list(labels) if labels else [f"v{i}" for i in range(dim)]
        self.source = source
        self._cache: dict = {}

    @property
    def even(self) -> bool:
        return self.basis.m21_even

    def act(self, key) -> Matrix:
        r = self._cache.get(key)
        if r is None:
            if not isinstance(key, Central):
                g, _ = self.basis.coords(key.m)
                if g != 0:
                    raise ValueError(f"{key} is not of degree 0")
            r = self._action(key)
            self._cache[key] = r
        return r

    def act_element(self, x: AlgebraElement) -> Matrix:
        out = mzero(self.dim)
        for k, c in x.terms.items():
            out = madd(out, mscale(self.act(k), c))
        return out

    def window_keys(self, window: int | None = None) -> list:
        return enumerate_graded(0, self.window if window is None else window, self.basis)

    def matrices(self, window: int | None = None) -> dict:
        return {k: self.act(k) for k in self.window_keys(window)}

    def commutation_failures(self, window: int | None = None) -> list:
        keys = self.window_keys(window)
        bad = []
        for a in range(len(keys)):
            for b in range(a + 1, len(keys)):
                x, y = keys[a], keys[b]
                lhs = self.act_element(bracket(AlgebraElement.of(x), AlgebraElement.of(y)))
                rhs = mcomm(self.act(x), self.act(y))
                if lhs != rhs:
                    bad.append((x, y))
        return bad

    def gamma_acts_as_zero(self) -> bool:
        return mis_zero(self.act_element(self.basis.gamma()))


def character_module(psi: Character, window: int = 3) -> L0Module:
    def action(key):
        return [[psi.of_key(key)]]

    return L0Module(psi.basis, 1, action, "character", window, ["v0"], source=psi)


def build_eval_module(spec: EvalModuleSpec, basis: GradingBasis, window: int = 3) -> L0Module:
    """Evaluation module: slot s carries the sl2 irreducible of dimension dims[s] at parameter mu[s]."""
    if basis.m21_even:
        raise ParityError("evaluation modules need m21 odd")
    irreps = [sl2_irrep(d) for d in spec.dims]
    dim = 1
    for d in spec.dims:
        dim *= d

    def slot(op: str, s: int) -> Matrix:
        out = [[ONE]]
        for t, rep in enumerate(irreps):
            out = kron(out, getattr(rep, op) if t == s else meye(rep.dim))
        return out

    slots = {(op, s): slot(op, s) for op in ("e12", "e21", "h") for s in range(len(irreps))}
    mp = basis.mprod
    c1, c2 = basis.central_scalars(spec.psi_a.beta, ZERO)

    def loop_sum(op: str, j: int) -> Matrix:
        out = mzero(dim)
        for s, mu in enumerate(spec.mu):
            out = madd(out, mscale(slots[(op, s)], mu ** j))
        return out

    def action(key) -> Matrix:
        if key == C1:
            return mscale(meye(dim), c1)
        if key == C2:
            return mscale(meye(dim), c2)
        _, k = basis.coords(key.m)
        if k % 2 == 0:
            j = k // 2
            if key.i == 0:
                return mscale(meye(dim), spec.psi_a.value(j))
            return mscale(loop_sum("h", j), -upow(-4 * j * j * mp))
        j = (k - 1) // 2
        c = upow(-(2 * j + 1) ** 2 * mp)
        sign = -1 if key.i else 1
        return mscale(madd(mscale(loop_sum("e12", j), sign), loop_sum("e21", j + 1)), c)

    labels = ["v(" + ",".join(str(x) for x in idx) + ")" for idx in itertools.product(*(range(d) for d in spec.dims))]
    return L0Module(basis, dim, action, "eval", window, labels, source=spec)


def l0_module_for(psi_or_spec, basis: GradingBasis, window: int = 3) -> L0Module:
    if isinstance(psi_or_spec, Character):
        return character_module(psi_or_spec, window)
    return build_eval_module(psi_or_spec, basis, window)


# -- checks -------------------------------------------------------------------------------


def remark26_check(module: L0Module, bpoly: Sequence, k: int) -> bool:
    """Do both loop-combined operators built from ``bpoly`` (b_0 + b_1 x + ...) kill the module?"""
    basis = module.basis
    mp = basis.mprod
    b = [_fe(x) for x in bpoly]
    op1 = mzero(module.dim)
    op2 = mzero(module.dim)
    for i, bi in enumerate(b):
        if not bi:
            continue
        t_odd = Torus(k % 2, basis.vector(0, 2 * i + 1))
        op1 = madd(op1, mscale(module.act(t_odd), bi * upow((2 * i + 1) ** 2 * mp)))
        t_even = Torus(1, basis.vector(0, 2 * i))
        op2 = madd(op2, mscale(module.act(t_even), bi * upow(4 * i * i * mp)))
    return mis_zero(op1) and mis_zero(op2)


def divides_at_roots(mu: Sequence, bpoly: Sequence) -> bool:
    """prod (x - mu_i) divides sum b_i x^i, for distinct mu."""
    return all(not _poly_at_x(bpoly, m) for m in mu)


def _poly_at_x(coeffs: Sequence, x) -> FieldElement:
    acc = ZERO
    for c in reversed(coeffs):
        acc = acc * x + _fe(c)
    return acc


def generated_algebra_dim(mats: Sequence[Matrix]) -> int:
    """Dimension of the unital associative algebra generated by ``mats``."""
    if not mats:
        return 0
    n = len(mats[0])

    def flat(m):
        return {(r, c): m[r][c] for r in range(n) for c in range(n) if m[r][c]}

    from .linalg import EchelonBasis

    eb = EchelonBasis()
    span: list[Matrix] = []
    frontier = [meye(n)]
    while frontier:
        nxt = []
        for m in frontier:
            if eb.add(flat(m)):
                span.append(m)
                nxt.append(m)
        frontier = [mmul(g, m) for m in nxt for g in mats]
        if eb.count == n * n:
            break
    return eb.count
