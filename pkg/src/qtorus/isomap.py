"""Linear maps out of L and a harness that checks they are Lie homomorphisms.

``phi_tau`` identifies L with the centrally extended derived algebra of tau,
reading keys in raw coordinates ``(i, (n1, n2))``.  ``phi_aff`` identifies
the non-abelian part of the degree-0 subalgebra (odd m21) with affine sl2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .algebra import (
    AlgebraElement,
    C1,
    C2,
    Central,
    GradingBasis,
    K1,
    K2,
    KAFF,
    Loop,
    Mat,
    Torus,
    bracket,
    elem,
    enumerate_graded,
    grade_of,
    in_tau_bar,
)
from .coeff import HALF, ONE, ZERO, FieldElement, upow
from .linalg import rank


class MembershipError(ValueError):
    """The element lies outside the domain of a partial map."""


@dataclass(frozen=True)
class LinearMapSpec:
    name: str
    source: str
    target: str
    image: Callable[[object], AlgebraElement]

    def __call__(self, x: AlgebraElement) -> AlgebraElement:
        return apply_map(self, x)


def apply_map(spec: LinearMapSpec, x: AlgebraElement) -> AlgebraElement:
    if x.tag != spec.source:
        raise ValueError(f"{spec.name} expects {spec.source} elements, got {x.tag}")
    out = AlgebraElement.zero(spec.target)
    for k, c in x.sorted_terms():
        out = out + spec.image(k).scale(c)
    return out


# -- tau ----------------------------------------------------------------------------


def _tau_image(key, central_term: bool = True) -> AlgebraElement:
    if key == C1:
        return AlgebraElement.of(K1)
    if key == C2:
        return elem((2, K2))
    i, (n1, n2) = key
    sign = -1 if i else 1
    if n1 % 2:
        a = (n1 - 1) // 2
        return elem((sign * upow(-2 * n2), Mat(1, 2, (a, n2))), (ONE, Mat(2, 1, (a + 1, n2))))
    a = n1 // 2
    out = elem((sign, Mat(1, 1, (a, n2))), (upow(-2 * n2), Mat(2, 2, (a, n2))))
    if central_term and i == 1 and (n1, n2) == (0, 0):
        out = out + elem((HALF, K1))
    return out


PHI_TAU = LinearMapSpec("phi_tau", "L", "Tau", _tau_image)
PHI_TAU_NO_CENTRAL = LinearMapSpec("phi_tau_without_half_K1", "L", "Tau", lambda k: _tau_image(k, False))


def phi_tau(x: AlgebraElement) -> AlgebraElement:
    return apply_map(PHI_TAU, x)


def tau_degree(key) -> tuple[int, int] | None:
    """Raw degree of a tau key matching the L torus degree it comes from."""
    if not isinstance(key, Mat):
        return None
    a, b, (m1, m2) = key
    if a == b:
        return (2 * m1, m2)
    if (a, b) == (1, 2):
        return (2 * m1 + 1, m2)
    return (2 * m1 - 1, m2)


# -- affine -------------------------------------------------------------------------


def _aff_image(basis: GradingBasis, literal_central: bool = False):
    if basis.m21_even:
        raise ValueError("the affine identification needs m21 odd")
    mp = basis.mprod

    def image(key) -> AlgebraElement:
        if isinstance(key, Central):
            raise MembershipError("central keys are mapped only through m21*c1 + m22*c2")
        g, k = basis.coords(key.m)
        if g != 0:
            raise MembershipError(f"{key} has nonzero degree {g}")
        i = key.i
        if k % 2 == 0:
            j = k // 2
            if i == 0:
                raise MembershipError(f"{key} lies in the abelian part, not in the affine part")
            c = -upow(-4 * j * j * mp)
            out = elem((c, Loop("H", j)))
            if literal_central:
                out = out + elem((c * HALF, KAFF))
            elif j == 0:
                out = out + elem((HALF, KAFF))
            return out
        j = (k - 1) // 2
        c = upow(-(2 * j + 1) ** 2 * mp)
        sign = -1 if i else 1
        return elem((c * sign, Loop("E12", j)), (c, Loop("E21", j + 1)))

    return image


def aff_map(basis: GradingBasis, literal_central: bool = False) -> LinearMapSpec:
    name = "phi_aff_literal" if literal_central else "phi_aff"
    img = _aff_image(basis, literal_central)
    spec = LinearMapSpec(name, "L", "Aff", img)
    return spec


def phi_aff(x: AlgebraElement, basis: GradingBasis, literal_central: bool = False) -> AlgebraElement:
    """Image of ``x`` in affine sl2; ``x`` must lie in the affine part of the degree-0 algebra."""
    if x.tag != "L":
        raise ValueError("phi_aff expects an L element")
    img = _aff_image(basis, literal_central)
    a, b = x.coeff(C1), x.coeff(C2)
    m21, m22 = basis.m2
    if a * m22 != b * m21:
        raise MembershipError("central part is not a multiple of m21*c1 + m22*c2")
    lam = a / m21 if m21 else b / m22
    out = elem((lam, KAFF), tag="Aff")
    for k, c in x.sorted_terms():
        if isinstance(k, Central):
            continue
        out = out + img(k).scale(c)
    return out


def abelian_part(basis: GradingBasis, window: int) -> list[AlgebraElement]:
    """Generators t0^0 t^(2j m2) of the abelian part, plus beta."""
    out = [AlgebraElement.of(Torus(0, basis.vector(0, 2 * j))) for j in range(-window, window + 1) if j]
    return out + [basis.beta()]


def affine_part(basis: GradingBasis, window: int) -> list[AlgebraElement]:
    """Generators of the affine part with loop indices in [-window, window]."""
    out = []
    for j in range(-window, window + 1):
        out.append(AlgebraElement.of(Torus(1, basis.vector(0, 2 * j))))
        for i in (0, 1):
            out.append(AlgebraElement.of(Torus(i, basis.vector(0, 2 * j + 1))))
    out.append(basis.gamma())
    return out


# -- verification ---------------------------------------------------------------------


@dataclass
class HomReport:
    name: str
    checked_pairs: int = 0
    failures: list = field(default_factory=list)
    injective: bool = True
    rank: int = 0
    size: int = 0

    @property
    def passed(self) -> bool:
        return not self.failures and self.injective

    def to_json(self, limit: int = 20) -> dict:
        return {
            "map": self.name,
            "checkedPairs": self.checked_pairs,
            "failures": [
                {"x": str(x), "y": str(y), "mapOfBracket": str(l), "bracketOfMaps": str(r)}
                for x, y, l, r in self.failures[:limit]
            ],
            "failureCount": len(self.failures),
            "injective": self.injective,
            "rank": self.rank,
            "size": self.size,
        }


def verify_hom(f: Callable[[AlgebraElement], AlgebraElement], elements: Sequence[AlgebraElement], name: str = "map",
               stop_after: int | None = None) -> HomReport:
    """Check ``f([x, y]) == [f(x), f(y)]`` on all unordered pairs and injectivity on the span."""
    rep = HomReport(name, size=len(elements))
    images = [f(x) for x in elements]
    for a in range(len(elements)):
        for b in range(a + 1, len(elements)):
            x, y = elements[a], elements[b]
            lhs = f(bracket(x, y))
            rhs = bracket(images[a], images[b])
            rep.checked_pairs += 1
            if lhs != rhs:
                rep.failures.append((x, y, lhs, rhs))
                if stop_after is not None and len(rep.failures) >= stop_after:
                    return rep
    rep.rank = rank(dict(im.terms) for im in images)
    rep.injective = rep.rank == len(elements)
    return rep


def raw_box(box: int) -> list[AlgebraElement]:
    """All L basis elements with raw torus indices in [-box, box]^2, both parities, plus c1, c2."""
    out = [AlgebraElement.of(C1), AlgebraElement.of(C2)]
    for n1 in range(-box, box + 1):
        for n2 in range(-box, box + 1):
            for i in (0, 1):
                if i == 0 and (n1, n2) == (0, 0):
                    continue
                out.append(AlgebraElement.of(Torus(i, (n1, n2))))
    return out


def verify_iso_tau(box: int = 3, spec: LinearMapSpec = PHI_TAU) -> HomReport:
    return verify_hom(lambda x: apply_map(spec, x), raw_box(box), spec.name)


def verify_iso_aff(basis: GradingBasis, window: int = 3, literal_central: bool = False) -> HomReport:
    gens = affine_part(basis, window)
    name = "phi_aff_literal" if literal_central else "phi_aff"
    return verify_hom(lambda x: phi_aff(x, basis, literal_central), gens, name)


@dataclass
class SliceReport:
    checked: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def tau_slice_check(box: int = 3) -> SliceReport:
    """Per raw degree, the images are independent, homogeneous and fill the tau slice."""
    rep = SliceReport()
    for n1 in range(-box, box + 1):
        for n2 in range(-box, box + 1):
            n = (n1, n2)
            if n == (0, 0):
                src = [AlgebraElement.of(Torus(1, n)), AlgebraElement.of(C1), AlgebraElement.of(C2)]
                target_dim = 3  # H(t^0), K1, K2
            else:
                src = [AlgebraElement.of(Torus(0, n)), AlgebraElement.of(Torus(1, n))]
                target_dim = 2
            imgs = [phi_tau(x) for x in src]
            rep.checked += 1
            ok = True
            for im in imgs:
                for k in im.terms:
                    d = tau_degree(k)
                    if d is not None and d != n:
                        ok = False
                    if d is None and n != (0, 0):
                        ok = False
                if not in_tau_bar(im):
                    ok = False
            r = rank(dict(im.terms) for im in imgs)
            if r != target_dim or not ok:
                rep.failures.append({"degree": n, "rank": r, "expected": target_dim, "homogeneous": ok})
    return rep


def heisenberg_check(basis: GradingBasis, window: int) -> list:
    """For even m21: every bracket of degree-0 keys is a multiple of m21*c1 + m22*c2."""
    if not basis.m21_even:
        raise ValueError("Heisenberg check needs m21 even")
    keys = enumerate_graded(0, window, basis)
    m21, m22 = basis.m2
    bad = []
    for a in range(len(keys)):
        for b in range(a + 1, len(keys)):
            z = bracket(AlgebraElement.of(keys[a]), AlgebraElement.of(keys[b]))
            if any(not isinstance(k, Central) for k in z.terms):
                bad.append((keys[a], keys[b], z))
            elif z.coeff(C1) * m22 != z.coeff(C2) * m21:
                bad.append((keys[a], keys[b], z))
    return bad


def abelian_commutes_check(basis: GradingBasis, window: int) -> list:
    """For odd m21: the abelian part commutes with the affine part."""
    bad = []
    for x in abelian_part(basis, window):
        for y in affine_part(basis, window):
            z = bracket(x, y)
            if z:
                bad.append((x, y, z))
    return bad
