from __future__ import annotations

import itertools
import random

import pytest

from qtorus.algebra import C1, C2, STANDARD, GradingBasis, Torus
from qtorus.coeff import HALF, ONE, Q, ZERO, FieldElement, upow
from qtorus.l0mod import (
    Character,
    EvalModuleSpec,
    ExpPolyDataEven,
    ExpPolyDataOdd,
    ParityError,
    PsiA,
    build_eval_module,
    character_module,
    divides_at_roots,
    generated_algebra_dim,
    mcomm,
    mis_zero,
    mscale,
    madd,
    psi_from_exppoly_even,
    psi_from_exppoly_odd,
    remark26_check,
    two_root_character,
    sl2_irrep,
    zero_character,
)

ODD = GradingBasis.parse("(0,1);(1,0)")
ODD2 = GradingBasis.parse("(1,0);(1,1)")
EVEN2 = GradingBasis.parse("(1,1);(2,3)")


def diag(*xs):
    n = len(xs)
    return [[FieldElement(xs[r]) if r == c else ZERO for c in range(n)] for r in range(n)]


@pytest.mark.parametrize("d", [1, 2, 3, 4, 5])
def test_sl2_relations(d):
    r = sl2_irrep(d)
    assert mcomm(r.h, r.e12) == mscale(r.e12, 2)
    assert mcomm(r.h, r.e21) == mscale(r.e21, -2)
    assert mcomm(r.e12, r.e21) == r.h


def test_sl2_examples():
    r1 = sl2_irrep(1)
    assert r1.h == [[ZERO]] and r1.e12 == [[ZERO]] and r1.e21 == [[ZERO]]
    r2 = sl2_irrep(2)
    assert r2.h == diag(1, -1)
    assert r2.e12 == [[ZERO, ONE], [ZERO, ZERO]] and r2.e21 == [[ZERO, ZERO], [ONE, ZERO]]
    assert sl2_irrep(3).h == diag(2, 0, -2)
    with pytest.raises(ValueError):
        sl2_irrep(0)


def test_eval_trivial():
    m = build_eval_module(EvalModuleSpec((1,), (1,)), ODD, 2)
    assert m.dim == 1
    assert all(mis_zero(a) for a in m.matrices().values())


def test_eval_d2_t01():
    m = build_eval_module(EvalModuleSpec((1,), (2,)), ODD, 2)
    assert m.act(Torus(1, (0, 0))) == diag(-1, 1)


@pytest.mark.parametrize("b", [ODD, ODD2], ids=str)
def test_eval_d3_odd_generator(b):
    m = build_eval_module(EvalModuleSpec((1,), (3,)), b, 2)
    r = sl2_irrep(3)
    want = mscale(madd(r.e12, r.e21), upow(-b.mprod))
    assert m.act(Torus(0, b.m2)) == want


def test_eval_parity_guard():
    with pytest.raises(ParityError):
        build_eval_module(EvalModuleSpec((1,), (2,)), STANDARD)


@pytest.mark.parametrize("spec", [
    EvalModuleSpec((1,), (2,)),
    EvalModuleSpec((Q,), (3,), PsiA(lambda j: FieldElement(j), 2)),
    EvalModuleSpec((1, -Q), (2, 2)),
    EvalModuleSpec((2, 3), (1, 3)),
], ids=["d2", "d3-psiA", "2x2", "1x3"])
@pytest.mark.parametrize("b", [ODD, ODD2], ids=str)
def test_eval_commutation(spec, b):
    m = build_eval_module(spec, b, 2)
    assert m.commutation_failures() == []
    assert m.gamma_acts_as_zero()


@pytest.mark.parametrize("d", [1, 2, 3])
def test_eval_irreducible_span(d):
    m = build_eval_module(EvalModuleSpec((Q,), (d,)), ODD2, 2)
    assert generated_algebra_dim(list(m.matrices().values())) == d * d


def test_eval_spec_validation():
    with pytest.raises(ValueError):
        EvalModuleSpec((1, 1), (2, 2))
    with pytest.raises(ValueError):
        EvalModuleSpec((0,), (2,))
    with pytest.raises(ValueError):
        EvalModuleSpec((1,), (0,))
    with pytest.raises(ValueError):
        EvalModuleSpec((1,), (2, 2))


def test_two_root_values():
    psi = psi_from_exppoly_even(ExpPolyDataEven((1, -1), {0: ((1,), (1,)), 1: ((1,), (1,))}), STANDARD)
    assert psi.beta == FieldElement(2)
    # the exp-polynomial formula itself yields 1 here; the printed value 1/2 is available as an override
    assert psi.value(1, 0) == ONE
    assert two_root_character(STANDARD, HALF).value(1, 0) == HALF
    for i in (-3, -1, 1, 3, 5):
        assert psi.value(0, i) == ZERO
    for i in (-2, 2, 4):
        assert psi.value(0, i) == FieldElement(2) / ((ONE - upow(2 * i)) * upow(i * i * STANDARD.mprod))


def test_zero_character():
    psi = psi_from_exppoly_even(ExpPolyDataEven((1,), {}), STANDARD)
    assert all(psi.value(j, k) == ZERO for j in (0, 1) for k in range(-3, 4) if (j, k) != (0, 0))
    assert zero_character(EVEN2).beta == ZERO


@pytest.mark.parametrize("b", [STANDARD, EVEN2], ids=str)
def test_character_commutators_vanish(b):
    psi = psi_from_exppoly_even(ExpPolyDataEven((Q, 3), {0: ((1, 2), (1,)), 1: ((0, 1), (5,))}), b)
    m = character_module(psi, 3)
    assert m.commutation_failures() == []
    assert m.gamma_acts_as_zero()


def test_character_central_values():
    psi = two_root_character(STANDARD)
    assert psi.of_key(C1) == FieldElement(2)
    assert psi.of_key(C2) == ZERO


def test_character_from_window():
    vals = {(0, 1): 1, (0, -1): 2, (1, 0): 3, (1, 1): 4, (1, -1): 5}
    psi = Character.from_window(STANDARD, vals, 7)
    assert psi.value(1, 0) == FieldElement(3)
    with pytest.raises(IndexError):
        psi.value(0, 2)


def test_even_parity_guard():
    with pytest.raises(ParityError):
        psi_from_exppoly_even(ExpPolyDataEven((1,), {0: ((1,),)}), ODD)
    with pytest.raises(ParityError):
        psi_from_exppoly_odd(ExpPolyDataOdd((1,), ((1,),)), STANDARD)


def test_exppoly_validation():
    with pytest.raises(ValueError):
        ExpPolyDataEven((1, 1), {})
    with pytest.raises(ValueError):
        ExpPolyDataOdd((0,), ((1,),))


def test_psi_odd_examples():
    z = psi_from_exppoly_odd(ExpPolyDataOdd((1,), ()), ODD2)
    assert z.beta == ZERO and z.value(2) == ZERO
    one = psi_from_exppoly_odd(ExpPolyDataOdd((1,), ((1,),)), ODD2)
    assert one.beta == ONE
    q2 = Q * Q
    psi = psi_from_exppoly_odd(ExpPolyDataOdd((q2,), ((1,),)), ODD2)
    assert ODD2.alpha == 1
    assert psi.value(1) == q2 / ((ONE - q2) * Q ** (2 * ODD2.mprod))
    with pytest.raises(ValueError):
        psi.value(0)


def test_divisibility_check_examples():
    m1 = build_eval_module(EvalModuleSpec((1,), (2,)), ODD, 4)
    assert remark26_check(m1, (-1, 1), 0) and remark26_check(m1, (-1, 1), 1)
    assert not remark26_check(m1, (1,), 0)
    triv = build_eval_module(EvalModuleSpec((1,), (1,)), ODD, 4)
    assert remark26_check(triv, (3, 0, 2), 1)


def _poly_mul(a, b):
    out = [ZERO] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return out


def test_divisibility_check_random():
    rng = random.Random(7)
    mus = [ONE, -ONE, Q, FieldElement(2), -Q]
    checked = 0
    for nu in (1, 2):
        for dims in itertools.product((1, 2, 3), repeat=nu):
            mu = tuple(rng.sample(mus, nu))
            mod = build_eval_module(EvalModuleSpec(mu, dims), ODD2, 5)
            for _ in range(20):
                live = [m for m, d in zip(mu, dims) if d > 1]
                if rng.random() < 0.5:
                    # force divisibility by the product of (x - mu_i)
                    fac = [ONE]
                    for m in mu:
                        fac = _poly_mul(fac, [-m, ONE])
                    cof = [FieldElement(rng.randint(-3, 3)) for _ in range(rng.randint(1, 5 - nu))]
                    b = _poly_mul(fac, cof)
                else:
                    b = [FieldElement(rng.randint(-3, 3)) for _ in range(rng.randint(1, 5))]
                for k in (0, 1):
                    # slots carrying the trivial sl2-module impose no condition
                    expected = divides_at_roots(live, b)
                    assert remark26_check(mod, b, k) == expected, (mu, dims, b, k)
                    checked += 1
    assert checked >= 12 * 20
