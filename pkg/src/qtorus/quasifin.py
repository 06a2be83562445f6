"""Quasifiniteness criteria: derived sequences, recurrences and the exact conditions.

A character (even m21) or an evaluation module (odd m21) yields a derived
sequence whose linear recurrences are exactly the polynomials P for which the
degree -1 space stays finite-dimensional.  ``verdict`` searches for such a
recurrence on a finite window and certifies it against the conditions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .algebra import GradingBasis, Torus
from .coeff import ONE, ZERO, FieldElement, upow
from .l0mod import (
    Character,
    EvalModuleSpec,
    L0Module,
    ParityError,
    PsiA,
    build_eval_module,
    madd,
    mis_zero,
    mscale,
    mzero,
)
from .linalg import nullspace


@dataclass(frozen=True)
class SequenceWindow:
    """Derived sequence on indices lo..hi; even windows are keyed (j, i), odd ones by i."""

    kind: str  # "even" or "odd"
    lo: int
    hi: int
    values: Mapping

    def parities(self) -> list[int]:
        return [0, 1] if self.kind == "even" else [0]

    def get(self, j: int, i: int) -> FieldElement:
        return self.values[(j, i)] if self.kind == "even" else self.values[i]

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    def shifted(self, d: int) -> "SequenceWindow":
        if self.kind == "even":
            vals = {(j, i + d): v for (j, i), v in self.values.items()}
        else:
            vals = {i + d: v for i, v in self.values.items()}
        return SequenceWindow(self.kind, self.lo + d, self.hi + d, vals)

    @classmethod
    def from_list(cls, values: Sequence, lo: int = 0) -> "SequenceWindow":
        vals = {lo + n: _fe(v) for n, v in enumerate(values)}
        return cls("odd", lo, lo + len(values) - 1, vals)


def _fe(x) -> FieldElement:
    return x if isinstance(x, FieldElement) else FieldElement(x)


@dataclass(frozen=True)
class RecurrencePoly:
    """P = sum a_i t^(i m2) (even) or sum a_i t^(2i m2) (odd), with the unscaled b_i kept too."""

    kind: str
    a: tuple
    b: tuple

    def __post_init__(self):
        if not self.a or not self.a[0] or not self.a[-1]:
            raise ValueError("a_0 and a_n must be nonzero")

    @property
    def degree(self) -> int:
        return len(self.a) - 1

    def coeff(self, i: int) -> FieldElement:
        return self.a[i] if 0 <= i < len(self.a) else ZERO

    def to_json(self) -> dict:
        return {"kind": self.kind, "a": [str(x) for x in self.a], "b": [str(x) for x in self.b]}

    @classmethod
    def from_b(cls, kind: str, b: Sequence, basis: GradingBasis) -> "RecurrencePoly":
        b = tuple(_fe(x) for x in b)
        mp = basis.mprod
        if kind == "even":
            a = tuple(bi * upow(i * i * mp) for i, bi in enumerate(b))
        else:
            a = tuple(bi * upow(4 * i * i * mp) for i, bi in enumerate(b))
        return cls(kind, a, b)

    @classmethod
    def from_a(cls, kind: str, a: Sequence, basis: GradingBasis) -> "RecurrencePoly":
        a = tuple(_fe(x) for x in a)
        mp = basis.mprod
        if kind == "even":
            b = tuple(ai * upow(-i * i * mp) for i, ai in enumerate(a))
        else:
            b = tuple(ai * upow(-4 * i * i * mp) for i, ai in enumerate(a))
        return cls(kind, a, b)


def poly_mul(p: Sequence, q: Sequence) -> list:
    out = [ZERO] * (len(p) + len(q) - 1)
    for i, x in enumerate(p):
        for j, y in enumerate(q):
            out[i + j] = out[i + j] + x * y
    return out


def poly_from_roots(roots: Sequence) -> list:
    """Coefficients (ascending) of prod (x - r)."""
    out = [ONE]
    for r in roots:
        out = poly_mul(out, [-_fe(r), ONE])
    return out


# -- sequences ------------------------------------------------------------------------------


def derive_sequence(psi, basis: GradingBasis, window: int) -> SequenceWindow:
    """Derived sequence on [-window, window] of a Character (even) or PsiA (odd)."""
    al, mp = basis.alpha, basis.mprod
    if isinstance(psi, Character):
        if not basis.m21_even:
            raise ParityError("characters need m21 even")
        vals = {}
        for j in (0, 1):
            for i in range(-window, window + 1):
                if i == 0:
                    vals[(j, 0)] = psi.beta if j == 0 else 2 * psi.value(1, 0)
                else:
                    sign = -1 if j else 1
                    vals[(j, i)] = (ONE - sign * upow(2 * i * al)) * upow(i * i * mp) * psi.value(j, i)
        return SequenceWindow("even", -window, window, vals)
    if isinstance(psi, EvalModuleSpec):
        psi = psi.psi_a
    if isinstance(psi, PsiA):
        if basis.m21_even:
            raise ParityError("abelian-part data needs m21 odd")
        vals = {}
        for i in range(-window, window + 1):
            if i == 0:
                vals[0] = psi.beta
            else:
                vals[i] = (ONE - upow(4 * i * al)) * upow(4 * i * i * mp) * psi.value(i)
        return SequenceWindow("odd", -window, window, vals)
    raise TypeError(f"cannot derive a sequence from {type(psi).__name__}")


def recurrence_detect(w: SequenceWindow, max_order: int, basis: GradingBasis | None = None) -> RecurrencePoly | None:
    """Smallest-order recurrence sum b_i f_(j, k+i) = 0 common to all parities, normalized b_n = 1."""
    if len(w) < 2 * max_order + 2:
        raise ValueError(f"window of length {len(w)} is too short for order {max_order}")
    for n in range(max_order + 1):
        rows = []
        for j in w.parities():
            for k in range(w.lo, w.hi - n + 1):
                row = {c: w.get(j, k + c) for c in range(n + 1)}
                rows.append({c: v for c, v in row.items() if v})
        ker = nullspace(rows, n + 1, ONE, ZERO)
        if not ker:
            continue
        # at the minimal order the kernel is a line; the reduced basis vector has b_n = 1
        vec = ker[-1]
        lead = vec[n]
        if not lead:
            continue
        b = [x / lead for x in vec]
        if not b[0]:
            continue
        if basis is None:
            return RecurrencePoly(w.kind, tuple(b), tuple(b))
        return RecurrencePoly.from_b(w.kind, b, basis)
    return None


# -- conditions -------------------------------------------------------------------------------


def check_condition_even(psi: Character, P: RecurrencePoly, basis: GradingBasis, window: int) -> bool:
    return not condition_even_failures(psi, P, basis, window)


def condition_even_failures(psi: Character, P: RecurrencePoly, basis: GradingBasis, window: int) -> list:
    """Evaluate psi(t0^j t^(k m2) P(t) - (-1)^j q^(k alpha) t0^j t^(k m2) P(q^alpha t) + [j=0] a_(-k) q^(-k^2 m) beta)."""
    if not basis.m21_even:
        raise ParityError("this condition is for m21 even")
    al, mp = basis.alpha, basis.mprod
    bad = []
    for k in range(-window, window + 1):
        for j in (0, 1):
            sign = -1 if j else 1
            total = ZERO
            for i in range(P.degree + 1):
                a = P.a[i]
                if not a:
                    continue
                n = k + i
                coeff = a * upow(2 * k * i * mp) * (ONE - sign * upow(2 * (k + i) * al))
                if j == 0 and n == 0:
                    continue  # coefficient of the unit vanishes
                if not coeff:
                    continue
                total = total + coeff * psi.value(j, n)
            if j == 0:
                total = total + P.coeff(-k) * upow(-2 * k * k * mp) * psi.beta
            if total:
                bad.append((j, k, total))
    return bad


def check_condition_odd(spec: EvalModuleSpec | L0Module, P: RecurrencePoly, basis: GradingBasis, window: int) -> bool:
    return not condition_odd_failures(spec, P, basis, window)


def condition_odd_failures(spec, P: RecurrencePoly, basis: GradingBasis, window: int) -> list:
    """The three operator identities on V0, for k in [-window, window]."""
    if basis.m21_even:
        raise ParityError("these conditions are for m21 odd")
    module = spec if isinstance(spec, L0Module) else build_eval_module(spec, basis, window)
    al, mp = basis.alpha, basis.mprod
    d = module.dim
    beta_scalar = _beta_scalar(module, basis)
    bad = []
    for k in range(-window, window + 1):
        # (3.10): a scalar identity because the abelian part acts by scalars
        total = ZERO
        for i in range(P.degree + 1):
            a = P.a[i]
            n = k + i
            if not a or n == 0:
                continue
            coeff = a * upow(8 * k * i * mp) * (ONE - upow(4 * (k + i) * al))
            total = total + coeff * module.act(Torus(0, basis.vector(0, 2 * n)))[0][0]
        total = total + P.coeff(-k) * upow(-8 * k * k * mp) * beta_scalar
        if total:
            bad.append(("abelian", k, total))
        for shifted in (False, True):
            op_odd = mzero(d)
            op_h = mzero(d)
            for i in range(P.degree + 1):
                a = P.a[i]
                if not a:
                    continue
                if shifted:
                    a = a * upow(4 * i * al)
                t1 = Torus(0, basis.vector(0, 2 * k + 1 + 2 * i))
                op_odd = madd(op_odd, mscale(module.act(t1), a * upow(2 * (2 * k + 1) * 2 * i * mp)))
                t2 = Torus(1, basis.vector(0, k + 2 * i))
                op_h = madd(op_h, mscale(module.act(t2), a * upow(2 * k * 2 * i * mp)))
            if not mis_zero(op_odd):
                bad.append(("odd", k, shifted))
            if not mis_zero(op_h):
                bad.append(("t0^1", k, shifted))
    return bad


def _beta_scalar(module: L0Module, basis: GradingBasis) -> FieldElement:
    from .algebra import C1, C2

    return basis.m1[0] * module.act(C1)[0][0] + basis.m1[1] * module.act(C2)[0][0]


# -- verdict -------------------------------------------------------------------------------------


@dataclass
class Verdict:
    quasifinite: bool
    certificate: RecurrencePoly | None
    max_order: int
    window: int
    checked_range: tuple
    note: str = ""

    @property
    def label(self) -> str:
        return "Quasifinite" if self.quasifinite else "UnknownWithinWindow"

    def to_json(self) -> dict:
        return {
            "verdict": self.label,
            "certificate": self.certificate.to_json() if self.certificate else None,
            "maxOrder": self.max_order,
            "window": self.window,
            "checkedRange": list(self.checked_range),
            "note": self.note,
        }


def mirrored(basis: GradingBasis) -> GradingBasis:
    return GradingBasis((-basis.m1[0], -basis.m1[1]), basis.m2)


def verdict(data, basis: GradingBasis, max_order: int = 4, window: int | None = None,
            direction: str = "highest") -> Verdict:
    """Search for a recurrence certificate; never claims non-quasifiniteness."""
    if direction == "lowest":
        basis = mirrored(basis)
    if window is None:
        window = max_order + 2
    known = data.window if isinstance(data, Character) else (data.psi_a.window if isinstance(data, EvalModuleSpec) else None)
    seq_w = window if known is None else min(window, known)
    if isinstance(data, Character):
        seq = derive_sequence(data, basis, seq_w)
        P = recurrence_detect(seq, max_order, basis)
        if P is None:
            return Verdict(False, None, max_order, window, (-seq_w, seq_w), "no recurrence up to max order")
        check_w = _check_window(data.window, P.degree, window)
        if check_condition_even(data, P, basis, check_w):
            return Verdict(True, P, max_order, window, (-check_w, check_w))
        return Verdict(False, None, max_order, window, (-check_w, check_w), "recurrence failed the exact condition")
    if isinstance(data, EvalModuleSpec):
        seq = derive_sequence(data.psi_a, basis, seq_w)
        Pq = recurrence_detect(seq, max_order, basis)
        if Pq is None:
            return Verdict(False, None, max_order, window, (-seq_w, seq_w), "no recurrence up to max order")
        q2a = upow(4 * basis.alpha)
        roots = []
        for mu, dim in zip(data.mu, data.dims):
            if dim > 1:
                roots += [mu, q2a * mu]
        b = poly_mul(list(Pq.b), poly_from_roots(roots))
        P = RecurrencePoly.from_b("odd", b, basis)
        check_w = _check_window(data.psi_a.window, P.degree, window)
        if check_condition_odd(data, P, basis, check_w):
            return Verdict(True, P, max_order, window, (-check_w, check_w))
        return Verdict(False, None, max_order, window, (-check_w, check_w), "recurrence failed the exact condition")
    raise TypeError(f"unsupported input {type(data).__name__}")


def _check_window(known: int | None, degree: int, window: int) -> int:
    if known is None:
        return window
    return max(0, min(window, known - degree))
