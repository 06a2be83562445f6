"""Truncated construction of irreducible Z-graded highest weight modules.

The module is built degree by degree.  A vector of degree -s-1 is a
combination of ``g . b`` with ``g`` a degree -1 generator and ``b`` a basis
vector of degree -s.  Such a vector is zero in the irreducible quotient iff
every degree 1 element kills it, so two vectors are identified when their
*signatures* ``(h . v)_h`` over the probe window agree.  All actions are
computed from the Leibniz rule ``x.(g.b) = [x,g].b + g.(x.b)`` together with
signature solves, memoized per (generator, depth, basis index).

Cells generalize degrees: a cell is ``(s, r)`` where ``r`` is an extra loop
index used by the Z^2 construction; the plain module uses ``r = 0`` only.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import flint

from .algebra import (
    AlgebraElement,
    Central,
    GradingBasis,
    Torus,
    bracket_keys_L,
    elem,
    enumerate_graded,
    grade_of,
    loop_index,
)
from .coeff import ONE, ZERO, DenominatorVanishes, FieldElement, PrimeSpec, specialize
from .l0mod import L0Module
from .linalg import EchelonBasis, rank, vec_add_scaled


class TruncationError(RuntimeError):
    """A required vector falls outside the span available at the current truncation."""


class DepthError(ValueError):
    """An operation needs degrees that have not been built."""


# -- scalar backends ----------------------------------------------------------------------


class ExactBackend:
    name = "exact"

    def __init__(self):
        self.zero = ZERO
        self.one = ONE

    def conv(self, x: FieldElement):
        return x

    def to_field(self, x) -> FieldElement:
        return x


class PrimeBackend:
    """Arithmetic in GF(p) after specializing u to a random residue."""

    name = "prime"

    def __init__(self, spec: PrimeSpec, seed: int = 0, attempt: int = 0):
        self.spec = spec
        self.seed = seed
        self.attempt = attempt
        self.p = spec.modulus
        self.zero = flint.nmod(0, self.p)
        self.one = flint.nmod(1, self.p)
        self._cache: dict = {}

    def conv(self, x: FieldElement):
        r = self._cache.get(x)
        if r is None:
            r = flint.nmod(specialize(x, self.spec), self.p)
            self._cache[x] = r
        return r

    def reseeded(self) -> "PrimeBackend":
        """Fresh random evaluation point, deterministic in (seed, attempt)."""
        a = self.attempt + 1
        return PrimeBackend(PrimeSpec.random(self.seed * 7919 + a), self.seed, a)


def with_prime_retry(run: Callable, backend, attempts: int = 5):
    """Call ``run(backend)``; on a vanishing denominator retry the prime backend at a fresh point."""
    for _ in range(attempts):
        try:
            return run(backend)
        except DenominatorVanishes:
            if getattr(backend, "name", "") != "prime":
                raise
            backend = backend.reseeded()
    return run(backend)


def make_backend(name: str, seed: int = 0):
    if name == "exact":
        return ExactBackend()
    if name == "prime":
        return PrimeBackend(PrimeSpec.random(seed), seed)
    raise ValueError(f"unknown backend {name!r}")


# -- parameters and results ------------------------------------------------------------------


@dataclass(frozen=True)
class TruncationParams:
    gen_window: int = 4
    probe_window: int = 4
    max_depth: int = 3

    def __post_init__(self):
        if self.gen_window < 1 or self.probe_window < 1:
            raise ValueError("windows must be >= 1")
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")


@dataclass
class CellRecord:
    dim: int
    labels: list  # (generator key, index in parent cell) for depth >= 1; V0 labels at depth 0
    echelon: EchelonBasis | None = None
    candidates: dict = field(default_factory=dict)  # (g, b) -> coordinate vector


def _flat(x) -> tuple:
    return x


# -- engine -------------------------------------------------------------------------------------


class HwEngine:
    """Shared machinery for the Z-graded and Z^2-graded constructions.

    ``shift(key)`` is the loop shift of a key (0 in the Z-graded case), so a
    key of grade ``g`` maps cell ``(s, r)`` to ``(s - g, r + shift)``.
    ``top(r)`` returns the top cell content: a list of labels plus an action
    function ``(key, r, idx) -> {idx': scalar}`` for degree-0 keys, and the
    top cells are ``(0, r)``.
    """

    def __init__(self, v0: L0Module, basis: GradingBasis, trunc: TruncationParams, backend=None,
                 shift: Callable | None = None, top_dims: Callable[[int], list] | None = None,
                 top_action: Callable | None = None, loop_range: int | None = None):
        self.v0 = v0
        self.basis = basis
        self.trunc = trunc
        self.bk = backend or ExactBackend()
        self.shift = shift or (lambda key: 0)
        self.loop_range = loop_range
        self.lower_gens = [k for k in enumerate_graded(-1, trunc.gen_window, basis)]
        self.probes = [k for k in enumerate_graded(1, trunc.probe_window, basis)]
        self._top_dims = top_dims
        self._top_action = top_action
        self.cells: dict[tuple[int, int], CellRecord] = {}
        self.depth = -1
        self.missing: set = set()
        self._memo: dict = {}
        self._grade: dict = {}
        self._brk: dict = {}
        self._v0cache: dict = {}
        self.stats = {"signature_solves": 0}

    # -- helpers ------------------------------------------------------------------------
    def grade(self, key) -> int:
        g = self._grade.get(key)
        if g is None:
            g = grade_of(key, self.basis)
            self._grade[key] = g
        return g

    def brk(self, x, y) -> tuple:
        r = self._brk.get((x, y))
        if r is None:
            conv = self.bk.conv
            r = tuple((k, conv(c)) for k, c in bracket_keys_L(x, y))
            self._brk[(x, y)] = r
        return r

    def cell(self, s: int, r: int) -> CellRecord | None:
        return self.cells.get((s, r))

    def dim(self, s: int, r: int = 0) -> int:
        c = self.cells.get((s, r))
        return c.dim if c else 0

    def row_indices(self) -> list[int]:
        if self.loop_range is None:
            return [0]
        return list(range(-self.loop_range, self.loop_range + 1))

    def _need(self, s: int, r: int) -> CellRecord:
        if s > self.depth:
            raise DepthError(f"degree -{s} has not been built (built through -{self.depth})")
        c = self.cells.get((s, r))
        if c is None:
            raise TruncationError(f"cell ({s},{r}) is outside the loop window or was not computable")
        return c

    # -- top layer --------------------------------------------------------------------------
    def _top_act(self, key, r: int, idx: int) -> dict:
        """Degree-0 key acting on basis vector idx of top cell (0, r); result lives in (0, r + shift)."""
        memo_key = ("top", key, r, idx)
        res = self._memo.get(memo_key)
        if res is not None:
            return res
        if self._top_action is not None:
            raw = self._top_action(key, r, idx)
        else:
            try:
                mat = self.v0.act(key)
            except IndexError as exc:
                raise TruncationError(str(exc)) from exc
            raw = {row: mat[row][idx] for row in range(len(mat)) if mat[row][idx]}
        res = {k: self.bk.conv(v) for k, v in raw.items()}
        res = {k: v for k, v in res.items() if not v == 0}
        self._memo[memo_key] = res
        return res

    # -- actions on basis vectors -------------------------------------------------------------
    def act_basis(self, key, s: int, r: int, idx: int) -> dict:
        """``key . e_idx`` for e_idx a basis vector of cell (s, r); result in cell (s - grade, r + shift)."""
        memo_key = (key, s, r, idx)
        res = self._memo.get(memo_key)
        if res is not None:
            return res
        g = self.grade(key)
        ts, tr = s - g, r + self.shift(key)
        if isinstance(key, Central):
            c = self._central_scalar(key)
            res = {idx: c} if not c == 0 else {}
        elif ts < 0:
            res = {}
        elif ts <= self.depth and (ts, tr) not in self.cells:
            # untracked cell: refuse rather than return a silently wrong answer
            raise TruncationError(f"action leaves the tracked cells at ({ts},{tr})")
        elif g >= 0:
            if s == 0:
                res = self._top_act(key, r, idx) if g == 0 else {}
            else:
                res = self._leibniz(key, s, r, idx)
        elif g == -1 and s + 1 <= self.depth and key in self._lower_index:
            res = self._candidate(key, s, r, idx)
        else:
            res = self._solve_lowering(key, s, r, idx)
        self._memo[memo_key] = res
        return res

    def _central_scalar(self, key):
        c = self._v0cache.get(key)
        if c is None:
            if self._top_action is not None:
                raw = self._top_action(key, 0, None)
            else:
                raw = self.v0.act(key)[0][0]
            c = self.bk.conv(raw)
            self._v0cache[key] = c
        return c

    def _leibniz(self, x, s: int, r: int, idx: int) -> dict:
        """x.(g.b) = [x,g].b + g.(x.b) for the basis vector idx = g.b of cell (s, r)."""
        cell = self._need(s, r)
        g, b = cell.labels[idx]
        ps, pr = s - 1, r - self.shift(g)
        out: dict = {}
        for k, c in self.brk(x, g):
            vec_add_scaled(out, self.act_basis(k, ps, pr, b), c)
        xb = self.act_basis(x, ps, pr, b)
        if xb:
            xs, xr = ps - self.grade(x), pr + self.shift(x)
            vec_add_scaled(out, self.act_vec(g, xs, xr, xb), self.bk.one)
        return out

    def act_vec(self, key, s: int, r: int, vec: dict) -> dict:
        out: dict = {}
        for i, c in vec.items():
            vec_add_scaled(out, self.act_basis(key, s, r, i), c)
        return out

    def act_element(self, x: AlgebraElement, s: int, r: int, vec: dict) -> dict:
        out: dict = {}
        for k, c in x.terms.items():
            vec_add_scaled(out, self.act_vec(k, s, r, vec), self.bk.conv(c))
        return out

    def _candidate(self, g, s: int, r: int, idx: int) -> dict:
        cell = self._need(s + 1, r + self.shift(g))
        v = cell.candidates.get((g, idx))
        if v is None:
            return self._solve_lowering(g, s, r, idx)
        return v

    def signature_of_product(self, x, s: int, r: int, idx: int) -> dict:
        """Signature of x.e_idx (x of negative grade) in terms of the probe images."""
        sig: dict = {}
        g = self.grade(x)
        ts, tr = s - g, r + self.shift(x)
        for hi, h in enumerate(self.probes):
            # h.(x.e) = [h,x].e + x.(h.e)
            part: dict = {}
            for k, c in self.brk(h, x):
                vec_add_scaled(part, self.act_basis(k, s, r, idx), c)
            he = self.act_basis(h, s, r, idx)
            if he:
                hs, hr = s - 1, r + self.shift(h)
                vec_add_scaled(part, self.act_vec(x, hs, hr, he), self.bk.one)
            hr_target = tr + self.shift(h)
            for j, c in part.items():
                sig[(hi, hr_target, j)] = c
        return sig

    def _solve_lowering(self, x, s: int, r: int, idx: int) -> dict:
        g = self.grade(x)
        ts, tr = s - g, r + self.shift(x)
        target = self._need(ts, tr)
        self.stats["signature_solves"] += 1
        sig = self.signature_of_product(x, s, r, idx)
        if not sig:
            return {}
        coords = target.echelon.express(sig)
        if coords is None:
            raise TruncationError(f"{x} applied at cell ({s},{r}) leaves the span of the generator window")
        return coords

    # -- construction --------------------------------------------------------------------------
    def build_top(self) -> None:
        self._lower_index = set(self.lower_gens)
        for r in self.row_indices():
            if self._top_dims is not None:
                labels = self._top_dims(r)
            else:
                labels = list(self.v0.labels)
            self.cells[(0, r)] = CellRecord(len(labels), labels)
        self.depth = 0

    def extend(self) -> None:
        """Build depth s+1; a cell depending on an untracked cell is left out and listed in ``missing``."""
        s = self.depth
        if s < 0:
            self.build_top()
            return
        new_cells = {}
        for r in self.row_indices():
            try:
                new_cells[r] = self._build_cell(s, r)
            except TruncationError:
                if self.loop_range is None:
                    raise
                self.missing.add((s + 1, r))
        for r, rec in new_cells.items():
            self.cells[(s + 1, r)] = rec
        self.depth = s + 1

    def _build_cell(self, s: int, r: int) -> CellRecord:
        eb = EchelonBasis(_sig_order)
        labels = []
        cands = {}
        for g in self.lower_gens:
            parent = self._need(s, r - self.shift(g))
            for b in range(parent.dim):
                sig = self.signature_of_product(g, s, r - self.shift(g), b)
                if not sig:
                    cands[(g, b)] = {}
                    continue
                indep, data = _insert(eb, sig)
                if indep:
                    labels.append((g, b))
                    cands[(g, b)] = {data: self.bk.one}
                else:
                    cands[(g, b)] = data
        return CellRecord(len(labels), labels, eb, cands)

    def build(self, depth: int | None = None) -> None:
        depth = self.trunc.max_depth if depth is None else depth
        if self.depth < 0:
            self.build_top()
        while self.depth < depth:
            self.extend()


def _sig_order(label):
    return label


def _insert(eb: EchelonBasis, v: dict):
    rem, combo = eb.reduce(v)
    if rem:
        idx = eb.count
        eb.count += 1
        rc = {k: -c for k, c in combo.items()}
        one = next(iter(rem.values()))
        rc[idx] = one / one
        p = min(rem, key=eb._order) if eb._order else min(rem)
        eb.rows[p] = (rem, rc)
        return True, idx
    return False, combo


# -- Z-graded modules ------------------------------------------------------------------------------


@dataclass
class GradedModule:
    """Result of a highest (or lowest) weight construction."""

    basis: GradingBasis
    v0: L0Module
    trunc: TruncationParams
    direction: str
    engine: HwEngine
    timings: list = field(default_factory=list)

    @property
    def dims(self) -> list[int]:
        return [self.engine.dim(s) for s in range(self.engine.depth + 1)]

    @property
    def depth(self) -> int:
        return self.engine.depth

    @property
    def central(self) -> tuple:
        return self.engine._central_scalar(Central(1)), self.engine._central_scalar(Central(2))

    def labels(self, s: int) -> list:
        return self.engine.cells[(s, 0)].labels

    def act(self, key, s: int, vec: dict) -> dict:
        return self.engine.act_vec(key, s, 0, vec)

    def act_element(self, x: AlgebraElement, s: int, vec: dict) -> dict:
        return self.engine.act_element(x, s, 0, vec)

    def matrix(self, key, s: int) -> list[list]:
        """Action matrix of ``key`` from degree -s to degree -s + grade (columns = source basis)."""
        g = self.engine.grade(key)
        ts = s - g
        rows = self.engine.dim(ts) if ts >= 0 else 0
        cols = self.engine.dim(s)
        m = [[self.engine.bk.zero] * cols for _ in range(rows)]
        for c in range(cols):
            for r_, v in self.engine.act_basis(key, s, 0, c).items():
                m[r_][c] = v
        return m

    def generators(self) -> dict:
        return {
            -1: enumerate_graded(-1, self.trunc.gen_window, self.engine.basis),
            0: enumerate_graded(0, self.trunc.gen_window, self.engine.basis),
            1: enumerate_graded(1, self.trunc.probe_window, self.engine.basis),
        }

    def unit(self, s: int, idx: int) -> dict:
        return {idx: self.engine.bk.one}


def build_hw_module(v0: L0Module, basis: GradingBasis, trunc: TruncationParams, direction: str = "highest",
                    backend=None) -> GradedModule:
    """Build degrees 0, -1, ..., -max_depth; for ``lowest`` the grading is mirrored (m1 -> -m1)."""
    if v0.basis.m21_even != basis.m21_even:
        raise ValueError("module parity does not match the basis")
    if direction == "highest":
        eb = basis
    elif direction == "lowest":
        eb = GradingBasis((-basis.m1[0], -basis.m1[1]), basis.m2)
    else:
        raise ValueError("direction must be 'highest' or 'lowest'")

    def run(bk) -> GradedModule:
        engine = HwEngine(v0, eb, trunc, bk)
        mod = GradedModule(basis, v0, trunc, direction, engine)
        engine.build_top()
        for _ in range(trunc.max_depth):
            t0 = time.perf_counter()
            engine.extend()
            mod.timings.append(time.perf_counter() - t0)
        return mod

    return with_prime_retry(run, backend)


def extend_degree(mod: GradedModule) -> GradedModule:
    mod.engine.extend()
    return mod


# -- audits ------------------------------------------------------------------------------------


def commutation_audit(mod: GradedModule, window: int | None = None, depths: Iterable[int] | None = None,
                      limit: int | None = None) -> list:
    """Check act([a,b]) = act(a)act(b) - act(b)act(a) on stored degrees for generator pairs."""
    eng = mod.engine
    w = window if window is not None else min(mod.trunc.gen_window, mod.trunc.probe_window)
    gens = (enumerate_graded(-1, w, eng.basis) + enumerate_graded(0, w, eng.basis)
            + enumerate_graded(1, w, eng.basis))
    depths = list(range(eng.depth + 1)) if depths is None else list(depths)
    failures = []
    count = 0
    for a in range(len(gens)):
        for b in range(a + 1, len(gens)):
            x, y = gens[a], gens[b]
            gx, gy = eng.grade(x), eng.grade(y)
            for s in depths:
                # all intermediate degrees must be built
                mids = [s - gx, s - gy, s - gx - gy]
                if max(mids) > eng.depth:
                    continue
                for i in range(eng.dim(s)):
                    try:
                        lhs: dict = {}
                        for k, c in eng.brk(x, y):
                            vec_add_scaled(lhs, eng.act_basis(k, s, 0, i), c)
                        rhs: dict = {}
                        xy = eng.act_vec(x, s - gy, 0, eng.act_basis(y, s, 0, i)) if s - gy >= 0 else {}
                        yx = eng.act_vec(y, s - gx, 0, eng.act_basis(x, s, 0, i)) if s - gx >= 0 else {}
                        vec_add_scaled(rhs, xy, eng.bk.one)
                        vec_add_scaled(rhs, yx, -eng.bk.one)
                    except TruncationError:
                        continue
                    count += 1
                    if lhs != rhs:
                        failures.append((str(x), str(y), s, i))
                    if limit is not None and count >= limit:
                        return failures
    return failures


def faithfulness_audit(mod: GradedModule) -> list:
    """Rank of the probe signatures of the basis equals the dimension at every degree >= 1."""
    eng = mod.engine
    bad = []
    for s in range(1, eng.depth + 1):
        vecs = []
        for i in range(eng.dim(s)):
            sig = {}
            for hi, h in enumerate(eng.probes):
                for j, c in eng.act_basis(h, s, 0, i).items():
                    sig[(hi, j)] = c
            vecs.append(sig)
        r = rank(vecs)
        if r != eng.dim(s):
            bad.append((s, r, eng.dim(s)))
    return bad


def top_annihilated(mod: GradedModule) -> bool:
    eng = mod.engine
    return all(not eng.act_basis(h, 0, 0, i) for h in eng.probes for i in range(eng.dim(0)))


def depth_bound_holds(dims: Sequence[int], deg_p: int) -> bool:
    return all(dims[s + 1] <= 2 * deg_p * dims[s] for s in range(len(dims) - 1))


# -- scans and probes -------------------------------------------------------------------------------


@dataclass
class StabilityScan:
    rows: list  # (K, K', dims or None, error)
    stable: bool

    def to_json(self) -> dict:
        return {
            "rows": [{"K": k, "Kprime": kp, "dims": d, "error": e} for k, kp, d, e in self.rows],
            "stable": self.stable,
        }


def stability_scan(v0: L0Module, basis: GradingBasis, windows: Sequence[tuple[int, int]], depth: int,
                   backend=None, direction: str = "highest") -> StabilityScan:
    rows = []
    for k, kp in windows:
        try:
            mod = build_hw_module(v0, basis, TruncationParams(k, kp, depth), direction, backend)
            rows.append((k, kp, mod.dims, None))
        except TruncationError as exc:
            rows.append((k, kp, None, str(exc)))
    # stability means the last two successive truncations agree
    stable = len(rows) >= 2 and rows[-1][2] is not None and rows[-1][2] == rows[-2][2]
    return StabilityScan(rows, stable)


@dataclass
class GrowthReport:
    holds: bool
    dims: list
    witness_ranks: dict


def growth_witnesses(mod: GradedModule, n: int, l: int = 0, k: int = 0) -> list[dict]:
    """Vectors (t0^0 t^(-m1))^j . t0^l t^((-n+j) m1 + k m2) . v0 for 0 <= j < n, all top basis vectors."""
    eng = mod.engine
    b = eng.basis
    lower = Torus(0, b.vector(-1, 0))
    out = []
    for j in range(n):
        start = Torus(l % 2, b.vector(-n + j, k))
        for i in range(eng.dim(0)):
            vec = eng.act_basis(start, 0, 0, i)
            depth = n - j
            for _ in range(j):
                vec = eng.act_vec(lower, depth, 0, vec)
                depth += 1
            out.append(vec)
    return out


def growth_check(mod: GradedModule, l: int = 0, k: int = 0) -> GrowthReport:
    dims = mod.dims
    nontrivial = any(d > 0 for d in dims[1:])
    holds = all(dims[n] >= n for n in range(1, len(dims))) if nontrivial else True
    ranks = {}
    for n in range(1, mod.depth + 1):
        try:
            ranks[n] = rank(growth_witnesses(mod, n, l, k))
        except TruncationError:
            ranks[n] = None
    return GrowthReport(holds, dims, ranks)


def nilpotency_index(mod: GradedModule, x: AlgebraElement, s: int, vec: dict, max_power: int):
    """Smallest k with x^k . vec = 0 for a homogeneous x of grade <= 0, or None up to ``max_power``."""
    eng = mod.engine
    grades = {eng.grade(k) for k in x.terms}
    if len(grades) != 1:
        raise ValueError("the operator must be homogeneous")
    g = grades.pop()
    if g > 0:
        raise ValueError("the operator must not raise the degree")
    if s - g * max_power > eng.depth:
        raise DepthError("grade * max_power exceeds the built depth")
    terms = [(k, eng.bk.conv(c)) for k, c in x.sorted_terms()]
    for power in range(1, max_power + 1):
        out: dict = {}
        for key, c in terms:
            vec_add_scaled(out, eng.act_vec(key, s, 0, vec), c)
        vec = out
        s -= g
        if not vec:
            return power
    return None


def integrability_probe(mod: GradedModule, m: tuple[int, int], sign: int, v_index: int, max_power: int,
                        s: int = 0):
    """Smallest k with (t0^0 t^m + sign t0^1 t^m)^k . v = 0 for v a basis vector of degree -s, or None."""
    if m[0] % 2 == 0:
        raise ValueError("the first raw coordinate of m must be odd")
    x = elem((1, Torus(0, m)), (1 if sign > 0 else -1, Torus(1, m)))
    return nilpotency_index(mod, x, s, {v_index: mod.engine.bk.one}, max_power)
