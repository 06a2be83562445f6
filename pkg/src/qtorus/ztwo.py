"""Z^2-graded modules from a loop variable.

``V (x) C[x^{+-1}]`` carries the action ``t0^i t^(a m1 + b m2) . (v (x) x^r) =
(t0^i t^(a m1 + b m2) . v) (x) x^(r+b)``.  Given an L0-submodule W of the top
layer, described by residue classes of loop exponents per top basis vector,
the irreducible quotient with top W is built cell by cell with the same
signature recursion as the Z-graded engine.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .algebra import Central, GradingBasis, enumerate_graded, grade_of, loop_index
from .hwmod import (
    ExactBackend,
    GradedModule,
    HwEngine,
    TruncationError,
    TruncationParams,
    with_prime_retry,
)
from .l0mod import L0Module, mmul
from .linalg import EchelonBasis, rank


@dataclass(frozen=True)
class SubmoduleSpecW:
    """For each top basis vector, a modulus and the allowed loop exponent residues (empty = absent)."""

    classes: tuple  # ((modulus, frozenset(residues)), ...)

    def __post_init__(self):
        norm = []
        for mod, res in self.classes:
            mod = int(mod)
            if mod < 1:
                raise ValueError("modulus must be positive")
            norm.append((mod, frozenset(int(x) % mod for x in res)))
        if not any(res for _, res in norm):
            raise ValueError("the pattern is empty")
        object.__setattr__(self, "classes", tuple(norm))

    @property
    def dim(self) -> int:
        return len(self.classes)

    def allowed(self, i: int, r: int) -> bool:
        mod, res = self.classes[i]
        return r % mod in res

    def basis_at(self, r: int) -> list[int]:
        return [i for i in range(self.dim) if self.allowed(i, r)]

    def shifted(self, i: int, by: int = 1) -> "SubmoduleSpecW":
        cls = list(self.classes)
        mod, res = cls[i]
        cls[i] = (mod, frozenset((x + by) % mod for x in res))
        return SubmoduleSpecW(tuple(cls))

    @classmethod
    def full(cls, dim: int) -> "SubmoduleSpecW":
        return cls(tuple((1, (0,)) for _ in range(dim)))

    @classmethod
    def parse(cls, text: str) -> "SubmoduleSpecW":
        """``"2:0; 2:1; 2:0"``: one ``modulus:residue,residue`` entry per top basis vector."""
        entries = []
        for part in text.split(";"):
            part = part.strip()
            if not part:
                continue
            mod, _, res = part.partition(":")
            residues = [int(x) for x in res.split(",") if x.strip()] if res.strip() else []
            entries.append((int(mod), residues))
        return cls(tuple(entries))

    def __str__(self) -> str:
        return "; ".join(f"{m}:{','.join(str(x) for x in sorted(r))}" for m, r in self.classes)


@dataclass
class Z2GradedModule:
    """A built Z-graded module tensored with the loop ring, cells (s, r) for |r| <= loop_range."""

    base: GradedModule
    loop_range: int

    @property
    def basis(self) -> GradingBasis:
        return self.base.basis

    @property
    def v0(self) -> L0Module:
        return self.base.v0

    def cell_dim(self, s: int, r: int) -> int:
        if abs(r) > self.loop_range:
            raise IndexError(f"loop index {r} outside the window")
        return self.base.dims[s]

    def target(self, key, s: int, r: int) -> tuple[int, int]:
        return s - grade_of(key, self.basis), r + loop_index(key, self.basis)

    def act(self, key, s: int, r: int, vec: dict) -> tuple[tuple[int, int], dict]:
        """Action on v (x) x^r; returns the target cell and the coordinate vector."""
        return self.target(key, s, r), self.base.act(key, s, vec)

    def dims_table(self) -> dict:
        return {(s, r): self.cell_dim(s, r) for s in range(self.base.depth + 1)
                for r in range(-self.loop_range, self.loop_range + 1)}


def extend_z2(base: GradedModule, loop_range: int) -> Z2GradedModule:
    if loop_range < 0:
        raise ValueError("loop range must be >= 0")
    return Z2GradedModule(base, loop_range)


def shift_audit(module: Z2GradedModule) -> list:
    """Every stored generator moves cells by (-grade, m2-coordinate) and lands on the grade of its image."""
    b = module.basis
    bad = []
    gens = module.base.generators()
    for g, keys in gens.items():
        for key in keys:
            if isinstance(key, Central):
                continue
            j, k = b.coords(key.m)
            if j != g or b.vector(j, k) != key.m:
                bad.append(str(key))
            for s in range(module.base.depth + 1):
                ts, tr = module.target(key, s, 0)
                if (ts, tr) != (s - g, k):
                    bad.append((str(key), s))
    return bad


# -- W verification -------------------------------------------------------------------------


@dataclass
class WReport:
    invariant: bool
    irreducible_at_window: bool
    window: int
    loop_range: int
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.invariant and self.irreducible_at_window

    def to_json(self) -> dict:
        return {
            "invariant": self.invariant,
            "irreducibleAtWindow": self.irreducible_at_window,
            "window": self.window,
            "loopRange": self.loop_range,
            "failures": [str(f) for f in self.failures[:20]],
        }


def _degree0_keys(basis: GradingBasis, window: int) -> list:
    return [k for k in enumerate_graded(0, window, basis) if not isinstance(k, Central)]


def _restricted(v0: L0Module, spec: SubmoduleSpecW, key, r: int, shift: int):
    """Matrix of key from W_r to W_(r+shift); also the entries that leave W."""
    mat = v0.act(key)
    src = spec.basis_at(r)
    dst = spec.basis_at(r + shift)
    pos = {i: n for n, i in enumerate(dst)}
    out = [[None] * len(src) for _ in dst]
    leaks = []
    for c, i in enumerate(src):
        for row in range(len(mat)):
            x = mat[row][i]
            if not x:
                continue
            if row in pos:
                out[pos[row]][c] = x
            else:
                leaks.append((str(key), r, i, row))
    return out, leaks


def verify_w(spec: SubmoduleSpecW, module: Z2GradedModule | L0Module, basis: GradingBasis | None = None,
             window: int = 2, loop_range: int | None = None) -> WReport:
    """Invariance under windowed degree-0 keys, and irreducibility certified by path-operator spans."""
    if isinstance(module, Z2GradedModule):
        v0, basis = module.v0, module.basis
        loop_range = module.loop_range if loop_range is None else loop_range
    else:
        v0 = module
        if basis is None:
            raise ValueError("a grading basis is required")
        loop_range = 4 if loop_range is None else loop_range
    if spec.dim != v0.dim:
        raise ValueError(f"pattern has {spec.dim} entries, top layer has dimension {v0.dim}")
    keys = _degree0_keys(basis, window)
    rows = range(-loop_range, loop_range + 1)
    failures = []
    gens: dict = {}  # (key, r) -> restricted matrix
    for key in keys:
        k = loop_index(key, basis)
        for r in rows:
            if not spec.basis_at(r):
                continue
            mat, leaks = _restricted(v0, spec, key, r, k)
            failures += leaks
            if abs(r + k) <= loop_range and spec.basis_at(r + k):
                gens[(key, r)] = (r + k, mat)
    invariant = not failures
    irreducible = invariant and _window_irreducible(spec, gens, rows)
    return WReport(invariant, irreducible, window, loop_range, failures)


def _flatten(mat) -> dict:
    return {(i, j): x for i, row in enumerate(mat) for j, x in enumerate(row) if x is not None and x}


def _dense(mat, zero):
    return [[zero if x is None else x for x in row] for row in mat]


def _window_irreducible(spec: SubmoduleSpecW, gens: dict, rows) -> bool:
    """Path operators from each nonzero cell fill End(W_r) and reach all of every other nonzero cell."""
    from .coeff import ONE, ZERO

    by_source: dict = {}
    for (key, r), (t, mat) in gens.items():
        by_source.setdefault(r, []).append((t, _dense(mat, ZERO)))
    live = [r for r in rows if spec.basis_at(r)]
    for r0 in live:
        d0 = len(spec.basis_at(r0))
        spans: dict = {r: EchelonBasis() for r in live}
        mats: dict = {r: [] for r in live}
        ident = [[ONE if i == j else ZERO for j in range(d0)] for i in range(d0)]
        spans[r0].add(_flatten(ident))
        mats[r0].append(ident)
        queue = [(r0, ident)]
        while queue:
            r, m = queue.pop()
            for t, g in by_source.get(r, ()):
                prod = mmul(g, m)
                if spans[t].add(_flatten(prod)):
                    mats[t].append(prod)
                    queue.append((t, prod))
        if spans[r0].count != d0 * d0:
            return False
        for t in live:
            dt = len(spec.basis_at(t))
            cols = [{i: m[i][c] for i in range(dt) if m[i][c]} for m in mats[t] for c in range(d0)]
            if rank(cols) != dt:
                return False
    return True


# -- dimension grids -------------------------------------------------------------------------


@dataclass
class Z2Grid:
    dims: dict  # (s, r) -> int, or None when the cell could not be computed at this truncation
    depth: int
    loop_range: int
    trunc: TruncationParams
    w_report: WReport

    @property
    def complete(self) -> bool:
        return all(v is not None for v in self.dims.values())

    def row(self, s: int) -> list:
        return [self.dims[(s, r)] for r in range(-self.loop_range, self.loop_range + 1)]

    def to_csv(self) -> str:
        head = ["s"] + [str(r) for r in range(-self.loop_range, self.loop_range + 1)]
        lines = [",".join(head)]
        for s in range(self.depth + 1):
            lines.append(",".join([str(s)] + ["" if d is None else str(d) for d in self.row(s)]))
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "loopRange": self.loop_range,
            "rows": {str(s): self.row(s) for s in range(self.depth + 1)},
            "complete": self.complete,
            "W": self.w_report.to_json(),
        }


def z2_engine(v0: L0Module, basis: GradingBasis, spec: SubmoduleSpecW, trunc: TruncationParams,
              loop_range: int, backend=None) -> HwEngine:
    """Engine whose top cells are the W_r; the internal loop range absorbs boundary effects."""

    def shift(key) -> int:
        return loop_index(key, basis)

    def top_dims(r: int) -> list:
        return spec.basis_at(r)

    def top_action(key, r: int, idx):
        if idx is None:
            return v0.act(key)[0][0]
        k = shift(key)
        try:
            mat, leaks = _restricted(v0, spec, key, r, k)
        except IndexError as exc:
            raise TruncationError(str(exc)) from exc
        if leaks:
            raise ValueError(f"W is not invariant: {leaks[0]}")
        return {row: mat[row][idx] for row in range(len(mat)) if mat[row][idx] is not None}

    return HwEngine(v0, basis, trunc, backend or ExactBackend(), shift=shift, top_dims=top_dims,
                    top_action=top_action, loop_range=loop_range)


def internal_loop_range(loop_range: int, trunc: TruncationParams) -> int:
    return loop_range + trunc.max_depth * (trunc.gen_window + trunc.probe_window)


def z2_dims(module: Z2GradedModule | L0Module, spec: SubmoduleSpecW, trunc: TruncationParams,
            basis: GradingBasis | None = None, loop_range: int | None = None, backend=None,
            w_window: int | None = None, require_irreducible: bool = True) -> Z2Grid:
    """Cell dimensions of the irreducible quotient with top W, for s <= max_depth and |r| <= loop_range.

    With ``require_irreducible=False`` only invariance of W is demanded (used by the collapse test).
    """
    if isinstance(module, Z2GradedModule):
        v0, basis = module.v0, module.basis
        loop_range = module.loop_range if loop_range is None else loop_range
    else:
        v0 = module
        if basis is None or loop_range is None:
            raise ValueError("basis and loop_range are required")
    w_window = trunc.gen_window if w_window is None else w_window
    report = verify_w(spec, v0, basis, w_window, loop_range)
    if not (report.ok if require_irreducible else report.invariant):
        raise ValueError(f"W failed verification: {report.to_json()}")

    def run(bk) -> HwEngine:
        eng = z2_engine(v0, basis, spec, trunc, internal_loop_range(loop_range, trunc), bk)
        eng.build(trunc.max_depth)
        return eng

    eng = with_prime_retry(run, backend or ExactBackend())
    dims = {}
    for s in range(trunc.max_depth + 1):
        for r in range(-loop_range, loop_range + 1):
            dims[(s, r)] = None if (s, r) in eng.missing or (s, r) not in eng.cells else eng.dim(s, r)
    grid = Z2Grid(dims, trunc.max_depth, loop_range, trunc, report)
    grid.engine = eng
    return grid


def collapse_holds(grid: Z2Grid, base_dims: Sequence[int]) -> bool:
    """With the full pattern every cell is at least the base dimension at its depth."""
    return all(d is not None and d >= base_dims[s] for (s, r), d in grid.dims.items() if s < len(base_dims))
