"""Sparse exact linear algebra over any field-like scalar type.

Vectors are dicts ``label -> scalar`` without zero entries.  The scalar type
only needs ``+ - * /`` and comparison with ``0``, so the same code runs on
:class:`~qtorus.coeff.FieldElement` and on ``flint.nmod`` residues.
Pivoting is deterministic: the first nonzero entry in the caller's label
order is used.
"""
from __future__ import annotations

from typing import Callable, Hashable, Iterable, Sequence

Vec = dict


def vec_add_scaled(target: dict, src: dict, c) -> None:
    """``target += c * src`` in place."""
    for k, v in src.items():
        w = target.get(k)
        if w is None:
            target[k] = c * v
        else:
            w = w + c * v
            if w == 0:
                del target[k]
            else:
                target[k] = w


def vec_scale(v: dict, c) -> dict:
    if c == 0:
        return {}
    return {k: c * x for k, x in v.items()}


def vec_clean(v: dict) -> dict:
    return {k: x for k, x in v.items() if not x == 0}


class EchelonBasis:
    """Incrementally maintained row-echelon basis of a growing set of vectors.

    Each stored row remembers which combination of inserted vectors produced
    it, so membership queries also return coordinates with respect to the
    independent inserted vectors (in insertion order).

    ``order`` maps a label to its sort position; the pivot of a row is its
    smallest label under that order.
    """

    def __init__(self, order: Callable[[Hashable], object] | None = None):
        self._order = order
        self.rows: dict[Hashable, tuple[dict, dict]] = {}  # pivot -> (row, combo)
        self.count = 0  # number of independent vectors inserted

    def __len__(self) -> int:
        return self.count

    def _pivot(self, v: dict):
        if self._order is None:
            return min(v, key=_default_key)
        return min(v, key=self._order)

    def reduce(self, v: dict) -> tuple[dict, dict]:
        """Return ``(remainder, combo)`` with ``v = remainder + sum(combo[i] * inserted_i)``."""
        rem = dict(v)
        combo: dict[int, object] = {}
        # repeated passes over current pivots present in rem
        key = self._order or _default_key
        while rem:
            # eliminating the smallest pivot first only introduces larger labels
            present = [p for p in rem if p in self.rows]
            if not present:
                break
            hit = min(present, key=key)
            row, rc = self.rows[hit]
            c = rem[hit] / row[hit]
            vec_add_scaled(rem, row, -c)
            vec_add_scaled(combo, rc, c)
        return rem, combo

    def add(self, v: dict) -> bool:
        """Insert ``v``; return True if it was independent of the stored span."""
        rem, combo = self.reduce(v)
        if not rem:
            return False
        idx = self.count
        self.count += 1
        # rem = v - sum(combo * inserted) ; record rem's combination
        rc = {k: -c for k, c in combo.items()}
        rc[idx] = _one_like(next(iter(rem.values())))
        p = self._pivot(rem)
        self.rows[p] = (rem, rc)
        return True

    def express(self, v: dict) -> dict | None:
        """Coordinates of ``v`` in the inserted independent vectors, or None if outside the span."""
        rem, combo = self.reduce(v)
        if rem:
            return None
        return combo


def _default_key(label):
    return (type(label).__name__, label)


def _one_like(x):
    return x / x


def rank(vectors: Iterable[dict], order=None) -> int:
    eb = EchelonBasis(order)
    for v in vectors:
        eb.add(v)
    return eb.count


def nullspace(rows: Sequence[dict], ncols: int, one, zero) -> list[list]:
    """Right kernel of the matrix whose rows are ``rows`` (dicts ``col -> value``, cols ``0..ncols-1``).

    Returns a basis in reduced form: one vector per free column, with that
    free entry equal to ``one``.  Columns are pivoted left to right.
    """
    pivots: dict[int, dict] = {}  # pivot col -> row normalized with 1 at pivot
    for r in rows:
        rem = {c: x for c, x in r.items() if not x == 0}
        for pc in sorted(pivots):
            if pc in rem:
                vec_add_scaled(rem, pivots[pc], -rem[pc])
        if not rem:
            continue
        pc = min(rem)
        inv = one / rem[pc]
        rem = {c: x * inv for c, x in rem.items()}
        # keep fully reduced form
        for oc, orow in pivots.items():
            if pc in orow:
                vec_add_scaled(orow, rem, -orow[pc])
        pivots[pc] = rem
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [zero] * ncols
        v[f] = one
        for pc, row in pivots.items():
            if f in row:
                v[pc] = -row[f]
        basis.append(v)
    return basis


def matrix_rank_dense(rows: Sequence[Sequence]) -> int:
    return rank({i: x for i, x in enumerate(r) if not x == 0} for r in rows)
