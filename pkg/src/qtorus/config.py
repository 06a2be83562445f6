"""Run configuration files.

Flat ``key = value`` lines; ``#`` starts a comment; repeating a key builds a
list.  Exact values use the field serialization, e.g. ``(1 - u^2)/(1 + u^4)``.

Keys::

    basis = (1,0);(0,1)
    module = character | eval | trivial
    # character from exp-polynomial data (one roots line per root)
    roots = 1
    coeffs0 = 1          # polynomial-in-i coefficients for parity 0, per root
    coeffs1 = 1          # same for parity 1
    t01 = 1/2            # optional override of psi(t0^1 t^0)
    # or a character from an explicit window
    psi = j, k, value
    psi_beta = value
    # evaluation module
    mu = 1
    dims = 2
    psia_roots = ...     # optional exp-polynomial psi on the abelian part
    psia_coeffs = ...
    psia = j, value      # or explicit window values
    psia_beta = value
    # truncation and runs
    window = 4
    probe = 4
    depth = 3
    direction = highest
    backend = exact
    seed = 0
    max_order = 4
    qwindow = 6
    w = 2:0
    loop = 3
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .algebra import GradingBasis
from .coeff import FieldElement, parse_field
from .hwmod import TruncationParams
from .l0mod import (
    Character,
    EvalModuleSpec,
    ExpPolyDataEven,
    ExpPolyDataOdd,
    L0Module,
    ParityError,
    PsiA,
    build_eval_module,
    character_module,
    psi_from_exppoly_even,
    psi_from_exppoly_odd,
    zero_character,
)
from .ztwo import SubmoduleSpecW

KNOWN_KEYS = {
    "basis", "module", "roots", "coeffs0", "coeffs1", "t01", "psi", "psi_beta", "mu", "dims",
    "psia_roots", "psia_coeffs", "psia", "psia_beta", "window", "probe", "depth", "direction",
    "backend", "seed", "max_order", "qwindow", "w", "loop", "module_window", "name",
}


class ConfigError(ValueError):
    pass


def parse_lines(text: str, source: str = "<config>") -> dict[str, list[tuple[int, str]]]:
    entries: dict[str, list[tuple[int, str]]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key = key.strip()
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        entries.setdefault(key, []).append((lineno, value.strip()))
    return entries


@dataclass
class RunConfig:
    basis: GradingBasis
    module: str
    data: object  # Character, EvalModuleSpec or None for the trivial module
    trunc: TruncationParams = field(default_factory=TruncationParams)
    direction: str = "highest"
    backend: str = "exact"
    seed: int = 0
    max_order: int = 4
    qwindow: int = 6
    w: SubmoduleSpecW | None = None
    loop: int = 3
    module_window: int | None = None
    name: str = "run"

    def l0_module(self) -> L0Module:
        win = self.module_window or max(self.trunc.gen_window, self.trunc.probe_window) * 2 + 4
        if isinstance(self.data, Character):
            return character_module(self.data, win)
        if isinstance(self.data, EvalModuleSpec):
            return build_eval_module(self.data, self.basis, win)
        if self.basis.m21_even:
            return character_module(zero_character(self.basis), win)
        return build_eval_module(EvalModuleSpec((1,), (1,)), self.basis, win)

    def with_trunc(self, window=None, probe=None, depth=None) -> "RunConfig":
        t = self.trunc
        self.trunc = TruncationParams(window or t.gen_window, probe or t.probe_window,
                                      t.max_depth if depth is None else depth)
        return self


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, str(path))


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    e = parse_lines(text, source)

    def where(key: str) -> str:
        return f"{source}:{e[key][0][0]}" if key in e else source

    def one(key: str, default=None):
        if key not in e:
            return default
        if len(e[key]) > 1:
            raise ConfigError(f"{source}:{e[key][1][0]}: key {key!r} given more than once")
        return e[key][0][1]

    def many(key: str) -> list[tuple[int, str]]:
        return e.get(key, [])

    def fe(text: str, lineno: int, key: str) -> FieldElement:
        try:
            return parse_field(text)
        except (ValueError, SyntaxError, ZeroDivisionError) as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from exc

    def fe_list(text: str, lineno: int, key: str) -> tuple:
        return tuple(fe(x.strip(), lineno, key) for x in text.split(",") if x.strip())

    def integer(key: str, default: int) -> int:
        v = one(key)
        if v is None:
            return default
        try:
            return int(v)
        except ValueError as exc:
            raise ConfigError(f"{where(key)}: {key!r} must be an integer") from exc

    btext = one("basis")
    if btext is None:
        raise ConfigError(f"{source}: missing key 'basis'")
    try:
        basis = GradingBasis.parse(btext)
    except ValueError as exc:
        raise ConfigError(f"{where('basis')}: {exc}") from exc

    kind = one("module", "trivial")
    try:
        if kind == "character":
            data = _character(basis, e, fe, fe_list, one, where)
        elif kind == "eval":
            data = _eval_spec(basis, e, fe, fe_list, one, where)
        elif kind == "trivial":
            data = None
        else:
            raise ConfigError(f"{where('module')}: module must be character, eval or trivial")
    except ParityError as exc:
        raise ConfigError(f"{where('basis')}: parity mismatch: {exc}") from exc

    window = integer("window", 4)
    probe, depth = integer("probe", window), integer("depth", 3)
    try:
        trunc = TruncationParams(window, probe, depth)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    direction = one("direction", "highest")
    if direction not in ("highest", "lowest"):
        raise ConfigError(f"{where('direction')}: direction must be highest or lowest")
    backend = one("backend", "exact")
    if backend not in ("exact", "prime", "both"):
        raise ConfigError(f"{where('backend')}: backend must be exact, prime or both")
    wtext = one("w")
    try:
        w = SubmoduleSpecW.parse(wtext) if wtext else None
    except ValueError as exc:
        raise ConfigError(f"{where('w')}: {exc}") from exc
    mw = one("module_window")
    return RunConfig(basis, kind, data, trunc, direction, backend, integer("seed", 0), integer("max_order", 4),
                     integer("qwindow", 6), w, integer("loop", 3), int(mw) if mw else None, one("name", "run"))


def _character(basis, e, fe, fe_list, one, where) -> Character:
    if not basis.m21_even:
        raise ParityError("a character needs m21 even")
    if "psi" in e:
        vals = {}
        for lineno, text in e["psi"]:
            parts = [x.strip() for x in text.split(",")]
            if len(parts) != 3:
                raise ConfigError(f"{where('psi')}: psi lines are 'j, k, value' (line {lineno})")
            vals[(int(parts[0]), int(parts[1]))] = fe(parts[2], lineno, "psi")
        beta = one("psi_beta")
        if beta is None:
            raise ConfigError(f"{where('psi')}: psi_beta is required with explicit psi values")
        try:
            return Character.from_window(basis, vals, parse_field(beta))
        except ValueError as exc:
            raise ConfigError(f"{where('psi')}: {exc}") from exc
    roots = [fe(t, n, "roots") for n, t in e.get("roots", [])]
    if not roots:
        return zero_character(basis)
    co = {}
    for j in (0, 1):
        lists = [fe_list(t, n, f"coeffs{j}") for n, t in e.get(f"coeffs{j}", [])]
        if lists and len(lists) != len(roots):
            raise ConfigError(f"{where(f'coeffs{j}')}: need one coeffs{j} line per root")
        co[j] = tuple(lists)
    try:
        psi = psi_from_exppoly_even(ExpPolyDataEven(tuple(roots), co), basis)
    except ValueError as exc:
        raise ConfigError(f"{where('roots')}: {exc}") from exc
    t01 = one("t01")
    if t01 is not None:
        v = parse_field(t01)
        base = psi
        psi = Character(basis, lambda j, k: v if (j, k) == (1, 0) else base.value(j, k), base.beta,
                        name="override")
    return psi


def _eval_spec(basis, e, fe, fe_list, one, where) -> EvalModuleSpec:
    if basis.m21_even:
        raise ParityError("an evaluation module needs m21 odd")
    mu = [fe(t, n, "mu") for n, t in e.get("mu", [])]
    try:
        dims = [int(t) for _, t in e.get("dims", [])]
    except ValueError as exc:
        raise ConfigError(f"{where('dims')}: dims must be integers") from exc
    if "psia" in e:
        vals = {}
        for lineno, text in e["psia"]:
            parts = [x.strip() for x in text.split(",")]
            if len(parts) != 2:
                raise ConfigError(f"{where('psia')}: psia lines are 'j, value' (line {lineno})")
            vals[int(parts[0])] = fe(parts[1], lineno, "psia")
        psi_a = PsiA.from_window(vals, parse_field(one("psia_beta", "0")))
    elif "psia_roots" in e:
        roots = tuple(fe(t, n, "psia_roots") for n, t in e["psia_roots"])
        lists = tuple(fe_list(t, n, "psia_coeffs") for n, t in e.get("psia_coeffs", []))
        try:
            psi_a = psi_from_exppoly_odd(ExpPolyDataOdd(roots, lists), basis)
        except ValueError as exc:
            raise ConfigError(f"{where('psia_roots')}: {exc}") from exc
    else:
        psi_a = PsiA.zero()
    try:
        return EvalModuleSpec(tuple(mu), tuple(dims), psi_a)
    except ValueError as exc:
        raise ConfigError(f"{where('mu')}: {exc}") from exc
