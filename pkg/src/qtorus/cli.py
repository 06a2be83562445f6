"""Command line interface: ``qtorus <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from .algebra import (
    AlgebraElement,
    GradingBasis,
    bracket,
    jacobi_check,
    parse_element,
)
from .config import ConfigError, RunConfig, load_config
from .hwmod import (
    DepthError,
    TruncationError,
    TruncationParams,
    build_hw_module,
    commutation_audit,
    faithfulness_audit,
    growth_check,
    integrability_probe,
    make_backend,
    stability_scan,
    top_annihilated,
)
from .isomap import abelian_commutes_check, heisenberg_check, tau_slice_check, verify_iso_aff, verify_iso_tau
from .l0mod import Character, EvalModuleSpec, ParityError
from .quasifin import verdict
from .ztwo import SubmoduleSpecW, z2_dims

SCHEMA_VERSION = 1


def emit_json(report: dict, out: str | None) -> None:
    report = {"schemaVersion": SCHEMA_VERSION, **report}
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    emit_text(text, out)


def emit_text(text: str, out: str | None) -> None:
    """Write to ``out``, or to stdout when it is absent or ``-``."""
    if out and out != "-":
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _backends(name: str, seed: int) -> list:
    if name == "both":
        return [make_backend("exact", seed), make_backend("prime", seed)]
    return [make_backend(name, seed)]


def _config(args) -> RunConfig:
    cfg = load_config(args.config)
    cfg.with_trunc(getattr(args, "window", None), getattr(args, "probe", None), getattr(args, "depth", None))
    if getattr(args, "backend", None):
        cfg.backend = args.backend
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


# -- subcommands ----------------------------------------------------------------------------


def cmd_bracket(args) -> int:
    x, y = parse_element(args.x), parse_element(args.y)
    print(bracket(x, y))
    return 0


def cmd_verify(args) -> int:
    if args.what == "jacobi":
        rep = jacobi_check(args.box, args.random, args.random_box, args.seed or 0)
        emit_json({"command": "verify jacobi", **rep.to_json()}, args.out)
        return 0 if rep.ok else 1
    if args.what == "iso-tau":
        rep = verify_iso_tau(args.box)
        sl = tau_slice_check(args.box)
        ok = rep.passed and sl.passed
        emit_json({"command": "verify iso-tau", **rep.to_json(), "sliceChecks": sl.checked,
                   "sliceFailures": [str(f) for f in sl.failures], "pass": ok}, args.out)
        return 0 if ok else 1
    basis = GradingBasis.parse(args.basis)
    if args.what == "iso-aff":
        if basis.m21_even:
            raise ParityError("iso-aff needs a basis with m21 odd")
        rep = verify_iso_aff(basis, args.box)
        ab = abelian_commutes_check(basis, args.box)
        ok = rep.passed and not ab
        emit_json({"command": "verify iso-aff", "basis": str(basis), **rep.to_json(),
                   "abelianFailures": [str(t) for t in ab[:20]], "pass": ok}, args.out)
        return 0 if ok else 1
    if args.what == "heisenberg":
        bad = heisenberg_check(basis, args.box)
        emit_json({"command": "verify heisenberg", "basis": str(basis), "failures": [str(t) for t in bad[:20]],
                   "pass": not bad}, args.out)
        return 0 if not bad else 1
    raise ValueError(f"unknown check {args.what}")


def _build(cfg: RunConfig, backend):
    return build_hw_module(cfg.l0_module(), cfg.basis, cfg.trunc, cfg.direction, backend)


def cmd_build_hw(args) -> int:
    cfg = _config(args)
    results = {}
    mods = {}
    for bk in _backends(cfg.backend, cfg.seed):
        mods[bk.name] = _build(cfg, bk)
        results[bk.name] = mods[bk.name].dims
    agree = len({tuple(d) for d in results.values()}) == 1
    main = mods["exact"] if "exact" in mods else next(iter(mods.values()))
    audits = []
    audits += [f"commutation {f}" for f in commutation_audit(main, window=args.audit_window, limit=args.audit_limit)]
    audits += [f"faithfulness {f}" for f in faithfulness_audit(main)]
    if not top_annihilated(main):
        audits.append("top layer not annihilated by the probes")
    t = cfg.trunc
    bigger = TruncationParams(t.gen_window + 2, t.probe_window + 2, t.max_depth)
    # the widened rebuild is a diagnostic; it always runs on the cheap backend
    scan_bk = make_backend("prime", cfg.seed)
    try:
        stable = build_hw_module(cfg.l0_module(), cfg.basis, bigger, cfg.direction, scan_bk).dims == main.dims
    except TruncationError:
        stable = False
    report = {
        "command": "build-hw",
        "name": cfg.name,
        "basis": str(cfg.basis),
        "direction": cfg.direction,
        "window": t.gen_window,
        "probe": t.probe_window,
        "depth": t.max_depth,
        "dims": main.dims,
        "dimsByBackend": results,
        "backendAgreement": agree,
        "stable": stable,
        "auditFailures": audits,
    }
    if args.json:
        emit_json(report, args.json)
    lines = ["s,dim"] + [f"{s},{d}" for s, d in enumerate(main.dims)]
    emit_text("\n".join(lines) + "\n", args.csv)
    return 0 if agree and not audits else 1


def cmd_dims(args) -> int:
    cfg = _config(args)
    windows = [int(x) for x in args.windows.split(",")]
    scans = {}
    for bk in _backends(cfg.backend, cfg.seed):
        scans[bk.name] = stability_scan(cfg.l0_module(), cfg.basis, [(k, k) for k in windows], cfg.trunc.max_depth,
                                        bk, cfg.direction)
    main = scans.get("exact") or next(iter(scans.values()))
    agree = len({tuple(tuple(r[2] or ()) for r in s.rows) for s in scans.values()}) == 1
    lines = ["K," + ",".join(f"s{s}" for s in range(cfg.trunc.max_depth + 1))]
    for k, kp, dims, err in main.rows:
        lines.append(f"{k}," + (",".join(str(d) for d in dims) if dims else "truncated"))
    emit_text("\n".join(lines) + "\n", args.csv)
    if args.json:
        emit_json({"command": "dims", **main.to_json(), "backendAgreement": agree}, args.json)
    return 0 if main.stable and agree else 1


def cmd_quasifinite(args) -> int:
    cfg = _config(args)
    if cfg.data is None:
        raise ConfigError("quasifinite needs a character or an evaluation module")
    v = verdict(cfg.data, cfg.basis, args.max_order or cfg.max_order, args.qwindow or cfg.qwindow, cfg.direction)
    emit_json({"command": "quasifinite", **v.to_json()}, args.out)
    return 0


def cmd_z2_dims(args) -> int:
    cfg = _config(args)
    if cfg.w is None and not args.w:
        raise ConfigError("z2-dims needs a W pattern (key 'w' or --w)")
    spec = SubmoduleSpecW.parse(args.w) if args.w else cfg.w
    loop = args.loop if args.loop is not None else cfg.loop
    grids = {}
    for bk in _backends(cfg.backend, cfg.seed):
        grids[bk.name] = z2_dims(cfg.l0_module(), spec, cfg.trunc, cfg.basis, loop, bk)
    main = grids.get("exact") or next(iter(grids.values()))
    agree = len({tuple(sorted(g.dims.items())) for g in grids.values()}) == 1
    emit_text(main.to_csv(), args.csv)
    if args.json:
        emit_json({"command": "z2-dims", **main.to_json(), "backendAgreement": agree}, args.json)
    return 0 if main.complete and agree else 1


def cmd_probe(args) -> int:
    cfg = _config(args)
    bk = _backends(cfg.backend, cfg.seed)[0]
    mod = _build(cfg, bk)
    if args.kind == "growth":
        rep = growth_check(mod)
        emit_json({"command": "probe growth", "dims": rep.dims, "holds": rep.holds,
                   "witnessRanks": {str(k): v for k, v in rep.witness_ranks.items()}}, args.out)
        return 0 if rep.holds else 1
    m = tuple(int(x) for x in args.m.split(","))
    out = {}
    for sign in (1, -1):
        k = integrability_probe(mod, m, sign, args.v_index, args.max_power)
        out["plus" if sign > 0 else "minus"] = k if k is not None else f"none up to {args.max_power}"
    emit_json({"command": "probe integrability", "m": list(m), "nilpotencyIndex": out}, args.out)
    return 0


# -- parser -------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qtorus", description="Exact computations with the rank-3 quantum torus Lie algebra.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True)
        sp.add_argument("--backend", choices=["exact", "prime", "both"])
        sp.add_argument("--seed", type=int)

    b = sub.add_parser("bracket", help="bracket of two L elements")
    b.add_argument("x")
    b.add_argument("y")
    b.set_defaults(func=cmd_bracket)

    v = sub.add_parser("verify", help="structural checks")
    v.add_argument("what", choices=["jacobi", "iso-tau", "iso-aff", "heisenberg"])
    v.add_argument("--box", type=int, default=None)
    v.add_argument("--basis", default="(0,1);(1,0)")
    v.add_argument("--random", type=int, default=200)
    v.add_argument("--random-box", type=int, default=5)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    h = sub.add_parser("build-hw", help="build a highest weight module")
    common(h)
    h.add_argument("--depth", type=int)
    h.add_argument("--window", type=int)
    h.add_argument("--probe", type=int)
    h.add_argument("--json")
    h.add_argument("--csv")
    h.add_argument("--audit-window", type=int, default=1)
    h.add_argument("--audit-limit", type=int, default=2000)
    h.set_defaults(func=cmd_build_hw)

    d = sub.add_parser("dims", help="dimension table across generator windows")
    common(d)
    d.add_argument("--depth", type=int)
    d.add_argument("--windows", default="4,6,8")
    d.add_argument("--json")
    d.add_argument("--csv")
    d.set_defaults(func=cmd_dims)

    q = sub.add_parser("quasifinite", help="quasifiniteness verdict")
    common(q)
    q.add_argument("--max-order", type=int)
    q.add_argument("--window", dest="qwindow", type=int)
    q.add_argument("--out")
    q.set_defaults(func=cmd_quasifinite)

    z = sub.add_parser("z2-dims", help="Z^2-graded dimension grid")
    common(z)
    z.add_argument("--depth", type=int)
    z.add_argument("--loop", type=int)
    z.add_argument("--window", type=int)
    z.add_argument("--probe", type=int)
    z.add_argument("--w")
    z.add_argument("--json")
    z.add_argument("--csv")
    z.set_defaults(func=cmd_z2_dims)

    pr = sub.add_parser("probe", help="growth and integrability probes")
    common(pr)
    pr.add_argument("kind", choices=["growth", "integrability"])
    pr.add_argument("--depth", type=int)
    pr.add_argument("--window", type=int)
    pr.add_argument("--probe", type=int)
    pr.add_argument("--m", default="-1,0")
    pr.add_argument("--v-index", type=int, default=0)
    pr.add_argument("--max-power", type=int, default=3)
    pr.add_argument("--out")
    pr.set_defaults(func=cmd_probe)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "verify" and args.box is None:
        args.box = 2 if args.what == "jacobi" else 3
    try:
        return args.func(args)
    except (ConfigError, ParityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TruncationError, DepthError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
