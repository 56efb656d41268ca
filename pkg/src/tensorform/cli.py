"""Command-line driver: ``tensorform {compile,inspect,bench,demo}``.

Exit codes: 0 success, 1 user error (parse, I/O, bad input), 2 verification
failure (schedule, symmetry, solver residual), 3 internal error.
"""
import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .artifact import CompiledForm, compile_cached, load, save
from .errors import (
    ArtifactError,
    CGNotConverged,
    FormError,
    MeshError,
    ScheduleVerificationFailed,
    SymmetryAssertionFailed,
    TensorFormError,
)
from .forms.formfile import load_form_file
from .forms.lowering import lower

logger = logging.getLogger("tensorform")

USER_ERRORS = (FormError, MeshError, ArtifactError, OSError, ValueError)
VERIFICATION_ERRORS = (ScheduleVerificationFailed, SymmetryAssertionFailed, CGNotConverged)


class VerificationFailure(TensorFormError):
    pass


def _load_compiled(path, optimize=False, cache_dir=None, use_cache=True):
    """Artifacts (.json) load directly; form files are compiled, one artifact per defined form."""
    path = Path(path)
    if path.suffix == ".json":
        return {"a": load(path)}
    a, L = load_form_file(path)
    out = {}
    for name, form in (("a", a), ("L", L)):
        if form is not None:
            out[name], _ = compile_cached(lower(form), optimize=optimize, directory=cache_dir, use_cache=use_cache)
    return out


# ---------------------------------------------------------------------------
# compile


def cmd_compile(args):
    a, L = load_form_file(args.form)
    stem = Path(args.form).stem
    outdir = Path(args.output) if args.output else Path.cwd()
    for name, form in (("a", a), ("L", L)):
        if form is None:
            continue
        compiled, hit = compile_cached(
            lower(form), optimize=args.optimize, directory=args.cache_dir, use_cache=not args.no_cache
        )
        status = "cache hit" if hit else ("compiled" if args.no_cache else "cache miss, compiled")
        print(f"{name}: signature {compiled.signature[:16]} ({status})")
        if args.emit == "bundle":
            target = outdir / f"{stem}.{name}.json"
            save(compiled, target)
            print(f"{name}: wrote {target}")
        elif args.emit == "latex":
            target = outdir / f"{stem}.{name}.tex"
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(compiled.latex(), encoding="utf-8")
            print(f"{name}: wrote {target}")
        elif args.emit == "schedule-dump":
            if compiled.schedule is None:
                raise ArtifactError("no schedule in artifact (compile with --optimize)")
            print(compiled.schedule.dump(), end="")
        if compiled.schedule is not None:
            cert = compiled.schedule.certificate
            print(
                f"{name}: schedule {cert['map_count']} multiply-add pairs "
                f"({cert['discounted_map_count']} discounting 0/1 multiplies), direct {cert['direct_count']}"
            )
    return 0


# ---------------------------------------------------------------------------
# inspect


def describe(compiled, name="a"):
    ref = compiled.reference
    lines = [
        f"form {name}: arity {compiled.arity}, signature {compiled.signature}",
        "  arguments: " + ", ".join(str(e) for e in compiled.form.arguments),
    ]
    if compiled.form.coefficients:
        lines.append("  coefficients: " + ", ".join(str(e) for e in compiled.form.coefficients))
    lines.append(f"  |I_K| = {int(np.prod(ref.primary_dims))} (primary dims {ref.primary_dims})")
    for k, t in enumerate(ref.terms):
        lines.append(
            f"  term {k}: |i alpha| = {t.rank}, |alpha| = {len(t.secondary)}, "
            f"secondary dims {t.secondary_dims}, |A| = {t.A0.size}, exact = {t.exact is not None}"
        )
        lines.append(f"    {t.geometry.formula()}")
    counts = compiled.operation_counts()
    lines.append("  multiply-add model: " + ", ".join(f"{k} {v}" for k, v in counts.items()))
    if compiled.schedule is not None:
        cert = compiled.schedule.certificate
        sym = compiled.symmetry
        lines.append(
            f"  schedule: {cert['map_count']} pairs ({cert['discounted_map_count']} discounted), "
            f"tree weight {cert['tree_weight']}, root length {cert['root_length']}, "
            f"reduced direct {cert['direct_count']} (full {cert['full_direct_count']}), "
            f"symmetric output {sym[0]}, symmetric geometry {sym[1]}"
        )
        if compiled.verification:
            lines.append(f"  verified over {compiled.verification['trials']} random cells, "
                         f"max deviation {compiled.verification['max_deviation']:.2e}")
    return "\n".join(lines)


def cmd_inspect(args):
    forms = _load_compiled(args.artifact, args.optimize, args.cache_dir, not args.no_cache)
    print("\n".join(describe(c, n) for n, c in forms.items()))
    return 0


# ---------------------------------------------------------------------------
# bench


def bench(compiled, n=None, modes=("tensor", "quadrature", "schedule"), repeat=3, seed=0):
    """Counted multiply-add models and measured throughput of element-tensor evaluation."""
    from .mesh import unit_cube, unit_square
    from .tensorrep import cell_geometry

    d = 2 if compiled.form.cell == "triangle" else 3
    n = n or (32 if d == 2 else 8)
    mesh = unit_square(n) if d == 2 else unit_cube(n)
    rng = np.random.default_rng(seed)
    X = mesh.cell_vertices()
    coefs = [rng.standard_normal((mesh.num_cells, e.space_dim)) for e in compiled.form.coefficients]
    counts = compiled.operation_counts()
    model = {
        "tensor": counts["direct"],
        "matvec": counts["matvec"],
        "quadrature": counts["quadrature"],
        "quadrature_tensor": counts["quadrature_tensor"],
    }
    if "schedule" in counts:
        model["schedule"] = counts["schedule"]
        model["schedule_discounted"] = counts["schedule_discounted"]
    reference = compiled.element_tensors(X, coefs, mode="tensor")
    report = {"cells": mesh.num_cells, "model": model, "modes": {}}
    cell_geometry(X)  # warm caches
    for mode in modes:
        if mode == "schedule" and compiled.schedule is None:
            raise ArtifactError("mode 'schedule' unavailable: no schedule in artifact (compile with --optimize)")
        best = np.inf
        for _ in range(repeat):
            t0 = time.perf_counter()
            AK = compiled.element_tensors(X, coefs, mode=mode)
            best = min(best, time.perf_counter() - t0)
        scale = max(1.0, float(np.abs(reference).max()))
        report["modes"][mode] = {
            "cells_per_second": mesh.num_cells / best if best > 0 else float("inf"),
            "residual": float(np.abs(AK - reference).max()) / scale,
        }
    return report


def cmd_bench(args):
    forms = _load_compiled(args.artifact, optimize=True, cache_dir=args.cache_dir, use_cache=not args.no_cache)
    compiled = forms.get(args.form) or next(iter(forms.values()))
    if compiled.arity != 2:
        raise ValueError("bench needs a bilinear form")
    modes = tuple(args.modes.split(","))
    report = bench(compiled, args.resolution, modes)
    if args.json:
        print(json.dumps(report, indent=1, sort_keys=True))
    else:
        print(f"cells: {report['cells']}")
        print("multiply-add model per cell:")
        for k, v in report["model"].items():
            print(f"  {k:20s} {v}")
        print("measured element-tensor evaluation:")
        for mode, r in report["modes"].items():
            print(f"  {mode:12s} {r['cells_per_second']:12.0f} cells/s   residual vs tensor {r['residual']:.2e}")
    worst = max(r["residual"] for r in report["modes"].values())
    if worst > 1e-10:
        raise VerificationFailure(f"mode disagreement {worst:.3e} exceeds 1e-10")
    return 0


# ---------------------------------------------------------------------------
# demo


def cmd_demo(args):
    from .demos import poisson_study, solve_elasticity

    out = Path(args.output) if args.output else None
    if args.problem in ("poisson2d", "poisson3d"):
        dim = 2 if args.problem == "poisson2d" else 3
        base = args.resolution or (8 if dim == 2 else 2)
        sizes = tuple(base * 2**k for k in range(args.refinements + 1))
        results, rates = poisson_study(dim, args.degree, sizes, rtol=args.rtol)
        for r in results:
            print(f"n = {r.n:4d}  dofs = {r.dofs:7d}  L2 error = {r.l2_error:.4e}  CG iterations = {r.iterations}")
        print("observed L2 rates: " + ", ".join(f"{x:.3f}" for x in rates))
        solution = results[-1].solution
    elif args.problem == "elasticity3d":
        res = solve_elasticity(args.resolution or 2, args.degree, rtol=args.rtol)
        print(f"cells = {res['cells']}  dofs = {res['dofs']}")
        print(f"||A - A^T||_max = {res['asymmetry']:.3e}")
        print(f"max ||A t|| over rigid translations t = {res['translation_residual']:.3e}")
        print(f"CG iterations = {res['iterations']}  max |u| = {res['max_displacement']:.6f}")
        if res["asymmetry"] > 1e-10 or res["translation_residual"] > 1e-10:
            raise VerificationFailure("elasticity operator failed its symmetry/nullspace checks")
        solution = res["solution"]
    else:
        raise ValueError(f"unknown demo {args.problem!r}")
    if out:
        np.savetxt(out, solution, fmt="%.17g")
        print(f"wrote {out}")
    return 0


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="tensorform", description="Compile, inspect, benchmark and run variational forms.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def cache_flags(sp):
        sp.add_argument("--cache-dir", help="artifact cache (default: $TENSORFORM_CACHE_DIR or ~/.cache/tensorform)")
        sp.add_argument("--no-cache", action="store_true", help="neither read nor write the cache")

    c = sub.add_parser("compile", help="compile a form file to an artifact bundle")
    c.add_argument("form")
    c.add_argument("--optimize", action="store_true", help="build and verify an evaluation schedule")
    c.add_argument("--emit", choices=("bundle", "latex", "schedule-dump"), default="bundle")
    c.add_argument("-o", "--output", help="output directory (default: current directory)")
    cache_flags(c)
    c.set_defaults(func=cmd_compile)

    i = sub.add_parser("inspect", help="describe an artifact or form file")
    i.add_argument("artifact")
    i.add_argument("--optimize", action="store_true")
    cache_flags(i)
    i.set_defaults(func=cmd_inspect)

    b = sub.add_parser("bench", help="operation counts and throughput of every evaluation mode")
    b.add_argument("artifact")
    b.add_argument("--form", default="a")
    b.add_argument("--resolution", type=int)
    b.add_argument("--modes", default="tensor,quadrature,schedule")
    b.add_argument("--json", action="store_true")
    cache_flags(b)
    b.set_defaults(func=cmd_bench)

    d = sub.add_parser("demo", help="assemble and solve a model problem")
    d.add_argument("problem", choices=("poisson2d", "poisson3d", "elasticity3d"))
    d.add_argument("--degree", type=int, default=1)
    d.add_argument("--resolution", type=int)
    d.add_argument("--refinements", type=int, default=3)
    d.add_argument("--rtol", type=float, default=1e-10)
    d.add_argument("-o", "--output", help="write the final solution vector here")
    d.set_defaults(func=cmd_demo)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except VERIFICATION_ERRORS + (VerificationFailure,) as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        if isinstance(exc, CGNotConverged) and exc.residual_history:
            tail = ", ".join(f"{r:.3e}" for r in exc.residual_history[-5:])
            print(f"residual history (last 5): {tail}", file=sys.stderr)
        return 2
    except USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - last-resort boundary for the exit-code contract
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        if args.verbose:
            raise
        return 3


if __name__ == "__main__":
    sys.exit(main())
