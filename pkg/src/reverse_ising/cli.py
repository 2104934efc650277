"""Command-line interface.

Subcommands: ``thresholds``, ``solve``, ``verify``, ``stats``, ``compose``
and ``scan-conjecture``.  Every run logs the tool version, the resolved
options, the seed and the wall time to stderr.  Floats in CSV and text
output use 9 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time

import numpy as np

from . import __version__
from .compose import CompositionError, compose_solution, load_solution
from .constraints import build_local
from .feasibility import RhoCache, min_infeasible_prefix, rho_profile
from .functions import AuxiliaryFunction, ThresholdFunction
from .lp import LPOptions
from .oracle import verify_hamiltonian
from .search import SearchOptions, SearchOutcome, descent, greedy, strong_pool
from .spincore import build_circuit
from .symmetry import Group
from .thresholds import (
    ThresholdLibrary,
    certify_library,
    enumerate_thresholds,
    sample_thresholds,
    scan_nonredundant,
)

logger = logging.getLogger("reverse_ising")

RHO_PROFILE_SCHEMA = "columns: run,radius,rho_radius,rho_full,ratio (ratio = rho_radius / rho_full)"
MIN_CONSTRAINTS_SCHEMA = "columns: run,rows_needed,rows_total,fraction (smallest infeasible prefix of a random row order)"


def fmt(x) -> str:
    return f"{float(x):.9g}"


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("RI_THREADS", "1")))
    except ValueError:
        return 1


def _lp_options(args) -> LPOptions:
    return LPOptions(tol=args.lp_tol, max_iter=args.lp_max_iter)


def _schedule(text: str) -> tuple:
    return tuple(r.strip() for r in text.split(",") if r.strip())


# subcommands ---------------------------------------------------------------


def cmd_thresholds(args) -> int:
    if args.exhaustive:
        lib = enumerate_thresholds(args.dim, allow_long=args.dim == 5)
    else:
        lib = sample_thresholds(args.dim, int(float(args.sample)), args.seed)
    if args.group:
        lib = lib.deduplicated(Group(args.group))
    if args.certify:
        circuit = build_circuit(args.circuit) if args.circuit else None
        certify_library(lib, args.certify, circuit)
    text = lib.to_text()
    if args.out:
        lib.write(args.out)
        logger.info("wrote %d entries to %s", len(lib), args.out)
    else:
        sys.stdout.write(text)
    return 0


def _load_libs(paths, dim: int):
    if not paths:
        return strong_pool(dim)
    return [ThresholdLibrary.read(p) for p in paths]


def cmd_solve(args) -> int:
    c = build_circuit(args.circuit)
    opts = SearchOptions(
        max_aux=args.budget_aux,
        max_secs=args.budget_secs,
        radius_schedule=_schedule(args.radius_schedule),
        seed=args.seed,
        threads=args.threads,
        lp=_lp_options(args),
        cache_size=args.cache_size,
    )
    libs = _load_libs(args.lib, c.n_spins)
    cache = RhoCache(args.cache_size)
    if args.algorithm == "greedy":
        out = greedy(c, libs, opts, cache=cache)
    else:
        out = descent(c, libs, opts, cache=cache)
    print(f"status={out.status} aux={len(out.g)} rho={fmt(out.rho_trace[-1])} time={fmt(out.wall_time)}")
    if args.trace:
        with open(args.trace, "w") as fh:
            json.dump(out.to_dict(), fh)
    if not out.solved:
        return 1
    try:
        rec = compose_solution(c, out.g, lp_opts=opts.lp, seed=args.seed)
    except CompositionError as exc:
        print(f"composition failed: {exc}", file=sys.stderr)
        return 1
    rec.meta.update({"algorithm": args.algorithm, "search": opts.to_dict(), "wall_time": out.wall_time})
    print(f"verified=1 lambda={fmt(rec.lam)} gap={fmt(rec.verification.gap)}")
    if args.out:
        rec.write(args.out)
        logger.info("wrote solution to %s", args.out)
    return 0


def cmd_verify(args) -> int:
    sol = load_solution(args.solution)
    res = verify_hamiltonian(sol["circuit"], sol["H"], sol["n_aux"])
    if res.passed:
        print(f"status=pass gap={fmt(res.gap)}")
        return 0
    sigma, state = res.witness
    print(f"status=fail gap={fmt(res.gap)} witness_sigma={sigma} witness_state={state}")
    return 1


def _aux_from_file(path, base: int) -> AuxiliaryFunction:
    with open(path) as fh:
        raw = json.load(fh)
    if "aux" in raw:
        return AuxiliaryFunction.from_dict(raw["aux"])
    if "g" in raw:
        return SearchOutcome.from_dict(raw).g
    raise ValueError(f"{path}: no auxiliary function found")


def cmd_compose(args) -> int:
    c = build_circuit(args.circuit)
    g = _aux_from_file(args.aux, c.n_spins)
    try:
        rec = compose_solution(c, g, lp_opts=_lp_options(args), lam_scale=args.lam_scale)
    except CompositionError as exc:
        print(f"composition failed: {exc}", file=sys.stderr)
        return 1
    print(f"verified=1 aux={rec.n_aux} lambda={fmt(rec.lam)} gap={fmt(rec.verification.gap)}")
    if args.out:
        rec.write(args.out)
    return 0


def random_aux(base: int, n_aux: int, rng) -> AuxiliaryFunction:
    """Components with Gaussian weights on every earlier spin and a Gaussian bias."""
    comps = [ThresholdFunction(rng.standard_normal(base + k), float(rng.standard_normal())) for k in range(n_aux)]
    return AuxiliaryFunction(base, comps)


def cmd_stats(args) -> int:
    c = build_circuit(args.circuit)
    rng = np.random.default_rng(args.seed)
    opts = _lp_options(args)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(out)
        if args.kind == "rho-profile":
            writer.writerow(["run", "radius", "rho_radius", "rho_full", "ratio"])
            cache = RhoCache(args.cache_size)
            for run in range(args.runs):
                prof = rho_profile(c, random_aux(c.n_spins, args.aux, rng), cache, opts)
                full = prof[-1]
                for i, r in enumerate(prof, start=1):
                    ratio = r / full if full > 0 else 1.0
                    writer.writerow([run, i, fmt(r), fmt(full), fmt(ratio)])
        else:
            g = random_aux(c.n_spins, args.aux, rng) if args.aux else None
            B = build_local(c, g, args.radius)
            writer.writerow(["run", "rows_needed", "rows_total", "fraction"])
            for run in range(args.runs):
                k = min_infeasible_prefix(B, rng.permutation(B.n_rows), opts)
                if k is None:
                    writer.writerow([run, "", B.n_rows, ""])
                else:
                    writer.writerow([run, k, B.n_rows, fmt(k / B.n_rows)])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_scan(args) -> int:
    report = scan_nonredundant(args.dmax, args.dmin)
    for d, found in report["dims"].items():
        print(f"d={d} orbits={len(found)}")
        for f in found:
            w = ",".join(fmt(x) for x in f["w"])
            print(f"  tt={f['tt']} w={w} b={fmt(f['b'])} orbit_size={f['orbit_size']} gap={fmt(f['gap'])}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(report, fh, indent=1)
    return 0


# parser --------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=_default_threads(), help="thread cap (default $RI_THREADS or 1)")
    p.add_argument("--lp-tol", type=float, default=LPOptions.tol)
    p.add_argument("--lp-max-iter", type=int, default=LPOptions.max_iter)
    p.add_argument("--cache-size", type=int, default=1 << 20)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reverse-ising", description="Reverse Ising problem toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("thresholds", help="enumerate or sample threshold functions")
    _add_common(p)
    p.add_argument("--dim", type=int, required=True)
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--exhaustive", action="store_true")
    mode.add_argument("--sample", help="number of random planes (accepts 1e6)")
    p.add_argument("--group", choices=[g.value for g in Group])
    p.add_argument("--certify", choices=["strong", "weak"])
    p.add_argument("--circuit", help="circuit for weak certification")
    p.add_argument("--out")
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("solve", help="search for auxiliaries and compose a verified Hamiltonian")
    _add_common(p)
    p.add_argument("--circuit", required=True, help="mul:NxM, and, or, xor, parity:N or table:<path>")
    p.add_argument("--algorithm", choices=["greedy", "descent"], default="descent")
    p.add_argument("--lib", nargs="*", help="threshold library files (default: AND/majority literal pool)")
    p.add_argument("--radius-schedule", default="full", help="e.g. 1,2,full")
    p.add_argument("--budget-aux", type=int, default=16)
    p.add_argument("--budget-secs", type=float)
    p.add_argument("--out", help="solution file (written only when verified)")
    p.add_argument("--trace", help="write the search outcome as JSON")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="re-verify a solution file exhaustively")
    p.add_argument("solution")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_verify, seed=None)

    p = sub.add_parser("compose", help="compose a Hamiltonian for a given auxiliary function")
    _add_common(p)
    p.add_argument("--circuit", required=True)
    p.add_argument("--aux", required=True, help="JSON with 'aux' (solution) or 'g' (search trace)")
    p.add_argument("--lam-scale", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser(
        "stats",
        help="experiment statistics as CSV",
        description=f"rho-profile {RHO_PROFILE_SCHEMA}; min-constraints {MIN_CONSTRAINTS_SCHEMA}",
    )
    _add_common(p)
    p.add_argument("kind", choices=["rho-profile", "min-constraints"])
    p.add_argument("--circuit", default="mul:3x3")
    p.add_argument("--aux", type=int, default=0, help="random auxiliary components")
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--radius", type=int, default=2, help="constraint radius for min-constraints")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("scan-conjecture", help="non-redundant strongly neutralizable threshold orbits")
    _add_common(p)
    p.add_argument("--dmax", type=int, default=4)
    p.add_argument("--dmin", type=int, default=2)
    p.add_argument("--out")
    p.set_defaults(func=cmd_scan)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    resolved = {k: v for k, v in vars(args).items() if k != "func"}
    logger.info("reverse-ising %s options=%s seed=%s", __version__, json.dumps(resolved, default=str), args.seed)
    t0 = time.perf_counter()
    try:
        code = args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = 2
    logger.info("wall time %.3f s, exit %d", time.perf_counter() - t0, code)
    return code


if __name__ == "__main__":
    sys.exit(main())
