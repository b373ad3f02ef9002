"""Command line entry point: validate, spread, spectrum, tub, search, simulate."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .bounds import BoundInput, coding_rate, tub_ber, tub_fer
from .lengths import default_profile, lte_reference
from .qpp import (QppPolynomial, canonical_form, is_permutation_polynomial, permutation,
                  reduces_to_linear, same_permutation, theorem_twin)
from .records import build_manifest, now_utc, write_curve_csv, write_record
from .search import SearchConfig, run_search
from .simulate import ChannelConfig, StopRule, simulate_fer, snr_sweep
from .spectrum import (DEFAULT_W_U_MAX, OracleBudgetError, SpectrumCache, compute_spectrum,
                       spectrum_oracle)
from .spread import spread_factor

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BUDGET = 3
EXIT_INCONSISTENT = 4

CACHE_ENV = "QPPTURBO_CACHE_DIR"

log = logging.getLogger("qppturbo")


class UsageError(Exception):
    pass


def _length(text: str) -> int:
    try:
        L = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if L <= 0 or L % 2:
        raise argparse.ArgumentTypeError(f"length must be a positive even integer, got {L}")
    return L


def _pair(text: str) -> tuple[int, int]:
    parts = text.replace(" ", "").split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected q1,q2 but got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two integers, got {text!r}")


def _sweep(text: str) -> tuple[float, ...]:
    try:
        return snr_sweep(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _poly(args) -> QppPolynomial:
    q1, q2 = args.poly
    try:
        return QppPolynomial(q1, q2, args.len)
    except ValueError as exc:
        raise UsageError(str(exc))


def _cache(args) -> SpectrumCache | None:
    if getattr(args, "no_cache", False):
        return None
    directory = args.cache_dir or os.environ.get(CACHE_ENV)
    if not directory:
        directory = Path.home() / ".cache" / "qppturbo"
    return SpectrumCache(directory)


def _emit(args, kind: str, result: dict, config: dict, started: str, seed: int | None = None) -> None:
    if not args.out:
        return
    out = Path(args.out)
    manifest = build_manifest(args.command, sys.argv[1:] if args.argv is None else args.argv, config,
                              seed, outputs=[str(out)], started_at=started)
    write_record(out, kind, result, manifest)
    log.info("wrote %s", out)


def _poly_config(poly: QppPolynomial) -> dict:
    return {"L": poly.L, "q1": poly.q1, "q2": poly.q2}


def cmd_validate(args) -> int:
    started = now_utc()
    poly = _poly(args)
    valid = is_permutation_polynomial(poly)
    twin = theorem_twin(poly)
    canon = canonical_form(poly)
    print(f"{poly}: {'valid' if valid else 'not a permutation polynomial'}")
    if valid:
        note = "already canonical" if canon == poly else f"canonical twin {canon.q1}x+{canon.q2}x^2"
        print(f"  {note}; shifted twin {twin.q1}x+{twin.q2}x^2 gives the same map"
              f" ({same_permutation(poly, twin)})")
        if reduces_to_linear(poly):
            print("  the map is linear: 2*q2 = 0 mod L")
    result = {"poly": [poly.q1, poly.q2], "L": poly.L, "valid": valid,
              "canonical": [canon.q1, canon.q2], "twin": [twin.q1, twin.q2],
              "linear": reduces_to_linear(poly)}
    _emit(args, "validate", result, _poly_config(poly), started)
    return EXIT_OK


def cmd_spread(args) -> int:
    started = now_utc()
    poly = _poly(args)
    res = spread_factor(permutation(poly))
    print(f"{poly}: D={res.D} at points {res.argmin_pair}")
    _emit(args, "spread", {"D": res.D, "argmin_pair": list(res.argmin_pair)}, _poly_config(poly), started)
    return EXIT_OK


def _spectrum_for(args, poly: QppPolynomial, num_terms: int):
    cache = _cache(args)
    spec = cache.get(poly, num_terms, args.wmax) if cache is not None else None
    if spec is None:
        spec = compute_spectrum(permutation(poly), None, num_terms, args.wmax, node_budget=args.node_budget)
        if cache is not None:
            cache.put(poly, spec)
    return spec


def _print_terms(spec) -> None:
    for t in spec.terms:
        print(f"  d={t.d:3d}  N={t.N:5d}  w={t.w:6d}")
    if spec.truncated:
        print("  search budget exhausted: the terms above may be incomplete")


def cmd_spectrum(args) -> int:
    started = now_utc()
    poly = _poly(args)
    num_terms = args.terms or default_profile(poly.L)[1]
    if args.oracle_weight:
        try:
            spec = spectrum_oracle(permutation(poly), None, args.oracle_weight, num_terms)
        except OracleBudgetError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_BUDGET
    else:
        spec = _spectrum_for(args, poly, num_terms)
    print(f"{poly}: first {num_terms} terms, input weight <= {spec.w_u_max} ({spec.method})")
    _print_terms(spec)
    config = _poly_config(poly) | {"num_terms": num_terms, "w_u_max": spec.w_u_max,
                                   "node_budget": args.node_budget}
    _emit(args, "spectrum", {"poly": [poly.q1, poly.q2], "L": poly.L, "spectrum": spec.to_dict()},
          config, started)
    return EXIT_BUDGET if spec.truncated else EXIT_OK


def cmd_tub(args) -> int:
    started = now_utc()
    poly = _poly(args)
    snr, terms = default_profile(poly.L)
    snr = args.snr_db if args.snr_db is not None else snr
    num_terms = args.terms or terms
    spec = _spectrum_for(args, poly, num_terms)
    inp = BoundInput(spec, poly.L, snr)
    ber, fer = tub_ber(inp), tub_fer(inp)
    print(f"{poly} at {snr} dB, {num_terms} terms, Rc={coding_rate(poly.L)}")
    print(f"  TUB(BER) = {ber:.6e}   (x1e7: {ber * 1e7:.4f})")
    print(f"  TUB(FER) = {fer:.6e}   (x1e5: {fer * 1e5:.4f})")
    if spec.truncated:
        print("  search budget exhausted: the bound is computed from incomplete terms")
    config = _poly_config(poly) | {"snr_db": snr, "num_terms": num_terms, "w_u_max": args.wmax}
    result = {"poly": [poly.q1, poly.q2], "L": poly.L, "snr_db": snr, "spectrum": spec.to_dict(),
              "tub_ber": ber, "tub_fer": fer,
              "display": {"tub_ber_x1e7": round(ber * 1e7, 4), "tub_fer_x1e5": round(fer * 1e5, 4)}}
    _emit(args, "tub", result, config, started)
    return EXIT_BUDGET if spec.truncated else EXIT_OK


def cmd_search(args) -> int:
    started = now_utc()
    L = args.L
    if L > 512:
        raise UsageError(f"search supports L <= 512, got {L}")
    cfg = SearchConfig(L, snr_db=args.snr_db, num_terms=args.terms, w_u_max=args.wmax, min_d=args.min_d,
                       include_linear=args.include_linear, jobs=args.jobs, node_budget=args.node_budget)
    if args.reference:
        reference = QppPolynomial(args.reference[0], args.reference[1], L)
    else:
        reference = lte_reference(L)
    report = run_search(cfg, _cache(args), reference)
    mode = f"D >= {args.min_d}" if args.min_d is not None else "maximum D"
    print(f"L={L}: {report.candidate_count} candidates with {mode} (largest D {report.stage1_max_D}),"
          f" {report.num_terms} terms at {report.snr_db} dB")
    if report.best_poly is None:
        print("  no candidate could be ranked")
    else:
        d, n, w = report.spectrum_head
        print(f"  best {report.best_poly.q1}x+{report.best_poly.q2}x^2  D={report.D}  dmin/N1/w1={d}/{n}/{w}")
        print(f"  TUB(BER)x1e7={report.tub_ber * 1e7:.4f}  TUB(FER)x1e5={report.tub_fer * 1e5:.4f}")
        print(f"  ties: {report.tie_count} with q1 < L/2, {report.tie_count_full_domain} over all q1:"
              f" {', '.join(f'{p.q1}x+{p.q2}x^2' for p in report.all_ties)}")
        if report.reference_ratio is not None:
            ref = report.reference_poly
            print(f"  reference {ref.q1}x+{ref.q2}x^2: TUB(FER)x1e5={report.reference_tub_fer * 1e5:.4f}"
                  f"  ratio={report.reference_ratio:.2f}")
    if report.indeterminate:
        print(f"  budget exhausted for {len(report.indeterminate)} candidates that could still win")
    config = {"L": L, "snr_db": report.snr_db, "num_terms": report.num_terms, "w_u_max": args.wmax,
              "min_d": args.min_d, "include_linear": args.include_linear, "node_budget": args.node_budget,
              "reference": None if reference is None else [reference.q1, reference.q2]}
    _emit(args, "search", report.to_dict(), config, started)
    return EXIT_BUDGET if report.indeterminate or report.best_poly is None else EXIT_OK


def cmd_simulate(args) -> int:
    started = now_utc()
    poly = _poly(args)
    from .codec import TurboCodecConfig

    codec = TurboCodecConfig(permutation(poly), max_iterations=args.iterations,
                             llr_stop_threshold=args.llr_threshold)
    stop = StopRule(args.min_errors, args.max_frames)

    def progress(snr, frames, errors):
        log.debug("%.2f dB: %d frames, %d errors", snr, frames, errors)

    sim = simulate_fer(poly, codec, ChannelConfig(args.snr_db), stop, args.seed, args.batch, args.jobs,
                       progress)
    print(f"{poly}: seed {args.seed}, stop at {stop.min_frame_errors} errors or {stop.max_frames} frames")
    for p in sim.points:
        flag = "  (frame budget reached)" if p.budget_exhausted else ""
        print(f"  {p.snr_db:6.2f} dB  FER={p.fer:.4e} +- {p.ci_halfwidth:.2e}  frames={p.frames}"
              f"  errors={p.frame_errors}  iters={p.mean_iterations:.2f}{flag}")
    if args.out:
        out = Path(args.out)
        config = _poly_config(poly) | {"snr_db": list(args.snr_db), "min_frame_errors": stop.min_frame_errors,
                                       "max_frames": stop.max_frames, "batch": args.batch,
                                       "iterations": args.iterations, "llr_threshold": args.llr_threshold}
        if out.suffix == ".json":
            _emit(args, "simulate", sim.to_dict(), config, started, args.seed)
        else:
            write_curve_csv(out, sim)
            sidecar = out.with_name(out.name + ".json")
            manifest = build_manifest(args.command, sys.argv[1:] if args.argv is None else args.argv, config,
                                      args.seed, outputs=[str(out), str(sidecar)], started_at=started)
            write_record(sidecar, "simulate", sim.to_dict(), manifest)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qppturbo", description="QPP interleaver design for turbo codes")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, poly=True):
        if poly:
            p.add_argument("--len", type=_length, required=True, help="frame length L (even)")
            p.add_argument("--poly", type=_pair, required=True, help="coefficients as q1,q2")
        p.add_argument("--out", help="write a JSON record (CSV for simulate curves)")

    def spectrum_opts(p):
        p.add_argument("--terms", type=int, help="number of distinct distances")
        p.add_argument("--wmax", type=int, default=DEFAULT_W_U_MAX, help="input weight cap")
        p.add_argument("--node-budget", type=int, help="search nodes per pass before giving up")
        p.add_argument("--cache-dir", help=f"spectrum cache directory (default ${CACHE_ENV} or ~/.cache/qppturbo)")
        p.add_argument("--no-cache", action="store_true")

    p = sub.add_parser("validate", help="check a polynomial and show its canonical form")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("spread", help="spread factor D")
    common(p)
    p.set_defaults(func=cmd_spread)

    p = sub.add_parser("spectrum", help="truncated distance spectrum")
    common(p)
    spectrum_opts(p)
    p.add_argument("--oracle-weight", type=int, help="use brute force over inputs up to this weight")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("tub", help="truncated union bounds on Rayleigh fading")
    common(p)
    spectrum_opts(p)
    p.add_argument("--snr-db", type=float, help="Eb/N0 in dB")
    p.set_defaults(func=cmd_tub)

    p = sub.add_parser("search", help="maximum spread then minimum TUB(FER)")
    p.add_argument("L", type=_length)
    common(p, poly=False)
    spectrum_opts(p)
    p.add_argument("--snr-db", type=float)
    p.add_argument("--min-d", type=int, help="keep every candidate with D >= this instead of only max D")
    p.add_argument("--include-linear", action="store_true", help="also rank polynomials with 2*q2 = 0 mod L")
    p.add_argument("--reference", type=_pair, help="q1,q2 to compare against (default: LTE)")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("simulate", help="Monte Carlo FER on Rayleigh fading")
    common(p)
    p.add_argument("--snr-db", type=_sweep, required=True, help="start:step:stop, list or value")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--min-errors", type=int, default=100)
    p.add_argument("--max-frames", type=int, default=10_000_000)
    p.add_argument("--batch", type=int, default=1000)
    p.add_argument("--iterations", type=int, default=12)
    p.add_argument("--llr-threshold", type=float, default=10.0)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    level = logging.WARNING - 10 * args.verbose
    logging.basicConfig(level=max(level, logging.DEBUG), format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("numba").setLevel(logging.WARNING)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except AssertionError as exc:
        print(f"internal inconsistency: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
