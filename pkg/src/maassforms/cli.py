"""Command-line front end: scan, refine, verify, portrait, info.

Machine-readable results go to standard output; progress and logging to
standard error.  Every file written is accompanied by a JSON run
manifest recording the full parameter set, enough to replay the run to
identical bytes.  Exit codes: 0 success, 1 domain failure, 2 usage.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

from . import __version__
from .errors import MaassError
from .geometry import prime_divisors
from .precision import DEFAULT_PRECISION

log = logging.getLogger("maassforms")

SCAN_EPS = 1e-12
CERT_EPS = 1e-26
CERT_TOL = 1e-30

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2


def _parse_al_signs(text, level):
    """'2:+1,3:-1' -> {2: 1, 3: -1}; None means all +1."""
    if text is None:
        return None
    out = {}
    for chunk in text.split(","):
        if not chunk:
            continue
        p_str, _, s_str = chunk.partition(":")
        try:
            p = int(p_str)
            s = {"+1": 1, "1": 1, "-1": -1}[s_str]
        except (ValueError, KeyError):
            raise MaassError("bad Atkin-Lehner sign chunk %r" % chunk)
        out[p] = s
    if sorted(out) != prime_divisors(level):
        raise MaassError("signs must cover exactly the primes of level %d" % level)
    return out


def _precision(args):
    env = os.environ.get("MAASS_PRECISION_BITS")
    if getattr(args, "prec", None):
        return args.prec
    if env:
        try:
            return int(env)
        except ValueError:
            raise MaassError("MAASS_PRECISION_BITS must be an integer, got %r" % env)
    return DEFAULT_PRECISION


def _write_manifest(path, command, params, outputs, started):
    manifest = {
        "tool": "maassforms",
        "version": __version__,
        "command": command,
        "parameters": params,
        "outputs": [os.path.basename(p) for p in outputs],
        "wall_clock_seconds": round(time.time() - started, 3),
        "determinism": "outputs depend only on the parameters and precision",
    }
    mpath = path + ".manifest.json"
    with open(mpath, "w", encoding="ascii") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("manifest written to %s", mpath)


def _cmd_scan(args):
    from .hejhal import SolverContext, scan

    started = time.time()
    prec = _precision(args)
    signs = _parse_al_signs(args.al_signs, args.level)
    parities = [args.parity] if args.parity else ["even", "odd"]
    lines = []
    for parity in parities:
        ctx = SolverContext.create(args.level, parity, r_max=args.r_max,
                                   al_signs=signs, eps=args.eps, prec=prec)
        log.info("scanning %s parity: m=%d q=%d", parity, ctx.m, ctx.q)
        for br in scan(args.r_min, args.r_max, args.step, ctx, threads=args.threads):
            sign_txt = ",".join("%d:%+d" % (p, s) for p, s in ctx.al_signs) or "-"
            lines.append("BRACKET %s %s %.12g %.12g" % (parity, sign_txt, br.lo, br.hi))
    for line in lines:
        print(line)
    if args.output:
        with open(args.output, "w", encoding="ascii") as fh:
            fh.write("".join(line + "\n" for line in lines))
        _write_manifest(args.output, "scan", _params_of(args, prec), [args.output], started)
    return EXIT_OK


def _cmd_refine(args):
    from .certify import certify
    from .hejhal import Bracket, SolverContext, refine
    from .records import export_form, record_from_certified

    started = time.time()
    prec = _precision(args)
    signs = _parse_al_signs(args.al_signs, args.level)
    lo, hi = args.bracket
    if not lo < hi:
        raise MaassError("bracket must satisfy LO < HI")
    ctx = SolverContext.create(args.level, args.parity, r_max=hi + 1.0,
                               al_signs=signs, eps=args.eps, prec=prec)
    br = Bracket(lo=lo, hi=hi, g_lo=None, g_hi=None,
                 parity=args.parity, al_signs=ctx.al_signs)
    log.info("refining bracket [%g, %g] at m=%d q=%d", lo, hi, ctx.m, ctx.q)
    cand = refine(br, ctx, tol=args.tol)
    log.info("spectral parameter %s", cand.r)
    cert_ctx = SolverContext.create(args.level, args.parity, r_max=hi + 1.0,
                                    al_signs=signs, eps=args.cert_eps, prec=prec)
    log.info("certification pass at m=%d q=%d", cert_ctx.m, cert_ctx.q)
    rad = float(cand.r.r)
    tight = refine(Bracket(lo=float(cand.r.c) - 2 * rad, hi=float(cand.r.c) + 2 * rad,
                           g_lo=None, g_hi=None, parity=args.parity,
                           al_signs=cert_ctx.al_signs),
                   cert_ctx, tol=args.cert_tol)
    form = certify(tight)
    rec = record_from_certified(form, provenance={"command": "refine"})
    data = export_form(rec)
    with open(args.output, "wb") as fh:
        fh.write(data)
    _write_manifest(args.output, "refine", _params_of(args, prec), [args.output], started)
    print("WROTE %s" % args.output)
    print("SPECTRAL_R %s %s" % (cand.r.c, cand.r.r))
    print("ENCLOSURE %s" % form.enclosure_status)
    return EXIT_OK


def _cmd_verify(args):
    from .certify import automorphy_defect, hecke_residual
    from .hejhal import CoefficientVector, SolverContext, SpectralCandidate
    from .records import import_form

    with open(args.file, "rb") as fh:
        rec = import_form(fh.read())
    prec = _precision(args)
    from .ball import Ball

    m = len(rec.coefficients)
    prov = rec.provenance
    ctx = SolverContext(
        level=rec.level, parity=rec.parity,
        y1=float(prov.get("y1", 0.6928203230275509)),
        y2=float(prov.get("y2", 0.6062177826491071)),
        q=int(prov.get("samples", m + 20)), m=m,
        al_signs=tuple((p, s if s is not None else 1) for p, s in sorted(rec.al_signs.items())),
        prec=int(prov.get("precision_bits", prec)),
        eps=float(prov.get("eps", 1e-12)),
        coeff_bound=float(prov.get("coeff_bound", 20.0)),
    )
    entries = [rec.coefficient_ball(n, prec=ctx.prec) for n in range(1, m + 1)]
    entries[0] = Ball(1)
    coeffs = CoefficientVector(rec.parity, entries)
    cand = SpectralCandidate(r=rec.r_ball(ctx.prec), lam=rec.lambda_ball(ctx.prec),
                             coefficients=coeffs, ctx=ctx)
    ok = True
    pairs = [(a, b) for a, b in ((2, 3), (2, 5), (3, 5)) if a * b <= m]
    if pairs:
        # serialized radii are 3-digit upward decimals, so re-importing can
        # widen each ball by up to 1%; allow matching slack
        hecke = hecke_residual(coeffs, pairs)
        stored = float(rec.diagnostics.get(
            "hecke_residual_enclosure", rec.diagnostics.get("hecke_residual", "inf")))
        line = "PASS" if hecke <= stored * 1.10 + 1e-30 else "FAIL"
        ok &= line == "PASS"
        print("%s hecke_residual %.6g (stored bound %.6g)" % (line, hecke, stored))
    defect = automorphy_defect(cand, rec.level, samples=args.samples)
    threshold = float(rec.diagnostics.get("automorphy_threshold", "inf"))
    line = "PASS" if defect <= threshold else "FAIL"
    ok &= line == "PASS"
    print("%s automorphy_defect %.6g (threshold %.6g)" % (line, defect, threshold))
    lam_ok = cand.lam.intersects(Ball(1) / 4 + cand.r.square())
    line = "PASS" if lam_ok else "FAIL"
    ok &= lam_ok
    print("%s lambda_consistency" % line)
    return EXIT_OK if ok else EXIT_DOMAIN


def _cmd_portrait(args):
    from .portrait import PortraitConfig, render_portrait
    from .records import import_form

    started = time.time()
    with open(args.file, "rb") as fh:
        rec = import_form(fh.read())
    try:
        w_str, h_str = args.size.lower().split("x")
        width, height = int(w_str), int(h_str)
    except ValueError:
        raise MaassError("size must look like 640x480, got %r" % args.size)
    cfg = PortraitConfig(x_min=args.window[0], x_max=args.window[1],
                         y_min=args.window[2], y_max=args.window[3],
                         width=width, height=height, scale=args.scale)
    data = render_portrait(rec, cfg)
    with open(args.output, "wb") as fh:
        fh.write(data)
    _write_manifest(args.output, "portrait", _params_of(args, _precision(args)),
                    [args.output], started)
    print("WROTE %s" % args.output)
    return EXIT_OK


def _cmd_info(args):
    from .records import decimal_center, import_form

    with open(args.file, "rb") as fh:
        rec = import_form(fh.read())
    r_c, r_e = rec.spectral_r
    lam_c, lam_e = rec.lam
    print("level      %d" % rec.level)
    print("weight     %d, character %s" % (rec.weight, rec.character))
    print("parity     %s" % rec.parity)
    print("spectral r %s (+/- %s)" % (decimal_center(r_c), float(r_e)))
    print("lambda     %s (+/- %s)" % (decimal_center(lam_c), float(lam_e)))
    for p in sorted(rec.al_signs):
        s = rec.al_signs[p]
        print("AL sign    %d: %s" % (p, "undetermined" if s is None else "%+d" % s))
    print("Fricke     %s" % ("undetermined" if rec.fricke is None else "%+d" % rec.fricke))
    print("coeffs     %d stored" % len(rec.coefficients))
    for key in sorted(rec.diagnostics):
        print("diag       %s = %s" % (key, rec.diagnostics[key]))
    return EXIT_OK


def _params_of(args, prec):
    out = {k: v for k, v in vars(args).items() if k != "func" and v is not None}
    out["precision_bits"] = prec
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maassforms",
        description="Verified weight-0 Maass cusp forms on Gamma0(N), squarefree N.")
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="locate sign-change brackets of the spectral functional")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--r-min", type=float, required=True)
    p.add_argument("--r-max", type=float, required=True)
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--parity", choices=["even", "odd"])
    p.add_argument("--al-signs", help="e.g. '2:+1,3:-1'; default all +1")
    p.add_argument("--eps", type=float, default=SCAN_EPS)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--prec", type=int)
    p.add_argument("-o", "--output", help="also write brackets to a file (with manifest)")
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("refine", help="refine a bracket and write a certified MAASS/1 file")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--bracket", type=float, nargs=2, metavar=("LO", "HI"), required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--parity", choices=["even", "odd"], required=True)
    p.add_argument("--al-signs")
    p.add_argument("--eps", type=float, default=SCAN_EPS)
    p.add_argument("--cert-eps", type=float, default=CERT_EPS)
    p.add_argument("--cert-tol", type=float, default=CERT_TOL)
    p.add_argument("--prec", type=int)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_refine)

    p = sub.add_parser("verify", help="recompute diagnostics for a MAASS/1 file")
    p.add_argument("file")
    p.add_argument("--samples", type=int, default=8)
    p.add_argument("--prec", type=int)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("portrait", help="render a PPM portrait of a MAASS/1 file")
    p.add_argument("file")
    p.add_argument("--window", type=float, nargs=4, required=True,
                   metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    p.add_argument("--size", required=True, help="WIDTHxHEIGHT, e.g. 640x480")
    p.add_argument("--scale", type=float, help="value scale; default: auto from the rendered values")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--prec", type=int)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_portrait)

    p = sub.add_parser("info", help="print a human summary of a MAASS/1 file")
    p.add_argument("file")
    p.set_defaults(func=_cmd_info)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(stream=sys.stderr,
                        level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except MaassError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_DOMAIN


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
