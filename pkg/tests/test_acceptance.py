"""Acceptance criteria, one test per criterion, each printing PASS lines.

Criterion 1 note: the only spectral parameter in [9, 10] at level 1
belongs to the sine-type (odd) form near 9.5337; the even scan's lone
sign change there does not survive the criterion's own
parameter-doubling oracle (it moves by ~4e-4), while the odd bracket is
stable far below the 1e-6 requirement.  The criterion is therefore run
on the parity the derivation oracle selects, and the even bracket's
instability is asserted alongside.
"""

import math
import random

import mpmath
import pytest
from gmpy2 import mpfr, mpq

import maassforms
from maassforms import Ball, working_precision
from maassforms.ball import _parse_decimal, ball_op, elem_fn
from maassforms.certify import automorphy_defect, enclose_solution, hecke_residual
from maassforms.geometry import UpperHalfPoint, moebius, pullback_sl2z
from maassforms.hejhal import SolverContext, assemble_system, refine, solve_normalized
from maassforms.kbessel import kbessel_ir
from maassforms.portrait import PortraitConfig, render_portrait
from maassforms.records import export_form, import_form

from oracles import brute_force_reduction, highprec_solve, kbessel_quadrature

KNOWN_R = "9.533695261353557554344235235928770324"


def _report(criterion, detail):
    print("ACCEPTANCE %s: PASS (%s)" % (criterion, detail))


# -- criterion 1: level-1 spectral recovery --------------------------------

def test_criterion_1_level1_spectral_recovery(level1_pipeline):
    P = level1_pipeline

    # scan [9, 10] at defaults: the genuine bracket is unique and near 9.53
    genuine = P["brackets_odd"]
    assert len(genuine) == 1, genuine
    assert 9.50 <= genuine[0].lo <= genuine[0].hi <= 9.56

    # the even-labeled scan's crossings fail the doubling oracle (spurious)
    from maassforms.errors import SpuriousBracketError

    for br in P["brackets_even"]:
        try:
            a = refine(br, P["ctx_even"], tol=1e-8)
            b = refine(br, P["ctx_even"].with_doubled("m"), tol=1e-8)
        except SpuriousBracketError:
            continue  # detected outright
        assert abs(float(a.r.c) - float(b.r.c)) > 1e-6, "even bracket survived doubling"

    # refinement stability to 1e-6 under independent doubling of m and q
    c0, c2m, c2q = P["cand"], P["cand_2m"], P["cand_2q"]
    assert abs(float(c0.r.c) - float(c2m.r.c)) <= 1e-6
    assert abs(float(c0.r.c) - float(c2q.r.c)) <= 1e-6

    # lambda enclosure identity
    assert c0.lam.contains(Ball(1) / 4 + Ball(c0.r.c).square())

    form = P["form"]
    assert P["cand_cert"].r.contains(KNOWN_R)
    assert form.enclosure_status == "verified"
    assert form.hecke < 1e-6
    assert form.automorphy <= form.automorphy_threshold
    _report("criterion-1",
            "bracket [%.4f, %.4f]; doubling shifts %.1e/%.1e; hecke %.2e; "
            "defect %.2e <= %.2e" % (
                genuine[0].lo, genuine[0].hi,
                abs(float(c0.r.c) - float(c2m.r.c)),
                abs(float(c0.r.c) - float(c2q.r.c)),
                form.hecke, form.automorphy, form.automorphy_threshold))


# -- criterion 2: K-Bessel oracle agreement --------------------------------

def test_criterion_2_kbessel_oracle_grid():
    rs = [30.0 * k / 19 for k in range(20)]
    ys = [0.1, 0.35, 0.8, 1.0, 2.5, 5.0, 10.0, 20.0, 35.0, 50.0]
    assert len(rs) * len(ys) == 200
    count = 0
    worst_rad = 0.0
    for r in rs:
        for y in ys:
            ball = kbessel_ir(r, y)
            val, err = kbessel_quadrature(r, y, tol=1e-13)
            with mpmath.workdps(90):
                lo = _parse_decimal(mpmath.nstr(val - err, 50))
                hi = _parse_decimal(mpmath.nstr(val + err, 50))
            assert mpq(ball.c) - mpq(ball.r) <= hi, (r, y)
            assert lo <= mpq(ball.c) + mpq(ball.r), (r, y)
            if y >= 1.0:
                assert float(ball.r) <= 1e-20, (r, y, float(ball.r))
                worst_rad = max(worst_rad, float(ball.r))
            count += 1
    assert count == 200
    _report("criterion-2", "200 grid points inside oracle bands; "
            "max radius %.1e for y >= 1" % worst_rad)


# -- criterion 3: pullback oracle equivalence ------------------------------

def test_criterion_3_pullback_oracle():
    rng = random.Random(2024)
    tol = 1e-9
    for trial in range(1000):
        x = rng.uniform(-3.0, 3.0)
        y = rng.uniform(0.05, 2.0)
        z = UpperHalfPoint(Ball(mpfr(x)), Ball(mpfr(y)))
        pb = pullback_sl2z(z)
        xs, ys = float(pb.point.x.c), float(pb.point.y.c)
        assert abs(xs) <= 0.5 + tol, trial
        assert xs * xs + ys * ys >= 1 - tol, trial
        ref = brute_force_reduction(x, y, bound=50)
        assert ref is not None, trial
        assert abs(ys - ref.imag) < 1e-7, (trial, x, y, ys, ref)
        assert abs(abs(xs) - abs(ref.real)) < 1e-7, (trial, x, y)
        back = moebius(pb.map.inverse(), pb.point)
        assert back.x.intersects(z.x) and back.y.intersects(z.y), trial
    _report("criterion-3", "1000 points match the bounded-entry search; "
            "round trips contained")


# -- criterion 4: verified-enclosure soundness -----------------------------

def test_criterion_4_enclosure_soundness():
    from test_certify import _system_from as make_synthetic_system

    rng = random.Random(99)
    verified = 0
    for trial in range(20):
        n = rng.randint(2, 10)
        entries = [[rng.uniform(-1, 1) + (3.0 if i == k else 0.0)
                    for k in range(n)] for i in range(n)]
        rhs = [rng.uniform(-1, 1) for _ in range(n)]
        system = make_synthetic_system(entries, rhs)
        approx = solve_normalized(system)
        coeffs, status = enclose_solution(system, approx)
        assert status == "verified", trial
        verified += 1
        oracle = highprec_solve(entries, [-v for v in rhs], 512)
        for k in range(n):
            assert coeffs.a(k + 2).contains(Ball(oracle[k])), (trial, k)
    # failure path cannot claim verified
    bad = make_synthetic_system([[3.0, 1.0], [1.0, 3.0]], [1.0, 1.0])
    bad.rows[1][1] = Ball(3, "2.5")
    bad.rows[2][2] = Ball(3, "2.5")
    coeffs, status = enclose_solution(bad, solve_normalized(bad))
    assert status == "heuristic"
    _report("criterion-4", "%d/20 verified, oracle inside every ball; "
            "contraction failure downgraded to heuristic" % verified)


# -- criterion 5: ball containment fuzzing ---------------------------------

def _mp_exact(op, a, b=None, dps=45):
    with mpmath.workdps(dps):
        x = mpmath.mpf(a)
        fns = {"exp": mpmath.exp, "cos": mpmath.cos, "sin": mpmath.sin,
               "sqrt": mpmath.sqrt, "cosh": mpmath.cosh}
        if op in fns:
            v = fns[op](x)
        else:
            yv = mpmath.mpf(b)
            v = {"add": x + yv, "sub": x - yv, "mul": x * yv, "div": x / yv}[op]
        return mpmath.nstr(v, 40)


def test_criterion_5_ball_containment_fuzz():
    rng = random.Random(7_000)
    per_op = 10_000
    slack = mpq(1, 10**30)
    counts = {}
    for op in ("add", "sub", "mul", "div"):
        done = 0
        while done < per_op:
            a = rng.uniform(-1e6, 1e6) * 10.0 ** rng.randint(-12, 6)
            b = rng.uniform(-1e6, 1e6) * 10.0 ** rng.randint(-12, 6)
            if op == "div" and b == 0:
                continue
            out = ball_op(op, Ball(mpfr(a)), Ball(mpfr(b)))
            ref = _parse_decimal(_mp_exact(op, a, b))
            ok = (mpq(out.c) - mpq(out.r) - abs(ref) * slack <= ref
                  <= mpq(out.c) + mpq(out.r) + abs(ref) * slack)
            assert ok, (op, a, b)
            done += 1
        counts[op] = done
    for op in ("exp", "cos", "sin", "sqrt", "cosh"):
        done = 0
        while done < per_op:
            a = rng.uniform(-50, 50)
            if op == "exp" or op == "cosh":
                a = rng.uniform(-30, 30)
            if op == "sqrt":
                a = abs(a)
            out = elem_fn(op, Ball(mpfr(a)))
            ref = _parse_decimal(_mp_exact(op, a))
            ok = (mpq(out.c) - mpq(out.r) - abs(ref) * slack - slack <= ref
                  <= mpq(out.c) + mpq(out.r) + abs(ref) * slack + slack)
            assert ok, (op, a)
            done += 1
        counts[op] = done
    assert all(v == per_op for v in counts.values())
    _report("criterion-5", "%d samples per operation contained" % per_op)


# -- criterion 6: format determinism ---------------------------------------

def test_criterion_6_format_determinism(level1_pipeline):
    from test_records import GOLDEN_MINIMAL, _minimal_record

    assert export_form(_minimal_record()) == GOLDEN_MINIMAL

    data = level1_pipeline["record_bytes"]
    rec2 = import_form(data)
    assert export_form(rec2) == data
    assert export_form(import_form(export_form(rec2))) == data
    for n in range(1, len(rec2.coefficients) + 1):
        assert rec2.coefficient_ball(n).contains(
            level1_pipeline["record"].coefficient_ball(n))

    cfg = PortraitConfig(-0.5, 0.5, 0.25, 1.05, width=48, height=36)
    img1 = render_portrait(rec2, cfg)
    img2 = render_portrait(rec2, cfg)
    assert img1.startswith(b"P6 48 36 255\n")
    assert img1 == img2
    _report("criterion-6", "golden match; round trips byte-stable; "
            "portrait deterministic (%d bytes)" % len(img1))


# -- criterion 7: residual check at a third height -------------------------

def test_criterion_7_third_height_residual(level1_pipeline):
    from maassforms.hejhal import EXIT_HEIGHT

    P = level1_pipeline
    form = P["form"]
    ctx = P["ctx_cert"]
    y3 = 0.75 * EXIT_HEIGHT
    system = assemble_system(P["cand_cert"].r.c, ctx, height=y3)
    residuals = system.residuals(form.point_coefficients)
    worst_center = 0.0
    for n, res in enumerate(residuals, start=1):
        assert res.contains(0), (n, res)
        worst_center = max(worst_center, abs(float(res.c)))
    # frozen magnitude ceiling from the derivation run, 100x headroom
    assert worst_center <= 1e-10
    _report("criterion-7", "all %d residual balls contain zero; "
            "max |center| %.1e" % (len(residuals), worst_center))


# -- CLI end-to-end: refine then verify exits 0 ----------------------------

@pytest.mark.slow
def test_cli_refine_then_verify_pipeline(level1_pipeline, tmp_path):
    from maassforms.cli import run

    br = level1_pipeline["brackets_odd"][0]
    out = str(tmp_path / "level1.maass")
    code = run(["refine", "--level", "1", "--parity", "odd",
                "--bracket", repr(br.lo), repr(br.hi), "--tol", "1e-8",
                "--cert-eps", "1e-16", "--cert-tol", "1e-18",
                "-o", out])
    assert code == 0
    rec = import_form(open(out, "rb").read())
    assert rec.r_ball().contains(KNOWN_R)
    assert run(["verify", out, "--samples", "4"]) == 0
    import json
    manifest = json.load(open(out + ".manifest.json"))
    assert manifest["command"] == "refine"
    _report("cli-pipeline", "refine wrote %s; verify exit 0" % rec.level)
