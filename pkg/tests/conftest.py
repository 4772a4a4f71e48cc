import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(scope="session")
def level1_pipeline():
    """Level-1 spectral recovery shared by the acceptance tests.

    Runs the full pipeline once: dual-parity scan of [9, 10], refinement
    with independent parameter doublings, a certification-grade polish,
    and the certified record.
    """
    from maassforms.certify import certify
    from maassforms.hejhal import Bracket, SolverContext, refine, scan
    from maassforms.records import export_form, record_from_certified

    out = {}
    ctx_odd = SolverContext.create(1, "odd", r_max=10.0)
    ctx_even = SolverContext.create(1, "even", r_max=10.0)
    out["ctx_odd"] = ctx_odd
    out["ctx_even"] = ctx_even
    out["brackets_odd"] = scan(9.0, 10.0, 0.01, ctx_odd)
    out["brackets_even"] = scan(9.0, 10.0, 0.01, ctx_even)

    bracket = out["brackets_odd"][0]
    out["cand"] = refine(bracket, ctx_odd, tol=1e-8)
    out["cand_2m"] = refine(bracket, ctx_odd.with_doubled("m"), tol=1e-8)
    out["cand_2q"] = refine(bracket, ctx_odd.with_doubled("q"), tol=1e-8)

    ctx_cert = SolverContext.create(1, "odd", r_max=10.0, eps=1e-26)
    center = float(out["cand"].r.c)
    rad = float(out["cand"].r.r)
    out["ctx_cert"] = ctx_cert
    out["cand_cert"] = refine(
        Bracket(lo=center - 2 * rad - 1e-9, hi=center + 2 * rad + 1e-9,
                g_lo=None, g_hi=None, parity="odd", al_signs=()),
        ctx_cert, tol=1e-30)
    out["form"] = certify(out["cand_cert"])
    out["record"] = record_from_certified(out["form"])
    out["record_bytes"] = export_form(out["record"])
    return out
