"""Certified radii and quality diagnostics for solved candidates.

The verified component is the linear-solve enclosure: an approximate
inverse R of the midpoint matrix, the contraction check |I - R A| < 1 in
ball arithmetic, and per-coordinate bounds

    |x - x~|_i  <=  |R res|_i + |I - R A| * |R res| / (1 - |I - R A|),

which hold for every matrix/right-hand side inside the system's balls.
With the system assembled at the candidate's r-ball and with explicit
truncation/alias error balls, the enclosed coefficients are accountable
to any true form whose spectral parameter lies in that ball.

Automorphy defect and Hecke residual are diagnostics, not certificates:
they expose spurious candidates and wrong Atkin-Lehner sign guesses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import gmpy2
from gmpy2 import mpfr

from .ball import Ball
from .errors import DomainError, SingularSystemError
from .geometry import UpperHalfPoint, prime_divisors, pullback_gamma0n
from .hejhal import (
    CoefficientVector,
    LinearSystem,
    SolverContext,
    SpectralCandidate,
    _lu_solve,
    assemble_system,
    evaluate_form,
    solve_normalized,
)
from .kbessel import series_tail
from .precision import rounding, working_precision

__all__ = [
    "tail_bound",
    "enclose_solution",
    "automorphy_defect",
    "hecke_residual",
    "fricke_sign",
    "certify",
    "CertifiedForm",
]

VERIFIED = "verified"
HEURISTIC = "heuristic"


def tail_bound(r, y, m: int, coeff_bound=20.0, prec=None) -> float:
    """Upper bound for the expansion tail beyond index m, uniform on
    heights >= y and in the phase; independent of r by the envelope."""
    if m < 1:
        raise DomainError("truncation index must be >= 1")
    return float(series_tail(m, y, coeff_bound, prec))


def _ball_matvec(A, x):
    out = []
    for row in A:
        acc = Ball(0)
        for a, b in zip(row, x):
            acc = acc + a * b
        out.append(acc)
    return out


def _ldexp_ball(b: Ball, k: int, R) -> Ball:
    """Ball times 2^k; exact in binary, no radius growth."""
    if k == 0:
        return b
    two_k = mpfr(2) ** k
    return Ball._mk(R.near.mul(b.c, two_k), R.up.mul(b.r, two_k))


def _pow2_exponent(x) -> int:
    if x == 0:
        return 0
    return gmpy2.get_exp(x)


def enclose_solution(system: LinearSystem, approx: CoefficientVector):
    """Certified per-coordinate radii for the normalized solution.

    The system is equilibrated by exact powers of two (row scales, then
    column scales) before the contraction check; the K-Bessel decay makes
    the raw columns span many orders of magnitude, which is pure scaling,
    not intrinsic conditioning.  Returns (coefficients, status).  When
    the contraction check fails the status is ``heuristic`` and the radii
    come from a precision-doubling delta instead; a false ``verified`` is
    never produced.
    """
    ctx = system.ctx
    delta = system.r.r
    with working_precision(ctx.prec):
        R = rounding()
        A, b = system.normalized()
        n = len(A)
        if len(approx) != n + 1:
            raise DomainError("approximation length does not match the system")
        row_e = [_pow2_exponent(max((A[i][k].mag(R) for k in range(n)), default=mpfr(0)))
                 for i in range(n)]
        col_e = [_pow2_exponent(max((_ldexp_ball(A[i][k], -row_e[i], R).mag(R)
                                     for i in range(n)), default=mpfr(0)))
                 for k in range(n)]
        A = [[_ldexp_ball(A[i][k], -row_e[i] - col_e[k], R) for k in range(n)]
             for i in range(n)]
        b = [_ldexp_ball(b[i], -row_e[i], R) for i in range(n)]
        # scaled unknowns: x^_k = 2^(col_e_k) x_k
        x = [_ldexp_ball(approx.a(k + 2), col_e[k], R) for k in range(n)]

        # spectral spread in mean-value form: residual gains u * [-delta, delta]
        # with u = d(full row)/dr applied to the approximation, and the
        # contraction must hold for the matrix family A + dA [-delta, delta]
        spectral = system.drows is not None and delta > 0
        A_fam = A
        u_scaled = None
        if spectral:
            x_ext = [approx.a(k) for k in range(1, n + 2)]
            u = []
            for i in range(1, n + 1):
                acc = Ball(0)
                for k in range(n + 1):
                    acc = acc + system.drows[i][k] * x_ext[k]
                u.append(acc)
            u_scaled = [_ldexp_ball(u[i], -row_e[i], R) for i in range(n)]
            dwidth = Ball(0, delta)
            A_fam = [[A[i][k] + _ldexp_ball(system.drows[i + 1][k + 1],
                                            -row_e[i] - col_e[k], R) * dwidth
                      for k in range(n)] for i in range(n)]

        try:
            Rmat = _midpoint_inverse(A, R)
        except SingularSystemError:
            return _heuristic_radii(system, approx), HEURISTIC
        norm_g = mpfr(0)
        for i in range(n):
            s = mpfr(0)
            for k in range(n):
                acc = Ball(-1) if i == k else Ball(0)
                for t in range(n):
                    acc = acc + Rmat[i][t] * A_fam[t][k]
                s = R.up.add(s, acc.mag(R))
            norm_g = max(norm_g, s)
        if not norm_g < 1:
            return _heuristic_radii(system, approx), HEURISTIC
        ax = _ball_matvec(A, x)
        res = [b[i] - ax[i] for i in range(n)]
        if spectral:
            dwidth = Ball(0, delta)
            res = [res[i] + u_scaled[i] * dwidth for i in range(n)]
        rres = _ball_matvec(Rmat, res)
        rres_norm = mpfr(0)
        for v in rres:
            rres_norm = max(rres_norm, v.mag(R))
        denom = R.down.sub(mpfr(1), norm_g)
        spread = R.up.div(R.up.mul(norm_g, rres_norm), denom)
        radii = []
        for i in range(n):
            scaled = R.up.add(rres[i].mag(R), spread)
            radii.append(R.up.mul(scaled, mpfr(2) ** (-col_e[i])))
        return approx.with_radii(radii), VERIFIED


def _midpoint_inverse(A, R):
    n = len(A)
    M = [[A[i][k].c for k in range(n)] for i in range(n)]
    cols = []
    for col in range(n):
        e = [mpfr(1) if i == col else mpfr(0) for i in range(n)]
        cols.append(_lu_solve(M, e, R))
    return [[Ball(cols[k][i]) for k in range(n)] for i in range(n)]


def _heuristic_radii(system: LinearSystem, approx: CoefficientVector):
    """Fallback radii: delta of the same midpoint solve at doubled precision.

    These are stability estimates, not certificates; the caller marks the
    result heuristic.
    """
    from .hejhal import _lu_solve

    ctx = system.ctx
    R = rounding(ctx.prec)
    wide = rounding(2 * ctx.prec)
    A, b = system.normalized()
    n = len(A)
    M = [[A[i][k].c for k in range(n)] for i in range(n)]
    v = [b[i].c for i in range(n)]
    try:
        hi = _lu_solve(M, v, wide)
    except SingularSystemError:
        hi = None
    radii = []
    for k in range(n):
        x = approx.a(k + 2)
        floor = R.up.mul(R.up.add(x.mag(R), mpfr(1)),
                         R.up.mul(mpfr(4 * n), R.eps))
        if hi is None:
            radii.append(mpfr("inf"))
            continue
        delta = R.up.abs(R.up.sub(x.c, hi[k]))
        radii.append(R.up.add(R.up.mul(delta, mpfr(4)), floor))
    return approx.with_radii(radii)


def automorphy_defect(cand: SpectralCandidate, level: int, samples: int = 8) -> float:
    """Sup over boundary samples of |direct expansion - pullback identity|.

    Points sit just below the fundamental-domain arc, so their reductions
    pair each z with a genuinely different evaluation point; a true
    eigenform with the assumed Atkin-Lehner signs makes both evaluations
    agree up to the series tails and the candidate's own uncertainty.
    """
    return _defect_with_height(cand, level, samples)[0]


def _defect_with_height(cand: SpectralCandidate, level: int, samples: int):
    if samples < 1:
        raise DomainError("need at least one sample point")
    ctx = cand.ctx
    with working_precision(ctx.prec):
        worst = mpfr(0)
        min_height = mpfr("inf")
        R = rounding()
        for i in range(samples):
            theta = math.pi / 3 + (math.pi / 6) * (i + 0.5) / samples
            z = UpperHalfPoint(Ball(mpfr(0.98 * math.cos(theta))),
                               Ball(mpfr(0.98 * math.sin(theta))))
            direct = evaluate_form(cand, z)
            pb = pullback_gamma0n(z, level)
            w = pb.expansion_point()
            ident = evaluate_form(cand, w)
            if ctx.al_sign(pb.al_divisor) == -1:
                ident = -ident
            worst = max(worst, (direct - ident).mag(R))
            min_height = min(min_height, z.y.mig(R), w.y.mig(R))
        return float(worst), float(min_height)


def hecke_residual(coeffs: CoefficientVector, pairs) -> float:
    """Max certain upper bound of |a(m) a(n) - a(mn)| over coprime pairs."""
    worst = mpfr(0)
    R = rounding()
    for m, n in pairs:
        if math.gcd(m, n) != 1:
            raise DomainError("Hecke pairs must be coprime, got (%d, %d)" % (m, n))
        if m * n > len(coeffs):
            raise DomainError("pair (%d, %d) needs coefficients beyond index %d"
                              % (m, n, len(coeffs)))
        gap = (coeffs.a(m) * coeffs.a(n) - coeffs.a(m * n)).mag(R)
        worst = max(worst, gap)
    return float(worst)


def fricke_sign(al_signs) -> int | None:
    """Product of the Atkin-Lehner signs; None when any factor is unknown."""
    out = 1
    for _, s in sorted(dict(al_signs).items()):
        if s is None:
            return None
        if s not in (-1, 1):
            raise DomainError("signs must be +1, -1 or None, got %r" % (s,))
        out *= s
    return out


def determine_al_signs(coeffs: CoefficientVector, level: int):
    """Signs read off the coefficient balls at primes dividing the level.

    For a newform on squarefree level the W_p eigenvalue is -a(p) sqrt(p);
    the sign is determined only when the a(p) ball excludes zero.
    """
    out = {}
    for p in prime_divisors(level):
        if p > len(coeffs):
            out[p] = None
            continue
        s = coeffs.a(p).sign()
        out[p] = {"positive": -1, "negative": 1}.get(s)
    return out


@dataclass
class CertifiedForm:
    """Candidate plus certified coefficient radii and diagnostics.

    ``coefficients`` carry the full radii: linear-solve enclosure plus
    the mean-value spectral term over the whole r-ball, so high indices
    honestly widen (which is exactly what makes some Atkin-Lehner signs
    undeterminable).  ``point_coefficients`` are the enclosure for the
    spectral center alone; diagnostics are computed on those.
    """

    candidate: SpectralCandidate
    coefficients: CoefficientVector
    point_coefficients: CoefficientVector
    enclosure_status: str
    automorphy: float
    automorphy_threshold: float
    hecke: float
    hecke_pairs: tuple
    determined_signs: dict
    fricke: int | None
    declared_tail: float

    @property
    def verified(self) -> bool:
        return self.enclosure_status == VERIFIED


DEFECT_FACTOR = 10.0


def certify(cand: SpectralCandidate, ctx: SolverContext | None = None,
            hecke_pairs=((2, 3), (2, 5), (3, 5)), defect_samples: int = 8) -> CertifiedForm:
    """Re-solve at the candidate's r-ball, enclose, and attach diagnostics.

    The defect threshold is DEFECT_FACTOR times the declared error budget:
    the series tail at the defect sample heights plus the spectral-ball
    propagation 2 |r| rad(r), both of which bound a true form's defect.
    """
    from dataclasses import replace as _rep

    ctx = ctx or cand.ctx
    with working_precision(ctx.prec):
        system = assemble_system(cand.r, ctx, height=ctx.y1, with_derivative=True)
        approx = solve_normalized(system)
        point_system = _rep(system, r=Ball(system.r.c), drows=None)
        coeffs_pt, status_pt = enclose_solution(point_system, approx)
        coeffs, status = enclose_solution(system, approx)
        if status_pt != VERIFIED:
            status = HEURISTIC
        enclosed = SpectralCandidate(r=cand.r, lam=cand.lam,
                                     coefficients=coeffs_pt, ctx=ctx)
        usable_pairs = tuple((m, n) for m, n in hecke_pairs if m * n <= ctx.m)
        hecke = hecke_residual(coeffs_pt, usable_pairs) if usable_pairs else float("nan")
        defect, min_height = _defect_with_height(enclosed, ctx.level, defect_samples)
        R = rounding()
        tail_term = 2.0 * tail_bound(cand.r.c, min_height, ctx.m, ctx.coeff_bound)
        spectral_term = float(R.up.mul(R.up.mul(mpfr(2), R.up.abs(cand.r.c)), cand.r.r))
        threshold = DEFECT_FACTOR * (tail_term + spectral_term)
        det_signs = determine_al_signs(coeffs, ctx.level)
        return CertifiedForm(
            candidate=enclosed,
            coefficients=coeffs,
            point_coefficients=coeffs_pt,
            enclosure_status=status,
            automorphy=defect,
            automorphy_threshold=threshold,
            hecke=hecke,
            hecke_pairs=usable_pairs,
            determined_signs=det_signs,
            fricke=fricke_sign(tuple(det_signs.items())),
            declared_tail=tail_bound(cand.r.c, min(ctx.y1, ctx.y2), ctx.m, ctx.coeff_bound),
        )


