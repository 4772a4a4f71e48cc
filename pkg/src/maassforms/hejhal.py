"""Spectral solver: horocycle sampling, linear system, eigenvalue search.

A weight-0 cusp form with spectral parameter r on Gamma0(N) is handled
through its cosine (even) or sine (odd) expansion

    f(x + iy) = sum_{n >= 1} a(n) sqrt(y) K_{ir}(2 pi n y) cs(2 pi n x),

with a(1) = 1.  Sampling the truncated expansion at 2Q points
x_j = (j - 1/2)/(2Q) on a horocycle of height Y and projecting onto
cs(2 pi n x) produces, after pulling every sample into the fundamental
domain and applying the Atkin-Lehner evaluation identity, one linear
equation per target index n.  The discrete projection is exact up to
index aliasing at |m| >= 2Q - M, and the pullback evaluations are exact
up to the series tails at the pullback heights; both bounds enter the
system as explicit right-hand-side error balls, so a solved coefficient
vector is accountable to the true form.

All sample abscissae are exact rationals, so mirrored points fold the
2Q-point sum onto j = 1..Q with no additional error.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import gmpy2
from gmpy2 import mpfr, mpq

from .ball import Ball, ball_cos, ball_sin, ball_sqrt, pi_ball
from .errors import DomainError, PrecisionError, SingularSystemError, SpuriousBracketError
from .geometry import UpperHalfPoint, prime_divisors, pullback_gamma0n
from .kbessel import kbessel_ir, kbessel_pair, series_tail
from .precision import rounding, working_precision

__all__ = [
    "EXIT_HEIGHT",
    "SolverContext",
    "CoefficientVector",
    "LinearSystem",
    "SpectralCandidate",
    "Bracket",
    "truncation_M",
    "horocycle_points",
    "assemble_system",
    "solve_normalized",
    "eigenvalue_functional",
    "scan",
    "refine",
    "evaluate_form",
]

EXIT_HEIGHT = math.sqrt(3.0) / 2.0  # lowest height of the fundamental domain
PARITIES = ("even", "odd")
DEFAULT_COEFF_BOUND = 20.0
FUNCTIONAL_TEST_SET = (2, 3, 5)


def truncation_M(r, y, eps, coeff_bound=DEFAULT_COEFF_BOUND, prec=None) -> int:
    """Smallest truncation index whose proven series tail is below eps.

    The tail envelope is uniform in r and in the phase, so the result
    holds for every height >= y.
    """
    if not float(eps) > 0:
        raise DomainError("eps must be positive")
    if not float(y) > 0:
        raise DomainError("height must be positive")
    for m in range(1, 100001):
        if series_tail(m, y, coeff_bound, prec) < mpfr(eps):
            return m
    raise PrecisionError("tolerance %s unreachable at height %s" % (eps, y))


def horocycle_points(q: int) -> list[mpq]:
    """2q exact sample abscissae (j - 1/2)/(2q), j = 1-q .. q."""
    if q < 1:
        raise DomainError("sample parameter must be >= 1")
    return [mpq(2 * j - 1, 4 * q) for j in range(1 - q, q + 1)]


@dataclass(frozen=True)
class SolverContext:
    """Everything that pins down one solver configuration.

    ``q`` is the sampling parameter (2q horocycle points), ``m`` the
    truncation index, ``al_signs`` the assumed Atkin-Lehner eigenvalue of
    every prime divisor of the level.
    """

    level: int
    parity: str
    y1: float
    y2: float
    q: int
    m: int
    al_signs: tuple[tuple[int, int], ...] = ()
    prec: int = 128
    eps: float = 1e-12
    coeff_bound: float = DEFAULT_COEFF_BOUND

    def __post_init__(self):
        from .geometry import is_squarefree

        if not is_squarefree(self.level):
            raise DomainError("level %r is not squarefree" % (self.level,))
        if self.parity not in PARITIES:
            raise DomainError("parity must be 'even' or 'odd', got %r" % (self.parity,))
        if not (0 < self.y1 < EXIT_HEIGHT and 0 < self.y2 < EXIT_HEIGHT):
            raise DomainError("horocycle heights must lie in (0, %.6f)" % EXIT_HEIGHT)
        if self.y1 == self.y2:
            raise DomainError("the two horocycle heights must differ")
        if self.m < 1 or self.q < 1 or 2 * self.q <= self.m:
            raise DomainError("need 2q > m for an overdetermined sampling")
        if self.q <= self.m:
            raise DomainError("need q > m so aliased indices stay out of the system")
        if not self.eps > 0:
            raise DomainError("eps must be positive")
        signs = dict(self.al_signs)
        primes = prime_divisors(self.level)
        if sorted(signs) != primes:
            raise DomainError("al_signs must cover exactly the primes %s" % primes)
        if any(s not in (-1, 1) for s in signs.values()):
            raise DomainError("al_signs values must be +1 or -1")

    @classmethod
    def create(cls, level, parity, r_max, *, al_signs=None, eps=1e-12,
               prec=128, coeff_bound=DEFAULT_COEFF_BOUND,
               y1=None, y2=None) -> "SolverContext":
        """Standard configuration: Y1 = 0.8, Y2 = 0.7 of the exit height,
        q = m + 20, truncation from the tail bound at the lowest height the
        truncated expansion is evaluated at.  For level N that is the
        divisor-scaled expansion-point floor EXIT_HEIGHT / N, which is why
        composite levels need markedly larger systems."""
        y_floor = min(0.7 * EXIT_HEIGHT, EXIT_HEIGHT / level)
        m = truncation_M(r_max, y_floor, eps, coeff_bound, prec)
        # keep the smallest diagonal K-value within the precision horizon,
        # or the high-index equations drown in rounding noise
        cap = 0.45 * prec * math.log(2.0) / (2.0 * math.pi * m)
        if y1 is None:
            y1 = min(0.8 * EXIT_HEIGHT, cap)
        if y2 is None:
            y2 = min(0.7 * EXIT_HEIGHT, 0.875 * cap)
        if al_signs is None:
            al_signs = {p: 1 for p in prime_divisors(level)}
        return cls(level=level, parity=parity, y1=y1, y2=y2, q=m + 20, m=m,
                   al_signs=tuple(sorted(al_signs.items())), prec=prec,
                   eps=eps, coeff_bound=coeff_bound)

    def al_sign(self, divisor: int) -> int:
        """Eigenvalue of W_Q for an exact divisor Q: product over p | Q."""
        sign = 1
        for p, s in self.al_signs:
            if divisor % p == 0:
                sign *= s
        return sign

    def with_doubled(self, which: str) -> "SolverContext":
        if which == "m":
            return replace(self, m=2 * self.m, q=max(self.q, 2 * self.m + 20))
        if which == "q":
            return replace(self, q=2 * self.q)
        raise DomainError("can double 'm' or 'q', got %r" % (which,))


class CoefficientVector:
    """Balls a(1..m) with a(1) = 1 exactly; parity fixes negative indices."""

    __slots__ = ("parity", "entries")

    def __init__(self, parity: str, entries: list[Ball]):
        if parity not in PARITIES:
            raise DomainError("bad parity %r" % (parity,))
        if not entries or not (entries[0].c == 1 and entries[0].r == 0):
            raise DomainError("normalization requires a(1) = 1 exactly")
        self.parity = parity
        self.entries = list(entries)

    def __len__(self):
        return len(self.entries)

    def a(self, n: int) -> Ball:
        """a(n) for n in 1..m or -m..-1 (parity-determined)."""
        if n == 0 or abs(n) > len(self.entries):
            raise DomainError("coefficient index %d out of range" % n)
        val = self.entries[abs(n) - 1]
        if n < 0 and self.parity == "odd":
            return -val
        return val

    def with_radii(self, radii) -> "CoefficientVector":
        out = [self.entries[0]]
        for ball, rad in zip(self.entries[1:], radii):
            R = rounding()
            out.append(Ball._mk(ball.c, R.up.add(ball.r, mpfr(rad))))
        return CoefficientVector(self.parity, out)


@dataclass
class LinearSystem:
    """Rows of sum_m A[n][m] a(m) = e_n, |e_n| <= row_error, n = 1..m.

    Dropping the n = 1 row and moving the a(1) column to the right-hand
    side yields the square normalized system actually solved.  When the
    system was assembled with derivative data, ``rows`` hold the values
    at the r-ball center and ``drows`` enclose d(entry)/dr over the whole
    r-ball, so entry(r') lies in rows + drows * (r' - center).
    """

    rows: list
    row_error: object
    r: Ball
    height: float
    ctx: SolverContext
    drows: list | None = None

    @property
    def size(self) -> int:
        return len(self.rows)

    def normalized(self):
        """(A, b): (m-1)^2 matrix over a(2..m) and its right-hand side."""
        m = self.size
        A = [[self.rows[n][k] for k in range(1, m)] for n in range(1, m)]
        b = [-self.rows[n][0] + Ball(0, self.row_error) for n in range(1, m)]
        return A, b

    def residuals(self, coeffs: CoefficientVector) -> list:
        """All m row sums under the given coefficients (error balls included)."""
        out = []
        for n in range(self.size):
            acc = Ball(0)
            for k in range(self.size):
                acc = acc + self.rows[n][k] * coeffs.a(k + 1)
            out.append(acc + Ball(0, self.row_error))
        return out


def _cs(parity: str, angle: Ball) -> Ball:
    return ball_cos(angle) if parity == "even" else ball_sin(angle)


def _cs_rational(parity, n, x_q: mpq, two_pi: Ball) -> Ball:
    """cs(2 pi n x) for exact rational x, reduced mod 1 exactly."""
    frac = (n * x_q) % 1
    if frac > mpq(1, 2):
        frac -= 1
    return _cs(parity, two_pi * frac)


def _quad_tol(ctx: SolverContext, arg: float) -> float:
    """Absolute K-Bessel tolerance for one argument.

    Scaled by the decay envelope so every matrix entry is accurate
    relative to its own row's magnitude; a flat tolerance would bias the
    nearly-vanishing high-index diagonal entries and drag the functional's
    root by orders more than the truncation budget.
    """
    floor = 2.0 ** (-(ctx.prec - 8))
    try:
        env = math.exp(-arg) * math.sqrt(math.pi / (2.0 * arg))
    except (OverflowError, ValueError):
        env = 0.0
    return max(floor, ctx.eps * 1e-4 * env)


def assemble_system(r, ctx: SolverContext, height: float | None = None,
                    with_derivative: bool = False) -> LinearSystem:
    """Ball matrix of the sampled, pulled-back, projected expansion at r.

    ``r`` may be a ball.  Without derivative data, every K-Bessel value
    encloses the whole spectral interval directly.  With it, the rows are
    evaluated at the ball center and a derivative matrix over the ball is
    returned alongside, which certification uses in mean-value form to
    avoid the dependency blow-up of entrywise interval perturbations.
    """
    y = ctx.y1 if height is None else height
    if not 0 < y < EXIT_HEIGHT:
        raise DomainError("height %.6f does not leave the fundamental domain" % y)
    with working_precision(ctx.prec):
        R = rounding()
        rb = r if isinstance(r, Ball) else Ball(r)
        two_pi = pi_ball() * 2
        y_exact = mpfr(y)

        samples = []
        trunc_sum = mpfr(0)
        for jj in range(1, ctx.q + 1):
            x_j = mpq(2 * jj - 1, 4 * ctx.q)
            pb = pullback_gamma0n(UpperHalfPoint(Ball(x_j), Ball(y_exact)), ctx.level)
            w = pb.expansion_point()
            eps_j = ctx.al_sign(pb.al_divisor)
            samples.append((x_j, w, eps_j, ball_sqrt(w.y)))
            trunc_sum = R.up.add(
                trunc_sum, series_tail(ctx.m, w.y.mig(R), ctx.coeff_bound))
        trunc_avg = R.up.div(trunc_sum, mpfr(ctx.q))
        alias = series_tail(2 * ctx.q - ctx.m - 1, y, ctx.coeff_bound)
        row_error = R.up.add(trunc_avg, alias)

        def bessel(arg: Ball):
            tol = _quad_tol(ctx, float(arg.c))
            if with_derivative:
                return kbessel_pair(rb, arg, prec=ctx.prec, abs_tol=tol)
            return kbessel_ir(rb, arg, prec=ctx.prec, abs_tol=tol), None

        # B[j][m] = eps_j sqrt(wy) K_{ir}(2 pi (m+1) wy) cs(2 pi (m+1) wx)
        B = []
        dB = []
        for x_j, w, eps_j, root in samples:
            row = []
            drow = []
            for m_idx in range(1, ctx.m + 1):
                kb, dkb = bessel(two_pi * m_idx * w.y)
                phase = _cs(ctx.parity, two_pi * m_idx * w.x)
                factor = root * phase
                term = factor * kb
                row.append(term if eps_j == 1 else -term)
                if with_derivative:
                    dterm = factor * dkb
                    drow.append(dterm if eps_j == 1 else -dterm)
            B.append(row)
            dB.append(drow)

        root_y = ball_sqrt(Ball(y_exact))
        rows = []
        drows = [] if with_derivative else None
        for n in range(1, ctx.m + 1):
            proj = [_cs_rational(ctx.parity, n, s[0], two_pi) for s in samples]
            row = []
            drow = []
            for m_idx in range(ctx.m):
                acc = Ball(0)
                dacc = Ball(0)
                for j in range(ctx.q):
                    acc = acc + B[j][m_idx] * proj[j]
                    if with_derivative:
                        dacc = dacc + dB[j][m_idx] * proj[j]
                row.append(acc / ctx.q)
                if with_derivative:
                    drow.append(dacc / ctx.q)
            kb_n, dkb_n = bessel(two_pi * n * Ball(y_exact))
            row[n - 1] = row[n - 1] - root_y * kb_n / 2
            rows.append(row)
            if with_derivative:
                drow[n - 1] = drow[n - 1] - root_y * dkb_n / 2
                drows.append(drow)
        return LinearSystem(rows=rows, row_error=row_error, r=rb, height=y,
                            ctx=ctx, drows=drows)


def solve_normalized(system: LinearSystem) -> CoefficientVector:
    """Midpoint LU solve of the normalized square system.

    Radii are zero pending certification; a(1) is pinned to 1.
    """
    ctx = system.ctx
    with working_precision(ctx.prec):
        R = rounding()
        A, b = system.normalized()
        n = len(A)
        M = [[row[k].c for k in range(n)] for row in A]
        v = [bi.c for bi in b]
        x = _lu_solve(M, v, R)
        entries = [Ball(1)] + [Ball(xi) for xi in x]
        return CoefficientVector(ctx.parity, entries)


def _functional_noise(system: LinearSystem, coeffs: CoefficientVector):
    """Worst-case shift of the functional from the error budget.

    Per equation the budget is the rhs error bound plus the entry radii
    (quadrature enclosures) weighted by the solution; each test index
    feels its own row of the inverse (a transpose solve), so the bound
    adapts to the very uneven conditioning across coefficients.
    """
    ctx = system.ctx
    with working_precision(ctx.prec):
        R = rounding()
        A, b = system.normalized()
        n = len(A)
        budgets = []
        for i in range(n):
            s = b[i].r
            for k in range(n):
                s = R.up.add(s, R.up.mul(A[i][k].r, coeffs.a(k + 2).mag(R)))
            budgets.append(s)
        Mt = [[A[k][i].c for k in range(n)] for i in range(n)]
        total = mpfr(0)
        for idx in FUNCTIONAL_TEST_SET:
            if idx > ctx.m:
                continue
            e = [mpfr(1) if i == idx - 2 else mpfr(0) for i in range(n)]
            row = _lu_solve(Mt, e, R)
            amp = mpfr(0)
            for v, budget in zip(row, budgets):
                amp = R.up.add(amp, R.up.mul(R.up.abs(v), budget))
            total = R.up.add(total, amp)
        return R.up.mul(total, mpfr(2))  # both heights


def _lu_solve(M, v, R):
    """Plain LU with partial pivoting in MPFR, nearest rounding."""
    ctx = R.near
    n = len(v)
    M = [row[:] for row in M]
    v = v[:]
    scale = max((R.up.abs(M[i][k]) for i in range(n) for k in range(n)), default=mpfr(0))
    if not scale > 0:
        raise SingularSystemError("zero matrix")
    floor = R.up.mul(scale, mpfr(2) ** (-(R.prec - 8)))
    for col in range(n):
        piv = max(range(col, n), key=lambda i: abs(M[i][col]))
        if not R.up.abs(M[piv][col]) > floor:
            raise SingularSystemError("pivot below threshold at column %d" % col)
        if piv != col:
            M[col], M[piv] = M[piv], M[col]
            v[col], v[piv] = v[piv], v[col]
        for i in range(col + 1, n):
            f = ctx.div(M[i][col], M[col][col])
            if f == 0:
                continue
            for k in range(col, n):
                M[i][k] = ctx.sub(M[i][k], ctx.mul(f, M[col][k]))
            v[i] = ctx.sub(v[i], ctx.mul(f, v[col]))
    x = [mpfr(0)] * n
    for i in reversed(range(n)):
        s = v[i]
        for k in range(i + 1, n):
            s = ctx.sub(s, ctx.mul(M[i][k], x[k]))
        x[i] = ctx.div(s, M[i][i])
    return x


def eigenvalue_functional(r, ctx: SolverContext) -> mpfr:
    """Coefficient mismatch between the two heights; vanishes at spectra.

    g(r) = sum over the test set {2, 3, 5} of a_Y1(n) - a_Y2(n), taken on
    solve centers.  A sign change of g brackets a spectral parameter.
    """
    if ctx.y1 == ctx.y2:
        raise DomainError("functional needs two distinct heights")
    c1 = solve_normalized(assemble_system(r, ctx, height=ctx.y1))
    c2 = solve_normalized(assemble_system(r, ctx, height=ctx.y2))
    with working_precision(ctx.prec):
        R = rounding()
        g = mpfr(0)
        for n in FUNCTIONAL_TEST_SET:
            if n <= ctx.m:
                g = R.near.add(g, R.near.sub(c1.a(n).c, c2.a(n).c))
        return g


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float
    g_lo: float
    g_hi: float
    parity: str
    al_signs: tuple


def _functional_worker(args):
    r, ctx = args
    try:
        return float(eigenvalue_functional(r, ctx))
    except SingularSystemError:
        return None


def scan(r_lo: float, r_hi: float, step: float, ctx: SolverContext,
         threads: int = 1) -> list[Bracket]:
    """Sign-change brackets of the functional on a uniform grid."""
    if step <= 0:
        raise DomainError("step must be positive")
    if r_hi < r_lo:
        return []
    count = int(math.floor((r_hi - r_lo) / step + 1e-9)) + 1
    grid = [r_lo + i * step for i in range(count)]
    jobs = [(r, ctx) for r in grid]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(_functional_worker, jobs, chunksize=4))
    else:
        values = [_functional_worker(j) for j in jobs]
    out = []
    for i in range(count - 1):
        g0, g1 = values[i], values[i + 1]
        if g0 is None or g1 is None:
            continue
        if g0 == 0.0:
            g0 = -g1  # exact grid zero: force the enclosing bracket
        if (g0 < 0 < g1) or (g1 < 0 < g0):
            out.append(Bracket(lo=grid[i], hi=grid[i + 1], g_lo=g0, g_hi=g1,
                               parity=ctx.parity, al_signs=ctx.al_signs))
    return out


@dataclass(frozen=True)
class SpectralCandidate:
    """Refined spectral parameter with midpoint-solve coefficients."""

    r: Ball
    lam: Ball
    coefficients: CoefficientVector
    ctx: SolverContext

    @property
    def m(self) -> int:
        return len(self.coefficients)


def refine(bracket, ctx: SolverContext, tol: float) -> SpectralCandidate:
    """Shrink a sign-change bracket below tol; secant with bisection guard.

    The bracket endpoints are tracked in MPFR at the working precision,
    so tolerances far below float spacing are honored.  The returned
    r-ball radius is the final half-width inflated by the functional's
    noise floor (error budget through the inverse over the observed
    slope); it is a self-consistency radius, not a spectral certificate.
    """
    if tol <= 0:
        raise DomainError("tolerance must be positive")
    with working_precision(ctx.prec):
        R = rounding()
        near = R.near

        def g_at(rv):
            try:
                return eigenvalue_functional(rv, ctx)
            except SingularSystemError:
                raise SpuriousBracketError("singular system inside the bracket")

        lo = mpfr(bracket.lo)
        hi = mpfr(bracket.hi)
        g_lo = getattr(bracket, "g_lo", None)
        g_hi = getattr(bracket, "g_hi", None)
        g_lo = g_at(lo) if g_lo is None else mpfr(g_lo)
        g_hi = g_at(hi) if g_hi is None else mpfr(g_hi)
        if g_lo == 0 and g_hi == 0:
            raise SpuriousBracketError("functional vanishes identically on the bracket")
        if (g_lo > 0) == (g_hi > 0):
            raise SpuriousBracketError("no sign change over [%s, %s]" % (lo, hi))
        slope0 = near.div(R.up.abs(near.sub(g_hi, g_lo)), near.sub(hi, lo))
        tol_m = mpfr(tol)
        for _ in range(400):
            width = near.sub(hi, lo)
            if width < tol_m:
                break
            mid = near.mul(near.add(lo, hi), R.half)
            denom = near.sub(g_hi, g_lo)
            if denom != 0:
                sec = near.sub(lo, near.div(near.mul(g_lo, width), denom))
                margin = near.mul(width, mpfr("0.1"))
                if near.add(lo, margin) < sec < near.sub(hi, margin):
                    mid = sec
            g_mid = g_at(mid)
            if g_mid == 0:
                lo = hi = mid
                break
            if (g_lo > 0) == (g_mid > 0):
                lo, g_lo = mid, g_mid
            else:
                hi, g_hi = mid, g_mid
        else:
            raise PrecisionError("bracket refinement exceeded the iteration budget")
        center = near.mul(near.add(lo, hi), R.half)
        sys1 = assemble_system(center, ctx, height=ctx.y1)
        coeffs = solve_normalized(sys1)
        # noise floor of g over the slope, with 2x slope-estimation headroom
        noise = R.up.div(R.up.mul(_functional_noise(sys1, coeffs), mpfr(2)),
                         max(slope0, mpfr("1e-30")))
        radius = R.up.add(R.up.mul(near.sub(hi, lo), R.half), noise)
        r_ball = Ball(center, radius)
        lam = Ball(1) / 4 + r_ball.square()
        return SpectralCandidate(r=r_ball, lam=lam, coefficients=coeffs, ctx=ctx)


def evaluate_form(cand: SpectralCandidate, z: UpperHalfPoint) -> Ball:
    """Truncated expansion at z, inflated by the proven series tail."""
    ctx = cand.ctx
    with working_precision(ctx.prec):
        R = rounding()
        if not z.y.mig(R) > 0:
            raise DomainError("evaluation point must have positive height")
        two_pi = pi_ball() * 2
        root = ball_sqrt(z.y)
        x_red = _reduce_mod_one(z.x, R)
        acc = Ball(0)
        for n in range(1, cand.m + 1):
            arg = two_pi * n * z.y
            kb = kbessel_ir(cand.r, arg, prec=ctx.prec,
                            abs_tol=_quad_tol(ctx, float(arg.c)))
            acc = acc + cand.coefficients.a(n) * kb * _cs(ctx.parity, two_pi * n * x_red)
        tail = series_tail(cand.m, z.y.mig(R), ctx.coeff_bound)
        return root * acc + Ball(0, tail)


def _reduce_mod_one(x: Ball, R) -> Ball:
    """x - round(x) computed exactly, so translated points evaluate identically."""
    if x.r >= 1 or not gmpy2.is_finite(x.c):
        return x
    wide = rounding(R.prec + 64)
    k = gmpy2.mpz(wide.near.rint(x.c))
    if k == 0:
        return x
    frac = wide.near.sub(x.c, k)
    out = Ball(frac, x.r)
    return out
