"""Rigorous K-Bessel values of imaginary order.

K_{ir}(y) is computed from the cosine-transform representation

    K_{ir}(y) = integral_0^inf exp(-y cosh t) cos(r t) dt        (y > 0)

by composite Gauss-Legendre panels on [0, T] plus the tail bound

    integral_T^inf exp(-y cosh t) dt <= exp(-y cosh T) / (y sinh T),

which follows from cosh t >= cosh T + sinh(T) (t - T).  Each panel error
is bounded through analyticity of the integrand: a function analytic and
bounded by S on the Bernstein ellipse E_rho has n-point Gauss-Legendre
error at most (64/15) S rho^(-2n) / (1 - rho^(-2)) on [-1, 1].  The
integrand is entire, and on the ellipse of a panel [a, b] (half-width hh,
height V = 1.875 hh, rho = 4)

    |exp(-y cosh z) cos(r z)| <= exp(-y cos(V) cosh(u0)) cosh(r V),

with u0 a lower bound for |Re z| over the ellipse, because
Re cosh(u + iv) = cosh(u) cos(v) and |cos(w)| <= cosh(Im w).

Everything that feeds a radius is computed with directed rounding; float
arithmetic only picks parameters (T, panel count, node count), never
bounds.
"""

from __future__ import annotations

import math

import gmpy2
from gmpy2 import mpfr, mpq

from .ball import Ball, ball_exp, ball_sqrt
from .errors import DomainError, PrecisionError
from .precision import Rounding, rounding, working_precision
from .quadrature import legendre_rule

__all__ = [
    "kbessel_ir",
    "kbessel_decay_point",
    "decay_envelope",
    "series_tail",
]

_RHO_BITS_PER_NODE = 4  # rho = 4 gives rho^(-2n) = 2^(-4n)
_ELLIPSE_HEIGHT = "1.875"  # (rho - 1/rho) / 2 for rho = 4
_ELLIPSE_WIDTH = "2.125"  # (rho + 1/rho) / 2


def _as_ball(v, what) -> Ball:
    if isinstance(v, Ball):
        return v
    try:
        return Ball(v)
    except DomainError:
        raise DomainError("%s must be a real number or Ball, got %r" % (what, v))


def decay_envelope(y) -> Ball:
    """Upper bound e^(-y) sqrt(pi/(2y)) for |K_{ir}(y)|, any real r.

    |K_{ir}(y)| <= K_0(y) since |cos| <= 1, and cosh t >= 1 + t^2/2 gives
    K_0(y) <= e^(-y) integral e^(-y t^2 / 2) dt = e^(-y) sqrt(pi/(2y)).
    """
    yb = _as_ball(y, "y")
    if not yb.mig() > 0:
        raise DomainError("envelope requires y > 0")
    R = rounding()
    pi = Ball.from_endpoints(R.down.const_pi(), R.up.const_pi(), R)
    return ball_exp(-yb) * ball_sqrt(pi / (yb * 2))


def kbessel_decay_point(r, eps) -> float:
    """Smallest convenient y0 with a proven |K_{ir}(y)| bound < eps for y >= y0.

    Uses the monotone envelope from :func:`decay_envelope`; the result is
    independent of r because the envelope is.
    """
    eps_b = _as_ball(eps, "eps")
    if not eps_b.mig() > 0:
        raise DomainError("eps must be positive")
    hi = 1.0
    for _ in range(6000):
        if decay_envelope(Ball(mpfr(hi))).upper() < eps_b.mig():
            break
        hi *= 1.5
    else:
        raise PrecisionError("decay point out of range for eps=%s" % (eps,))
    lo = min(1e-6, hi / 2)
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        if decay_envelope(Ball(mpfr(mid))).upper() < eps_b.mig():
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-9 * hi:
            break
    return hi


def series_tail(m: int, y, coeff_bound=20, prec=None):
    """Upper bound for sum_{n > m} C n^(1/2) sqrt(y) |K_{ir}(2 pi n y)|.

    Each term is at most (C/2) e^(-2 pi n y) by the decay envelope, so the
    sum is bounded by the geometric series value
    (C/2) e^(-2 pi y (m+1)) / (1 - e^(-2 pi y)).  Returns an mpfr upper
    bound (valid for every real r and every x-phase of the series).
    """
    if m < 0:
        raise DomainError("truncation index must be nonnegative")
    with working_precision(prec or rounding().prec):
        R = rounding()
        yb = _as_ball(y, "y")
        y_lo = yb.mig(R)
        if not y_lo > 0:
            raise DomainError("series tail requires y > 0")
        two_pi_y = R.down.mul(R.down.mul(mpfr(2), R.down.const_pi()), y_lo)
        q = R.up.exp(R.up.minus(two_pi_y))  # e^(-2 pi y), rounded up
        if not q < 1:
            return mpfr("inf")
        num = R.up.exp(R.up.mul(R.up.minus(two_pi_y), mpfr(m + 1)))
        num = R.up.mul(num, R.up.div(mpfr(coeff_bound), mpfr(2)))
        return R.up.div(num, R.down.sub(mpfr(1), q))


def _choose_tail_cut(yf: float, target_log2: float) -> float:
    """Float heuristic for T; the actual bound is verified rigorously."""
    need = target_log2 * math.log(2.0) + 4.0
    t = math.acosh(max(1.0 + need / yf, 1.0 + 1e-8))
    return max(t, 0.5)


def _tail_bound(y, t_cut, R: Rounding):
    """Rigorous upper bound e^(-y cosh T)/(y sinh T) for the [T, inf) tail."""
    ch = R.down.cosh(t_cut)
    sh = R.down.sinh(t_cut)
    expo = R.up.minus(R.down.mul(y, ch))
    den = R.down.mul(y, sh)
    return R.up.div(R.up.exp(expo), den)


def _panel_error(kind, r, y, mid, hh, n, R: Rounding):
    """Upper bound for one panel's n-point Gauss-Legendre error."""
    height = R.up.mul(hh, mpfr(_ELLIPSE_HEIGHT))
    cos_v = R.down.cos(height)  # height < pi/2 by construction
    u_lo = R.down.sub(mid, R.up.mul(hh, mpfr(_ELLIPSE_WIDTH)))
    ch_u = R.down.cosh(u_lo) if u_lo > 0 else mpfr(1)
    expo = R.up.minus(R.down.mul(R.down.mul(y, cos_v), ch_u))
    sup = R.up.mul(R.up.exp(expo), R.up.cosh(R.up.mul(R.up.abs(r), height)))
    if kind == "t_sin":
        z_max = R.up.add(R.up.add(R.up.abs(mid), R.up.mul(hh, mpfr(_ELLIPSE_WIDTH))), height)
        sup = R.up.mul(sup, z_max)
    scale = R.up.mul(hh, mpq(1024, 225))  # (64/15) / (1 - rho^-2) for rho = 4
    err = R.up.mul(R.up.mul(scale, sup), mpfr(2) ** (-_RHO_BITS_PER_NODE * n))
    return err


def _mul_intervals(a_lo, a_hi, b_lo, b_hi, dn, up):
    """Directed interval product (no assumptions on signs)."""
    lo = min(dn.mul(a_lo, b_lo), dn.mul(a_lo, b_hi), dn.mul(a_hi, b_lo), dn.mul(a_hi, b_hi))
    hi = max(up.mul(a_lo, b_lo), up.mul(a_lo, b_hi), up.mul(a_hi, b_lo), up.mul(a_hi, b_hi))
    return lo, hi


def _panel_sum(kind, r, y, rule, mid: Ball, hh: Ball, R: Rounding) -> Ball:
    """sum_i w_i f(mid + hh x_i) as a directed-endpoint interval.

    Equivalent to summing :func:`_integrand` balls but without per-node
    ball allocations.  t >= 0 on every panel.  The cos/sin ranges over the
    (tiny) node intervals use endpoint values padded by (width^2)/2, which
    dominates any interior extremum since |cos''|, |sin''| <= 1.
    """
    dn, up = R.down, R.up
    one = mpfr(1)
    m_lo, m_hi = mid.lower(R), mid.upper(R)
    h_lo, h_hi = hh.lower(R), hh.upper(R)
    acc_lo = mpfr(0)
    acc_hi = mpfr(0)
    trig_dn = dn.cos if kind == "cos" else dn.sin
    trig_up = up.cos if kind == "cos" else up.sin
    for node, weight in rule:
        x_lo, x_hi = node.lower(R), node.upper(R)
        if x_lo >= 0:
            t_lo = dn.add(m_lo, dn.mul(h_lo, x_lo))
            t_hi = up.add(m_hi, up.mul(h_hi, x_hi))
        else:
            t_lo = dn.add(m_lo, dn.mul(h_hi, x_lo))
            t_hi = up.add(m_hi, up.mul(h_lo if x_hi < 0 else h_hi, x_hi))
        # e^(-y cosh t): decreasing in t for t >= 0
        e_lo = dn.exp(dn.minus(up.mul(y, up.cosh(t_hi))))
        e_hi = up.exp(up.minus(dn.mul(y, dn.cosh(t_lo))))
        # range of cos/sin(r t) over [r t_lo, r t_hi]
        p_lo = dn.mul(r, t_lo)
        p_hi = up.mul(r, t_hi)
        w = up.sub(p_hi, p_lo)
        pad = up.mul(up.mul(w, w), R.half)
        c_lo = dn.sub(min(trig_dn(p_lo), trig_dn(p_hi)), pad)
        c_hi = up.add(max(trig_up(p_lo), trig_up(p_hi)), pad)
        if c_lo < -1:
            c_lo = -one
        if c_hi > 1:
            c_hi = one
        f_lo, f_hi = _mul_intervals(e_lo, e_hi, c_lo, c_hi, dn, up)
        if kind == "t_sin":
            f_lo, f_hi = _mul_intervals(f_lo, f_hi, t_lo, t_hi, dn, up)
        f_lo, f_hi = _mul_intervals(f_lo, f_hi, weight.lower(R), weight.upper(R), dn, up)
        acc_lo = dn.add(acc_lo, f_lo)
        acc_hi = up.add(acc_hi, f_hi)
    out_lo, out_hi = _mul_intervals(acc_lo, acc_hi, h_lo, h_hi, dn, up)
    return Ball.from_endpoints(out_lo, out_hi, R)


def _oscillatory_integral(kind, r, y, R: Rounding, target_log2: float) -> Ball:
    """Rigorous integral over [0, inf) of the 'cos' or 't_sin' integrand."""
    yf, rf = float(y), abs(float(r))
    t_cut = _choose_tail_cut(yf, target_log2)
    tail = _tail_bound(y, mpfr(t_cut), R)
    tail_goal = mpfr(2) ** int(-(target_log2 + 2))
    for _ in range(200):
        if tail <= tail_goal:
            break
        t_cut += 0.25
        tail = _tail_bound(y, mpfr(t_cut), R)
    if kind == "t_sin":
        # integral_T^inf t e^(-y cosh t) dt <= e^(-y cosh T)(T/(y sh T) + (y sh T)^-2)
        sh = R.down.mul(y, R.down.sinh(mpfr(t_cut)))
        factor = R.up.add(mpfr(t_cut), R.up.div(mpfr(1), sh))
        tail = R.up.mul(tail, R.up.maxnum(factor, mpfr(1)))

    n_panels = max(1, math.ceil(t_cut / 1.0))
    hh_f = t_cut / (2 * n_panels)
    # panel error ~ (64/15) hh e^(rV) 2^(-4n); solve for n with float slack
    ln2 = math.log(2.0)
    v_f = hh_f * 1.875
    need = target_log2 * ln2 + max(0.0, rf * v_f) + math.log(4.6 * (1 + t_cut)) + 2.0
    n_nodes = max(6, math.ceil(need / (2 * math.log(4.0))))
    n_nodes += n_nodes % 2

    rule = legendre_rule(n_nodes, R.prec)
    total = Ball(0, tail)
    t_hi = Ball(mpfr(t_cut))
    for k in range(n_panels):
        a = t_hi * mpq(k, n_panels)
        b = t_hi * mpq(k + 1, n_panels)
        mid = (a + b) * mpq(1, 2)
        hh = (b - a) * mpq(1, 2)
        err = _panel_error(kind, r, y, mid.lower(R), hh.mag(R), n_nodes, R)
        total = total + _panel_sum(kind, r, y, rule, mid, hh, R) + Ball(0, err)
    return total


def _kbessel_point(r, y, R: Rounding, target_log2: float) -> Ball:
    val = _oscillatory_integral("cos", r, y, R, target_log2)
    env = decay_envelope(Ball(y)).upper(R)
    if val.r > env:  # the envelope is an independent bound; intersect
        lo = max(val.lower(R), R.down.minus(env))
        hi = min(val.upper(R), env)
        if lo > hi:
            raise PrecisionError("inconsistent K-Bessel enclosures")
        val = Ball.from_endpoints(lo, hi, R)
    return val


def _dk_dr_point(r, y, R: Rounding, target_log2: float) -> Ball:
    """d/dr K_{ir}(y) = -integral t e^(-y cosh t) sin(r t) dt."""
    return -_oscillatory_integral("t_sin", r, y, R, target_log2)


def _deriv_env_y(y_lo, R: Rounding):
    """|d/dy K_{ir}(y)| <= e^(1/(2y) - y) sqrt(2 pi / y), decreasing in y."""
    inv = R.up.div(mpfr(1), R.down.mul(mpfr(2), y_lo))
    expo = R.up.sub(inv, y_lo)
    root = R.up.sqrt(R.up.div(R.up.mul(mpfr(2), R.up.const_pi()), y_lo))
    return R.up.mul(R.up.exp(expo), root)


def _deriv_env_r(y_lo, R: Rounding):
    """|d/dr K_{ir}(y)| <= integral t e^(-y(1+t^2/2)) dt = e^(-y)/y."""
    return R.up.div(R.up.exp(R.up.minus(y_lo)), y_lo)


def _deriv2_env_r(y_lo, R: Rounding):
    """|d^2/dr^2 K_{ir}(y)| <= e^(-y) sqrt(pi/2) y^(-3/2)."""
    root = R.up.sqrt(R.up.div(R.up.const_pi(), mpfr(2)))
    y32 = R.down.mul(y_lo, R.down.sqrt(y_lo))
    return R.up.div(R.up.mul(R.up.exp(R.up.minus(y_lo)), root), y32)


def _deriv2_env_mixed(y_lo, R: Rounding):
    """|d^2/(dr dy) K_{ir}(y)| <= e^(1/(2y) - y)(sqrt(2 pi/y)/y + 2/y).

    From |d2K| <= integral t cosh t e^(-y cosh t) dt, cosh t <= e^t and
    cosh t >= 1 + t^2/2, completing the square in the exponent.
    """
    inv2 = R.up.div(mpfr(1), R.down.mul(mpfr(2), y_lo))
    expo = R.up.exp(R.up.sub(inv2, y_lo))
    root = R.up.sqrt(R.up.div(R.up.mul(mpfr(2), R.up.const_pi()), y_lo))
    inner = R.up.div(R.up.add(root, mpfr(2)), y_lo)
    return R.up.mul(expo, inner)


def kbessel_pair(r, y, prec=None, abs_tol=None) -> tuple[Ball, Ball]:
    """(K at the r-ball center, dK/dr over the whole r-ball), y a ball or point.

    The first component carries no r-spread at all; the second encloses
    the derivative for every parameter in the r-ball, so
    K(r') in K_c + dK * (r' - center) for all r' there (mean value form).
    """
    with working_precision(prec or rounding().prec):
        R = rounding()
        rb = _as_ball(r, "r")
        yb = _as_ball(y, "y")
        if rb.lower(R) < 0:
            raise DomainError("kbessel_pair needs r >= 0 (dK/dr is odd in r)")
        y_lo = yb.mig(R)
        if not y_lo > 0:
            raise DomainError("kbessel_pair requires y > 0")
        if abs_tol is None:
            target_log2 = float(R.prec - 14)
        else:
            target_log2 = max(8.0, -math.log2(float(abs_tol)))
        val = _kbessel_point(rb.c, yb.c, R, target_log2)
        dk = _dk_dr_point(rb.c, yb.c, R, target_log2)
        if yb.r != 0:
            val = Ball._mk(val.c, R.up.add(val.r, R.up.mul(_deriv_env_y(y_lo, R), yb.r)))
            dk = Ball._mk(dk.c, R.up.add(dk.r, R.up.mul(_deriv2_env_mixed(y_lo, R), yb.r)))
        if rb.r != 0:
            spread = R.up.mul(_deriv2_env_r(y_lo, R), rb.r)
            dk = Ball._mk(dk.c, R.up.add(dk.r, spread))
        return val, dk


def kbessel_ir(r, y, prec=None, abs_tol=None) -> Ball:
    """Enclosure of K_{ir}(y) for real r and y > 0.

    ``r`` and ``y`` may be numbers or balls.  Ball arguments are handled
    by evaluating at the centers and inflating with proven derivative
    envelopes (first order in y; second-order Taylor in r when the radius
    is large enough that the blunt envelope would dominate).  The result
    is real; radii may degrade to the whole line rather than ever being
    silently wrong.
    """
    with working_precision(prec or rounding().prec):
        R = rounding()
        rb = _as_ball(r, "r").abs()
        yb = _as_ball(y, "y")
        y_lo = yb.mig(R)
        if not y_lo > 0:
            raise DomainError("kbessel_ir requires y > 0")
        if abs_tol is None:
            target_log2 = float(R.prec - 14)
        else:
            t = float(abs_tol)
            if t <= 0:
                raise DomainError("abs_tol must be positive")
            target_log2 = max(8.0, -math.log2(t))

        val = _kbessel_point(rb.c, yb.c, R, target_log2)
        if yb.r != 0:
            val = Ball._mk(val.c, R.up.add(val.r, R.up.mul(_deriv_env_y(y_lo, R), yb.r)))
        if rb.r != 0:
            blunt = R.up.mul(_deriv_env_r(y_lo, R), rb.r)
            quad = R.up.mul(_deriv2_env_r(y_lo, R), R.up.mul(rb.r, rb.r))
            if rb.r < mpfr("0.5") and quad < blunt:
                dk = _dk_dr_point(rb.c, yb.c, R, target_log2)
                spread = R.up.add(R.up.mul(dk.mag(R), rb.r), quad)
                val = Ball._mk(val.c, R.up.add(val.r, spread))
            else:
                val = Ball._mk(val.c, R.up.add(val.r, blunt))
        return val
