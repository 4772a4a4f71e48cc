"""Midpoint-radius enclosures over MPFR.

A :class:`Ball` is a pair (center, radius) standing for the closed interval
[center - radius, center + radius].  Every operation returns a ball that
contains the exact image of its input balls: centers are rounded to
nearest, radii are propagated with upward rounding plus a bound for the
center's own rounding error.  A ball with infinite radius is the
"whole line" enclosure and is produced instead of anything unsound.

Values are immutable; nothing here mutates shared state beyond the
per-precision context cache, so balls are safe to share between threads.
"""

from __future__ import annotations

import gmpy2
from gmpy2 import mpfr, mpq, mpz

from .errors import DomainError
from .precision import Rounding, rounding

__all__ = [
    "Ball",
    "ComplexBall",
    "ball_make",
    "ball_op",
    "ball_sign",
    "elem_fn",
    "e_unit",
    "pi_ball",
]

_ZERO = mpfr(0)
_ONE = mpfr(1)
_INF = mpfr("inf")

POSITIVE = "positive"
NEGATIVE = "negative"
UNDETERMINED = "undetermined"


def _coerce_center(value, R: Rounding):
    """Convert ``value`` to (center, conversion-radius) at R's precision."""
    if isinstance(value, mpfr):
        c = R.near.add(value, _ZERO)  # re-round to target precision
        if c == value:
            return c, _ZERO
        return c, R.up.abs(R.up.sub(c, value))
    if isinstance(value, int):
        value = mpz(value)
        c = R.near.add(mpfr(0), value)
        if mpq(c) == mpq(value):
            return c, _ZERO
        return c, R.up.abs(R.up.sub(c, mpq(value)))
    if isinstance(value, float):
        return R.near.add(mpfr(value), _ZERO), _ZERO  # binary64 embeds exactly
    if isinstance(value, (str, mpq)):
        if isinstance(value, str):
            try:
                q = _parse_decimal(value)
            except ValueError:
                raise DomainError("cannot parse number: %r" % (value,))
        else:
            q = value
        lo = R.down.add(mpfr(0), q)
        hi = R.up.add(mpfr(0), q)
        if lo == hi:
            return lo, _ZERO
        c = R.near.add(mpfr(0), q)
        return c, R.up.maxnum(R.up.sub(hi, c), R.up.sub(c, lo))
    raise DomainError("cannot build a ball from %r" % (type(value).__name__,))


def _parse_decimal(text: str):
    """Exact rational value of a decimal string like '-1.25e-3'."""
    t = text.strip().lower()
    mant, _, exp = t.partition("e")
    e = int(exp) if exp else 0
    if "." in mant:
        ipart, _, fpart = mant.partition(".")
        e -= len(fpart)
        mant = (ipart + fpart) or "0"
    q = mpq(int(mant))
    return q * mpq(10) ** e if e >= 0 else q / mpq(10) ** (-e)


class Ball:
    """Real enclosure [c - r, c + r] with MPFR center and radius."""

    __slots__ = ("c", "r")

    def __init__(self, center, radius=0, prec=None):
        R = rounding(prec)
        c, widen = _coerce_center(center, R)
        if isinstance(radius, float):
            rad = mpfr(radius)  # binary64 embeds exactly
        elif isinstance(radius, mpfr):
            rad = R.up.add(radius, _ZERO)
        elif isinstance(radius, int):
            rad = R.up.add(mpfr(0), mpz(radius))
        elif isinstance(radius, (str, mpq)):
            q = _parse_decimal(radius) if isinstance(radius, str) else radius
            rad = R.up.add(mpfr(0), q)
        else:
            raise DomainError("radius must be a number, got %r" % (type(radius).__name__,))
        if gmpy2.is_nan(rad) or rad < 0:
            raise DomainError("radius must be nonnegative, got %s" % (radius,))
        if not gmpy2.is_finite(c):
            raise DomainError("center must be finite, got %s" % (center,))
        self.c = c
        self.r = R.up.add(rad, widen) if widen else rad

    @staticmethod
    def _mk(c, r):
        """Trusted fast constructor; c finite mpfr, r nonnegative mpfr."""
        b = Ball.__new__(Ball)
        if gmpy2.is_nan(r):
            r = _INF
        b.c = c
        b.r = r
        return b

    @staticmethod
    def whole_line():
        return Ball._mk(_ZERO, _INF)

    @staticmethod
    def from_endpoints(lo, hi, R: Rounding | None = None):
        R = R or rounding()
        if gmpy2.is_nan(lo) or gmpy2.is_nan(hi):
            return Ball.whole_line()
        c = R.near.mul(R.near.add(lo, hi), R.half)
        if not gmpy2.is_finite(c):
            return Ball.whole_line()
        return Ball._mk(c, R.up.maxnum(R.up.sub(hi, c), R.up.sub(c, lo)))

    # -- queries ---------------------------------------------------------

    def is_whole_line(self):
        return not gmpy2.is_finite(self.r)

    def is_exact(self):
        return self.r == 0

    def lower(self, R: Rounding | None = None):
        return (R or rounding()).down.sub(self.c, self.r)

    def upper(self, R: Rounding | None = None):
        return (R or rounding()).up.add(self.c, self.r)

    def mag(self, R: Rounding | None = None):
        """Upper bound for |x| over the ball."""
        R = R or rounding()
        return R.up.add(R.up.abs(self.c), self.r)

    def mig(self, R: Rounding | None = None):
        """Lower bound for |x| over the ball (0 if it straddles zero)."""
        R = R or rounding()
        lo = R.down.sub(R.down.abs(self.c), self.r)
        return lo if lo > 0 else _ZERO

    def contains(self, value):
        if isinstance(value, Ball):
            qc, qr = mpq(value.c), mpq(value.r)
            return mpq(self.c) - mpq(self.r) <= qc - qr and \
                qc + qr <= mpq(self.c) + mpq(self.r)
        if self.is_whole_line():
            return True
        q = mpq(_parse_decimal(value)) if isinstance(value, str) else mpq(value)
        return mpq(self.c) - mpq(self.r) <= q <= mpq(self.c) + mpq(self.r)

    def intersects(self, other: "Ball"):
        if self.is_whole_line() or other.is_whole_line():
            return True
        d = abs(mpq(self.c) - mpq(other.c))
        return d <= mpq(self.r) + mpq(other.r)

    def sign(self):
        """Certain sign of the enclosed value, or ``undetermined``."""
        if self.is_whole_line():
            return UNDETERMINED
        if mpq(self.c) - mpq(self.r) > 0:
            return POSITIVE
        if mpq(self.c) + mpq(self.r) < 0:
            return NEGATIVE
        return UNDETERMINED

    def midpoint(self):
        return self.c

    def union(self, other: "Ball", R: Rounding | None = None):
        R = R or rounding()
        if self.is_whole_line() or other.is_whole_line():
            return Ball.whole_line()
        lo = min(self.lower(R), other.lower(R))
        hi = max(self.upper(R), other.upper(R))
        return Ball.from_endpoints(lo, hi, R)

    # -- arithmetic ------------------------------------------------------

    @staticmethod
    def _coerce(other):
        if isinstance(other, Ball):
            return other
        if isinstance(other, (int, float, mpfr, mpq)):
            return Ball(other)
        return None

    def __add__(self, other):
        b = Ball._coerce(other)
        if b is None:
            return NotImplemented
        R = rounding()
        c = R.near.add(self.c, b.c)
        if not gmpy2.is_finite(c):
            return Ball.whole_line()
        r = R.up.add(R.up.add(self.r, b.r), R.ulp_bound(c))
        return Ball._mk(c, r)

    __radd__ = __add__

    def __neg__(self):
        R = rounding()
        c = R.near.minus(self.c)
        if R.near.add(c, self.c) != 0:  # center re-rounded at lower precision
            return Ball._mk(c, R.up.add(self.r, R.ulp_bound(c)))
        return Ball._mk(c, self.r)

    def __sub__(self, other):
        b = Ball._coerce(other)
        if b is None:
            return NotImplemented
        return self + (-b)

    def __rsub__(self, other):
        b = Ball._coerce(other)
        if b is None:
            return NotImplemented
        return b + (-self)

    def __mul__(self, other):
        b = Ball._coerce(other)
        if b is None:
            return NotImplemented
        R = rounding()
        c = R.near.mul(self.c, b.c)
        if not gmpy2.is_finite(c):
            return Ball.whole_line()
        r = R.up.add(
            R.up.add(R.up.mul(R.up.abs(self.c), b.r), R.up.mul(R.up.abs(b.c), self.r)),
            R.up.add(R.up.mul(self.r, b.r), R.ulp_bound(c)),
        )
        return Ball._mk(c, r)

    __rmul__ = __mul__

    def __truediv__(self, other):
        b = Ball._coerce(other)
        if b is None:
            return NotImplemented
        R = rounding()
        den_lo = b.mig(R)
        if not den_lo > 0:
            raise DomainError("division by a ball containing zero")
        c = R.near.div(self.c, b.c)
        if not gmpy2.is_finite(c):
            return Ball.whole_line()
        # |a'/b' - c| <= (rad_a + |a.c/b.c| rad_b) / (|b.c| - rad_b) + rounding
        q = R.up.add(R.up.abs(c), R.ulp_bound(c))
        num = R.up.add(self.r, R.up.mul(q, b.r))
        r = R.up.add(R.up.div(num, den_lo), R.ulp_bound(c))
        return Ball._mk(c, r)

    def __rtruediv__(self, other):
        b = Ball._coerce(other)
        if b is None:
            return NotImplemented
        return b / self

    def abs(self):
        R = rounding()
        if self.is_whole_line():
            return Ball.whole_line()
        lo = self.mig(R)
        hi = self.mag(R)
        return Ball.from_endpoints(lo, hi, R)

    def square(self):
        R = rounding()
        if self.is_whole_line():
            return Ball.whole_line()
        lo = self.mig(R)
        hi = self.mag(R)
        lo2 = R.down.mul(lo, lo)
        hi2 = R.up.mul(hi, hi)
        return Ball.from_endpoints(lo2, hi2, R)

    def __repr__(self):
        return "Ball(%s, %s)" % (repr(str(self.c)), repr(str(self.r)))

    def __str__(self):
        return "[%s +/- %s]" % (self.c, self.r)


class ComplexBall:
    """Componentwise complex enclosure."""

    __slots__ = ("re", "im")

    def __init__(self, re: Ball, im: Ball):
        self.re = re
        self.im = im

    def __add__(self, other):
        return ComplexBall(self.re + other.re, self.im + other.im)

    def __mul__(self, other):
        if isinstance(other, ComplexBall):
            return ComplexBall(
                self.re * other.re - self.im * other.im,
                self.re * other.im + self.im * other.re,
            )
        return ComplexBall(self.re * other, self.im * other)

    __rmul__ = __mul__

    def conjugate(self):
        return ComplexBall(self.re, -self.im)

    def abs_squared(self) -> Ball:
        return self.re.square() + self.im.square()

    def __repr__(self):
        return "ComplexBall(%r, %r)" % (self.re, self.im)


# -- elementary functions --------------------------------------------------

_pi_cache: dict[int, Ball] = {}


def pi_ball(prec=None) -> Ball:
    R = rounding(prec)
    b = _pi_cache.get(R.prec)
    if b is None:
        b = Ball.from_endpoints(R.down.const_pi(), R.up.const_pi(), R)
        _pi_cache[R.prec] = b
    return b


def ball_exp(x: Ball) -> Ball:
    R = rounding()
    lo = R.down.exp(x.lower(R))
    hi = R.up.exp(x.upper(R))
    if not gmpy2.is_finite(hi):
        return Ball.whole_line()
    return Ball.from_endpoints(lo, hi, R)


def ball_sqrt(x: Ball) -> Ball:
    R = rounding()
    xl = x.lower(R)
    if gmpy2.is_nan(xl) or xl < 0:
        raise DomainError("sqrt of a ball reaching below zero")
    return Ball.from_endpoints(R.down.sqrt(xl), R.up.sqrt(x.upper(R)), R)


def ball_cosh(x: Ball) -> Ball:
    R = rounding()
    if x.is_whole_line():
        return Ball.whole_line()
    xl, xh = x.lower(R), x.upper(R)
    hi = R.up.cosh(max(R.up.abs(xl), R.up.abs(xh)))
    if not gmpy2.is_finite(hi):
        return Ball.whole_line()
    if xl <= 0 <= xh:
        lo = _ONE
    else:
        lo = R.down.cosh(min(R.down.abs(xl), R.down.abs(xh)))
    return Ball.from_endpoints(lo, hi, R)


def ball_sinh(x: Ball) -> Ball:
    R = rounding()
    if x.is_whole_line():
        return Ball.whole_line()
    lo = R.down.sinh(x.lower(R))
    hi = R.up.sinh(x.upper(R))
    if not (gmpy2.is_finite(lo) and gmpy2.is_finite(hi)):
        return Ball.whole_line()
    return Ball.from_endpoints(lo, hi, R)


def _trig_range(x: Ball, shift_half: bool) -> Ball:
    """Range of cos over x (shift_half=False) or sin (=True, via critical
    points at (k+1/2)pi instead of k pi)."""
    R = rounding()
    one = Ball._mk(_ONE, _ZERO)
    if x.is_whole_line():
        return Ball._mk(_ZERO, _ONE)
    xl, xh = x.lower(R), x.upper(R)
    width = R.up.sub(xh, xl)
    if width >= 7:  # more than a full period
        return Ball._mk(_ZERO, _ONE)
    fn_down, fn_up = (R.down.sin, R.up.sin) if shift_half else (R.down.cos, R.up.cos)
    lo = min(fn_down(xl), fn_down(xh))
    hi = max(fn_up(xl), fn_up(xh))
    pl, ph = R.down.const_pi(), R.up.const_pi()
    # Candidate critical points t_k = (k + offset) pi inside [xl, xh].
    off = R.half if shift_half else _ZERO
    k_lo = int(gmpy2.floor(R.down.sub(R.down.div(xl, ph if xl >= 0 else pl), off))) - 1
    k_hi = int(gmpy2.ceil(R.up.sub(R.up.div(xh, pl if xh >= 0 else ph), off))) + 1
    for k in range(k_lo, k_hi + 1):
        kq = mpq(2 * k + 1, 2) if shift_half else mpq(k)
        t_lo = R.down.mul(pl if kq >= 0 else ph, kq)
        t_hi = R.up.mul(ph if kq >= 0 else pl, kq)
        if t_hi < xl or t_lo > xh:
            continue  # certainly outside
        # cos critical values: +1 at even k, -1 at odd; sin: +1 at even, -1 odd.
        if k % 2 == 0:
            hi = _ONE
        else:
            lo = -_ONE
    lo = max(lo, -_ONE)
    hi = min(hi, _ONE)
    return Ball.from_endpoints(lo, hi, R)


def ball_cos(x: Ball) -> Ball:
    return _trig_range(x, shift_half=False)


def ball_sin(x: Ball) -> Ball:
    return _trig_range(x, shift_half=True)


def e_unit(x: Ball) -> ComplexBall:
    """Enclosure of exp(2 pi i x); the center is reduced modulo 1 first."""
    R = rounding()
    limit = mpfr(2) ** min(R.prec, 62)
    if x.is_whole_line() or x.r >= 1 or x.c >= limit or x.c <= -limit:
        u = Ball._mk(_ZERO, _ONE)
        return ComplexBall(u, u)
    k = mpz(rounding(max(R.prec, 70)).near.rint(x.c))
    wide = rounding(R.prec + 64)
    frac = wide.near.sub(x.c, k)  # exact: fits in prec + 64 bits
    x_red = Ball._mk(R.near.add(frac, _ZERO), x.r)
    if x_red.c != frac:
        x_red = Ball._mk(x_red.c, R.up.add(x.r, R.ulp_bound(x_red.c)))
    angle = x_red * (pi_ball(R.prec) * 2)
    return ComplexBall(ball_cos(angle), ball_sin(angle))


# -- uniform entry points as named operations ------------------------------

def ball_make(center, radius, prec=None) -> Ball:
    """Enclosure [center - radius, center + radius]; radius must be >= 0."""
    return Ball(center, radius, prec)


_BIN_OPS = {
    "add": Ball.__add__,
    "sub": Ball.__sub__,
    "mul": Ball.__mul__,
    "div": Ball.__truediv__,
}

_ELEM_FNS = {
    "exp": ball_exp,
    "cos": ball_cos,
    "sin": ball_sin,
    "sqrt": ball_sqrt,
    "cosh": ball_cosh,
}


def ball_op(kind: str, a: Ball, b: Ball) -> Ball:
    try:
        op = _BIN_OPS[kind]
    except KeyError:
        raise DomainError("unknown operation %r" % (kind,))
    return op(a, b)


def elem_fn(kind: str, x: Ball) -> Ball:
    try:
        fn = _ELEM_FNS[kind]
    except KeyError:
        raise DomainError("unknown function %r" % (kind,))
    return fn(x)


def ball_sign(a: Ball) -> str:
    return a.sign()
