"""Working-precision management on top of MPFR.

All computations run at an explicit mantissa precision.  The current
precision is thread-local, so concurrent solves at different precisions
never interfere.  Directed rounding is native MPFR rounding: every bound
in this package is computed with an upward- or downward-rounded context,
never by post-hoc fudge factors.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager

import gmpy2

DEFAULT_PRECISION = 128

_state = threading.local()


class Rounding:
    """Cached triple of MPFR contexts (nearest / up / down) at one precision.

    The context objects are used only through their arithmetic methods,
    which are pure functions; the global gmpy2 context is never touched.
    """

    __slots__ = ("prec", "near", "up", "down", "eps", "half")

    def __init__(self, prec: int):
        if prec < 8 or prec > 1 << 20:
            raise ValueError("unreasonable precision: %r" % (prec,))
        self.prec = prec
        self.near = gmpy2.context(precision=prec, round=gmpy2.RoundToNearest)
        self.up = gmpy2.context(precision=prec, round=gmpy2.RoundUp)
        self.down = gmpy2.context(precision=prec, round=gmpy2.RoundDown)
        # 2^(1-p) >= 2 ulp relative spread of a nearest-rounded result.
        self.eps = gmpy2.mpfr(2) ** (1 - prec)  # power of two: exact
        self.half = gmpy2.mpfr("0.5", prec)

    def ulp_bound(self, x):
        """Upper bound for the rounding error of a nearest-rounded x.

        MPFR results are correctly rounded, so the true value differs from
        x by at most half an ulp; |x| * 2^(1-p) covers that with slack.
        A nearest-rounded zero is exact for MPFR's huge exponent range.
        """
        if x == 0:
            return _ZERO
        return self.up.mul(self.up.abs(x), self.eps)


_ZERO = gmpy2.mpfr(0)
_rounding_cache: dict[int, Rounding] = {}
_cache_lock = threading.Lock()


def rounding(prec: int | None = None) -> Rounding:
    """Rounding bundle for ``prec`` (default: current working precision)."""
    if prec is None:
        prec = get_precision()
    r = _rounding_cache.get(prec)
    if r is None:
        with _cache_lock:
            r = _rounding_cache.get(prec)
            if r is None:
                r = Rounding(prec)
                _rounding_cache[prec] = r
    return r


def get_precision() -> int:
    """Current working precision in bits for this thread."""
    return getattr(_state, "prec", DEFAULT_PRECISION)


@contextmanager
def working_precision(prec: int):
    """Temporarily set the thread's working precision.

    >>> with working_precision(256):
    ...     pass
    """
    rounding(prec)  # validate eagerly
    old = getattr(_state, "prec", None)
    _state.prec = prec
    try:
        yield
    finally:
        if old is None:
            del _state.prec
        else:
            _state.prec = old
