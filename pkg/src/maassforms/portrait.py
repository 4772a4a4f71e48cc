"""Deterministic portrait rendering to binary PPM (P6).

Pixel (row i, column j), row-major from the top-left, maps to

    x = x_min + (j + 1/2) (x_max - x_min) / width
    y = y_max - (i + 1/2) (y_max - y_min) / height

and the truncated expansion value v there is colored through
t = tanh(v / scale) with a fixed diverging palette: NEG_COLOR at t = -1,
MID_COLOR at 0, POS_COLOR at +1, linear in RGB on each half.  Values are
midpoint evaluations at a fixed reduced precision, so the bytes depend
only on the record, the window, and the dimensions, never on threading.
"""

from __future__ import annotations

from dataclasses import dataclass

import gmpy2
from gmpy2 import mpfr, mpq

from .errors import DomainError
from .precision import rounding, working_precision

__all__ = ["PortraitConfig", "render_portrait", "NEG_COLOR", "MID_COLOR", "POS_COLOR"]

NEG_COLOR = (38, 70, 162)
MID_COLOR = (247, 247, 239)
POS_COLOR = (170, 29, 45)

RENDER_PREC = 64


@dataclass(frozen=True)
class PortraitConfig:
    """Window, dimensions, and value scale.

    ``scale`` = None picks the scale from the rendered values themselves
    (half the maximal |value| over the pixel grid), which is deterministic
    and keeps the palette useful across the huge dynamic range of
    K-Bessel-suppressed forms.
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    width: int
    height: int
    scale: float | None = None

    def __post_init__(self):
        if not (self.x_min < self.x_max and 0 < self.y_min < self.y_max):
            raise DomainError("window must satisfy x_min < x_max, 0 < y_min < y_max")
        if self.width < 1 or self.height < 1:
            raise DomainError("pixel dimensions must be at least 1x1")
        if self.scale is not None and not self.scale > 0:
            raise DomainError("value scale must be positive")


def _mix(a, b, t: float) -> tuple:
    return tuple(int((1 - t) * ca + t * cb + 0.5) for ca, cb in zip(a, b))


def _color(t: float) -> tuple:
    t = max(-1.0, min(1.0, t))
    if t < 0:
        rgb = _mix(MID_COLOR, NEG_COLOR, -t)
    else:
        rgb = _mix(MID_COLOR, POS_COLOR, t)
    return tuple(max(0, min(255, c)) for c in rgb)


def render_portrait(rec, cfg: PortraitConfig) -> bytes:
    """Binary PPM of the record's truncated expansion over the window.

    K-Bessel values depend only on the pixel row, so they are computed
    once per (row, index) pair; per pixel only the x-phase varies.
    """
    from .kbessel import kbessel_ir

    with working_precision(RENDER_PREC):
        R = rounding()
        two_pi = R.near.mul(mpfr(2), R.near.const_pi())
        m = len(rec.coefficients)
        r_c = mpfr(rec.spectral_r[0])
        coeff = [mpfr(rec.coefficients[n][0]) for n in range(m)]
        trig = R.near.sin if rec.parity == "odd" else R.near.cos

        x_span = mpq(mpfr(cfg.x_max)) - mpq(mpfr(cfg.x_min))
        y_span = mpq(mpfr(cfg.y_max)) - mpq(mpfr(cfg.y_min))
        values = []
        peak = mpfr(0)
        for i in range(cfg.height):
            y_q = mpq(mpfr(cfg.y_max)) - y_span * mpq(2 * i + 1, 2 * cfg.height)
            y = R.near.add(mpfr(0), y_q)
            root = R.near.sqrt(y)
            basis = []
            for n in range(1, m + 1):
                arg = R.near.mul(two_pi, R.near.mul(mpfr(n), y))
                kb = kbessel_ir(r_c, arg, prec=RENDER_PREC, abs_tol=1e-12)
                basis.append(R.near.mul(R.near.mul(coeff[n - 1], root), kb.c))
            row = []
            for j in range(cfg.width):
                x_q = mpq(mpfr(cfg.x_min)) + x_span * mpq(2 * j + 1, 2 * cfg.width)
                x = R.near.add(mpfr(0), x_q)
                val = mpfr(0)
                for n in range(1, m + 1):
                    phase = trig(R.near.mul(two_pi, R.near.mul(mpfr(n), x)))
                    val = R.near.add(val, R.near.mul(basis[n - 1], phase))
                row.append(val)
                peak = max(peak, R.up.abs(val))
            values.append(row)
        if cfg.scale is not None:
            scale = mpfr(cfg.scale)
        elif peak > 0:
            scale = R.near.mul(peak, R.half)
        else:
            scale = mpfr(1)

        header = ("P6 %d %d 255\n" % (cfg.width, cfg.height)).encode("ascii")
        out = bytearray(header)
        for row in values:
            for val in row:
                t = float(R.near.tanh(R.near.div(val, scale)))
                out.extend(_color(t))
        return bytes(out)
