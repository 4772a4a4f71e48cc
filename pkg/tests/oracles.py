"""Independent reference implementations used only by the test suite.

These deliberately avoid the package's own code paths: mpmath quadrature
for the Bessel integral, an exhaustive bounded-entry matrix search for
fundamental-domain reduction, exact-fraction Cramer solves, and a
high-precision Gaussian elimination oracle.
"""

from __future__ import annotations

from fractions import Fraction

import mpmath


def kbessel_quadrature(r, y, tol=1e-15, dps=50):
    """Composite high-resolution quadrature of the defining integral.

    integral_0^inf exp(-y cosh t) cos(r t) dt, cut at T where the crude
    tail estimate exp(-y cosh T)/(y sinh T) drops below tol, integrated on
    explicit subintervals short enough that the quadrature sees every
    oscillation of cos(r t).  Arguments are taken as exact binary floats.
    The working dps grows with y because the integrand scale e^(-y)
    shrinks the integral relative to mpmath's unit-scale error targets.
    """
    dps = max(dps, 30 + int(0.6 * float(y)) - int(mpmath.log10(tol)))
    with mpmath.workdps(dps):
        rm = mpmath.mpf(r)
        ym = mpmath.mpf(y)
        T = mpmath.mpf(1)
        while mpmath.exp(-ym * mpmath.cosh(T)) / (ym * mpmath.sinh(T)) > tol:
            T += mpmath.mpf("0.25")
        pieces = max(4, int(mpmath.ceil(T * max(2, abs(float(r))) / 2)), int(mpmath.ceil(T * 2)))

        def run(npieces):
            knots = [T * k / npieces for k in range(npieces + 1)]
            return mpmath.quad(
                lambda t: mpmath.exp(-ym * mpmath.cosh(t)) * mpmath.cos(rm * t),
                knots, error=True, maxdegree=8)

        coarse, est1 = run(pieces)
        val, est2 = run(2 * pieces)
        tail = mpmath.exp(-ym * mpmath.cosh(T)) / (ym * mpmath.sinh(T))
        # error band: tail cut + resolution-doubling difference + mpmath's
        # own convergence estimate
        err = tail + 4 * abs(val - coarse) + 2 * est2 + abs(val) * mpmath.mpf(10) ** (-dps + 12)
        return val, err


def kbessel_reference(r, y, dps=40):
    """Cross-check path: mpmath's own Bessel K with imaginary order."""
    dps = max(dps, 25 + int(0.6 * float(y)))
    with mpmath.workdps(dps):
        return mpmath.besselk(mpmath.mpc(0, mpmath.mpf(r)), mpmath.mpf(y)).real


def brute_force_reduction(x, y, bound=50):
    """Best fundamental-domain representative by exhaustive matrix search.

    Enumerates unimodular integer matrices with |entries| <= bound and
    returns the image of x + iy with maximal imaginary part that lies in
    the standard domain (|Re| <= 1/2 + tol, |z| >= 1 - tol).
    """
    import numpy as np

    mats = _bounded_sl2z(bound)
    z = complex(x, y)
    a, b, c, d = (mats[:, 0], mats[:, 1], mats[:, 2], mats[:, 3])
    den = c * z + d
    w = (a * z + b) / den
    tol = 1e-9
    ok = (np.abs(w.real) <= 0.5 + tol) & (np.abs(w) >= 1 - tol)
    if not ok.any():
        return None
    ws = w[ok]
    best = ws[np.argmax(ws.imag)]
    return complex(best)


_bounded_cache = {}


def _bounded_sl2z(bound):
    import numpy as np

    got = _bounded_cache.get(bound)
    if got is not None:
        return got
    from math import gcd

    rows = []
    for c in range(-bound, bound + 1):
        for d in range(-bound, bound + 1):
            if gcd(c, d) != 1:
                continue
            # particular solution of a d - b c = 1, then shift a,b by (c,d)
            a0, b0 = _bezout(d, -c)
            for k in range(-bound, bound + 1):
                a = a0 + k * c
                b = b0 + k * d
                if abs(a) <= bound and abs(b) <= bound:
                    rows.append((a, b, c, d))
    arr = np.array(rows, dtype=np.int64)
    _bounded_cache[bound] = arr
    return arr


def _bezout(u, v):
    """(x, y) with x*u + y*v == 1 for coprime u, v."""
    old_r, r = u, v
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r == -1:
        old_s, old_t = -old_s, -old_t
    return old_s, old_t


def cramer_solve(matrix, rhs):
    """Exact rational solve by Cramer's rule (fraction determinants)."""
    n = len(rhs)
    A = [[Fraction(matrix[i][j]) for j in range(n)] for i in range(n)]
    b = [Fraction(v) for v in rhs]
    det = _fraction_det(A)
    if det == 0:
        raise ZeroDivisionError("singular oracle system")
    out = []
    for j in range(n):
        Aj = [[A[i][k] if k != j else b[i] for k in range(n)] for i in range(n)]
        out.append(_fraction_det(Aj) / det)
    return out


def _fraction_det(A):
    n = len(A)
    A = [row[:] for row in A]
    det = Fraction(1)
    for col in range(n):
        piv = next((i for i in range(col, n) if A[i][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            A[col], A[piv] = A[piv], A[col]
            det = -det
        det *= A[col][col]
        for i in range(col + 1, n):
            f = A[i][col] / A[col][col]
            for k in range(col, n):
                A[i][k] -= f * A[col][k]
    return det


def highprec_solve(matrix_centers, rhs_centers, prec_bits):
    """Gaussian elimination on gmpy2 floats at the given precision.

    Independent of the package's solver: plain partial pivoting, used as
    the 4x-precision oracle.
    """
    import gmpy2

    ctx = gmpy2.context(precision=prec_bits)
    n = len(rhs_centers)
    A = [[gmpy2.mpfr(matrix_centers[i][j], prec_bits) for j in range(n)] for i in range(n)]
    b = [gmpy2.mpfr(rhs_centers[i], prec_bits) for i in range(n)]
    for col in range(n):
        piv = max(range(col, n), key=lambda i: abs(A[i][col]))
        if A[piv][col] == 0:
            raise ZeroDivisionError("singular oracle system")
        if piv != col:
            A[col], A[piv] = A[piv], A[col]
            b[col], b[piv] = b[piv], b[col]
        for i in range(col + 1, n):
            f = ctx.div(A[i][col], A[col][col])
            for k in range(col, n):
                A[i][k] = ctx.sub(A[i][k], ctx.mul(f, A[col][k]))
            b[i] = ctx.sub(b[i], ctx.mul(f, b[col]))
    x = [gmpy2.mpfr(0)] * n
    for i in reversed(range(n)):
        s = b[i]
        for k in range(i + 1, n):
            s = ctx.sub(s, ctx.mul(A[i][k], x[k]))
        x[i] = ctx.div(s, A[i][i])
    return x
