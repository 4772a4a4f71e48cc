"""Integer matrix group machinery for Gamma0(N), squarefree N.

The pullback of a point into the classical fundamental domain runs in
ball arithmetic, but everything group-theoretic (membership, Atkin-Lehner
decompositions) is exact integer arithmetic, so those facts carry no
error radii at all.

Level-N evaluation identity.  Let z* = gamma z be the SL(2,Z) pullback
and write gamma^-1 = (a', b'; c', d').  Put g = gcd(c', N), Q = N/g and
j = d' * (g * (c'/g))^-1 mod Q.  Then gamma^-1 = delta * W * A as Moebius
maps, where delta lies in Gamma0(N), W = (Qx, y; Nz, Qw) is an integer
Atkin-Lehner representative of determinant Q, and A(u) = (u + j)/Q.
Hence any Gamma0(N)-invariant eigenfunction f of the W_Q involutions
satisfies

    f(z) = eps_Q * f((z* + j) / Q).

The factorization is verified here exactly in integers for every
pullback, so the identity never rests on floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import gmpy2

from .ball import Ball
from .errors import DomainError, MaassError, PrecisionError
from .precision import rounding

__all__ = [
    "GroupElement",
    "UpperHalfPoint",
    "PullbackResult",
    "moebius",
    "pullback_sl2z",
    "pullback_gamma0n",
    "is_gamma0n",
    "cusp_classes",
    "al_matrix",
    "prime_divisors",
    "is_squarefree",
]


@dataclass(frozen=True)
class GroupElement:
    """Integer 2x2 matrix (a, b; c, d) acting by Moebius transformation."""

    a: int
    b: int
    c: int
    d: int

    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "GroupElement":
        if self.det() != 1:
            raise DomainError("inverse is only defined for determinant-1 elements")
        return GroupElement(self.d, -self.b, -self.c, self.a)

    def adjugate(self) -> "GroupElement":
        return GroupElement(self.d, -self.b, -self.c, self.a)

    def psl_normalized(self) -> "GroupElement":
        """Fix the sign ambiguity: c > 0, or c == 0 and d > 0."""
        if self.c < 0 or (self.c == 0 and self.d < 0):
            return GroupElement(-self.a, -self.b, -self.c, -self.d)
        return self

    def is_identity(self) -> bool:
        return (self.a, self.b, self.c, self.d) == (1, 0, 0, 1)


IDENTITY = GroupElement(1, 0, 0, 1)
S_INVERSION = GroupElement(0, -1, 1, 0)
T_SHIFT = GroupElement(1, 1, 0, 1)


class UpperHalfPoint:
    """Point x + iy with ball coordinates, y certainly positive."""

    __slots__ = ("x", "y")

    def __init__(self, x, y):
        self.x = x if isinstance(x, Ball) else Ball(x)
        self.y = y if isinstance(y, Ball) else Ball(y)
        if not self.y.mig() > 0:
            raise DomainError("point is not determinably in the upper half-plane")

    def __repr__(self):
        return "UpperHalfPoint(%r, %r)" % (self.x, self.y)


def moebius(g: GroupElement, z: UpperHalfPoint) -> UpperHalfPoint:
    """Image (a z + b) / (c z + d); requires positive determinant.

    Im(gz) = det(g) Im(z) / |cz + d|^2.
    """
    det = g.det()
    if det <= 0:
        raise DomainError("moebius action needs positive determinant, got %d" % det)
    cx_d = z.x * g.c + g.d
    cy = z.y * g.c
    den = cx_d.square() + cy.square()
    if not den.mig() > 0:
        raise DomainError("denominator ball contains zero")
    num_x = (z.x * g.a + g.b) * cx_d + (z.y * z.y) * (g.a * g.c)
    x_out = num_x / den
    y_out = z.y * det / den
    return UpperHalfPoint(x_out, y_out)


@dataclass(frozen=True)
class PullbackResult:
    """Reduction of a point into the standard fundamental domain.

    ``point`` lies in {|Re| <= 1/2, |z| >= 1} up to ball radii and equals
    ``map`` applied to the input.  For level N, ``al_divisor`` (Q) and
    ``shift`` (j) define the expansion point (point + j)/Q at which a
    Gamma0(N) Atkin-Lehner eigenform takes the value eps_Q^-1 f(input);
    ``witness`` is the Gamma0(N) element certifying the decomposition.
    """

    point: UpperHalfPoint
    map: GroupElement
    al_divisor: int = 1
    shift: int = 0
    witness: GroupElement = IDENTITY

    def expansion_point(self) -> UpperHalfPoint:
        if self.al_divisor == 1 and self.shift == 0:
            return self.point
        q = self.al_divisor
        return UpperHalfPoint((self.point.x + self.shift) / q, self.point.y / q)


def _round_center(x: Ball) -> int:
    R = rounding(max(rounding().prec, 70))
    return int(gmpy2.mpz(R.near.rint(x.c)))


def pullback_sl2z(z: UpperHalfPoint, max_steps: int = 4000) -> PullbackResult:
    """Reduce z into {|Re z| <= 1/2, |z| >= 1} by T- and S-moves.

    Boundary ties within the ball radii are accepted on either side.
    Raises PrecisionError when the radii are too wide to decide the
    reduction within the step budget.
    """
    x, y = z.x, z.y
    if not y.mig() > 0:
        raise DomainError("pullback needs a determinably positive imaginary part")
    g = IDENTITY
    for _ in range(max_steps):
        t = _round_center(x)
        if t:
            x = x - t
            g = GroupElement(1, -t, 0, 1) @ g
        s = x.square() + y.square()
        lo, hi = s.lower(), s.upper()
        if lo >= 1:
            break
        if hi > 1 > lo:
            break  # straddles the unit circle: boundary tie, accept
        x, y = -(x / s), y / s
        g = S_INVERSION @ g
    else:
        raise PrecisionError("fundamental-domain reduction did not converge; "
                             "radii too wide or precision too low")
    g = g.psl_normalized()
    return PullbackResult(point=UpperHalfPoint(x, y), map=g)


def is_squarefree(n: int) -> bool:
    if n < 1:
        return False
    m = n
    p = 2
    while p * p <= m:
        if m % p == 0:
            m //= p
            if m % p == 0:
                return False
        else:
            p += 1 if p == 2 else 2
    return True


def prime_divisors(n: int) -> list[int]:
    out = []
    m = n
    p = 2
    while p * p <= m:
        if m % p == 0:
            out.append(p)
            while m % p == 0:
                m //= p
        p += 1 if p == 2 else 2
    if m > 1:
        out.append(m)
    return out


def _require_squarefree(n) -> int:
    if not isinstance(n, int) or n < 1:
        raise DomainError("level must be a positive integer, got %r" % (n,))
    if not is_squarefree(n):
        raise DomainError("level %d is not squarefree" % n)
    return n


def is_gamma0n(g: GroupElement, level: int) -> bool:
    """Lower-left congruence test; the input must be unimodular."""
    if g.det() != 1:
        raise DomainError("membership test needs determinant 1, got %d" % g.det())
    if level < 1:
        raise DomainError("level must be positive")
    return g.c % level == 0


def cusp_classes(level: int) -> list[int]:
    """Divisors of a squarefree level, one per Atkin-Lehner cusp class."""
    _require_squarefree(level)
    return sorted(d for d in range(1, level + 1) if level % d == 0)


def al_matrix(q: int, level: int) -> GroupElement:
    """Integer representative (Qa, b; Nc, Qd) of W_Q with determinant Q.

    Q = 1 gives the identity; Q = N gives the classical Fricke matrix
    (0, -1; N, 0); otherwise the lower-left entry is N and b is the
    minimal nonnegative choice.
    """
    _require_squarefree(level)
    if q < 1 or level % q != 0:
        raise DomainError("%d does not divide the level %d" % (q, level))
    g = level // q
    if gcd(q, g) != 1:
        raise DomainError("%d is not an exact divisor of %d" % (q, level))
    if q == 1:
        return IDENTITY
    if q == level:
        return GroupElement(0, -1, level, 0)
    alpha = pow(q, -1, g)
    b = (q * alpha - 1) // g
    w = GroupElement(q * alpha, b, level, q)
    if w.det() != q:
        raise MaassError("Atkin-Lehner construction failed for Q=%d, N=%d" % (q, level))
    return w


def pullback_gamma0n(z: UpperHalfPoint, level: int, max_steps: int = 4000) -> PullbackResult:
    """SL(2,Z) pullback plus exact Atkin-Lehner decomposition data.

    See the module docstring for the evaluation identity the returned
    (al_divisor, shift, witness) certify.
    """
    _require_squarefree(level)
    base = pullback_sl2z(z, max_steps=max_steps)
    gamma = base.map
    inv = gamma.inverse()
    c_low, d_low = inv.c, inv.d
    g = gcd(c_low, level)
    q = level // g
    if q == 1:
        return PullbackResult(point=base.point, map=gamma, al_divisor=1,
                              shift=0, witness=gamma.inverse())
    c2 = c_low // g
    j = (d_low * pow(g * c2, -1, q)) % q
    w = al_matrix(q, level)
    total = w @ GroupElement(1, j, 0, q)
    adj = GroupElement(total.d, -total.b, -total.c, total.a)
    p = inv @ adj
    if p.a % q or p.b % q or p.c % q or p.d % q:
        raise MaassError("Atkin-Lehner decomposition failed: nonintegral witness")
    delta = GroupElement(p.a // q, p.b // q, p.c // q, p.d // q)
    if delta.det() != 1 or delta.c % level:
        raise MaassError("Atkin-Lehner decomposition failed: witness outside the group")
    return PullbackResult(point=base.point, map=gamma, al_divisor=q,
                          shift=j, witness=delta)
