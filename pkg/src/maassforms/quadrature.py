"""Certified Gauss-Legendre rules.

Nodes are enclosed by sign changes of the Legendre polynomial evaluated in
ball arithmetic, so every returned node ball provably contains the true
root; weights are evaluated on those node balls.  Combined with an
analytic bound for the quadrature error of functions analytic in a
Bernstein ellipse (see kbessel.py), this yields fully rigorous panel
integration.
"""

from __future__ import annotations

import math
import threading

import gmpy2
from gmpy2 import mpfr

from .ball import Ball
from .errors import PrecisionError
from .precision import rounding, working_precision

_rule_cache: dict[tuple[int, int], list[tuple[Ball, Ball]]] = {}
_rule_lock = threading.Lock()


def _legendre_pair(n: int, x, ctx):
    """(P_n(x), P_n'(x)) by the three-term recurrence in one MPFR context."""
    p0 = mpfr(1)
    p1 = x
    d0 = mpfr(0)
    d1 = mpfr(1)
    for k in range(1, n):
        a = ctx.div(mpfr(2 * k + 1), mpfr(k + 1))
        b = ctx.div(mpfr(k), mpfr(k + 1))
        p2 = ctx.sub(ctx.mul(ctx.mul(a, x), p1), ctx.mul(b, p0))
        d2 = ctx.add(ctx.mul(a, ctx.add(p1, ctx.mul(x, d1))), ctx.mul(mpfr(-1), ctx.mul(b, d0)))
        p0, p1 = p1, p2
        d0, d1 = d1, d2
    return p1, d1


def _legendre_ball(n: int, x: Ball) -> Ball:
    """P_n over the ball x, containment-true."""
    p0 = Ball(1)
    p1 = x
    for k in range(1, n):
        p2 = (p1 * x) * gmpy2.mpq(2 * k + 1, k + 1) - p0 * gmpy2.mpq(k, k + 1)
        p0, p1 = p1, p2
    return p1


def _legendre_dball(n: int, x: Ball) -> Ball:
    p0, p1 = Ball(1), x
    d0, d1 = Ball(0), Ball(1)
    for k in range(1, n):
        a = gmpy2.mpq(2 * k + 1, k + 1)
        b = gmpy2.mpq(k, k + 1)
        p2 = (p1 * x) * a - p0 * b
        d2 = (p1 + x * d1) * a - d0 * b
        p0, p1 = p1, p2
        d0, d1 = d1, d2
    return d1


def legendre_rule(n: int, prec: int) -> list[tuple[Ball, Ball]]:
    """Certified nodes and weights of the n-point rule on [-1, 1].

    ``n`` must be even.  Returns all n pairs, nodes ascending.
    """
    if n % 2:
        raise ValueError("node count must be even")
    key = (n, prec)
    rule = _rule_cache.get(key)
    if rule is not None:
        return rule
    with _rule_lock:
        rule = _rule_cache.get(key)
        if rule is not None:
            return rule
        rule = _build_rule(n, prec)
        _rule_cache[key] = rule
        return rule


def _build_rule(n: int, prec: int) -> list[tuple[Ball, Ball]]:
    work = rounding(prec + 96)
    ctx = work.near
    half: list[tuple[Ball, Ball]] = []
    tiny = mpfr(2) ** (-(prec + 24))
    with working_precision(prec):
        for i in range(1, n // 2 + 1):
            x = mpfr(math.cos(math.pi * (i - 0.25) / (n + 0.5)), prec + 96)
            step = mpfr(1)
            for _ in range(80):
                p, d = _legendre_pair(n, x, ctx)
                step = ctx.div(p, d)
                x = ctx.sub(x, step)
                if work.up.abs(step) < tiny:
                    break
            delta = max(work.up.mul(work.up.abs(step), mpfr(16)), tiny)
            node = None
            for _ in range(24):
                lo = work.down.sub(x, delta)
                hi = work.up.add(x, delta)
                s_lo = _eval_sign(n, lo, prec + 96)
                s_hi = _eval_sign(n, hi, prec + 96)
                if s_lo != 0 and s_hi != 0 and s_lo != s_hi:
                    node = Ball.from_endpoints(lo, hi, rounding(prec))
                    break
                delta = work.up.mul(delta, mpfr(16))
            if node is None:
                raise PrecisionError("could not certify quadrature node %d of %d" % (i, n))
            # P_n' on the node ball via mean value: the naive interval
            # recurrence would amplify the node radius by ~3^n.
            with working_precision(prec + 96):
                dp_point = _legendre_dball(n, Ball(node.c))
            curv = gmpy2.mpq((n - 1) * n * (n + 1) * (n + 2), 8)  # max |P_n''| on [-1,1]
            Rp = rounding(prec)
            spread = Rp.up.add(dp_point.r, Rp.up.mul(node.r, Rp.up.add(mpfr(0), curv)))
            dp = Ball(dp_point.c, spread)
            w = Ball(2) / ((Ball(1) - node.square()) * dp.square())
            half.append((node, w))
        rule = [(-nd, w) for nd, w in half]
        rule.extend((nd, w) for nd, w in reversed(half))
    rule.sort(key=lambda t: t[0].c)
    return rule


def _eval_sign(n: int, x, prec: int) -> int:
    with working_precision(prec):
        v = _legendre_ball(n, Ball(x))
    s = v.sign()
    if s == "positive":
        return 1
    if s == "negative":
        return -1
    return 0
