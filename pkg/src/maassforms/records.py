"""MAASS/1 record format: line-oriented, byte-deterministic center/error text.

Format (LF newlines, ASCII, space-separated):

    MAASS/1
    LEVEL <N>
    WEIGHT 0
    CHARACTER trivial
    SPECTRAL_R <center> <error>
    LAMBDA <center> <error>
    PARITY even|odd
    ALSIGN <p> +1|-1|undetermined      (one line per prime divisor of N)
    FRICKE +1|-1|undetermined
    DIAGNOSTIC <key> <value>           (sorted by key; optional)
    PROVENANCE <key> <value>           (sorted by key; optional)
    COEFF <n> <center> <error>         (ascending n, n = 1..K)

Centers are serialized as round-to-nearest scientific decimals with 25
significant digits; errors as upward-rounded 3-digit decimals.  A record
remembers its error fields as exact decimal rationals, so re-exporting an
imported record is byte-identical; converting an error to a working
radius rounds upward by at most one ulp.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpfr, mpq

from .ball import Ball, _parse_decimal
from .errors import DomainError, FormatError
from .precision import rounding

__all__ = [
    "MaassFormRecord",
    "export_form",
    "import_form",
    "record_from_certified",
    "decimal_center",
    "decimal_error",
]

FORMAT_HEADER = "MAASS/1"
CENTER_DIGITS = 25
ERROR_DIGITS = 3
DEFAULT_COEFF_COUNT = 1000


def decimal_center(x) -> str:
    """Round-to-nearest scientific decimal with 25 significant digits.

    Exact rational input (a reimported center) reproduces its digits
    exactly, which keeps export idempotent; ties round away from zero.
    """
    if isinstance(x, mpq):
        if x == 0:
            return "0." + "0" * (CENTER_DIGITS - 1) + "e+0"
        q, e = abs(x), 0
        lo = mpq(10) ** (CENTER_DIGITS - 1)
        while q < lo:
            q *= 10
            e -= 1
        while q >= 10 * lo:
            q /= 10
            e += 1
        n = q.numerator // q.denominator
        if 2 * (q - n) >= 1:
            n += 1
            if n == 10 * lo:
                n //= 10
                e += 1
        mant = str(n)
        sign = "-" if x < 0 else ""
        return "%s%s.%se%+d" % (sign, mant[0], mant[1:], e + CENTER_DIGITS - 1)
    if not isinstance(x, mpfr):
        x = mpfr(x, 256)
    if x == 0:
        return "0." + "0" * (CENTER_DIGITS - 1) + "e+0"
    digits, exp, _ = x.digits(10, CENTER_DIGITS)
    sign = "-" if digits.startswith("-") else ""
    mant = digits.lstrip("-")
    return "%s%s.%se%+d" % (sign, mant[0], mant[1:], exp - 1)


def decimal_error(x) -> str:
    """Smallest 3-significant-digit decimal >= x (x a radius or exact mpq)."""
    q = mpq(x)  # exact for mpfr, float, and int alike
    if q < 0:
        raise DomainError("error fields must be nonnegative")
    if q == 0:
        return "0.00e+0"
    # scale to 3 significant integer digits, rounding the quotient up
    e = 0
    while q < 100:
        q *= 10
        e -= 1
    while q >= 1000:
        q /= 10
        e += 1
    n = q.numerator // q.denominator
    if mpq(n) != q:
        n += 1
        if n == 1000:
            n, e = 100, e + 1
    s = str(n)
    return "%s.%se%+d" % (s[0], s[1:], e + 2)


def _parse_number(token, line_no):
    try:
        return _parse_decimal(token)
    except (DomainError, ValueError):
        raise FormatError("bad numeric token %r" % (token,), line=line_no)


def _sign_str(s) -> str:
    if s is None:
        return "undetermined"
    if s == 1:
        return "+1"
    if s == -1:
        return "-1"
    raise DomainError("sign must be +1, -1 or None, got %r" % (s,))


def _parse_sign(token, line_no):
    if token == "undetermined":
        return None
    if token == "+1":
        return 1
    if token == "-1":
        return -1
    raise FormatError("bad sign token %r" % (token,), line=line_no)


@dataclass
class MaassFormRecord:
    """Exportable Maass form: spectral data plus coefficient enclosures.

    Numeric fields are (center: mpfr, error: exact decimal mpq) pairs;
    the error is always an upper bound for the underlying radius.
    """

    level: int
    parity: str
    spectral_r: tuple
    lam: tuple
    al_signs: dict
    fricke: int | None
    coefficients: list
    diagnostics: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    weight: int = 0
    character: str = "trivial"

    def __post_init__(self):
        from .geometry import is_squarefree, prime_divisors

        if not is_squarefree(self.level):
            raise DomainError("level %r is not squarefree" % (self.level,))
        if self.parity not in ("even", "odd"):
            raise DomainError("parity must be even or odd")
        if self.weight != 0 or self.character != "trivial":
            raise DomainError("only weight 0 with trivial character is supported")
        if sorted(self.al_signs) != prime_divisors(self.level):
            raise DomainError("al_signs must cover exactly the primes of the level")
        if not self.coefficients:
            raise DomainError("need at least one coefficient")
        c1, e1 = self.coefficients[0]
        if mpq(c1) != 1 or e1 != 0:
            raise DomainError("normalization requires a(1) = (1, 0)")
        for pair in [self.spectral_r, self.lam] + list(self.coefficients):
            if mpq(pair[1]) < 0:
                raise DomainError("error fields must be nonnegative")
        r_c, r_e = self.spectral_r
        lam_c, lam_e = self.lam
        lam_lo = mpq(lam_c) - mpq(lam_e)
        lam_hi = mpq(lam_c) + mpq(lam_e)
        rq, re = mpq(r_c), mpq(r_e)
        want_lo = mpq(1, 4) + (abs(rq) - re) ** 2 if abs(rq) >= re else mpq(1, 4)
        want_hi = mpq(1, 4) + (abs(rq) + re) ** 2
        if want_hi < lam_lo or want_lo > lam_hi:
            raise DomainError("lambda enclosure inconsistent with 1/4 + r^2")

    def r_ball(self, prec=None) -> Ball:
        return Ball(self.spectral_r[0], self.spectral_r[1], prec)

    def lambda_ball(self, prec=None) -> Ball:
        return Ball(self.lam[0], self.lam[1], prec)

    def coefficient_ball(self, n: int, prec=None) -> Ball:
        if not 1 <= n <= len(self.coefficients):
            raise DomainError("coefficient index %d out of range" % n)
        c, e = self.coefficients[n - 1]
        return Ball(c, e, prec)


def export_form(rec: MaassFormRecord) -> bytes:
    """Serialize; byte-identical output for equal records."""
    lines = [FORMAT_HEADER,
             "LEVEL %d" % rec.level,
             "WEIGHT %d" % rec.weight,
             "CHARACTER %s" % rec.character,
             "SPECTRAL_R %s" % _pair_tokens(rec.spectral_r),
             "LAMBDA %s" % _pair_tokens(rec.lam),
             "PARITY %s" % rec.parity]
    for p in sorted(rec.al_signs):
        lines.append("ALSIGN %d %s" % (p, _sign_str(rec.al_signs[p])))
    lines.append("FRICKE %s" % _sign_str(rec.fricke))
    for key in sorted(rec.diagnostics):
        lines.append("DIAGNOSTIC %s %s" % (key, rec.diagnostics[key]))
    for key in sorted(rec.provenance):
        lines.append("PROVENANCE %s %s" % (key, rec.provenance[key]))
    for n, pair in enumerate(rec.coefficients, start=1):
        lines.append("COEFF %d %s" % (n, _pair_tokens(pair)))
    return ("\n".join(lines) + "\n").encode("ascii")


def _pair_tokens(pair) -> str:
    """center error tokens; any center digits beyond the serialized
    precision are absorbed into the written error, so the written pair
    always contains the in-memory pair."""
    c, e = pair
    center_str = decimal_center(c)
    slack = abs(mpq(c) - _parse_decimal(center_str))
    return "%s %s" % (center_str, decimal_error(mpq(e) + slack))


def import_form(data: bytes) -> MaassFormRecord:
    """Parse a MAASS/1 document; errors carry the offending line number."""
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise FormatError("not ASCII: %s" % exc)
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != FORMAT_HEADER:
        got = lines[0] if lines else ""
        raise FormatError("unsupported format header %r" % got, line=1)

    fields = {}
    al_signs = {}
    diagnostics = {}
    provenance = {}
    coefficients = []
    R = rounding()
    for no, line in enumerate(lines[1:], start=2):
        parts = line.split(" ")
        tag = parts[0]
        if tag == "LEVEL" and len(parts) == 2:
            fields["level"] = _int_token(parts[1], no)
        elif tag == "WEIGHT" and len(parts) == 2:
            fields["weight"] = _int_token(parts[1], no)
        elif tag == "CHARACTER" and len(parts) == 2:
            fields["character"] = parts[1]
        elif tag in ("SPECTRAL_R", "LAMBDA") and len(parts) == 3:
            center = _center_token(parts[1], no, R)
            err = _error_token(parts[2], no)
            fields["spectral_r" if tag == "SPECTRAL_R" else "lam"] = (center, err)
        elif tag == "PARITY" and len(parts) == 2:
            fields["parity"] = parts[1]
        elif tag == "ALSIGN" and len(parts) == 3:
            al_signs[_int_token(parts[1], no)] = _parse_sign(parts[2], no)
        elif tag == "FRICKE" and len(parts) == 2:
            fields["fricke"] = _parse_sign(parts[1], no)
        elif tag == "DIAGNOSTIC" and len(parts) == 3:
            diagnostics[parts[1]] = parts[2]
        elif tag == "PROVENANCE" and len(parts) == 3:
            provenance[parts[1]] = parts[2]
        elif tag == "COEFF" and len(parts) == 4:
            n = _int_token(parts[1], no)
            if n != len(coefficients) + 1:
                raise FormatError("coefficient index %d out of order" % n, line=no)
            coefficients.append((_center_token(parts[2], no, R), _error_token(parts[3], no)))
        else:
            raise FormatError("malformed line %r" % line, line=no)
    try:
        return MaassFormRecord(
            level=fields["level"], parity=fields["parity"],
            spectral_r=fields["spectral_r"], lam=fields["lam"],
            al_signs=al_signs, fricke=fields.get("fricke"),
            coefficients=coefficients, diagnostics=diagnostics,
            provenance=provenance, weight=fields.get("weight", 0),
            character=fields.get("character", "trivial"),
        )
    except KeyError as exc:
        raise FormatError("missing required field %s" % exc)
    except DomainError as exc:
        raise FormatError("invariant violation: %s" % exc)


def _int_token(token, line_no):
    try:
        return int(token)
    except ValueError:
        raise FormatError("bad integer %r" % (token,), line=line_no)


def _center_token(token, line_no, R):
    return _parse_number(token, line_no)  # exact decimal rational


def _error_token(token, line_no):
    q = _parse_number(token, line_no)
    if q < 0:
        raise FormatError("negative error field %r" % (token,), line=line_no)
    return q


def _ball_pair(ball: Ball):
    """Exact (center, radius) pair; export rounds and absorbs slack."""
    return ball.c, mpq(ball.r)


def record_from_certified(form, count: int | None = None,
                          provenance: dict | None = None) -> MaassFormRecord:
    """Build an exportable record from a certified form.

    ``count`` defaults to every solved coefficient; the published-database
    convention is 1000, far beyond desk-scale truncations, so the actual
    coefficient count is recorded explicitly.
    """
    cand = form.candidate
    ctx = cand.ctx
    coeffs = form.coefficients
    count = len(coeffs) if count is None else count
    if count < 1 or count > len(coeffs):
        raise DomainError("coefficient count %d outside 1..%d" % (count, len(coeffs)))
    pairs = [(mpfr(1), mpq(0))]
    for n in range(2, count + 1):
        pairs.append(_ball_pair(coeffs.a(n)))
    diags = {
        "enclosure": form.enclosure_status,
        "automorphy_defect": decimal_error(abs(mpq(form.automorphy))),
        "automorphy_threshold": decimal_error(abs(mpq(form.automorphy_threshold))),
        "hecke_residual": decimal_error(abs(mpq(form.hecke))),
        "declared_tail": decimal_error(abs(mpq(form.declared_tail))),
    }
    if form.hecke_pairs:
        from .certify import hecke_residual as _hr

        enclosure_level = _hr(coeffs, form.hecke_pairs)
        diags["hecke_residual_enclosure"] = decimal_error(abs(mpq(enclosure_level)))
    prov = {
        "eps": repr(ctx.eps),
        "precision_bits": str(ctx.prec),
        "truncation": str(ctx.m),
        "samples": str(ctx.q),
        "y1": repr(ctx.y1),
        "y2": repr(ctx.y2),
        "coeff_bound": repr(ctx.coeff_bound),
    }
    if provenance:
        prov.update(provenance)
    signs = {p: form.determined_signs.get(p) for p in form.determined_signs}
    return MaassFormRecord(
        level=ctx.level,
        parity=ctx.parity,
        spectral_r=_ball_pair(cand.r),
        lam=_ball_pair(cand.lam),
        al_signs=signs,
        fricke=form.fricke,
        coefficients=pairs,
        diagnostics=diags,
        provenance=prov,
    )
