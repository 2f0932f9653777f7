"""
Continued fractions with exact arithmetic and the bounded-quotient class.

A point ``xi`` of the interval is a good observation point when the partial
quotients of its continued fraction are bounded; then ``n |sin(n pi xi)|`` stays
away from zero and the sine-weighted dual norm below is equivalent to the
observed energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

RATIONAL = "rational"
SURD = "surd"
DECIMAL = "decimal"

IN_S_CERTIFIED = "InS_Certified"
IN_S_UP_TO_DEPTH = "InS_UpToDepth"
NOT_IN_S_RATIONAL = "NotInS_Rational"
INCONCLUSIVE = "Inconclusive"


class PrecisionExhausted(ArithmeticError):
    """The certified digits of a decimal input no longer determine the next quotient."""

    def __init__(self, message: str, quotients: list[int]):
        super().__init__(message)
        self.quotients = quotients


def _squarefree(d: int) -> bool:
    if d < 2:
        return False
    k = 2
    while k * k <= d:
        if d % (k * k) == 0:
            return False
        k += 1
    return True


def _surd_sign(u: Fraction, b: Fraction, d: int) -> int:
    """Exact sign of ``u + b sqrt(d)``."""
    su, sb = (u > 0) - (u < 0), (b > 0) - (b < 0)
    if su == 0 or sb == 0 or su == sb:
        return su or sb
    # opposite signs: compare magnitudes squared
    return su if u * u > b * b * d else sb


@dataclass(frozen=True)
class RealSpec:
    """A number in (0, 1) given exactly (rational or quadratic surd) or as certified digits.

    * rational: ``value``
    * surd: ``a + b sqrt(d)`` with rational ``a, b`` and square-free ``d``
    * decimal: ``value`` known to within ``10**-precision``
    """

    kind: str
    value: Fraction | None = None
    a: Fraction | None = None
    b: Fraction | None = None
    d: int | None = None
    precision: int | None = None

    @classmethod
    def rational(cls, p: int, q: int = 1) -> "RealSpec":
        v = Fraction(p, q)
        if not 0 < v < 1:
            raise ValueError("rational must lie in (0, 1)")
        return cls(RATIONAL, value=v)

    @classmethod
    def surd(cls, a, b, d: int) -> "RealSpec":
        a, b = Fraction(a), Fraction(b)
        if b == 0:
            raise ValueError("surd needs a nonzero irrational part")
        if not _squarefree(int(d)):
            raise ValueError(f"d={d} is not square-free")
        x = cls(SURD, a=a, b=b, d=int(d))
        if x.compare(Fraction(0)) <= 0 or x.compare(Fraction(1)) >= 0:
            raise ValueError("surd must lie in (0, 1)")
        return x

    @classmethod
    def decimal(cls, digits: str, precision: int | None = None) -> "RealSpec":
        digits = digits.strip()
        v = Fraction(digits)
        if precision is None:
            precision = len(digits.split(".")[1]) if "." in digits else 0
        if not 0 < v < 1:
            raise ValueError("decimal must lie in (0, 1)")
        return cls(DECIMAL, value=v, precision=int(precision))

    def compare(self, r: Fraction) -> int:
        """Exact sign of ``self - r`` (decimals compare their stated value)."""
        if self.kind == SURD:
            return _surd_sign(self.a - r, self.b, self.d)
        diff = self.value - r
        return (diff > 0) - (diff < 0)

    def complement(self) -> "RealSpec":
        """``1 - x`` in the same representation."""
        if self.kind == SURD:
            return RealSpec(SURD, a=1 - self.a, b=-self.b, d=self.d)
        return RealSpec(self.kind, value=1 - self.value, precision=self.precision)

    def to_mpf(self, dps: int = 50):
        with mpmath.workdps(dps):
            if self.kind == SURD:
                return mpmath.mpf(self.a.numerator) / self.a.denominator + (
                    mpmath.mpf(self.b.numerator) / self.b.denominator
                ) * mpmath.sqrt(self.d)
            return mpmath.mpf(self.value.numerator) / self.value.denominator

    def __float__(self) -> float:
        return float(self.to_mpf(30))

    def to_dict(self) -> dict:
        if self.kind == SURD:
            return {"kind": SURD, "a": str(self.a), "b": str(self.b), "d": self.d}
        if self.kind == RATIONAL:
            return {"kind": RATIONAL, "p": self.value.numerator, "q": self.value.denominator}
        return {"kind": DECIMAL, "value": str(self.value), "precision": self.precision}

    @classmethod
    def from_dict(cls, d: dict) -> "RealSpec":
        if d["kind"] == SURD:
            return cls.surd(Fraction(d["a"]), Fraction(d["b"]), d["d"])
        if d["kind"] == RATIONAL:
            return cls.rational(d["p"], d["q"])
        if "digits" in d:
            return cls.decimal(d["digits"], d.get("precision"))
        return cls(DECIMAL, value=Fraction(d["value"]), precision=d["precision"])


@dataclass(frozen=True)
class CFExpansion:
    """Partial quotients ``a_1, a_2, ...`` of ``[0; a_1, a_2, ...]``."""

    quotients: tuple[int, ...]
    terminated: bool
    periodic: tuple[int, tuple[int, ...]] | None = None  # (preperiod length, period)

    def to_dict(self) -> dict:
        d = {"quotients": list(self.quotients), "terminated": self.terminated, "periodic": None}
        if self.periodic is not None:
            d["periodic"] = {"preperiod": self.periodic[0], "period": list(self.periodic[1])}
        return d


def _cf_rational(v: Fraction, max_terms: int) -> CFExpansion:
    p, q = v.numerator, v.denominator
    p, q = q, p % q  # drop the integer part (0 for inputs in (0, 1))
    out = []
    while q and len(out) < max_terms:
        a, r = divmod(p, q)
        out.append(a)
        p, q = q, r
    return CFExpansion(tuple(out), terminated=(q == 0))


def _surd_pqd(x: RealSpec) -> tuple[int, int, int]:
    """Write ``x = (P + sqrt(D)) / Q`` with integers and ``Q | D - P^2``."""
    a, b, d = x.a, x.b, x.d
    sign = 1 if b > 0 else -1
    # x = sign * (sign*a + |b| sqrt d); put everything over a common denominator L
    L = math.lcm(a.denominator, b.denominator)
    P = int(a * L)
    B = int(abs(b) * L)
    Q = L
    if sign < 0:
        P, Q = -P, -Q
    D = B * B * d
    if (D - P * P) % Q:
        P, D, Q = P * abs(Q), D * Q * Q, Q * abs(Q)
    return P, Q, D


def _floor_quadratic(P: int, Q: int, D: int, s: int) -> int:
    """``floor((P + sqrt(D)) / Q)`` for non-square ``D`` with ``s = isqrt(D)``."""
    if Q > 0:
        return (P + s) // Q
    return (-P - s - 1) // (-Q)


def _cf_surd(x: RealSpec, max_terms: int) -> CFExpansion:
    P, Q, D = _surd_pqd(x)
    s = math.isqrt(D)
    a0 = _floor_quadratic(P, Q, D, s)
    P, Q = a0 * Q - P, (D - (a0 * Q - P) ** 2) // Q
    seen: dict[tuple[int, int], int] = {}
    out: list[int] = []
    periodic = None
    while True:
        state = (P, Q)
        if state in seen:
            i = seen[state]
            periodic = (i, tuple(out[i:]))
            break
        seen[state] = len(out)
        a = _floor_quadratic(P, Q, D, s)
        out.append(a)
        P = a * Q - P
        Q = (D - P * P) // Q
    pre, period = periodic
    quotients = list(out[:pre])
    while len(quotients) < max_terms:
        quotients.extend(period)
    return CFExpansion(tuple(quotients[:max_terms]), terminated=False, periodic=periodic)


def _cf_decimal(x: RealSpec, max_terms: int) -> CFExpansion:
    eps = Fraction(1, 10**x.precision)
    lo, hi = max(x.value - eps, Fraction(0)), min(x.value + eps, Fraction(1))
    out: list[int] = []
    while len(out) < max_terms:
        if lo <= 0:
            raise PrecisionExhausted(f"certified digits exhausted after {len(out)} quotients", out)
        a_lo, a_hi = math.floor(1 / hi), math.floor(1 / lo)
        if a_lo != a_hi or 1 / hi == a_lo:
            raise PrecisionExhausted(f"certified digits exhausted after {len(out)} quotients", out)
        out.append(a_lo)
        lo, hi = 1 / hi - a_lo, 1 / lo - a_lo
    return CFExpansion(tuple(out), terminated=False)


def continued_fraction(x: RealSpec, max_terms: int = 30) -> CFExpansion:
    """Gauss-map expansion of ``x`` in (0, 1).

    Exact for rationals and surds (the period of a surd is found by
    recurrence of the reduced state). Decimals are expanded as an interval and
    raise :class:`PrecisionExhausted` once the interval straddles two quotients.
    """
    if x.kind == RATIONAL:
        return _cf_rational(x.value, max_terms)
    if x.kind == SURD:
        return _cf_surd(x, max_terms)
    return _cf_decimal(x, max_terms)


def convergents(quotients) -> list[tuple[int, int]]:
    """Convergents ``p_k / q_k`` of ``[0; a_1, ..., a_k]`` for k = 1, 2, ..."""
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    out = []
    for a in quotients:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        out.append((p, q))
    return out


def fold(quotients) -> Fraction:
    """Exact value of the finite fraction ``[0; a_1, ..., a_k]``."""
    p, q = convergents(quotients)[-1]
    return Fraction(p, q)


@dataclass(frozen=True)
class Verdict:
    code: str
    bound: int | None
    depth: int
    reason: str

    def to_dict(self) -> dict:
        return {"code": self.code, "bound": self.bound, "depth": self.depth, "reason": self.reason}


def is_in_S(x: RealSpec, depth: int = 30) -> Verdict:
    """Three-valued membership in the bounded-partial-quotient irrationals."""
    if x.kind == RATIONAL:
        cf = continued_fraction(x, max_terms=10**6)
        return Verdict(NOT_IN_S_RATIONAL, None, len(cf.quotients), "finite_expansion")
    if x.kind == SURD:
        cf = continued_fraction(x, max_terms=1)
        pre, period = cf.periodic
        head = _cf_surd(x, pre).quotients if pre else ()
        return Verdict(IN_S_CERTIFIED, max(head + period), pre + len(period), "periodic_expansion")
    try:
        cf = continued_fraction(x, depth)
    except PrecisionExhausted as exc:
        seen = max(exc.quotients) if exc.quotients else None
        return Verdict(INCONCLUSIVE, seen, len(exc.quotients), "precision_exhausted")
    return Verdict(IN_S_UP_TO_DEPTH, max(cf.quotients), depth, "depth_limited")


def sin_pi_multiples(x: RealSpec, n) -> np.ndarray:
    """``sin(n pi x)`` for integer ``n``, with exact zeros for rationals."""
    n = np.atleast_1d(np.asarray(n, dtype=np.int64))
    if x.kind == RATIONAL:
        p, q = x.value.numerator, x.value.denominator
        # reduce n p / q modulo 2 before multiplying by pi
        r = (n * p) % (2 * q)
        out = np.sin(np.pi * r / q)
        out[r % q == 0] = 0.0
        return out
    dps = 30 + int(np.log10(max(int(n.max(initial=1)), 1)) + 1)
    with mpmath.workdps(dps):
        xv = x.to_mpf(dps)
        return np.array([float(mpmath.sinpi(int(k) * xv)) for k in n])


def bare_sine_coeffs(pos, vel) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal interval coefficients to ``u = sum a_n sin(n pi x)`` coefficients."""
    return np.sqrt(2.0) * np.asarray(pos, float), np.sqrt(2.0) * np.asarray(vel, float)


def dual_weight_norm(a, b, xi: RealSpec, N: int | None = None) -> float:
    """``sqrt(sum_{n<=N} (n^2 a_n^2 + b_n^2) / sin^2(n pi xi))``; ``inf`` on an exact zero."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    N = a.size if N is None else min(N, a.size)
    n = np.arange(1, N + 1)
    num = n**2 * a[:N] ** 2 + b[:N] ** 2
    s2 = sin_pi_multiples(xi, n) ** 2
    zero = s2 == 0
    if np.any(zero & (num != 0)):
        return math.inf
    keep = ~zero
    return float(np.sqrt(np.sum(num[keep] / s2[keep])))


@dataclass(frozen=True)
class SineGapReport:
    N: int
    min_value: float
    argmin: int
    envelope: list[float] = field(repr=False)  # running min of n |sin(n pi xi)|

    def to_dict(self) -> dict:
        return {"N": self.N, "min_value": self.min_value, "argmin": self.argmin}


def sine_gap_scan(xi: RealSpec, N: int) -> SineGapReport:
    """Minimum of ``n |sin(n pi xi)|`` over ``1 <= n <= N``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    n = np.arange(1, N + 1)
    vals = n * np.abs(sin_pi_multiples(xi, n))
    i = int(np.argmin(vals))
    return SineGapReport(N, float(vals[i]), int(n[i]), np.minimum.accumulate(vals).tolist())
