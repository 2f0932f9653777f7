"""
Which points see every mode
===========================

Bounded continued-fraction quotients keep n |sin(n pi xi)| away from zero.
Quadratic surds are periodic, rationals terminate, and decimals only
certify a finite prefix.
"""

# %%
from fractions import Fraction

from wavehum.diophantine import RealSpec, continued_fraction, is_in_S, sine_gap_scan

points = {
    "7/16": RealSpec.rational(7, 16),
    "sqrt2 - 1": RealSpec.surd(-1, 1, 2),
    "golden": RealSpec.surd(Fraction(-1, 2), Fraction(1, 2), 5),
    "sqrt7 / 3": RealSpec.surd(0, Fraction(1, 3), 7),
    "pi - 3": RealSpec.decimal("0.14159265358979323846264338327950288419716939937510"),
}

# %%
for name, x in points.items():
    v = is_in_S(x, depth=20)
    try:
        head = continued_fraction(x, 12).quotients
    except ArithmeticError:
        head = "exhausted"
    print(f"{name:10s} {v.code:16s} bound={v.bound}  {head}")

# %%
for name in ("sqrt2 - 1", "golden", "pi - 3"):
    r = sine_gap_scan(points[name], 2000)
    print(f"{name:10s} min n|sin(n pi xi)| up to 2000: {r.min_value:.4f} at n={r.argmin}")
