"""
Supercircle: levels against the exponent deformation
=====================================================

The supercircle |x|^n + |y|^n = a^n with n = 2 + d is a circle at d = 0 and
the diamond |x| + |y| = a at d = -1.  Its boundary only contains cos(4n t)
harmonics, so the l = 2 doublet splits at first order while l = 1 does not.

Run from the repository root:

    python3 demos/supercircle_spectrum.py [--with-oracle]

Writes supercircle_scan.csv (+ .events) and, if matplotlib is installed,
supercircle_scan.png.
"""
import sys
import warnings

import numpy as np

from eqcircle import (
    FIRST5,
    detect_events,
    expansion,
    fourier_expand,
    make_supercircle,
    scan,
)
from eqcircle.boundary import TruncationWarning
from eqcircle.report import write_scan

warnings.simplefilter("ignore", TruncationWarning)
family = make_supercircle()

# Fourier content of the deformation: C_4n^(1) = -1/(4n(4n^2 - 1))
fb = fourier_expand(family)
print("first-order coefficients")
for n in range(1, 5):
    print(f"  C_{4 * n}^(1) = {fb.C(1, 4 * n): .8f}   closed form {-1 / (4 * n * (4 * n * n - 1)): .8f}")
print(f"  C_4^(2) = {fb.C(2, 4):.7f}")

# E(d) = E0 + d E1 + d^2 E2 for the five lowest circle states
print("\nexpansion coefficients")
for m in FIRST5:
    ex = expansion(m, fb)
    print(f"  {str(m):9s}  E0 {ex.E0:9.5f}  E1 {ex.E1:+9.5f}  E2 {ex.E2:+10.4f}")

with_oracle = "--with-oracle" in sys.argv
grid = np.round(np.linspace(-1, 1, 21 if not with_oracle else 11), 12)
result = scan(family, grid, FIRST5, with_oracle=with_oracle)
events = detect_events(result)
write_scan(result, "supercircle_scan.csv", events)

print("\ncrossings")
for e in events:
    if e.kind.value == "Crossing":
        print(f"  {e.source.value:12s} {e.mode_a} x {e.mode_b} at d = {e.lambda_at:+.3f}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    sys.exit(0)

fine = np.linspace(-1, 1, 201)
fig, ax = plt.subplots(figsize=(5, 6))
for m in FIRST5:
    ex = expansion(m, fb)
    line, = ax.plot(fine, ex(fine), label=str(m))
    if with_oracle:
        ax.plot(grid, result.series(m, "Oracle"), "o", color=line.get_color(), ms=4)
ax.set_xlabel("d")
ax.set_ylabel("E  (R0 = 1)")
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig("supercircle_scan.png", dpi=120)
