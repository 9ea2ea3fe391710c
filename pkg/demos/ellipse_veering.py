"""
Ellipse: crossing doublets and repelled levels
===============================================

For the ellipse with lam = (a - b)/(a + b) the l = 1 doublet splits linearly
in lam and crosses at the circle.  The l = 2 doublet only splits at second
order and the two members touch tangentially at lam = 0.  Its Cos member
shares a symmetry sector with (0,2,Cos), only about 4 energy units higher;
the two repel, and the large second-order coefficient this produces
overshoots the true (sublinear) repulsion already at |lam| ~ 0.1.

    python3 demos/ellipse_veering.py
"""
import sys
import warnings

import numpy as np

from eqcircle import FIRST5, Mode, detect_events, expansion, make_ellipse, scan
from eqcircle.oracle import ConditioningWarning
from eqcircle.boundary import ellipse_closed_form

warnings.simplefilter("ignore", ConditioningWarning)
family = make_ellipse()
fb = ellipse_closed_form()

modes = list(FIRST5) + [Mode(0, 2)]
grid = np.round(np.linspace(-0.3, 0.3, 13), 12)
result = scan(family, grid, modes, with_oracle=True)

print("relative error of the quadratic expansion")
print("  lam    " + "".join(f"{str(m):>10s}" for m in result.modes))
for lam in result.grid:
    row = [r for r in result.rows if r.lam == lam]
    print(f"  {lam:+.2f} " + "".join(f"{100 * r.rel_err:9.2f}%" for r in row))

# the pair that actually repels: both levels in the CosEven sector
a = result.series(Mode(2, 1, "Cos"), "Oracle")
b = result.series(Mode(0, 2), "Oracle")
print("\n(0,2,Cos) - (2,1,Cos) numerical gap")
for lam, g in zip(grid, b - a):
    print(f"  {lam:+.2f}  {g:8.4f}")

print("\nevents (oracle)")
for e in detect_events(result, sources=["Oracle"]):
    if {e.mode_a.l, e.mode_b.l} <= {1, 2} and e.mode_a.l == e.mode_b.l:
        print(f"  {e.kind.value:8s} {e.mode_a} / {e.mode_b} at lam = {e.lambda_at:+.3f}, gap {e.min_gap:.2e}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    sys.exit(0)

fine = np.linspace(-0.3, 0.3, 121)
fig, ax = plt.subplots(figsize=(5, 6))
for m in modes:
    line, = ax.plot(fine, expansion(m, fb)(fine), label=str(m))
    ax.plot(grid, result.series(m, "Oracle"), "o", color=line.get_color(), ms=4)
ax.set_xlabel("lam")
ax.set_ylabel("E")
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig("ellipse_veering.png", dpi=120)
