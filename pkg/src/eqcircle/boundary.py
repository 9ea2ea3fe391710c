"""Star-shaped boundary families and their order-by-order Fourier description.

A family is a radius function ``r(theta, lam)`` that collapses to a circle at
``lam = 0``.  :func:`fourier_expand` writes

    r(theta, lam) / R0(lam) = 1 + sum_sigma lam**sigma * f_sigma(theta)

with ``R0(lam)`` the equal-area radius, and returns the cosine/sine
coefficients of every ``f_sigma``.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, Mapping

import numpy as np

from .specfun import gamma

N_THETA = 4096
N_MAX = 32
STENCIL_HALF_WIDTH = 0.1
# polynomial degree used for the lambda fit; well above sigma_max so the
# truncated Taylor tail does not leak into the kept orders
FIT_EXTRA_DEGREE = 8
TRUNCATION_LEVEL = 1e-8


class BoundaryError(ValueError):
    """Invalid boundary data or parameter outside a family's range."""


class TruncationWarning(UserWarning):
    """Highest kept Fourier coefficient is not negligible."""


def theta_grid(n: int = N_THETA) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n) / n


@dataclass(frozen=True)
class ShapeFamily:
    """One-parameter family of star-shaped boundaries.

    ``radius_fn(theta, lam)`` must accept an array of angles.  The symmetry
    flags are promises the oracle relies on when it splits the problem into
    parity sectors: ``mirror_x`` is r(-t) = r(t), ``half_turn`` is
    r(t + pi) = r(t), ``quarter_turn`` is r(t + pi/2) = r(t).
    """

    name: str
    radius_fn: Callable[[np.ndarray, float], np.ndarray]
    lambda_range: tuple[float, float]
    mirror_x: bool = False
    half_turn: bool = False
    quarter_turn: bool = False

    def check_lambda(self, lam: float) -> float:
        lo, hi = self.lambda_range
        lam = float(lam)
        # small slack so grids built with linspace do not trip on round-off
        if not (lo - 1e-12 <= lam <= hi + 1e-12):
            raise BoundaryError(
                f"lambda={lam} outside the valid range [{lo}, {hi}] of family {self.name!r}"
            )
        return lam

    def radius(self, theta, lam: float) -> np.ndarray:
        lam = self.check_lambda(lam)
        r = np.asarray(self.radius_fn(np.asarray(theta, dtype=float), lam), dtype=float)
        if np.any(~np.isfinite(r)) or np.any(r <= 0):
            raise BoundaryError(f"non-positive radius in family {self.name!r} at lambda={lam}")
        return r


AREA_RTOL = 1e-13
AREA_MAX_NODES = 1 << 20


@lru_cache(maxsize=4096)
def _mean_square(shape: ShapeFamily, lam: float, n_theta: int) -> float:
    # periodic trapezoid: the mean of r^2 is A / pi.  Spectral for smooth r;
    # corners and |cos|^n cusps only converge algebraically, so keep doubling
    # the grid (reusing the old nodes) until two estimates agree.
    r = shape.radius(theta_grid(n_theta), lam)
    total = float(np.sum(r * r))
    est = total / n_theta
    n = n_theta
    while n < AREA_MAX_NODES:
        mid = 2.0 * np.pi * (np.arange(n) + 0.5) / n
        r = shape.radius(mid, lam)
        total += float(np.sum(r * r))
        n *= 2
        new = total / n
        if abs(new - est) <= AREA_RTOL * new:
            return new
        est = new
    return est


def equivalent_radius(shape: ShapeFamily, lam: float, n_theta: int = N_THETA) -> float:
    """Radius of the circle with the same area, A = 1/2 int r^2 dtheta = pi R0^2."""
    lam = shape.check_lambda(lam)
    return math.sqrt(_mean_square(shape, lam, n_theta))


@dataclass(frozen=True)
class FourierBoundary:
    """Coefficients C_n^(sigma), S_n^(sigma) for sigma = 1..max_order, n = 0..n_max.

    Row ``sigma - 1`` of ``cos``/``sin`` holds order ``sigma``.  Lookups outside
    the stored ranges, and any negative index, read as exactly zero.
    """

    R0: float
    cos: np.ndarray
    sin: np.ndarray

    def __post_init__(self):
        c = np.array(self.cos, dtype=float)
        s = np.array(self.sin, dtype=float)
        if c.ndim != 2 or c.shape != s.shape:
            raise BoundaryError("cos and sin tables must be 2-d arrays of equal shape")
        s[:, 0] = 0.0
        c.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "cos", c)
        object.__setattr__(self, "sin", s)

    @classmethod
    def from_coefficients(
        cls,
        cos: Mapping[int, Mapping[int, float]] | None = None,
        sin: Mapping[int, Mapping[int, float]] | None = None,
        R0: float = 1.0,
        max_order: int = 2,
        n_max: int | None = None,
    ) -> "FourierBoundary":
        """Build from sparse ``{sigma: {n: value}}`` dictionaries."""
        cos = cos or {}
        sin = sin or {}
        used = [n for tab in (cos, sin) for d in tab.values() for n in d]
        orders = [s for tab in (cos, sin) for s in tab]
        max_order = max([max_order, *orders])
        if n_max is None:
            n_max = max([N_MAX, *used])
        c = np.zeros((max_order, n_max + 1))
        s = np.zeros((max_order, n_max + 1))
        for tab, arr in ((cos, c), (sin, s)):
            for sigma, d in tab.items():
                for n, v in d.items():
                    arr[sigma - 1, n] = v
        return cls(R0=R0, cos=c, sin=s)

    @property
    def max_order(self) -> int:
        return self.cos.shape[0]

    @property
    def n_max(self) -> int:
        return self.cos.shape[1] - 1

    def C(self, sigma: int, n: int) -> float:
        if sigma < 1 or sigma > self.max_order or n < 0 or n > self.n_max:
            return 0.0
        return float(self.cos[sigma - 1, n])

    def S(self, sigma: int, n: int) -> float:
        if sigma < 1 or sigma > self.max_order or n < 1 or n > self.n_max:
            return 0.0
        return float(self.sin[sigma - 1, n])

    def has_sine_terms(self, sigma: int = 1, tol: float = 1e-12) -> bool:
        return bool(np.any(np.abs(self.sin[sigma - 1]) > tol))

    def f(self, sigma: int, theta) -> np.ndarray:
        """Deviation function f^(sigma)(theta)."""
        theta = np.asarray(theta, dtype=float)
        if sigma < 1 or sigma > self.max_order:
            return np.zeros_like(theta)
        n = np.arange(self.n_max + 1)
        ang = np.multiply.outer(theta, n)
        return np.cos(ang) @ self.cos[sigma - 1] + np.sin(ang) @ self.sin[sigma - 1]

    def reconstruct(self, theta, lam: float, order: int | None = None) -> np.ndarray:
        """R0 * (1 + sum_{sigma <= order} lam^sigma f^(sigma)(theta))."""
        order = self.max_order if order is None else order
        g = sum(lam**s * self.f(s, theta) for s in range(1, order + 1))
        return self.R0 * (1.0 + g)


def _stencil(shape: ShapeFamily, sigma_max: int) -> tuple[np.ndarray, float]:
    lo, hi = shape.lambda_range
    a = max(lo, -STENCIL_HALF_WIDTH)
    b = min(hi, STENCIL_HALF_WIDTH)
    if not a <= 0.0 <= b or b - a < 1e-6:
        raise BoundaryError(
            f"family {shape.name!r} has no usable lambda interval around 0 for the order fit"
        )
    degree = sigma_max + FIT_EXTRA_DEGREE
    k = np.arange(2 * degree)
    nodes = 0.5 * (a + b) + 0.5 * (b - a) * np.cos(np.pi * (k + 0.5) / k.size)
    nodes = nodes[np.abs(nodes) > 1e-12 * (b - a)]
    return nodes, max(abs(a), abs(b))


def fourier_expand(
    shape: ShapeFamily,
    sigma_max: int = 2,
    n_max: int = N_MAX,
    n_theta: int = N_THETA,
) -> FourierBoundary:
    """Order-by-order Fourier coefficients of ``r(theta, lam) / R0(lam) - 1``.

    The deviation is sampled on a Chebyshev stencil of small lambda values,
    each angle node gets a least-squares polynomial in lambda through the
    origin, and each lambda-order is projected on cos/sin with the periodic
    trapezoid rule (an FFT).
    """
    if sigma_max < 1:
        raise BoundaryError("sigma_max must be at least 1")
    if n_max >= n_theta // 2:
        raise BoundaryError(f"n_max={n_max} is not resolved by {n_theta} angle nodes")
    theta = theta_grid(n_theta)
    lams, h = _stencil(shape, sigma_max)
    degree = sigma_max + FIT_EXTRA_DEGREE
    g = np.empty((lams.size, n_theta))
    for i, lam in enumerate(lams):
        r = shape.radius(theta, lam)
        g[i] = r / math.sqrt(np.mean(r * r)) - 1.0
    t = lams / h
    vander = t[:, None] ** np.arange(1, degree + 1)[None, :]
    if np.linalg.cond(vander) > 1e10:
        raise BoundaryError("lambda stencil is too degenerate for the order fit")
    coef, *_ = np.linalg.lstsq(vander, g, rcond=None)
    orders = coef[:sigma_max] / (h ** np.arange(1, sigma_max + 1))[:, None]

    spec = np.fft.rfft(orders, axis=1) / n_theta
    cos = 2.0 * spec.real[:, : n_max + 1]
    sin = -2.0 * spec.imag[:, : n_max + 1]
    cos[:, 0] = spec.real[:, 0]
    sin[:, 0] = 0.0
    tail = max(np.abs(cos[:, n_max]).max(), np.abs(sin[:, n_max]).max())
    if tail > TRUNCATION_LEVEL:
        warnings.warn(
            f"{shape.name}: |coefficient| at n_max={n_max} is {tail:.2e} > {TRUNCATION_LEVEL:g}",
            TruncationWarning,
            stacklevel=2,
        )
    return FourierBoundary(R0=equivalent_radius(shape, 0.0, n_theta), cos=cos, sin=sin)


@dataclass
class ConstraintReport:
    """Residuals of the equal-area relations, one per order."""

    residuals: dict[int, float]
    tol: float
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = all(abs(v) <= self.tol for v in self.residuals.values())

    def lines(self) -> list[str]:
        out = ["sigma,residual,status"]
        for s, v in sorted(self.residuals.items()):
            out.append(f"{s},{v:.6e},{'ok' if abs(v) <= self.tol else 'FAIL'}")
        return out


def verify_constraints(fb: FourierBoundary, tol: float = 1e-10) -> ConstraintReport:
    """Check the order-sigma area relation for every stored order.

    Equal area means <2g + g^2> = 0 for g = sum lam^s f^(s), which at order
    sigma reads

        4 C_0^(s) + sum_{nu=1}^{s-1} [2 C_0^(nu) C_0^(s-nu)
                   + sum_{n>=1} (C_n^(nu) C_n^(s-nu) + S_n^(nu) S_n^(s-nu))] = 0.

    sigma = 1 gives C_0^(1) = 0 and sigma = 2 gives
    4 C_0^(2) = -sum_n (C_n^(1)^2 + S_n^(1)^2).
    """
    res = {}
    for s in range(1, fb.max_order + 1):
        acc = 4.0 * fb.C(s, 0)
        for nu in range(1, s):
            a, b = nu - 1, s - nu - 1
            acc += 2.0 * fb.cos[a, 0] * fb.cos[b, 0]
            acc += float(fb.cos[a, 1:] @ fb.cos[b, 1:] + fb.sin[a, 1:] @ fb.sin[b, 1:])
        res[s] = acc
    return ConstraintReport(res, tol)


# --- built-in families -------------------------------------------------------

SUPERCIRCLE_RANGE = (-1.0, 1.0)
ELLIPSE_RANGE = (-1.0 / 3.0, 1.0 / 3.0)


def supercircle_exponent(delta: float) -> float:
    """Lame exponent n for deformation delta.

    delta = n - 2: positive delta is squarish, negative delta is diamond-like.
    This orientation is the one for which C_4n^(1) = -1/(4n(4n^2 - 1)).
    """
    return 2.0 + delta


def supercircle_scale(delta: float) -> float:
    """Half-width a giving unit equal-area radius."""
    n = supercircle_exponent(delta)
    return 1.0 / (math.sqrt(2.0 / (n * math.pi)) * gamma(1.0 / n) / math.sqrt(gamma(2.0 / n)))


def supercircle_radius(theta, delta: float, a: float | None = None) -> np.ndarray:
    """Polar radius of |x|^n + |y|^n = a^n, n = supercircle_exponent(delta)."""
    n = supercircle_exponent(delta)
    if a is None:
        a = supercircle_scale(delta)
    theta = np.asarray(theta, dtype=float)
    return a / (np.abs(np.cos(theta)) ** n + np.abs(np.sin(theta)) ** n) ** (1.0 / n)


def make_supercircle() -> ShapeFamily:
    """Supercircles for delta in [-1, 1] (exponent 1 to 3), scaled to R0 = 1."""
    return ShapeFamily(
        name="supercircle",
        radius_fn=lambda theta, d: supercircle_radius(theta, d),
        lambda_range=SUPERCIRCLE_RANGE,
        mirror_x=True,
        half_turn=True,
        quarter_turn=True,
    )


def ellipse_axes(lam: float) -> tuple[float, float]:
    """Semi-axes (a, b) with (a - b)/(a + b) = lam and a*b = 1."""
    a = math.sqrt((1.0 + lam) / (1.0 - lam))
    return a, 1.0 / a


def ellipse_radius(theta, lam: float) -> np.ndarray:
    a, b = ellipse_axes(lam)
    c2 = np.cos(np.asarray(theta, dtype=float)) ** 2
    return b / np.sqrt(1.0 - (1.0 - b * b / (a * a)) * c2)


def make_ellipse() -> ShapeFamily:
    """Ellipses with lam = (a - b)/(a + b) on [-1/3, 1/3], area pi."""
    return ShapeFamily(
        name="ellipse",
        radius_fn=lambda theta, lam: ellipse_radius(theta, lam),
        lambda_range=ELLIPSE_RANGE,
        mirror_x=True,
        half_turn=True,
    )


def make_circle(radius: float = 1.0) -> ShapeFamily:
    return ShapeFamily(
        name="circle",
        radius_fn=lambda theta, lam: np.full(np.shape(theta), float(radius)),
        lambda_range=(-1.0, 1.0),
        mirror_x=True,
        half_turn=True,
        quarter_turn=True,
    )


def supercircle_c1(k: int) -> float:
    """Closed-form first-order coefficient C_k^(1); nonzero only for k = 4n."""
    if k <= 0 or k % 4:
        return 0.0
    n = k // 4
    return -1.0 / (4 * n * (4 * n * n - 1))


SUPERCIRCLE_C4_2 = (3.0 * math.pi**2 / 8.0 - 23.0 / 9.0) / 32.0


def supercircle_c1_square_sum(terms: int = 200000) -> float:
    """sum_n (C_{4n}^(1))^2, summed until the n^-6 tail is below round-off."""
    n = np.arange(1, terms + 1, dtype=float)
    return float(np.sum(1.0 / (16.0 * n * n * (4.0 * n * n - 1.0) ** 2)))


SUPERCIRCLE_C0_2 = -supercircle_c1_square_sum() / 4.0


def supercircle_closed_form(n_max: int = N_MAX) -> FourierBoundary:
    """Known closed-form supercircle coefficients.

    Order 1 is complete; at order 2 only C_0 (from the area relation) and C_4
    are available in closed form, every other second-order entry is zero here.
    """
    c1 = {k: supercircle_c1(k) for k in range(4, n_max + 1, 4)}
    return FourierBoundary.from_coefficients(
        cos={1: c1, 2: {0: SUPERCIRCLE_C0_2, 4: SUPERCIRCLE_C4_2}}, n_max=n_max
    )


ELLIPSE_COEFFS = {1: {2: 1.0}, 2: {0: -0.25, 4: 0.75}}


def ellipse_closed_form(n_max: int = N_MAX) -> FourierBoundary:
    return FourierBoundary.from_coefficients(cos=ELLIPSE_COEFFS, n_max=n_max)


# --- sampled boundaries ------------------------------------------------------


def _lagrange_weights(nodes: np.ndarray, x: float) -> np.ndarray:
    w = np.ones(nodes.size)
    for i in range(nodes.size):
        for j in range(nodes.size):
            if i != j:
                w[i] *= (x - nodes[j]) / (nodes[i] - nodes[j])
    return w


def shape_from_samples(
    rows: Mapping[float, Iterable[tuple[float, float]]] | Iterable[tuple[float, float, float]],
    name: str = "samples",
) -> ShapeFamily:
    """Family interpolated from sampled radii.

    ``rows`` is either ``{lam: [(theta, r), ...]}`` or an iterable of
    ``(lam, theta, r)`` triples.  Every lambda must use the same uniform
    theta grid over [0, 2 pi).  Between samples the radius is a trigonometric
    interpolant in theta and a polynomial interpolant in lambda.
    """
    groups: dict[float, list[tuple[float, float]]] = {}
    if isinstance(rows, Mapping):
        for lam, pairs in rows.items():
            groups[float(lam)] = [(float(t), float(r)) for t, r in pairs]
    else:
        for row in rows:
            if len(row) != 3:
                raise BoundaryError(f"expected (lambda, theta, r) triples, got {row!r}")
            lam, t, r = (float(v) for v in row)
            groups.setdefault(lam, []).append((t, r))
    if len(groups) < 2:
        raise BoundaryError("need samples for at least two distinct lambda values")

    lams = np.array(sorted(groups))
    grid = None
    table = []
    for lam in lams:
        pts = sorted(groups[lam])
        t = np.array([p[0] for p in pts])
        r = np.array([p[1] for p in pts])
        if t.size < 4:
            raise BoundaryError(f"too few angle samples at lambda={lam}")
        step = 2.0 * np.pi / t.size
        expected = t[0] + step * np.arange(t.size)
        if np.max(np.abs(t - expected)) > 1e-9 or t[0] < -1e-12 or t[0] >= step:
            raise BoundaryError(
                f"angles at lambda={lam} are not a uniform grid covering [0, 2*pi)"
            )
        if grid is None:
            grid = t
        elif grid.size != t.size or np.max(np.abs(grid - t)) > 1e-9:
            raise BoundaryError("all lambda values must share the same angle grid")
        if np.any(r <= 0) or np.any(~np.isfinite(r)):
            raise BoundaryError(f"non-positive radius in samples at lambda={lam}")
        table.append(r)

    spectra = np.fft.rfft(np.array(table), axis=1) / grid.size
    n_t = grid.size
    k = np.arange(spectra.shape[1])
    weight = np.where((k == 0) | ((n_t % 2 == 0) & (k == n_t // 2)), 1.0, 2.0)
    shift = np.exp(-1j * k * grid[0])

    def radius_fn(theta, lam):
        w = _lagrange_weights(lams, lam)
        coef = (w @ spectra) * shift * weight
        ang = np.multiply.outer(np.atleast_1d(theta), k)
        val = (np.cos(ang) * coef.real - np.sin(ang) * coef.imag).sum(axis=-1)
        return val.reshape(np.shape(theta))

    return ShapeFamily(
        name=name,
        radius_fn=radius_fn,
        lambda_range=(float(min(lams[0], 0.0)), float(max(lams[-1], 0.0))),
    )


SAMPLE_HEADER = ("lambda", "theta", "r")
COEFF_HEADER = ("sigma", "n", "kind", "value")


def read_samples(source: str | Path | io.TextIOBase, name: str | None = None) -> ShapeFamily:
    """Parse a ``lambda,theta,r`` file into a family."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        text = path.read_text()
        name = name or path.stem
    else:
        text = source.read()
    reader = csv.reader(line for line in text.splitlines() if line.strip() and not line.startswith("#"))
    try:
        header = tuple(h.strip() for h in next(reader))
    except StopIteration:
        raise BoundaryError("empty sample file") from None
    if header != SAMPLE_HEADER:
        raise BoundaryError(f"sample file header must be {','.join(SAMPLE_HEADER)}, got {','.join(header)}")
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if len(rec) != 3:
            raise BoundaryError(f"line {lineno}: expected 3 fields, got {len(rec)}")
        try:
            rows.append(tuple(float(v) for v in rec))
        except ValueError:
            raise BoundaryError(f"line {lineno}: non-numeric field in {rec!r}") from None
    return shape_from_samples(rows, name=name or "samples")


def format_samples(shape: ShapeFamily, lams: Iterable[float], n_theta: int = 64) -> str:
    theta = theta_grid(n_theta)
    out = [",".join(SAMPLE_HEADER)]
    for lam in lams:
        for t, r in zip(theta, shape.radius(theta, lam)):
            out.append(f"{lam:.17g},{t:.17g},{r:.17g}")
    return "\n".join(out) + "\n"


def format_coefficients(fb: FourierBoundary) -> str:
    """Rows ``sigma,n,kind,value``: sigma then n ascending, C before S."""
    out = [",".join(COEFF_HEADER)]
    for s in range(1, fb.max_order + 1):
        for n in range(fb.n_max + 1):
            out.append(f"{s},{n},C,{fb.C(s, n):.17g}")
            if n >= 1:
                out.append(f"{s},{n},S,{fb.S(s, n):.17g}")
    return "\n".join(out) + "\n"


def parse_coefficients(text: str, R0: float = 1.0) -> FourierBoundary:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or tuple(lines[0].split(",")) != COEFF_HEADER:
        raise BoundaryError(f"coefficient table header must be {','.join(COEFF_HEADER)}")
    cos: dict[int, dict[int, float]] = {}
    sin: dict[int, dict[int, float]] = {}
    n_max = 0
    for ln in lines[1:]:
        s, n, kind, v = ln.split(",")
        s, n = int(s), int(n)
        n_max = max(n_max, n)
        target = {"C": cos, "S": sin}.get(kind)
        if target is None:
            raise BoundaryError(f"unknown coefficient kind {kind!r}")
        target.setdefault(s, {})[n] = float(v)
    return FourierBoundary.from_coefficients(cos=cos, sin=sin, R0=R0, n_max=n_max)
