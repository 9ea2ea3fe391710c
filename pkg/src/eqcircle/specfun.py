"""Bessel functions of the first kind (integer order), their zeros, and Gamma.

Everything here is written against plain numpy so the package has no hard
dependency on scipy.  ``bessel_j_all`` is the vectorised workhorse used by the
collocation eigensolver; the scalar-looking helpers accept arrays as well.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

MAX_ORDER = 64
MAX_ZERO_INDEX = 64

# Lanczos approximation, g = 7, n = 9
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


class ConvergenceError(RuntimeError):
    """Root bracketing or refinement did not converge."""


def gamma(x: float) -> float:
    """Gamma function for x > 0 (Lanczos, reflection below 1/2)."""
    x = float(x)
    if not x > 0.0 or not math.isfinite(x):
        raise ValueError(f"gamma is only defined here for finite x > 0, got {x!r}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma(1.0 - x))
    # integers are exact via the factorial
    if x == int(x) and x <= 171:
        return float(math.factorial(int(x) - 1))
    z = x - 1.0
    acc = _LANCZOS_COEF[0]
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += c / (z + i)
    t = z + _LANCZOS_G + 0.5
    # split the power to avoid overflow for x near the top of the range
    half = t ** ((z + 0.5) / 2.0)
    return math.sqrt(2.0 * math.pi) * half * half * math.exp(-t) * acc


def _check_order(m: int) -> int:
    if int(m) != m or m < 0:
        raise ValueError(f"Bessel order must be a non-negative integer, got {m!r}")
    if m > MAX_ORDER:
        raise ValueError(f"Bessel order {m} exceeds the supported ceiling {MAX_ORDER}")
    return int(m)


def _check_arg(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(~np.isfinite(x)):
        raise ValueError("Bessel argument must be finite and non-negative")
    return x


def _series(m: int, x: np.ndarray) -> np.ndarray:
    # ascending series; used for small x where it converges in a handful of terms
    half = 0.5 * x
    term = half**m / math.factorial(m)
    total = term.copy()
    q = -half * half
    for k in range(1, 60):
        term = term * q / (k * (k + m))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def bessel_j_all(m_max: int, x) -> np.ndarray:
    """J_0 .. J_{m_max} at every point of ``x``.

    Miller's downward recurrence, normalised with J_0 + 2 sum J_2k = 1.
    Returns an array of shape ``(m_max + 1,) + x.shape``.  There is no order
    ceiling here; the public scalar functions enforce it.
    """
    x = _check_arg(x)
    shape = x.shape
    xf = x.ravel()
    out = np.zeros((m_max + 1, xf.size))
    small = xf < 1e-3
    big = ~small
    if np.any(small):
        xs = xf[small]
        for m in range(m_max + 1):
            out[m, small] = _series(m, xs)
    if np.any(big):
        xb = xf[big]
        top = max(m_max, int(xb.max()))
        start = top + int(math.sqrt(40.0 * top)) + 20
        start += start % 2
        jp1 = np.zeros_like(xb)
        j = np.full_like(xb, 1e-300)
        norm = np.zeros_like(xb)
        res = np.zeros((m_max + 1, xb.size))
        for k in range(start, 0, -1):
            jm1 = (2.0 * k / xb) * j - jp1
            jp1, j = j, jm1
            # k-1 is the order now held in j
            if k - 1 <= m_max:
                res[k - 1] = j
            if (k - 1) % 2 == 0 and k - 1 > 0:
                norm += 2.0 * j
            # growth per step is below 2k/x < 1e6, so checking every fourth step is safe
            if k % 4 == 0:
                big_vals = np.abs(j) > 1e200
                if big_vals.any():
                    s = np.where(big_vals, 1e-200, 1.0)
                    j *= s
                    jp1 *= s
                    norm *= s
                    res *= s
        norm += j
        out[:, big] = res / norm
    return out.reshape((m_max + 1,) + shape)


def bessel_j(m: int, x):
    """J_m(x) for integer 0 <= m <= 64 and x >= 0."""
    m = _check_order(m)
    x = _check_arg(x)
    val = bessel_j_all(m, x)[m]
    return float(val) if val.ndim == 0 else val


def bessel_j_prime(m: int, x):
    """dJ_m/dx via J_m' = (J_{m-1} - J_{m+1}) / 2, with J_0' = -J_1."""
    m = _check_order(m)
    x = _check_arg(x)
    tab = bessel_j_all(m + 1, x)
    val = -tab[1] if m == 0 else 0.5 * (tab[m - 1] - tab[m + 1])
    return float(val) if np.ndim(val) == 0 else val


def bessel_j_second(m: int, x):
    """d^2J_m/dx^2 from Bessel's equation; the x = 0 limit is taken from the series."""
    m = _check_order(m)
    x = _check_arg(x)
    tab = bessel_j_all(m + 1, x)
    j = tab[m]
    jp = -tab[1] if m == 0 else 0.5 * (tab[m - 1] - tab[m + 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        val = -jp / x - (1.0 - m * m / (x * x)) * j
    at0 = {0: -0.5, 2: 0.25}.get(m, 0.0)
    val = np.where(x == 0.0, at0, val)
    return float(val) if val.ndim == 0 else val


def _mcmahon(m: int, n: int) -> float:
    beta = (n + 0.5 * m - 0.25) * math.pi
    mu = 4.0 * m * m
    return beta - (mu - 1) / (8 * beta) - 4 * (mu - 1) * (7 * mu - 31) / (3 * (8 * beta) ** 3)


def _refine_zeros(m: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Zeros of J_m inside sign-change brackets [a_i, b_i], all refined together."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    fa = bessel_j_all(m, a)[m]
    fb = bessel_j_all(m, b)[m]
    if np.any(fa * fb > 0):
        raise ConvergenceError(f"no sign change for J_{m} in some bracket")
    # bisect down to a small bracket, then polish with safeguarded Newton
    while np.max(b - a) > 1e-3:
        c = 0.5 * (a + b)
        fc = bessel_j_all(m, c)[m]
        left = fa * fc <= 0
        b = np.where(left, c, b)
        a = np.where(left, a, c)
        fa = np.where(left, fa, fc)
    x = 0.5 * (a + b)
    for _ in range(50):
        tab = bessel_j_all(m + 1, x)
        fx = tab[m]
        dfx = -tab[1] if m == 0 else 0.5 * (tab[m - 1] - tab[m + 1])
        nxt = x - fx / dfx
        # shrink the bracket around the current iterate, then fall back to bisection
        # whenever Newton leaves it
        left = fa * fx <= 0
        b = np.where(left, x, b)
        a = np.where(left, a, x)
        fa = np.where(left, fa, fx)
        nxt = np.where((nxt < a) | (nxt > b), 0.5 * (a + b), nxt)
        done = np.abs(nxt - x) < 1e-15 * x
        x = nxt
        if np.all(done):
            return x
    if np.all(np.abs(bessel_j_all(m, x)[m]) <= 1e-12):
        return x
    raise ConvergenceError(f"Newton refinement failed for zeros of J_{m}")


@lru_cache(maxsize=None)
def _zeros_of_order(m: int, count: int) -> tuple[float, ...]:
    # consecutive zeros are never closer than ~3, so a half-unit scan cannot skip one
    hi = _mcmahon(m, count) + 5.0
    grid = np.arange(max(float(m), 0.5), hi + 1.0, 0.5)
    vals = bessel_j_all(m, grid)[m]
    idx = np.nonzero(vals[:-1] * vals[1:] < 0)[0][:count]
    if idx.size < count:
        raise ConvergenceError(f"found only {idx.size} of {count} zeros of J_{m}")
    return tuple(_refine_zeros(m, grid[idx], grid[idx + 1]).tolist())


def bessel_zero(m: int, n: int) -> float:
    """n-th positive zero of J_m (1-based)."""
    m = _check_order(m)
    if int(n) != n or n < 1 or n > MAX_ZERO_INDEX:
        raise ValueError(f"zero index must be an integer in 1..{MAX_ZERO_INDEX}, got {n!r}")
    n = int(n)
    # cache whole blocks so later requests for nearby indices are free
    block = min(MAX_ZERO_INDEX, max(8, 1 << (n - 1).bit_length()))
    return _zeros_of_order(m, block)[n - 1]


@dataclass
class BesselZeroTable:
    """Zeros rho_{m,n} for 0 <= m <= m_max, 1 <= n <= n_max."""

    m_max: int
    n_max: int
    entries: dict[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        for m in range(self.m_max + 1):
            for n in range(1, self.n_max + 1):
                self.entries[(m, n)] = bessel_zero(m, n)

    def __getitem__(self, key: tuple[int, int]) -> float:
        return self.entries[key]

    def sorted_levels(self, upper: float | None = None) -> list[tuple[float, int, int]]:
        """All stored (rho, m, n) in increasing rho, optionally capped at ``upper``."""
        out = sorted((rho, m, n) for (m, n), rho in self.entries.items())
        if upper is not None:
            out = [t for t in out if t[0] <= upper]
        return out

    def check(self) -> list[str]:
        """Return descriptions of violated invariants (empty when all hold)."""
        problems = []
        for (m, n), rho in self.entries.items():
            if abs(bessel_j(m, rho)) > 1e-12:
                problems.append(f"|J_{m}({rho})| > 1e-12")
            nxt = self.entries.get((m, n + 1))
            if nxt is not None and not rho < nxt:
                problems.append(f"rho_{m},{n} not below rho_{m},{n + 1}")
            up = self.entries.get((m + 1, n))
            if up is not None and not (rho < up and (nxt is None or up < nxt)):
                problems.append(f"interlacing fails at m={m}, n={n}")
        return problems
