"""Energy corrections about the equivalent circle.

Units: hbar^2/2m = 1 and lengths in units of the equal-area radius R0, so a
circle mode has energy rho_{l,j}^2 and every energy is k^2 in those units.
The boundary is r = R0 (1 + lam f1 + lam^2 f2 + ...); ``E1`` and ``E2`` are the
coefficients of lam and lam^2 in E(lam).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache, total_ordering

import numpy as np

from .boundary import FourierBoundary, ShapeFamily, equivalent_radius, fourier_expand
from .specfun import bessel_j_all, bessel_zero

SINE_TOL = 1e-12
DEGENERACY_TOL = 1e-10


class UnsupportedBoundaryError(ValueError):
    """The l != 0 corrections assume a cosine-only boundary."""


class DegeneracyError(ArithmeticError):
    """A Bessel function in a denominator vanishes at the unperturbed zero."""


class Parity(str, enum.Enum):
    COS = "Cos"
    SIN = "Sin"


@total_ordering
@dataclass(frozen=True)
class Mode:
    """Circle eigenstate J_l(rho r) cos(l theta) or sin(l theta), rho the j-th zero."""

    l: int
    j: int
    parity: Parity = Parity.COS

    def __post_init__(self):
        object.__setattr__(self, "parity", Parity(self.parity))
        if int(self.l) != self.l or self.l < 0 or int(self.j) != self.j or self.j < 1:
            raise ValueError(f"invalid mode indices l={self.l}, j={self.j}")
        if self.l == 0 and self.parity is Parity.SIN:
            raise ValueError("l = 0 has no sine state")

    def _key(self):
        return (self.l, self.j, self.parity is Parity.SIN)

    def __lt__(self, other: "Mode") -> bool:
        return self._key() < other._key()

    @property
    def rho(self) -> float:
        return bessel_zero(self.l, self.j)

    @property
    def partner(self) -> "Mode":
        """The other parity at the same (l, j); l = 0 is its own partner."""
        if self.l == 0:
            return self
        other = Parity.SIN if self.parity is Parity.COS else Parity.COS
        return Mode(self.l, self.j, other)

    def __str__(self) -> str:
        return f"{self.l},{self.j},{self.parity.value}"

    @classmethod
    def parse(cls, text: str) -> "Mode":
        parts = [p.strip() for p in text.split(",")]
        if len(parts) == 2:
            parts.append("Cos")
        if len(parts) != 3:
            raise ValueError(f"mode must look like 'l,j,Cos', got {text!r}")
        parity = parts[2].capitalize()
        return cls(int(parts[0]), int(parts[1]), Parity(parity))


def lowest_modes(count: int) -> list[Mode]:
    """The ``count`` lowest circle modes, cos before sin within a degenerate pair."""
    levels = []
    for l in range(0, 40):
        for j in range(1, 20):
            levels.append((bessel_zero(l, j), l, j))
    levels.sort()
    out: list[Mode] = []
    for _, l, j in levels:
        out.append(Mode(l, j, Parity.COS))
        if l:
            out.append(Mode(l, j, Parity.SIN))
        if len(out) >= count:
            break
    return out[:count]


FIRST5 = (
    Mode(0, 1),
    Mode(1, 1, Parity.COS),
    Mode(1, 1, Parity.SIN),
    Mode(2, 1, Parity.COS),
    Mode(2, 1, Parity.SIN),
)


@dataclass(frozen=True)
class EnergyExpansion:
    mode: Mode
    E0: float
    E1: float
    E2: float

    def __call__(self, lam):
        return self.E0 + lam * self.E1 + lam * lam * self.E2


def e0(mode: Mode) -> float:
    return mode.rho**2


def _require_cosine_boundary(mode: Mode, fb: FourierBoundary, orders=(1,)) -> None:
    if mode.l == 0:
        return
    for s in orders:
        if s <= fb.max_order and fb.has_sine_terms(s, SINE_TOL):
            raise UnsupportedBoundaryError(
                f"mode {mode}: boundary has sine terms at order {s}; the l != 0 corrections "
                "are only available for mirror-symmetric (cosine-only) boundaries"
            )


def _log_derivatives(rho: float, indices) -> dict[int, float]:
    """w_n = rho J_n'(rho) / J_n(rho) for the requested n."""
    indices = sorted(set(indices))
    if not indices:
        return {}
    top = indices[-1] + 1
    tab = bessel_j_all(top, rho)
    out = {}
    for n in indices:
        jn = tab[n]
        jp = -tab[1] if n == 0 else 0.5 * (tab[n - 1] - tab[n + 1])
        _check_denominator(n, jn, jp, rho)
        out[n] = rho * jp / jn
    return out


def _check_denominator(n: int, jn: float, jp: float, rho: float) -> None:
    # relative to the local envelope: J_n(rho) is legitimately tiny for n >> rho
    if abs(jn) < DEGENERACY_TOL * math.hypot(jn, jp):
        raise DegeneracyError(f"J_{n} vanishes at rho={rho}; degenerate perturbation theory needed")


def e1(mode: Mode, fb: FourierBoundary) -> float:
    """First-order energy: 0 for l = 0, -/+ C_{2l}^(1) E0 for cos/sin states."""
    if mode.l == 0:
        return 0.0
    _require_cosine_boundary(mode, fb)
    sign = -1.0 if mode.parity is Parity.COS else 1.0
    return sign * fb.C(1, 2 * mode.l) * e0(mode)


def _e2_ground(mode: Mode, fb: FourierBoundary) -> float:
    rho = mode.rho
    p = np.arange(1, fb.n_max + 1)
    weight = fb.cos[0, 1:] ** 2 + fb.sin[0, 1:] ** 2
    used = p[weight != 0.0]
    w = _log_derivatives(rho, used)
    total = sum(weight[n - 1] * (w[n] + 0.5) for n in used)
    return e0(mode) * (total - 2.0 * fb.C(2, 0))


def _e2_excited(mode: Mode, fb: FourierBoundary) -> float:
    l, rho = mode.l, mode.rho
    C = fb.C
    cos_state = mode.parity is Parity.COS
    sgn = 1.0 if cos_state else -1.0
    n_top = fb.n_max + l

    ratio = 0.5 * C(1, 2 * l) ** 2
    ratio += 0.25 * sum(
        C(1, n) * (2.0 * C(1, n) + sgn * (C(1, 2 * l + n) + C(1, 2 * l - n)))
        for n in range(1, fb.n_max + 1)
    )
    ratio += -2.0 * C(2, 0) - sgn * C(2, 2 * l)

    # coupling to the other angular channels through f1
    weights = {}
    for n in range(0 if not cos_state else 1, n_top + 1):
        if n == l:
            continue
        c = C(1, n + l) + sgn * C(1, abs(n - l))
        if c != 0.0:
            weights[n] = c * c
    if cos_state and C(1, l) != 0.0:
        # n = 0 channel: cos(l t) * cos(l t) carries only half the weight
        weights[0] = 2.0 * C(1, l) ** 2
    w = _log_derivatives(rho, weights)
    ratio += sum(weights[n] * w[n] / 2.0 for n in weights)
    return e0(mode) * ratio


def e2(mode: Mode, fb: FourierBoundary) -> float:
    """Second-order energy coefficient."""
    if fb.max_order < 2:
        raise ValueError("second-order energies need coefficients up to sigma = 2")
    if mode.l == 0:
        return _e2_ground(mode, fb)
    _require_cosine_boundary(mode, fb, orders=(1, 2))
    return _e2_excited(mode, fb)


def expansion(mode: Mode, fb: FourierBoundary) -> EnergyExpansion:
    return EnergyExpansion(mode, e0(mode), e1(mode, fb), e2(mode, fb))


@lru_cache(maxsize=64)
def family_coefficients(family: ShapeFamily) -> FourierBoundary:
    return fourier_expand(family, sigma_max=2)


def energy(mode: Mode, family: ShapeFamily, lam: float) -> float:
    """E0 + lam E1 + lam^2 E2 in units of hbar^2/(2m) with lengths in the family's units.

    For the built-in families R0 = 1 and this is the dimensionless k^2.
    """
    lam = family.check_lambda(lam)
    fb = family_coefficients(family)
    R0 = equivalent_radius(family, lam)
    return expansion(mode, fb)(lam) / (R0 * R0)


# --- wavefunction coefficients ---------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(80)
_GL_R = 0.5 * (_GL_NODES + 1.0)
_GL_W = 0.5 * _GL_WEIGHTS


def normalization(mode: Mode) -> float:
    """N with N^2 int_disk J_l(rho r)^2 ang(l theta)^2 = 1 on the unit disk."""
    rho = mode.rho
    jl1 = bessel_j_all(mode.l + 1, rho)[mode.l + 1]
    angular = 2.0 * math.pi if mode.l == 0 else math.pi
    return 1.0 / math.sqrt(angular * 0.5 * jl1 * jl1)


def _particular_overlap(mode: Mode) -> float:
    """int_0^1 r J_l J_{l+1}(rho r) r dr / int_0^1 J_l^2 r dr."""
    rho, l = mode.rho, mode.l
    tab = bessel_j_all(l + 1, rho * _GL_R)
    num = np.sum(_GL_W * _GL_R**2 * tab[l] * tab[l + 1])
    den = np.sum(_GL_W * _GL_R * tab[l] ** 2)
    return num / den


@dataclass(frozen=True)
class WavefunctionExpansion:
    """psi = psi0 + lam psi1 (+ lam^2 psi2 for l = 0) on the unit disk.

    ``a[p]``/``a_bar[p]`` multiply J_p(rho r) cos(p t)/sin(p t) in psi1; the
    particular solution -(E1/E0)(rho r/2) N J_{l+1}(rho r) ang(l t) is added
    separately.  ``b``, ``b_bar`` are the matching second-order arrays, only
    filled for l = 0 (``None`` otherwise).  The p = l entries are fixed by
    requiring each correction to be orthogonal to psi0.
    """

    mode: Mode
    N: float
    E1_ratio: float
    a: np.ndarray
    a_bar: np.ndarray
    E2_ratio: float | None = None
    b: np.ndarray | None = None
    b_bar: np.ndarray | None = None

    def _angular(self, theta):
        l = self.mode.l
        return np.sin(l * theta) if self.mode.parity is Parity.SIN else np.cos(l * theta)

    def _series(self, cos_c, sin_c, ratio, x, theta):
        P = cos_c.size - 1
        tab = bessel_j_all(P + 1, x)
        p = np.arange(P + 1)[:, None]
        ang = p * theta[None, :]
        val = np.sum(tab[: P + 1] * (cos_c[:, None] * np.cos(ang) + sin_c[:, None] * np.sin(ang)), axis=0)
        l = self.mode.l
        val -= ratio * 0.5 * x * self.N * tab[l + 1] * self._angular(theta)
        return val

    def psi0(self, r, theta):
        x = self.mode.rho * np.asarray(r, dtype=float)
        return self.N * bessel_j_all(self.mode.l, x)[self.mode.l] * self._angular(np.asarray(theta))

    def psi1(self, r, theta):
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        x = self.mode.rho * r.ravel()
        return self._series(self.a, self.a_bar, self.E1_ratio, x, theta.ravel()).reshape(r.shape)

    def psi2(self, r, theta):
        if self.b is None:
            raise NotImplementedError("second-order wavefunction is only available for l = 0")
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        x = self.mode.rho * r.ravel()
        return self._series(self.b, self.b_bar, self.E2_ratio, x, theta.ravel()).reshape(r.shape)

    def evaluate(self, r, theta, lam: float, order: int = 1):
        out = self.psi0(r, theta)
        if order >= 1:
            out = out + lam * self.psi1(r, theta)
        if order >= 2:
            out = out + lam * lam * self.psi2(r, theta)
        return out


def _first_order_arrays(mode: Mode, fb: FourierBoundary, N: float):
    l, rho = mode.l, mode.rho
    P = fb.n_max + l
    a = np.zeros(P + 1)
    a_bar = np.zeros(P + 1)
    tab = bessel_j_all(P + 1, rho)
    jl_prime = -tab[1] if l == 0 else 0.5 * (tab[l - 1] - tab[l + 1])

    def over(p, val):
        if val == 0.0:
            return 0.0
        _check_denominator(p, tab[p], 0.5 * (tab[abs(p - 1)] - tab[p + 1]), rho)
        return val / tab[p]

    if l == 0:
        for p in range(1, fb.n_max + 1):
            a[p] = over(p, -rho * N * fb.C(1, p) * jl_prime)
            a_bar[p] = over(p, -rho * N * fb.S(1, p) * jl_prime)
        return a, a_bar
    C = fb.C
    if mode.parity is Parity.COS:
        a[0] = over(0, -0.5 * rho * N * jl_prime * C(1, l))
        for p in range(1, P + 1):
            if p != l:
                a[p] = over(p, -0.5 * rho * N * jl_prime * (C(1, p + l) + C(1, abs(p - l))))
    else:
        for p in range(1, P + 1):
            if p != l:
                a_bar[p] = over(p, 0.5 * rho * N * jl_prime * (C(1, p + l) - C(1, abs(p - l))))
    return a, a_bar


def _second_order_ground(mode: Mode, fb: FourierBoundary, N: float, a: np.ndarray, a_bar: np.ndarray):
    """Project the lam^2 boundary condition for an l = 0 state.

    psi2(1, t) = -[f1 d_r psi1 + f2 d_r psi0 + f1^2 d_rr psi0 / 2] at r = 1.
    The constant part fixes E2, the cos/sin(k t) parts give b_k J_k(rho).
    """
    rho = mode.rho
    K = 2 * (a.size - 1)
    n_t = 4 * K + 8
    theta = 2.0 * np.pi * np.arange(n_t) / n_t
    tab = bessel_j_all(K + 1, rho)
    jp = np.empty(a.size)
    jp[0] = -tab[1]
    jp[1:] = 0.5 * (tab[0 : a.size - 1] - tab[2 : a.size + 1])
    p = np.arange(a.size)
    ang = np.multiply.outer(theta, p)
    dpsi1 = rho * (np.cos(ang) @ (a * jp) + np.sin(ang) @ (a_bar * jp))
    dpsi0 = N * rho * jp[0]
    # J_0'' = -J_0'/x at a zero of J_0
    ddpsi0 = -N * rho * jp[0]
    f1 = fb.f(1, theta)
    f2 = fb.f(2, theta)
    rhs = -(f1 * dpsi1 + f2 * dpsi0 + 0.5 * f1 * f1 * ddpsi0)
    spec = np.fft.rfft(rhs) / n_t
    const = spec[0].real
    # constant part: -(E2/E0)(rho/2) N J_1(rho) = const
    e2_ratio = -2.0 * const / (rho * N * tab[1])
    b = np.zeros(K + 1)
    b_bar = np.zeros(K + 1)
    for k in range(1, K + 1):
        _check_denominator(k, tab[k], 0.5 * (tab[k - 1] - tab[k + 1]), rho)
        b[k] = 2.0 * spec[k].real / tab[k]
        b_bar[k] = -2.0 * spec[k].imag / tab[k]
    b[0] = e2_ratio * 0.5 * rho * N * _particular_overlap(mode)
    return e2_ratio, b, b_bar


def psi1_coeffs(mode: Mode, fb: FourierBoundary) -> WavefunctionExpansion:
    """Wavefunction corrections in the gauge <psi0, psi_k> = 0."""
    _require_cosine_boundary(mode, fb)
    N = normalization(mode)
    ratio = e1(mode, fb) / e0(mode)
    a, a_bar = _first_order_arrays(mode, fb, N)
    own = ratio * 0.5 * mode.rho * N * _particular_overlap(mode)
    if mode.parity is Parity.SIN:
        a_bar[mode.l] = own
    else:
        a[mode.l] = own
    if mode.l == 0 and fb.max_order >= 2:
        e2_ratio, b, b_bar = _second_order_ground(mode, fb, N, a, a_bar)
        return WavefunctionExpansion(mode, N, ratio, a, a_bar, e2_ratio, b, b_bar)
    return WavefunctionExpansion(mode, N, ratio, a, a_bar)


def e2_from_boundary_projection(mode: Mode, fb: FourierBoundary) -> float:
    """E2 for an l = 0 state read off the projected lam^2 boundary condition.

    Independent of the closed-form sum in :func:`e2`; used as a cross-check.
    """
    if mode.l != 0:
        raise ValueError("projection route is only implemented for l = 0")
    wf = psi1_coeffs(mode, fb)
    return wf.E2_ratio * e0(mode)


def boundary_residual(mode: Mode, family: ShapeFamily, lam: float, order: int = 1, n_theta: int = 256) -> float:
    """max_theta |psi truncated at ``order``| on the true boundary r(theta, lam) / R0(lam).

    Order 0 and 1 are available for every mode, order 2 for l = 0 only.
    """
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    fb = family_coefficients(family)
    wf = psi1_coeffs(mode, fb)
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    r = family.radius(theta, lam) / equivalent_radius(family, lam)
    return float(np.max(np.abs(wf.evaluate(r, theta, lam, order))))
