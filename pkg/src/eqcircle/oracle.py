"""Reference Dirichlet eigensolver for star-shaped domains.

Method of particular solutions: trial functions J_m(k r) cos(m t), sin(m t)
are collocated on the boundary and at a few interior points.  For each k the
smallest singular value of the boundary block of an orthonormal basis of the
trial space (the sine of the subspace angle) is computed; eigenvalues are the
k where it dips to zero.  Interior rows keep the trial space from
degenerating to functions that are small everywhere.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .boundary import ShapeFamily
from .perturb import Mode, Parity
from .specfun import bessel_j_all, bessel_zero

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
SWEEP_CHUNK = 256


class WindowTooCoarseError(RuntimeError):
    """Two eigenvalues fall within one sweep cell."""


class ConditioningWarning(UserWarning):
    pass


class AmbiguityWarning(UserWarning):
    pass


class Sector(str, enum.Enum):
    COS_EVEN = "CosEven"
    COS_ODD = "CosOdd"
    SIN_EVEN = "SinEven"
    SIN_ODD = "SinOdd"
    FULL = "Full"

    def orders(self, M: int) -> tuple[np.ndarray, np.ndarray]:
        """Angular orders of the cos and sin trial functions in this sector."""
        m = np.arange(M + 1)
        even, odd = m[m % 2 == 0], m[m % 2 == 1]
        none = np.array([], dtype=int)
        return {
            Sector.COS_EVEN: (even, none),
            Sector.COS_ODD: (odd, none),
            Sector.SIN_EVEN: (none, even[even > 0]),
            Sector.SIN_ODD: (none, odd),
            Sector.FULL: (m, m[1:]),
        }[self]

    def admits(self, mode: Mode) -> bool:
        if self is Sector.FULL:
            return True
        return sector_of(mode) is self


PARITY_SECTORS = (Sector.COS_EVEN, Sector.COS_ODD, Sector.SIN_EVEN, Sector.SIN_ODD)


def sector_of(mode: Mode) -> Sector:
    even = mode.l % 2 == 0
    if mode.parity is Parity.COS:
        return Sector.COS_EVEN if even else Sector.COS_ODD
    return Sector.SIN_EVEN if even else Sector.SIN_ODD


@dataclass(frozen=True)
class OracleConfig:
    """Solver settings.

    ``refine_tol`` is the final bracket width in k of the golden-section
    refinement; ``quality_tol`` is the largest subspace-angle sine accepted
    as an eigenvalue (larger dips are discarded as spurious).
    """

    basis_order: int = 30
    boundary_nodes: int = 256
    k_window: tuple[float, float] = (1.0, 7.0)
    sweep_step: float = 0.005
    refine_tol: float = 1e-11
    quality_tol: float = 1e-2
    multiplicity_tol: float = 1e-6
    symmetry_sector: Sector = Sector.FULL

    def __post_init__(self):
        object.__setattr__(self, "symmetry_sector", Sector(self.symmetry_sector))
        lo, hi = self.k_window
        if not 0 < lo < hi:
            raise ValueError(f"k_window must be a positive interval, got {self.k_window}")
        if self.sweep_step <= 0 or self.refine_tol <= 0:
            raise ValueError("sweep_step and refine_tol must be positive")
        if self.boundary_nodes < 2 * self.n_basis:
            raise ValueError(
                f"{self.boundary_nodes} boundary nodes cannot overdetermine {self.n_basis} trial functions"
            )
        gap = self.circle_gap()
        if gap is not None and gap <= 2 * self.sweep_step:
            raise ValueError(
                f"sweep_step {self.sweep_step} does not separate circle levels {gap:.3g} apart"
            )

    @property
    def n_basis(self) -> int:
        c, s = self.symmetry_sector.orders(self.basis_order)
        return c.size + s.size

    def circle_gap(self) -> float | None:
        """Smallest gap between distinct circle wavenumbers of this sector inside the window."""
        lo, hi = self.k_window
        c, s = self.symmetry_sector.orders(self.basis_order)
        ks = set()
        for m in set(c.tolist()) | set(s.tolist()):
            for n in range(1, 64):
                z = bessel_zero(m, n)
                if z > hi:
                    break
                if z >= lo:
                    ks.add(round(z, 12))
        ks = sorted(ks)
        if len(ks) < 2:
            return None
        return float(np.min(np.diff(ks)))


@dataclass(frozen=True)
class NumericLevel:
    k: float
    sector: Sector
    quality: float
    matched_mode: Mode | None = None

    @property
    def energy(self) -> float:
        return self.k * self.k


@dataclass
class _Collocation:
    """Trial functions sampled at boundary and interior points."""

    r: np.ndarray
    theta: np.ndarray
    n_boundary: int
    cos_orders: np.ndarray
    sin_orders: np.ndarray
    angular: np.ndarray = field(init=False)

    def __post_init__(self):
        ang_c = np.cos(np.multiply.outer(self.theta, self.cos_orders))
        ang_s = np.sin(np.multiply.outer(self.theta, self.sin_orders))
        self.angular = np.concatenate([ang_c, ang_s], axis=1)
        self.orders = np.concatenate([self.cos_orders, self.sin_orders]).astype(int)
        self.m_max = int(self.orders.max())

    def matrices(self, ks: np.ndarray) -> np.ndarray:
        tab = bessel_j_all(self.m_max, np.multiply.outer(ks, self.r))
        radial = np.moveaxis(tab[self.orders], 0, -1)
        return radial * self.angular[None, :, :]

    def sines(self, ks: np.ndarray, all_values: bool = False) -> np.ndarray:
        A = self.matrices(np.atleast_1d(ks))
        norms = np.linalg.norm(A, axis=1, keepdims=True)
        A = A / np.where(norms > 0, norms, 1.0)
        U, s, _ = np.linalg.svd(A, full_matrices=False)
        # drop numerically dependent directions of the trial space
        keep = s > 1e-13 * s[:, :1]
        U = U * keep[:, None, :]
        sv = np.linalg.svd(U[:, : self.n_boundary, :], compute_uv=False)
        # zeroed columns show up as spurious zero singular values; push them out
        n_drop = (~keep).sum(axis=1)
        sv = np.sort(sv, axis=1)
        out = np.empty_like(sv)
        for i, d in enumerate(n_drop):
            out[i] = np.concatenate([sv[i, d:], np.full(d, np.inf)])
        return out if all_values else out[:, 0]


def _interior_points(radius: Callable[[np.ndarray], np.ndarray], count: int):
    i = np.arange(count)
    theta = 2.0 * np.pi * ((i * GOLDEN + 0.137) % 1.0)
    frac = 0.15 + 0.7 * ((i * 0.7548776662466927 + 0.31) % 1.0)
    return frac * radius(theta), theta


def _build(radius: Callable[[np.ndarray], np.ndarray], config: OracleConfig) -> _Collocation:
    nb = config.boundary_nodes
    theta_b = 2.0 * np.pi * (np.arange(nb) + 0.5) / nb
    r_b = np.asarray(radius(theta_b), dtype=float)
    if np.any(r_b <= 0):
        raise ValueError("boundary radius must be positive")
    r_i, theta_i = _interior_points(radius, max(2 * config.n_basis, 32))
    c, s = config.symmetry_sector.orders(config.basis_order)
    return _Collocation(
        r=np.concatenate([r_b, r_i]),
        theta=np.concatenate([theta_b, theta_i]),
        n_boundary=nb,
        cos_orders=c,
        sin_orders=s,
    )


def _golden(f: Callable[[np.ndarray], np.ndarray], a, b, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Golden-section minimisation on several brackets at once.

    ``f`` maps an array of abscissae to an array of values, so every
    iteration costs one batched evaluation whatever the number of brackets.
    """
    a = np.array(a, dtype=float, ndmin=1)
    b = np.array(b, dtype=float, ndmin=1)
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while np.any(b - a > tol):
        left = fc <= fd
        # left: keep [a, d], the old c becomes the new d
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - GOLDEN * (b - a)
        new_d = a + GOLDEN * (b - a)
        x = np.where(left, new_c, new_d)
        fx = f(x)
        c, d, fc, fd = (
            np.where(left, x, d),
            np.where(left, c, x),
            np.where(left, fx, fd),
            np.where(left, fc, fx),
        )
    left = fc <= fd
    return np.where(left, c, d), np.where(left, fc, fd)


def sweep(radius: Callable[[np.ndarray], np.ndarray], config: OracleConfig) -> tuple[np.ndarray, np.ndarray]:
    """Sampled (k, smallest subspace sine) over the window."""
    col = _build(radius, config)
    lo, hi = config.k_window
    ks = np.arange(lo, hi + 0.5 * config.sweep_step, config.sweep_step)
    vals = np.concatenate([col.sines(ks[i : i + SWEEP_CHUNK]) for i in range(0, ks.size, SWEEP_CHUNK)])
    return ks, vals


def dirichlet_eigs(radius: Callable[[np.ndarray], np.ndarray], config: OracleConfig | None = None) -> list[NumericLevel]:
    """All Dirichlet eigenvalues with k in ``config.k_window`` for r = radius(theta).

    Degenerate levels come back once per vanishing singular value.
    """
    config = config or OracleConfig()
    col = _build(radius, config)
    A = col.matrices(np.array([0.5 * sum(config.k_window)]))[0]
    norms = np.linalg.norm(A, axis=0)
    if norms.min() == 0 or norms.max() / norms.min() > 1e12:
        warnings.warn("trial-function column norms span more than 12 decades", ConditioningWarning, stacklevel=2)

    lo, hi = config.k_window
    step = config.sweep_step
    ks = np.arange(lo, hi + 0.5 * step, step)
    vals = np.concatenate([col.sines(ks[i : i + SWEEP_CHUNK]) for i in range(0, ks.size, SWEEP_CHUNK)])
    idx = [i for i in range(1, ks.size - 1) if vals[i] < vals[i - 1] and vals[i] <= vals[i + 1]]

    found: list[tuple[float, float]] = []
    if not idx:
        return []
    idx = np.array(idx)
    kk, qq = _golden(col.sines, ks[idx - 1], ks[idx + 1], config.refine_tol)
    for k, q in zip(kk.tolist(), qq.tolist()):
        if q > config.quality_tol:
            continue
        if found and k - found[-1][0] < 10 * config.refine_tol:
            continue
        if found and k - found[-1][0] < 2 * step:
            raise WindowTooCoarseError(
                f"levels at k={found[-1][0]:.6f} and k={k:.6f} are closer than two sweep steps"
            )
        found.append((k, q))

    levels = []
    for k, q in found:
        sv = col.sines(np.array([k]), all_values=True)[0]
        mult = max(1, int(np.sum(sv <= max(config.multiplicity_tol, 10 * q))))
        levels.extend(NumericLevel(k=k, sector=config.symmetry_sector, quality=q) for _ in range(mult))
    return levels


def _check_sector(family: ShapeFamily, sector: Sector) -> None:
    if sector is not Sector.FULL and not (family.mirror_x and family.half_turn):
        raise ValueError(
            f"family {family.name!r} lacks the mirror and half-turn symmetry needed for sector {sector.value}"
        )


def family_levels(family: ShapeFamily, lam: float, config: OracleConfig | None = None) -> list[NumericLevel]:
    """Levels of ``family`` at ``lam`` for the configured sector."""
    config = config or OracleConfig()
    _check_sector(family, config.symmetry_sector)
    lam = family.check_lambda(lam)
    return dirichlet_eigs(lambda t: family.radius(t, lam), config)


def sector_levels(
    family: ShapeFamily,
    lam: float,
    config: OracleConfig | None = None,
    sectors: Sequence[Sector] = PARITY_SECTORS,
) -> dict[Sector, list[NumericLevel]]:
    config = config or OracleConfig()
    return {s: family_levels(family, lam, replace(config, symmetry_sector=s)) for s in sectors}


def _rank(level: NumericLevel, reference: Mapping[Mode, float]) -> list[tuple[float, int, Mode]]:
    cands = [
        (abs(level.energy - e), mode.l, mode)
        for mode, e in reference.items()
        if level.sector.admits(mode)
    ]
    if not cands:
        raise ValueError(f"no reference mode is compatible with sector {level.sector.value}")
    cands.sort(key=lambda t: (t[0], t[1], t[2]))
    return cands


def classify_mode(level: NumericLevel, reference: Mapping[Mode, float], tol: float = 1e-11) -> Mode:
    """Mode whose reference energy is closest to the level, within the level's sector.

    Ties go to the lower angular order; an ``AmbiguityWarning`` is issued when
    the two best candidates are within ``2 * tol`` of each other.
    """
    cands = _rank(level, reference)
    if len(cands) > 1 and cands[1][0] - cands[0][0] <= 2 * tol:
        warnings.warn(
            f"level E={level.energy:.10g} is equally close to {cands[0][2]} and {cands[1][2]}",
            AmbiguityWarning,
            stacklevel=2,
        )
    return cands[0][2]


def is_ambiguous(level: NumericLevel, reference: Mapping[Mode, float], tol: float = 1e-11) -> bool:
    cands = _rank(level, reference)
    return len(cands) > 1 and cands[1][0] - cands[0][0] <= 2 * tol
