"""Deformation sweeps: perturbative and numerical energies side by side, plus
crossing / veering detection on the resulting branches.
"""
from __future__ import annotations

import csv
import enum
import io
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .boundary import ShapeFamily
from .oracle import (
    ConditioningWarning,
    NumericLevel,
    OracleConfig,
    Sector,
    family_levels,
    is_ambiguous,
    sector_of,
)
from .perturb import EnergyExpansion, Mode, Parity, energy, expansion, family_coefficients
from .specfun import bessel_zero

THREADS_ENV = "EQCIRCLE_THREADS"
CSV_HEADER = ("family", "lambda", "l", "j", "parity", "E0", "E1", "E2", "E_pert", "E_num", "rel_err", "flags")
EVENTS_HEADER = ("kind", "mode_a", "mode_b", "lambda_at", "min_gap", "source")


class InsufficientGridError(ValueError):
    pass


class EventKind(str, enum.Enum):
    CROSSING = "Crossing"
    VEERING = "Veering"


class Source(str, enum.Enum):
    PERTURBATIVE = "Perturbative"
    ORACLE = "Oracle"


def _fmt(x) -> str:
    if x is None:
        return ""
    return f"{float(x):.15g}"


@dataclass(frozen=True)
class ScanRow:
    lam: float
    mode: Mode
    terms: EnergyExpansion
    E_pert: float
    E_num: float | None = None
    flags: tuple[str, ...] = ()

    @property
    def rel_err(self) -> float | None:
        if self.E_num is None:
            return None
        return abs(self.E_pert - self.E_num) / self.E_num


@dataclass(frozen=True)
class SpectrumScan:
    family: str
    grid: tuple[float, ...]
    rows: tuple[ScanRow, ...]
    modes: tuple[Mode, ...] = field(default=())

    def series(self, mode: Mode, source: Source | str = Source.PERTURBATIVE) -> np.ndarray:
        """Energies of one branch on the grid; NaN where the oracle found nothing."""
        source = Source(source)
        out = np.full(len(self.grid), np.nan)
        pos = {lam: i for i, lam in enumerate(self.grid)}
        for row in self.rows:
            if row.mode == mode:
                val = row.E_pert if source is Source.PERTURBATIVE else row.E_num
                if val is not None:
                    out[pos[row.lam]] = val
        return out

    @property
    def has_oracle(self) -> bool:
        return any(row.E_num is not None for row in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(CSV_HEADER) + "\n")
        for row in self.rows:
            t = row.terms
            fields = [
                self.family,
                _fmt(row.lam),
                str(row.mode.l),
                str(row.mode.j),
                row.mode.parity.value,
                _fmt(t.E0),
                _fmt(t.E1),
                _fmt(t.E2),
                _fmt(row.E_pert),
                _fmt(row.E_num),
                _fmt(row.rel_err),
                ";".join(row.flags),
            ]
            buf.write(",".join(fields) + "\n")
        return buf.getvalue()


@dataclass(frozen=True)
class BranchEvent:
    kind: EventKind
    mode_a: Mode
    mode_b: Mode
    lambda_at: float
    min_gap: float
    source: Source


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


# --- oracle pass -------------------------------------------------------------


def _sector_modes(sector: Sector, k_hi: float) -> list[Mode]:
    """Every circle mode of the sector with rho below ``k_hi``."""
    out = []
    l = 0
    while bessel_zero(l, 1) <= k_hi:
        j = 1
        while bessel_zero(l, j) <= k_hi:
            for parity in (Parity.COS, Parity.SIN) if l else (Parity.COS,):
                m = Mode(l, j, parity)
                if sector.admits(m):
                    out.append(m)
            j += 1
        l += 1
    return out


def _window(ks: Iterable[float]) -> tuple[float, float]:
    ks = list(ks)
    return max(0.5, 0.85 * min(ks) - 0.1), 1.1 * max(ks) + 0.1


def _greedy_match(levels: Sequence[NumericLevel], predicted: dict[Mode, float]):
    """Pair levels with modes, closest pairs first, each used at most once."""
    pairs = sorted(
        (abs(lv.energy - e), m.l, m, i)
        for i, lv in enumerate(levels)
        for m, e in predicted.items()
        if lv.sector.admits(m)
    )
    taken_lv: set[int] = set()
    out: dict[Mode, int] = {}
    for _, _, m, i in pairs:
        if m in out or i in taken_lv:
            continue
        out[m] = i
        taken_lv.add(i)
    return out


def _track(
    grid: Sequence[float],
    levels: Sequence[Sequence[NumericLevel]],
    pert: dict[Mode, np.ndarray],
    tol: float,
):
    """Follow every branch outward from the grid point closest to lam = 0.

    Predictions start from the perturbative energies and afterwards
    extrapolate the branch's own numerical values, so a branch is followed
    through regions where the series is poor.
    """
    n = len(grid)
    E = {m: np.full(n, np.nan) for m in pert}
    flags: dict[tuple[Mode, int], list[str]] = {}
    start = int(np.argmin(np.abs(np.asarray(grid))))

    def visit(i, prev):
        pred = {}
        for m in pert:
            done = [p for p in prev if not math.isnan(E[m][p])]
            if len(done) >= 2:
                p1, p2 = done[-1], done[-2]
                slope = (E[m][p1] - E[m][p2]) / (grid[p1] - grid[p2])
                pred[m] = E[m][p1] + slope * (grid[i] - grid[p1])
            elif done:
                p1 = done[-1]
                pred[m] = E[m][p1] + pert[m][i] - pert[m][p1]
            else:
                pred[m] = pert[m][i]
        lv = levels[i]
        match = _greedy_match(lv, pred)
        for m, k in match.items():
            E[m][i] = lv[k].energy
            if is_ambiguous(lv[k], pred, tol):
                flags.setdefault((m, i), []).append("ambiguous")

    visit(start, [])
    for order in (range(start + 1, n), range(start - 1, -1, -1)):
        prev = [start]
        for i in order:
            visit(i, prev)
            prev.append(i)
    return E, flags


def _oracle_energies(
    family: ShapeFamily,
    grid: Sequence[float],
    modes: Sequence[Mode],
    pert_fn,
    config: OracleConfig,
    threads: int,
):
    if family.mirror_x and family.half_turn:
        sectors = sorted({sector_of(m) for m in modes}, key=lambda s: s.value)
    else:
        sectors = [Sector.FULL]

    jobs = []
    plans = []
    for sector in sectors:
        wanted = [m for m in modes if sector.admits(m)]
        ks = [m.rho for m in wanted]
        for m in wanted:
            ks.extend(math.sqrt(e) for e in (pert_fn(m, lam) for lam in grid) if e > 0)
        window = _window(ks)
        tracked = sorted(set(_sector_modes(sector, window[1] + 0.5)) | set(wanted))
        cfg = replace(config, symmetry_sector=sector, k_window=window)
        plans.append((sector, tracked, cfg))
        jobs.extend((cfg, lam) for lam in grid)

    def run(job):
        cfg, lam = job
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConditioningWarning)
            return family_levels(family, lam, cfg)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]

    energies: dict[Mode, np.ndarray] = {}
    flags: dict[tuple[Mode, int], list[str]] = {}
    n = len(grid)
    for s_idx, (sector, tracked, cfg) in enumerate(plans):
        levels = results[s_idx * n : (s_idx + 1) * n]
        pert = {m: np.array([pert_fn(m, lam) for lam in grid]) for m in tracked}
        E, fl = _track(grid, levels, pert, cfg.refine_tol)
        for m in modes:
            if sector.admits(m):
                energies[m] = E[m]
        flags.update({key: val for key, val in fl.items() if key[0] in modes})
    return energies, flags


# --- scan --------------------------------------------------------------------


def scan(
    family: ShapeFamily,
    grid: Iterable[float],
    modes: Iterable[Mode],
    with_oracle: bool = False,
    config: OracleConfig | None = None,
    threads: int | None = None,
) -> SpectrumScan:
    """Tabulate E(lam) for ``modes`` over ``grid``, optionally against the oracle.

    Rows are sorted by (lam, mode).  Oracle branches are labelled by
    continuation from the grid point nearest lam = 0; a mode the oracle could
    not follow gets an ``unmatched`` flag instead of a number.
    """
    grid = tuple(sorted({family.check_lambda(x) for x in grid}))
    modes = tuple(sorted(set(modes)))
    if not grid:
        raise ValueError("empty lambda grid")
    if not modes:
        raise ValueError("no modes requested")
    fb = family_coefficients(family)
    terms = {m: expansion(m, fb) for m in modes}

    cache: dict[tuple[Mode, float], float] = {}

    def pert_fn(m, lam):
        key = (m, lam)
        if key not in cache:
            cache[key] = energy(m, family, lam)
        return cache[key]

    num: dict[Mode, np.ndarray] = {}
    flags: dict[tuple[Mode, int], list[str]] = {}
    if with_oracle:
        config = config or OracleConfig()
        num, flags = _oracle_energies(family, grid, modes, pert_fn, config, threads or thread_count())

    rows = []
    for i, lam in enumerate(grid):
        for m in modes:
            e_num = None
            fl = list(flags.get((m, i), []))
            if with_oracle:
                v = num[m][i]
                if math.isnan(v):
                    fl.append("unmatched")
                else:
                    e_num = float(v)
            rows.append(ScanRow(lam, m, terms[m], float(pert_fn(m, lam)), e_num, tuple(fl)))
    return SpectrumScan(family.name, grid, tuple(rows), modes)


# --- events ------------------------------------------------------------------


def default_gap_floor(scan_: SpectrumScan, config: OracleConfig | None = None) -> float:
    """10 refine_tol E0, with E0 the largest circle energy among the modes."""
    config = config or OracleConfig()
    return 10.0 * config.refine_tol * max(m.rho**2 for m in scan_.modes)


def _events_for_gap(lams: np.ndarray, g: np.ndarray, floor: float):
    """Events of one signed gap series (already restricted to finite samples).

    Samples with |g| <= floor count as contacts and carry no sign.  A run of
    contacts flanked by opposite signs is a crossing; flanked by equal signs it
    is a tangential touch, reported as veering with its (tiny) gap.
    """
    out = []
    sgn = np.where(np.abs(g) <= floor, 0, np.sign(g)).astype(int)
    n = g.size
    i = 0
    while i < n:
        if sgn[i] != 0:
            # direct sign flip between neighbours
            if i + 1 < n and sgn[i + 1] == -sgn[i]:
                t = g[i] / (g[i] - g[i + 1])
                lam_at = lams[i] + t * (lams[i + 1] - lams[i])
                out.append((EventKind.CROSSING, lam_at, min(abs(g[i]), abs(g[i + 1]))))
            i += 1
            continue
        j = i
        while j < n and sgn[j] == 0:
            j += 1
        if i > 0 and j < n:
            lam_at = 0.5 * (lams[i] + lams[j - 1])
            gap = float(np.min(np.abs(g[i:j])))
            kind = EventKind.CROSSING if sgn[i - 1] != sgn[j] else EventKind.VEERING
            out.append((kind, lam_at, gap))
        i = j
    a = np.abs(g)
    for i in range(1, n - 1):
        if sgn[i] == 0 or sgn[i - 1] != sgn[i] or sgn[i + 1] != sgn[i]:
            continue
        if a[i] < a[i - 1] and a[i] < a[i + 1]:
            out.append((EventKind.VEERING, lams[i], a[i]))
    return out


def detect_events(
    scan_: SpectrumScan,
    gap_floor: float | None = None,
    sources: Sequence[Source | str] | None = None,
) -> list[BranchEvent]:
    """Crossings and veerings between every pair of scanned branches."""
    if len(scan_.grid) < 3:
        raise InsufficientGridError(f"need at least 3 grid points per mode, got {len(scan_.grid)}")
    floor = default_gap_floor(scan_) if gap_floor is None else float(gap_floor)
    if sources is None:
        sources = [Source.PERTURBATIVE] + ([Source.ORACLE] if scan_.has_oracle else [])
    lams = np.asarray(scan_.grid)
    events = []
    for source in map(Source, sources):
        series = {m: scan_.series(m, source) for m in scan_.modes}
        for ia, a in enumerate(scan_.modes):
            for b in scan_.modes[ia + 1 :]:
                g = series[a] - series[b]
                ok = np.isfinite(g)
                if ok.sum() < 3:
                    continue
                for kind, lam_at, gap in _events_for_gap(lams[ok], g[ok], floor):
                    events.append(BranchEvent(kind, a, b, float(lam_at), float(gap), source))
    events.sort(key=lambda e: (e.source.value, e.mode_a, e.mode_b, e.lambda_at, e.kind.value))
    return events


def format_events(events: Iterable[BranchEvent]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EVENTS_HEADER)
    for e in events:
        w.writerow([e.kind.value, str(e.mode_a), str(e.mode_b), _fmt(e.lambda_at), _fmt(e.min_gap), e.source.value])
    return buf.getvalue()


def write_scan(scan_: SpectrumScan, out: str | Path, events: Iterable[BranchEvent] | None = None) -> tuple[Path, Path | None]:
    """Write the CSV table and, when given, ``<out>.events`` next to it."""
    out = Path(out)
    out.write_text(scan_.to_csv())
    ev_path = None
    if events is not None:
        ev_path = out.with_name(out.name + ".events")
        ev_path.write_text(format_events(events))
    return out, ev_path
