import math
import warnings
from collections import Counter

import numpy as np
import pytest
from _oracles import ellipse_mathieu, rho
from scipy.special import jn_zeros

from eqcircle.boundary import ShapeFamily, ellipse_axes, make_circle, make_ellipse, make_supercircle
from eqcircle.oracle import (
    PARITY_SECTORS,
    AmbiguityWarning,
    ConditioningWarning,
    NumericLevel,
    OracleConfig,
    Sector,
    WindowTooCoarseError,
    classify_mode,
    dirichlet_eigs,
    family_levels,
    is_ambiguous,
    sector_levels,
    sector_of,
)
from eqcircle.perturb import Mode, energy, lowest_modes

pytestmark = pytest.mark.filterwarnings("ignore::eqcircle.oracle.ConditioningWarning")


def unit(theta):
    return np.ones_like(theta)


def circle_energies(k_lo, k_hi, sector=Sector.FULL):
    """Circle energies in a window, with multiplicity, from scipy's zero tables."""
    out = []
    for m in range(0, 40):
        for z in jn_zeros(m, 10):
            if k_lo <= z <= k_hi:
                if sector is Sector.FULL:
                    out += [z * z] * (1 if m == 0 else 2)
                else:
                    c, s = sector.orders(40)
                    out += [z * z] * (int(m in c) + int(m in s))
    return sorted(out)


class TestConfig:
    def test_defaults(self):
        cfg = OracleConfig()
        assert cfg.basis_order == 30 and cfg.boundary_nodes == 256 and cfg.sweep_step == 0.005
        assert cfg.n_basis == 61

    @pytest.mark.parametrize(
        "kw",
        [
            {"k_window": (0.0, 3.0)},
            {"k_window": (4.0, 3.0)},
            {"sweep_step": 0.0},
            {"boundary_nodes": 100},
            {"sweep_step": 0.4},
        ],
    )
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            OracleConfig(**kw)

    def test_sector_halves_basis(self):
        assert OracleConfig(symmetry_sector="CosEven", boundary_nodes=64).n_basis == 16

    def test_sector_orders(self):
        c, s = Sector.SIN_EVEN.orders(6)
        assert c.size == 0 and s.tolist() == [2, 4, 6]
        assert sector_of(Mode(3, 1, "Sin")) is Sector.SIN_ODD
        assert Sector.FULL.admits(Mode(2, 1, "Sin"))
        assert not Sector.COS_EVEN.admits(Mode(2, 1, "Sin"))


class TestCircle:
    def test_cos_even_example(self):
        levels = dirichlet_eigs(unit, OracleConfig(symmetry_sector="CosEven", k_window=(1, 6)))
        E = [lv.energy for lv in levels]
        assert E[:2] == pytest.approx([5.78318596, 26.37461643], abs=1e-8)
        assert E == pytest.approx(circle_energies(1, 6, Sector.COS_EVEN), abs=1e-8)

    def test_full_window_regression(self):
        levels = dirichlet_eigs(unit, OracleConfig(k_window=(1, 7)))
        E = [lv.energy for lv in levels]
        ref = circle_energies(1, 7)
        assert len(E) == len(ref)
        assert np.max(np.abs(np.array(E) - ref)) < 1e-8

    def test_level_fields(self):
        lv = dirichlet_eigs(unit, OracleConfig(symmetry_sector="SinOdd", k_window=(3, 4.5)))
        assert len(lv) == 1
        assert lv[0].energy == lv[0].k * lv[0].k
        assert lv[0].k == pytest.approx(rho(1, 1), abs=1e-10)
        assert lv[0].sector is Sector.SIN_ODD and lv[0].quality < 1e-6

    def test_sorted_and_degenerate_count(self):
        levels = dirichlet_eigs(unit, OracleConfig(k_window=(3, 4.5)))
        assert [lv.k for lv in levels] == sorted(lv.k for lv in levels)
        assert len(levels) == 2  # the l = 1 doublet

    def test_empty_window(self):
        assert dirichlet_eigs(unit, OracleConfig(symmetry_sector="CosEven", k_window=(3, 4.5))) == []

    def test_supercircle_delta_zero(self):
        cfg = OracleConfig(symmetry_sector="CosEven", k_window=(1, 6))
        sc = [lv.energy for lv in family_levels(make_supercircle(), 0.0, cfg)]
        ci = [lv.energy for lv in family_levels(make_circle(), 0.0, cfg)]
        assert sc == pytest.approx(ci, abs=1e-8)

    def test_scaling(self):
        # k scales by 1/0.9, so the shrunken window holds the same levels
        E1 = [lv.energy for lv in dirichlet_eigs(unit, OracleConfig(symmetry_sector="CosOdd", k_window=(1.08, 7.2)))]
        cfg = OracleConfig(symmetry_sector="CosOdd", k_window=(1.2, 8.0))
        E9 = [lv.energy for lv in dirichlet_eigs(lambda t: 0.9 * np.ones_like(t), cfg)]
        assert len(E9) == len(E1) == 3
        assert np.array(E9) == pytest.approx(np.array(E1) / 0.81, rel=1e-6)
        assert all(b > a for a, b in zip(E1, E9))

    def test_conditioning_warning(self):
        with pytest.warns(ConditioningWarning):
            dirichlet_eigs(unit, OracleConfig(symmetry_sector="CosEven", k_window=(2, 3)))

    def test_bad_radius(self):
        with pytest.raises(ValueError):
            dirichlet_eigs(lambda t: np.cos(t), OracleConfig(symmetry_sector="CosEven", k_window=(2, 3)))


class TestNonCircular:
    def test_diamond_is_a_square(self):
        # |x| + |y| <= a with area pi: a square of side sqrt(pi), E = pi (m^2 + n^2)
        levels = sector_levels(make_supercircle(), -1.0, OracleConfig(k_window=(1, 6)))
        E = sorted(lv.energy for lvs in levels.values() for lv in lvs)
        ref = sorted(math.pi * (m * m + n * n) for m in range(1, 6) for n in range(1, 6) if m * m + n * n <= 36 / math.pi)
        assert E == pytest.approx(ref, rel=1e-8)

    @pytest.mark.parametrize("lam", [0.1, -0.25])
    def test_ellipse_vs_mathieu(self, lam):
        a, b = ellipse_axes(lam)
        levels = sector_levels(make_ellipse(), lam, OracleConfig(k_window=(1, 6)))
        got = {s: [lv.energy for lv in lvs] for s, lvs in levels.items()}
        # cos/sin in the elliptic angle keep the parity of the polar ones when a > b;
        # for a < b the x axis is the minor axis and the roles of the sectors swap
        ref = {s: [] for s in PARITY_SECTORS}
        swap = a < b
        for m in range(8):
            for kind in ("Cos", "Sin"):
                if kind == "Sin" and m == 0:
                    continue
                E = ellipse_mathieu(a, b, m, kind, k_max=6.0, k_min=1.0)
                par = kind
                if swap and m % 2 == 1:
                    par = "Sin" if kind == "Cos" else "Cos"
                ref[sector_of(Mode(m, 1, par))] += E
        for s in PARITY_SECTORS:
            assert sorted(got[s]) == pytest.approx(sorted(ref[s]), rel=1e-9), s

    def test_ellipse_small_deformation_vs_perturbation(self):
        fam = make_ellipse()
        lv = family_levels(fam, 0.05, OracleConfig(k_window=(1, 3)))
        assert lv[0].energy == pytest.approx(energy(Mode(0, 1), fam, 0.05), rel=5e-3)
        assert lv[0].energy > 5.7832  # E2 > 0 for the ground state

    def test_sector_completeness(self):
        fam = make_ellipse()
        cfg = OracleConfig(k_window=(1, 6))
        full = Counter(round(lv.energy, 6) for lv in family_levels(fam, 0.15, cfg))
        parts = Counter(
            round(lv.energy, 6) for lvs in sector_levels(fam, 0.15, cfg).values() for lv in lvs
        )
        assert full == parts

    def test_asymmetric_family_needs_full_sector(self):
        fam = ShapeFamily("lopsided", lambda t, lam: 1 + lam * np.cos(t) + lam * np.sin(2 * t), (-0.2, 0.2))
        with pytest.raises(ValueError):
            family_levels(fam, 0.1, OracleConfig(symmetry_sector="CosEven"))
        family_levels(fam, 0.1, OracleConfig(k_window=(2, 3)))

    def test_window_too_coarse(self):
        # the l = 1 doublet split by 0.0038 in k at lam = 0.001
        fam = make_ellipse()
        with pytest.raises(WindowTooCoarseError):
            family_levels(fam, 0.001, OracleConfig(k_window=(3.7, 3.95), sweep_step=0.002))
        levels = family_levels(fam, 0.001, OracleConfig(k_window=(3.7, 3.95), sweep_step=0.001))
        assert len(levels) == 2


class TestClassify:
    ref = {m: m.rho**2 for m in lowest_modes(8)}

    def test_examples(self):
        lv = NumericLevel(k=math.sqrt(5.78319), sector=Sector.FULL, quality=0.0)
        assert classify_mode(lv, self.ref) == Mode(0, 1)
        lv = NumericLevel(k=math.sqrt(14.68197), sector=Sector.SIN_ODD, quality=0.0)
        assert classify_mode(lv, self.ref) == Mode(1, 1, "Sin")

    def test_full_sector_tie_goes_to_cos(self):
        lv = NumericLevel(k=math.sqrt(14.68197), sector=Sector.FULL, quality=0.0)
        with pytest.warns(AmbiguityWarning):
            assert classify_mode(lv, self.ref) == Mode(1, 1, "Cos")
        assert is_ambiguous(lv, self.ref)

    def test_tie_goes_to_lower_l(self):
        ref = {Mode(3, 1): 10.0, Mode(1, 1): 12.0}
        lv = NumericLevel(k=math.sqrt(11.0), sector=Sector.COS_ODD, quality=0.0)
        with pytest.warns(AmbiguityWarning):
            assert classify_mode(lv, ref) == Mode(1, 1)

    def test_ellipse_l2_pair_sectors_disambiguate(self):
        fam = make_ellipse()
        ref = {m: energy(m, fam, 0.2) for m in lowest_modes(6)}
        cfg = OracleConfig(k_window=(4.5, 5.6))
        with warnings.catch_warnings():
            warnings.simplefilter("error", AmbiguityWarning)
            got = {
                s: [classify_mode(lv, ref) for lv in family_levels(fam, 0.2, OracleConfig(**{**cfg.__dict__, "symmetry_sector": s}))]
                for s in (Sector.COS_EVEN, Sector.SIN_EVEN)
            }
        assert Mode(2, 1, "Sin") in got[Sector.SIN_EVEN]
        assert all(m.parity.value == "Cos" for m in got[Sector.COS_EVEN])

    def test_incompatible_sector(self):
        lv = NumericLevel(k=3.0, sector=Sector.SIN_ODD, quality=0.0)
        with pytest.raises(ValueError):
            classify_mode(lv, {Mode(0, 1): 5.78})
