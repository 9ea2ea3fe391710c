import io
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import gamma as sp_gamma

from eqcircle.boundary import (
    SUPERCIRCLE_C0_2,
    SUPERCIRCLE_C4_2,
    BoundaryError,
    FourierBoundary,
    ShapeFamily,
    TruncationWarning,
    ellipse_axes,
    ellipse_closed_form,
    equivalent_radius,
    format_coefficients,
    format_samples,
    fourier_expand,
    make_circle,
    make_ellipse,
    make_supercircle,
    parse_coefficients,
    read_samples,
    shape_from_samples,
    supercircle_c1,
    supercircle_c1_square_sum,
    supercircle_closed_form,
    supercircle_radius,
    theta_grid,
    verify_constraints,
)


def quad_area(radius):
    # independent adaptive quadrature of 1/2 int r^2, split at the axis points
    edges = np.linspace(0, 2 * np.pi, 9)
    return sum(
        0.5 * quad(lambda t: float(radius(np.array([t]))[0]) ** 2, a, b, epsabs=0, epsrel=1e-13, limit=400)[0]
        for a, b in zip(edges[:-1], edges[1:])
    )


class TestEquivalentRadius:
    @pytest.mark.parametrize("a", [0.3, 1.0, 2.5])
    def test_circle(self, a):
        assert equivalent_radius(make_circle(a), 0.4) == pytest.approx(a, rel=1e-14)

    def test_supercircle_delta_zero_is_circle(self):
        th = theta_grid(64)
        assert np.allclose(supercircle_radius(th, 0.0, a=1.7), 1.7, rtol=1e-14)
        assert equivalent_radius(make_supercircle(), 0.0) == pytest.approx(1.0, rel=1e-14)

    def test_exponent_four_quadrature(self):
        # raw n = 4 Lame curve at scale a, compared with 4 a^2 Gamma(5/4)^2 / Gamma(3/2)
        a = 1.3
        fam = ShapeFamily("n4", lambda t, lam: supercircle_radius(t, 2.0, a=a), (0.0, 0.0))
        closed = math.sqrt(4 * a * a * sp_gamma(1.25) ** 2 / sp_gamma(1.5) / math.pi)
        got = equivalent_radius(fam, 0.0)
        assert abs(got - closed) / closed <= 1e-10
        # the closed form evaluates to 1.0864348; 1.086420 is only good to 2e-5
        assert got / a == pytest.approx(1.086420, abs=2e-5)

    def test_out_of_range(self):
        with pytest.raises(BoundaryError):
            equivalent_radius(make_ellipse(), 0.5)

    def test_non_positive_radius(self):
        fam = ShapeFamily("bad", lambda t, lam: 1.0 + 2.0 * lam * np.cos(t), (-1.0, 1.0))
        with pytest.raises(BoundaryError):
            equivalent_radius(fam, 0.8)

    @pytest.mark.parametrize("lam", np.linspace(-1 / 3, 1 / 3, 7))
    def test_ellipse_area(self, lam):
        fam = make_ellipse()
        area = quad_area(lambda t: fam.radius(t, lam))
        assert abs(area - math.pi) / math.pi <= 1e-10
        assert abs(equivalent_radius(fam, lam) ** 2 - 1.0) <= 1e-10

    @pytest.mark.parametrize("delta", [-1.0, -0.7, -0.3, 0.2, 0.6, 1.0])
    def test_supercircle_area(self, delta):
        fam = make_supercircle()
        area = quad_area(lambda t: fam.radius(t, delta))
        assert abs(area - math.pi) / math.pi <= 1e-10
        assert abs(equivalent_radius(fam, delta) ** 2 - 1.0) <= 1e-10


class TestFamilies:
    def test_ellipse_limits(self):
        fam = make_ellipse()
        th = theta_grid(128)
        assert np.allclose(fam.radius(th, 0.0), 1.0, rtol=0, atol=1e-15)
        a, b = ellipse_axes(1 / 3)
        assert a / b == pytest.approx(2.0, rel=1e-14)
        assert a * b == pytest.approx(1.0, rel=1e-14)
        with pytest.raises(BoundaryError):
            fam.radius(th, 0.34)

    def test_supercircle_shapes(self):
        fam = make_supercircle()
        th = theta_grid(256)
        assert np.allclose(fam.radius(th, 0.0), 1.0, atol=1e-15)
        # delta = -1 is the diamond |x| + |y| = a
        r = fam.radius(th, -1.0)
        x, y = r * np.cos(th), r * np.sin(th)
        s = np.abs(x) + np.abs(y)
        assert np.ptp(s) < 1e-12
        assert s[0] == pytest.approx(math.sqrt(math.pi / 2), rel=1e-12)
        with pytest.raises(BoundaryError):
            fam.radius(th, 1.2)

    @pytest.mark.parametrize("delta", [-1.0, -0.4, 0.5, 1.0])
    def test_supercircle_quarter_turn(self, delta):
        fam = make_supercircle()
        th = np.linspace(0, 2 * np.pi, 97)
        assert np.allclose(fam.radius(th, delta), fam.radius(th + np.pi / 2, delta), rtol=1e-13)

    @pytest.mark.parametrize("fam", [make_ellipse(), make_supercircle()])
    def test_periodic_and_mirror(self, fam):
        th = np.linspace(0, 2 * np.pi, 51)
        lam = 0.3
        assert np.allclose(fam.radius(th, lam), fam.radius(th + 2 * np.pi, lam), rtol=1e-13)
        assert np.allclose(fam.radius(th, lam), fam.radius(-th, lam), rtol=1e-13)
        assert np.allclose(fam.radius(th, lam), fam.radius(th + np.pi, lam), rtol=1e-13)


class TestFourierExpand:
    def test_ellipse(self):
        fb = fourier_expand(make_ellipse(), sigma_max=2)
        ref = ellipse_closed_form(fb.n_max)
        assert np.max(np.abs(fb.cos - ref.cos)) <= 1e-8
        assert np.max(np.abs(fb.sin)) < 1e-13
        assert fb.R0 == pytest.approx(1.0, rel=1e-14)
        assert fb.C(1, 2) == pytest.approx(1.0, abs=1e-8)
        assert fb.C(2, 0) == pytest.approx(-0.25, abs=1e-8)
        assert fb.C(2, 4) == pytest.approx(0.75, abs=1e-8)

    def test_supercircle(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            fb = fourier_expand(make_supercircle(), sigma_max=2)
        assert fb.C(1, 4) == pytest.approx(-1 / 12, abs=1e-7)
        assert fb.C(1, 8) == pytest.approx(-1 / 120, abs=1e-7)
        for k in range(1, 9):
            assert fb.C(1, 4 * k) == pytest.approx(supercircle_c1(4 * k), abs=1e-7)
        # quarter-turn symmetry: only multiples of 4 survive
        n = np.arange(fb.n_max + 1)
        assert np.max(np.abs(fb.cos[:, n % 4 != 0])) < 1e-10
        assert np.max(np.abs(fb.sin)) < 1e-12
        assert fb.C(2, 4) == pytest.approx(SUPERCIRCLE_C4_2, abs=1e-6)
        assert fb.C(2, 0) == pytest.approx(SUPERCIRCLE_C0_2, abs=1e-8)

    def test_supercircle_truncation_warning(self):
        with pytest.warns(TruncationWarning):
            fourier_expand(make_supercircle(), sigma_max=2, n_max=16)

    def test_circle_is_zero(self):
        fb = fourier_expand(make_circle(2.0), sigma_max=3)
        assert fb.R0 == pytest.approx(2.0)
        assert np.max(np.abs(fb.cos)) < 1e-12 and np.max(np.abs(fb.sin)) < 1e-12

    def test_sine_terms_and_shift(self):
        # a rotated ellipse r(t - phi) carries sine terms; C^2 + S^2 is rotation invariant
        phi = 0.3
        fam = ShapeFamily("rot", lambda t, lam: make_ellipse().radius(t - phi, lam), (-1 / 3, 1 / 3))
        fb = fourier_expand(fam, sigma_max=2)
        assert fb.C(1, 2) == pytest.approx(math.cos(2 * phi), abs=1e-8)
        assert fb.S(1, 2) == pytest.approx(math.sin(2 * phi), abs=1e-8)
        assert fb.has_sine_terms()

    def test_reconstruction_order(self):
        fam = make_ellipse()
        fb = fourier_expand(fam, sigma_max=2)
        th = theta_grid(256)
        lams = np.array([0.08, 0.04, 0.02, 0.01])
        err = [np.max(np.abs(fb.reconstruct(th, lam) - fam.radius(th, lam))) for lam in lams]
        slope = np.polyfit(np.log(lams), np.log(err), 1)[0]
        assert slope == pytest.approx(3.0, abs=0.2)

    def test_degenerate_stencil(self):
        fam = ShapeFamily("pinned", lambda t, lam: np.ones_like(t), (0.0, 0.0))
        with pytest.raises(BoundaryError):
            fourier_expand(fam)

    def test_out_of_range_index_reads_zero(self):
        fb = ellipse_closed_form(8)
        assert fb.C(1, -2) == 0.0 and fb.S(1, -1) == 0.0 and fb.S(1, 0) == 0.0
        assert fb.C(1, 9) == 0.0 and fb.C(5, 2) == 0.0
        with pytest.raises(ValueError):
            fb.cos[0, 0] = 1.0


class TestConstraints:
    def test_ellipse_exact(self):
        rep = verify_constraints(ellipse_closed_form())
        assert rep.passed and max(abs(v) for v in rep.residuals.values()) <= 1e-12

    def test_zero(self):
        assert verify_constraints(FourierBoundary.from_coefficients()).passed

    def test_supercircle_closed_form(self):
        fb = supercircle_closed_form(n_max=2000)
        assert abs(verify_constraints(fb).residuals[2]) <= 1e-10
        assert supercircle_c1_square_sum() == pytest.approx(0.0070205, abs=1e-6)

    def test_detects_violation(self):
        fb = FourierBoundary.from_coefficients(cos={1: {2: 1.0}, 2: {0: -0.2}})
        rep = verify_constraints(fb)
        assert not rep.passed
        assert rep.residuals[2] == pytest.approx(4 * -0.2 + 1.0)
        assert any("FAIL" in line for line in rep.lines())

    def test_higher_orders(self):
        # exact trig family; the area relation couples orders through C_0 and the products
        fam = ShapeFamily("trig", lambda t, lam: 1 + lam * np.cos(t) + lam**2 * 0.3 * np.cos(3 * t), (-0.2, 0.2))
        fb = fourier_expand(fam, sigma_max=4)
        rep = verify_constraints(fb)
        assert abs(rep.residuals[1]) <= 1e-12
        assert abs(rep.residuals[2]) <= 1e-11
        assert abs(rep.residuals[3]) <= 1e-9
        # fourth order is extracted from lam^4 on a +-0.05 stencil, so round-off is amplified
        assert abs(rep.residuals[4]) <= 1e-7


class TestSamples:
    def ellipse_rows(self, lams, n=64):
        fam = make_ellipse()
        th = theta_grid(n)
        return {lam: list(zip(th, fam.radius(th, lam))) for lam in lams}

    def test_circle_samples(self):
        th = theta_grid(32)
        fam = shape_from_samples({0.0: [(t, 1.0) for t in th], 0.1: [(t, 1.0) for t in th]})
        fb = fourier_expand(fam)
        # one-sided lambda stencil, so round-off is larger than for the built-ins
        assert np.max(np.abs(fb.cos)) < 1e-10 and np.max(np.abs(fb.sin)) < 1e-10

    def test_truncated_ellipse_round_trip(self):
        # samples of R0 (1 + lam f1 + lam^2 f2): recovered exactly from three lambda values
        ref = ellipse_closed_form(16)
        th = theta_grid(64)
        rows = {lam: list(zip(th, ref.reconstruct(th, lam))) for lam in (0.0, 0.05, 0.1)}
        fb = fourier_expand(shape_from_samples(rows), n_max=16)
        assert fb.C(1, 2) == pytest.approx(1.0, abs=1e-6)

    def test_exact_ellipse_dense_round_trip(self):
        lams = np.round(np.linspace(-0.05, 0.05, 11), 12)
        fb = fourier_expand(shape_from_samples(self.ellipse_rows(lams)), n_max=16)
        assert fb.C(1, 2) == pytest.approx(1.0, abs=1e-6)
        assert fb.C(2, 0) == pytest.approx(-0.25, abs=1e-5)

    def test_interpolates_between_samples(self):
        lams = np.round(np.linspace(-0.1, 0.1, 9), 12)
        fam = shape_from_samples(self.ellipse_rows(lams, 64))
        th = np.linspace(0, 2 * np.pi, 37)
        assert np.allclose(fam.radius(th, 0.033), make_ellipse().radius(th, 0.033), atol=1e-8)

    def test_missing_angle(self):
        th = theta_grid(17)
        pairs = [(t, 1.0) for t in th]
        with pytest.raises(BoundaryError):
            shape_from_samples({0.0: pairs[:5] + pairs[6:], 0.1: pairs[:5] + pairs[6:]})

    def test_non_positive(self):
        th = theta_grid(16)
        with pytest.raises(BoundaryError):
            shape_from_samples({0.0: [(t, 1.0) for t in th], 0.1: [(t, -1.0 if i == 3 else 1.0) for i, t in enumerate(th)]})

    def test_single_lambda(self):
        th = theta_grid(16)
        with pytest.raises(BoundaryError):
            shape_from_samples({0.0: [(t, 1.0) for t in th]})

    def test_file_round_trip(self, tmp_path):
        fam = make_ellipse()
        text = format_samples(fam, [0.0, 0.02, 0.04, -0.02, -0.04], n_theta=64)
        path = tmp_path / "ell.csv"
        path.write_text("# ellipse samples\n" + text)
        back = read_samples(path)
        assert back.name == "ell"
        th = theta_grid(64)
        assert np.allclose(back.radius(th, 0.02), fam.radius(th, 0.02), rtol=1e-14)

    def test_bad_header(self):
        with pytest.raises(BoundaryError):
            read_samples(io.StringIO("lam,theta,r\n0,0,1\n"))

    def test_bad_row(self):
        with pytest.raises(BoundaryError):
            read_samples(io.StringIO("lambda,theta,r\n0,0\n"))
        with pytest.raises(BoundaryError):
            read_samples(io.StringIO("lambda,theta,r\n0,x,1\n"))


class TestCoefficientTable:
    def test_round_trip_and_order(self):
        fb = ellipse_closed_form(6)
        text = format_coefficients(fb)
        lines = text.splitlines()
        assert lines[0] == "sigma,n,kind,value"
        assert lines[1:4] == ["1,0,C,0", "1,1,C,0", "1,1,S,0"]
        back = parse_coefficients(text)
        assert np.array_equal(back.cos, fb.cos) and np.array_equal(back.sin, fb.sin)

    def test_deterministic(self):
        fb = fourier_expand(make_ellipse())
        assert format_coefficients(fb) == format_coefficients(fourier_expand(make_ellipse()))

    def test_bad_table(self):
        with pytest.raises(BoundaryError):
            parse_coefficients("sigma,n,kind,value\n1,2,X,1.0\n")


@settings(max_examples=15, deadline=None)
@given(
    st.lists(st.floats(-0.3, 0.3), min_size=3, max_size=3),
    st.lists(st.floats(-0.3, 0.3), min_size=3, max_size=3),
)
def test_random_trig_families_satisfy_area_relations(c, s):
    def radius(t, lam):
        g = sum(c[k] * np.cos((k + 1) * t) + s[k] * np.sin((k + 1) * t) for k in range(3))
        return 1.0 + lam * g + lam**2 * 0.2 * np.cos(2 * t)

    fam = ShapeFamily("rand", radius, (-0.2, 0.2))
    fb = fourier_expand(fam, sigma_max=2)
    rep = verify_constraints(fb, tol=1e-10)
    assert rep.passed, rep.residuals
    for k in range(3):
        assert fb.C(1, k + 1) == pytest.approx(c[k], abs=1e-8)
        assert fb.S(1, k + 1) == pytest.approx(s[k], abs=1e-8)
