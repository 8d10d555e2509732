import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from qmerr import closedform as cf
from qmerr.errormodel import ErrorModel
from qmerr.numerics import find_peaks, normalize_1d
from qmerr.verify import spaced_uniform


class TestSpectrum:
    def test_rejects_repeats(self):
        with pytest.raises(ValueError, match="distinct"):
            cf.Spectrum([1.0, 1.0 + 1e-10])

    def test_accepts_distinct(self):
        assert len(cf.Spectrum([-1, 0.5, 1])) == 3


class TestPdf2Uniform:
    def test_zero_at_origin_second_order(self):
        a, c = 1.0, 3.0
        assert cf.pdf2_uniform(0.0, a, c) == 0.0
        h = 1e-3
        # p(h) / h^2 tends to the constant 2 c sqrt(c/pi) exp(-c a^2)
        limit = 2 * c * math.sqrt(c / math.pi) * math.exp(-c * a * a)
        assert cf.pdf2_uniform(h, a, c) / h ** 2 == pytest.approx(limit, rel=1e-5)

    @given(st.floats(-6, 6))
    def test_even(self, r):
        assert cf.pdf2_uniform(-r, 1.3, 2.0) == cf.pdf2_uniform(r, 1.3, 2.0)

    def test_peak_location(self):
        peaks = find_peaks(lambda r: cf.pdf2_uniform(r, 1.0, 3.0), 0.0, 3.0, 512)
        assert len(peaks) == 1
        assert peaks[0][0] == pytest.approx(1.15, abs=0.01)

    @settings(max_examples=200)
    @given(a=st.floats(0.5, 2.0), c=st.floats(0.5, 5.0), r=st.floats(-4.0, 4.0))
    def test_equals_difference_of_gaussians_form(self, a, c, r):
        if abs(r) < 1e-3:
            return
        p12 = cf.pdf2_uniform(r, a, c)
        p13 = cf.pdf2_uniform_peaks(r, a, c)
        if p12 > 1e-300:
            assert abs(p12 - p13) <= 1e-12 * p12

    def test_equivalence_on_stated_window(self):
        a, c = 1.0, 3.0
        r = np.linspace(1e-2, a + 6 / math.sqrt(c), 500)
        r = np.concatenate([-r, r])
        np.testing.assert_allclose(cf.pdf2_uniform(r, a, c), cf.pdf2_uniform_peaks(r, a, c), rtol=1e-12)

    def test_large_argument_finite(self):
        assert math.isfinite(cf.pdf2_uniform(30.0, 5.0, 10.0))

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            cf.pdf2_uniform(0.1, 0.0, 1.0)
        with pytest.raises(ValueError):
            cf.pdf2_uniform(0.1, 1.0, -1.0)

    @pytest.mark.parametrize("a,c", [(0.5, 0.5), (1.0, 3.0), (2.0, 5.0)])
    def test_normalised_by_scipy_quad(self, a, c):
        z, _ = integrate.quad(lambda r: cf.pdf2_uniform(r, a, c), -np.inf, np.inf, epsabs=1e-13)
        assert z == pytest.approx(1.0, abs=1e-8)


class TestPdf2Mixed:
    def test_eta_zero_reduces_to_uniform(self):
        x = np.linspace(-3, 3, 301)
        x = x[np.abs(x) > 1e-9]
        np.testing.assert_allclose(cf.pdf2_mixed(x, 1.2, 2.5, 0.0), cf.pdf2_uniform(x, 1.2, 2.5), rtol=1e-10)

    @pytest.mark.parametrize("a,c", [(0.5, 0.5), (1.0, 3.0), (2.0, 1.7)])
    def test_norm_constant_independent_of_eta(self, a, c):
        expected = cf.pdf2_mixed_analytic_norm(a, c)
        half = a + 8 / math.sqrt(c)
        for eta in np.linspace(-a, a, 7):
            oracle, _ = integrate.quad(lambda x: cf.pdf2_mixed_raw(x, a, c, eta), -half, half,
                                       epsabs=0, epsrel=1e-12, limit=200)
            assert oracle == pytest.approx(expected, rel=1e-10)
            assert cf.pdf2_mixed_norm(a, c, float(eta)) == pytest.approx(expected, rel=1e-10)

    def test_wrong_eigenvalue_peak(self):
        peaks = find_peaks(lambda x: cf.pdf2_mixed(x, 1.0, 3.0, 1.0), -3, 3, 1024)
        assert any(-2 < x < 0 for x, _ in peaks)

    @settings(max_examples=100, deadline=None)
    @given(x=st.floats(-4, 4), frac=st.floats(-1, 1))
    def test_state_flip_symmetry(self, x, frac):
        a, c = 1.1, 2.3
        eta = frac * a
        assert cf.pdf2_mixed(x, a, c, -eta) == pytest.approx(cf.pdf2_mixed(-x, a, c, eta), rel=1e-12, abs=1e-300)

    def test_nonnegative_numerically(self):
        x = np.linspace(-6, 6, 20001)
        for a in (0.5, 1.0, 2.0):
            for c in (0.5, 3.0, 5.0):
                for eta in (-a, -0.5 * a, 0.5 * a, a):
                    y = cf.pdf2_mixed(x, a, c, eta)
                    assert y.min() >= -1e-15 * y.max()

    def test_eta_out_of_range(self):
        with pytest.raises(ValueError):
            cf.pdf2_mixed(0.0, 1.0, 3.0, 1.5)

    def test_eta_from_bloch(self):
        assert cf.eta_from_bloch([0, 0, 0.5], 1.0) == 1.0


def _model(rng):
    return ErrorModel(rng.uniform(0.5, 3.0), rng.uniform(0.0, 2.0))


class TestJointLaw:
    def test_single_level_is_gaussian(self):
        model = ErrorModel(1.2, 0.8)
        a = cf.Spectrum([0.7])
        r = np.linspace(-2, 3, 11)
        vals = np.array([cf.joint_pdf_det([x], a, model) for x in r])
        expected = np.exp(-(model.c1 + model.c2) * (r - 0.7) ** 2)
        ratio = vals / expected
        np.testing.assert_allclose(ratio, ratio[0], rtol=1e-12)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_det_equals_permsum(self, n):
        rng = np.random.default_rng(100 + n)
        for _ in range(100):
            a = cf.Spectrum(spaced_uniform(rng, n, -1.5, 1.5))
            r = spaced_uniform(rng, n, -2.0, 2.0)
            model = _model(rng)
            assert cf.joint_pdf_det(r, a, model) == pytest.approx(
                cf.joint_pdf_permsum(r, a, model), rel=1e-10)

    def test_permsum_against_high_precision_oracle(self):
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 40
        from qmerr.hermitian import signed_permutations
        rng = np.random.default_rng(3)
        for _ in range(10):
            a = spaced_uniform(rng, 3, -1.5, 1.5)
            r = spaced_uniform(rng, 3, -2, 2)
            c1, c2 = 1.1, 0.3
            s = mp.mpf(0)
            for perm, sg in signed_permutations(3):
                s += sg * mp.e ** (-c1 * sum((mp.mpf(r[k]) - mp.mpf(a[perm[k]])) ** 2 for k in range(3)))
            vr = mp.fprod(mp.mpf(r[k]) - r[l] for k in range(3) for l in range(k + 1, 3))
            va = mp.fprod(mp.mpf(a[k]) - a[l] for k in range(3) for l in range(k + 1, 3))
            exact = vr / va * s * mp.e ** (-c2 * (sum(mp.mpf(v) for v in r) - sum(mp.mpf(v) for v in a)) ** 2)
            assert cf.joint_pdf_det(r, a, ErrorModel(c1, c2)) == pytest.approx(float(exact), rel=1e-11)

    def test_positive_when_sorted_alike(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            a = np.sort(spaced_uniform(rng, 3, -1.5, 1.5))
            r = np.sort(spaced_uniform(rng, 3, -2, 2))
            assert cf.joint_pdf_det(r, a, _model(rng)) > 0

    def test_2x2_proportional_to_sumdiff(self):
        rng = np.random.default_rng(12)
        model = ErrorModel(0.9, 1.7)
        pts = rng.uniform(-2, 2, (10, 2))
        ratios = [cf.joint_pdf_det(p, [1.0, -1.0], model) / cf.joint_pdf2_sumdiff(p[0], p[1], 1.0, model)
                  for p in pts]
        assert np.ptp(ratios) / abs(np.mean(ratios)) < 1e-9

    def test_permsum_two_terms_with_signs(self):
        from qmerr.hermitian import signed_permutations
        assert [s for _, s in signed_permutations(2)] == [1, -1]

    def test_permsum_dominated_by_matching_permutation(self):
        a = cf.Spectrum([-1.0, 0.2, 1.3])
        r = np.array([0.2, 1.3, -1.0])
        model = ErrorModel(200.0)
        # only the matching term survives, and its sign cancels Delta(r)/Delta(a)
        assert cf.joint_pdf_permsum(r, a, model) == pytest.approx(1.0, rel=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), perm=st.permutations([0, 1, 2, 3]))
    def test_permsum_symmetric_in_r(self, seed, perm):
        rng = np.random.default_rng(seed)
        a = cf.Spectrum(spaced_uniform(rng, 4, -1.5, 1.5))
        r = spaced_uniform(rng, 4, -2, 2)
        model = _model(rng)
        base = cf.joint_pdf_permsum(r, a, model)
        assert cf.joint_pdf_permsum(r[list(perm)], a, model) == pytest.approx(base, rel=1e-12, abs=1e-300)

    def test_level_repulsion(self):
        a = cf.Spectrum([-1.0, 0.4, 1.1])
        model = ErrorModel(1.0, 0.5)
        scale = cf.joint_pdf_permsum([-1.0, 0.3, 1.1], a, model)
        close = cf.joint_pdf_permsum([-1.0, 0.3, 0.3 + 1e-8], a, model)
        assert abs(close) < 1e-10 * scale
        assert cf.joint_pdf2_sumdiff(0.4, 0.4, 1.0, model) == 0.0
        with pytest.raises(ValueError):
            cf.joint_pdf_det([0.3, 0.3, 1.0], a, model)

    def test_sumdiff_swap_symmetric(self):
        model = ErrorModel(1.5, 0.5)
        assert cf.joint_pdf2_sumdiff(0.3, -1.2, 1.0, model) == cf.joint_pdf2_sumdiff(-1.2, 0.3, 1.0, model)

    @pytest.mark.parametrize("c1,c2", [(1.5, 0.0), (3.0, 1.0)])
    def test_difference_marginal_is_two_level_law(self, c1, c2):
        """Integrating out the eigenvalue sum leaves the two-level law with c = 2 c1."""
        a, model = 1.0, ErrorModel(c1, c2)

        def diff_density(d):
            # r1 = (s + d)/2, r2 = (s - d)/2, Jacobian 1/2
            f = lambda s: 0.5 * cf.joint_pdf2_sumdiff((s + d) / 2, (s - d) / 2, a, model)
            return integrate.quad(f, -np.inf, np.inf, epsabs=1e-14)[0]

        z = integrate.quad(diff_density, -12, 12, epsabs=1e-12, limit=200)[0]
        for d in (0.3, 1.0, 2.2, 3.0):
            expected = 0.5 * cf.pdf2_uniform(d / 2, a, 2 * c1)
            assert diff_density(d) / z == pytest.approx(expected, rel=1e-7)


class TestMarginalSD:
    def test_single_level_is_gaussian(self):
        c = 1.7
        x = np.linspace(-3, 3, 13)
        expected = np.sqrt(c / np.pi) * np.exp(-c * (x - 0.4) ** 2)
        np.testing.assert_allclose(cf.marginal_sd(x, [0.4], c), expected, rtol=1e-9)

    def test_positive_at_each_eigenvalue(self):
        a = [-1.0, 0.5, 1.0]
        for m, am in enumerate(a):
            only_k = math.exp(0.0)
            raw = cf.marginal_sd_raw(am, a, 2.0)
            assert raw == pytest.approx(only_k, rel=1e-12)
            assert cf.marginal_sd(am, a, 2.0) > 0

    def test_normalised(self):
        a = cf.Spectrum([-1.0, 0.5, 1.0])
        lo, hi = cf.default_window(a.values, 2.0)
        z, _ = integrate.quad(lambda x: cf.marginal_sd(x, a, 2.0), lo, hi, epsabs=1e-13, limit=200)
        assert z == pytest.approx(1.0, abs=1e-9)

    def test_three_peaks(self):
        peaks = find_peaks(lambda x: cf.marginal_sd(x, [-1, 0.5, 1], 2.0), -3, 3, 2001)
        assert len(peaks) == 3
        # extremes are the most probable outcomes
        heights = [h for _, h in peaks]
        assert heights[2] > heights[1] and heights[0] < heights[1]

    def test_rejects_repeated_spectrum(self):
        with pytest.raises(ValueError):
            cf.marginal_sd(0.0, [1.0, 1.0], 2.0)


def test_normalize_1d_on_uniform_law_is_one():
    z = normalize_1d(lambda r: cf.pdf2_uniform_peaks(r, 1.0, 3.0), -4, 4, 1e-12)
    assert z == pytest.approx(1.0, abs=1e-8)


def test_hciz_constant_n1_n2():
    assert cf.hciz_constant(1, 0.7) == 1.0
    assert cf.hciz_constant(2, 0.5) == 1.0
    assert cf.hciz_constant(3, 1.0) == pytest.approx(2 / 8)


def test_scalar_and_array_paths_agree():
    r = np.array([-3.0, -0.7, 0.0, 0.4, 1.1, 250.0])
    np.testing.assert_allclose(cf.pdf2_uniform(r, 1.0, 3.0),
                               [cf.pdf2_uniform(float(x), 1.0, 3.0) for x in r], rtol=1e-14, atol=0)
    np.testing.assert_allclose(cf.pdf2_mixed(r, 1.0, 3.0, 0.4),
                               [cf.pdf2_mixed(float(x), 1.0, 3.0, 0.4) for x in r], rtol=1e-14, atol=0)
