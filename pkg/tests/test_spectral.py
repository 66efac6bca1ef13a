import numpy as np
import pytest
from scipy.integrate import quad

from fracobstacle.spectral import (
    DomainError,
    SpectralField,
    eigenpair,
    gamma_fn,
    hs_norm,
    linear_exact_solution,
    make_params,
    project_to_spectral,
)

# arbitrary-precision reference values (30-digit evaluation, frozen)
GAMMA_REFERENCE = {
    0.05: 19.470085311255512864,
    0.1: 9.5135076986687318363,
    0.25: 3.6256099082219083119,
    2.5: 1.3293403881791370205,
    7.3: 1271.4236336639092731,
    17.25: 42249866656927.035516,
    30.0: 8.8417619937397019545e30,
}
D_S_QUARTER = 0.47798879748612499536  # 2^0.5 Gamma(0.75)/Gamma(0.25)


class TestGamma:
    def test_integer_and_half(self):
        assert gamma_fn(1.0) == 1.0
        assert gamma_fn(0.5) == pytest.approx(np.sqrt(np.pi), rel=1e-15)

    @pytest.mark.parametrize("x,expected", sorted(GAMMA_REFERENCE.items()))
    def test_against_high_precision(self, x, expected):
        assert gamma_fn(x) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("x", [0.0, -1.0, -0.5])
    def test_domain_error(self, x):
        with pytest.raises(DomainError):
            gamma_fn(x)


class TestMakeParams:
    def test_half(self):
        p = make_params(0.5)
        assert p.alpha == 0.0
        assert p.d_s == pytest.approx(1.0, abs=1e-14)
        assert p.gamma_min == pytest.approx(3.0)

    def test_three_quarters(self):
        p = make_params(0.75)
        assert p.alpha == pytest.approx(-0.5)
        assert p.gamma_min == pytest.approx(2.0)

    def test_quarter_normalization(self):
        p = make_params(0.25)
        assert p.d_s == pytest.approx(D_S_QUARTER, rel=1e-13)

    @pytest.mark.parametrize("s", [0.0, 1.0, -0.2, 1.5])
    def test_rejects_bad_order(self, s):
        with pytest.raises(DomainError):
            make_params(s)

    def test_identities_random_orders(self):
        rng = np.random.RandomState(7)
        for s in rng.uniform(1e-3, 1 - 1e-3, size=200):
            p = make_params(s)
            assert p.alpha == 1.0 - 2.0 * s
            ratio = p.d_s * gamma_fn(s) / (2.0 ** p.alpha * gamma_fn(1.0 - s))
            assert abs(ratio - 1.0) < 1e-10
            assert p.d_s > 0.0
            assert p.gamma_min > 1.0


class TestEigenpair:
    def test_first_mode_unit(self):
        lam, phi = eigenpair(1, 1.0)
        assert lam == pytest.approx(np.pi ** 2)
        val, _ = quad(lambda x: float(phi(x)) ** 2, 0, 1)
        assert val == pytest.approx(1.0, abs=1e-12)

    def test_scalings(self):
        lam2, _ = eigenpair(2, 1.0)
        assert lam2 == pytest.approx(4 * np.pi ** 2)
        lam, _ = eigenpair(1, 2.0)
        assert lam == pytest.approx(np.pi ** 2 / 4)


class TestHsNorm:
    def test_single_mode_half_order(self):
        f = SpectralField([1.0], 1.0)
        assert hs_norm(f, 0.5) == pytest.approx(np.pi ** 0.5)

    def test_zero_order_is_l2(self):
        f = SpectralField([0.3, -1.2, 0.5], 1.0)
        assert hs_norm(f, 0.0) == pytest.approx(f.l2_norm())

    def test_two_modes_full_order(self):
        f = SpectralField([1.0, 1.0], 1.0)
        assert hs_norm(f, 1.0) == pytest.approx(np.pi * np.sqrt(5.0))

    def test_monotone_in_order(self):
        rng = np.random.RandomState(3)
        f = SpectralField(rng.randn(12), 1.0)
        orders = np.linspace(-1.0, 1.0, 9)
        vals = [hs_norm(f, s) for s in orders]
        assert all(a <= b * (1 + 1e-12) for a, b in zip(vals, vals[1:]))

    def test_parseval_against_quadrature(self):
        f = SpectralField([0.7, 0.0, -0.4, 0.2], 1.0)
        val, _ = quad(lambda x: float(f.evaluate(x)) ** 2, 0, 1, limit=100)
        assert hs_norm(f, 0.0) == pytest.approx(np.sqrt(val), abs=1e-9)


class TestProjection:
    def test_first_mode_roundtrip(self):
        _, phi = eigenpair(1, 1.0)
        xs = np.linspace(0, 1, 65)
        f = project_to_spectral(phi(xs), 32)
        expected = np.zeros(32)
        expected[0] = 1.0
        assert np.allclose(f.coeffs, expected, atol=1e-10)

    def test_zero(self):
        f = project_to_spectral(np.zeros(17), 8)
        assert np.all(f.coeffs == 0.0)

    def test_linearity(self):
        _, p1 = eigenpair(1, 1.0)
        _, p3 = eigenpair(3, 1.0)
        xs = np.linspace(0, 1, 65)
        f = project_to_spectral(p1(xs) + 0.5 * p3(xs), 8)
        expected = np.zeros(8)
        expected[0], expected[2] = 1.0, 0.5
        assert np.allclose(f.coeffs, expected, atol=1e-12)

    def test_roundtrip_on_span(self):
        rng = np.random.RandomState(11)
        coeffs = rng.randn(10)
        f = SpectralField(coeffs, 1.0)
        xs = np.linspace(0, 1, 33)
        g = project_to_spectral(f.evaluate(xs), 10)
        assert np.allclose(g.coeffs, coeffs, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            project_to_spectral(np.zeros(9), 12)


class TestLinearExactSolution:
    def test_pure_decay_first_mode(self):
        u0 = SpectralField([1.0], 1.0)
        for t in (0.1, 0.7):
            u = linear_exact_solution(u0, None, 0.5, t)
            assert u.coeffs[0] == pytest.approx(np.exp(-np.pi * t), rel=1e-12)

    def test_zero_data(self):
        u0 = SpectralField([0.0, 0.0], 1.0)
        u = linear_exact_solution(u0, None, 0.3, 0.5)
        assert np.all(u.coeffs == 0.0)

    def test_constant_forcing_closed_form(self):
        u0 = SpectralField([1.0], 1.0)
        t = 0.4
        u = linear_exact_solution(u0, [lambda r: 1.0], 0.5, t)
        expected = np.exp(-np.pi * t) + (1 - np.exp(-np.pi * t)) / np.pi
        assert u.coeffs[0] == pytest.approx(expected, abs=1e-10)

    def test_semigroup_property(self):
        rng = np.random.RandomState(5)
        u0 = SpectralField(rng.randn(6), 1.0)
        s, t1, t2 = 0.6, 0.17, 0.35
        direct = linear_exact_solution(u0, None, s, t1 + t2)
        mid = linear_exact_solution(u0, None, s, t1)
        two_step = linear_exact_solution(mid, None, s, t2)
        assert np.allclose(direct.coeffs, two_step.coeffs, atol=1e-10)
