import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from fikit import (
    build_graph,
    build_grid_1d,
    displacement_interpolate_1d,
    entropy,
    entropy_along_geodesic,
    entropy_variational_bound,
    gaussian_measure,
    relative_entropy,
    wasserstein_1d,
    wasserstein_p,
)
from fikit.exceptions import (
    AbsoluteContinuityError,
    InvalidArgumentError,
    UndefinedEntropyError,
    UnsupportedError,
)
from fikit.transport import relative_density, transport_cost

pos = st.one_of(st.just(0.0), st.floats(1e-6, 50.0))


def random_measure(rng, n, zeros=0.0):
    w = rng.random(n)
    w[rng.random(n) < zeros] = 0
    w[0] += 1e-3
    return w / w.sum()


class TestEntropy:
    def test_constant(self):
        mu = np.full(4, 0.25)
        assert entropy(mu, np.full(4, 3.0)) == pytest.approx(0, abs=1e-15)

    def test_two_point(self):
        assert abs(entropy(np.array([0.5, 0.5]), np.array([2.0, 0.0])) - np.log(2)) <= 1e-12

    def test_identity_density(self, gauss601):
        _, mu = gauss601
        assert abs(relative_entropy(mu, mu)) <= 1e-15

    def test_negative(self):
        with pytest.raises(InvalidArgumentError):
            entropy(np.array([0.5, 0.5]), np.array([1.0, -1.0]))

    def test_zero_mass(self):
        with pytest.raises(UndefinedEntropyError):
            entropy(np.array([1.0, 0.0]), np.array([0.0, 5.0]))

    def test_absolute_continuity(self):
        with pytest.raises(AbsoluteContinuityError) as err:
            relative_density(np.array([0.5, 0.5, 0.0]), np.array([1.0, 0.0, 0.0]))
        assert err.value.points == [1]

    @settings(max_examples=60, deadline=None)
    @given(arrays(float, 9, elements=pos), st.floats(0.01, 100))
    def test_nonnegative_and_scale_invariant(self, h, c):
        if h.sum() == 0:
            h[0] = 1.0
        mu = np.arange(1, 10) / 45.0
        e = entropy(mu, h)
        assert e >= -1e-12
        assert abs(entropy(mu, c * h) - c * e) <= 1e-10 * max(1.0, c * abs(e), c)


class TestVariational:
    def test_zero_psi(self):
        mu = np.full(3, 1 / 3)
        r = entropy_variational_bound(mu, np.array([1.0, 2.0, 0.5]), np.zeros(3))
        assert r.passed and r.details["int_psi_phi"] == 0

    def test_two_point_equality(self):
        mu = np.array([0.5, 0.5])
        r = entropy_variational_bound(mu, np.array([2.0, 0.0]),
                                      np.array([np.log(2), -700.0]))
        assert r.passed
        assert abs(r.details["int_psi_phi"] - np.log(2)) <= 1e-12
        assert abs(r.details["int_psistar_phi"] - np.log(2)) <= 1e-12

    def test_infeasible_reported(self):
        mu = np.array([0.5, 0.5])
        r = entropy_variational_bound(mu, np.array([1.0, 1.0]), np.array([1.0, 1.0]))
        assert not r.passed
        assert not r.details["feasible"]


class TestWasserstein:
    def test_identical(self, gauss601):
        s, mu = gauss601
        plan = wasserstein_p(mu, mu, s, 2)
        assert plan.value == pytest.approx(0, abs=1e-14)

    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_point_masses(self, p):
        s = build_grid_1d(0, 3, 4)
        a = np.array([1.0, 0, 0, 0])
        b = np.array([0, 0, 1.0, 0])
        plan = wasserstein_p(a, b, s, p)
        assert plan.distance == pytest.approx(2.0 / p ** (1 / p), rel=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    @pytest.mark.parametrize("p", [2, 3])
    def test_matches_quantile_oracle(self, seed, p):
        rng = np.random.default_rng(seed)
        s = build_grid_1d(-1, 1, 40)
        mu, nu = random_measure(rng, 40, 0.2), random_measure(rng, 40, 0.2)
        assert abs(wasserstein_p(mu, nu, s, p).value - wasserstein_1d(mu, nu, s, p)) <= 1e-8

    def test_certificate(self):
        rng = np.random.default_rng(7)
        n = 30
        pts = rng.random((n, 2))
        edges = [(i, j, float(np.linalg.norm(pts[i] - pts[j])))
                 for i in range(n) for j in range(i + 1, n) if rng.random() < 0.3]
        edges += [(i, i + 1, float(np.linalg.norm(pts[i] - pts[i + 1]))) for i in range(n - 1)]
        s = build_graph(n, edges)
        mu, nu = random_measure(rng, n, 0.3), random_measure(rng, n, 0.3)
        plan = wasserstein_p(mu, nu, s, 2)
        assert plan.gap <= 1e-8
        assert max(plan.marginal_errors()) <= 1e-10
        assert plan.dual_violation(transport_cost(s, 2)) <= 1e-10
        assert np.all(plan.plan >= 0)

    def test_symmetry_and_triangle(self):
        rng = np.random.default_rng(3)
        s = build_grid_1d(0, 1, 25)
        a, b, c = (random_measure(rng, 25) for _ in range(3))
        p = 2
        ab = wasserstein_p(a, b, s, p).distance
        assert abs(ab - wasserstein_p(b, a, s, p).distance) <= 1e-9
        ac = wasserstein_p(a, c, s, p).distance
        cb = wasserstein_p(c, b, s, p).distance
        assert ab <= ac + cb + 1e-8

    def test_bad_p(self):
        s = build_grid_1d(0, 1, 3)
        m = np.full(3, 1 / 3)
        with pytest.raises(InvalidArgumentError):
            wasserstein_p(m, m, s, 0.5)

    def test_oracle_needs_line(self):
        s = build_graph(3, [(0, 1, 1), (1, 2, 1)])
        m = np.full(3, 1 / 3)
        with pytest.raises(UnsupportedError):
            wasserstein_1d(m, m, s, 2)


class TestDisplacement:
    def test_endpoints_exact(self, gauss601):
        s, mu = gauss601
        nu = np.roll(mu, 40)
        nu = nu / nu.sum()
        assert np.array_equal(displacement_interpolate_1d(mu, nu, s, 0.0), mu)
        assert np.array_equal(displacement_interpolate_1d(mu, nu, s, 1.0), nu)

    def test_two_diracs(self):
        s = build_grid_1d(0, 1, 11)
        a = np.eye(11)[2]
        b = np.eye(11)[8]
        mid = displacement_interpolate_1d(a, b, s, 0.5)
        assert mid[5] == pytest.approx(1.0)
        off = displacement_interpolate_1d(a, np.eye(11)[7], s, 0.5)
        assert off[4] == pytest.approx(0.5) and off[5] == pytest.approx(0.5)

    @pytest.mark.parametrize("t", [0.25, 0.5, 0.8])
    def test_constant_speed(self, t):
        s = build_grid_1d(-4, 4, 161)
        nu0 = gaussian_measure(s, 0.6, -1.0)
        nu1 = gaussian_measure(s, 0.9, 1.5)
        nut = displacement_interpolate_1d(nu0, nu1, s, t)
        full = wasserstein_p(nu0, nu1, s, 2).distance
        part = wasserstein_p(nu0, nut, s, 2).distance
        assert abs(part - t * full) <= 2 * s.step

    @pytest.mark.parametrize("t,p", [(-0.1, 2), (1.5, 2), (0.5, 1.5)])
    def test_invalid(self, t, p):
        s = build_grid_1d(0, 1, 5)
        m = np.full(5, 0.2)
        with pytest.raises(InvalidArgumentError):
            displacement_interpolate_1d(m, m, s, t, p)


class TestGeodesicEntropy:
    def test_same_endpoints(self, gauss601):
        s, mu = gauss601
        r = entropy_along_geodesic(mu, mu, mu, [0.3, 0.6], s)
        assert r.lhs == 0 and r.passed

    def test_shifted_gaussians(self, gauss601):
        s, mu = gauss601
        r = entropy_along_geodesic(mu, gaussian_measure(s, 1.0, -1.0),
                                   gaussian_measure(s, 1.0, 1.5), np.linspace(0, 1, 11), s)
        assert r.passed
        assert r.details["defects"][0] == 0 and r.details["defects"][-1] == 0

    def test_mass_outside_support(self):
        s = build_grid_1d(0, 1, 11)
        mu = np.zeros(11)
        mu[[0, 1, 9, 10]] = 0.25
        a = np.zeros(11)
        a[0] = 1.0
        b = np.zeros(11)
        b[10] = 1.0
        with pytest.raises(AbsoluteContinuityError):
            entropy_along_geodesic(mu, a, b, [0.5], s)
