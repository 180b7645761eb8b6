import numpy as np
import pytest
from scipy import integrate, stats

from centerout import (
    EllipticalModel,
    MixtureModel,
    Sample,
    chi_radial_cdf,
    elliptical_F_hat,
    oneD_center_outward,
    sample_model,
    spherical_F,
)
from centerout.grid import InvalidInputError
from centerout.reference import MODEL_REGISTRY


class TestChiRadialCdf:
    def test_d1_half_normal(self):
        # [DERIVED] d=1 radial cdf is the half-normal: 2*Phi(r) - 1
        cdf = chi_radial_cdf(1)
        r = np.array([0.1, 0.5, 1.0, 2.0])
        np.testing.assert_allclose(cdf(r), 2 * stats.norm.cdf(r) - 1, atol=1e-12)

    def test_d2_rayleigh(self):
        # [DERIVED] d=2 radial cdf is Rayleigh: 1 - exp(-r^2/2)
        cdf = chi_radial_cdf(2)
        r = np.array([0.3, 1.0, 2.5])
        np.testing.assert_allclose(cdf(r), 1 - np.exp(-r * r / 2), atol=1e-12)

    def test_d3_quadrature_oracle(self):
        # [DERIVED] numerical quadrature of the chi_3 density
        cdf = chi_radial_cdf(3)
        dens = lambda t: np.sqrt(2 / np.pi) * t * t * np.exp(-t * t / 2)
        for r in [0.5, 1.0, 2.0]:
            val, _ = integrate.quad(dens, 0, r)
            assert cdf(r) == pytest.approx(val, abs=1e-10)

    def test_rejects_bad_dim(self):
        with pytest.raises(InvalidInputError):
            chi_radial_cdf(0)


class TestSphericalF:
    def test_direction_preserved(self):
        z = np.array([[3.0, 4.0]])
        F = np.atleast_2d(spherical_F(z, chi_radial_cdf(2)))
        np.testing.assert_allclose(F[0] / np.linalg.norm(F[0]), [0.6, 0.8])

    def test_norm_is_radial_cdf(self):
        rng = np.random.default_rng(0)
        z = rng.standard_normal((100, 3))
        F = spherical_F(z, chi_radial_cdf(3))
        np.testing.assert_allclose(
            np.linalg.norm(F, axis=1), chi_radial_cdf(3)(np.linalg.norm(z, axis=1))
        )

    def test_origin_maps_to_origin(self):
        F = spherical_F(np.zeros((1, 2)), chi_radial_cdf(2))
        np.testing.assert_array_equal(np.atleast_2d(F), np.zeros((1, 2)))

    def test_pushforward_uniform(self):
        # [DERIVED] norms of F(Z) for Gaussian Z are uniform on [0,1]
        rng = np.random.default_rng(1)
        z = rng.standard_normal((20000, 2))
        r = np.linalg.norm(np.atleast_2d(spherical_F(z, chi_radial_cdf(2))), axis=1)
        _, p = stats.kstest(r, "uniform")
        assert p > 0.001


class TestOneD:
    def test_odd_sorted(self):
        # [PAPER] n=7 sorted sample -> {-3/4,...,3/4}
        s = Sample(points=np.arange(7, dtype=float)[:, None])
        t = oneD_center_outward(s)
        np.testing.assert_allclose(
            t.F_value[:, 0], [-3 / 4, -2 / 4, -1 / 4, 0, 1 / 4, 2 / 4, 3 / 4]
        )

    def test_even_two(self):
        # [PAPER] n=2 -> {-1/2, +1/2}
        s = Sample(points=np.array([[3.0], [-1.0]]))
        t = oneD_center_outward(s)
        np.testing.assert_allclose(np.sort(t.F_value[:, 0]), [-0.5, 0.5])

    def test_even_four(self):
        s = Sample(points=np.array([[0.0], [1.0], [2.0], [3.0]]))
        t = oneD_center_outward(s)
        np.testing.assert_allclose(t.F_value[:, 0], [-2 / 3, -1 / 3, 1 / 3, 2 / 3])

    def test_permutation_equivariant(self):
        rng = np.random.default_rng(2)
        z = rng.standard_normal(9)
        perm = rng.permutation(9)
        a = oneD_center_outward(Sample(points=z[:, None]))
        b = oneD_center_outward(Sample(points=z[perm][:, None]))
        np.testing.assert_allclose(a.F_value[perm], b.F_value)

    def test_warns_on_ties(self):
        s = Sample(points=np.array([[1.0], [1.0], [2.0]]))
        with pytest.warns(RuntimeWarning):
            oneD_center_outward(s)

    def test_rejects_multivariate(self):
        with pytest.raises(InvalidInputError):
            oneD_center_outward(Sample(points=np.zeros((3, 2))))


class TestEllipticalFHat:
    def test_ranks_are_permutation(self):
        s = sample_model("gaussian", 50, 0)
        t = elliptical_F_hat(s, np.zeros(2), np.eye(2))
        assert sorted(t.rank.tolist()) == list(range(1, 51))

    def test_spherical_case_preserves_directions(self):
        s = sample_model("gaussian", 20, 1)
        t = elliptical_F_hat(s, np.zeros(2), np.eye(2))
        expect = s.points / np.linalg.norm(s.points, axis=1, keepdims=True)
        np.testing.assert_allclose(t.sign, expect, atol=1e-12)

    def test_affine_invariant_ranks(self):
        # sphericizing by the true transform recovers the spherical ranks
        rng = np.random.default_rng(3)
        z = rng.standard_normal((40, 2))
        A = np.array([[2.0, 0.5], [0.5, 1.0]])
        x = z @ A.T + np.array([5.0, -1.0])
        t_x = elliptical_F_hat(Sample(points=x), np.array([5.0, -1.0]), A @ A.T)
        t_z = elliptical_F_hat(Sample(points=z), np.zeros(2), np.eye(2))
        np.testing.assert_array_equal(t_x.rank, t_z.rank)

    def test_rejects_singular_scatter(self):
        s = sample_model("gaussian", 10, 0)
        with pytest.raises(InvalidInputError):
            elliptical_F_hat(s, np.zeros(2), np.zeros((2, 2)))


class TestModels:
    def test_registry_names(self):
        assert {"gaussian", "fig2-sep1", "fig2-sep2", "fig2-sep4",
                "fig3-center", "fig3-mid", "fig3-banana"} <= set(MODEL_REGISTRY)

    def test_seeded_reproducible(self):
        a = sample_model("fig3-mid", 100, 7).points
        b = sample_model("fig3-mid", 100, 7).points
        np.testing.assert_array_equal(a, b)

    def test_gaussian_custom_dim(self):
        s = sample_model("gaussian", 30, 0, d=4)
        assert s.points.shape == (30, 4)

    def test_mixture_moments(self):
        # two symmetric unit-variance components at +-4: mean near 0,
        # x-variance near 1 + 16
        s = sample_model("fig2-sep4", 50000, 0)
        assert abs(s.points[:, 0].mean()) < 0.1
        assert s.points[:, 0].var() == pytest.approx(17.0, rel=0.05)
        assert s.points[:, 1].var() == pytest.approx(1.0, rel=0.05)

    def test_elliptical_model_sampling(self):
        m = EllipticalModel(mu=[1.0, 2.0], sigma=[[2.0, 0.0], [0.0, 0.5]],
                            radial_cdf=chi_radial_cdf(2))
        s = sample_model(m, 20000, 0)
        np.testing.assert_allclose(s.points.mean(axis=0), [1.0, 2.0], atol=0.05)
        np.testing.assert_allclose(np.cov(s.points.T), [[2, 0], [0, 0.5]], atol=0.08)

    def test_mixture_validation(self):
        with pytest.raises(InvalidInputError):
            MixtureModel(weights=(0.5, 0.6), means=((0, 0), (1, 1)),
                         covs=(((1, 0), (0, 1)),) * 2)

    def test_unknown_name(self):
        with pytest.raises(InvalidInputError):
            sample_model("nope", 5, 0)
