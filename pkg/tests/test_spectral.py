import numpy as np
import pytest

from oldb2d import (
    curl,
    ddx,
    dealias,
    divergence,
    heat_semigroup,
    invert_laplacian,
    laplacian,
    leray_project,
    make_grid,
    scalar_field,
    vector_field,
    velocity_from_vorticity,
)
from oldb2d.spectral import hermitian_defect, to_real, to_spectral

from oracles import fd_derivative

TWO_PI = 2.0 * np.pi


def band_limited(grid, rng, kmax=None):
    noise = rng.standard_normal((grid.n, grid.n))
    fh = to_spectral(noise) * grid.dealias_mask
    if kmax is not None:
        kint = np.rint(np.fft.fftfreq(grid.n, 1.0 / grid.n)).astype(int)
        ki, kj = np.meshgrid(kint, kint, indexing="ij")
        fh *= (np.abs(ki) <= kmax) & (np.abs(kj) <= kmax)
    return scalar_field(grid, to_real(fh))


class TestMakeGrid:
    def test_small_grid_mask(self):
        # n=8: 2/3 of the resolvable 4 truncates to 2; |k| in {3, 4} masked.
        g = make_grid(8, TWO_PI)
        kint = np.rint(np.fft.fftfreq(8, 1.0 / 8)).astype(int)
        ki, kj = np.meshgrid(kint, kint, indexing="ij")
        expected = (np.abs(ki) <= 2) & (np.abs(kj) <= 2)
        assert np.array_equal(g.dealias_mask, expected)
        assert g.dealias_mask[0, 0]

    def test_mask_boundary_n64(self):
        # Survivors satisfy 3|k| <= n: |k| = 21 is kept, |k| = 22 masked.
        g = make_grid(64, TWO_PI)
        assert g.dealias_mask[21, 0]
        assert not g.dealias_mask[22, 0]
        assert not g.dealias_mask[0, 64 - 22]

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            make_grid(7, 1.0)
        with pytest.raises(ValueError):
            make_grid(6, 1.0)
        with pytest.raises(ValueError):
            make_grid(64, 0.0)
        with pytest.raises(ValueError):
            make_grid(64, -1.0)

    def test_roundtrip_identity(self, grid64):
        rng = np.random.default_rng(0)
        f = rng.standard_normal((64, 64))
        back = to_real(to_spectral(f))
        assert np.max(np.abs(back - f)) <= 1e-13 * np.max(np.abs(f))

    def test_zero_mode_is_mean(self, grid32):
        rng = np.random.default_rng(1)
        f = rng.standard_normal((32, 32))
        assert to_spectral(f)[0, 0] == pytest.approx(np.mean(f), abs=1e-15)

    def test_hermitian_symmetry_of_real_field(self, grid32):
        rng = np.random.default_rng(2)
        f = scalar_field(grid32, rng.standard_normal((32, 32)))
        assert hermitian_defect(f) <= 1e-14


class TestDdx:
    def test_single_mode(self, grid64):
        x, y = grid64.nodes()
        f = scalar_field(grid64, np.sin(x))
        assert np.max(np.abs(ddx(f, 1).values - np.cos(x))) <= 1e-13

    def test_constant(self, grid32):
        f = scalar_field(grid32, np.full((32, 32), 4.2))
        assert np.max(np.abs(ddx(f, 1).values)) <= 1e-14
        assert np.max(np.abs(ddx(f, 2).values)) <= 1e-14

    def test_against_finite_difference_oracle(self, grid64):
        # d/dy sin(3x)cos(2y) = -2 sin(3x) sin(2y); the 8th-order stencil
        # resolves it to ~1e-9 at this spacing.
        x, y = grid64.nodes()
        vals = np.sin(3 * x) * np.cos(2 * y)
        f = scalar_field(grid64, vals)
        got = ddx(f, 2).values
        oracle = fd_derivative(vals, axis=1, h=grid64.spacing)
        exact = -2.0 * np.sin(3 * x) * np.sin(2 * y)
        assert np.max(np.abs(got - oracle)) <= 1e-8
        assert np.max(np.abs(got - exact)) <= 1e-13

    def test_axis_validation(self, grid32):
        f = scalar_field(grid32, np.zeros((32, 32)))
        with pytest.raises(ValueError):
            ddx(f, 3)


class TestLaplacian:
    def test_eigenfunction(self, grid64):
        # |k|^2 amplifies the transform's rounding noise, so the tolerance
        # is 1e-12 rather than the first-derivative 1e-13.
        x, _ = grid64.nodes()
        f = scalar_field(grid64, np.sin(x))
        assert np.max(np.abs(laplacian(f).values + np.sin(x))) <= 1e-12

    def test_constant(self, grid32):
        f = scalar_field(grid32, np.ones((32, 32)))
        assert np.max(np.abs(laplacian(f).values)) <= 1e-14

    def test_matches_composed_derivatives(self, grid64):
        rng = np.random.default_rng(3)
        f = band_limited(grid64, rng)
        composed = ddx(ddx(f, 1), 1).values + ddx(ddx(f, 2), 2).values
        err = np.max(np.abs(laplacian(f).values - composed))
        assert err <= 1e-12 * max(1.0, np.max(np.abs(f.values)))


class TestDealias:
    def test_low_mode_unchanged(self, grid64):
        x, y = grid64.nodes()
        f = scalar_field(grid64, np.cos(x))
        assert np.max(np.abs(dealias(f).values - f.values)) <= 1e-15

    def test_high_mode_removed(self, grid64):
        x, _ = grid64.nodes()
        f = scalar_field(grid64, np.cos(31 * x))  # mode (n/2 - 1, 0)
        assert np.max(np.abs(dealias(f).values)) <= 1e-13

    def test_idempotent(self, grid64):
        # Exact on the spectral representation: masking twice is masking once.
        rng = np.random.default_rng(4)
        f = scalar_field(grid64, rng.standard_normal((64, 64))).as_spectral()
        once = dealias(f)
        twice = dealias(once)
        assert np.array_equal(once.data, twice.data)
        assert np.all(once.data[~grid64.dealias_mask] == 0.0)


class TestLerayProjection:
    def test_divergence_free_fixed_point(self, grid64):
        _, y = grid64.nodes()
        v = vector_field(grid64, np.stack([np.sin(y), np.zeros_like(y)]))
        pv = leray_project(v)
        assert np.max(np.abs(pv.values - v.values)) <= 1e-13

    def test_gradient_annihilated(self, grid64):
        x, y = grid64.nodes()
        phi = scalar_field(grid64, np.sin(x) * np.sin(y))
        grad = vector_field(
            grid64, np.stack([ddx(phi, 1).values, ddx(phi, 2).values])
        )
        assert np.max(np.abs(leray_project(grad).values)) <= 1e-13

    def test_idempotent_and_divergence_free(self, grid64):
        rng = np.random.default_rng(5)
        v = vector_field(grid64, rng.standard_normal((2, 64, 64)))
        pv = leray_project(v)
        scale = np.sqrt(np.sum(np.abs(v.coeffs) ** 2))
        assert np.max(np.abs(divergence(pv).coeffs)) <= 1e-13 * scale
        again = leray_project(pv)
        assert np.max(np.abs(again.coeffs - pv.coeffs)) <= 1e-13 * scale


class TestHeatSemigroup:
    def test_identity_at_zero_time(self, grid32):
        rng = np.random.default_rng(6)
        f = scalar_field(grid32, rng.standard_normal((32, 32)))
        spectral = f.as_spectral()
        assert np.array_equal(heat_semigroup(spectral, 0.5, 1.0, 0.0).data,
                              spectral.data)
        real_gap = np.max(np.abs(heat_semigroup(f, 0.5, 1.0, 0.0).values - f.values))
        assert real_gap <= 1e-14

    def test_single_mode_decay(self, grid64):
        x, _ = grid64.nodes()
        nu, t = 0.3, 0.8
        f = scalar_field(grid64, np.sin(x))
        expected = np.exp(-nu * t) * np.sin(x)
        assert np.max(np.abs(heat_semigroup(f, nu, 0.0, t).values - expected)) <= 1e-13

    def test_zero_mode_feels_only_damping(self, grid32):
        k, t = 1.7, 0.4
        f = scalar_field(grid32, np.ones((32, 32)))
        got = heat_semigroup(f, 0.05, 2.0 * k, t).values
        assert np.max(np.abs(got - np.exp(-2.0 * k * t))) <= 1e-14

    def test_semigroup_law(self, grid64):
        rng = np.random.default_rng(7)
        f = scalar_field(grid64, rng.standard_normal((64, 64)))
        whole = heat_semigroup(f, 0.02, 3.0, 0.9)
        split = heat_semigroup(heat_semigroup(f, 0.02, 3.0, 0.5), 0.02, 3.0, 0.4)
        err = np.max(np.abs(whole.values - split.values))
        assert err <= 1e-13 * max(1.0, np.max(np.abs(f.values)))

    def test_rejects_negative_time(self, grid32):
        f = scalar_field(grid32, np.zeros((32, 32)))
        with pytest.raises(ValueError):
            heat_semigroup(f, 0.1, 0.0, -1e-9)


class TestInvertLaplacian:
    def test_single_mode(self, grid64):
        x, _ = grid64.nodes()
        f = scalar_field(grid64, -np.sin(x))
        assert np.max(np.abs(invert_laplacian(f).values - np.sin(x))) <= 1e-13

    def test_inverse_composition(self, grid64):
        rng = np.random.default_rng(8)
        g = band_limited(grid64, rng)
        g = scalar_field(grid64, g.values - np.mean(g.values))
        back = invert_laplacian(laplacian(g)).values
        assert np.max(np.abs(back - g.values)) <= 1e-12 * max(1.0, np.max(np.abs(g.values)))

    def test_rejects_nonzero_mean(self, grid32):
        f = scalar_field(grid32, np.ones((32, 32)))
        with pytest.raises(ValueError):
            invert_laplacian(f)


class TestVelocityFromVorticity:
    def test_two_mode_vortex(self, grid64):
        # curl and divergence are the oracle: curl(u) must reproduce the
        # input vorticity and div(u) must vanish.
        x, y = grid64.nodes()
        w = scalar_field(grid64, 2.0 * np.sin(x) * np.sin(y))
        u = velocity_from_vorticity(w)
        assert np.max(np.abs(curl(u).values - w.values)) <= 1e-12
        assert np.max(np.abs(divergence(u).values)) <= 1e-12
        assert np.max(np.abs(u.values[0] - np.sin(x) * np.cos(y))) <= 1e-12
        assert np.max(np.abs(u.values[1] + np.cos(x) * np.sin(y))) <= 1e-12

    def test_zero(self, grid32):
        w = scalar_field(grid32, np.zeros((32, 32)))
        assert np.max(np.abs(velocity_from_vorticity(w).values)) == 0.0

    def test_random_roundtrip(self, grid64):
        rng = np.random.default_rng(9)
        w = band_limited(grid64, rng)
        w = scalar_field(grid64, w.values - np.mean(w.values))
        u = velocity_from_vorticity(w)
        err = np.max(np.abs(curl(u).values - w.values))
        assert err <= 1e-12 * max(1.0, np.max(np.abs(w.values)))

    def test_rejects_nonzero_mean(self, grid32):
        w = scalar_field(grid32, np.ones((32, 32)))
        with pytest.raises(ValueError):
            velocity_from_vorticity(w)


class TestParseval:
    def test_norm_equality(self, grid64):
        rng = np.random.default_rng(10)
        f = scalar_field(grid64, rng.standard_normal((64, 64)))
        real_norm = np.sqrt(np.mean(f.values ** 2) * grid64.area)
        spec_norm = np.sqrt(np.sum(np.abs(f.coeffs) ** 2) * grid64.area)
        assert abs(real_norm - spec_norm) <= 1e-12 * real_norm
