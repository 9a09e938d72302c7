"""Transform and multiplier contracts, checked against direct DFT sums and
hand-evaluated symbols."""

import math

import numpy as np
import pytest

from aniso.spectral import (
    Grid2D,
    SpectralField,
    VectorField2,
    apply_multiplier,
    bessel_potential,
    derivative,
    fourier_truncate,
    fractional_laplacian,
    hermitian_symmetrize,
    l2_inner,
    leray_project,
    mollifier_symbol,
    mollify,
    riesz_double,
    to_physical,
    to_spectral,
)
from aniso.norms import sobolev_norm
from aniso.verify import random_divfree, random_field

from oracles import dft_direct, idft_direct, projection_matrix


def field_from_phys(grid, fn):
    x1, x2 = grid.meshgrid()
    return to_spectral(grid, fn(x1, x2))


class TestTransforms:
    def test_zero_coeffs_give_zero_samples(self, grid16):
        assert np.all(to_physical(SpectralField.zeros(grid16)) == 0.0)

    def test_single_hermitian_pair_is_cosine(self, grid16):
        c = np.zeros((16, 16), dtype=complex)
        c[1, 0] = 0.5
        c[-1, 0] = 0.5
        f = SpectralField(grid16, c)
        x1, _ = grid16.meshgrid()
        np.testing.assert_allclose(to_physical(f), np.cos(x1), atol=1e-13)

    def test_matches_quartic_dft_oracle(self):
        # random Hermitian coefficients inside the guard band (|k| <= 3 for
        # N = 8); the sample array is produced by the oracle's own direct
        # summation, so both transforms are checked against it
        grid = Grid2D(8)
        rng = np.random.default_rng(5)
        c = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        c[4, :] = 0.0
        c[:, 4] = 0.0
        c = hermitian_symmetrize(c)
        samples = idft_direct(c)
        assert np.max(np.abs(np.imag(samples))) < 1e-12
        samples = np.real(samples)
        f = to_spectral(grid, samples)
        np.testing.assert_allclose(f.coeffs, dft_direct(samples), atol=1e-12)
        np.testing.assert_allclose(f.coeffs, c, atol=1e-12)
        np.testing.assert_allclose(to_physical(f), samples, atol=1e-12)

    def test_constant_maps_to_mean_mode(self, grid16):
        f = to_spectral(grid16, np.full((16, 16), 3.25))
        assert f.coeffs[0, 0] == pytest.approx(3.25, abs=1e-14)
        rest = np.abs(f.coeffs).sum() - abs(f.coeffs[0, 0])
        assert rest < 1e-13

    def test_cos_2x_coefficients(self, grid16):
        f = field_from_phys(grid16, lambda x1, x2: np.cos(2 * x1))
        assert f.coeffs[2, 0] == pytest.approx(0.5, abs=1e-14)
        assert f.coeffs[-2, 0] == pytest.approx(0.5, abs=1e-14)

    @pytest.mark.parametrize("n", [16, 64, 128])
    def test_roundtrip(self, n):
        grid = Grid2D(n)
        f = random_field(grid, seed=n)
        back = to_spectral(grid, to_physical(f))
        scale = np.max(np.abs(f.coeffs))
        assert np.max(np.abs(back.coeffs - f.coeffs)) <= 1e-12 * scale

    def test_dimension_mismatch_rejected(self, grid16):
        with pytest.raises(ValueError, match="shape"):
            to_spectral(grid16, np.zeros((8, 8)))

    def test_nyquist_zeroed_and_hermitian(self, grid16):
        rng = np.random.default_rng(2)
        f = to_spectral(grid16, rng.standard_normal((16, 16)))
        assert np.all(f.coeffs[8, :] == 0.0)
        assert np.all(f.coeffs[:, 8] == 0.0)
        assert f.hermitian_defect() == 0.0


class TestApplyMultiplier:
    def test_identity(self, grid16):
        f = random_field(grid16, 7)
        out = apply_multiplier(f, lambda x1, x2: np.ones_like(x1 + x2))
        np.testing.assert_array_equal(out.coeffs, f.coeffs)

    def test_i_xi1_on_cosine(self, grid16):
        f = field_from_phys(grid16, lambda x1, x2: np.cos(x1))
        out = apply_multiplier(f, lambda x1, x2: 1j * x1 * np.ones_like(x2))
        x1, _ = grid16.meshgrid()
        np.testing.assert_allclose(to_physical(out), -np.sin(x1), atol=1e-13)

    def test_laplacian_symbol_on_diagonal_mode(self, grid16):
        f = field_from_phys(grid16, lambda x1, x2: np.cos(x1 + x2))
        out = apply_multiplier(f, lambda x1, x2: x1**2 + x2**2)
        np.testing.assert_allclose(to_physical(out), 2 * to_physical(f), atol=1e-13)

    def test_nonfinite_symbol_names_the_point(self, grid16):
        with pytest.raises(ValueError, match=r"xi=\(0\.0, 0\.0\)"):
            apply_multiplier(random_field(grid16, 1), lambda x1, x2: 1.0 / (x1**2 + x2**2))

    def test_diagonal_operators_commute(self, grid32):
        f = random_field(grid32, 9)
        pairs = [
            (lambda h: fractional_laplacian(h, 0.5), lambda h: bessel_potential(h, -1.0)),
            (lambda h: derivative(h, 1), lambda h: mollify(h, 0.2)),
            (lambda h: fourier_truncate(h, 5.0), lambda h: riesz_double(h, 1, 2)),
        ]
        for op_a, op_b in pairs:
            ab = op_a(op_b(f))
            ba = op_b(op_a(f))
            assert np.max(np.abs(ab.coeffs - ba.coeffs)) <= 1e-12


class TestFractionalLaplacian:
    def test_zero_power_identity(self, grid16):
        f = random_field(grid16, 3)
        np.testing.assert_array_equal(fractional_laplacian(f, 0.0).coeffs, f.coeffs)

    def test_power_one_on_cos2x(self, grid16):
        f = field_from_phys(grid16, lambda x1, x2: np.cos(2 * x1))
        np.testing.assert_allclose(
            to_physical(fractional_laplacian(f, 1.0)), 2 * to_physical(f), atol=1e-13
        )

    def test_half_power_diagonal(self, grid16):
        f = field_from_phys(grid16, lambda x1, x2: np.cos(x1 + x2))
        np.testing.assert_allclose(
            to_physical(fractional_laplacian(f, 0.5)),
            2**0.25 * to_physical(f),
            atol=1e-13,
        )

    def test_negative_power_needs_zero_mean(self, grid16):
        f = to_spectral(grid16, np.full((16, 16), 1.0))
        with pytest.raises(ValueError, match="singular symbol at xi=0"):
            fractional_laplacian(f, -1.0)


class TestBesselPotential:
    def test_zero_identity(self, grid16):
        f = random_field(grid16, 4)
        np.testing.assert_array_equal(bessel_potential(f, 0.0).coeffs, f.coeffs)

    def test_order_two_on_cosine(self, grid16):
        f = field_from_phys(grid16, lambda x1, x2: np.cos(x1))
        np.testing.assert_allclose(
            to_physical(bessel_potential(f, 2.0)), 2 * to_physical(f), atol=1e-13
        )

    def test_inverse_pair(self, grid32):
        f = random_field(grid32, 5)
        back = bessel_potential(bessel_potential(f, -2.0), 2.0)
        assert np.max(np.abs(back.coeffs - f.coeffs)) <= 1e-12 * np.max(np.abs(f.coeffs))


class TestLerayProjection:
    def test_solenoidal_field_unchanged(self, grid16):
        f = field_from_phys(grid16, lambda x1, x2: np.sin(x2))
        u = VectorField2(f, SpectralField.zeros(grid16))
        p = leray_project(u)
        np.testing.assert_allclose(p.u1.coeffs, u.u1.coeffs, atol=1e-14)
        np.testing.assert_allclose(p.u2.coeffs, u.u2.coeffs, atol=1e-14)

    def test_gradient_annihilated(self, grid16):
        u = VectorField2(
            field_from_phys(grid16, lambda x1, x2: -np.sin(x1)),
            SpectralField.zeros(grid16),
        )
        p = leray_project(u)
        assert np.max(np.abs(p.u1.coeffs)) < 1e-14
        assert np.max(np.abs(p.u2.coeffs)) < 1e-14

    def test_diagonal_mode_symbol(self, grid16):
        u = VectorField2(
            field_from_phys(grid16, lambda x1, x2: np.cos(x1 + x2)),
            SpectralField.zeros(grid16),
        )
        p = leray_project(u)
        x1, x2 = grid16.meshgrid()
        np.testing.assert_allclose(to_physical(p.u1), 0.5 * np.cos(x1 + x2), atol=1e-13)
        np.testing.assert_allclose(to_physical(p.u2), -0.5 * np.cos(x1 + x2), atol=1e-13)

    def test_projection_symbol_matrix(self):
        # at k = (1, 1) the symbol is exactly [[1/2, -1/2], [-1/2, 1/2]]
        np.testing.assert_array_equal(
            projection_matrix(1.0, 1.0), np.array([[0.5, -0.5], [-0.5, 0.5]])
        )
        grid = Grid2D(16)
        for basis, expected in [((1, 0), (0.5, -0.5)), ((0, 1), (-0.5, 0.5))]:
            c1 = np.zeros((16, 16), dtype=complex)
            c2 = np.zeros((16, 16), dtype=complex)
            (c1 if basis == (1, 0) else c2)[1, 1] = 1.0
            p = leray_project(VectorField2(SpectralField(grid, c1), SpectralField(grid, c2)))
            assert p.u1.coeffs[1, 1] == expected[0]
            assert p.u2.coeffs[1, 1] == expected[1]

    def test_idempotent_and_certified(self, grid32):
        u = VectorField2(random_field(grid32, 21), random_field(grid32, 22))
        p = leray_project(u)
        assert p.divergence_measure() <= 1e-12
        pp = leray_project(p)
        scale = max(np.max(np.abs(p.u1.coeffs)), np.max(np.abs(p.u2.coeffs)))
        diff = max(
            np.max(np.abs(pp.u1.coeffs - p.u1.coeffs)),
            np.max(np.abs(pp.u2.coeffs - p.u2.coeffs)),
        )
        assert diff <= 1e-12 * scale


class TestFourierTruncate:
    def test_radius_beyond_lattice_is_identity(self, grid16):
        f = random_field(grid16, 6)
        out = fourier_truncate(f, 1e3)
        np.testing.assert_array_equal(out.coeffs, f.coeffs)

    def test_mode_removal(self, grid16):
        f = field_from_phys(grid16, lambda x1, x2: np.cos(x1) + np.cos(2 * x1))
        out = fourier_truncate(f, 1.5)
        x1, _ = grid16.meshgrid()
        np.testing.assert_allclose(to_physical(out), np.cos(x1), atol=1e-13)

    def test_idempotent(self, grid16):
        f = random_field(grid16, 8)
        once = fourier_truncate(f, 3.0)
        twice = fourier_truncate(once, 3.0)
        np.testing.assert_array_equal(once.coeffs, twice.coeffs)

    def test_invalid_radius(self, grid16):
        with pytest.raises(ValueError, match="radius"):
            fourier_truncate(random_field(grid16, 1), 0.0)

    def test_measured_error_bound(self, grid32):
        f = random_field(grid32, 30, s=0.5)
        lhs = sobolev_norm(fourier_truncate(f, 3.0) - f, 0.0)
        rhs = (1.0 / 3.0) * sobolev_norm(f, 1.0)
        assert lhs <= rhs

    @pytest.mark.parametrize("s1", [0.0, 0.5, 1.0, 2.0])
    @pytest.mark.parametrize("s2", [0.0, 0.5, 1.0, 2.0])
    def test_bound_constant_one(self, grid32, s1, s2):
        for seed in range(5):
            f = random_field(grid32, 300 + seed, s=1.0)
            for n in (2.0, 4.0, 8.0):
                lhs = sobolev_norm(fourier_truncate(f, n) - f, s1)
                rhs = n**-s2 * sobolev_norm(f, s1 + s2)
                assert lhs <= rhs * (1.0 + 1e-12)


class TestMollify:
    def test_symbol_bump_values(self):
        assert mollifier_symbol(np.array(0.0)) == 1.0
        assert mollifier_symbol(np.array(4.0)) == 0.0  # |eta| = 2 boundary
        assert 0.0 < mollifier_symbol(np.array(1.0)) < 1.0

    def test_eps_sweep_convergence(self, grid32):
        f = fourier_truncate(random_field(grid32, 41), 8.0)
        l2 = sobolev_norm(f, 0.0)
        errs = [sobolev_norm(mollify(f, eps) - f, 0.0) / l2 for eps in (1.0, 0.1, 0.01, 0.001)]
        assert errs[-1] <= 1e-3
        assert errs == sorted(errs, reverse=True)

    def test_constant_preserved(self, grid16):
        f = to_spectral(grid16, np.full((16, 16), 2.5))
        for eps in (0.5, 1.0, 2.0):
            np.testing.assert_allclose(mollify(f, eps).coeffs, f.coeffs, atol=1e-15)

    def test_l2_contraction_on_corpus(self, grid32):
        for seed in range(100):
            f = random_field(grid32, 1000 + seed)
            assert sobolev_norm(mollify(f, 0.7), 0.0) <= sobolev_norm(f, 0.0) * (1 + 1e-14)

    def test_invalid_eps(self, grid16):
        with pytest.raises(ValueError, match="width"):
            mollify(random_field(grid16, 1), -1.0)


class TestRieszDouble:
    def test_axis_aligned_symbol_one(self, grid16):
        f = field_from_phys(grid16, lambda x1, x2: np.cos(x1))
        out = riesz_double(f, 1, 1)
        np.testing.assert_allclose(to_physical(out), to_physical(f), atol=1e-13)

    def test_mixed_on_axis_mode_vanishes(self, grid16):
        f = field_from_phys(grid16, lambda x1, x2: np.cos(x1))
        out = riesz_double(f, 1, 2)
        assert np.max(np.abs(out.coeffs)) < 1e-15

    def test_l2_contraction(self, grid32):
        for seed in range(20):
            f = random_field(grid32, 2000 + seed)
            for i, j in ((1, 1), (1, 2), (2, 2)):
                assert sobolev_norm(riesz_double(f, i, j), 0.0) <= sobolev_norm(f, 0.0)

    def test_bad_axis(self, grid16):
        with pytest.raises(ValueError, match="axes"):
            riesz_double(random_field(grid16, 1), 0, 1)


class TestVorticityIdentities:
    @pytest.mark.parametrize("seed", range(10))
    def test_gradient_norm_equals_vorticity_norm(self, grid32, seed):
        v = random_divfree(grid32, 5000 + seed)
        w = derivative(v.u2, 1) - derivative(v.u1, 2)
        lhs = math.hypot(
            sobolev_norm(v.u1, 1.0, homogeneous=True),
            sobolev_norm(v.u2, 1.0, homogeneous=True),
        )
        rhs = sobolev_norm(w, 0.0)
        assert abs(lhs - rhs) <= 1e-10 * rhs

    @pytest.mark.parametrize("seed", range(5))
    def test_vorticity_gradient_is_rotated_laplacian(self, grid32, seed):
        v = random_divfree(grid32, 6000 + seed)
        w = derivative(v.u2, 1) - derivative(v.u1, 2)
        lap1 = fractional_laplacian(v.u1, 2.0)  # = -Laplacian
        lap2 = fractional_laplacian(v.u2, 2.0)
        scale = max(np.max(np.abs(lap1.coeffs)), np.max(np.abs(lap2.coeffs)))
        assert np.max(np.abs(derivative(w, 1).coeffs + lap2.coeffs)) <= 1e-10 * scale
        assert np.max(np.abs(derivative(w, 2).coeffs - lap1.coeffs)) <= 1e-10 * scale


def test_parseval(grid32):
    f = random_field(grid32, 77)
    phys = to_physical(f)
    quad = float(np.sum(phys**2) * grid32.cell_area)
    spec = sobolev_norm(f, 0.0) ** 2
    assert abs(quad - spec) <= 1e-10 * spec


def test_l2_inner_symmetry(grid32):
    f = random_field(grid32, 78)
    g = random_field(grid32, 79)
    assert l2_inner(f, g) == pytest.approx(l2_inner(g, f), rel=1e-12)


def test_hermitian_symmetrize_involution(grid16):
    rng = np.random.default_rng(123)
    c = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
    sym = hermitian_symmetrize(c)
    np.testing.assert_allclose(hermitian_symmetrize(sym), sym, atol=1e-15)


class TestRegrid:
    def test_refine_preserves_samples(self, grid16, grid32):
        from aniso.spectral import regrid

        f = random_field(grid16, 90)
        fine = regrid(f, grid32)
        # shared collocation points (every second fine point) agree
        coarse_phys = to_physical(f)
        fine_phys = to_physical(fine)
        np.testing.assert_allclose(fine_phys[::2, ::2], coarse_phys, atol=1e-12)
        assert sobolev_norm(fine, 0.0) == pytest.approx(sobolev_norm(f, 0.0), rel=1e-13)

    def test_refine_then_coarsen_roundtrip(self, grid16, grid32):
        from aniso.spectral import regrid

        f = random_field(grid16, 91)
        back = regrid(regrid(f, grid32), grid16)
        np.testing.assert_array_equal(back.coeffs, f.coeffs)

    def test_box_mismatch_rejected(self, grid16):
        from aniso.spectral import regrid

        with pytest.raises(ValueError, match="box lengths"):
            regrid(random_field(grid16, 92), Grid2D(32, L=1.0))
