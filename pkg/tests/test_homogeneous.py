import numpy as np
import pytest

from conftest import gl_grid_3d
from vpl import PacketParams, SpacetimePoint, psi0, psi_free_grid
from vpl.homogeneous import (
    HomogeneousField,
    displacement,
    gauge_factors,
    psi_homogeneous,
    psi_homogeneous_grid,
    vector_potential,
)
from vpl.homogeneous import _squared_potential_phase


def packet():
    return PacketParams(sigma=0.05, pbar=1.0, l=2)


class TestPotentials:
    def test_zero_field(self):
        f = HomogeneousField.constant(0.0)
        assert vector_potential(50.0, f) == 0.0
        assert displacement(50.0, f, packet()) == 0.0

    def test_constant_closed_forms(self):
        p = packet()
        f = HomogeneousField.constant(1e-4)
        t = 100.0
        assert vector_potential(t, f) == pytest.approx(-1e-4 * t)
        assert displacement(t, f, p) == pytest.approx(p.charge * 1e-4 * t * t / 2.0)

    def test_sinusoid_closed_forms(self):
        p = packet()
        E0, w = 2e-4, 0.03
        f = HomogeneousField.sinusoid(E0, w)
        t = 100.0
        assert vector_potential(t, f) == pytest.approx((E0 / w) * (np.cos(w * t) - 1.0))
        assert displacement(t, f, p) == pytest.approx(
            -(p.charge / p.mass) * (E0 / w) * (np.sin(w * t) / w - t)
        )

    def test_tabulated_matches_sinusoid(self):
        p = packet()
        E0, w = 2e-4, 0.03
        fs = HomogeneousField.sinusoid(E0, w)
        ts = np.linspace(0.0, 200.0, 20001)
        ft = HomogeneousField.tabulated(ts, E0 * np.sin(w * ts))
        t = 137.0
        assert vector_potential(t, ft) == pytest.approx(vector_potential(t, fs), rel=1e-7)
        assert displacement(t, ft, p) == pytest.approx(displacement(t, fs, p), rel=1e-7)
        assert _squared_potential_phase(t, ft, p) == pytest.approx(
            _squared_potential_phase(t, fs, p), rel=1e-6
        )

    def test_validation(self):
        with pytest.raises(ValueError):
            HomogeneousField(profile="bogus")
        with pytest.raises(ValueError):
            HomogeneousField.sinusoid(1.0, 0.0)


class TestExactSolution:
    def test_initial_condition(self):
        p = packet()
        f = HomogeneousField.constant(1e-4)
        pt = SpacetimePoint(0.0, 7.0, -3.0, 2.0)
        assert abs(psi_homogeneous(pt, p, f) - psi0(pt, p)) < 1e-18

    def test_density_shift_identity(self):
        p = packet()
        f = HomogeneousField.constant(1e-4)
        t = 100.0
        s = displacement(t, f, p)
        rng = np.random.default_rng(8)
        for _ in range(10):
            x, y = rng.uniform(-30, 30, 2)
            z = rng.uniform(80, 120)
            lhs = abs(psi_homogeneous(SpacetimePoint(t, x, y, z), p, f)) ** 2
            rhs = abs(psi_free_grid(t, x - s, y, z, p)[0]) ** 2
            assert abs(lhs - rhs) / rhs < 1e-12

    def test_gauge_factors_unimodular(self):
        p = packet()
        f = HomogeneousField.sinusoid(2e-4, 0.03)
        kick, quad = gauge_factors(140.0, 17.0, f, p)
        assert abs(abs(complex(kick)) - 1.0) < 1e-15
        assert abs(abs(complex(quad)) - 1.0) < 1e-15

    def test_norm_conserved(self):
        p = packet()
        f = HomogeneousField.constant(1e-4)
        t = 100.0
        zc = p.pbar * t / p.mass
        s = displacement(t, f, p)
        (xs, ys, zs), w = gl_grid_3d(140, 9.0 / p.sigma, center=(s, 0.0, zc))
        vals = (
            np.abs(
                psi_homogeneous_grid(
                    t, xs[:, None, None], ys[None, :, None], zs[None, None, :], p, f
                )
            )
            ** 2
        )
        assert abs(np.einsum("i,j,k,ijk->", w, w, w, vals) - 1.0) < 1e-6

    def test_schrodinger_residual(self):
        # central finite differences, steps 1e-3; the packet is kept slow
        # so the stencil's own truncation error stays well under the bound
        p = packet()
        f = HomogeneousField.constant(1e-4)
        t = 100.0
        h = 1e-3

        def ps(tt, xx, yy, zz):
            return psi_homogeneous(SpacetimePoint(tt, xx, yy, zz), p, f)

        worst_num, worst_den = 0.0, 0.0
        for (x, y, z) in [(5.0, 2.0, 90.0), (10.0, -5.0, 100.0), (0.5, 0.5, 95.0), (-8.0, 3.0, 105.0)]:
            dpsi_dt = (ps(t + h, x, y, z) - ps(t - h, x, y, z)) / (2 * h)
            lap = (
                ps(t, x + h, y, z) + ps(t, x - h, y, z)
                + ps(t, x, y + h, z) + ps(t, x, y - h, z)
                + ps(t, x, y, z + h) + ps(t, x, y, z - h)
                - 6.0 * ps(t, x, y, z)
            ) / h**2
            v_pot = -f.strength(t) * x * p.charge
            h_psi = -lap / (2.0 * p.mass) + v_pot * ps(t, x, y, z)
            worst_num = max(worst_num, abs(1j * dpsi_dt - h_psi))
            worst_den = max(worst_den, abs(h_psi))
        assert worst_num / worst_den < 1e-4
