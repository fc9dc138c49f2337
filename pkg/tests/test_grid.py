"""Spectral substrate: transforms, multipliers, norms, dealiasing."""

import numpy as np
import pytest

from gclab.grid import (
    FourierMultiplier,
    Grid,
    SpectralField,
    apply_multiplier,
    dealias,
    divergence,
    gradient,
    read_field,
    sobolev_norm,
    write_field,
)


@pytest.fixture
def g64():
    return Grid(64)


class TestGrid:
    def test_validation(self):
        with pytest.raises(ValueError):
            Grid(48)
        with pytest.raises(ValueError):
            Grid(4)
        with pytest.raises(ValueError):
            Grid(64, d=3)

    def test_frequency_set(self, g64):
        k = np.sort(g64.k[0])
        assert k[0] == -31 and k[-1] == 32  # {-N/2+1, ..., N/2}

    def test_roundtrip(self, g64):
        rng = np.random.default_rng(0)
        u = SpectralField(g64, values=rng.standard_normal(64))
        back = SpectralField(g64, coeffs=u.coeffs)
        assert np.max(np.abs(back.values - u.values)) <= 1e-12 * np.max(np.abs(u.values))

    def test_hermitian_symmetry(self, g64):
        u = SpectralField.from_function(g64, lambda x: np.cos(3 * x) + np.sin(5 * x))
        c = u.coeffs
        for k in range(1, 32):
            assert abs(c[-k] - np.conj(c[k])) < 1e-14


class TestMultiplier:
    def test_abs_eigenfunction(self, g64):
        m = FourierMultiplier(g64, lambda k: np.abs(k), at_zero=0.0, order=1)
        u = SpectralField.from_function(g64, lambda x: np.cos(3 * x))
        out = apply_multiplier(m, u)
        assert np.allclose(out.values, 3 * np.cos(3 * g64.x[0]), atol=1e-12)

    def test_bracket_on_constant(self, g64):
        m = FourierMultiplier(g64, lambda k: np.sqrt(1 + k**2), at_zero=1.0)
        u = SpectralField(g64, values=np.ones(64))
        out = apply_multiplier(m, u)
        assert np.allclose(out.values, 1.0, atol=1e-13)

    def test_smoothing_exponential_identity_at_z0(self, g64):
        # e^{delta z <D>} with z = 0 is the identity
        m = FourierMultiplier(g64, lambda k: np.exp(0.0 * np.sqrt(1 + k**2)), at_zero=1.0)
        u = SpectralField.from_function(g64, lambda x: np.cos(4 * x) - 0.3 * np.sin(x))
        out = apply_multiplier(m, u)
        assert np.allclose(out.values, u.values, atol=1e-13)

    def test_nonfinite_rejected(self, g64):
        with pytest.raises(ValueError):
            FourierMultiplier(g64, lambda k: 1.0 / np.abs(k), at_zero=np.inf)

    def test_composition_exact(self, g64):
        m1 = FourierMultiplier(g64, lambda k: np.abs(k), at_zero=0.0)
        m2 = FourierMultiplier(g64, lambda k: 1.0 + k**2, at_zero=1.0)
        m12 = FourierMultiplier.from_table(g64, m1.table * m2.table)
        u = SpectralField.from_function(g64, lambda x: np.cos(5 * x) + np.sin(2 * x))
        a = apply_multiplier(m1, apply_multiplier(m2, u))
        b = apply_multiplier(m12, u)
        # same operator; scalar multiplication reassociation costs at most 1 ulp
        assert np.max(np.abs(a.coeffs - b.coeffs)) <= 1e-15 * np.max(np.abs(b.coeffs))

    def test_real_output_for_symmetric_multiplier(self, g64):
        m = FourierMultiplier(g64, lambda k: np.abs(k) ** 1.5, at_zero=0.0)
        rng = np.random.default_rng(3)
        u = SpectralField(g64, values=rng.standard_normal(64))
        out = apply_multiplier(m, u)
        assert np.max(np.abs(np.imag(out.values))) < 1e-12


class TestSobolevNorm:
    def test_cos3_s0(self, g64):
        u = SpectralField.from_function(g64, lambda x: np.cos(3 * x))
        assert abs(sobolev_norm(u, 0.0) - 1 / np.sqrt(2)) < 1e-12

    def test_cos3_s1(self, g64):
        u = SpectralField.from_function(g64, lambda x: np.cos(3 * x))
        assert abs(sobolev_norm(u, 1.0) - np.sqrt(5)) < 1e-12

    def test_zero(self, g64):
        assert sobolev_norm(SpectralField.zero(g64), 2.3) == 0.0

    def test_parseval(self, g64):
        rng = np.random.default_rng(1)
        u = SpectralField(g64, values=rng.standard_normal(64))
        grid_avg = np.mean(u.values**2)
        assert abs(sobolev_norm(u, 0.0) ** 2 - grid_avg) <= 1e-12 * grid_avg


class TestDealias:
    def test_kills_high_mode(self):
        g = Grid(64)
        u = SpectralField.from_function(g, lambda x: np.cos(30 * x))
        assert dealias(u).linf() < 1e-13

    def test_keeps_low_mode(self):
        g = Grid(64)
        u = SpectralField.from_function(g, lambda x: np.cos(3 * x))
        assert np.allclose(dealias(u).values, u.values, atol=1e-14)

    def test_keeps_constant(self):
        g = Grid(64)
        u = SpectralField(g, values=np.full(64, 2.5))
        assert np.allclose(dealias(u).values, 2.5, atol=1e-14)


class TestGradient:
    def test_cos(self, g64):
        u = SpectralField.from_function(g64, lambda x: np.cos(3 * x))
        (du,) = gradient(u)
        assert np.allclose(du.values, -3 * np.sin(3 * g64.x[0]), atol=1e-12)

    def test_constant(self, g64):
        u = SpectralField(g64, values=np.ones(64))
        assert gradient(u)[0].linf() < 1e-14

    def test_2d(self):
        g = Grid(16, d=2)
        u = SpectralField.from_function(g, lambda x, y: np.sin(x) * np.cos(y))
        ux, uy = gradient(u)
        assert np.allclose(ux.values, np.cos(g.x[0]) * np.cos(g.x[1]), atol=1e-12)
        assert np.allclose(uy.values, -np.sin(g.x[0]) * np.sin(g.x[1]), atol=1e-12)

    def test_leibniz_after_dealias(self, g64):
        # band-limited factors |k| <= N/4
        rng = np.random.default_rng(2)
        cu = np.zeros(64, dtype=complex)
        cv = np.zeros(64, dtype=complex)
        for k in range(1, 17):
            cu[k] = rng.standard_normal() + 1j * rng.standard_normal()
            cu[-k] = np.conj(cu[k])
            cv[k] = rng.standard_normal() + 1j * rng.standard_normal()
            cv[-k] = np.conj(cv[k])
        u = SpectralField(g64, coeffs=cu)
        v = SpectralField(g64, coeffs=cv)
        lhs = gradient(dealias(u * v))[0]
        rhs = dealias(gradient(u)[0] * v + u * gradient(v)[0])
        scale = max(lhs.linf(), 1e-30)
        assert (lhs - rhs).linf() <= 1e-10 * scale


class TestSerialization:
    def test_roundtrip(self, tmp_path, g64):
        u = SpectralField.from_function(g64, lambda x: np.cos(2 * x) + 0.1)
        p = tmp_path / "field.txt"
        write_field(p, u)
        v = read_field(p)
        assert v.grid == g64
        assert np.allclose(v.values, u.values, atol=0)

    def test_divergence_2d(self):
        g = Grid(16, d=2)
        fx = SpectralField.from_function(g, lambda x, y: np.sin(x))
        fy = SpectralField.from_function(g, lambda x, y: np.cos(y))
        div = divergence((fx, fy))
        expect = np.cos(g.x[0]) - np.sin(g.x[1])
        assert np.allclose(div.values, expect, atol=1e-12)
