"""Symbol catalog values, reality structure, semi-norms, quantization basics."""

import numpy as np
import pytest

from gclab.grid import Grid, SpectralField
from gclab.quantize import quantize
from gclab.symbols import (
    SymbolDescriptor,
    build_symbol,
    factorization_symbols,
    seminorm,
    xfield,
    ximesh,
)


@pytest.fixture
def g64():
    return Grid(64)


@pytest.fixture
def eta_small(g64):
    return SpectralField.from_function(g64, lambda x: 0.05 * np.cos(x))


class TestCatalogRestState:
    """At eta = 0 the catalog collapses to the flat linearization symbols."""

    def test_lambda1_is_absxi(self, g64):
        lam = build_symbol("lambda1", SpectralField.zero(g64))
        assert np.max(np.abs(lam.table - np.abs(g64._k1)[None, :])) == 0.0

    def test_lambda0_vanishes(self, g64):
        lam0 = build_symbol("lambda0", SpectralField.zero(g64))
        assert np.max(np.abs(lam0.table)) < 1e-14

    def test_ell2_is_xisq(self, g64):
        e2 = build_symbol("ell2", SpectralField.zero(g64))
        assert np.max(np.abs(e2.table - np.abs(g64._k1)[None, :] ** 2)) == 0.0

    def test_gamma_is_xi32(self, g64):
        gam = build_symbol("gamma", SpectralField.zero(g64))
        assert np.max(np.abs(gam.table - np.abs(g64._k1)[None, :] ** 1.5)) < 1e-12

    def test_p_is_sqrtxi_q_is_one(self, g64):
        zero = SpectralField.zero(g64)
        p = build_symbol("p", zero)
        q = build_symbol("q", zero)
        assert np.max(np.abs(p.table - np.abs(g64._k1)[None, :] ** 0.5)) < 1e-14
        assert np.max(np.abs(q.table - 1.0)) == 0.0

    def test_weight_exponent(self, g64):
        # (gamma^(3/2))^(2s/3) with s=2 is |xi|^2 at the rest state
        wp = build_symbol("weight", SpectralField.zero(g64), s=2.0)
        assert np.max(np.abs(wp.table - np.abs(g64._k1)[None, :] ** 2)) < 1e-10

    def test_lambda1_2d_constant_slope(self):
        # grad eta = (1, 0), xi = (0, 1): sqrt((1+1)*1 - 0) = sqrt(2)
        g2 = Grid(16, d=2)
        m = (np.ones(g2.shape), np.zeros(g2.shape))
        G = xfield(g2, 1.0 + m[0] ** 2)
        mdot = xfield(g2, m[0]) * ximesh(g2, 0) + xfield(g2, m[1]) * ximesh(g2, 1)
        xi2 = ximesh(g2, 0) ** 2 + ximesh(g2, 1) ** 2
        tab = np.sqrt(G * xi2 - mdot**2)
        assert abs(tab[0, 0, 0, 1] - np.sqrt(2)) < 1e-14


class TestRealityAndQuantize:
    def test_catalog_reality_structure(self, eta_small):
        for kind in ["lambda", "ell", "q", "p", "gamma", "gamma32", "lambda1", "ell2"]:
            assert build_symbol(kind, eta_small).has_reality_structure(), kind

    def test_quantize_real_to_real(self, g64, eta_small):
        rng = np.random.default_rng(0)
        u = SpectralField(g64, values=rng.standard_normal(64))
        for kind in ["lambda", "gamma", "p"]:
            a = build_symbol(kind, eta_small)
            out = quantize(a, SpectralField(g64, values=u.values + 0j))
            rel = np.max(np.abs(np.imag(out.values))) / max(np.max(np.abs(np.real(out.values))), 1e-300)
            assert rel < 1e-10

    def test_quantize_constant_symbol_is_psi_cutoff(self, g64):
        one = SymbolDescriptor.from_callable(g64, lambda x, k: np.ones_like(x + k),
                                             order=0.0, at_zero=1.0, reality=True)
        u = SpectralField.from_function(g64, lambda x: np.cos(8 * x))
        out = quantize(one, u)
        assert np.allclose(out.values, u.values, atol=1e-13)
        w = SpectralField(g64, values=np.cos(g64.x[0]) + 2.0)
        out2 = quantize(one, w)
        assert np.allclose(out2.values, np.cos(g64.x[0]), atol=1e-13)  # mean removed

    def test_quantize_x_independent_reduces_to_multiplier(self, g64):
        absxi = SymbolDescriptor.from_callable(g64, lambda x, k: np.abs(k) + 0 * x,
                                               order=1.0, at_zero=0.0, reality=True)
        u = SpectralField.from_function(g64, lambda x: np.cos(3 * x))
        out = quantize(absxi, u)
        assert np.allclose(out.values, 3 * np.cos(3 * g64.x[0]), atol=1e-12)

    def test_transport_matches_paraproduct(self, g64):
        from gclab.dyadic import paraproduct
        from gclab.grid import gradient

        V = SpectralField.from_function(g64, lambda x: np.cos(x))
        sym = build_symbol("transport", V, V=(V,))
        u = SpectralField.from_function(g64, lambda x: np.cos(16 * x))
        lhs = quantize(sym, u)
        rhs = paraproduct(V, gradient(u)[0])
        assert (lhs - rhs).linf() <= 1e-8 * rhs.linf()

    def test_quantize_linear_in_u(self, g64, eta_small):
        a = build_symbol("gamma", eta_small)
        rng = np.random.default_rng(2)
        u = SpectralField(g64, values=rng.standard_normal(64))
        v = SpectralField(g64, values=rng.standard_normal(64))
        lhs = quantize(a, SpectralField(g64, values=2.0 * u.values - 3.0 * v.values))
        rhs = 2.0 * quantize(a, u) - 3.0 * quantize(a, v)
        assert (lhs - rhs).linf() <= 1e-12 * max(rhs.linf(), 1.0)

    def test_grid_mismatch_rejected(self, g64, eta_small):
        a = build_symbol("q", eta_small)
        u = SpectralField.zero(Grid(32))
        with pytest.raises(ValueError):
            quantize(a, u)


class TestFactorization:
    def test_algebraic_identities(self, g64):
        # a1 + A1 = -i beta.xi and a1 A1 = -alpha |xi|^2, pointwise on the lattice
        rng = np.random.default_rng(4)
        alpha = 1.0 + 0.3 * np.cos(g64.x[0])
        beta = (0.2 * np.sin(g64.x[0]),)
        a1, A1 = factorization_symbols(g64, alpha, beta)
        bdot = beta[0][:, None] * g64._k1[None, :]
        xi2 = g64._k1[None, :] ** 2
        nyq = np.zeros(64, dtype=bool)
        nyq[32] = True  # reality flag makes the Nyquist column real
        cols = ~nyq
        s = a1.table + A1.table
        prod = a1.table * A1.table
        assert np.max(np.abs(s[:, cols] - (-1j * bdot[:, cols]))) <= 1e-12 * np.max(np.abs(bdot))
        assert np.max(np.abs(prod[:, cols] + alpha[:, None] * xi2[:, cols])) <= 1e-12 * np.max(alpha * xi2)

    def test_discriminant_violation_rejected(self, g64):
        alpha = -np.ones(64)  # negative alpha makes the discriminant negative
        with pytest.raises(ValueError):
            factorization_symbols(g64, alpha, (np.zeros(64),))


class TestSeminorm:
    def test_constant_symbol(self, g64):
        one = SymbolDescriptor.from_callable(g64, lambda x, k: np.ones_like(x + k),
                                             order=0.0, at_zero=1.0)
        assert abs(seminorm(one, 0.0, 0.0).value - 1.0) < 1e-12

    def test_absxi(self, g64):
        absxi = SymbolDescriptor.from_callable(g64, lambda x, k: np.abs(k) + 0 * x,
                                               order=1.0, at_zero=0.0)
        rep = seminorm(absxi, 1.0, 0.0)
        assert np.isfinite(rep.value) and rep.value >= 1.0

    def test_lambda1_at_rest_matches_absxi(self, g64):
        absxi = SymbolDescriptor.from_callable(g64, lambda x, k: np.abs(k) + 0 * x,
                                               order=1.0, at_zero=0.0)
        lam = build_symbol("lambda1", SpectralField.zero(g64))
        r1 = seminorm(absxi, 1.0, 0.0)
        r2 = seminorm(lam, 1.0, 0.0)
        assert abs(r1.value - r2.value) < 1e-12

    def test_monotone_in_rho(self, g64, eta_small):
        lam = build_symbol("lambda1", eta_small)
        v0 = seminorm(lam, 1.0, 0.0).value
        v1 = seminorm(lam, 1.0, 1.0).value
        assert 0 <= v0 <= v1 * (1 + 1e-12)
