"""Symbols a(x, xi) on grid x lattice, the named catalog of the
water-wave reduction, and discrete symbol semi-norms.

A SymbolDescriptor stores a dense table over (x-nodes) x (frequency
lattice); the first d axes are x, the last d axes are xi.  Catalog
symbols carry hand-differentiated xi-derivatives of their principal
parts; generic symbols fall back to centered lattice differences.
"""

from __future__ import annotations

import math

import numpy as np

from .dyadic import dyadic_block, j_max
from .grid import Grid, SpectralField

# ---------------------------------------------------------------------------
# table helpers


def _x_axes(grid: Grid):
    return tuple(range(grid.d))


def _xi_axes(grid: Grid):
    return tuple(range(grid.d, 2 * grid.d))


def xfield(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Broadcast an x-grid array over the xi axes of a table."""
    return np.asarray(values).reshape(grid.shape + (1,) * grid.d)


def ximesh(grid: Grid, axis: int) -> np.ndarray:
    """Frequency mesh of xi-axis `axis`, broadcast over the x axes."""
    return np.asarray(grid.k[axis]).reshape((1,) * grid.d + grid.shape)


def xi_mag(grid: Grid) -> np.ndarray:
    return np.sqrt(sum(ximesh(grid, j) ** 2 for j in range(grid.d)))


def table_dx(grid: Grid, table: np.ndarray, axis: int) -> np.ndarray:
    """Spectral d/dx_axis of a table, for every fixed lattice frequency."""
    k = grid._k1
    ik = 1j * k.copy()
    ik[grid.N // 2] = 0.0
    shape = [1] * (2 * grid.d)
    shape[axis] = grid.N
    ft = np.fft.fft(table, axis=axis)
    return np.fft.ifft(ft * ik.reshape(shape), axis=axis)


def table_dxi_fd(grid: Grid, table: np.ndarray, axis: int) -> np.ndarray:
    """Centered lattice difference in xi (spacing 1) along xi-axis `axis`."""
    ax = grid.d + axis
    t = np.moveaxis(table, ax, -1)
    order = np.argsort(grid._k1)  # natural xi ordering
    ts = t[..., order]
    d = np.gradient(ts, grid._k1[order], axis=-1)
    out = np.empty_like(ts)
    out[..., order] = d
    return np.moveaxis(out, -1, ax)


class SymbolDescriptor:
    """Order-m symbol tabulated on grid nodes x frequency lattice."""

    def __init__(self, grid: Grid, table: np.ndarray, order: float, rho: float = np.inf,
                 reality: bool = False, principal: np.ndarray | None = None,
                 dxi: tuple | None = None, name: str = ""):
        self.grid = grid
        table = np.asarray(table, dtype=complex)
        if table.shape != grid.shape * 2:
            raise ValueError(f"table shape {table.shape}, expected {grid.shape * 2}")
        zero = (0,) * grid.d
        if not np.all(np.isfinite(table[(Ellipsis,) + zero])) or not np.all(np.isfinite(table)):
            raise ValueError("symbol table not finite on the lattice (value at xi=0 "
                             "must be supplied explicitly)")
        if reality:
            # -N/2 and +N/2 share a lattice bin, so a(x, -xi) = conj(a(x, xi))
            # forces the Nyquist columns to be real
            for ax in range(grid.d, 2 * grid.d):
                sl = [slice(None)] * (2 * grid.d)
                sl[ax] = grid.N // 2
                table[tuple(sl)] = np.real(table[tuple(sl)])
        self.table = table
        self.order = float(order)
        self.rho = rho
        self.reality = bool(reality)
        self.principal = None if principal is None else np.asarray(principal, dtype=complex)
        self._dxi = dxi  # tuple of analytic d/dxi_j tables, or None
        self.name = name

    @classmethod
    def from_callable(cls, grid: Grid, fn, order: float, at_zero=0.0, **kw):
        """Build the table from fn(x..., xi...) with broadcast meshes."""
        xs = [np.asarray(x).reshape(grid.shape + (1,) * grid.d) for x in grid.x]
        ks = [ximesh(grid, j) for j in range(grid.d)]
        with np.errstate(all="ignore"):
            table = np.asarray(fn(*xs, *ks), dtype=complex)
        table = np.broadcast_to(table, grid.shape * 2).copy()
        table[(Ellipsis,) + (0,) * grid.d] = at_zero
        return cls(grid, table, order, **kw)

    def dxi(self, axis: int) -> np.ndarray:
        if self._dxi is not None:
            return self._dxi[axis]
        return table_dxi_fd(self.grid, self.table, axis)

    def has_reality_structure(self, tol: float = 1e-10) -> bool:
        """Check a(x, -xi) = conj(a(x, xi)) on the lattice."""
        t = self.table
        for ax in _xi_axes(self.grid):
            t = np.roll(np.flip(t, axis=ax), 1, axis=ax)
        scale = np.max(np.abs(self.table)) + 1e-300
        return bool(np.max(np.abs(t - np.conj(self.table))) <= tol * scale)

    def dump(self, path) -> None:
        """Dense table dump '(x_j, k, re, im)' for offline inspection."""
        g = self.grid
        if g.d != 1:
            raise NotImplementedError("table dump only for d=1")
        with open(path, "w") as fh:
            fh.write(f"# symbol {self.name} order {self.order:.17g}\n")
            for j, xj in enumerate(g.x[0]):
                for i, ki in enumerate(g.k[0]):
                    v = self.table[j, i]
                    fh.write(f"{xj:.17g} {int(ki)} {v.real:.17g} {v.imag:.17g}\n")


# ---------------------------------------------------------------------------
# the named catalog


def _surface_data(eta: SpectralField):
    """Gradient and squared-slope factor of the surface elevation."""
    from .grid import gradient

    grads = gradient(eta)
    g = eta.grid
    m = [np.real(gi.values) for gi in grads]
    G = 1.0 + sum(mi**2 for mi in m)
    return m, G


def lambda1_symbol(eta: SpectralField) -> SymbolDescriptor:
    """Principal Dirichlet-Neumann symbol sqrt((1+|grad eta|^2)|xi|^2 - (grad eta.xi)^2)."""
    g = eta.grid
    m, G = _surface_data(eta)
    Gx = xfield(g, G)
    mdot = sum(xfield(g, m[j]) * ximesh(g, j) for j in range(g.d))
    xi2 = sum(ximesh(g, j) ** 2 for j in range(g.d))
    table = np.sqrt(Gx * xi2 - mdot**2)
    dxi = tuple(
        np.where(table > 0, (Gx * ximesh(g, j) - mdot * xfield(g, m[j])) / np.where(table > 0, table, 1.0), 0.0)
        for j in range(g.d)
    )
    return SymbolDescriptor(g, table, order=1.0, rho=np.inf, reality=True,
                            principal=table, dxi=dxi, name="lambda1")


def lambda0_symbol(eta: SpectralField) -> SymbolDescriptor:
    """Subprincipal Dirichlet-Neumann correction."""
    g = eta.grid
    m, G = _surface_data(eta)
    Gx = xfield(g, G)
    lam1 = lambda1_symbol(eta)
    mdot = sum(xfield(g, m[j]) * ximesh(g, j) for j in range(g.d))
    alpha1 = (lam1.table + 1j * mdot) / Gx
    div_term = sum(table_dx(g, alpha1 * xfield(g, m[j]), j) for j in range(g.d))
    grad_term = sum(lam1.dxi(j) * table_dx(g, alpha1, j) for j in range(g.d))
    lam = np.divide(Gx, 2.0 * lam1.table, out=np.zeros_like(alpha1), where=lam1.table > 0)
    table = lam * (div_term + 1j * grad_term)
    table[(Ellipsis,) + (0,) * g.d] = 0.0
    return SymbolDescriptor(g, table, order=0.0, rho=np.inf, reality=True, name="lambda0")


def lambda_symbol(eta: SpectralField, principal_only: bool = False) -> SymbolDescriptor:
    lam1 = lambda1_symbol(eta)
    if principal_only:
        return lam1
    lam0 = lambda0_symbol(eta)
    return SymbolDescriptor(eta.grid, lam1.table + lam0.table, order=1.0, rho=np.inf,
                            reality=True, principal=lam1.table, dxi=None, name="lambda")


def ell2_symbol(eta: SpectralField) -> SymbolDescriptor:
    """Principal curvature symbol of -div(grad eta / sqrt(1+|grad eta|^2))."""
    g = eta.grid
    m, G = _surface_data(eta)
    Gx = xfield(g, G)
    mdot = sum(xfield(g, m[j]) * ximesh(g, j) for j in range(g.d))
    xi2 = sum(ximesh(g, j) ** 2 for j in range(g.d))
    table = Gx ** (-0.5) * (xi2 - mdot**2 / Gx)
    dxi = tuple(Gx ** (-0.5) * (2.0 * ximesh(g, j) - 2.0 * mdot * xfield(g, m[j]) / Gx)
                for j in range(g.d))
    return SymbolDescriptor(g, table, order=2.0, rho=np.inf, reality=True,
                            principal=table, dxi=dxi, name="ell2")


def ell1_symbol(eta: SpectralField) -> SymbolDescriptor:
    """Subprincipal curvature symbol -(i/2)(d_x . d_xi) ell2."""
    g = eta.grid
    e2 = ell2_symbol(eta)
    acc = sum(table_dx(g, e2.dxi(j), j) for j in range(g.d))
    return SymbolDescriptor(g, -0.5j * acc, order=1.0, rho=np.inf, reality=True, name="ell1")


def ell_symbol(eta: SpectralField, principal_only: bool = False) -> SymbolDescriptor:
    e2 = ell2_symbol(eta)
    if principal_only:
        return e2
    e1 = ell1_symbol(eta)
    return SymbolDescriptor(eta.grid, e2.table + e1.table, order=2.0, rho=np.inf,
                            reality=True, principal=e2.table, name="ell")


def q_symbol(eta: SpectralField) -> SymbolDescriptor:
    g = eta.grid
    _, G = _surface_data(eta)
    table = np.broadcast_to(xfield(g, G ** (-0.5)), g.shape * 2).astype(complex)
    zeros = tuple(np.zeros_like(table) for _ in range(g.d))
    return SymbolDescriptor(g, table, order=0.0, rho=np.inf, reality=True,
                            principal=table, dxi=zeros, name="q")


def _p_half(eta: SpectralField):
    g = eta.grid
    _, G = _surface_data(eta)
    Gx = xfield(g, G)
    lam1 = lambda1_symbol(eta)
    sq = np.sqrt(lam1.table)
    table = Gx ** (-1.25) * sq
    dxi = tuple(
        np.where(sq > 0, Gx ** (-1.25) * lam1.dxi(j) / np.where(sq > 0, 2.0 * sq, 1.0), 0.0)
        for j in range(g.d)
    )
    return table, dxi, lam1


def _gamma_parts(eta: SpectralField):
    g = eta.grid
    lam1 = lambda1_symbol(eta)
    e2 = ell2_symbol(eta)
    g32 = np.sqrt(e2.table * lam1.table)
    dxi32 = tuple(
        np.where(g32 > 0,
                 (e2.dxi(j) * lam1.table + e2.table * lam1.dxi(j)) / np.where(g32 > 0, 2.0 * g32, 1.0),
                 0.0)
        for j in range(g.d)
    )
    lam0 = lambda0_symbol(eta)
    ratio = np.divide(e2.table, lam1.table, out=np.zeros_like(g32), where=lam1.table > 0)
    g12 = np.sqrt(ratio) * np.real(lam0.table) / 2.0
    sub = -0.5j * sum(table_dx(g, dxi32[j], j) for j in range(g.d))
    return g32, dxi32, g12, sub


def gamma32_symbol(eta: SpectralField) -> SymbolDescriptor:
    g32, dxi32, _, _ = _gamma_parts(eta)
    return SymbolDescriptor(eta.grid, g32, order=1.5, rho=np.inf, reality=True,
                            principal=g32, dxi=dxi32, name="gamma32")


def gamma_symbol(eta: SpectralField, principal_only: bool = False) -> SymbolDescriptor:
    """Dispersive symbol of order 3/2 driving the symmetrized equation."""
    g32, dxi32, g12, sub = _gamma_parts(eta)
    table = g32 if principal_only else g32 + g12 + sub
    return SymbolDescriptor(eta.grid, table, order=1.5, rho=np.inf, reality=True,
                            principal=g32, dxi=dxi32 if principal_only else None, name="gamma")


def p_symbol(eta: SpectralField, principal_only: bool = False) -> SymbolDescriptor:
    """Symmetrizer symbol of order 1/2 (with its order -1/2 correction)."""
    g = eta.grid
    p12, dxi12, _ = _p_half(eta)
    if principal_only:
        return SymbolDescriptor(g, p12, order=0.5, rho=np.inf, reality=True,
                                principal=p12, dxi=dxi12, name="p")
    g32, dxi32, g12, sub = _gamma_parts(eta)
    e1 = ell1_symbol(eta)
    q0 = q_symbol(eta)
    dxp = [table_dx(g, p12, j) for j in range(g.d)]
    # gamma^(1/2) here is the full order-1/2 part of gamma (the Re lambda0
    # piece plus the Weyl correction); only then does T_q T_ell - T_gamma T_p
    # drop to order 1/2
    g_half = g12 + sub
    corr = q0.table * e1.table - g_half * p12 + 1j * sum(dxi32[j] * dxp[j] for j in range(g.d))
    psub = np.divide(corr, g32, out=np.zeros_like(corr), where=np.abs(g32) > 0)
    return SymbolDescriptor(g, p12 + psub, order=0.5, rho=np.inf, reality=True,
                            principal=p12, name="p")


def p_sub_symbol(eta: SpectralField) -> SymbolDescriptor:
    full = p_symbol(eta)
    sub = full.table - full.principal
    return SymbolDescriptor(eta.grid, sub, order=-0.5, rho=np.inf, reality=True, name="p_sub")


def weight_symbol(eta: SpectralField, s: float) -> SymbolDescriptor:
    """Energy weight (gamma^(3/2))^(2s/3); order s, reduces to |xi|^s at rest."""
    g = eta.grid
    g32, dxi32, _, _ = _gamma_parts(eta)
    expo = 2.0 * s / 3.0
    table = np.where(g32 > 0, g32, 0.0) ** expo
    dxi = tuple(
        np.where(g32 > 0, expo * np.where(g32 > 0, g32, 1.0) ** (expo - 1.0) * dxi32[j], 0.0)
        for j in range(g.d)
    )
    return SymbolDescriptor(g, table, order=s, rho=np.inf, reality=True,
                            principal=table, dxi=dxi, name="weight")


def transport_symbol(V: tuple[SpectralField, ...]) -> SymbolDescriptor:
    """Convection symbol V(x) . (i xi)."""
    g = V[0].grid
    table = sum(xfield(g, np.real(V[j].values)) * (1j * ximesh(g, j)) for j in range(g.d))
    dxi = tuple(np.broadcast_to(1j * xfield(g, np.real(V[j].values)), g.shape * 2).astype(complex)
                for j in range(g.d))
    return SymbolDescriptor(g, table, order=1.0, rho=np.inf, reality=True,
                            principal=table, dxi=dxi, name="transport")


def factorization_symbols(grid: Grid, alpha: np.ndarray, beta: tuple[np.ndarray, ...]):
    """Parabolic factorization roots a(1), A(1) built from strip coefficients
    at one z level; they satisfy a+A = -i beta.xi and aA = -alpha |xi|^2.
    """
    a_x = xfield(grid, alpha)
    bdot = sum(xfield(grid, beta[j]) * ximesh(grid, j) for j in range(grid.d))
    xi2 = sum(ximesh(grid, j) ** 2 for j in range(grid.d))
    disc = 4.0 * a_x * xi2 - bdot**2
    if np.min(disc) < -1e-12 * np.max(np.abs(disc) + 1.0):
        raise ValueError("factorization discriminant 4 alpha |xi|^2 - (beta.xi)^2 "
                         "is negative on the lattice")
    root = np.sqrt(np.maximum(disc, 0.0))
    a1 = 0.5 * (-1j * bdot - root)
    A1 = 0.5 * (-1j * bdot + root)
    mk = dict(order=1.0, rho=np.inf, reality=True)
    return (SymbolDescriptor(grid, a1, principal=a1, name="a1", **mk),
            SymbolDescriptor(grid, A1, principal=A1, name="A1", **mk))


_CATALOG = {
    "lambda1": lambda eta, **kw: lambda1_symbol(eta),
    "lambda0": lambda eta, **kw: lambda0_symbol(eta),
    "lambda": lambda eta, **kw: lambda_symbol(eta, **kw),
    "ell2": lambda eta, **kw: ell2_symbol(eta),
    "ell1": lambda eta, **kw: ell1_symbol(eta),
    "ell": lambda eta, **kw: ell_symbol(eta, **kw),
    "q": lambda eta, **kw: q_symbol(eta),
    "p": lambda eta, **kw: p_symbol(eta, **kw),
    "p_sub": lambda eta, **kw: p_sub_symbol(eta),
    "gamma": lambda eta, **kw: gamma_symbol(eta, **kw),
    "gamma32": lambda eta, **kw: gamma32_symbol(eta),
}


def build_symbol(kind: str, eta: SpectralField, **params) -> SymbolDescriptor:
    """Named symbol of the reduction, evaluated from the surface elevation.

    kinds: lambda1, lambda0, lambda, ell2, ell1, ell, q, p, p_sub, gamma,
    gamma32, weight (needs s), transport (needs V), a1/A1 (need alpha, beta).
    """
    if kind == "weight":
        return weight_symbol(eta, params["s"])
    if kind == "transport":
        return transport_symbol(params["V"])
    if kind in ("a1", "A1"):
        pair = factorization_symbols(eta.grid, params["alpha"], params["beta"])
        return pair[0] if kind == "a1" else pair[1]
    if kind not in _CATALOG:
        raise ValueError(f"unknown symbol kind {kind!r}")
    return _CATALOG[kind](eta, **params)


# ---------------------------------------------------------------------------
# semi-norms


class SeminormReport:
    def __init__(self, m: float, rho: float, value: float, per_alpha: dict):
        self.m = m
        self.rho = rho
        self.value = value
        self.per_alpha = per_alpha

    def __repr__(self):
        return f"SeminormReport(m={self.m}, rho={self.rho}, value={self.value:.6g})"


def _zygmund_norm_columns(grid: Grid, table: np.ndarray, s: float) -> np.ndarray:
    """C^s_* norm in x of every xi-column of a table, vectorized over xi."""
    from .dyadic import _DEFAULT_CUTOFF

    xaxes = _x_axes(grid)
    ft = np.fft.fftn(table, axes=xaxes) / grid.size
    kmag = grid.kmag.reshape(grid.shape + (1,) * grid.d)
    best = np.zeros(grid.shape)  # per-xi running max over blocks
    for j in range(j_max(grid) + 1):
        band = _DEFAULT_CUTOFF.phi(j, kmag)
        block = np.fft.ifftn(ft * band * grid.size, axes=xaxes)
        sup = np.max(np.abs(block), axis=xaxes)
        best = np.maximum(best, 2.0 ** (j * s) * sup)
    return best


def seminorm(a: SymbolDescriptor, m: float, rho: float) -> SeminormReport:
    """Discrete M^m_rho(a): maximize (1+|xi|)^(|alpha|-m) times the C^rho_*
    x-norm of d_xi^alpha a over the lattice and |alpha| <= ceil(d/2+1+rho).
    """
    g = a.grid
    amax = math.ceil(g.d / 2 + 1 + max(rho, 0.0))
    xi_abs = xi_mag(g)[(0,) * g.d]  # lattice |xi| without x axes
    mask = xi_abs >= 0.5
    per_alpha = {}
    worst = 0.0

    def multi_indices(total_max, d):
        if d == 1:
            return [(i,) for i in range(total_max + 1)]
        out = []
        for i in range(total_max + 1):
            for jj in range(total_max + 1 - i):
                out.append((i, jj))
        return out

    for alpha in multi_indices(amax, g.d):
        tbl = a.table
        for ax, reps in enumerate(alpha):
            for _ in range(reps):
                tbl = table_dxi_fd(g, tbl, ax)
        norms = _zygmund_norm_columns(g, tbl, rho) if rho > 0 else np.max(np.abs(tbl), axis=_x_axes(g))
        weight = (1.0 + xi_abs) ** (sum(alpha) - m)
        val = float(np.max(np.where(mask, weight * norms, 0.0)))
        per_alpha[alpha] = val
        worst = max(worst, val)
    return SeminormReport(m, rho, worst, per_alpha)
