"""Straightened fluid strip: coordinate map, elliptic coefficients, and the
variational solve of the transformed Laplace problem.

The strip S = torus x (-1, 0) carries the image v(x, z) = phi(x, rho(x, z))
of the harmonic potential.  The solve minimizes the transformed Dirichlet
energy

    E(v) = integral of  dz_rho |grad_x v|^2 - 2 (grad_x rho . grad_x v) dz_v
           + (1 + |grad_x rho|^2)/dz_rho (dz_v)^2

(trapezoid in z, spectral collocation in x, piecewise-linear dz_v), which is
a positive sum of squares whenever dz_rho > 0.  Stationarity reproduces the
second-order centered scheme for the non-divergence equation
(dz^2 + alpha Lap + beta.grad dz - gamma dz) v = 0 with a natural (Neumann)
bottom row, and it makes the discrete Green identity
integral(f G(eta) f) = E(v)^2 exact, which the flux tests rely on.
"""

from __future__ import annotations

import numpy as np

from .grid import Grid, SpectralField

BRACKET = "bracket"  # <D> = (1 + |D|^2)^(1/2)


class StripGrid:
    """x Grid plus M uniform z intervals on [-1, 0]."""

    def __init__(self, grid: Grid, M: int):
        if M < 8:
            raise ValueError(f"need M >= 8 z intervals, got {M}")
        self.grid = grid
        self.M = int(M)
        self.dz = 1.0 / M
        self.z = -1.0 + np.arange(M + 1) * self.dz  # z_0 = -1 ... z_M = 0


class StraighteningMap:
    """rho(x, z) with its derivatives and the induced elliptic coefficients."""

    def __init__(self, strip: StripGrid, rho, dz_rho, d2z_rho, grad_rho, grad_dz_rho,
                 lap_rho, h: float, mode: str, delta: float | None):
        self.strip = strip
        self.rho = rho                  # (M+1,) + xshape
        self.dz_rho = dz_rho
        self.d2z_rho = d2z_rho
        self.grad_rho = grad_rho        # tuple of d arrays
        self.grad_dz_rho = grad_dz_rho
        self.lap_rho = lap_rho
        self.h = float(h)
        self.mode = mode
        self.delta = delta

        low = float(np.min(dz_rho))
        if low < h / 2.0 - 1e-12:
            idx = np.unravel_index(int(np.argmin(dz_rho)), dz_rho.shape)
            raise ValueError(
                f"straightening fails: dz_rho = {low:.6g} < h/2 = {h / 2:.6g} "
                f"at node (z_index, x_index) = {idx}")

    def elliptic_coefficients(self):
        """alpha, beta (vector), gamma of the transformed Laplacian."""
        P = self.dz_rho
        Z2 = sum(Zc**2 for Zc in self.grad_rho)
        denom = 1.0 + Z2
        alpha = P**2 / denom
        beta = tuple(-2.0 * P * Zc / denom for Zc in self.grad_rho)
        gamma = (self.d2z_rho + alpha * self.lap_rho
                 + sum(bc * gc for bc, gc in zip(beta, self.grad_dz_rho))) / P
        return alpha, beta, gamma


def _z_multiplier_stack(grid: Grid, eta: SpectralField, factors) -> np.ndarray:
    """Evaluate a z-dependent Fourier multiplier family on eta: one row per z."""
    coeffs = eta.coeffs
    rows = [np.real(grid.ifft(fac * coeffs)) for fac in factors]
    return np.stack(rows, axis=0)


def build_straightening(eta: SpectralField, h: float, strip: StripGrid,
                        mode: str = "linear", delta: float | None = None) -> StraighteningMap:
    """Coordinate straightening of the fluid layer below the surface.

    linear mode: rho = eta + z (eta + h); exact flat bottom rho(x,-1) = -h.
    paper mode:  rho = (1+z) e^(delta z <D>) eta - z [e^(-(1+z) delta <D>) eta - h],
    which maps z = -1 to the curved line eta - h.
    """
    g = eta.grid
    if h <= 0:
        raise ValueError("depth h must be positive")
    if not eta.is_real:
        raise ValueError("eta must be real")
    z = strip.z
    ik = [1j * k * (np.abs(k) != g.N // 2) for k in g.k]
    k2 = g.kmag**2

    if mode == "linear":
        if float(np.min(eta.values)) + h <= 0:
            raise ValueError("linear straightening needs min(eta) + h > 0")
        ev = np.real(eta.values)
        rho = ev[None] + z.reshape((-1,) + (1,) * g.d) * (ev + h)[None]
        dz_rho = np.broadcast_to((ev + h)[None], rho.shape).copy()
        d2z_rho = np.zeros_like(rho)
        grads = [np.real(g.ifft(iki * eta.coeffs)) for iki in ik]
        zz = (1.0 + z).reshape((-1,) + (1,) * g.d)
        grad_rho = tuple(zz * gc[None] for gc in grads)
        grad_dz_rho = tuple(np.broadcast_to(gc[None], rho.shape).copy() for gc in grads)
        lap = np.real(g.ifft(-k2 * eta.coeffs))
        lap_rho = zz * lap[None]
        return StraighteningMap(strip, rho, dz_rho, d2z_rho, grad_rho, grad_dz_rho,
                                lap_rho, h, mode, None)

    if mode != "paper":
        raise ValueError(f"unknown straightening mode {mode!r}")

    wnorm = eta.linf() + max(np.max(np.abs(np.real(g.ifft(iki * eta.coeffs)))) for iki in ik)
    if delta is None:
        delta = 1.0 if wnorm == 0 else min(0.1 / wnorm, 1.0)
    br = np.sqrt(1.0 + k2)
    A = _z_multiplier_stack(g, eta, [np.exp(delta * zi * br) for zi in z])
    B = _z_multiplier_stack(g, eta, [np.exp(-(1.0 + zi) * delta * br) for zi in z])
    dA = _z_multiplier_stack(g, eta, [delta * br * np.exp(delta * zi * br) for zi in z])
    dB = _z_multiplier_stack(g, eta, [delta * br * np.exp(-(1.0 + zi) * delta * br) for zi in z])
    d2A = _z_multiplier_stack(g, eta, [(delta * br) ** 2 * np.exp(delta * zi * br) for zi in z])
    d2B = _z_multiplier_stack(g, eta, [(delta * br) ** 2 * np.exp(-(1.0 + zi) * delta * br) for zi in z])

    zz = z.reshape((-1,) + (1,) * g.d)
    rho = (1.0 + zz) * A - zz * (B - h)
    dz_rho = A + (1.0 + zz) * dA - B + zz * dB + h
    d2z_rho = 2.0 * dA + (1.0 + zz) * d2A + 2.0 * dB - zz * d2B

    def xgrad(stack):
        out = []
        for iki in ik:
            ft = np.fft.fftn(stack, axes=tuple(range(1, 1 + g.d))) / g.size
            out.append(np.real(np.fft.ifftn(ft * iki[None] * g.size,
                                            axes=tuple(range(1, 1 + g.d)))))
        return tuple(out)

    def xlap(stack):
        ft = np.fft.fftn(stack, axes=tuple(range(1, 1 + g.d))) / g.size
        return np.real(np.fft.ifftn(-ft * k2[None] * g.size, axes=tuple(range(1, 1 + g.d))))

    grad_rho = xgrad(rho)
    grad_dz_rho = xgrad(dz_rho)
    lap_rho = xlap(rho)
    return StraighteningMap(strip, rho, dz_rho, d2z_rho, grad_rho, grad_dz_rho,
                            lap_rho, h, mode, delta)


class HarmonicLift:
    """Discrete solution v with boundary traces and flux data."""

    def __init__(self, strip: StripGrid, smap: StraighteningMap, v: np.ndarray,
                 f: SpectralField, flux_density: np.ndarray, energy_sq: float,
                 pcg_iters: int, pcg_residual: float):
        self.strip = strip
        self.map = smap
        self.v = v
        self.f = f
        self.flux_density = flux_density    # (A v)_top / x-weight
        self.energy_sq = energy_sq          # E(eta, f)^2, same quadratic form
        self.pcg_iters = pcg_iters
        self.pcg_residual = pcg_residual

    def dz_trace(self) -> np.ndarray:
        """One-sided second-order dz_v at z = 0."""
        dz = self.strip.dz
        return (3.0 * self.v[-1] - 4.0 * self.v[-2] + self.v[-3]) / (2.0 * dz)

    def grad_trace(self):
        g = self.strip.grid
        ik = [1j * k * (np.abs(k) != g.N // 2) for k in g.k]
        c = g.fft(self.v[-1])
        return tuple(np.real(g.ifft(iki * c)) for iki in ik)

    def stencil_traces(self):
        """The two algebraic forms of the trace built from the one-sided dz_v:
        zeta_1 dz_v - zeta_2.grad_v  and  Lambda_1 v - grad_rho . Lambda_2 v.
        """
        P = self.map.dz_rho[-1]
        Z = tuple(Zc[-1] for Zc in self.map.grad_rho)
        dzv = self.dz_trace()
        gv = self.grad_trace()
        z2 = sum(Zc**2 for Zc in Z)
        form1 = (1.0 + z2) / P * dzv - sum(Zc * gc for Zc, gc in zip(Z, gv))
        lam1 = dzv / P
        lam2 = tuple(gc - Zc / P * dzv for gc, Zc in zip(gv, Z))
        form2 = lam1 - sum(Zc * l2c for Zc, l2c in zip(Z, lam2)) + z2 / P * dzv
        # form2 written out: dzv/P - Z.(grad v - (Z/P) dzv) = (1+|Z|^2)/P dzv - Z.grad v
        return form1, form2


class StripSolver:
    """Energy-form assembly and preconditioned CG for one straightening map."""

    def __init__(self, smap: StraighteningMap):
        self.map = smap
        self.strip = smap.strip
        g = self.strip.grid
        self.wx = g.quad_weight()
        P = smap.dz_rho
        Z = smap.grad_rho
        self.P = P
        self.Z = Z
        self.Q = (1.0 + sum(Zc**2 for Zc in Z)) / P
        M = self.strip.M
        dz = self.strip.dz
        self.node_w = np.full(M + 1, dz)
        self.node_w[0] = self.node_w[-1] = dz / 2.0
        # per-element averages of Q for the (dz_v)^2 term
        self.Qe = 0.5 * (self.Q[:-1] + self.Q[1:])
        self._ik = [1j * k * (np.abs(k) != g.N // 2) for k in g.k]
        self._xaxes = tuple(range(1, 1 + g.d))
        self._precond_data = self._build_precond()

    # -- spectral x-derivatives on (M+1,)+xshape stacks
    def _dx(self, stack, c):
        g = self.strip.grid
        ft = np.fft.fftn(stack, axes=self._xaxes)
        return np.real(np.fft.ifftn(ft * self._ik[c][None], axes=self._xaxes))

    def energy(self, v: np.ndarray) -> float:
        """The transformed Dirichlet integral of v (exactly v.A v)."""
        g = self.strip.grid
        dz = self.strip.dz
        u = (v[1:] - v[:-1]) / dz
        total = 0.0
        zg = sum(self.Z[c] * self._dx(v, c) for c in range(g.d)) if g.d else 0.0
        for c in range(g.d):
            gc = self._dx(v, c)
            total += np.sum(self.node_w[:, None].reshape((-1,) + (1,) * g.d) * self.P * gc**2)
        total -= dz * np.sum((zg[:-1] + zg[1:]) * u)
        total += dz * np.sum(self.Qe * u**2)
        return float(total * self.wx)

    def apply_A(self, v: np.ndarray) -> np.ndarray:
        """A v with E(v) = v.(A v); A is symmetric positive semidefinite."""
        g = self.strip.grid
        dz = self.strip.dz
        d = g.d
        nw = self.node_w.reshape((-1,) + (1,) * d)
        u = (v[1:] - v[:-1]) / dz
        r = np.zeros_like(v)

        # channel via grad_x v
        zg_weight = np.zeros_like(v)   # sum of adjacent element slopes
        zg_weight[:-1] += u
        zg_weight[1:] += u
        for c in range(d):
            gc = self._dx(v, c)
            S = 2.0 * nw * self.P * gc - dz * self.Z[c] * zg_weight
            r -= self._dx(S, c)   # DX^T = -DX

        # channel via the element slopes
        zg = sum(self.Z[c] * self._dx(v, c) for c in range(d))
        dEdu = -dz * (zg[:-1] + zg[1:]) + 2.0 * dz * self.Qe * u
        r[1:] += dEdu / dz
        r[:-1] -= dEdu / dz
        return 0.5 * self.wx * r

    # -- preconditioner: x-averaged coefficients, cross term dropped
    def _build_precond(self):
        g = self.strip.grid
        M = self.strip.M
        dz = self.strip.dz
        xax = tuple(range(1, 1 + g.d))
        Pbar = np.mean(self.P, axis=xax)
        Qbar = np.mean(self.Q, axis=xax)
        Qe = 0.5 * (Qbar[:-1] + Qbar[1:])
        k2 = (g.kmag**2).ravel()
        # free dofs are levels 0..M-1; assemble tridiagonal per mode
        diag = np.empty((M, k2.size))
        off = np.empty((M - 1, k2.size))
        for i in range(M):
            d_val = self.node_w[i] * Pbar[i] * k2 + Qe[i] / dz * (1.0 if i < M else 0.0)
            if i > 0:
                d_val = d_val + Qe[i - 1] / dz
            diag[i] = d_val
        for i in range(M - 1):
            off[i] = -Qe[i] / dz * np.ones_like(k2)
        diag *= self.wx
        off *= self.wx
        # guard the k = 0 column (pure Neumann mode): pin a tiny positive shift
        diag[:, k2 == 0] += self.wx * 1e-30
        return diag, off

    def _precond_solve(self, r: np.ndarray) -> np.ndarray:
        """Solve the per-mode tridiagonal systems (Thomas, vectorized over modes)."""
        g = self.strip.grid
        M = self.strip.M
        diag, off = self._precond_data
        rf = np.fft.fftn(r, axes=self._xaxes).reshape(M, -1)
        c = np.empty_like(off, dtype=complex)
        dvec = np.empty_like(rf)
        cp = np.empty((M, rf.shape[1]), dtype=complex)
        cp[0] = diag[0]
        dvec[0] = rf[0]
        for i in range(1, M):
            m = off[i - 1] / cp[i - 1]
            cp[i] = diag[i] - m * off[i - 1]
            dvec[i] = rf[i] - m * dvec[i - 1]
        out = np.empty_like(rf)
        out[-1] = dvec[-1] / cp[-1]
        for i in range(M - 2, -1, -1):
            out[i] = (dvec[i] - off[i] * out[i + 1]) / cp[i]
        sol = np.fft.ifftn(out.reshape((M,) + g.shape), axes=self._xaxes)
        return np.real(sol)

    def solve(self, f: SpectralField, rtol: float = 1e-12, maxiter: int = 1200,
              x0: np.ndarray | None = None) -> HarmonicLift:
        """Dirichlet data f at z = 0, natural Neumann bottom; PCG iteration."""
        g = self.strip.grid
        M = self.strip.M
        fv = np.real(f.values)
        vfull = np.zeros((M + 1,) + g.shape)
        vfull[-1] = fv
        b = -self.apply_A(vfull)[:M]

        x = np.zeros((M,) + g.shape) if x0 is None else x0.copy()

        def amul(w):
            vv = np.concatenate([w, np.zeros((1,) + g.shape)], axis=0)
            return self.apply_A(vv)[:M]

        r = b - amul(x)
        bnorm = float(np.sqrt(np.sum(b * b))) or 1.0
        z = self._precond_solve(r)
        p = z.copy()
        rz = float(np.sum(r * z))
        iters = 0
        res = float(np.sqrt(np.sum(r * r)))
        while res > rtol * bnorm and iters < maxiter:
            Ap = amul(p)
            alpha = rz / float(np.sum(p * Ap))
            x += alpha * p
            r -= alpha * Ap
            res = float(np.sqrt(np.sum(r * r)))
            if res <= rtol * bnorm:
                iters += 1
                break
            z = self._precond_solve(r)
            rz_new = float(np.sum(r * z))
            p = z + (rz_new / rz) * p
            rz = rz_new
            iters += 1
        if res > max(rtol * bnorm * 50.0, 1e-300) and iters >= maxiter:
            low = float(np.min(self.map.dz_rho))
            raise RuntimeError(
                f"strip solve failed: PCG residual {res:.3g} after {iters} iterations "
                f"(|b| = {bnorm:.3g}, min dz_rho = {low:.3g}; conditioning estimate "
                f"{float(np.max(self.Q) / max(np.min(self.P), 1e-300)):.3g})")

        v = np.concatenate([x, fv[None]], axis=0)
        resid_top = self.apply_A(v)[-1]
        flux_density = resid_top / self.wx
        return HarmonicLift(self.strip, self.map, v, f, flux_density, self.energy(v),
                            iters, res / bnorm)
