"""Nonlinear gravity-capillary evolution in the Zakharov/Craig-Sulem
variables: velocity traces, curvature, right-hand sides, Hamiltonian,
RK4 stepping, and the per-mode linear reference."""

from __future__ import annotations

import numpy as np

from .dn import DirichletNeumann, dn_flat_exact
from .grid import Grid, SpectralField, dealias, divergence, gradient, sobolev_norm


class PhysicalParams:
    """Gravity g >= 0, depth h > 0; the surface tension coefficient is 1."""

    def __init__(self, g: float = 1.0, h: float = 1.0):
        if h <= 0:
            raise ValueError("depth h must be positive")
        if g < 0:
            raise ValueError("gravity must be nonnegative")
        self.g = float(g)
        self.h = float(h)
        self.surface_tension = 1.0

    def __repr__(self):
        return f"PhysicalParams(g={self.g}, h={self.h})"


class SurfaceState:
    """(eta, psi) at time t; eta must stay separated from the bottom."""

    def __init__(self, t: float, eta: SpectralField, psi: SpectralField,
                 params: PhysicalParams):
        if eta.grid != psi.grid:
            raise ValueError("eta and psi on different grids")
        if not (eta.is_real and psi.is_real):
            raise ValueError("eta and psi must be real")
        sep = float(np.min(np.real(eta.values))) + params.h
        if sep <= 0:
            raise ValueError(f"surface touches the bottom: min(eta) + h = {sep:.3g}")
        self.t = float(t)
        self.eta = eta
        self.psi = psi
        self.params = params

    @property
    def grid(self) -> Grid:
        return self.eta.grid

    def separation(self) -> float:
        return float(np.min(np.real(self.eta.values))) + self.params.h


class TrajectoryRecord:
    """Sampled times, states, and per-sample diagnostics hooks."""

    def __init__(self):
        self.times: list[float] = []
        self.states: list[SurfaceState] = []
        self.extras: dict = {}
        self.aborted = False
        self.abort_reason = ""
        self.abort_time = None

    def append(self, state: SurfaceState):
        if self.times and state.t <= self.times[-1]:
            raise ValueError("sample times must be strictly increasing")
        self.times.append(state.t)
        self.states.append(state)


def compute_BV(state: SurfaceState, dn: DirichletNeumann):
    """Vertical and horizontal velocity traces B and V on the surface."""
    eta, psi = state.eta, state.psi
    geta = gradient(eta)
    gpsi = gradient(psi)
    Gpsi = dn.apply(eta, psi)
    slope2 = sum(np.real(gc.values) ** 2 for gc in geta)
    num = sum(np.real(a.values) * np.real(b.values) for a, b in zip(geta, gpsi))
    B = SpectralField(state.grid, values=(num + np.real(Gpsi.values)) / (1.0 + slope2))
    V = tuple(SpectralField(state.grid, values=np.real(gp.values) - B.values * np.real(ge.values))
              for gp, ge in zip(gpsi, geta))
    return B, V


def mean_curvature(eta: SpectralField) -> SpectralField:
    """H(eta) = -div(grad eta / sqrt(1 + |grad eta|^2)), products dealiased."""
    geta = gradient(eta)
    slope2 = sum(np.real(gc.values) ** 2 for gc in geta)
    root = np.sqrt(1.0 + slope2)
    comps = tuple(dealias(SpectralField(eta.grid, values=np.real(gc.values) / root))
                  for gc in geta)
    return SpectralField(eta.grid, values=-np.real(divergence(comps).values))


def rhs(state: SurfaceState, dn: DirichletNeumann, check_alt: bool = True):
    """(eta_t, psi_t) of the Zakharov/Craig-Sulem system.

    eta_t = G(eta) psi
    psi_t = -g eta - H(eta) - |grad psi|^2/2
            + (grad eta.grad psi + G(eta) psi)^2 / (2 (1 + |grad eta|^2))

    The same pointwise fields also evaluate the equivalent form
    eta_t = B - V.grad eta, psi_t = -V.grad psi - g eta + (V^2+B^2)/2 - H(eta);
    the two routes must agree to 1e-9 relative (regression guard).
    """
    g = state.grid
    params = state.params
    eta, psi = state.eta, state.psi
    geta = [np.real(c.values) for c in gradient(eta)]
    gpsi = [np.real(c.values) for c in gradient(psi)]
    Gpsi = np.real(dn.apply(eta, psi).values)
    slope2 = sum(c**2 for c in geta)
    H = np.real(mean_curvature(eta).values)

    num = sum(a * b for a, b in zip(geta, gpsi)) + Gpsi
    B = num / (1.0 + slope2)
    V = [gp - B * ge for gp, ge in zip(gpsi, geta)]

    eta_t = Gpsi
    psi_t = (-params.g * np.real(eta.values) - H
             - 0.5 * sum(c**2 for c in gpsi) + 0.5 * num**2 / (1.0 + slope2))

    if check_alt:
        eta_t_alt = B - sum(v * ge for v, ge in zip(V, geta))
        psi_t_alt = (-sum(v * gp for v, gp in zip(V, gpsi)) - params.g * np.real(eta.values)
                     + 0.5 * sum(v**2 for v in V) + 0.5 * B**2 - H)
        scale = max(np.max(np.abs(psi_t)), np.max(np.abs(eta_t)), 1e-300)
        dev = max(np.max(np.abs(eta_t - eta_t_alt)), np.max(np.abs(psi_t - psi_t_alt)))
        if dev > 1e-9 * scale:
            raise RuntimeError(f"rhs consistency guard tripped: deviation {dev:.3g} "
                               f"against scale {scale:.3g}")

    de = dealias(SpectralField(g, values=eta_t))
    dp = dealias(SpectralField(g, values=psi_t))
    return de, dp


def hamiltonian(state: SurfaceState, dn: DirichletNeumann) -> float:
    """Total energy: kinetic + gravitational + capillary surface excess."""
    g = state.grid
    eta, psi = state.eta, state.psi
    Gpsi = dn.apply(eta, psi)
    kinetic = 0.5 * g.integrate(np.real(psi.values) * np.real(Gpsi.values))
    grav = 0.5 * state.params.g * g.integrate(np.real(eta.values) ** 2)
    slope2 = sum(np.real(c.values) ** 2 for c in gradient(eta))
    surf = g.integrate(np.sqrt(1.0 + slope2) - 1.0)
    return kinetic + grav + surf


def angular_frequency(k: float, params: PhysicalParams) -> float:
    """Dispersion relation omega(k) = sqrt((g + k^2) k tanh(h k))."""
    kk = abs(float(k))
    return float(np.sqrt((params.g + kk**2) * kk * np.tanh(params.h * kk)))


def linear_reference(k: int, params: PhysicalParams, t: float,
                     eta0_hat: complex, psi0_hat: complex):
    """Exact per-mode solution of the linearized system
    d/dt eta_hat = k tanh(h k) psi_hat,  d/dt psi_hat = -(g + k^2) eta_hat."""
    if k == 0:
        raise ValueError("mode k must be nonzero")
    kk = abs(float(k))
    a = kk * np.tanh(params.h * kk)
    b = params.g + kk**2
    w = np.sqrt(a * b)
    c, s = np.cos(w * t), np.sin(w * t)
    eta_hat = eta0_hat * c + (a / w) * psi0_hat * s
    psi_hat = psi0_hat * c - (b / w) * eta0_hat * s
    return eta_hat, psi_hat


def cfl_limit(grid: Grid, c: float = 1.0) -> float:
    """Guard for the order-3/2 dispersion: dt <= c (dx)^(3/2)."""
    return c * grid.dx**1.5


def step_rk4(state: SurfaceState, dt: float, dn: DirichletNeumann) -> SurfaceState:
    """Classical RK4 step with dealiased stage velocities."""
    g = state.grid
    p = state.params

    def f(s):
        return rhs(s, dn)

    def advance(s, de, dp, factor):
        return SurfaceState(s.t + factor,
                            SpectralField(g, values=np.real(state.eta.values) + factor * np.real(de.values)),
                            SpectralField(g, values=np.real(state.psi.values) + factor * np.real(dp.values)),
                            p)

    k1e, k1p = f(state)
    s2 = advance(state, k1e, k1p, dt / 2.0)
    k2e, k2p = f(s2)
    s3 = advance(state, k2e, k2p, dt / 2.0)
    k3e, k3p = f(s3)
    s4 = advance(state, k3e, k3p, dt)
    k4e, k4p = f(s4)

    eta_new = np.real(state.eta.values) + dt / 6.0 * (
        np.real(k1e.values) + 2 * np.real(k2e.values) + 2 * np.real(k3e.values) + np.real(k4e.values))
    psi_new = np.real(state.psi.values) + dt / 6.0 * (
        np.real(k1p.values) + 2 * np.real(k2p.values) + 2 * np.real(k3p.values) + np.real(k4p.values))
    new = SurfaceState(state.t + dt, SpectralField(g, values=eta_new),
                       SpectralField(g, values=psi_new), p)
    if not (np.all(np.isfinite(eta_new)) and np.all(np.isfinite(psi_new))):
        raise RuntimeError(f"non-finite field at t = {new.t:.6g}")
    return new


def evolve(state: SurfaceState, T: float, dt: float, dn: DirichletNeumann | None = None,
           observers=(), sample_every: int = 1, cfl_c: float = 1.0) -> TrajectoryRecord:
    """March to time T; abort (with partial record) on separation loss or
    non-finite fields.  Observers are called on each sampled state."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    limit = cfl_limit(state.grid, cfl_c)
    if dt > limit * (1 + 1e-12):
        raise ValueError(f"dt = {dt:.4g} exceeds the CFL-style guard {limit:.4g}")
    if dn is None:
        dn = DirichletNeumann(state.grid, state.params.h, warm_start=True)

    record = TrajectoryRecord()
    record.append(state)
    for obs in observers:
        obs(state)
    nsteps = int(round(T / dt))
    s = state
    for n in range(nsteps):
        try:
            s = step_rk4(s, dt, dn)
            if s.separation() <= 0:
                raise RuntimeError(f"separation lost at t = {s.t:.6g}")
        except (RuntimeError, ValueError) as exc:
            record.aborted = True
            record.abort_reason = str(exc)
            record.abort_time = record.times[-1]
            return record
        if (n + 1) % sample_every == 0 or n == nsteps - 1:
            record.append(s)
            for obs in observers:
                obs(s)
    return record
