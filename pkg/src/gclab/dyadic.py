"""Littlewood-Paley analysis: dyadic blocks, Besov/Zygmund norms,
paraproducts and the Bony remainder.

The cutoff profile kappa equals 1 for |theta| <= 1.1 and 0 for
|theta| >= 1.9, with a C-infinity exp-bump transition in between.  Bands
are phi_0 = kappa_0 and phi_k = kappa_k - kappa_{k-1}, so partial sums
telescope exactly.  Low passes S_k = kappa_k(D) are defined for every
integer k; on the integer lattice S_k with k < 0 retains only the mean.
"""

from __future__ import annotations

import math

import numpy as np

from .grid import Grid, SpectralField, dealias

KAPPA_LO = 1.1
KAPPA_HI = 1.9


def smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, exp-bump blend between."""
    t = np.asarray(t, dtype=float)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
    return a / (a + b)


class DyadicCutoff:
    """Radial profile kappa and its rescalings kappa_k(theta) = kappa(2^-k theta)."""

    def __init__(self, lo: float = KAPPA_LO, hi: float = KAPPA_HI):
        if not 0 < lo < hi:
            raise ValueError("need 0 < lo < hi")
        self.lo = lo
        self.hi = hi

    def kappa(self, theta) -> np.ndarray:
        t = np.abs(np.asarray(theta, dtype=float))
        return smooth_step((self.hi - t) / (self.hi - self.lo))

    def kappa_k(self, k: int, theta) -> np.ndarray:
        return self.kappa(np.asarray(theta, dtype=float) * 2.0 ** (-k))

    def phi(self, j: int, theta) -> np.ndarray:
        """Band function: phi_0 = kappa_0, phi_j = kappa_j - kappa_{j-1}."""
        if j < 0:
            raise ValueError("band index must be >= 0")
        if j == 0:
            return self.kappa_k(0, theta)
        return self.kappa_k(j, theta) - self.kappa_k(j - 1, theta)


_DEFAULT_CUTOFF = DyadicCutoff()


def build_cutoff(steepness: float = 1.0) -> DyadicCutoff:
    """Construct the dyadic cutoff; `steepness` is reserved for profile studies."""
    if steepness != 1.0:
        # narrower transition inside the mandated [1.1, 1.9] plateau bounds
        mid = 0.5 * (KAPPA_LO + KAPPA_HI)
        half = 0.5 * (KAPPA_HI - KAPPA_LO) / steepness
        return DyadicCutoff(mid - half, mid + half)
    return DyadicCutoff()


def j_max(grid: Grid) -> int:
    """Smallest J with S_J u = u for every grid field."""
    return math.ceil(math.log2(grid.N))


def dyadic_block(j: int, u: SpectralField, cutoff: DyadicCutoff = _DEFAULT_CUTOFF) -> SpectralField:
    """Delta_j u = phi_j(|D|) u."""
    if j < 0:
        raise ValueError("block index must be >= 0")
    return SpectralField(u.grid, coeffs=cutoff.phi(j, u.grid.kmag) * u.coeffs)


def low_pass(k: int, u: SpectralField, cutoff: DyadicCutoff = _DEFAULT_CUTOFF) -> SpectralField:
    """S_k u = kappa_k(|D|) u, for any integer k (k < 0 keeps only the mean)."""
    return SpectralField(u.grid, coeffs=cutoff.kappa_k(k, u.grid.kmag) * u.coeffs)


def psi_cutoff(u: SpectralField) -> SpectralField:
    """Low-frequency cutoff psi(D): psi = 0 for |xi| <= 1/5, 1 for |xi| >= 1/4.

    On the integer lattice this removes exactly the mean.
    """
    c = u.coeffs.copy()
    c[(0,) * u.grid.d] = 0.0
    return SpectralField(u.grid, coeffs=c)


class BesovSpec:
    """Besov space parameters; supported (p, q) pairs: (2,2), (inf,inf), (inf,1)."""

    SUPPORTED = {(2, 2), (np.inf, np.inf), (np.inf, 1)}

    def __init__(self, s: float, p=np.inf, q=np.inf):
        p = np.inf if p in ("inf", np.inf) else p
        q = np.inf if q in ("inf", np.inf) else q
        if (p, q) not in self.SUPPORTED:
            raise ValueError(f"unsupported (p, q) = ({p}, {q})")
        self.s = float(s)
        self.p = p
        self.q = q

    def __repr__(self):
        return f"BesovSpec(s={self.s}, p={self.p}, q={self.q})"


def _block_norm(block: SpectralField, p) -> float:
    if p == np.inf:
        return block.linf()
    return block.l2()


def besov_norm(u: SpectralField, spec: BesovSpec, cutoff: DyadicCutoff = _DEFAULT_CUTOFF) -> float:
    """l^q over j of 2^(j s) ||Delta_j u||_{L^p(grid)}."""
    J = j_max(u.grid)
    terms = []
    for j in range(J + 1):
        b = _block_norm(dyadic_block(j, u, cutoff), spec.p)
        terms.append(2.0 ** (j * spec.s) * b)
    terms = np.asarray(terms)
    if spec.q == np.inf:
        return float(np.max(terms))
    if spec.q == 1:
        return float(np.sum(terms))
    return float(np.sqrt(np.sum(terms**2)))


def zygmund_norm(u: SpectralField, s: float) -> float:
    """C^s_* norm (Besov with p = q = inf)."""
    return besov_norm(u, BesovSpec(s, np.inf, np.inf))


def b1_norm(u: SpectralField, s: float) -> float:
    """The B^s_{inf,1} norm written frak-B^s in the analysis."""
    return besov_norm(u, BesovSpec(s, np.inf, 1))


def besov_table(u: SpectralField, s: float, cutoff: DyadicCutoff = _DEFAULT_CUTOFF):
    """Debug rows (j, block_sup, weighted) for the C^s_* computation."""
    rows = []
    for j in range(j_max(u.grid) + 1):
        b = dyadic_block(j, u, cutoff).linf()
        rows.append((j, b, 2.0 ** (j * s) * b))
    return rows


def paraproduct(a: SpectralField, u: SpectralField, cutoff: DyadicCutoff = _DEFAULT_CUTOFF,
                with_psi_cutoff: bool = False) -> SpectralField:
    """Bony paraproduct T_a u = sum_k S_{k-3} a . Delta_k u, products dealiased.

    With `with_psi_cutoff` the low-frequency cutoff psi(D) is applied to u
    first, which realizes the paradifferential normalization T_a instead of
    the plain paraproduct (the difference is smoothing).
    """
    if a.grid != u.grid:
        raise ValueError("grid mismatch")
    if with_psi_cutoff:
        u = psi_cutoff(u)
    g = u.grid
    acc = np.zeros(g.shape, dtype=complex)
    for k in range(j_max(g) + 1):
        block = dyadic_block(k, u, cutoff)
        if not np.any(block.coeffs):
            continue
        sa = low_pass(k - 3, a, cutoff)
        prod = g.fft(sa.values * block.values) * g.dealias_mask
        acc += prod
    out = SpectralField(g, coeffs=acc)
    if a.is_real and u.is_real:
        out = SpectralField(g, values=np.real(out.values))
    return out


def bony_remainder(a: SpectralField, u: SpectralField,
                   cutoff: DyadicCutoff = _DEFAULT_CUTOFF) -> SpectralField:
    """R(a, u) = au - T_a u - T_u a with the same dealiasing path throughout."""
    prod = dealias(a * u)
    return prod - paraproduct(a, u, cutoff) - paraproduct(u, a, cutoff)
