"""Periodic spectral grid, fields and Fourier multipliers.

Everything downstream (dyadic analysis, paradifferential operators, the
strip solver, the time stepper) is built on the two types defined here:
a 2*pi-periodic grid in d = 1 or 2 dimensions with an integer frequency
lattice, and a field carrying physical values together with its
(average-normalized) Fourier coefficients.
"""

from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


class Grid:
    """Uniform periodic grid on [0, 2*pi)^d with N nodes per axis.

    The frequency lattice per axis is {-N/2+1, ..., N/2}; the Nyquist bin
    is labeled +N/2.  N must be a power of two, N >= 8, and d in {1, 2}.
    """

    def __init__(self, N: int, d: int = 1):
        if d not in (1, 2):
            raise ValueError(f"d must be 1 or 2, got {d}")
        if not _is_power_of_two(N) or N < 8:
            raise ValueError(f"N must be a power of two >= 8, got {N}")
        self.N = int(N)
        self.d = int(d)
        self.L = TWO_PI
        self.dx = TWO_PI / N

        x = np.arange(N) * self.dx
        k = np.fft.fftfreq(N, d=1.0 / N)  # 0, 1, ..., N/2-1, -N/2, ..., -1
        k[N // 2] = N // 2  # label the Nyquist bin +N/2
        self._k1 = k

        if d == 1:
            self.x = (x,)
            self.k = (k,)
        else:
            X, Y = np.meshgrid(x, x, indexing="ij")
            self.x = (X, Y)
            KX, KY = np.meshgrid(k, k, indexing="ij")
            self.k = (KX, KY)

        self.kmag = np.sqrt(sum(ki**2 for ki in self.k))
        self.shape = (N,) * d
        self.size = N**d
        # 2/3-rule mask: zero every coefficient with |k_i| > N/3 on some axis
        self.dealias_mask = np.ones(self.shape, dtype=bool)
        for ki in self.k:
            self.dealias_mask &= np.abs(ki) <= N / 3.0

    @property
    def axes(self):
        return tuple(range(self.d))

    def fft(self, values: np.ndarray) -> np.ndarray:
        """Average-normalized forward transform: hat(u)_0 is the mean."""
        return np.fft.fftn(values) / self.size

    def ifft(self, coeffs: np.ndarray) -> np.ndarray:
        return np.fft.ifftn(coeffs * self.size)

    def quad_weight(self) -> float:
        """Weight of one node in integrals over the torus."""
        return (TWO_PI / self.N) ** self.d

    def integrate(self, values: np.ndarray) -> float:
        """Integral over [0, 2*pi)^d (exact for resolved trig polynomials)."""
        return float(np.real(np.sum(values))) * self.quad_weight()

    def __eq__(self, other):
        return isinstance(other, Grid) and other.N == self.N and other.d == self.d

    def __hash__(self):
        return hash((self.N, self.d))

    def __repr__(self):
        return f"Grid(N={self.N}, d={self.d})"


class SpectralField:
    """Grid function with physical values and cached Fourier coefficients.

    Coefficients are normalized so that hat(u)_k = (1/N^d) sum_j u(x_j)
    exp(-i k.x_j); for a real field they are Hermitian-symmetric.
    Instances are treated as immutable: operations return new fields.
    """

    __slots__ = ("grid", "_values", "_coeffs")

    def __init__(self, grid: Grid, values=None, coeffs=None):
        if values is None and coeffs is None:
            raise ValueError("need values or coeffs")
        self.grid = grid
        self._values = None if values is None else np.asarray(values)
        self._coeffs = None if coeffs is None else np.asarray(coeffs, dtype=complex)
        check = self._values if self._values is not None else self._coeffs
        if check.shape != grid.shape:
            raise ValueError(f"shape {check.shape} does not match grid {grid.shape}")

    @classmethod
    def from_values(cls, grid: Grid, values) -> "SpectralField":
        return cls(grid, values=values)

    @classmethod
    def from_coeffs(cls, grid: Grid, coeffs) -> "SpectralField":
        return cls(grid, coeffs=coeffs)

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "SpectralField":
        return cls(grid, values=fn(*grid.x))

    @classmethod
    def zero(cls, grid: Grid) -> "SpectralField":
        return cls(grid, values=np.zeros(grid.shape))

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            v = self.grid.ifft(self._coeffs)
            # keep real representation when coefficients are Hermitian
            if np.max(np.abs(v.imag)) <= 1e-13 * (1.0 + np.max(np.abs(v.real))):
                v = v.real
            self._values = v
        return self._values

    @property
    def coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            self._coeffs = self.grid.fft(self._values)
        return self._coeffs

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values) or np.max(np.abs(self.values.imag)) == 0.0

    def real_part(self) -> "SpectralField":
        return SpectralField(self.grid, values=np.real(self.values))

    def imag_part(self) -> "SpectralField":
        return SpectralField(self.grid, values=np.imag(self.values))

    def mean(self) -> float:
        return complex(self.coeffs[(0,) * self.grid.d]).real

    def linf(self) -> float:
        return float(np.max(np.abs(self.values)))

    def l2(self) -> float:
        """Average-normalized L2 norm, sqrt of the grid mean of |u|^2."""
        return float(np.sqrt(np.mean(np.abs(self.values) ** 2)))

    # arithmetic (pointwise, products are NOT dealiased here)
    def __add__(self, other):
        return self._binop(other, np.add)

    def __sub__(self, other):
        return self._binop(other, np.subtract)

    def __mul__(self, other):
        return self._binop(other, np.multiply)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        return SpectralField(self.grid, values=-self.values)

    def _binop(self, other, op):
        if isinstance(other, SpectralField):
            if other.grid != self.grid:
                raise ValueError("grid mismatch")
            return SpectralField(self.grid, values=op(self.values, other.values))
        return SpectralField(self.grid, values=op(self.values, other))


class FourierMultiplier:
    """Scalar function m(xi) tabulated on the frequency lattice.

    The value at xi = 0 must be supplied explicitly (no implicit
    regularization of symbols singular at the origin).  `symbol` receives
    the per-axis frequency meshes.
    """

    def __init__(self, grid: Grid, symbol, at_zero: float = 0.0, order: float | None = None):
        self.grid = grid
        self.order = order
        with np.errstate(all="ignore"):
            table = np.asarray(symbol(*grid.k), dtype=complex)
        table = np.broadcast_to(table, grid.shape).copy()
        table[(0,) * grid.d] = at_zero
        if not np.all(np.isfinite(table)):
            bad = np.argwhere(~np.isfinite(table))[0]
            raise ValueError(f"multiplier not finite at lattice index {tuple(bad)}")
        self.table = table

    @classmethod
    def from_table(cls, grid: Grid, table, order=None):
        m = cls.__new__(cls)
        m.grid = grid
        m.order = order
        m.table = np.asarray(table, dtype=complex)
        if m.table.shape != grid.shape:
            raise ValueError("table shape mismatch")
        if not np.all(np.isfinite(m.table)):
            raise ValueError("multiplier not finite on the lattice")
        return m

    def is_real_symmetric(self) -> bool:
        """m(-xi) == conj(m(xi)) on the lattice, so T_m maps real to real."""
        t = self.table
        for ax in range(self.grid.d):
            t_flip = np.roll(np.flip(t, axis=ax), 1, axis=ax)
            t = t_flip
        return bool(np.allclose(t, np.conj(self.table), rtol=1e-12, atol=1e-14))


def apply_multiplier(m: FourierMultiplier, u: SpectralField) -> SpectralField:
    """m(D)u by pointwise multiplication of Fourier coefficients."""
    if m.grid != u.grid:
        raise ValueError("multiplier and field on different grids")
    out = SpectralField(u.grid, coeffs=m.table * u.coeffs)
    return out


def sobolev_norm(u: SpectralField, s: float) -> float:
    """H^s norm: (sum_k (1+|k|^2)^s |hat(u)_k|^2)^(1/2)."""
    w = (1.0 + u.grid.kmag**2) ** s
    return float(np.sqrt(np.sum(w * np.abs(u.coeffs) ** 2)))


def dealias(u: SpectralField) -> SpectralField:
    """2/3-rule truncation: zero coefficients with |k_i| > N/3 on any axis."""
    return SpectralField(u.grid, coeffs=u.coeffs * u.grid.dealias_mask)


def dealias_values(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Dealias a raw value array, preserving realness."""
    c = grid.fft(values) * grid.dealias_mask
    v = grid.ifft(c)
    return v.real if not np.iscomplexobj(values) else v


def gradient(u: SpectralField) -> tuple[SpectralField, ...]:
    """Exact spectral gradient; the Nyquist mode is zeroed per axis."""
    g = u.grid
    out = []
    for ax in range(g.d):
        ik = 1j * g.k[ax]
        nyq = np.abs(g.k[ax]) == g.N // 2
        tab = np.where(nyq, 0.0, ik)
        out.append(SpectralField(g, coeffs=tab * u.coeffs))
    return tuple(out)


def divergence(fields: tuple[SpectralField, ...]) -> SpectralField:
    g = fields[0].grid
    acc = np.zeros(g.shape, dtype=complex)
    for ax, f in enumerate(fields):
        ik = 1j * g.k[ax]
        nyq = np.abs(g.k[ax]) == g.N // 2
        acc = acc + np.where(nyq, 0.0, ik) * f.coeffs
    return SpectralField(g, coeffs=acc)


# --- columnar text serialization -------------------------------------------

def write_field(path, u: SpectralField) -> None:
    """Columnar dump: header '# grid d N L', one node per line 'x [y] value'."""
    g = u.grid
    with open(path, "w") as fh:
        fh.write(f"# grid {g.d} {g.N} {g.L:.17g}\n")
        vals = u.values
        if g.d == 1:
            for xj, vj in zip(g.x[0], vals):
                fh.write(f"{xj:.17g} {vj:.17g}\n")
        else:
            X, Y = g.x
            for i in range(g.N):
                for j in range(g.N):
                    fh.write(f"{X[i, j]:.17g} {Y[i, j]:.17g} {vals[i, j]:.17g}\n")


def read_field(path) -> SpectralField:
    with open(path) as fh:
        header = fh.readline().split()
        d, N = int(header[2]), int(header[3])
        g = Grid(N, d)
        vals = np.zeros(g.shape)
        if d == 1:
            for j, line in enumerate(fh):
                vals[j] = float(line.split()[-1])
        else:
            flat = vals.reshape(-1)
            for j, line in enumerate(fh):
                flat[j] = float(line.split()[-1])
    return SpectralField(g, values=vals)


def write_spectrum(path, u: SpectralField) -> None:
    """Spectral dump: one lattice point per line 'k [l] re im'."""
    g = u.grid
    with open(path, "w") as fh:
        fh.write(f"# spectrum {g.d} {g.N} {g.L!r}\n")
        c = u.coeffs
        if g.d == 1:
            for kj, cj in zip(g.k[0], c):
                fh.write(f"{int(kj)} {cj.real:.17g} {cj.imag:.17g}\n")
        else:
            KX, KY = g.k
            for i in range(g.N):
                for j in range(g.N):
                    fh.write(f"{int(KX[i, j])} {int(KY[i, j])} {c[i, j].real:.17g} {c[i, j].imag:.17g}\n")
