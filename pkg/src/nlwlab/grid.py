"""Periodic-box discretization: grids, spectral fields, and norm machinery.

Real fields live on the box [-L/2, L/2)^d with n points per dimension.
Fourier convention: f(x) = sum_k fhat(k) e^{2 pi i x . xi_k} with
xi_k = k / L, k integer, so the |grad| symbol is 2 pi |xi|.  Coefficients
are normalized so that the discrete Plancherel identity holds:

    sum_x |f(x)|^2 dx^d = sum_k |fhat(k)|^2.

Nyquist rows (k_i = -n/2) are zeroed on every field so Hermitian symmetry
pairs every retained mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

# n^d above this refuses to allocate; keeps accidental huge grids out.
MAX_POINTS = 2**26

# Relative ceiling on the imaginary residue of a field representing a
# real function.
REALNESS_TOL = 1e-11


class Grid:
    """Periodic box [-L/2, L/2)^d with an n^d collocation lattice.

    Frequencies are xi_k = k/L for integer k in {-n/2, ..., n/2 - 1} per
    axis (fft storage order internally).
    """

    def __init__(self, d: int, n: int, L: float):
        if not 2 <= d <= 5:
            raise ValueError(f"dimension d must be in [2, 5], got {d}")
        if n < 4 or n % 2 != 0:
            raise ValueError(f"n must be an even integer >= 4, got {n}")
        if not L > 0:
            raise ValueError(f"box side L must be positive, got {L}")
        if n**d > MAX_POINTS:
            raise ValueError(f"grid too large: {n}^{d} points exceeds {MAX_POINTS}")
        self.d = int(d)
        self.n = int(n)
        self.L = float(L)
        self.dx = self.L / self.n
        self.cell_volume = self.dx**self.d
        self.shape = (self.n,) * self.d

        # integer wavenumbers in fft order: [0, 1, ..., n/2-1, -n/2, ..., -1]
        self.k_axis = np.fft.fftfreq(self.n, d=1.0 / self.n).astype(np.int64)
        self.xi_axis = self.k_axis / self.L
        self.x_axis = -self.L / 2 + self.dx * np.arange(self.n)

        self._xi_components = None
        self._xi_norm = None
        self._nyquist_mask = None

    # ------------------------------------------------------------------
    # cached lattice arrays

    @property
    def xi_components(self) -> tuple[np.ndarray, ...]:
        """Broadcastable frequency component arrays, one per axis."""
        if self._xi_components is None:
            comps = []
            for ax in range(self.d):
                sh = [1] * self.d
                sh[ax] = self.n
                comps.append(self.xi_axis.reshape(sh))
            self._xi_components = tuple(comps)
        return self._xi_components

    @property
    def xi_norm(self) -> np.ndarray:
        """|xi| on the full lattice, shape grid.shape."""
        if self._xi_norm is None:
            sq = np.zeros(self.shape)
            for c in self.xi_components:
                sq = sq + c**2
            self._xi_norm = np.sqrt(sq)
        return self._xi_norm

    @property
    def nyquist_mask(self) -> np.ndarray:
        """Boolean mask of modes with any k_i = -n/2 (forced to zero)."""
        if self._nyquist_mask is None:
            mask = np.zeros(self.shape, dtype=bool)
            for ax in range(self.d):
                sh = [1] * self.d
                sh[ax] = self.n
                mask |= (self.k_axis == -self.n // 2).reshape(sh)
            self._nyquist_mask = mask
        return self._nyquist_mask

    @property
    def xi_max(self) -> float:
        """Largest per-axis |xi| on the lattice (Nyquist magnitude n/(2L))."""
        return self.n / (2 * self.L)

    def meshgrid(self) -> list[np.ndarray]:
        return list(np.meshgrid(*([self.x_axis] * self.d), indexing="ij"))

    # ------------------------------------------------------------------

    def __eq__(self, other):
        return (
            isinstance(other, Grid)
            and (self.d, self.n, self.L) == (other.d, other.n, other.L)
        )

    def __hash__(self):
        return hash((self.d, self.n, self.L))

    def __repr__(self):
        return f"Grid(d={self.d}, n={self.n}, L={self.L})"


@dataclass
class SpectralField:
    """A field held by its Fourier coefficients on a Grid.

    Treated as immutable after construction; operations return new fields.
    """

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match grid "
                f"shape {self.grid.shape}"
            )
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if np.any(self.coeffs[self.grid.nyquist_mask] != 0):
            self.coeffs = self.coeffs.copy()
            self.coeffs[self.grid.nyquist_mask] = 0.0

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy())

    def values(self) -> np.ndarray:
        return fft_inverse(self)

    def imag_residue(self) -> float:
        """Max |imaginary part| of the inverse transform, relative to amplitude."""
        g = self.grid
        raw = sfft.ifftn(self.coeffs) * g.L ** (g.d / 2) / g.cell_volume
        amp = np.max(np.abs(raw))
        if amp == 0:
            return 0.0
        return float(np.max(np.abs(raw.imag)) / amp)


@dataclass
class FieldPair:
    """State (u, du/dt) of the wave equation, both spectral on one grid."""

    pos: SpectralField
    vel: SpectralField

    def __post_init__(self):
        if self.pos.grid != self.vel.grid:
            raise ValueError("pos and vel must share the same grid")

    @property
    def grid(self) -> Grid:
        return self.pos.grid

    def copy(self) -> "FieldPair":
        return FieldPair(self.pos.copy(), self.vel.copy())

    def scaled(self, a: float) -> "FieldPair":
        return FieldPair(
            SpectralField(self.grid, a * self.pos.coeffs),
            SpectralField(self.grid, a * self.vel.coeffs),
        )

    @staticmethod
    def zero(grid: Grid) -> "FieldPair":
        z = np.zeros(grid.shape, dtype=np.complex128)
        return FieldPair(SpectralField(grid, z.copy()), SpectralField(grid, z.copy()))


# ----------------------------------------------------------------------
# transforms


def fft_forward(values: np.ndarray, grid: Grid) -> SpectralField:
    """Transform real-space samples to normalized Fourier coefficients."""
    values = np.asarray(values)
    if values.shape != grid.shape:
        raise ValueError(
            f"field shape {values.shape} does not match grid shape {grid.shape}"
        )
    coeffs = sfft.fftn(values) * (grid.cell_volume / grid.L ** (grid.d / 2))
    return SpectralField(grid, coeffs)


def fft_inverse(field: SpectralField) -> np.ndarray:
    """Inverse transform to real-space samples (real part; the imaginary
    residue of a well-formed real field is below REALNESS_TOL)."""
    g = field.grid
    raw = sfft.ifftn(field.coeffs) * g.L ** (g.d / 2) / g.cell_volume
    return np.ascontiguousarray(raw.real)


# ----------------------------------------------------------------------
# norms


def lebesgue_norm(field, p: float, grid: Grid | None = None) -> float:
    """Spatial L^p norm by Riemann-sum quadrature; p = inf is the grid max.

    Accepts a SpectralField or a real-space array (with grid supplied).
    """
    if isinstance(field, SpectralField):
        grid = field.grid
        values = fft_inverse(field)
    else:
        if grid is None:
            raise ValueError("grid required when passing raw values")
        values = np.asarray(field)
    if p != np.inf and p < 1:
        raise ValueError(f"Lebesgue exponent must satisfy p >= 1, got {p}")
    a = np.abs(values)
    if p == np.inf:
        return float(np.max(a))
    return float((np.sum(a**p) * grid.cell_volume) ** (1.0 / p))


def sobolev_norm(field: SpectralField, s: float, homogeneous: bool = False) -> float:
    """Discrete H^s (inhomogeneous) or Hdot^s (homogeneous) norm.

    Inhomogeneous weight <xi> = (1 + 4 pi^2 |xi|^2)^{1/2}; homogeneous
    weight (2 pi |xi|)^s with the zero mode excluded.
    """
    g = field.grid
    c2 = np.abs(field.coeffs) ** 2
    if homogeneous:
        total = float(np.sqrt(np.sum(c2)))
        zero_mag = float(np.abs(field.coeffs[(0,) * g.d]))
        if s < 0 and total > 0 and zero_mag > 1e-12 * total:
            raise ValueError(
                "homogeneous negative-order norm requested on a field with "
                "nontrivial mean"
            )
        w = 2 * np.pi * g.xi_norm
        w2s = np.zeros(g.shape)
        nz = w > 0
        w2s[nz] = w[nz] ** (2 * s)
        return float(np.sqrt(np.sum(w2s * c2)))
    w2 = 1.0 + 4 * np.pi**2 * g.xi_norm**2
    return float(np.sqrt(np.sum(w2**s * c2)))


def pair_sobolev_norm(pair: FieldPair, s: float, homogeneous: bool = False) -> float:
    """H^s x H^{s-1} (or homogeneous) norm of a state pair."""
    a = sobolev_norm(pair.pos, s, homogeneous)
    b = sobolev_norm(pair.vel, s - 1, homogeneous)
    return float(math.hypot(a, b))


# ----------------------------------------------------------------------
# symbols and rescaling


def apply_symbol(field: SpectralField, symbol) -> SpectralField:
    """Multiply coefficients by a frequency symbol.

    `symbol` is either an array of shape grid.shape or a callable taking
    the tuple of broadcastable frequency component arrays.
    """
    g = field.grid
    if callable(symbol):
        sym = np.asarray(symbol(g.xi_components))
    else:
        sym = np.asarray(symbol)
    sym = np.broadcast_to(sym, g.shape)
    if not np.all(np.isfinite(sym)):
        raise ValueError("symbol is not finite at every lattice frequency")
    out = field.coeffs * sym
    if not np.all(np.isfinite(out)):
        raise ValueError("symbol application produced non-finite coefficients")
    return SpectralField(g, out)


def rescale(pair: FieldPair, lam: float) -> FieldPair:
    """Energy-critical rescaling at t = 0 onto the companion grid L/lam.

    u(x) -> lam^{(d-2)/2} u(lam x), velocity scaled by lam^{d/2}.  Because
    the companion grid's lattice points are x/lam, the map is exact on
    collocation values.
    """
    g = pair.grid
    if not lam > 0:
        raise ValueError(f"scale must be positive, got {lam}")
    m = math.log2(lam)
    if abs(m - round(m)) > 1e-12:
        raise ValueError(f"scale must be a power of 2, got {lam}")
    if lam == 1.0:
        return pair.copy()
    new_grid = Grid(g.d, g.n, g.L / lam)
    pos = fft_inverse(pair.pos) * lam ** ((g.d - 2) / 2)
    vel = fft_inverse(pair.vel) * lam ** (g.d / 2)
    return FieldPair(fft_forward(pos, new_grid), fft_forward(vel, new_grid))
