"""Unit-cube frequency decomposition and its random coefficient dressing.

The frequency lattice is partitioned into unit cubes centered at integer
points.  A cutoff family supplies per-cube symbols (a smooth partition of
unity, or exact cube indicators); a draw attaches one complex coefficient
per cube, Hermitian-symmetric so real fields stay real.

Cube symbols factor over axes: psi(xi - m) = prod_i psi1(xi_i - m_i), so
a family stores a single (centers x lattice) profile matrix per axis.

Coefficients are counter-based: a Philox stream is keyed by
(master seed, component j, cube center), and sample index i consumes the
i-th block of four uniform doubles (two used: Re, Im).  Draws are therefore
order-independent and bit-reproducible.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy.special import ndtri

from .grid import FieldPair, Grid, SpectralField, lebesgue_norm

CUTOFF_KINDS = ("smooth", "sharp")
DISTRIBUTION_KINDS = ("gaussian", "rademacher", "uniform", "unimodular")

# offset making cube-center coordinates valid (nonnegative) spawn keys
_KEY_OFFSET = 1 << 16


# ----------------------------------------------------------------------
# 1-d cutoff profiles


def _glue(x):
    """exp(-1/x) glue: smooth, 0 for x <= 0."""
    out = np.zeros_like(x, dtype=float)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_bump_1d(t):
    """C-infinity plateau: 1 on [-1/2, 1/2], supported in [-1, 1], even.

    Transition via g(x) = q(x) / (q(x) + q(1-x)) with q(x) = exp(-1/x),
    evaluated at x = 2(1 - |t|).  This exact functional form is frozen by
    a golden test.
    """
    t = np.abs(np.asarray(t, dtype=float))
    x = 2.0 * (1.0 - t)
    qa = _glue(x)
    qb = _glue(1.0 - x)
    out = np.where(t <= 0.5, 1.0, np.where(t >= 1.0, 0.0, qa / np.where(qa + qb > 0, qa + qb, 1.0)))
    return out


def sharp_center_1d(t):
    """Integer cube center owning frequency t, ties split symmetrically.

    Half-away-from-zero rounding: +-1/2 belongs to the +-1 cube, keeping
    the assignment even under t -> -t (required so Hermitian coefficient
    pairs stay paired on lattices whose frequencies hit cube boundaries).
    """
    t = np.asarray(t, dtype=float)
    return (np.sign(t) * np.floor(np.abs(t) + 0.5)).astype(np.int64)


# ----------------------------------------------------------------------


def classify_center(center: tuple) -> str:
    """Partition tag of a cube center: 'zero', 'I', or '-I'.

    The positive index set contains the centers whose last nonzero
    coordinate is positive.
    """
    for c in reversed(center):
        if c > 0:
            return "I"
        if c < 0:
            return "-I"
    return "zero"


class CutoffFamily:
    """Per-cube frequency symbols on a grid.

    Cubes whose closed support would exceed the lattice's frequency range
    are dropped; fields to be randomized must be band-limited to the
    covered range (`band_limit`, per-axis |xi_i|).
    """

    def __init__(self, kind: str, grid: Grid):
        if kind not in CUTOFF_KINDS:
            raise ValueError(f"unknown cutoff kind {kind!r}")
        self.kind = kind
        self.grid = grid

        half_support = 1.0 if kind == "smooth" else 0.5
        M = int(math.floor(grid.xi_max - half_support + 1e-12))
        if M < 0:
            raise ValueError(
                f"grid frequency range +-{grid.xi_max} cannot hold any unit "
                f"cube with the {kind} cutoff"
            )
        self.axis_half_width = M
        self.axis_centers = np.arange(-M, M + 1)

        t = grid.xi_axis  # (n,)
        if kind == "sharp":
            assigned = sharp_center_1d(t)
            profiles = (self.axis_centers[:, None] == assigned[None, :]).astype(float)
            self.band_limit = M + 0.5  # exclusive
        else:
            profiles = np.empty((2 * M + 1, grid.n))
            denom = np.zeros(grid.n)
            lo = int(math.floor(t.min())) - 1
            hi = int(math.ceil(t.max())) + 1
            for m in range(lo, hi + 1):
                denom += smooth_bump_1d(t - m)
            for i, c in enumerate(self.axis_centers):
                profiles[i] = smooth_bump_1d(t - c) / denom
            self.band_limit = float(M)  # inclusive
        self.axis_profiles = profiles

        # per-axis coverage: frequencies where the kept 1-d profiles sum to 1
        self._axis_covered = np.abs(profiles.sum(axis=0) - 1.0) <= 1e-12

        self.centers = [
            tuple(c)
            for c in np.stack(
                np.meshgrid(*([self.axis_centers] * grid.d), indexing="ij"), axis=-1
            ).reshape(-1, grid.d)
        ]
        self._center_set = set(self.centers)
        self.centers_nonneg = [
            c for c in self.centers if classify_center(c) != "-I"
        ]

    def has_center(self, center) -> bool:
        return tuple(center) in self._center_set

    def coverage_mask(self) -> np.ndarray:
        """Lattice mask where the full partition of unity holds."""
        mask = np.ones(self.grid.shape, dtype=bool)
        for ax in range(self.grid.d):
            sh = [1] * self.grid.d
            sh[ax] = self.grid.n
            mask &= self._axis_covered.reshape(sh)
        return mask

    def cube_symbol(self, center) -> np.ndarray:
        """psi(xi - center) on the full lattice (outer product of profiles)."""
        center = tuple(center)
        rows = []
        for ax, c in enumerate(center):
            idx = c + self.axis_half_width
            if not 0 <= idx < len(self.axis_centers):
                raise KeyError(center)
            rows.append(self.axis_profiles[idx])
        out = rows[0]
        for r in rows[1:]:
            out = np.multiply.outer(out, r)
        return out

    def multiplier(self, g_by_center: dict) -> np.ndarray:
        """sum_n g_n psi(xi - n) over all kept cubes, as a lattice array.

        Contracts the coefficient tensor against the per-axis profile
        matrices (cheap: the coefficient tensor is tiny).
        """
        w = 2 * self.axis_half_width + 1
        G = np.zeros((w,) * self.grid.d, dtype=np.complex128)
        for center, gval in g_by_center.items():
            idx = tuple(c + self.axis_half_width for c in center)
            G[idx] = gval
        T = G
        for _ in range(self.grid.d):
            T = np.tensordot(T, self.axis_profiles, axes=([0], [0]))
        return T


def build_cutoff(kind: str, grid: Grid) -> CutoffFamily:
    return CutoffFamily(kind, grid)


# ----------------------------------------------------------------------
# coefficient distributions


@dataclass(frozen=True)
class CoefficientDistribution:
    """Mean-zero symmetric coefficient law with E|g|^2 = 1.

    Every kind satisfies a sub-Gaussian moment-generating bound
    exp(c gamma^2) on each real component; the documented constant is
    `subgaussian_c`.  The unimodular kind (|g| = 1, uniform phase) is an
    extra exact-norm oracle: bounded, hence also sub-Gaussian, but its
    real and imaginary parts are not independent.
    """

    kind: str

    def __post_init__(self):
        if self.kind not in DISTRIBUTION_KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")

    @property
    def subgaussian_c(self) -> float:
        # gaussian: mgf e^{g^2/2}; rademacher: cosh g <= e^{g^2/2};
        # uniform[-a,a]: sinh(ag)/(ag) <= e^{a^2 g^2/6} with a^2 = 3;
        # unimodular: bounded in [-1,1], Hoeffding.
        return 0.5

    def _component(self, u: np.ndarray, scale: float) -> np.ndarray:
        if self.kind == "gaussian":
            return ndtri(u) * scale
        if self.kind == "rademacher":
            return np.where(u < 0.5, -scale, scale)
        if self.kind == "uniform":
            return (2.0 * u - 1.0) * (math.sqrt(3.0) * scale)
        raise ValueError(f"{self.kind} has no independent-component form")

    def complex_sample(self, u2: np.ndarray) -> np.ndarray:
        """Complex coefficients from uniform pairs u2[..., 2] (E|g|^2 = 1)."""
        if self.kind == "unimodular":
            theta = 2 * np.pi * u2[..., 0]
            return np.exp(1j * theta)
        s = math.sqrt(0.5)
        return self._component(u2[..., 0], s) + 1j * self._component(u2[..., 1], s)

    def real_sample(self, u2: np.ndarray) -> np.ndarray:
        """Real coefficients (for the zero cube) from uniform pairs."""
        if self.kind == "unimodular":
            return np.where(u2[..., 0] < 0.5, -1.0, 1.0)
        return self._component(u2[..., 0], 1.0)


# ----------------------------------------------------------------------
# draws


def _uniform_blocks(master_seed: int, j: int, center: tuple, start: int, count: int):
    """Uniform doubles for `count` consecutive samples of one cube stream.

    Returns shape (count, 2).  One Philox counter step yields four doubles;
    each sample owns one step (two doubles used, two reserved).
    """
    key = (j, *(c + _KEY_OFFSET for c in center))
    bg = np.random.Philox(np.random.SeedSequence(master_seed, spawn_key=key))
    if start:
        bg.advance(start)
    u = np.random.Generator(bg).random(4 * count).reshape(count, 4)
    return u[:, :2]


def sample_coefficients(
    master_seed: int,
    centers: list,
    dist: CoefficientDistribution,
    j: int,
    start: int,
    count: int,
) -> np.ndarray:
    """Coefficients g_{n,j} for samples [start, start+count).

    `centers` must contain only zero / positive-index cubes; negative-index
    coefficients follow by conjugation.  Returns shape (count, len(centers)).
    """
    out = np.empty((count, len(centers)), dtype=np.complex128)
    for i, center in enumerate(centers):
        u2 = _uniform_blocks(master_seed, j, tuple(center), start, count)
        if classify_center(tuple(center)) == "zero":
            out[:, i] = dist.real_sample(u2)
        else:
            out[:, i] = dist.complex_sample(u2)
    return out


@dataclass
class RandomizedDraw:
    """One realization of the cube coefficients g_{n,j}, j = 0, 1.

    Stores zero / positive-index cubes only; `coefficient` extends by
    Hermitian symmetry g_{-n,j} = conj(g_{n,j}).
    """

    master_seed: int
    index: int
    centers: list  # zero + positive-index cube centers
    coeffs: dict = field(repr=False)  # (center, j) -> complex

    def coefficient(self, center, j: int) -> complex:
        center = tuple(center)
        key = (center, j)
        if key in self.coeffs:
            return self.coeffs[key]
        neg = tuple(-c for c in center)
        if (neg, j) in self.coeffs:
            return np.conj(self.coeffs[(neg, j)])
        raise KeyError(key)

    def check_symmetry(self):
        for (center, j), g in self.coeffs.items():
            if classify_center(center) == "zero" and abs(g.imag) > 0:
                raise ValueError(f"zero-cube coefficient g_(0,{j}) is not real")
            if classify_center(center) == "-I":
                raise ValueError(f"draw stores a negative-index cube {center}")

    def full_coefficients(self, all_centers, j: int) -> dict:
        return {tuple(c): self.coefficient(c, j) for c in all_centers}


def make_draw(
    master_seed: int,
    index: int,
    cutoff: CutoffFamily,
    dist: CoefficientDistribution,
) -> RandomizedDraw:
    centers = cutoff.centers_nonneg
    coeffs = {}
    for j in (0, 1):
        block = sample_coefficients(master_seed, centers, dist, j, index, 1)[0]
        for center, g in zip(centers, block):
            coeffs[(tuple(center), j)] = complex(g)
    return RandomizedDraw(master_seed, index, list(centers), coeffs)


# ----------------------------------------------------------------------
# operations


def cube_project(
    field_: SpectralField, center, cutoff: CutoffFamily
) -> SpectralField:
    """psi(D - center) applied to a field; off-lattice cubes give zero."""
    if not cutoff.has_center(center):
        warnings.warn(
            f"cube center {tuple(center)} lies outside the lattice range; "
            "projection is zero",
            stacklevel=2,
        )
        return SpectralField(field_.grid, np.zeros(field_.grid.shape, complex))
    return SpectralField(field_.grid, field_.coeffs * cutoff.cube_symbol(center))


def _complex_lebesgue(field_: SpectralField, p: float) -> float:
    """L^p of a possibly complex-valued field (single-cube projections are
    complex; the real-part shortcut in fft_inverse would halve their mass)."""
    g = field_.grid
    vals = sfft.ifftn(field_.coeffs) * (g.L ** (g.d / 2) / g.cell_volume)
    return lebesgue_norm(vals, p, g)


def bernstein_ratio(
    field_: SpectralField, center, p: float, q: float, cutoff: CutoffFamily
) -> float:
    """||psi(D-n) u||_q / ||psi(D-n) u||_p, finite-band Bernstein ratio."""
    if not (1 <= p <= q):
        raise ValueError(f"need 1 <= p <= q, got p={p}, q={q}")
    proj = cube_project(field_, center, cutoff)
    denom = _complex_lebesgue(proj, p)
    if denom < 1e-30:
        raise ValueError(
            f"Bernstein ratio undefined: cube {tuple(center)} carries no mass"
        )
    return _complex_lebesgue(proj, q) / denom


def project_to_coverage(pair: FieldPair, cutoff: CutoffFamily) -> FieldPair:
    """Restrict a pair to the cutoff family's covered frequency range."""
    mask = cutoff.coverage_mask()
    return FieldPair(
        SpectralField(pair.grid, pair.pos.coeffs * mask),
        SpectralField(pair.grid, pair.vel.coeffs * mask),
    )


def check_band_limited(field_: SpectralField, cutoff: CutoffFamily) -> None:
    mask = cutoff.coverage_mask()
    amp = float(np.max(np.abs(field_.coeffs)))
    if amp == 0:
        return
    outside = float(np.max(np.abs(field_.coeffs[~mask]))) if (~mask).any() else 0.0
    if outside > 1e-12 * amp:
        raise ValueError(
            "field is not band-limited to the cutoff's covered frequency "
            f"range (per-axis |xi_i| <= {cutoff.band_limit})"
        )


def randomize_pair(
    pair: FieldPair,
    cutoff: CutoffFamily,
    dist: CoefficientDistribution,
    draw: RandomizedDraw,
) -> FieldPair:
    """Dress each cube of (u0, u1) with the draw's coefficients.

    output_j = sum_n g_{n,j} psi(D - n) input_j; real-valued by Hermitian
    symmetry of the draw.
    """
    draw.check_symmetry()
    check_band_limited(pair.pos, cutoff)
    check_band_limited(pair.vel, cutoff)
    out = []
    for j, f in enumerate((pair.pos, pair.vel)):
        g_full = draw.full_coefficients(cutoff.centers, j)
        W = cutoff.multiplier(g_full)
        out.append(SpectralField(pair.grid, W * f.coeffs))
    return FieldPair(out[0], out[1])


def modulation_norm(
    field_: SpectralField, p: float, q: float, s: float, cutoff: CutoffFamily
) -> float:
    """l^q over cube centers of <n>^s ||psi(D-n) u||_{L^p}."""
    if (p != np.inf and p < 1) or (q != np.inf and q < 1):
        raise ValueError(f"exponents must be >= 1, got p={p}, q={q}")
    terms = []
    for center in cutoff.centers:
        bracket = math.sqrt(1.0 + 4 * math.pi**2 * sum(c * c for c in center))
        terms.append(
            bracket**s * _complex_lebesgue(cube_project(field_, center, cutoff), p)
        )
    terms = np.array(terms)
    if q == np.inf:
        return float(terms.max())
    return float((terms**q).sum() ** (1.0 / q))
