"""Exact linear half-wave flow on the lattice and Duhamel integration.

Every mode rotates with angular frequency 2 pi |xi|; the zero mode obeys
u(t) = u0 + t u1.  Symbol arrays are cached per (grid, t) with exact float
matching, never interpolated.
"""

from __future__ import annotations

import numpy as np

from .grid import FieldPair, Grid, SpectralField, sobolev_norm

_CACHE: dict = {}
_CACHE_LIMIT = 64


class PropagatorCache:
    """cos(t |grad|) and sin(t |grad|)/|grad| lattice arrays for one t."""

    def __init__(self, grid: Grid, t: float):
        self.grid = grid
        self.t = float(t)
        omega = 2 * np.pi * grid.xi_norm
        self.cos = np.cos(self.t * omega)
        # sinc-type kernel: zero-frequency entry is exactly t
        with np.errstate(invalid="ignore", divide="ignore"):
            self.sinc = np.where(omega > 0, np.sin(self.t * omega) / np.where(omega > 0, omega, 1.0), self.t)
        self.omega_sin = omega * np.sin(self.t * omega)


def propagator(grid: Grid, t: float) -> PropagatorCache:
    key = (grid, float(t))
    cached = _CACHE.get(key)
    if cached is None:
        if len(_CACHE) >= _CACHE_LIMIT:
            _CACHE.clear()
        cached = _CACHE[key] = PropagatorCache(grid, t)
    return cached


def linear_evolve(pair: FieldPair, t: float) -> FieldPair:
    """S(t) applied to (u0, u1):

    pos -> cos(t|grad|) u0 + sin(t|grad|)/|grad| u1
    vel -> -|grad| sin(t|grad|) u0 + cos(t|grad|) u1
    """
    if not np.isfinite(t):
        raise ValueError(f"time must be finite, got {t}")
    P = propagator(pair.grid, t)
    p, v = pair.pos.coeffs, pair.vel.coeffs
    return FieldPair(
        SpectralField(pair.grid, P.cos * p + P.sinc * v),
        SpectralField(pair.grid, -P.omega_sin * p + P.cos * v),
    )


def duhamel_integral(
    forcing_samples: list[SpectralField], t_grid: np.ndarray
) -> FieldPair:
    """Trapezoid quadrature of -int sin((t-t')|grad|)/|grad| F(t') dt'.

    Returns the state increment (pos and vel components) at t = t_grid[-1],
    exact sinc/cos kernels per mode, O(dt^2) on smooth forcings.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if len(forcing_samples) < 2 or len(forcing_samples) != len(t_grid):
        raise ValueError("need at least 2 forcing samples matching t_grid")
    steps = np.diff(t_grid)
    if not np.allclose(steps, steps[0], rtol=1e-10, atol=1e-14):
        raise ValueError("forcing samples must lie on a uniform time grid")
    grid = forcing_samples[0].grid
    t_end = t_grid[-1]
    dt = steps[0]
    pos_acc = np.zeros(grid.shape, dtype=np.complex128)
    vel_acc = np.zeros(grid.shape, dtype=np.complex128)
    for tj, F in zip(t_grid, forcing_samples):
        P = propagator(grid, t_end - tj)
        w = dt if tj not in (t_grid[0], t_grid[-1]) else dt / 2
        pos_acc += w * P.sinc * F.coeffs
        vel_acc += w * P.cos * F.coeffs
    return FieldPair(
        SpectralField(grid, -pos_acc), SpectralField(grid, -vel_acc)
    )


def linear_energy(pair: FieldPair) -> float:
    """Quadratic energy (1/2)||du/dt||_{L^2}^2 + (1/2)||u||_{Hdot^1}^2."""
    return 0.5 * sobolev_norm(pair.vel, 0) ** 2 + 0.5 * sobolev_norm(pair.pos, 1, homogeneous=True) ** 2
