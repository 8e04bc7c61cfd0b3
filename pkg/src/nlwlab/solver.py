"""Nonlinear wave machinery on the periodic box.

Production evolver: symmetric kick-drift-kick splitting with the exact
spectral linear flow (second order).  The Duhamel fixed-point iteration is
kept as an independent validation path.  Also houses the space-time norm
accumulators, interval partition policy, step-size formula, perturbation
comparator, and the nonlinear Gronwall bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.fft as sfft
from scipy.integrate import cumulative_trapezoid

from .grid import FieldPair, Grid, SpectralField, fft_forward, fft_inverse, lebesgue_norm
from .propagator import linear_evolve, propagator

BLOWUP_THRESHOLD = 1e12

DEALIAS_RULES = ("two-thirds", "padded-3/2")


class BlowupError(RuntimeError):
    """Field or norm exceeded the blowup guard threshold."""

    def __init__(self, message, last_good_time):
        super().__init__(message)
        self.last_good_time = last_good_time


class PicardDivergedError(RuntimeError):
    """Fixed-point iteration failed to contract."""


def critical_exponents(d: int) -> tuple[float, float]:
    """(q, r) of the scaling-critical space-time norm for dimension d."""
    return ((d + 2) / (d - 2), 2 * (d + 2) / (d - 2))


# ----------------------------------------------------------------------
# nonlinearity


def nonlinearity(values: np.ndarray, d: int) -> np.ndarray:
    """Defocusing power F(u) = |u|^{4/(d-2)} u, pointwise; odd and monotone."""
    if d not in (3, 4, 5):
        raise ValueError(f"nonlinearity power 4/(d-2) needs d in {{3,4,5}}, got {d}")
    if d == 4:
        return values**3
    if d == 3:
        return values**5
    return np.abs(values) ** (4.0 / 3.0) * values


def nonlinearity_difference_bound(
    u: np.ndarray, u_tilde: np.ndarray, d: int
) -> tuple[float, float]:
    """Pointwise maxima of |F(u) - F(u~)| and of |u - u~|(|u|^p + |u~|^p).

    The first is bounded by C times the second with C = 3 for d = 4 and
    C = (7/3) 2^{1/3} for d = 5 (mean-value bound).
    """
    p = 4.0 / (d - 2)
    lhs = float(np.max(np.abs(nonlinearity(u, d) - nonlinearity(u_tilde, d))))
    rhs = float(np.max(np.abs(u - u_tilde) * (np.abs(u) ** p + np.abs(u_tilde) ** p)))
    return lhs, rhs


def difference_bound_constant(d: int) -> float:
    if d == 4:
        return 3.0
    if d == 5:
        return (7.0 / 3.0) * 2.0 ** (1.0 / 3.0)
    return 5.0 * 2.0**3  # d = 3, crude documented majorant

def energy(pair: FieldPair, d: int) -> float:
    """Conserved energy: kinetic + gradient + (d-2)/(2d) |u|^{2d/(d-2)}."""
    from .grid import sobolev_norm

    quad = 0.5 * sobolev_norm(pair.vel, 0) ** 2
    quad += 0.5 * sobolev_norm(pair.pos, 1, homogeneous=True) ** 2
    u = fft_inverse(pair.pos)
    power = 2.0 * d / (d - 2)
    pot = (d - 2) / (2.0 * d) * np.sum(np.abs(u) ** power) * pair.grid.cell_volume
    return float(quad + pot)


# ----------------------------------------------------------------------
# dealiasing


def dealias_mask(grid: Grid) -> np.ndarray:
    """Two-thirds rule: keep per-axis |k_i| < n/3."""
    keep = np.abs(grid.k_axis) < grid.n / 3.0
    mask = np.ones(grid.shape, dtype=bool)
    for ax in range(grid.d):
        sh = [1] * grid.d
        sh[ax] = grid.n
        mask &= keep.reshape(sh)
    return mask


def _pad_spectrum(coeffs: np.ndarray, n: int, m: int, d: int) -> np.ndarray:
    big = np.zeros((m,) * d, dtype=np.complex128)
    src = np.fft.fftshift(coeffs)
    lo = (m - n) // 2
    big[(slice(lo, lo + n),) * d] = src
    return np.fft.ifftshift(big)


def _truncate_spectrum(coeffs: np.ndarray, m: int, n: int, d: int) -> np.ndarray:
    src = np.fft.fftshift(coeffs)
    lo = (m - n) // 2
    out = src[(slice(lo, lo + n),) * d]
    return np.fft.ifftshift(out)


class NonlinearForce:
    """Dealiased spectral evaluation of F(u) (plus optional forcing shift).

    d = 4 (cubic): two-thirds truncation before and after the pointwise
    product.  d = 5 (fractional power): 3/2 zero-padding then truncation;
    residual aliasing is a documented discretization effect.
    """

    def __init__(self, grid: Grid, d: int, rule: str):
        if rule not in DEALIAS_RULES:
            raise ValueError(f"unknown dealias rule {rule!r}")
        self.grid = grid
        self.d = d
        self.rule = rule
        if rule == "two-thirds":
            self.mask = dealias_mask(grid)
        else:
            self.m = int(math.ceil(1.5 * grid.n / 2) * 2)
            self.scale_up = (self.m / grid.n) ** grid.d

    def __call__(self, coeffs: np.ndarray, shift_coeffs: np.ndarray | None = None) -> np.ndarray:
        """F(u + shift) in spectral form, from spectral input(s)."""
        g = self.grid
        total = coeffs if shift_coeffs is None else coeffs + shift_coeffs
        if self.rule == "two-thirds":
            total = total * self.mask
            u = sfft.ifftn(total).real * (g.L ** (g.d / 2) / g.cell_volume)
            F = nonlinearity(u, self.d)
            out = sfft.fftn(F) * (g.cell_volume / g.L ** (g.d / 2))
            return out * self.mask
        big = _pad_spectrum(total, g.n, self.m, g.d)
        u = sfft.ifftn(big).real * self.scale_up * (g.L ** (g.d / 2) / g.cell_volume)
        F = nonlinearity(u, self.d)
        big_out = sfft.fftn(F) / self.scale_up * (g.cell_volume / g.L ** (g.d / 2))
        return _truncate_spectrum(big_out, self.m, g.n, g.d)


# ----------------------------------------------------------------------
# configuration and trajectory records


@dataclass
class SolverConfig:
    dt: float
    t_end: float
    dealias: str = "two-thirds"
    picard_tol: float = 1e-10
    picard_max_iters: int = 50
    sample_stride: int = 1
    record_norms: tuple = ()  # (q, r) pairs whose L^r_x series to record
    nonlinear: bool = True
    store_states: bool = False
    box_horizon_check: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.dealias not in DEALIAS_RULES:
            raise ValueError(f"unknown dealias rule {self.dealias!r}")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")

    def validate_horizon(self, grid: Grid):
        if self.box_horizon_check and self.t_end > grid.L / 2:
            raise ValueError(
                f"t_end={self.t_end} exceeds the finite-box horizon "
                f"L/2={grid.L / 2} in box-faithful mode"
            )

    def n_steps(self) -> int:
        m = round(self.t_end / self.dt)
        if m < 1 or abs(m * self.dt - self.t_end) > 1e-9 * self.t_end:
            raise ValueError(
                f"t_end={self.t_end} is not an integer multiple of dt={self.dt}"
            )
        return m


@dataclass
class Trajectory:
    """Time-sampled record of one evolution."""

    times: np.ndarray
    energy_series: np.ndarray
    space_norms: dict  # (q, r) -> array of ||u(t)||_{L^r_x}
    z_space_norms: dict = dc_field(default_factory=dict)
    states: list | None = None
    d: int = 4

    def running_accumulator(self, q: float, r: float, source: str = "u") -> np.ndarray:
        """Nondecreasing running L^q_t L^r_x accumulator (q-th power form)."""
        series = (self.space_norms if source == "u" else self.z_space_norms)[(q, r)]
        if q == np.inf:
            return np.maximum.accumulate(series)
        powers = cumulative_trapezoid(series**q, self.times, initial=0.0)
        return powers


@dataclass
class IntervalPartition:
    intervals: list  # [(t_a, t_b)]
    norms: list  # per-interval recorded X-norm
    target: float


# ----------------------------------------------------------------------
# evolvers


def _check_finite(arr: np.ndarray, t: float):
    m = np.max(np.abs(arr))
    if not np.isfinite(m) or m > BLOWUP_THRESHOLD:
        raise BlowupError(f"blowup guard tripped at t={t}", last_good_time=t)


def _record_norm_keys(cfg: SolverConfig):
    return tuple((float(q), float(r)) for q, r in cfg.record_norms)


def strang_steps(initial: FieldPair, cfg: SolverConfig, z_init: FieldPair | None = None):
    """Generator over sampled states of the kick-drift-kick evolution.

    Yields (t, pos_coeffs, vel_coeffs, z_coeffs_or_None) every
    `sample_stride` steps (including t = 0 and t = t_end).  With z_init
    given, evolves the forced equation with kick force F(u + z) where z is
    the exact linear flow from z_init (the v-equation of the linear /
    nonlinear splitting); otherwise the plain equation with force F(u).
    """
    grid = initial.grid
    d = grid.d
    cfg.validate_horizon(grid)
    n_steps = cfg.n_steps()
    dt = cfg.dt

    pos = initial.pos.coeffs.copy()
    vel = initial.vel.coeffs.copy()
    z_pos = z_init.pos.coeffs.copy() if z_init is not None else None
    z_vel = z_init.vel.coeffs.copy() if z_init is not None else None

    force = NonlinearForce(grid, d, cfg.dealias) if cfg.nonlinear else None
    if force is not None and force.rule == "two-thirds":
        amp = max(np.max(np.abs(pos)), np.max(np.abs(vel)))
        outside = 0.0
        if amp > 0:
            outside = max(
                np.max(np.abs(pos[~force.mask])), np.max(np.abs(vel[~force.mask]))
            )
        if outside > 1e-10 * max(amp, 1e-300):
            raise ValueError("initial data is not band-limited under the dealias rule")

    P = propagator(grid, dt)

    yield 0.0, pos, vel, z_pos

    F_hat = force(pos, z_pos) if force is not None else None
    for step in range(1, n_steps + 1):
        t_prev = (step - 1) * dt
        if force is not None:
            vel = vel - (dt / 2) * F_hat
        pos, vel = P.cos * pos + P.sinc * vel, -P.omega_sin * pos + P.cos * vel
        if z_pos is not None:
            z_pos, z_vel = (
                P.cos * z_pos + P.sinc * z_vel,
                -P.omega_sin * z_pos + P.cos * z_vel,
            )
        if force is not None:
            F_hat = force(pos, z_pos)
            vel = vel - (dt / 2) * F_hat
            # the end-of-step kick does not move pos, so F_hat stays valid
        _check_finite(pos, t_prev)
        _check_finite(vel, t_prev)
        if step % cfg.sample_stride == 0 or step == n_steps:
            yield step * dt, pos, vel, z_pos


def _space_norm_from_coeffs(grid: Grid, coeffs: np.ndarray, r: float) -> float:
    if r == 2.0:
        return float(np.sqrt(np.sum(np.abs(coeffs) ** 2)))
    u = sfft.ifftn(coeffs).real * (grid.L ** (grid.d / 2) / grid.cell_volume)
    return lebesgue_norm(u, r, grid)


def _collect(initial: FieldPair, cfg: SolverConfig, z_init: FieldPair | None) -> Trajectory:
    grid = initial.grid
    d = grid.d
    keys = _record_norm_keys(cfg)
    times, energies, states = [], [], [] if cfg.store_states else None
    norms = {k: [] for k in keys}
    z_norms = {k: [] for k in keys} if z_init is not None else {}
    from .propagator import linear_energy

    for t, pos, vel, z_pos in strang_steps(initial, cfg, z_init):
        times.append(t)
        pair = FieldPair(SpectralField(grid, pos.copy()), SpectralField(grid, vel.copy()))
        energies.append(energy(pair, d) if cfg.nonlinear else linear_energy(pair))
        for q, r in keys:
            norms[(q, r)].append(_space_norm_from_coeffs(grid, pos, r))
        if z_init is not None:
            for q, r in keys:
                z_norms[(q, r)].append(_space_norm_from_coeffs(grid, z_pos, r))
        if states is not None:
            states.append(pair)
    return Trajectory(
        times=np.array(times),
        energy_series=np.array(energies),
        space_norms={k: np.array(v) for k, v in norms.items()},
        z_space_norms={k: np.array(v) for k, v in z_norms.items()},
        states=states,
        d=d,
    )


def strang_evolve(initial: FieldPair, cfg: SolverConfig) -> Trajectory:
    """Evolve the full nonlinear wave equation from (u0, u1)."""
    return _collect(initial, cfg, None)


def solve_v_equation(z_init: FieldPair, v_init: FieldPair, cfg: SolverConfig) -> Trajectory:
    """Evolve d^2 v - Lap v + F(v + z) = 0 with z the linear flow of z_init."""
    if z_init.grid != v_init.grid:
        raise ValueError("z and v must live on the same grid")
    return _collect(v_init, cfg, z_init)


# ----------------------------------------------------------------------
# Picard / Duhamel validation path


def picard_local_solve(
    z_init: FieldPair,
    interval: tuple[float, float],
    quad_points: int,
    tol: float,
    d: int | None = None,
    dealias: str = "two-thirds",
    max_iters: int = 50,
):
    """Fixed-point iteration v <- Gamma v on one short interval.

    Gamma v(t) = -int_{t0}^t sin((t-t')|grad|)/|grad| F(v + z)(t') dt',
    evaluated on `quad_points` uniform nodes with trapezoid weights,
    started from v = 0.  Returns (list of FieldPair samples at the nodes,
    iteration log with successive-difference norms and contraction ratios).
    """
    grid = z_init.grid
    if d is None:
        d = grid.d
    t0, t1 = interval
    if not t1 > t0:
        raise ValueError("empty Picard interval")
    if quad_points < 2:
        raise ValueError("need at least 2 quadrature nodes")
    nodes = np.linspace(t0, t1, quad_points)
    dt = nodes[1] - nodes[0]
    q_exp, r_exp = critical_exponents(d)

    z_coeffs = []
    for t in nodes:
        zp = linear_evolve(z_init, t)
        z_coeffs.append(zp.pos.coeffs)
    force = NonlinearForce(grid, d, dealias)

    # kernel tables sin((ti-tj)w)/w and cos((ti-tj)w) via per-lag propagators
    lag_P = [propagator(grid, k * dt) for k in range(quad_points)]

    def x_norm(sample_coeff_list):
        vals = np.array(
            [_space_norm_from_coeffs(grid, c, r_exp) for c in sample_coeff_list]
        )
        return float(np.trapezoid(vals**q_exp, nodes) ** (1.0 / q_exp))

    v = [np.zeros(grid.shape, dtype=np.complex128) for _ in range(quad_points)]
    log = []
    prev_diff = None
    for it in range(1, max_iters + 1):
        F = [force(v[jj], z_coeffs[jj]) for jj in range(quad_points)]
        new_v = [np.zeros(grid.shape, dtype=np.complex128)]
        for i in range(1, quad_points):
            acc = np.zeros(grid.shape, dtype=np.complex128)
            for jj in range(i + 1):
                w = dt if 0 < jj < i else dt / 2
                acc += w * lag_P[i - jj].sinc * F[jj]
            new_v.append(-acc)
        diff = x_norm([a - b for a, b in zip(new_v, v)])
        ratio = diff / prev_diff if prev_diff not in (None, 0.0) else None
        log.append({"iteration": it, "difference": diff, "ratio": ratio})
        v = new_v
        prev_diff = diff
        if diff <= tol:
            break
    else:
        raise PicardDivergedError(
            f"no contraction after {max_iters} iterations "
            f"(last difference {prev_diff:.3e})"
        )

    # velocity samples from the cos kernel on the converged forcing
    F = [force(v[jj], z_coeffs[jj]) for jj in range(quad_points)]
    samples = []
    for i in range(quad_points):
        acc = np.zeros(grid.shape, dtype=np.complex128)
        for jj in range(i + 1):
            w = dt if 0 < jj < i else dt / 2
            acc += w * lag_P[i - jj].cos * F[jj]
        vel = -acc if i > 0 else np.zeros(grid.shape, dtype=np.complex128)
        samples.append(
            FieldPair(SpectralField(grid, v[i]), SpectralField(grid, vel))
        )
    return samples, log


# ----------------------------------------------------------------------
# space-time norms and interval policies


def spacetime_norm(traj: Trajectory, q: float, r: float, interval: tuple[float, float], source: str = "u") -> float:
    """L^q_t L^r_x over `interval` from a trajectory's recorded series."""
    key = (float(q), float(r))
    store = traj.space_norms if source == "u" else traj.z_space_norms
    if key not in store:
        raise KeyError(f"norm {key} was not recorded on this trajectory")
    t0, t1 = interval
    if t0 < traj.times[0] - 1e-12 or t1 > traj.times[-1] + 1e-12:
        raise ValueError("interval outside the recorded range")
    sel = (traj.times >= t0 - 1e-12) & (traj.times <= t1 + 1e-12)
    if np.count_nonzero(sel) < 8:
        raise ValueError("insufficient samples in interval (need >= 8)")
    ts = traj.times[sel]
    series = store[key][sel]
    if q == np.inf:
        return float(series.max())
    return float(np.trapezoid(series**q, ts) ** (1.0 / q))


def admissible_pair_check(d: int, gamma: float, q: float, r: float) -> bool:
    """Wave-admissibility: q >= 2, 2 <= r < inf (or (inf, 2)), the
    admissibility line 1/q + (d-1)/(2r) <= (d-1)/4, and the scaling
    relation 1/q + d/r = d/2 - gamma."""
    if d < 2:
        raise ValueError("need d >= 2")
    tol = 1e-9
    if q == np.inf and r == 2:
        return abs(d / 2 - gamma - d / 2) <= tol  # gamma must be 0
    if q < 2 or r < 2 or r == np.inf or q == np.inf:
        return False
    if 1 / q + (d - 1) / (2 * r) > (d - 1) / 4 + tol:
        return False
    return abs(1 / q + d / r - (d / 2 - gamma)) <= tol


def adaptive_partition(traj: Trajectory, eta: float, q: float | None = None, r: float | None = None) -> IntervalPartition:
    """Greedy left-to-right split of [0, T] into pieces of X-norm ~ eta.

    Cuts where the running X-accumulator first exceeds eta; every interval
    except possibly the last carries norm in [eta/2, 2 eta].
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    if q is None or r is None:
        q, r = critical_exponents(traj.d)
    powers = traj.running_accumulator(q, r)  # cumulative integral of ||.||^q
    times = traj.times
    eta_pow = eta**q
    cuts = [0]
    base = 0.0
    for i in range(1, len(times)):
        inc = powers[i] - base
        if inc >= eta_pow and i > cuts[-1]:
            piece = inc ** (1.0 / q)
            if piece > 2 * eta:
                raise ValueError(
                    "eta is below the time-sampling resolution: one sample "
                    f"step carries X-norm {piece:.3e} > 2 eta"
                )
            cuts.append(i)
            base = powers[i]
    if cuts[-1] != len(times) - 1:
        cuts.append(len(times) - 1)
    intervals, norms = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        intervals.append((float(times[a]), float(times[b])))
        norms.append(float((powers[b] - powers[a]) ** (1.0 / q)))
    return IntervalPartition(intervals=intervals, norms=norms, target=eta)


def tau_star(
    A: float,
    K: float,
    gamma: float,
    T: float,
    eps: float,
    d: int,
    tau_table=None,
    c: float = 1.0,
) -> float:
    """Uniform step size for the interval cover of [0, T].

    Second branch: (1/2) (c / (2 T^2 log(2T/eps)))^{(d+2)/(2(d-2-gamma(d+2)))}.
    The first branch tau(A, K, gamma) has no closed form; when a calibration
    table is supplied it contributes via a conservative bracket lookup.
    Non-increasing in A, K, and T.
    """
    for name, val in (("A", A), ("K", K), ("T", T), ("eps", eps)):
        if not val > 0:
            raise ValueError(f"{name} must be positive, got {val}")
    if gamma < 0 or gamma >= (d - 2) / (d + 2):
        raise ValueError(
            f"need 0 <= gamma < (d-2)/(d+2) = {(d - 2) / (d + 2):.4g}, got {gamma}"
        )
    if 2 * T <= eps:
        raise ValueError("need eps < 2T for the logarithm to be positive")
    exponent = (d + 2) / (2 * (d - 2 - gamma * (d + 2)))
    branch2 = 0.5 * (c / (2 * T**2 * math.log(2 * T / eps))) ** exponent
    if tau_table:
        branch1 = lookup_tau_table(tau_table, A, K)
        return min(branch1, branch2)
    return branch2


def lookup_tau_table(table, A: float, K: float) -> float:
    """Conservative bracket lookup: the recorded step of the smallest
    calibrated bracket (A', K') with A' >= A and K' >= K; falls back to the
    most conservative entry."""
    candidates = [
        tau for (a, k, tau) in table if a >= A and k >= K
    ]
    if candidates:
        return max(candidates)
    return min(tau for (_, _, tau) in table)


def gronwall_bound(c: float, alpha: float, b_samples: np.ndarray, times: np.ndarray, t: float) -> float:
    """Closed-form bound (c^{1-a} + (1-a) int_0^t b)^{1/(1-a)} for the
    nonlinear integral inequality u <= c + int b u^a."""
    if c < 0:
        raise ValueError("c must be nonnegative")
    if not 0 <= alpha < 1:
        raise ValueError(f"need 0 <= alpha < 1, got {alpha}")
    b_samples = np.asarray(b_samples, dtype=float)
    times = np.asarray(times, dtype=float)
    if np.any(b_samples < 0):
        raise ValueError("b must be nonnegative")
    cum = cumulative_trapezoid(b_samples, times, initial=0.0)
    integral = float(np.interp(t, times, cum))
    return float((c ** (1 - alpha) + (1 - alpha) * integral) ** (1.0 / (1 - alpha)))


def energy_bound_rhs(traj: Trajectory, T: float, d: int) -> float:
    """Forcing-norm abscissa of the probabilistic energy bound (C = 1).

    d = 4: ||z||_X^3 exp(||z||_{L^1_t L^inf_x});
    d = 5: ||z||_X^{7/3} + ||z||_{L^1_t L^10_x}^5.
    """
    q_exp, r_exp = critical_exponents(d)
    if d == 4:
        x = spacetime_norm(traj, q_exp, r_exp, (0.0, T), source="z")
        l1linf = spacetime_norm(traj, 1.0, np.inf, (0.0, T), source="z")
        return float(x**3 * math.exp(l1linf))
    if d == 5:
        x = spacetime_norm(traj, q_exp, r_exp, (0.0, T), source="z")
        l1l10 = spacetime_norm(traj, 1.0, 10.0, (0.0, T), source="z")
        return float(x ** (7.0 / 3.0) + l1l10**5)
    raise ValueError(f"energy bound right-hand side defined for d = 4, 5; got {d}")


# ----------------------------------------------------------------------
# perturbation comparison


def perturbation_compare(
    v_traj: Trajectory,
    w_traj: Trajectory,
    z_init: FieldPair | None = None,
    eta: float | None = None,
) -> dict:
    """Compare a forced solution v against the unforced solution w.

    Reports the sup-t Hdot^1 x L^2 difference, the X-norm of the
    difference, the per-interval X-norms of v (partition target `eta`),
    and the L^1_t L^2_x norm of the error term e = F(v) - F(v + z).
    Requires both trajectories to store states on the same time grid.
    """
    if v_traj.states is None or w_traj.states is None:
        raise ValueError("perturbation_compare needs stored states")
    if len(v_traj.times) != len(w_traj.times) or not np.allclose(
        v_traj.times, w_traj.times
    ):
        raise ValueError("mismatched time grids")
    grid = v_traj.states[0].grid
    if w_traj.states[0].grid != grid:
        raise ValueError("mismatched grids")
    d = v_traj.d
    q_exp, r_exp = critical_exponents(d)

    sup_diff = 0.0
    diff_r_series = []
    e_series = []
    from .grid import sobolev_norm

    for t, sv, sw in zip(v_traj.times, v_traj.states, w_traj.states):
        dp = SpectralField(grid, sv.pos.coeffs - sw.pos.coeffs)
        dv = SpectralField(grid, sv.vel.coeffs - sw.vel.coeffs)
        sup_diff = max(
            sup_diff,
            math.hypot(
                sobolev_norm(dp, 1, homogeneous=True), sobolev_norm(dv, 0)
            ),
        )
        diff_r_series.append(lebesgue_norm(dp, r_exp))
        if z_init is not None:
            z = linear_evolve(z_init, t)
            uv = fft_inverse(sv.pos)
            zv = fft_inverse(z.pos)
            err = nonlinearity(uv, d) - nonlinearity(uv + zv, d)
            e_series.append(lebesgue_norm(err, 2, grid))
    diff_r_series = np.array(diff_r_series)
    x_diff = float(np.trapezoid(diff_r_series**q_exp, v_traj.times) ** (1 / q_exp))
    report = {
        "sup_energy_norm_difference": float(sup_diff),
        "x_norm_difference": x_diff,
    }
    if e_series:
        report["error_term_l1l2"] = float(np.trapezoid(np.array(e_series), v_traj.times))
    if eta is not None:
        part = adaptive_partition(v_traj, eta)
        report["v_interval_x_norms"] = part.norms
        report["intervals"] = part.intervals
    return report
