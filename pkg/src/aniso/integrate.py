"""Time steppers: integrating-factor RK4 and plain RK4, plus the exact
anisotropic heat propagator used by the integrating factor.

On divergence-free fields the projected momentum dissipation is, mode by
mode, multiplication by the scalar

    a(xi) = -(mu1 xi1^4 + nu2 xi2^4 + (nu1 + mu2) xi1^2 xi2^2) / |xi|^2,

because the solenoidal subspace at each xi is one-dimensional.  The
integrating factor therefore removes the stiff linear part exactly; the
coupling terms (lambda1 theta, lambda2 v2) and the advection are integrated
explicitly inside the Runge-Kutta stages.

The inner loop works on half-spectrum (rfft2) arrays; the public API speaks
full-lattice fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np
import scipy.fft as _fft

from .model import DissipationConfig, SimulationState
from .spectral import Grid2D, SpectralField, VectorField2, mollifier_symbol

__all__ = [
    "RhsVariant",
    "IntegratorConfig",
    "PropagatorSymbol",
    "linear_propagator",
    "velocity_decay_symbol",
    "step",
    "run",
    "RunResult",
    "DissipationTracker",
    "BlowUpError",
    "DivergenceDriftError",
]

DRIFT_ALARM = 1e-10


class BlowUpError(RuntimeError):
    """A coefficient became non-finite; carries the last finite state."""

    def __init__(self, t: float, state: SimulationState, partial=None):
        super().__init__(f"blow-up detected at t={t:.6g}")
        self.t = t
        self.state = state
        self.partial = partial


class DivergenceDriftError(RuntimeError):
    """Pre-projection divergence exceeded the drift alarm threshold."""


@dataclass(frozen=True)
class RhsVariant:
    """Which right-hand side a run integrates."""

    kind: str = "full"  # "full" | "truncated" | "mollified"
    n: Optional[float] = None
    eps: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("full", "truncated", "mollified"):
            raise ValueError(f"unknown rhs variant {self.kind!r}")
        if self.kind == "truncated" and not (self.n and self.n > 0):
            raise ValueError("truncated variant needs a positive radius n")
        if self.kind == "mollified" and not (self.eps and self.eps > 0):
            raise ValueError("mollified variant needs a positive width eps")


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "if_rk4"  # "if_rk4" | "erk4"
    dt: float | str = "auto"
    cfl: float = 0.4
    t_end: float = 1.0
    variant: RhsVariant = field(default_factory=RhsVariant)
    dt_max: float = 0.05  # cap for auto-resolved steps

    def __post_init__(self):
        if self.method not in ("if_rk4", "erk4"):
            raise ValueError(f"unknown method {self.method!r}")
        if isinstance(self.dt, str):
            if self.dt != "auto":
                raise ValueError(f"dt must be positive or 'auto', got {self.dt!r}")
        elif not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0 < self.cfl <= 1:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.t_end < 0:
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")


def velocity_decay_symbol(grid: Grid2D, cfg: DissipationConfig) -> np.ndarray:
    """a(xi) on the full lattice: nonpositive, zero at the mean mode."""
    num = (
        cfg.mu1 * grid.xi1**4
        + cfg.nu2 * grid.xi2**4
        + (cfg.nu1 + cfg.mu2) * grid.xi1**2 * grid.xi2**2
    )
    out = np.zeros_like(grid.xi_sq)
    nz = grid.xi_sq > 0
    out[nz] = -(num * np.ones_like(grid.xi_sq))[nz] / grid.xi_sq[nz]
    return out


class PropagatorSymbol:
    """Closed-form heat flow for the cross-diagonal viscous pattern.

    Velocity: exp(A t) with A = a(xi) P(xi); applied as
    v + (exp(a t) - 1) P v, which is exact for any input and reduces to a
    per-mode scalar on divergence-free fields.  Scalar: exp(-(delta1 xi1^2 +
    delta2 xi2^2) t).  Couplings are not part of the propagator.
    """

    def __init__(self, grid: Grid2D, cfg: DissipationConfig, t: float):
        if t < 0:
            raise ValueError(f"propagation time must be nonnegative, got {t}")
        self.grid = grid
        self.cfg = cfg
        self.t = float(t)
        self.a_xi = velocity_decay_symbol(grid, cfg)
        self.theta_rate = -(cfg.delta1 * grid.xi1**2 + cfg.delta2 * grid.xi2**2)
        self.theta_rate = self.theta_rate * np.ones_like(grid.xi_sq)

    def velocity_factor(self, t: Optional[float] = None) -> np.ndarray:
        return np.exp(self.a_xi * (self.t if t is None else t))

    def theta_factor(self, t: Optional[float] = None) -> np.ndarray:
        return np.exp(self.theta_rate * (self.t if t is None else t))

    def p_matrix(self, k1: int, k2: int) -> np.ndarray:
        """The 2x2 projection symbol P(xi) at an integer lattice point."""
        if k1 == 0 and k2 == 0:
            return np.eye(2)
        xi1 = 2.0 * math.pi / self.grid.L * k1
        xi2 = 2.0 * math.pi / self.grid.L * k2
        s = xi1 * xi1 + xi2 * xi2
        return np.array([[xi2 * xi2, -xi1 * xi2], [-xi1 * xi2, xi1 * xi1]]) / s

    def apply(self, v: VectorField2, theta: SpectralField):
        g = self.grid
        ev = self.velocity_factor()
        inv = np.zeros_like(g.xi_sq)
        nz = g.xi_sq > 0
        inv[nz] = 1.0 / g.xi_sq[nz]
        div = g.xi1 * v.u1.coeffs + g.xi2 * v.u2.coeffs
        p1 = v.u1.coeffs - g.xi1 * div * inv
        p2 = v.u2.coeffs - g.xi2 * div * inv
        c1 = v.u1.coeffs + (ev - 1.0) * p1
        c2 = v.u2.coeffs + (ev - 1.0) * p2
        out_v = VectorField2(SpectralField(g, c1), SpectralField(g, c2))
        out_t = SpectralField(g, self.theta_factor() * theta.coeffs)
        return out_v, out_t


def linear_propagator(cfg: DissipationConfig, grid: Grid2D, t: float) -> PropagatorSymbol:
    """Exact propagator; requires the cross-diagonal pattern nu1 = mu2 = 0."""
    if cfg.nu1 != 0.0 or cfg.mu2 != 0.0:
        raise ValueError(
            "closed-form propagator requires nu1 = mu2 = 0 "
            f"(got nu1={cfg.nu1}, mu2={cfg.mu2})"
        )
    return PropagatorSymbol(grid, cfg, t)


# ---------------------------------------------------------------------------
# half-spectrum fast path
# ---------------------------------------------------------------------------

def _full_to_half(coeffs: np.ndarray, grid: Grid2D) -> np.ndarray:
    return np.ascontiguousarray(coeffs[:, : grid.N // 2 + 1])


def _half_to_full(half: np.ndarray, grid: Grid2D) -> np.ndarray:
    N = grid.N
    cols = N // 2 + 1
    full = np.empty((N, N), dtype=np.complex128)
    full[:, :cols] = half
    row_map = np.roll(np.arange(N)[::-1], 1)
    full[:, cols:] = np.conj(half[row_map][:, N - cols : 0 : -1])
    return full


class _Operator:
    """Precomputed symbols and workspaces for one (grid, cfg, variant)."""

    def __init__(self, grid: Grid2D, cfg: DissipationConfig, variant: RhsVariant):
        self.grid = grid
        self.cfg = cfg
        self.variant = variant
        N = grid.N
        self.n2 = N * N
        x1, x2 = grid.xi1h, grid.xi2h

        in_mask = grid.dealias_keep_h.astype(np.float64)
        out_mask = in_mask
        if variant.kind == "truncated":
            ball = (grid.xi_sq_h <= variant.n**2).astype(np.float64)
            in_mask = in_mask * ball
            out_mask = in_mask
            self.state_mask = ball * grid.nyquist_keep_h
        else:
            self.state_mask = None

        self.moll = None
        if variant.kind == "mollified":
            self.moll = mollifier_symbol((variant.eps**2) * grid.xi_sq_h)

        self.in_mask = in_mask
        self.out_mask = out_mask
        self.d1 = 1j * x1 * np.ones(grid.half_shape)
        self.d2 = 1j * x2 * np.ones(grid.half_shape)

        m2 = 1.0 if self.moll is None else self.moll * self.moll
        self.visc1 = -(cfg.nu1 * x1**2 + cfg.nu2 * x2**2) * m2 * np.ones(grid.half_shape)
        self.visc2 = -(cfg.mu1 * x1**2 + cfg.mu2 * x2**2) * m2 * np.ones(grid.half_shape)
        self.diff_t = -(cfg.delta1 * x1**2 + cfg.delta2 * x2**2) * m2 * np.ones(grid.half_shape)

        num = (
            cfg.mu1 * x1**4 + cfg.nu2 * x2**4 + (cfg.nu1 + cfg.mu2) * x1**2 * x2**2
        ) * np.ones(grid.half_shape)
        self.a_half = np.zeros(grid.half_shape)
        nz = grid.xi_sq_h > 0
        self.a_half[nz] = -num[nz] / grid.xi_sq_h[nz]
        if self.moll is not None:
            self.a_half = self.a_half * self.moll * self.moll

        self.inv_xisq = np.zeros(grid.half_shape)
        self.inv_xisq[nz] = 1.0 / grid.xi_sq_h[nz]
        self.x1 = x1 * np.ones(grid.half_shape)
        self.x2 = x2 * np.ones(grid.half_shape)
        self._exp_cache: dict[float, tuple] = {}

    def _irfft(self, c):
        return _fft.irfft2(c, s=(self.grid.N, self.grid.N)) * self.n2

    def _rfft(self, p):
        return _fft.rfft2(p) / self.n2

    def project(self, c1, c2):
        div = self.x1 * c1 + self.x2 * c2
        frac = div * self.inv_xisq
        return c1 - self.x1 * frac, c2 - self.x2 * frac

    def nonstiff(self, v1, v2, th):
        """Everything except the exponentially integrated dissipation."""
        cfg = self.cfg
        a1 = v1 * self.in_mask
        a2 = v2 * self.in_mask
        at = th * self.in_mask
        if self.moll is not None:
            a1 = a1 * self.moll
            a2 = a2 * self.moll
            at = at * self.moll
        v1p = self._irfft(a1)
        v2p = self._irfft(a2)
        adv1 = self._rfft(v1p * self._irfft(self.d1 * a1) + v2p * self._irfft(self.d2 * a1))
        adv2 = self._rfft(v1p * self._irfft(self.d1 * a2) + v2p * self._irfft(self.d2 * a2))
        advt = self._rfft(v1p * self._irfft(self.d1 * at) + v2p * self._irfft(self.d2 * at))
        adv1 *= self.out_mask
        adv2 *= self.out_mask
        advt *= self.out_mask
        if self.moll is not None:
            adv1 *= self.moll
            adv2 *= self.moll
            advt *= self.moll
        n1 = -adv1
        n2 = -adv2 + cfg.lambda1 * th
        nt = -advt - cfg.lambda2 * v2
        n1, n2 = self.project(n1, n2)
        return n1, n2, nt

    def full_rhs(self, v1, v2, th):
        n1, n2, nt = self.nonstiff(v1, v2, th)
        s1, s2 = self.project(self.visc1 * v1, self.visc2 * v2)
        return n1 + s1, n2 + s2, nt + self.diff_t * th

    def exponentials(self, tau: float):
        got = self._exp_cache.get(tau)
        if got is None:
            got = (np.exp(self.a_half * tau), np.exp(self.diff_t * tau))
            self._exp_cache[tau] = got
        return got

    def max_stiff_rate(self) -> float:
        return float(
            max(np.max(np.abs(self.a_half)), np.max(np.abs(self.diff_t)))
        )


def _lawson_rk4(op: _Operator, v1, v2, th, dt: float):
    ev_h, et_h = op.exponentials(dt / 2.0)
    ev_f, et_f = op.exponentials(dt)
    h = dt / 2.0

    k1 = op.nonstiff(v1, v2, th)
    s1 = ((v1 + h * k1[0]) * ev_h, (v2 + h * k1[1]) * ev_h, (th + h * k1[2]) * et_h)
    k2 = op.nonstiff(*s1)
    u1h, u2h, uth = v1 * ev_h, v2 * ev_h, th * et_h
    s2 = (u1h + h * k2[0], u2h + h * k2[1], uth + h * k2[2])
    k3 = op.nonstiff(*s2)
    s3 = (
        v1 * ev_f + dt * ev_h * k3[0],
        v2 * ev_f + dt * ev_h * k3[1],
        th * et_f + dt * et_h * k3[2],
    )
    k4 = op.nonstiff(*s3)

    w = dt / 6.0
    nv1 = v1 * ev_f + w * (ev_f * k1[0] + 2.0 * ev_h * (k2[0] + k3[0]) + k4[0])
    nv2 = v2 * ev_f + w * (ev_f * k1[1] + 2.0 * ev_h * (k2[1] + k3[1]) + k4[1])
    nth = th * et_f + w * (et_f * k1[2] + 2.0 * et_h * (k2[2] + k3[2]) + k4[2])
    return nv1, nv2, nth


def _classic_rk4(op: _Operator, v1, v2, th, dt: float):
    k1 = op.full_rhs(v1, v2, th)
    k2 = op.full_rhs(v1 + dt / 2 * k1[0], v2 + dt / 2 * k1[1], th + dt / 2 * k1[2])
    k3 = op.full_rhs(v1 + dt / 2 * k2[0], v2 + dt / 2 * k2[1], th + dt / 2 * k2[2])
    k4 = op.full_rhs(v1 + dt * k3[0], v2 + dt * k3[1], th + dt * k3[2])
    w = dt / 6.0
    return (
        v1 + w * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
        v2 + w * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
        th + w * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]),
    )


def _advance(op: _Operator, v1, v2, th, dt: float, method: str):
    # blow-up is a reportable outcome: let non-finite values flow to the
    # detector instead of warning
    with np.errstate(over="ignore", invalid="ignore"):
        if method == "if_rk4":
            nv1, nv2, nth = _lawson_rk4(op, v1, v2, th, dt)
        else:
            nv1, nv2, nth = _classic_rk4(op, v1, v2, th, dt)

    # drift alarm before the defensive re-projection.  The yardstick is the
    # largest quantity the stage arithmetic handled: a decayed velocity
    # under a much larger buoyancy source carries that source's rounding.
    div_peak = np.max(np.abs(op.x1 * nv1 + op.x2 * nv2))
    scale = max(
        np.max(np.abs(nv1)),
        np.max(np.abs(nv2)),
        np.max(np.abs(v1)),
        np.max(np.abs(v2)),
        dt * abs(op.cfg.lambda1) * np.max(np.abs(nth)),
    )
    if scale > 0 and div_peak > DRIFT_ALARM * scale:
        raise DivergenceDriftError(
            f"divergence drift {div_peak / scale:.3e} exceeds {DRIFT_ALARM:.0e}"
        )
    nv1, nv2 = op.project(nv1, nv2)
    return nv1, nv2, nth


def _state_to_half(state: SimulationState, grid: Grid2D):
    return (
        _full_to_half(state.v.u1.coeffs, grid),
        _full_to_half(state.v.u2.coeffs, grid),
        _full_to_half(state.theta.coeffs, grid),
    )


def _half_to_state(t: float, v1, v2, th, grid: Grid2D) -> SimulationState:
    v = VectorField2(
        SpectralField(grid, _half_to_full(v1, grid)),
        SpectralField(grid, _half_to_full(v2, grid)),
    )
    return SimulationState(t, v, SpectralField(grid, _half_to_full(th, grid)))


def resolve_dt(state: SimulationState, cfg: DissipationConfig, icfg: IntegratorConfig) -> float:
    """Fixed step size for a run; 'auto' uses the advective CFL estimate."""
    if not isinstance(icfg.dt, str):
        return float(icfg.dt)
    g = state.grid
    v1p = np.real(_fft.ifft2(state.v.u1.coeffs)) * g.N**2
    v2p = np.real(_fft.ifft2(state.v.u2.coeffs)) * g.N**2
    vmax = float(np.max(np.hypot(v1p, v2p)))
    rate = vmax * g.N / g.L
    if icfg.method == "erk4":
        rate += _Operator(g, cfg, icfg.variant).max_stiff_rate()
    if rate <= 0.0:
        return min(icfg.dt_max, icfg.t_end) if icfg.t_end > 0 else icfg.dt_max
    return min(icfg.cfl / rate, icfg.dt_max)


def step(state: SimulationState, cfg: DissipationConfig, icfg: IntegratorConfig) -> SimulationState:
    """One explicit step; raises BlowUpError on non-finite output."""
    g = state.grid
    dt = resolve_dt(state, cfg, icfg)
    op = _Operator(g, cfg, icfg.variant)
    v1, v2, th = _state_to_half(state, g)
    if op.state_mask is not None:
        v1, v2, th = v1 * op.state_mask, v2 * op.state_mask, th * op.state_mask
    nv1, nv2, nth = _advance(op, v1, v2, th, dt, icfg.method)
    if not (
        np.all(np.isfinite(nv1)) and np.all(np.isfinite(nv2)) and np.all(np.isfinite(nth))
    ):
        raise BlowUpError(state.t + dt, state)
    return _half_to_state(state.t + dt, nv1, nv2, nth, g)


class DissipationTracker:
    """Per-step trapezoid accumulation of the weighted dissipation channels.

    Sampling the channels only at the reporting cadence overcharges the
    stiff early transient badly; accumulating every step keeps the
    quadrature error at O(dt^2).  Channels are tracked at each requested
    Sobolev order; mollified runs measure the mollified fields.
    """

    _CHANNELS = (
        ("nu1", 0, 1),  # (name, component index, derivative axis)
        ("nu2", 0, 2),
        ("mu1", 1, 1),
        ("mu2", 1, 2),
        ("delta1", 2, 1),
        ("delta2", 2, 2),
    )

    def __init__(self, grid: Grid2D, cfg: DissipationConfig, variant: RhsVariant, orders):
        self.grid = grid
        self.orders = tuple(dict.fromkeys(int(o) for o in orders))
        colw = np.full(grid.half_shape[1], 2.0)
        colw[0] = 1.0
        colw[-1] = 1.0
        moll2 = 1.0
        if variant.kind == "mollified":
            m = mollifier_symbol((variant.eps**2) * grid.xi_sq_h)
            moll2 = m * m
        base = grid.L**2 * colw * moll2 * np.ones(grid.half_shape)
        self._weights = {}
        for name, comp, axis in self._CHANNELS:
            coeff = getattr(cfg, name)
            if coeff == 0.0:
                continue
            xi = grid.xi1h if axis == 1 else grid.xi2h
            for order in self.orders:
                w = coeff * base * xi**2 * (1.0 + grid.xi_sq_h) ** order
                self._weights[(name, order)] = w
        self._cum = {o: {name: 0.0 for name, _, _ in self._CHANNELS} for o in self.orders}
        self._last = None

    def _values(self, v1, v2, th):
        # overflow on a trajectory heading for blow-up is tolerated; the
        # stepper raises before any non-finite value is reported
        with np.errstate(over="ignore", invalid="ignore"):
            sq = (np.abs(v1) ** 2, np.abs(v2) ** 2, np.abs(th) ** 2)
            out = {o: {} for o in self.orders}
            for name, comp, _ in self._CHANNELS:
                for order in self.orders:
                    w = self._weights.get((name, order))
                    out[order][name] = 0.0 if w is None else float(np.sum(w * sq[comp]))
        return out

    def start(self, v1, v2, th):
        self._last = self._values(v1, v2, th)

    def accumulate(self, v1, v2, th, dt: float):
        cur = self._values(v1, v2, th)
        for order in self.orders:
            for name in self._cum[order]:
                self._cum[order][name] += 0.5 * dt * (
                    self._last[order][name] + cur[order][name]
                )
        self._last = cur

    def snapshot(self):
        return {o: dict(vals) for o, vals in self._cum.items()}


@dataclass
class RunResult:
    final_state: SimulationState
    dt: float
    n_steps: int
    sample_times: list
    tracker_samples: Optional[list] = None


def run(
    state0: SimulationState,
    cfg: DissipationConfig,
    icfg: IntegratorConfig,
    hooks: Iterable[Callable[[SimulationState], None]] = (),
    cadence: int = 1,
    tracker: Optional[DissipationTracker] = None,
) -> RunResult:
    """Iterate steps to t_end, invoking hooks every `cadence` steps.

    Hooks always see the initial and the final state.  A tracker, when
    given, accumulates dissipation integrals every step and is snapshot at
    each emission.  On blow-up the BlowUpError carries the partial
    RunResult in .partial.
    """
    if cadence < 1:
        raise ValueError(f"cadence must be >= 1, got {cadence}")
    g = state0.grid
    hooks = list(hooks)
    if state0.v.divergence_measure() > DRIFT_ALARM:
        raise ValueError("initial velocity is not divergence-free")
    dt = resolve_dt(state0, cfg, icfg)
    if icfg.t_end == 0:
        n_steps = 0
    else:
        n_steps = max(1, math.ceil(icfg.t_end / dt - 1e-12))
        if isinstance(icfg.dt, str):
            dt = icfg.t_end / n_steps  # land exactly on t_end for auto steps

    op = _Operator(g, cfg, icfg.variant)
    v1, v2, th = _state_to_half(state0, g)
    if op.state_mask is not None:
        v1, v2, th = v1 * op.state_mask, v2 * op.state_mask, th * op.state_mask
    if tracker is not None:
        tracker.start(v1, v2, th)

    sample_times = []
    tracker_samples = [] if tracker is not None else None

    def emit(k, a1, a2, at):
        t = state0.t + k * dt
        sample_times.append(t)
        if tracker is not None:
            tracker_samples.append(tracker.snapshot())
        if hooks:
            snap = _half_to_state(t, a1, a2, at, g)
            for h in hooks:
                h(snap)

    emit(0, v1, v2, th)
    for k in range(1, n_steps + 1):
        p1, p2, pt = v1, v2, th
        v1, v2, th = _advance(op, v1, v2, th, dt, icfg.method)
        if not (
            np.all(np.isfinite(v1)) and np.all(np.isfinite(v2)) and np.all(np.isfinite(th))
        ):
            last = _half_to_state(state0.t + (k - 1) * dt, p1, p2, pt, g)
            partial = RunResult(last, dt, k - 1, sample_times, tracker_samples)
            raise BlowUpError(state0.t + k * dt, last, partial)
        if tracker is not None:
            tracker.accumulate(v1, v2, th, dt)
        if k % cadence == 0 or k == n_steps:
            emit(k, v1, v2, th)
    return RunResult(
        _half_to_state(state0.t + n_steps * dt, v1, v2, th, g),
        dt,
        n_steps,
        sample_times,
        tracker_samples,
    )
