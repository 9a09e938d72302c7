"""Energy functionals, budget residuals, stability monitoring, decay fits.

The L^2 balance integrated by `energy_budget` is

    d/dt (|v|_2^2 + |th|_2^2) + 2 [nu2 |d2 Jv1|^2 + mu1 |d1 Jv2|^2 + ...] = 0

(valid when lambda1 = lambda2 so the coupling terms cancel; J is the
mollifier for mollified runs and the identity otherwise).  Every
coefficient that is switched on contributes its channel, so budgets close
for the uninvestigated coefficient patterns as well; the CSV stream names
the four channels of the stability cases and folds the rest into cum_diss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .integrate import RhsVariant
from .model import DissipationConfig, SimulationState
from .norms import sobolev_norm, vector_sobolev_norm
from .spectral import SpectralField, derivative, mollify

__all__ = [
    "EnergyReport",
    "DecaySeries",
    "BootstrapVerdict",
    "FitResult",
    "sample_state",
    "build_reports",
    "energy_budget",
    "bootstrap_monitor",
    "decay_series",
    "decay_fit",
    "CSV_COLUMNS",
    "report_csv_rows",
]

EPS_FLOOR = 1e-30

CHANNEL_NAMES = ("nu1", "nu2", "mu1", "mu2", "delta1", "delta2")

CSV_COLUMNS = (
    "t",
    "l2_energy",
    "hm_energy_m",
    "diss_nu2",
    "diss_mu1",
    "diss_d1",
    "diss_d2",
    "cum_diss",
    "budget_residual",
    "f_t",
    "v_hm1",
    "theta_hm1",
)


@dataclass
class EnergyReport:
    """Per-sample record of energies, weighted dissipation channels at H^m,
    their cumulative time integrals, and the L^2 budget residual."""

    t: float
    m: int
    l2_energy: float
    hm_energy: float
    diss_hm: Dict[str, float]
    diss_l2: Dict[str, float]
    cum_diss_hm: Dict[str, float] = field(default_factory=dict)
    cum_diss_l2: Dict[str, float] = field(default_factory=dict)
    budget_residual: float = 0.0
    f_t: float = math.nan
    v_hm1: float = math.nan
    theta_hm1: float = math.nan

    @property
    def cum_diss_total(self) -> float:
        return sum(self.cum_diss_hm.values())

    @property
    def e_m(self) -> float:
        """Instantaneous contribution to the monitored energy form."""
        return self.hm_energy + 2.0 * self.cum_diss_total


def _hm_sq(f: SpectralField, m: float) -> float:
    return sobolev_norm(f, m) ** 2


def sample_state(
    state: SimulationState,
    cfg: DissipationConfig,
    m: int,
    variant: RhsVariant = RhsVariant(),
) -> EnergyReport:
    """Instantaneous energies and weighted dissipation channels of one state."""
    v, th = state.v, state.theta
    if variant.kind == "mollified":
        jv1 = mollify(v.u1, variant.eps)
        jv2 = mollify(v.u2, variant.eps)
        jth = mollify(th, variant.eps)
    else:
        jv1, jv2, jth = v.u1, v.u2, th

    def channels(order: float) -> Dict[str, float]:
        out = {}
        out["nu1"] = cfg.nu1 * _hm_sq(derivative(jv1, 1), order) if cfg.nu1 else 0.0
        out["nu2"] = cfg.nu2 * _hm_sq(derivative(jv1, 2), order) if cfg.nu2 else 0.0
        out["mu1"] = cfg.mu1 * _hm_sq(derivative(jv2, 1), order) if cfg.mu1 else 0.0
        out["mu2"] = cfg.mu2 * _hm_sq(derivative(jv2, 2), order) if cfg.mu2 else 0.0
        out["delta1"] = cfg.delta1 * _hm_sq(derivative(jth, 1), order) if cfg.delta1 else 0.0
        out["delta2"] = cfg.delta2 * _hm_sq(derivative(jth, 2), order) if cfg.delta2 else 0.0
        return out

    l2_energy = 0.5 * (vector_sobolev_norm(v, 0.0) ** 2 + sobolev_norm(th, 0.0) ** 2)
    hm_energy = vector_sobolev_norm(v, float(m)) ** 2 + sobolev_norm(th, float(m)) ** 2

    diss_hm = channels(float(m))
    rep = EnergyReport(
        t=state.t,
        m=m,
        l2_energy=l2_energy,
        hm_energy=hm_energy,
        diss_hm=diss_hm,
        diss_l2=dict(diss_hm) if m == 0 else channels(0.0),
    )
    if m >= 2:
        rep.f_t = (
            sobolev_norm(derivative(v.u1, 2), m - 2, homogeneous=True) ** 2
            + sobolev_norm(derivative(v.u2, 1), m - 2, homogeneous=True) ** 2
            + sobolev_norm(th, m - 1, homogeneous=True) ** 2
        )
        rep.v_hm1 = vector_sobolev_norm(v, m - 1, homogeneous=True)
        rep.theta_hm1 = sobolev_norm(th, m - 1, homogeneous=True)
    return rep


def build_reports(
    reports: List[EnergyReport],
    tracker_samples: Optional[List[dict]] = None,
) -> List[EnergyReport]:
    """Fill cumulative dissipation integrals and L^2 budget residuals in place.

    Without tracker samples the integrals are trapezoids over the report
    times themselves, which is exact-order only when every step was
    sampled; a per-step tracker (see integrate.DissipationTracker) supplies
    integrals that do not depend on the reporting cadence.
    """
    if not reports:
        return reports
    if tracker_samples is not None:
        if len(tracker_samples) != len(reports):
            raise ValueError(
                f"{len(tracker_samples)} tracker snapshots for {len(reports)} reports"
            )
        m = reports[0].m
        for rep, snap in zip(reports, tracker_samples):
            rep.cum_diss_hm = dict(snap[m])
            rep.cum_diss_l2 = dict(snap[0])
    else:
        cum_hm = {k: 0.0 for k in CHANNEL_NAMES}
        cum_l2 = {k: 0.0 for k in CHANNEL_NAMES}
        reports[0].cum_diss_hm = dict(cum_hm)
        reports[0].cum_diss_l2 = dict(cum_l2)
        for prev, cur in zip(reports, reports[1:]):
            w = 0.5 * (cur.t - prev.t)
            for k in CHANNEL_NAMES:
                cum_hm[k] += w * (prev.diss_hm[k] + cur.diss_hm[k])
                cum_l2[k] += w * (prev.diss_l2[k] + cur.diss_l2[k])
            cur.cum_diss_hm = dict(cum_hm)
            cur.cum_diss_l2 = dict(cum_l2)
    e0 = 2.0 * reports[0].l2_energy
    denom = max(e0, EPS_FLOOR)
    for rep in reports:
        e = 2.0 * rep.l2_energy
        rep.budget_residual = (e - e0 + 2.0 * sum(rep.cum_diss_l2.values())) / denom
    return reports


def _ensure_built(reports: Sequence[EnergyReport]):
    if any(len(r.cum_diss_hm) == 0 for r in reports):
        build_reports(list(reports))


def energy_budget(reports: Sequence[EnergyReport], cfg: DissipationConfig) -> np.ndarray:
    """L^2 budget residual series over uniformly sampled reports."""
    if len(reports) < 2:
        raise ValueError("need at least 2 samples to form a budget")
    _ensure_built(reports)
    return np.array([r.budget_residual for r in reports])


@dataclass
class BootstrapVerdict:
    held: bool
    violation_time: Optional[float]
    eps0: float
    c1_hat: float
    smallness_ok: bool  # whether 4 * c1_hat * eps0 <= 1

    @property
    def label(self) -> str:
        return "held" if self.held else f"violated(t={self.violation_time:.6g})"


def bootstrap_monitor(reports: Sequence[EnergyReport], m: int, eps0: float) -> BootstrapVerdict:
    """Check E_m(t) <= 2 eps0^2 along the run and fit the cubic-growth constant.

    E_m(t) is the running maximum of the H^m energy plus twice the
    cumulative dissipation.  The empirical constant c1_hat is the largest
    quotient (E_m(t) - E_m(0)) / E_m(t)^(3/2).
    """
    if not reports:
        raise ValueError("empty trajectory")
    if any(r.m != m for r in reports):
        raise ValueError("reports were sampled at a different Sobolev order")
    _ensure_built(reports)
    if reports[0].hm_energy > eps0**2 * (1.0 + 1e-12):
        raise ValueError(
            f"initial energy {reports[0].hm_energy:.6g} exceeds eps0^2 = {eps0**2:.6g}"
        )
    bound = 2.0 * eps0**2
    running = 0.0
    e0 = None
    held, violation_time = True, None
    c1 = 0.0
    for rep in reports:
        running = max(running, rep.hm_energy)
        e_m = running + 2.0 * rep.cum_diss_total
        if e0 is None:
            e0 = e_m
        if e_m > bound and held:
            held, violation_time = False, rep.t
        if e_m > 0:
            c1 = max(c1, (e_m - e0) / e_m**1.5)
    return BootstrapVerdict(held, violation_time, eps0, c1, 4.0 * c1 * eps0 <= 1.0)


@dataclass
class DecaySeries:
    times: np.ndarray
    f_values: np.ndarray
    v_hm1: np.ndarray
    theta_hm1: np.ndarray
    cum_f: np.ndarray
    lipschitz_max: float
    superlinear_late: bool

    def last_decade_fraction(self) -> float:
        """Share of the cumulative integral of f gathered over [T/10, T]."""
        total = self.cum_f[-1]
        if total <= 0:
            return 0.0
        t_lo = self.times[-1] / 10.0
        idx = int(np.searchsorted(self.times, t_lo))
        idx = min(idx, len(self.times) - 1)
        return float((total - self.cum_f[idx]) / total)


def decay_series(reports: Sequence[EnergyReport], m: int) -> DecaySeries:
    """Collect the decay quantity f(t) and cumulative integral; m >= 2 only."""
    if m < 2:
        raise ValueError(f"the decay quantity needs m >= 2, got m={m}")
    if any(r.m != m for r in reports):
        raise ValueError("reports were sampled at a different Sobolev order")
    times = np.array([r.t for r in reports])
    f = np.array([r.f_t for r in reports])
    v1 = np.array([r.v_hm1 for r in reports])
    t1 = np.array([r.theta_hm1 for r in reports])
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(times))])
    if len(times) > 1:
        quotients = np.diff(f) / np.diff(times)
        lipschitz = float(np.max(np.abs(quotients)))
    else:
        lipschitz = 0.0
    # late superlinear growth of the integral: f larger on average over the
    # second half of the run than overall
    superlinear = False
    if len(times) > 3 and cum[-1] > 0:
        half = int(np.searchsorted(times, times[-1] / 2.0))
        mean_all = cum[-1] / max(times[-1] - times[0], EPS_FLOOR)
        late = (cum[-1] - cum[half]) / max(times[-1] - times[half], EPS_FLOOR)
        superlinear = bool(late > mean_all)
    return DecaySeries(times, f, v1, t1, cum, lipschitz, superlinear)


@dataclass
class FitResult:
    model: str
    params: Dict[str, float]
    residual: float
    info: Dict[str, float] = field(default_factory=dict)


def decay_fit(
    times: Sequence[float],
    values: Sequence[float],
    model: str,
    m: Optional[int] = None,
) -> FitResult:
    """Least-squares fit of log(value) against a decay model.

    Models: "exp" (log y = c + rate t), "power" (log y = c + e log t) and
    "log_power" (log y = c + e log log(e+t)); for the latter the fitted
    exponent is reported next to the reference slope -m/2.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    keep = y > 0
    if model in ("power",):
        keep &= t > 0
    t, y = t[keep], y[keep]
    if len(t) < 10:
        raise ValueError("no decay to fit: need at least 10 positive samples")
    if model in ("power", "log_power"):
        tpos = t[t > 0]
        if len(tpos) == 0 or tpos.max() / tpos.min() < 10.0 - 1e-9:
            raise ValueError("no decay to fit: samples must span a decade of t")
    logy = np.log(y)
    if model == "exp":
        a = np.vstack([np.ones_like(t), t]).T
        names = ("log_prefactor", "rate")
    elif model == "power":
        a = np.vstack([np.ones_like(t), np.log(t)]).T
        names = ("log_prefactor", "exponent")
    elif model == "log_power":
        a = np.vstack([np.ones_like(t), np.log(np.log(math.e + t))]).T
        names = ("log_prefactor", "exponent")
    else:
        raise ValueError(f"unknown decay model {model!r}")
    coef, *_ = np.linalg.lstsq(a, logy, rcond=None)
    res = logy - a @ coef
    spread = float(np.sqrt(np.mean((logy - np.mean(logy)) ** 2)))
    residual = float(np.sqrt(np.mean(res**2))) / max(1.0, spread)
    out = FitResult(model, dict(zip(names, coef)), residual)
    if model == "log_power" and m is not None:
        out.info["reference_exponent"] = -m / 2.0
    return out


def report_csv_rows(reports: Sequence[EnergyReport]):
    """Rows for the fixed-column CSV stream."""
    for r in reports:
        yield (
            r.t,
            r.l2_energy,
            r.hm_energy,
            r.diss_hm["nu2"],
            r.diss_hm["mu1"],
            r.diss_hm["delta1"],
            r.diss_hm["delta2"],
            r.cum_diss_total,
            r.budget_residual,
            r.f_t,
            r.v_hm1,
            r.theta_hm1,
        )
