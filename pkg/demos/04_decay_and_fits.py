"""Large-time behavior: kernel rates, decay series and model fits.

A linear anisotropic run decays with the per-mode rate a(xi); the
measured norm series recovers the slowest excited rate.  On the periodic
box every mode is damped, so decay is exponential; the logarithmic rate
log(e+t)^(-m/2) expected on the whole plane cannot appear at finite box
size, and the fit comparison below shows exactly that divergence.  The box
length L controls how small the slowest rate is.
"""

import numpy as np

from aniso import DissipationConfig, IntegratorConfig, SimulationState
from aniso.diagnostics import build_reports, decay_fit, decay_series, sample_state
from aniso.integrate import DissipationTracker, RhsVariant, linear_propagator, run
from aniso.spectral import Grid2D, SpectralField, VectorField2, to_spectral

cfg = DissipationConfig(nu2=1.0, mu1=1.0)

print("== slowest-mode rates versus box size ==")
for L in (2 * np.pi, 4 * np.pi, 8 * np.pi):
    grid = Grid2D(32, L=L)
    a = linear_propagator(cfg, grid, 1.0).a_xi
    nonzero = np.abs(a[a != 0.0])
    print(f"  L = {L:6.3f}: slowest |a| on the lattice = {np.min(nonzero):.4f}")

print("\n== linear run: fitted exponential rate matches the kernel ==")
grid = Grid2D(32)
x1, _ = grid.meshgrid()
v0 = VectorField2(
    SpectralField.zeros(grid), to_spectral(grid, np.cos(x1) + 0.5 * np.cos(2 * x1))
)
state = SimulationState(0.0, v0, SpectralField.zeros(grid))
reports = []
tracker = DissipationTracker(grid, cfg, RhsVariant(), orders=(0, 2))
res = run(
    state,
    cfg,
    IntegratorConfig(dt=1e-2, t_end=4.0),
    hooks=[lambda s: reports.append(sample_state(s, cfg, 2))],
    cadence=10,
    tracker=tracker,
)
build_reports(reports, res.tracker_samples)
series = decay_series(reports, 2)
tail = series.times >= 2.0
fit = decay_fit(series.times[tail], series.v_hm1[tail], "exp")
prop = linear_propagator(cfg, grid, 1.0)
print(f"  fitted rate {fit.params['rate']:+.4f} vs slowest kernel rate {-abs(prop.a_xi[1,0]):+.4f}")
print(f"  cumulative integral of f: last-decade share {series.last_decade_fraction():.2e}")

print("\n== log-power fit on the same series (whole-plane reference shape) ==")
keep = (series.times > 0.2) & (series.v_hm1 > 0)
fit_log = decay_fit(series.times[keep], series.v_hm1[keep], "log_power", m=3)
print(
    f"  fitted exponent {fit_log.params['exponent']:.2f} vs reference {-1.5:.2f}, "
    f"residual {fit_log.residual:.3f}"
)
print("  the poor fit is expected: the box forces exponential decay.")

print("\n== conserved scalar modes on the box ==")
from aniso.model import neutral_theta_mask, preset_config

for name in ("thm2-d1", "thm2-d2"):
    mask = neutral_theta_mask(Grid2D(32), preset_config(name, lam=1.0))
    print(f"  {name}: {int(mask.sum())} exactly conserved theta modes out of {mask.size}")
print(
    "  the d1 pattern keeps the whole xi1 = 0 axis; plane-emulating decay\n"
    "  studies start it empty (initial.theta.exclude_linearly_neutral)."
)
