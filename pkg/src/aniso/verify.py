"""Self-contained property suites behind `aniso verify <suite>`.

Each suite re-checks its module's structural guarantees at small size and
returns machine-readable results; the pytest tree exercises the same
properties plus frozen oracle values at full acceptance scale.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from .diagnostics import bootstrap_monitor, build_reports, decay_fit, sample_state
from .integrate import IntegratorConfig, linear_propagator, run
from .model import (
    DissipationConfig,
    RegularityRecipe,
    SimulationState,
    preset_config,
    rhs_full,
    rhs_mollified,
    synthesize_divfree_velocity,
    synthesize_field,
)
from .norms import (
    BesovParams,
    INEQUALITY_NAMES,
    besov_norm,
    chi_profile,
    inequality_probe,
    lp_decompose,
    phi_profile,
    sobolev_norm,
    sqrtL_norm,
    vector_sobolev_norm,
)
from .spectral import (
    Grid2D,
    SpectralField,
    VectorField2,
    bessel_potential,
    derivative,
    fourier_truncate,
    fractional_laplacian,
    l2_inner,
    leray_project,
    mollify,
    to_physical,
    to_spectral,
)

__all__ = ["SUITES", "run_suite", "CheckResult", "random_field", "random_divfree"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check(results: List[CheckResult], name: str, value: float, bound: float):
    results.append(CheckResult(name, value <= bound, f"{value:.3e} <= {bound:.0e}"))


def random_field(grid: Grid2D, seed: int, s: float = 3.0, amplitude: float = 1.0) -> SpectralField:
    return synthesize_field(grid, RegularityRecipe(s, amplitude, 0.5, seed))


def random_divfree(grid: Grid2D, seed: int, s: float = 3.0, amplitude: float = 1.0) -> VectorField2:
    return synthesize_divfree_velocity(grid, RegularityRecipe(s, amplitude, 0.5, seed))


# ---------------------------------------------------------------------------


def suite_spectral() -> List[CheckResult]:
    out: List[CheckResult] = []
    g = Grid2D(32)

    f = random_field(g, 11)
    rt = to_spectral(g, to_physical(f))
    _check(out, "roundtrip", float(np.max(np.abs(rt.coeffs - f.coeffs))), 1e-12)

    # Parseval: quadrature energy equals the weighted coefficient sum
    phys = to_physical(f)
    quad = float(np.sum(phys**2) * g.cell_area)
    coeff_sum = sobolev_norm(f, 0.0) ** 2
    _check(out, "parseval", abs(quad - coeff_sum) / coeff_sum, 1e-10)

    # diagonal operators commute
    a = fractional_laplacian(bessel_potential(f, 1.5), 0.5)
    b = bessel_potential(fractional_laplacian(f, 0.5), 1.5)
    _check(out, "multiplier-commute", float(np.max(np.abs(a.coeffs - b.coeffs))), 1e-12)

    u = VectorField2(random_field(g, 12), random_field(g, 13))
    p = leray_project(u)
    _check(out, "leray-divfree", p.divergence_measure(), 1e-12)
    pp = leray_project(p)
    _check(
        out,
        "leray-idempotent",
        float(max(np.max(np.abs(pp.u1.coeffs - p.u1.coeffs)), np.max(np.abs(pp.u2.coeffs - p.u2.coeffs)))),
        1e-12,
    )

    # truncation error bound with constant one
    worst = 0.0
    for seed in range(5):
        h = random_field(g, 100 + seed, s=1.0)
        for s1 in (0.0, 0.5, 1.0, 2.0):
            for s2 in (0.0, 0.5, 1.0, 2.0):
                for n in (2.0, 4.0, 8.0):
                    lhs = sobolev_norm(fourier_truncate(h, n) - h, s1)
                    rhs = n**-s2 * sobolev_norm(h, s1 + s2)
                    if rhs > 0:
                        worst = max(worst, lhs / rhs)
    _check(out, "truncation-bound", worst, 1.0 + 1e-12)

    # vorticity identities on certified divergence-free fields
    v = random_divfree(g, 14)
    w = derivative(v.u2, 1) - derivative(v.u1, 2)
    lhs = math.hypot(sobolev_norm(v.u1, 1.0, True), sobolev_norm(v.u2, 1.0, True))
    rhs = sobolev_norm(w, 0.0)
    _check(out, "vorticity-norm", abs(lhs - rhs) / rhs, 1e-10)
    # grad w = (Lap v2, -Lap v1), i.e. d1 w + |xi|^2 v2 = 0 and d2 w - |xi|^2 v1 = 0
    lap1 = fractional_laplacian(v.u1, 2.0)
    lap2 = fractional_laplacian(v.u2, 2.0)
    res = max(
        float(np.max(np.abs(derivative(w, 1).coeffs + lap2.coeffs))),
        float(np.max(np.abs(derivative(w, 2).coeffs - lap1.coeffs))),
    )
    scale = max(float(np.max(np.abs(lap1.coeffs))), float(np.max(np.abs(lap2.coeffs))))
    _check(out, "vorticity-gradient", res / scale, 1e-10)

    # mollifier: contraction and small-eps convergence
    norms = [sobolev_norm(mollify(f, eps) - f, 0.0) / sobolev_norm(f, 0.0) for eps in (1.0, 0.1, 0.01, 0.001)]
    _check(out, "mollify-converges", norms[-1], 1e-3)
    contr = max(sobolev_norm(mollify(random_field(g, 40 + k), 0.3), 0.0) / sobolev_norm(random_field(g, 40 + k), 0.0) for k in range(5))
    _check(out, "mollify-contraction", contr, 1.0 + 1e-14)
    return out


def suite_model() -> List[CheckResult]:
    out: List[CheckResult] = []
    g = Grid2D(32)
    cfg = preset_config("thm2-d2", lam=1.3)

    rest = SimulationState.rest(g)
    dv, dth = rhs_full(rest, cfg)
    _check(
        out,
        "rest-fixed-point",
        float(max(np.max(np.abs(dv.u1.coeffs)), np.max(np.abs(dv.u2.coeffs)), np.max(np.abs(dth.coeffs)))),
        0.0,
    )

    v0 = random_divfree(g, 21, amplitude=0.7)
    th0 = random_field(g, 22, amplitude=0.7)
    state = SimulationState(0.0, v0, th0)

    inviscid = DissipationConfig(lambda1=0.8, lambda2=0.8)
    dv, dth = rhs_full(state, inviscid)
    prod = l2_inner(dv.u1, v0.u1) + l2_inner(dv.u2, v0.u2) + l2_inner(dth, th0)
    scale = vector_sobolev_norm(v0, 0.0) ** 2 + sobolev_norm(th0, 0.0) ** 2
    _check(out, "inviscid-conservation", abs(prod) / scale, 1e-10)

    # mollified tendency approaches the plain one on band-limited data
    vb = VectorField2(fourier_truncate(v0.u1, 6.0), fourier_truncate(v0.u2, 6.0))
    tb = fourier_truncate(th0, 6.0)
    sb = SimulationState(0.0, vb, tb)
    f_dv, f_dt = rhs_full(sb, cfg)
    m_dv, m_dt = rhs_mollified(sb, cfg, 1e-3)
    num = math.sqrt(
        sobolev_norm(f_dv.u1 - m_dv.u1, 0.0) ** 2
        + sobolev_norm(f_dv.u2 - m_dv.u2, 0.0) ** 2
        + sobolev_norm(f_dt - m_dt, 0.0) ** 2
    )
    den = math.sqrt(
        sobolev_norm(f_dv.u1, 0.0) ** 2 + sobolev_norm(f_dv.u2, 0.0) ** 2 + sobolev_norm(f_dt, 0.0) ** 2
    )
    _check(out, "mollified-limit", num / den, 1e-3)

    # synthesized data: certified divergence-free, deterministic envelope
    meas = max(random_divfree(g, 30 + k).divergence_measure() for k in range(5))
    _check(out, "synth-divfree", meas, 1e-12)
    n1 = sobolev_norm(synthesize_field(g, RegularityRecipe(1.0, 2.0, 0.5, 5)), 1.0)
    n2 = sobolev_norm(synthesize_field(g, RegularityRecipe(1.0, 4.0, 0.5, 5)), 1.0)
    _check(out, "synth-linearity", abs(n2 - 2 * n1) / n2, 1e-12)
    return out


def suite_integration() -> List[CheckResult]:
    out: List[CheckResult] = []
    g = Grid2D(32)
    cfg = DissipationConfig(nu2=1.0, mu1=4.0)

    prop1 = linear_propagator(cfg, g, 0.3)
    prop2 = linear_propagator(cfg, g, 0.7)
    semi = np.max(
        np.abs(prop1.velocity_factor() * prop2.velocity_factor() - prop1.velocity_factor(1.0))
    )
    _check(out, "semigroup", float(semi), 1e-12)

    # two-sided kernel bound, lattice-wide (viscosity pair mu1, nu2)
    ok = True
    for t in (0.1, 1.0, 10.0):
        e = np.exp(prop1.a_xi * t)
        lower = np.exp(-max(cfg.mu1, cfg.nu2) * g.xi_sq * t)
        upper = np.exp(-0.5 * min(cfg.mu1, cfg.nu2) * g.xi_sq * t)
        ok &= bool(np.all(e >= lower - 1e-15) and np.all(e <= upper + 1e-15))
    out.append(CheckResult("kernel-bounds", ok, "two-sided bound at all lattice points"))

    # integrating factor is exact on the linear problem: a single shear mode
    # self-advects to zero and theta = cos(2 x1) is not advected by it
    X1, _ = g.meshgrid()
    v = VectorField2(to_spectral(g, 0 * X1), to_spectral(g, np.cos(X1)))
    th = to_spectral(g, np.cos(2 * X1))
    state = SimulationState(0.0, v, th)
    cfg_lin = DissipationConfig(nu2=1.0, mu1=4.0, delta1=2.0)
    res = run(state, cfg_lin, IntegratorConfig(method="if_rk4", dt=0.5, t_end=2.0))
    pv, pt = linear_propagator(cfg_lin, g, 2.0).apply(v, th)
    err = max(
        float(np.max(np.abs(res.final_state.v.u2.coeffs - pv.u2.coeffs))),
        float(np.max(np.abs(res.final_state.theta.coeffs - pt.coeffs))),
    )
    _check(out, "if-linear-exact", err, 1e-12)

    # deterministic reruns
    cfg2 = preset_config("thm1")
    st = SimulationState(0.0, random_divfree(g, 52, amplitude=0.4), random_field(g, 53, amplitude=0.4))
    r1 = run(st, cfg2, IntegratorConfig(dt=1e-2, t_end=0.1))
    r2 = run(st, cfg2, IntegratorConfig(dt=1e-2, t_end=0.1))
    same = np.array_equal(r1.final_state.theta.coeffs, r2.final_state.theta.coeffs)
    out.append(CheckResult("deterministic", bool(same), "bit-identical rerun"))
    return out


def suite_norms(probe_csv: Optional[Path] = None) -> List[CheckResult]:
    out: List[CheckResult] = []
    g = Grid2D(32)

    # telescoping partition at every lattice point
    r = g.xi_abs.ravel()
    part = chi_profile(r) + sum(phi_profile(r * 2.0**-j) for j in range(0, 12))
    _check(out, "partition-of-unity", float(np.max(np.abs(part - 1.0))), 1e-12)

    f = random_field(g, 61)
    blocks = lp_decompose(f)
    rec = blocks.reconstruct()
    _check(out, "lp-reconstruction", sobolev_norm(rec - f, 0.0) / sobolev_norm(f, 0.0), 1e-10)
    _check(out, "lp-supports", blocks.support_defect(), 0.0)

    # B^0_{2,2} vs L^2: constant ratio over a fixed-envelope corpus
    ratios = []
    for seed in range(20):
        h = random_field(g, 400 + seed)
        ratios.append(besov_norm(h, BesovParams(0.0, 2.0, 2.0)) / sobolev_norm(h, 0.0))
    spread = (max(ratios) - min(ratios)) / max(ratios)
    _check(out, "besov-l2-ratio-spread", spread, 1e-8)

    val, pmax = sqrtL_norm(to_spectral(g, np.full((g.N, g.N), 2.0)))
    _check(out, "sqrtL-constant", abs(val - 2.0 * g.L), 1e-10)

    rows = []
    worst_ratio = {name: 0.0 for name in INEQUALITY_NAMES}
    for seed in range(10):
        h1 = random_field(g, 500 + seed)
        h2 = random_field(g, 600 + seed)
        h3 = random_field(g, 700 + seed)
        vv = random_divfree(g, 800 + seed)
        probes = {
            "kato_ponce": (h1, h2),
            "kukavica_wang_ziane": (vv, h2),
            "cao_wu": (h1, h2, h3),
            "kozono_wadade": (h1,),
            "brezis_gallouet": (h1,),
            "gagliardo_nirenberg": (h1,),
        }
        for name, args in probes.items():
            res = inequality_probe(name, *args)
            worst_ratio[name] = max(worst_ratio[name], res["ratio"])
            rows.append((name, seed, g.N, res["lhs"], res["rhs_without_constant"], res["ratio"]))
    finite = all(math.isfinite(v) for v in worst_ratio.values())
    out.append(
        CheckResult(
            "probe-ratios-finite",
            finite,
            "; ".join(f"{k}={v:.3f}" for k, v in worst_ratio.items()),
        )
    )
    if probe_csv is not None:
        with open(probe_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["inequality", "seed", "N", "lhs", "rhs", "ratio"])
            for row in rows:
                writer.writerow([row[0], row[1], row[2], repr(row[3]), repr(row[4]), repr(row[5])])
    return out


def suite_diagnostics() -> List[CheckResult]:
    out: List[CheckResult] = []
    g = Grid2D(32)

    # conservative budget on an inviscid run
    cfg = DissipationConfig(lambda1=1.0, lambda2=1.0)
    st = SimulationState(0.0, random_divfree(g, 71, amplitude=0.4), random_field(g, 72, amplitude=0.4))
    reports = []
    run(
        st,
        cfg,
        IntegratorConfig(method="erk4", dt=1e-3, t_end=0.2),
        hooks=[lambda s: reports.append(sample_state(s, cfg, 0))],
        cadence=10,
    )
    build_reports(reports)
    _check(out, "inviscid-budget", max(abs(r.budget_residual) for r in reports), 1e-8)

    # monitored rest run holds trivially
    cfg2 = preset_config("thm2-d2")
    rest_reports = []
    run(
        SimulationState.rest(g),
        cfg2,
        IntegratorConfig(dt=1e-2, t_end=0.1),
        hooks=[lambda s: rest_reports.append(sample_state(s, cfg2, 2))],
    )
    build_reports(rest_reports)
    verdict = bootstrap_monitor(rest_reports, 2, 1.0)
    out.append(CheckResult("rest-bootstrap", verdict.held, verdict.label))

    # synthetic exponential fit
    t = np.linspace(0.0, 5.0, 40)
    fit = decay_fit(t, np.exp(-t), "exp")
    ok = abs(fit.params["rate"] + 1.0) < 1e-10 and fit.residual < 1e-10
    out.append(CheckResult("exp-fit", ok, f"rate={fit.params['rate']:.12f}"))
    return out


SUITES: Dict[str, Callable[[], List[CheckResult]]] = {
    "spectral": suite_spectral,
    "model": suite_model,
    "integration": suite_integration,
    "norms": suite_norms,
    "diagnostics": suite_diagnostics,
}


def run_suite(name: str, out_dir: Optional[Path] = None) -> List[CheckResult]:
    if name == "all":
        results = []
        for key in ("spectral", "model", "integration", "norms", "diagnostics"):
            results.extend(run_suite(key, out_dir))
        return results
    if name not in SUITES:
        raise ValueError(
            f"unknown suite {name!r}; valid suites: spectral, model, integration, norms, diagnostics, all"
        )
    if name == "norms":
        csv_path = None
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)
            csv_path = out_dir / "probe_report.csv"
        return suite_norms(csv_path)
    return SUITES[name]()
