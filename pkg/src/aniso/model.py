"""Boussinesq right-hand sides with direction-selective dissipation.

The evolved unknowns are a divergence-free velocity pair v = (v1, v2) and an
active scalar theta on the periodic box, written around the motionless
linearly stratified state so the coupling enters as +lambda1 * theta e2 in
the vertical momentum equation and -lambda2 * v2 in the scalar equation:

    dt v1 + v.grad v1 = nu1 d11 v1 + nu2 d22 v1            (pressure projected out)
    dt v2 + v.grad v2 = mu1 d11 v2 + mu2 d22 v2 + lambda1 theta
    dt theta + v.grad theta + lambda2 v2 = delta1 d11 theta + delta2 d22 theta

Three right-hand sides are provided: the plain system, a spectrally
truncated variant (nonlinear terms confined to the ball |xi| <= n), and a
mollified variant (every nonlinear factor smoothed twice, dissipation
sandwiched between mollifiers, coupling terms left alone).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .spectral import (
    Grid2D,
    SpectralField,
    VectorField2,
    _check_same_grid,
    derivative,
    fourier_truncate,
    leray_project,
    mollifier_symbol,
    mollify,
)

__all__ = [
    "DissipationConfig",
    "SimulationState",
    "RegularityRecipe",
    "PRESET_PATTERNS",
    "preset_config",
    "advect",
    "rhs_full",
    "rhs_truncated",
    "rhs_mollified",
    "synthesize_field",
    "synthesize_divfree_velocity",
    "neutral_theta_mask",
]

_COEFF_NAMES = ("nu1", "nu2", "mu1", "mu2", "delta1", "delta2")


@dataclass(frozen=True)
class DissipationConfig:
    """The eight coefficients selecting which member of the family is run."""

    nu1: float = 0.0
    nu2: float = 0.0
    mu1: float = 0.0
    mu2: float = 0.0
    delta1: float = 0.0
    delta2: float = 0.0
    lambda1: float = 0.0
    lambda2: float = 0.0

    def __post_init__(self):
        for name in _COEFF_NAMES:
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")

    def is_inviscid(self) -> bool:
        return all(getattr(self, name) == 0.0 for name in _COEFF_NAMES)


# Sparsity patterns: which coefficients are switched on (value 1.0) by name.
# "thm1" is the well-posedness case (vertical viscosity on v1, horizontal on
# v2, no scalar diffusion); "thm2-d?" add one direction of scalar diffusion;
# "stab-?" are the stability-table rows; "open-?" the uninvestigated cases.
PRESET_PATTERNS = {
    "thm1": ("nu2", "mu1"),
    "thm2-d1": ("nu2", "mu1", "delta1"),
    "thm2-d2": ("nu2", "mu1", "delta2"),
    "stab-1": ("nu2", "mu1", "delta1"),
    "stab-2": ("nu2", "mu1", "delta2"),
    "stab-3": ("nu2", "mu2", "delta1"),
    "stab-4": ("nu1", "mu1", "delta2"),
    "stab-5": ("nu1", "mu1", "delta1"),
    "open-A": ("nu1", "nu2", "delta2"),
    "open-B": ("mu1", "mu2", "delta1"),
    "open-C": ("nu2", "mu2", "delta2"),
    "open-D": ("nu1", "mu2", "delta1"),
    "open-E": ("nu1", "mu2", "delta2"),
    "open-F": ("nu1", "nu2", "mu1"),
    "open-G": ("nu1", "nu2", "mu2"),
    "open-H": ("nu1", "mu1", "mu2"),
    "open-I": ("nu2", "mu1", "mu2"),
}


def preset_config(
    name: str,
    lam: float = 1.0,
    lambda1: float | None = None,
    lambda2: float | None = None,
    strength: float = 1.0,
) -> DissipationConfig:
    """Build a named coefficient pattern.

    Positive pattern entries take the value `strength`.  For "thm1" the
    couplings default to buoyancy form (lambda1=1, lambda2=0) and may be set
    freely; every other preset is a perturbation run with lambda1 = lambda2
    = lam, and the "thm2-*" presets additionally require lam > 0.
    """
    if name not in PRESET_PATTERNS:
        raise ValueError(
            f"unknown preset {name!r}; valid presets: {', '.join(sorted(PRESET_PATTERNS))}"
        )
    if not strength > 0:
        raise ValueError(f"strength must be positive, got {strength}")
    values = {coeff: strength for coeff in PRESET_PATTERNS[name]}
    if name == "thm1":
        values["lambda1"] = 1.0 if lambda1 is None else lambda1
        values["lambda2"] = 0.0 if lambda2 is None else lambda2
    else:
        values["lambda1"] = lam if lambda1 is None else lambda1
        values["lambda2"] = lam if lambda2 is None else lambda2
        if name.startswith("thm2"):
            if values["lambda1"] != values["lambda2"] or not values["lambda1"] > 0:
                raise ValueError(
                    f"preset {name!r} requires a single coupling lambda > 0, "
                    f"got lambda1={values['lambda1']}, lambda2={values['lambda2']}"
                )
    return DissipationConfig(**values)


@dataclass
class SimulationState:
    """Time plus the divergence-free velocity pair and the scalar."""

    t: float
    v: VectorField2
    theta: SpectralField

    def __post_init__(self):
        _check_same_grid(self.v.grid, self.theta.grid)
        if self.t < 0:
            raise ValueError(f"time must be nonnegative, got {self.t}")

    @property
    def grid(self) -> Grid2D:
        return self.theta.grid

    @classmethod
    def rest(cls, grid: Grid2D) -> "SimulationState":
        return cls(0.0, VectorField2.zeros(grid), SpectralField.zeros(grid))

    def copy(self) -> "SimulationState":
        return SimulationState(self.t, self.v.copy(), self.theta.copy())


@dataclass(frozen=True)
class RegularityRecipe:
    """Power-law spectrum recipe for reproducible initial data.

    Coefficient moduli follow amplitude * (1+|xi|^2)^(-(s+1+decay_margin)/2);
    only the phases are random (seeded), so the spectral envelope of every
    realization is identical.
    """

    s: float
    amplitude: float
    decay_margin: float
    seed: int

    def __post_init__(self):
        if self.s < 0:
            raise ValueError(f"regularity index must be >= 0, got {self.s}")
        if self.amplitude < 0:
            raise ValueError(f"amplitude must be >= 0, got {self.amplitude}")
        if not self.decay_margin > 0:
            raise ValueError(f"decay margin must be > 0, got {self.decay_margin}")

    def scaled(self, factor: float) -> "RegularityRecipe":
        return replace(self, amplitude=self.amplitude * factor)


def synthesize_field(grid: Grid2D, recipe: RegularityRecipe) -> SpectralField:
    """Random-phase field with the recipe's deterministic spectral envelope.

    The phase array is antisymmetrized (phi(xi) - phi(-xi)) so Hermitian
    symmetry holds without touching the moduli.  The mean mode is set to
    zero: the fields model perturbations, and the singular-symbol operators
    expect mean-free input.
    """
    if recipe.amplitude == 0.0:
        return SpectralField.zeros(grid)
    rng = np.random.default_rng(recipe.seed)
    phase = rng.uniform(0.0, 2.0 * math.pi, size=(grid.N, grid.N))
    phase = phase - np.roll(phase[::-1, ::-1], shift=(1, 1), axis=(0, 1))
    env = recipe.amplitude * (1.0 + grid.xi_sq) ** (
        -(recipe.s + 1.0 + recipe.decay_margin) / 2.0
    )
    coeffs = env * np.exp(1j * phase)
    coeffs[0, 0] = 0.0
    coeffs *= grid.nyquist_keep
    return SpectralField(grid, coeffs)


def synthesize_divfree_velocity(grid: Grid2D, recipe: RegularityRecipe) -> VectorField2:
    """Curl of a synthesized streamfunction: exactly divergence-free."""
    psi = synthesize_field(grid, recipe)
    return VectorField2(-1.0 * derivative(psi, 2), derivative(psi, 1))


def neutral_theta_mask(grid: Grid2D, cfg: DissipationConfig) -> np.ndarray:
    """Lattice set where the linearized flow conserves theta exactly.

    A theta mode is untouched by the linear dynamics when its diffusion
    symbol vanishes and the coupling cannot reach it: divergence-freeness
    forces v2 = 0 on the xi1 = 0 axis away from the origin (and everywhere
    when lambda2 = 0; the constant modes pair into an undamped rotation, so
    the origin is excluded when the coupling is active).  On the plane this
    set has measure zero; on the box it can hold a finite share of the
    scalar energy, which no decay mechanism ever removes.
    """
    ones = np.ones((grid.N, grid.N), dtype=bool)
    diff = (cfg.delta1 * grid.xi1**2 + cfg.delta2 * grid.xi2**2) * np.ones((grid.N, grid.N))
    mask = diff == 0.0
    if cfg.lambda2 != 0.0:
        mask &= grid.xi1 * np.ones((1, grid.N)) == 0.0
        mask[0, 0] = False
    return mask & ones


# ---------------------------------------------------------------------------
# advection and right-hand sides
# ---------------------------------------------------------------------------

def _phys(coeffs: np.ndarray, grid: Grid2D) -> np.ndarray:
    import scipy.fft as _fft

    return np.real(_fft.ifft2(coeffs)) * (grid.N * grid.N)


def _advect_many(v: VectorField2, fields) -> list:
    """Dealiased pseudo-spectral v.grad f for several scalars at once.

    Both the velocity and the advected scalars are restricted to the
    alias-safe band before multiplying, so the quadratic production
    <v.grad f, f> cancels to rounding for any divergence-free v.
    """
    import scipy.fft as _fft

    g = v.grid
    keep = g.dealias_keep
    n2 = g.N * g.N
    v1p = _phys(v.u1.coeffs * keep, g)
    v2p = _phys(v.u2.coeffs * keep, g)
    out = []
    for f in fields:
        fk = f.coeffs * keep
        f1p = _phys(1j * g.xi1 * fk, g)
        f2p = _phys(1j * g.xi2 * fk, g)
        prod = _fft.fft2(v1p * f1p + v2p * f2p) / n2
        out.append(SpectralField(g, prod * keep))
    return out


def advect(v: VectorField2, f: SpectralField) -> SpectralField:
    """Dealiased advection term v . grad f."""
    _check_same_grid(v.grid, f.grid)
    if not v.is_divergence_free():
        raise ValueError(
            "velocity is not certified divergence-free "
            f"(relative divergence {v.divergence_measure():.3e})"
        )
    return _advect_many(v, [f])[0]


def _dissipation_symbols(grid: Grid2D, cfg: DissipationConfig, moll: np.ndarray | None = None):
    """Diagonal symbols of the three dissipation operators (momentum 1/2, scalar)."""
    s1 = -(cfg.nu1 * grid.xi1**2 + cfg.nu2 * grid.xi2**2)
    s2 = -(cfg.mu1 * grid.xi1**2 + cfg.mu2 * grid.xi2**2)
    st = -(cfg.delta1 * grid.xi1**2 + cfg.delta2 * grid.xi2**2)
    if moll is not None:
        m2 = moll * moll
        s1, s2, st = s1 * m2, s2 * m2, st * m2
    return s1, s2, st


def _assemble(
    grid: Grid2D,
    cfg: DissipationConfig,
    adv1: SpectralField,
    adv2: SpectralField,
    advt: SpectralField,
    v: VectorField2,
    theta: SpectralField,
    moll: np.ndarray | None = None,
):
    s1, s2, st = _dissipation_symbols(grid, cfg, moll)
    c1 = -adv1.coeffs + s1 * v.u1.coeffs
    c2 = -adv2.coeffs + s2 * v.u2.coeffs + cfg.lambda1 * theta.coeffs
    dv = leray_project(VectorField2(SpectralField(grid, c1), SpectralField(grid, c2)))
    dth = SpectralField(
        grid,
        (-advt.coeffs - cfg.lambda2 * v.u2.coeffs + st * theta.coeffs)
        * grid.nyquist_keep,
    )
    return dv, dth


def rhs_full(state: SimulationState, cfg: DissipationConfig):
    """Projected tendency of the plain system: (dv, dtheta)."""
    adv1, adv2, advt = _advect_many(state.v, [state.v.u1, state.v.u2, state.theta])
    return _assemble(state.grid, cfg, adv1, adv2, advt, state.v, state.theta)


def rhs_truncated(state: SimulationState, cfg: DissipationConfig, n: float):
    """Tendency with state and nonlinear products confined to |xi| <= n."""
    if not n > 0:
        raise ValueError(f"truncation radius must be positive, got {n}")
    vt = VectorField2(fourier_truncate(state.v.u1, n), fourier_truncate(state.v.u2, n))
    tht = fourier_truncate(state.theta, n)
    adv1, adv2, advt = _advect_many(vt, [vt.u1, vt.u2, tht])
    adv1 = fourier_truncate(adv1, n)
    adv2 = fourier_truncate(adv2, n)
    advt = fourier_truncate(advt, n)
    return _assemble(state.grid, cfg, adv1, adv2, advt, vt, tht)


def rhs_mollified(state: SimulationState, cfg: DissipationConfig, eps: float):
    """Tendency of the doubly mollified system.

    Nonlinear terms are J(Jv . grad Jf); dissipation is J d.. J; the
    coupling terms are applied to the raw fields.
    """
    if not eps > 0:
        raise ValueError(f"mollification width must be positive, got {eps}")
    g = state.grid
    moll = mollifier_symbol((eps * eps) * g.xi_sq)
    jv = VectorField2(mollify(state.v.u1, eps), mollify(state.v.u2, eps))
    jth = mollify(state.theta, eps)
    adv1, adv2, advt = _advect_many(jv, [jv.u1, jv.u2, jth])
    adv1 = mollify(adv1, eps)
    adv2 = mollify(adv2, eps)
    advt = mollify(advt, eps)
    return _assemble(g, cfg, adv1, adv2, advt, state.v, state.theta, moll=moll)
