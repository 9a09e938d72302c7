"""Sobolev/Lebesgue/Besov norms, dyadic frequency blocks, inequality probes.

The dyadic partition of unity is built from a clipped smooth bump normalized
by its own dyadic telescoping sum, so chi + sum_j phi(2^-j .) = 1 holds to
rounding at every lattice point.  That identity (and the stated supports),
not the bump profile itself, is the contract relied on elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, NamedTuple

import numpy as np

from .spectral import (
    Grid2D,
    SpectralField,
    VectorField2,
    bessel_potential,
    derivative,
    fractional_laplacian,
    to_physical,
)

__all__ = [
    "BesovParams",
    "LPBlockSet",
    "sobolev_norm",
    "lp_norm",
    "lp_decompose",
    "besov_norm",
    "sqrtL_norm",
    "SqrtLResult",
    "inequality_probe",
    "INEQUALITY_NAMES",
    "chi_profile",
    "phi_profile",
    "SQRT_L_P_GRID",
]

ANNULUS_LO = 0.75
ANNULUS_HI = 8.0 / 3.0
BALL_RADIUS = 4.0 / 3.0

SQRT_L_P_GRID = (2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64)


# ---------------------------------------------------------------------------
# dyadic partition
# ---------------------------------------------------------------------------

def _clipped_bump(r: np.ndarray) -> np.ndarray:
    """exp(1 - 1/(1 - (r - 7/4)^2)) clipped to the annulus [3/4, 8/3]."""
    r = np.asarray(r, dtype=np.float64)
    out = np.zeros(r.shape)
    u = r - 1.75
    inside = (r > ANNULUS_LO) & (r <= ANNULUS_HI) & (np.abs(u) < 1.0)
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    return out


def _telescope_sum(r: np.ndarray) -> np.ndarray:
    """sum_j bump(2^-j r) over the finitely many contributing j."""
    r = np.asarray(r, dtype=np.float64)
    total = np.zeros(r.shape)
    pos = r[r > 0]
    if pos.size == 0:
        return total
    jlo = math.floor(math.log2(float(pos.min()) / ANNULUS_HI))
    jhi = math.ceil(math.log2(float(pos.max()) / ANNULUS_LO))
    for j in range(jlo, jhi + 1):
        total += _clipped_bump(r * 2.0**-j)
    return total


def phi_profile(r: np.ndarray) -> np.ndarray:
    """Annulus profile supported in [3/4, 8/3] with exact dyadic partition."""
    r = np.asarray(r, dtype=np.float64)
    num = _clipped_bump(r)
    den = _telescope_sum(r)
    out = np.zeros(r.shape)
    nz = num > 0
    out[nz] = num[nz] / den[nz]
    return out


def chi_profile(r: np.ndarray) -> np.ndarray:
    """Low-frequency profile 1 - sum_{j>=0} phi(2^-j r); support in |r| <= 4/3.

    Outside the ball the dyadic sum telescopes to 1 up to two rounded
    divisions; the support there is the contract, so it is pinned to zero.
    """
    r = np.asarray(r, dtype=np.float64)
    acc = np.zeros(r.shape)
    rmax = float(np.max(r)) if r.size else 0.0
    if rmax > 0:
        jhi = max(0, math.ceil(math.log2(rmax / ANNULUS_LO)))
        for j in range(0, jhi + 1):
            acc += phi_profile(r * 2.0**-j)
    out = 1.0 - acc
    out[r > BALL_RADIUS] = 0.0
    return out


@dataclass(frozen=True)
class BesovParams:
    s: float
    p: float
    q: float

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ValueError(f"integrability indices must be >= 1, got p={self.p}, q={self.q}")


@dataclass
class LPBlockSet:
    """The family of dyadic frequency blocks of one field, j = -1 .. j_max."""

    grid: Grid2D
    blocks: Dict[int, SpectralField]

    def reconstruct(self) -> SpectralField:
        total = SpectralField.zeros(self.grid)
        for b in self.blocks.values():
            total = total + b
        return total

    def support_defect(self) -> float:
        """Largest coefficient magnitude found outside a block's annulus."""
        worst = 0.0
        r = self.grid.xi_abs
        for j, b in self.blocks.items():
            if j == -1:
                outside = r > BALL_RADIUS
            else:
                lo, hi = ANNULUS_LO * 2.0**j, ANNULUS_HI * 2.0**j
                outside = (r < lo) | (r > hi)
            if np.any(outside):
                worst = max(worst, float(np.max(np.abs(b.coeffs[outside]))))
        return worst


def block_count(grid: Grid2D) -> int:
    """Number of annulus blocks j >= 0 that can intersect the lattice."""
    m = grid.max_wavenumber()
    if m < ANNULUS_LO:
        return 0
    return math.floor(math.log2(m / ANNULUS_LO)) + 1


def lp_decompose(f: SpectralField) -> LPBlockSet:
    """Split a field into its dyadic blocks; they sum back to the field."""
    g = f.grid
    r = g.xi_abs
    blocks: Dict[int, SpectralField] = {}
    blocks[-1] = SpectralField(g, chi_profile(r) * f.coeffs)
    for j in range(block_count(g)):
        blocks[j] = SpectralField(g, phi_profile(r * 2.0**-j) * f.coeffs)
    return LPBlockSet(g, blocks)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def sobolev_norm(f: SpectralField, s: float, homogeneous: bool = False) -> float:
    """Parseval norm with weight (1+|xi|^2)^(s/2), or |xi|^s if homogeneous."""
    g = f.grid
    if homogeneous:
        if s < 0 and abs(f.coeffs[0, 0]) != 0.0:
            raise ValueError("singular symbol at xi=0: mean mode must be zero for s < 0")
        with np.errstate(divide="ignore"):
            w = g.xi_sq ** s
        w[0, 0] = 0.0
    else:
        w = (1.0 + g.xi_sq) ** s
    total = np.sum(w * np.abs(f.coeffs) ** 2)
    return g.L * math.sqrt(float(total))


def vector_sobolev_norm(u: VectorField2, s: float, homogeneous: bool = False) -> float:
    a = sobolev_norm(u.u1, s, homogeneous)
    b = sobolev_norm(u.u2, s, homogeneous)
    return math.hypot(a, b)


def _quadrature_lp(samples: np.ndarray, p: float, cell_area: float) -> float:
    if p == math.inf:
        return float(np.max(np.abs(samples)))
    return float(np.sum(np.abs(samples) ** p) * cell_area) ** (1.0 / p)


def lp_norm(f: SpectralField, p: float) -> float:
    """L^p norm by collocation quadrature; p = inf is the grid maximum."""
    if p < 1:
        raise ValueError(f"p must be in [1, inf], got {p}")
    return _quadrature_lp(to_physical(f), p, f.grid.cell_area)


def besov_norm(f: SpectralField, params: BesovParams) -> float:
    """l^q over j of 2^(s j) ||Delta_j f||_{L^p}."""
    blocks = lp_decompose(f)
    terms = []
    for j in sorted(blocks.blocks):
        terms.append(2.0 ** (params.s * j) * lp_norm(blocks.blocks[j], params.p))
    terms = np.asarray(terms)
    if params.q == math.inf:
        return float(np.max(terms)) if terms.size else 0.0
    return float(np.sum(terms**params.q) ** (1.0 / params.q))


class SqrtLResult(NamedTuple):
    value: float
    p: float


def sqrtL_norm(f: SpectralField) -> SqrtLResult:
    """sup over a fixed p-grid of ||f||_{L^p} / sqrt(p-1).

    The true supremum ranges over all p in [2, inf); the finite grid is an
    approximation from below.
    """
    best, best_p = 0.0, SQRT_L_P_GRID[0]
    samples = to_physical(f)
    for p in SQRT_L_P_GRID:
        val = _quadrature_lp(samples, p, f.grid.cell_area) / math.sqrt(p - 1)
        if val > best:
            best, best_p = val, p
    return SqrtLResult(best, best_p)


# ---------------------------------------------------------------------------
# inequality probes
# ---------------------------------------------------------------------------

INEQUALITY_NAMES = (
    "kato_ponce",
    "kukavica_wang_ziane",
    "cao_wu",
    "kozono_wadade",
    "brezis_gallouet",
    "gagliardo_nirenberg",
)


def _ratio(lhs: float, rhs: float) -> float:
    if lhs == 0.0:
        return 0.0
    if rhs == 0.0:
        return math.inf
    return lhs / rhs


def _product(f: SpectralField, g: SpectralField) -> SpectralField:
    from .spectral import to_spectral

    return to_spectral(f.grid, to_physical(f) * to_physical(g))


def _grad_phys(f: SpectralField):
    return to_physical(derivative(f, 1)), to_physical(derivative(f, 2))


def _probe_kato_ponce(f: SpectralField, g: SpectralField, r: float = 2.0):
    # || J^r(fg) - f J^r g ||_2  vs  ||J^r f||_2 ||g||_inf + ||grad f||_inf ||J^(r-1) g||_2
    fg = _product(f, g)
    f_jrg = _product(f, bessel_potential(g, r))
    comm = bessel_potential(fg, r) - f_jrg
    lhs = sobolev_norm(comm, 0.0)
    d1, d2 = _grad_phys(f)
    grad_f_inf = float(np.max(np.hypot(d1, d2)))
    rhs = sobolev_norm(f, r) * lp_norm(g, math.inf) + grad_f_inf * sobolev_norm(g, r - 1.0)
    return lhs, rhs


def _probe_kukavica_wang_ziane(
    f: VectorField2,
    g: SpectralField,
    sigma0: float = 0.5,
    p1: float = 4.0,
    q1: float = 4.0,
    p2: float = 4.0,
    q2: float = 4.0,
):
    # commutator of Lambda^sigma0 with the advection f . grad
    for pi, qi in ((p1, q1), (p2, q2)):
        if abs(1.0 / pi + 1.0 / qi - 0.5) > 1e-12:
            raise ValueError("exponent pairs must satisfy 1/p + 1/q = 1/2")
    if not 0.0 < sigma0 < 1.0:
        raise ValueError(f"sigma0 must lie in (0, 1), got {sigma0}")
    fg1 = _product(f.u1, derivative(g, 1))
    fg2 = _product(f.u2, derivative(g, 2))
    adv = fg1 + fg2
    lam_g = fractional_laplacian(g, sigma0)
    adv_lam = _product(f.u1, derivative(lam_g, 1)) + _product(f.u2, derivative(lam_g, 2))
    comm = fractional_laplacian(adv, sigma0) - adv_lam
    lhs = sobolev_norm(comm, 0.0)

    lam1_f1 = to_physical(fractional_laplacian(f.u1, sigma0 + 1.0))
    lam1_f2 = to_physical(fractional_laplacian(f.u2, sigma0 + 1.0))
    cell = f.grid.cell_area
    lam1_f = _quadrature_lp(np.hypot(lam1_f1, lam1_f2), p1, cell)
    g11, g12 = _grad_phys(f.u1)
    g21, g22 = _grad_phys(f.u2)
    grad_f = _quadrature_lp(np.sqrt(g11**2 + g12**2 + g21**2 + g22**2), p2, cell)
    rhs = lam1_f * lp_norm(g, q1) + grad_f * _quadrature_lp(
        to_physical(lam_g), q2, cell
    )
    return lhs, rhs


def _probe_cao_wu(f: SpectralField, g: SpectralField, h: SpectralField):
    # |int f g h| vs ||f|| ||g||^1/2 ||d1 g||^1/2 ||h||^1/2 ||d2 h||^1/2
    cell = f.grid.cell_area
    lhs = abs(float(np.sum(to_physical(f) * to_physical(g) * to_physical(h)) * cell))
    rhs = (
        sobolev_norm(f, 0.0)
        * math.sqrt(sobolev_norm(g, 0.0) * sobolev_norm(derivative(g, 1), 0.0))
        * math.sqrt(sobolev_norm(h, 0.0) * sobolev_norm(derivative(h, 2), 0.0))
    )
    return lhs, rhs


def _probe_kozono_wadade(f: SpectralField, p0: float = 4.0):
    if p0 < 2:
        raise ValueError(f"p0 must be >= 2, got {p0}")
    lhs = lp_norm(f, p0)
    rhs = (
        math.sqrt(p0)
        * sobolev_norm(f, 0.0) ** (2.0 / p0)
        * sobolev_norm(f, 1.0, homogeneous=True) ** (1.0 - 2.0 / p0)
    )
    return lhs, rhs


def _probe_brezis_gallouet(f: SpectralField):
    # ||grad f||_inf vs the l^1 mass of the gradient coefficients
    d1, d2 = _grad_phys(f)
    lhs = float(np.max(np.hypot(d1, d2)))
    rhs = float(np.sum(f.grid.xi_abs * np.abs(f.coeffs)))
    return lhs, rhs


def _probe_gagliardo_nirenberg(
    f: SpectralField,
    j: int = 1,
    m: int = 2,
    p: float = 4.0,
    r: float = 2.0,
    q: float = 2.0,
    a: float = 0.75,
):
    if not 0 <= j < m:
        raise ValueError(f"need 0 <= j < m, got j={j}, m={m}")
    scaling = j / 2.0 + a * (1.0 / r - m / 2.0) + (1.0 - a) / q
    if abs(1.0 / p - scaling) > 1e-12:
        raise ValueError("exponents do not satisfy the interpolation scaling relation")
    cell = f.grid.cell_area

    def dpow(order: int) -> np.ndarray:
        if order == 0:
            return np.abs(to_physical(f))
        acc = np.zeros((f.grid.N, f.grid.N))
        for a1 in range(order + 1):
            a2 = order - a1
            d = f
            if a1:
                d = derivative(d, 1, a1)
            if a2:
                d = derivative(d, 2, a2)
            acc += to_physical(d) ** 2
        return np.sqrt(acc)

    lhs = _quadrature_lp(dpow(j), p, cell)
    rhs = _quadrature_lp(dpow(m), r, cell) ** a * _quadrature_lp(dpow(0), q, cell) ** (
        1.0 - a
    )
    return lhs, rhs


_PROBES = {
    "kato_ponce": _probe_kato_ponce,
    "kukavica_wang_ziane": _probe_kukavica_wang_ziane,
    "cao_wu": _probe_cao_wu,
    "kozono_wadade": _probe_kozono_wadade,
    "brezis_gallouet": _probe_brezis_gallouet,
    "gagliardo_nirenberg": _probe_gagliardo_nirenberg,
}


def inequality_probe(name: str, *fields, **params) -> dict:
    """Evaluate both sides of a named functional inequality, constant stripped.

    Returns {"lhs", "rhs_without_constant", "ratio"}; the ratio of the zero
    field is defined as 0.
    """
    if name not in _PROBES:
        raise ValueError(f"unknown inequality {name!r}; valid names: {', '.join(INEQUALITY_NAMES)}")
    try:
        lhs, rhs = _PROBES[name](*fields, **params)
    except TypeError as exc:
        raise ValueError(f"bad arity or parameters for inequality {name!r}: {exc}") from None
    return {"lhs": lhs, "rhs_without_constant": rhs, "ratio": _ratio(lhs, rhs)}
