"""Tour of the spectral operator layer.

Builds a grid, round-trips a field through the transforms, applies the
standard multipliers, and measures the truncation error bound that the
approximation theory relies on.
"""

import numpy as np

from aniso import (
    Grid2D,
    SpectralField,
    VectorField2,
    bessel_potential,
    fourier_truncate,
    fractional_laplacian,
    leray_project,
    mollify,
    sobolev_norm,
    to_physical,
    to_spectral,
)
from aniso.model import RegularityRecipe, synthesize_field

grid = Grid2D(64)  # 64 x 64 modes on the 2 pi box
x1, x2 = grid.meshgrid()

print("== transforms ==")
f = to_spectral(grid, np.cos(x1) + 0.5 * np.sin(3 * x2))
err = np.max(np.abs(to_physical(f) - (np.cos(x1) + 0.5 * np.sin(3 * x2))))
print(f"round-trip error on a trig polynomial: {err:.2e}")

print("\n== multipliers ==")
print(f"|cos x1|_L2          = {sobolev_norm(f_cos := to_spectral(grid, np.cos(x1)), 0.0):.12f}")
print(f"|cos x1|_H1          = {sobolev_norm(f_cos, 1.0):.12f}   (exactly 2 pi)")
half = fractional_laplacian(to_spectral(grid, np.cos(x1 + x2)), 0.5)
print(f"sqrt-Laplacian of cos(x1+x2) scales by 2^(1/4) = {np.max(to_physical(half)):.6f}")
j2 = bessel_potential(f_cos, 2.0)
print(f"(1 - Lap)^1 cos(x1) doubles the amplitude:       {np.max(to_physical(j2)):.6f}")

print("\n== projection ==")
u = VectorField2(to_spectral(grid, np.cos(x1 + x2)), SpectralField.zeros(grid))
p = leray_project(u)
print(f"divergence measure after projection: {p.divergence_measure():.2e}")
print("the (1,1) mode maps (1, 0) -> (1/2, -1/2), the symbol of the projector")

print("\n== truncation error ==")
rough = synthesize_field(grid, RegularityRecipe(s=1.0, amplitude=1.0, decay_margin=0.5, seed=1))
for n in (2.0, 4.0, 8.0):
    lhs = sobolev_norm(fourier_truncate(rough, n) - rough, 0.0)
    rhs = sobolev_norm(rough, 1.0) / n
    print(f"  radius n = {n:4.1f}:  |T_n f - f|_L2 = {lhs:.4f}  <=  |f|_H1 / n = {rhs:.4f}")

print("\n== mollifier ==")
band = fourier_truncate(rough, 8.0)
for eps in (1.0, 0.1, 0.01, 0.001):
    rel = sobolev_norm(mollify(band, eps) - band, 0.0) / sobolev_norm(band, 0.0)
    print(f"  eps = {eps:6.3f}:  relative smoothing distance {rel:.3e}")
