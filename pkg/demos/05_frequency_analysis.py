"""Dyadic frequency blocks, Besov norms, the sqrt-L norm and the
inequality probes used to sanity-check the analysis toolbox."""

import numpy as np

from aniso.model import RegularityRecipe, synthesize_divfree_velocity, synthesize_field
from aniso.norms import (
    BesovParams,
    INEQUALITY_NAMES,
    besov_norm,
    inequality_probe,
    lp_decompose,
    sobolev_norm,
    sqrtL_norm,
)
from aniso.spectral import Grid2D

grid = Grid2D(64)
f = synthesize_field(grid, RegularityRecipe(s=2.0, amplitude=1.0, decay_margin=0.5, seed=9))

print("== dyadic decomposition ==")
blocks = lp_decompose(f)
rec_err = sobolev_norm(blocks.reconstruct() - f, 0.0) / sobolev_norm(f, 0.0)
print(f"blocks j = {sorted(blocks.blocks)}  reconstruction error {rec_err:.2e}")
for j in sorted(blocks.blocks):
    print(f"  |Delta_{j:+d} f|_L2 = {sobolev_norm(blocks.blocks[j], 0.0):.4f}")

print("\n== Besov and sqrt-L norms ==")
print(f"|f|_B^1_22   = {besov_norm(f, BesovParams(1.0, 2.0, 2.0)):.4f}")
print(f"|f|_B^0_2inf = {besov_norm(f, BesovParams(0.0, 2.0, float('inf'))):.4f}")
print(f"|f|_H1       = {sobolev_norm(f, 1.0):.4f}")
res = sqrtL_norm(f)
print(f"sqrt-L norm  = {res.value:.4f} attained at p = {res.p}")

print("\n== inequality probes (ratio = lhs / constant-free rhs) ==")
g = synthesize_field(grid, RegularityRecipe(2.0, 1.0, 0.5, 10))
h = synthesize_field(grid, RegularityRecipe(2.0, 1.0, 0.5, 11))
v = synthesize_divfree_velocity(grid, RegularityRecipe(2.0, 1.0, 0.5, 12))
args = {
    "kato_ponce": (f, g),
    "kukavica_wang_ziane": (v, g),
    "cao_wu": (f, g, h),
    "kozono_wadade": (f,),
    "brezis_gallouet": (f,),
    "gagliardo_nirenberg": (f,),
}
for name in INEQUALITY_NAMES:
    out = inequality_probe(name, *args[name])
    print(f"  {name:22s} lhs {out['lhs']:10.4f}  rhs {out['rhs_without_constant']:10.4f}  ratio {out['ratio']:.4f}")
