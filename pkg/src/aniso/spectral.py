"""Grids, field containers and Fourier-multiplier operators on the periodic box.

Every field is a real-valued function on [0, L]^2 represented by its complex
Fourier coefficients c(xi) with the convention

    f(x) = sum_xi c(xi) exp(i xi . x),   xi = (2 pi / L) k,  k integer lattice,

so c = fft2(samples) / N^2.  Real-valuedness is the Hermitian symmetry
c(-xi) = conj(c(xi)).  The Nyquist row and column (k = -N/2) are zeroed on
every transform and after every multiplier so that round trips stay exactly
real and symmetric.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.fft as _fft

__all__ = [
    "Grid2D",
    "SpectralField",
    "VectorField2",
    "to_physical",
    "to_spectral",
    "apply_multiplier",
    "fractional_laplacian",
    "bessel_potential",
    "leray_project",
    "fourier_truncate",
    "mollify",
    "riesz_double",
    "derivative",
    "dealias",
    "mollifier_symbol",
    "l2_inner",
    "regrid",
    "divergence_measure",
]

DIVFREE_TOL = 1e-12


class Grid2D:
    """Wavenumber bookkeeping for an N x N periodic box of side L.

    N must be even and at least 4.  Integer wavenumbers run over
    [-N/2, N/2) in FFT order; the k = -N/2 row/column is reserved as a
    guard band and always carries zero coefficients.
    """

    def __init__(self, N: int, L: float = 2.0 * math.pi):
        N = int(N)
        if N < 4 or N % 2 != 0:
            raise ValueError(f"N must be even and >= 4, got {N}")
        if not L > 0:
            raise ValueError(f"box length must be positive, got {L}")
        self.N = N
        self.L = float(L)

        k = np.fft.fftfreq(N, 1.0 / N)  # integer wavenumbers, exact floats
        self.k1 = k.reshape(N, 1)
        self.k2 = k.reshape(1, N)
        scale = 2.0 * math.pi / self.L
        self.xi1 = scale * self.k1
        self.xi2 = scale * self.k2
        self.xi_sq = self.xi1**2 + self.xi2**2
        self.xi_abs = np.sqrt(self.xi_sq)

        nyq = N // 2
        keep = np.ones((N, N), dtype=bool)
        keep[nyq, :] = False
        keep[:, nyq] = False
        self.nyquist_keep = keep

        # 2/3-rule band: |k| <= (N-1)//3 guarantees alias-free quadratic
        # products on the retained modes (3*kmax < N).
        kmax = (N - 1) // 3
        self.dealias_kmax = kmax
        self.dealias_keep = (
            (np.abs(self.k1) <= kmax) & (np.abs(self.k2) <= kmax) & keep
        )

        self.x = np.arange(N) * (self.L / N)
        self.cell_area = (self.L / N) ** 2

        # half-spectrum (rfft2) companions for the real-transform fast path
        self.half_shape = (N, N // 2 + 1)
        self.xi1h = self.xi1
        self.xi2h = self.xi2[:, : N // 2 + 1]
        self.xi_sq_h = self.xi1h**2 + self.xi2h**2
        keep_h = np.ones(self.half_shape, dtype=bool)
        keep_h[nyq, :] = False
        keep_h[:, nyq] = False
        self.nyquist_keep_h = keep_h
        self.dealias_keep_h = (
            (np.abs(self.k1) <= kmax)
            & (np.abs(self.k2[:, : N // 2 + 1]) <= kmax)
            & keep_h
        )

    def __eq__(self, other):
        return isinstance(other, Grid2D) and self.N == other.N and self.L == other.L

    def __hash__(self):
        return hash((self.N, self.L))

    def __repr__(self):
        return f"Grid2D(N={self.N}, L={self.L!r})"

    def meshgrid(self):
        """Physical collocation coordinates X1, X2 with 'ij' indexing."""
        return np.meshgrid(self.x, self.x, indexing="ij")

    def max_wavenumber(self) -> float:
        """Largest |xi| carried by a non-guard lattice point."""
        m = (self.N // 2 - 1) * 2.0 * math.pi / self.L
        return math.sqrt(2.0) * m


def _reflect(coeffs: np.ndarray) -> np.ndarray:
    """coeffs evaluated at -xi, i.e. index map k -> (-k) mod N on both axes."""
    return np.roll(coeffs[::-1, ::-1], shift=(1, 1), axis=(0, 1))


def hermitian_symmetrize(coeffs: np.ndarray) -> np.ndarray:
    return 0.5 * (coeffs + np.conj(_reflect(coeffs)))


class SpectralField:
    """A real scalar field stored as complex coefficients on the grid lattice."""

    __slots__ = ("grid", "coeffs")

    def __init__(self, grid: Grid2D, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if coeffs.shape != (grid.N, grid.N):
            raise ValueError(
                f"coefficient array shape {coeffs.shape} does not match grid N={grid.N}"
            )
        self.grid = grid
        self.coeffs = coeffs

    @classmethod
    def zeros(cls, grid: Grid2D) -> "SpectralField":
        return cls(grid, np.zeros((grid.N, grid.N), dtype=np.complex128))

    @classmethod
    def from_coeffs(cls, grid: Grid2D, coeffs: np.ndarray) -> "SpectralField":
        """Build a field enforcing Hermitian symmetry and the Nyquist guard."""
        c = hermitian_symmetrize(np.asarray(coeffs, dtype=np.complex128))
        c = c * grid.nyquist_keep
        return cls(grid, c)

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy())

    def hermitian_defect(self) -> float:
        """max |c(-xi) - conj(c(xi))| over the lattice."""
        return float(np.max(np.abs(self.coeffs - np.conj(_reflect(self.coeffs)))))

    def __add__(self, other):
        _check_same_grid(self.grid, other.grid)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same_grid(self.grid, other.grid)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)


class VectorField2:
    """A velocity pair (u1, u2) on one shared grid."""

    __slots__ = ("u1", "u2")

    def __init__(self, u1: SpectralField, u2: SpectralField):
        _check_same_grid(u1.grid, u2.grid)
        self.u1 = u1
        self.u2 = u2

    @property
    def grid(self) -> Grid2D:
        return self.u1.grid

    @classmethod
    def zeros(cls, grid: Grid2D) -> "VectorField2":
        return cls(SpectralField.zeros(grid), SpectralField.zeros(grid))

    def copy(self) -> "VectorField2":
        return VectorField2(self.u1.copy(), self.u2.copy())

    def divergence_measure(self) -> float:
        return divergence_measure(self)

    def is_divergence_free(self, tol: float = DIVFREE_TOL) -> bool:
        return self.divergence_measure() <= tol

    def __add__(self, other):
        return VectorField2(self.u1 + other.u1, self.u2 + other.u2)

    def __sub__(self, other):
        return VectorField2(self.u1 - other.u1, self.u2 - other.u2)

    def __mul__(self, scalar):
        return VectorField2(self.u1 * scalar, self.u2 * scalar)

    __rmul__ = __mul__


def _check_same_grid(a: Grid2D, b: Grid2D):
    if a != b:
        raise ValueError(f"grid mismatch: {a} vs {b}")


def divergence_measure(u: VectorField2) -> float:
    """max_xi |xi . F(u)| normalized by max_xi |F(u)|; 0 for the zero field."""
    g = u.grid
    div = g.xi1 * u.u1.coeffs + g.xi2 * u.u2.coeffs
    peak = max(np.max(np.abs(u.u1.coeffs)), np.max(np.abs(u.u2.coeffs)))
    if peak == 0.0:
        return 0.0
    return float(np.max(np.abs(div)) / peak)


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

def to_physical(f: SpectralField) -> np.ndarray:
    """Evaluate the field on the N x N collocation grid.  Output is real."""
    n2 = f.grid.N * f.grid.N
    return np.real(_fft.ifft2(f.coeffs)) * n2


def to_spectral(grid: Grid2D, samples: np.ndarray) -> SpectralField:
    """Forward transform of N x N real samples; symmetry enforced exactly."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.shape != (grid.N, grid.N):
        raise ValueError(
            f"sample array shape {samples.shape} does not match grid N={grid.N}"
        )
    c = _fft.fft2(samples) / (grid.N * grid.N)
    c = hermitian_symmetrize(c)
    c *= grid.nyquist_keep
    return SpectralField(grid, c)


# ---------------------------------------------------------------------------
# multipliers
# ---------------------------------------------------------------------------

def apply_multiplier(f: SpectralField, m) -> SpectralField:
    """Apply a diagonal Fourier multiplier m(xi1, xi2) -> complex.

    m is evaluated vectorized on the broadcast wavenumber arrays.  A
    non-finite symbol value at any lattice point is rejected, naming the
    offending wavenumber; singular symbols must assign their xi = 0 value
    explicitly before reaching this point.
    """
    g = f.grid
    with np.errstate(divide="ignore", invalid="ignore"):
        sym = np.asarray(m(g.xi1, g.xi2))
    sym = np.broadcast_to(sym, (g.N, g.N))
    bad = ~np.isfinite(sym)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise ValueError(
            f"multiplier is not finite at xi=({g.xi1[i, 0]}, {g.xi2[0, j]})"
        )
    return SpectralField(g, sym * f.coeffs * g.nyquist_keep)


def _multiply_symbol(f: SpectralField, sym: np.ndarray) -> SpectralField:
    return SpectralField(f.grid, sym * f.coeffs * f.grid.nyquist_keep)


def derivative(f: SpectralField, axis: int, order: int = 1) -> SpectralField:
    """Spectral partial derivative along axis 1 or 2."""
    if axis not in (1, 2):
        raise ValueError(f"axis must be 1 or 2, got {axis}")
    xi = f.grid.xi1 if axis == 1 else f.grid.xi2
    return _multiply_symbol(f, (1j * xi) ** order)


def fractional_laplacian(f: SpectralField, s: float) -> SpectralField:
    """|xi|^s multiplier; s < 0 requires a zero mean mode."""
    if s == 0:
        return f.copy()
    g = f.grid
    if s < 0 and abs(f.coeffs[0, 0]) != 0.0:
        raise ValueError("singular symbol at xi=0: mean mode must be zero for s < 0")
    with np.errstate(divide="ignore"):
        sym = g.xi_abs**s
    sym[0, 0] = 0.0  # mean mode annihilated for s > 0, convention for s < 0
    return _multiply_symbol(f, sym)


def bessel_potential(f: SpectralField, s: float) -> SpectralField:
    """(1 + |xi|^2)^(s/2) multiplier; exact inverse pair J^s o J^-s."""
    if s == 0:
        return f.copy()
    sym = (1.0 + f.grid.xi_sq) ** (s / 2.0)
    return _multiply_symbol(f, sym)


def leray_project(u: VectorField2) -> VectorField2:
    """Project onto divergence-free fields: u + grad (-Lap)^-1 div u.

    Acts as the identity on the mean mode (a constant vector is already
    divergence-free).
    """
    g = u.grid
    inv = np.zeros_like(g.xi_sq)
    nz = g.xi_sq > 0
    inv[nz] = 1.0 / g.xi_sq[nz]
    div = g.xi1 * u.u1.coeffs + g.xi2 * u.u2.coeffs
    frac = div * inv
    c1 = (u.u1.coeffs - g.xi1 * frac) * g.nyquist_keep
    c2 = (u.u2.coeffs - g.xi2 * frac) * g.nyquist_keep
    return VectorField2(SpectralField(g, c1), SpectralField(g, c2))


def fourier_truncate(f: SpectralField, n: float) -> SpectralField:
    """Zero every coefficient with |xi| > n; modes with |xi| <= n retained."""
    if not n > 0:
        raise ValueError(f"truncation radius must be positive, got {n}")
    mask = f.grid.xi_sq <= n * n
    return _multiply_symbol(f, mask.astype(np.float64))


def mollifier_symbol(eta_sq: np.ndarray) -> np.ndarray:
    """Smooth bump rho_hat(|eta|) with rho_hat(0) = 1, support |eta| < 2.

    rho_hat(eta) = exp(1 - 1/(1 - |eta/2|^2)); values in (0, 1].
    """
    eta_sq = np.asarray(eta_sq, dtype=np.float64)
    out = np.zeros(eta_sq.shape)
    r2 = eta_sq / 4.0
    inside = r2 < 1.0
    with np.errstate(divide="ignore"):
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    return out


def mollify(f: SpectralField, eps: float) -> SpectralField:
    """Convolve with the scaled bump: multiplier rho_hat(eps * xi)."""
    if not eps > 0:
        raise ValueError(f"mollification width must be positive, got {eps}")
    sym = mollifier_symbol((eps * eps) * f.grid.xi_sq)
    return _multiply_symbol(f, sym)


def riesz_double(f: SpectralField, i: int, j: int) -> SpectralField:
    """Double Riesz transform xi_i xi_j / |xi|^2; mean mode mapped to 0."""
    if i not in (1, 2) or j not in (1, 2):
        raise ValueError(f"axes must be in {{1, 2}}, got ({i}, {j})")
    g = f.grid
    xi_i = g.xi1 if i == 1 else g.xi2
    xi_j = g.xi1 if j == 1 else g.xi2
    sym = np.zeros_like(g.xi_sq)
    nz = g.xi_sq > 0
    sym[nz] = (xi_i * xi_j * np.ones_like(g.xi_sq))[nz] / g.xi_sq[nz]
    return _multiply_symbol(f, sym)


def dealias(f: SpectralField) -> SpectralField:
    """Restrict to the alias-safe band |k_i| <= (N-1)//3."""
    return _multiply_symbol(f, f.grid.dealias_keep.astype(np.float64))


def l2_inner(f: SpectralField, g: SpectralField) -> float:
    """Real L^2 inner product over the box, evaluated by Parseval."""
    _check_same_grid(f.grid, g.grid)
    s = np.sum(f.coeffs * np.conj(g.coeffs))
    return float(np.real(s)) * f.grid.L**2


def regrid(f: SpectralField, grid: Grid2D) -> SpectralField:
    """Re-represent a field on another grid with the same box length.

    Shared modes keep their coefficients exactly; refining zero-pads the
    spectrum, coarsening drops the modes the target cannot carry.
    """
    src = f.grid
    if src.L != grid.L:
        raise ValueError(f"regrid requires equal box lengths, got {src.L} and {grid.L}")
    if src.N == grid.N:
        return f.copy()
    kmax = min(src.N, grid.N) // 2 - 1
    keep = np.concatenate([np.arange(0, kmax + 1), np.arange(-kmax, 0)])
    out = np.zeros((grid.N, grid.N), dtype=np.complex128)
    out[np.ix_(keep % grid.N, keep % grid.N)] = f.coeffs[np.ix_(keep % src.N, keep % src.N)]
    return SpectralField(grid, out)
