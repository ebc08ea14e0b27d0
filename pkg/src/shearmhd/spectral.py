"""Fourier representation of fields on a periodic box in sheared coordinates.

The box is [0, 2pi) x [0, Ly) with Ly large enough to emulate an unbounded
vertical direction.  Following the Couette characteristics turns the spatial
derivatives time dependent: the vertical derivative acts as d/dy - t d/dx, so
every operator symbol below is evaluated at the shifted frequency xi - k*t.

Coefficients are normalized such that a constant field 1 has coefficient 1 at
(k, xi) = (0, 0).
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * np.pi

#: selectors accepted by :func:`apply_symbol`
SYMBOL_NAMES = ("dx", "dyt", "lap", "ilap", "lam", "ilam")


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Truncated Fourier grid: nx modes in x (period 2pi), ny modes in y (period Ly)."""

    nx: int
    ny: int
    Ly: float
    Lx: float = TWO_PI

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8 or not (_is_pow2(self.nx) and _is_pow2(self.ny)):
            raise ValueError("nx, ny must be powers of two >= 8")
        if not np.isclose(self.Lx, TWO_PI):
            raise ValueError("Lx is fixed to 2*pi")
        if self.Ly <= 0:
            raise ValueError("Ly must be positive")

    @cached_property
    def k(self) -> np.ndarray:
        """Integer x wavenumbers in FFT order, shape (nx,)."""
        return np.fft.fftfreq(self.nx, d=1.0 / self.nx)

    @cached_property
    def xi(self) -> np.ndarray:
        """y frequencies (2pi/Ly)*Z in FFT order, shape (ny,)."""
        return np.fft.fftfreq(self.ny, d=1.0 / self.ny) * (TWO_PI / self.Ly)

    @cached_property
    def kk(self) -> np.ndarray:
        """x wavenumbers broadcastable against (nx, ny) coefficient arrays."""
        return self.k[:, None]

    @cached_property
    def xixi(self) -> np.ndarray:
        return self.xi[None, :]

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True where a mode survives the 2/3 rule (quadratic nonlinearity)."""
        ky_index = np.fft.fftfreq(self.ny, d=1.0 / self.ny)[None, :]
        return (np.abs(self.kk) <= self.nx / 3) & (np.abs(ky_index) <= self.ny / 3)

    @property
    def cell_area(self) -> float:
        return (self.Lx / self.nx) * (self.Ly / self.ny)

    def meshgrid(self):
        """Physical-space coordinate arrays (X, Y) of shape (nx, ny)."""
        x = np.arange(self.nx) * (self.Lx / self.nx)
        y = np.arange(self.ny) * (self.Ly / self.ny)
        return np.meshgrid(x, y, indexing="ij")


def default_Ly(nu: float) -> float:
    """Box height keeping wrap-around below diagnostic tolerances for the run horizon."""
    return 4.0 * np.pi * max(1.0, nu ** (-0.25))


@dataclass
class SpectralField:
    """A scalar field stored as normalized Fourier coefficients indexed (k, xi)."""

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != (self.grid.nx, self.grid.ny):
            raise ValueError(
                f"coefficient array {self.coeffs.shape} does not match grid "
                f"({self.grid.nx}, {self.grid.ny})"
            )

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy())


def forward_transform(physical: np.ndarray, grid: GridSpec) -> SpectralField:
    """Real physical-space samples -> normalized Fourier coefficients."""
    physical = np.asarray(physical)
    if physical.shape != (grid.nx, grid.ny):
        raise ValueError(
            f"field shape {physical.shape} does not match grid ({grid.nx}, {grid.ny})"
        )
    return SpectralField(grid, np.fft.fft2(physical) / (grid.nx * grid.ny))


def inverse_transform(f: SpectralField) -> np.ndarray:
    """Coefficients -> physical samples (real part; imaginary is roundoff)."""
    return np.fft.ifft2(f.coeffs).real * (f.grid.nx * f.grid.ny)


def symbol_array(grid: GridSpec, name: str, t: float) -> np.ndarray:
    """Pointwise Fourier symbol of a moving-frame operator at time t.

    Inverse symbols (ilap, ilam) are zero on their kernel, i.e. at (0, 0).
    """
    K = grid.kk
    XIT = grid.xixi - K * t
    if name == "dx":
        return np.broadcast_to(1j * K, (grid.nx, grid.ny))
    if name == "dyt":
        return 1j * XIT
    mag2 = K ** 2 + XIT ** 2
    if name == "lap":
        return -mag2
    if name == "lam":
        return np.sqrt(mag2)
    # inverses: only the (0, 0) mode is singular; resonant k != 0 modes keep |k| > 0
    with np.errstate(divide="ignore"):
        inv = np.where(mag2 > 0, 1.0 / np.where(mag2 > 0, mag2, 1.0), 0.0)
    if name == "ilap":
        return -inv
    if name == "ilam":
        return np.sqrt(inv)
    raise ValueError(f"unknown symbol selector {name!r}")


def apply_symbol(f: SpectralField, name: str, t: float) -> SpectralField:
    """Multiply coefficients by the symbol of the selected moving-frame operator."""
    return SpectralField(f.grid, f.coeffs * symbol_array(f.grid, name, t))


def dealias(f: SpectralField) -> SpectralField:
    """Zero all modes outside the 2/3 band (applied after every nonlinear product)."""
    return SpectralField(f.grid, np.where(f.grid.dealias_mask, f.coeffs, 0.0))


def l2_norm(f: SpectralField) -> float:
    """Continuum L2 norm over the box (Parseval with grid normalization)."""
    g = f.grid
    return float(np.sqrt(g.Lx * g.Ly * np.sum(np.abs(f.coeffs) ** 2)))


def sobolev_weight(grid: GridSpec, N: float, homogeneous: bool = False) -> np.ndarray:
    """Weight <k, xi>^N, or |k, xi|^N with zero at the (0, 0) mode."""
    mag2 = grid.kk ** 2 + grid.xixi ** 2
    if homogeneous:
        return mag2 ** (N / 2.0)
    return (1.0 + mag2) ** (N / 2.0)


def sobolev_norm(f: SpectralField, N: float, homogeneous: bool = False) -> float:
    g = f.grid
    w = sobolev_weight(g, N, homogeneous=homogeneous)
    return float(np.sqrt(g.Lx * g.Ly * np.sum((w * np.abs(f.coeffs)) ** 2)))


def hermitian_defect(f: SpectralField) -> float:
    """Max |coeff(-k,-xi) - conj(coeff(k,xi))|; zero for real-valued fields."""
    c = f.coeffs
    mirrored = np.conj(np.roll(np.flip(c, axis=(0, 1)), shift=(1, 1), axis=(0, 1)))
    return float(np.max(np.abs(c - mirrored)))


def project_divfree(c1: np.ndarray, c2: np.ndarray, grid: GridSpec, t: float):
    """Leray projection with moving-frame symbols: remove sigma (sigma . u)/|sigma|^2."""
    K = grid.kk
    XIT = grid.xixi - K * t
    mag2 = K ** 2 + XIT ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        div_over_mag2 = np.where(mag2 > 0, (K * c1 + XIT * c2) / np.where(mag2 > 0, mag2, 1.0), 0.0)
    return c1 - K * div_over_mag2, c2 - XIT * div_over_mag2


def divergence_defect(c1: np.ndarray, c2: np.ndarray, grid: GridSpec, t: float) -> float:
    """Max modulus of the moving-frame divergence symbol applied to (c1, c2)."""
    K = grid.kk
    XIT = grid.xixi - K * t
    return float(np.max(np.abs(K * c1 + XIT * c2)))
