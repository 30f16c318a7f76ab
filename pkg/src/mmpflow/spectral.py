"""Periodic-box spectral representation and the linear operators of the model.

Fields are stored on the real-to-complex half lattice produced by
``scipy.fft.rfftn``: a scalar field has coefficient shape
``(n1, n2, n3 // 2 + 1)`` and a vector field ``(3, n1, n2, n3 // 2 + 1)``.
Modes with negative third index are implied by Hermitian symmetry.

Normalization is "per volume": the coefficient of ``exp(i xi . x)`` is the
box average of ``f * exp(-i xi . x)``, so ``cos(x1)`` has two coefficients of
value 1/2 and

    ||f||_{L^2}^2 = V * sum over the full lattice of |f_hat|^2.

Derivatives use the wavenumber with the unmatched Nyquist entry zeroed
(``GridSpec.kd``). Laplacian-type multipliers use the true wavenumber.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

__all__ = [
    "ShapeError",
    "IllPosedNormError",
    "GridSpec",
    "ScalarField",
    "VectorField",
    "fft_workers",
    "forward_transform",
    "inverse_transform",
    "dealias",
    "derivative",
    "laplacian_h",
    "laplacian_full",
    "grad",
    "divergence",
    "curl",
    "grad_div",
    "lambda_h_pow",
    "leray_project",
    "inner",
    "l2_norm",
    "random_divfree_field",
    "random_scalar_field",
]

ZERO_MODE_TOL = 1e-13


class ShapeError(ValueError):
    """Array dimensions or grids do not match."""


class IllPosedNormError(ValueError):
    """A negative horizontal power was requested on a field with horizontal-mean content."""


def fft_workers() -> int:
    """Worker count for scipy.fft, from the MMP_THREADS environment variable.

    pocketfft splits batches of independent 1D transforms across workers, so
    results do not depend on this value.
    """
    value = os.environ.get("MMP_THREADS", "").strip()
    if not value:
        return 1
    return max(1, int(value))


def _rfftn(a: np.ndarray) -> np.ndarray:
    return sfft.rfftn(a, axes=(-3, -2, -1), norm="forward", workers=fft_workers())


def _irfftn(a: np.ndarray, shape: tuple[int, int, int]) -> np.ndarray:
    return sfft.irfftn(a, s=shape, axes=(-3, -2, -1), norm="forward", workers=fft_workers())


@dataclass(frozen=True)
class GridSpec:
    """Periodic box ``[0, l1) x [0, l2) x [0, l3)`` sampled on ``n1 x n2 x n3`` points."""

    n1: int
    n2: int
    n3: int
    l1: float = 2 * np.pi
    l2: float = 2 * np.pi
    l3: float = 2 * np.pi
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        for name in ("n1", "n2", "n3"):
            n = getattr(self, name)
            if int(n) != n or n < 4 or n % 2:
                raise ValueError(f"{name} must be an even integer >= 4, got {n!r}")
        for name in ("l1", "l2", "l3"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.dealias_fraction <= 1:
            raise ValueError("dealias_fraction must lie in (0, 1]")

    @classmethod
    def cube(cls, n: int, length: float = 2 * np.pi, **kw) -> "GridSpec":
        return cls(n, n, n, length, length, length, **kw)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n1, self.n2, self.n3)

    @property
    def spectral_shape(self) -> tuple[int, int, int]:
        return (self.n1, self.n2, self.n3 // 2 + 1)

    @property
    def lengths(self) -> tuple[float, float, float]:
        return (self.l1, self.l2, self.l3)

    @property
    def volume(self) -> float:
        return self.l1 * self.l2 * self.l3

    @property
    def spacing(self) -> tuple[float, float, float]:
        return (self.l1 / self.n1, self.l2 / self.n2, self.l3 / self.n3)

    @property
    def npoints(self) -> int:
        return self.n1 * self.n2 * self.n3

    @cached_property
    def index(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Integer mode indices, broadcastable to ``spectral_shape``."""
        i1 = np.fft.fftfreq(self.n1, 1.0 / self.n1).astype(int).reshape(-1, 1, 1)
        i2 = np.fft.fftfreq(self.n2, 1.0 / self.n2).astype(int).reshape(1, -1, 1)
        i3 = np.arange(self.n3 // 2 + 1).reshape(1, 1, -1)
        return i1, i2, i3

    @cached_property
    def k(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Physical wavenumbers ``2 pi index / l``."""
        return tuple(2 * np.pi * i / length for i, length in zip(self.index, self.lengths))

    @cached_property
    def kd(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Derivative wavenumbers: as ``k`` with the Nyquist entry of each axis zeroed."""
        out = []
        for i, kk, n in zip(self.index, self.k, self.shape):
            out.append(np.where(np.abs(i) == n // 2, 0.0, kk))
        return tuple(out)

    @cached_property
    def kh2(self) -> np.ndarray:
        """|xi_h|^2 on the spectral lattice."""
        k1, k2, _ = self.k
        return np.broadcast_to(k1**2 + k2**2, self.spectral_shape).copy()

    @cached_property
    def k2(self) -> np.ndarray:
        """|xi|^2 on the spectral lattice."""
        return self.kh2 + self.k[2] ** 2

    @cached_property
    def kd2(self) -> np.ndarray:
        k1, k2, k3 = self.kd
        return np.broadcast_to(k1**2 + k2**2 + k3**2, self.spectral_shape).copy()

    @cached_property
    def kd_vector(self) -> np.ndarray:
        """Derivative wavenumber vectors, shape ``(3,) + spectral_shape``."""
        return np.stack([np.broadcast_to(kk, self.spectral_shape) for kk in self.kd])

    @cached_property
    def horizontal_zero(self) -> np.ndarray:
        """Boolean mask of the modes with xi_h = 0."""
        i1, i2, _ = self.index
        return np.broadcast_to((i1 == 0) & (i2 == 0), self.spectral_shape).copy()

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """1.0 on retained modes, 0.0 on modes with ``|index_j| > fraction * n_j / 2``."""
        keep = np.ones(self.spectral_shape, dtype=bool)
        for i, n in zip(self.index, self.shape):
            keep &= np.abs(i) <= self.dealias_fraction * n / 2
        return keep.astype(float)

    @cached_property
    def weights(self) -> np.ndarray:
        """Multiplicity of each stored mode in the full lattice (1 or 2)."""
        w = np.full(self.n3 // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return w.reshape(1, 1, -1)

    def coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Collocation points as three broadcastable 1D arrays."""
        return tuple(
            (np.arange(n) * (length / n)).reshape([-1 if a == j else 1 for a in range(3)])
            for j, (n, length) in enumerate(zip(self.shape, self.lengths))
        )

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.broadcast_to(x, self.shape) for x in self.coordinates())


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != self.grid.spectral_shape:
            raise ShapeError(f"scalar coefficients {self.coeffs.shape} != {self.grid.spectral_shape}")

    def to_real(self) -> np.ndarray:
        return _irfftn(self.coeffs, self.grid.shape)

    def is_dealiased(self) -> bool:
        return not np.any(self.coeffs[self.grid.dealias_mask == 0])

    def full_lattice(self) -> np.ndarray:
        """Coefficients on the complete ``n1 x n2 x n3`` lattice (numpy fft ordering)."""
        return np.fft.fftn(self.to_real()) / self.grid.npoints


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != (3,) + self.grid.spectral_shape:
            raise ShapeError(f"vector coefficients {self.coeffs.shape} != {(3,) + self.grid.spectral_shape}")

    @property
    def components(self) -> tuple[ScalarField, ScalarField, ScalarField]:
        return tuple(ScalarField(self.grid, c) for c in self.coeffs)

    @classmethod
    def from_components(cls, *comps: ScalarField) -> "VectorField":
        if len(comps) != 3:
            raise ShapeError("a vector field needs three components")
        _same_grid(*comps)
        return cls(comps[0].grid, np.stack([c.coeffs for c in comps]))

    @classmethod
    def zeros(cls, grid: GridSpec) -> "VectorField":
        return cls(grid, np.zeros((3,) + grid.spectral_shape, dtype=complex))

    def to_real(self) -> np.ndarray:
        return _irfftn(self.coeffs, self.grid.shape)

    def is_dealiased(self) -> bool:
        return not np.any(self.coeffs[:, self.grid.dealias_mask == 0])


Field = ScalarField | VectorField


def _same_grid(*fields) -> GridSpec:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise ShapeError("fields live on different grids")
    return grid


def _like(f: Field, coeffs: np.ndarray) -> Field:
    return type(f)(f.grid, coeffs)


def forward_transform(samples: np.ndarray, grid: GridSpec) -> Field:
    """Real samples of shape ``grid.shape`` (scalar) or ``(3,) + grid.shape`` (vector)."""
    samples = np.asarray(samples, dtype=float)
    if samples.shape == grid.shape:
        return ScalarField(grid, _rfftn(samples))
    if samples.shape == (3,) + grid.shape:
        return VectorField(grid, _rfftn(samples))
    raise ShapeError(f"samples of shape {samples.shape} do not match grid {grid.shape}")


def inverse_transform(f: Field) -> np.ndarray:
    return f.to_real()


def dealias(f: Field) -> Field:
    return _like(f, f.coeffs * f.grid.dealias_mask)


def derivative(f: Field, axis: int) -> Field:
    """Spectral partial derivative along ``axis`` (1, 2 or 3)."""
    if axis not in (1, 2, 3):
        raise ValueError("axis must be 1, 2 or 3")
    return _like(f, 1j * f.grid.kd[axis - 1] * f.coeffs)


def laplacian_h(f: Field) -> Field:
    return _like(f, -f.grid.kh2 * f.coeffs)


def laplacian_full(f: Field) -> Field:
    return _like(f, -f.grid.k2 * f.coeffs)


def grad(f: ScalarField) -> VectorField:
    return VectorField(f.grid, 1j * f.grid.kd_vector * f.coeffs)


def divergence(v: VectorField) -> ScalarField:
    return ScalarField(v.grid, _div(v.coeffs, v.grid))


def curl(v: VectorField) -> VectorField:
    return VectorField(v.grid, _curl(v.coeffs, v.grid))


def grad_div(v: VectorField) -> VectorField:
    kv = v.grid.kd_vector
    return VectorField(v.grid, -kv * np.einsum("i...,i...->...", kv, v.coeffs))


def _div(c: np.ndarray, grid: GridSpec) -> np.ndarray:
    k1, k2, k3 = grid.kd
    return 1j * (k1 * c[0] + k2 * c[1] + k3 * c[2])


def _curl(c: np.ndarray, grid: GridSpec) -> np.ndarray:
    k1, k2, k3 = grid.kd
    return 1j * np.stack([
        k2 * c[2] - k3 * c[1],
        k3 * c[0] - k1 * c[2],
        k1 * c[1] - k2 * c[0],
    ])


def _leray(c: np.ndarray, grid: GridSpec) -> np.ndarray:
    kv = grid.kd_vector
    kd2 = grid.kd2
    inv = np.divide(1.0, kd2, out=np.zeros_like(kd2), where=kd2 > 0)
    return c - kv * (np.einsum("i...,i...->...", kv, c) * inv)


def lambda_h_pow(f: Field, s: float, zero_mode_tol: float = ZERO_MODE_TOL) -> Field:
    """Fourier multiplier ``|xi_h|^s``.

    For ``s < 0`` the modes with ``xi_h = 0`` must already be negligible; they
    are zeroed, and anything above ``zero_mode_tol`` raises IllPosedNormError.
    """
    grid = f.grid
    kh2 = grid.kh2
    hz = grid.horizontal_zero
    if s == 0:
        return _like(f, f.coeffs.copy())
    if s > 0:
        return _like(f, kh2 ** (0.5 * s) * f.coeffs)
    residual = np.max(np.abs(f.coeffs[..., hz]), initial=0.0)
    if residual > zero_mode_tol:
        raise IllPosedNormError(
            f"horizontal-mean content {residual:.3e} exceeds {zero_mode_tol:.1e}; "
            f"the homogeneous H_h^{s} norm is infinite"
        )
    mult = np.zeros_like(kh2)
    np.power(kh2, 0.5 * s, out=mult, where=~hz)
    return _like(f, mult * f.coeffs)


def leray_project(v: VectorField) -> VectorField:
    """Per-mode projection ``I - xi xi^T / |xi|^2`` (identity at xi = 0)."""
    return VectorField(v.grid, _leray(v.coeffs, v.grid))


def _inner(a: np.ndarray, b: np.ndarray, grid: GridSpec) -> float:
    # Sum over trailing three axes and any leading component axes.
    return grid.volume * float(np.sum(grid.weights * (a.conj() * b).real))


def _sq(a: np.ndarray, grid: GridSpec) -> float:
    return grid.volume * float(np.sum(grid.weights * (a.real**2 + a.imag**2)))


def inner(f: Field, g: Field) -> float:
    """L^2 inner product over the box, computed in coefficient space."""
    grid = _same_grid(f, g)
    if type(f) is not type(g):
        raise ShapeError("inner product of a scalar with a vector field")
    return _inner(f.coeffs, g.coeffs, grid)


def l2_norm(f: Field) -> float:
    return float(np.sqrt(_sq(f.coeffs, f.grid)))


def _enforce_real(c: np.ndarray, grid: GridSpec) -> np.ndarray:
    return _rfftn(_irfftn(c, grid.shape))


def _spectral_weight(grid, spectrum_slope, k_peak, k_vertical):
    if k_vertical is None:
        kk = np.sqrt(grid.k2)
        env = np.ones_like(kk)
    else:
        kk = np.sqrt(grid.kh2)
        env = np.exp(-((grid.k[2] / k_vertical) ** 2)) * np.ones_like(kk)
    weight = np.zeros_like(kk)
    pos = kk > 0
    weight[pos] = kk[pos] ** spectrum_slope * np.exp(-((kk[pos] / k_peak) ** 2)) * env[pos]
    return weight


def random_divfree_field(
    grid: GridSpec,
    seed: int,
    spectrum_slope: float = 0.0,
    k_peak: float = 2.0,
    amplitude: float = 1.0,
    horizontal_mean_free: bool = False,
    k_vertical: float | None = None,
) -> VectorField:
    """Random solenoidal, dealiased field with a prescribed modal energy profile.

    The expected energy of a single Fourier mode is proportional to
    ``k**spectrum_slope * exp(-(k / k_peak)**2)``. With ``k_vertical=None`` the
    profile is isotropic (``k = |xi|``); otherwise ``k = |xi_h|`` and the profile
    is multiplied by ``exp(-(xi_3 / k_vertical)**2)``, which is the natural way
    to prescribe low horizontal-frequency content. The result is rescaled so
    that its L^2 norm equals ``amplitude``.
    """
    if amplitude < 0:
        raise ValueError("amplitude must be nonnegative")
    if amplitude == 0:
        return VectorField.zeros(grid)
    rng = np.random.default_rng(seed)
    amp = np.sqrt(_spectral_weight(grid, spectrum_slope, k_peak, k_vertical))
    phases = rng.uniform(0.0, 2 * np.pi, size=(3,) + grid.spectral_shape)
    c = amp * np.exp(1j * phases)
    # The round trip leaks roundoff into modes the profile leaves empty.
    c = np.where(amp > 0, _enforce_real(c, grid), 0.0)
    c = _leray(c, grid) * grid.dealias_mask
    if horizontal_mean_free:
        c[:, grid.horizontal_zero] = 0.0
    norm = np.sqrt(_sq(c, grid))
    if norm == 0:
        raise ValueError("spectrum parameters leave no resolved modes")
    return VectorField(grid, c * (amplitude / norm))


def random_scalar_field(
    grid: GridSpec,
    rng: np.random.Generator,
    spectrum_slope: float = 0.0,
    k_peak: float = 2.0,
    mean_free_axes: tuple[int, ...] = (),
) -> ScalarField:
    """Random real, dealiased scalar field with unit L^2 norm.

    ``mean_free_axes`` lists axes (1-based) along which every line average
    vanishes, i.e. modes with zero index on that axis are removed.
    """
    amp = np.sqrt(_spectral_weight(grid, spectrum_slope, k_peak, None))
    c = amp * np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=grid.spectral_shape))
    for axis in mean_free_axes:
        c = np.where(grid.index[axis - 1] == 0, 0.0, c)
    c = _enforce_real(c, grid) * grid.dealias_mask
    norm = np.sqrt(_sq(c, grid))
    return ScalarField(grid, c / norm)
