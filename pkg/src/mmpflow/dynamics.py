"""Time integration of the magneto-micropolar system with horizontal dissipation.

    u_t + (u.grad)u - mu Lap_h u - chi Lap u + grad P = (B.grad)B + 2 chi curl w
    B_t + (u.grad)B - nu Lap_h B                      = (B.grad)u
    w_t + (u.grad)w - gamma Lap_h w - kappa grad div w + 4 chi w = 2 chi curl u
    div u = div B = 0

The pressure is removed by Leray projection. The linear part (dissipation,
damping and, by default, the 2 chi curl exchange between u and w) is
propagated exactly mode by mode; the advective terms are advanced with a
Lawson (integrating-factor) classical RK4 scheme.

Internally a state is one complex array of shape ``(3, 3) + spectral_shape``
holding ``u, B, w`` in that order.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .spectral import (
    GridSpec,
    ShapeError,
    VectorField,
    _curl,
    _div,
    _irfftn,
    _leray,
    _rfftn,
)

__all__ = [
    "BlowUpError",
    "PhysParams",
    "State",
    "LinearPropagator",
    "nonlinear_tendency",
    "coupling_tendency",
    "linear_propagator",
    "step",
    "cfl_dt",
    "max_divergence",
]

CFL_FLOOR = 1e-8


class BlowUpError(RuntimeError):
    """Non-finite coefficients appeared during time stepping."""

    def __init__(self, t: float, message: str | None = None):
        self.t = t
        super().__init__(message or f"non-finite coefficients at t = {t!r}")


@dataclass(frozen=True)
class PhysParams:
    mu: float
    nu: float
    gamma: float
    kappa: float
    chi: float
    allow_degenerate: bool = False

    def __post_init__(self):
        for name in ("mu", "nu", "gamma", "kappa", "chi"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be a nonnegative finite number, got {value!r}")
        for name in ("mu", "nu", "gamma"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not self.allow_degenerate:
            for name in ("kappa", "chi"):
                if getattr(self, name) <= 0:
                    raise ValueError(f"{name} must be positive (set allow_degenerate to override)")

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.mu, self.nu, self.gamma, self.kappa, self.chi)


@dataclass(frozen=True, eq=False)
class State:
    """Fourier coefficients of ``(u, B, w)`` at time ``t``."""

    grid: GridSpec
    data: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        if self.data.shape != (3, 3) + self.grid.spectral_shape:
            raise ShapeError(f"state array has shape {self.data.shape}")
        if self.t < 0:
            raise ValueError("time must be nonnegative")

    @property
    def u(self) -> VectorField:
        return VectorField(self.grid, self.data[0])

    @property
    def B(self) -> VectorField:
        return VectorField(self.grid, self.data[1])

    @property
    def w(self) -> VectorField:
        return VectorField(self.grid, self.data[2])

    @classmethod
    def zeros(cls, grid: GridSpec, t: float = 0.0) -> "State":
        return cls(grid, np.zeros((3, 3) + grid.spectral_shape, dtype=complex), t)

    @classmethod
    def from_fields(
        cls,
        u: VectorField,
        B: VectorField,
        w: VectorField,
        t: float = 0.0,
        horizontal_mean_free: bool = False,
    ) -> "State":
        """Ingest fields: u and B are projected, everything is dealiased."""
        grid = u.grid
        if B.grid != grid or w.grid != grid:
            raise ShapeError("u, B and w live on different grids")
        data = np.stack([u.coeffs, B.coeffs, w.coeffs]).astype(complex)
        return cls(grid, _clean(data, grid, horizontal_mean_free), t)

    def copy(self) -> "State":
        return State(self.grid, self.data.copy(), self.t)


def _clean(data: np.ndarray, grid: GridSpec, horizontal_mean_free: bool = False) -> np.ndarray:
    out = data * grid.dealias_mask
    out[0] = _leray(out[0], grid)
    out[1] = _leray(out[1], grid)
    if horizontal_mean_free:
        out[..., grid.horizontal_zero] = 0.0
    return out


def max_divergence(v: VectorField) -> float:
    return float(np.max(np.abs(_div(v.coeffs, v.grid)), initial=0.0))


# ---------------------------------------------------------------- tendencies

def _nonlinear(data: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Dealiased advective tendencies in divergence form.

    Nu = P[-d_j(u_j u_i - B_j B_i)], NB = d_j(u_i B_j - B_i u_j), Nw = -d_j(u_j w_i).
    Inputs are assumed dealiased.
    """
    mask = grid.dealias_mask
    u, B, w = _irfftn(data, grid.shape)
    prods = np.empty((18,) + grid.shape)
    pairs = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
    for n, (i, j) in enumerate(pairs):
        np.subtract(u[i] * u[j], B[i] * B[j], out=prods[n])
    for n, (i, j) in enumerate(((0, 1), (0, 2), (1, 2))):
        np.subtract(u[i] * B[j], B[i] * u[j], out=prods[6 + n])
    for i in range(3):
        for j in range(3):
            np.multiply(u[j], w[i], out=prods[9 + 3 * i + j])
    hat = _rfftn(prods) * mask
    ik = [1j * kk for kk in grid.kd]

    T = {}
    for n, (i, j) in enumerate(pairs):
        T[i, j] = T[j, i] = hat[n]
    out = np.empty((3, 3) + grid.spectral_shape, dtype=complex)
    for i in range(3):
        out[0, i] = -(ik[0] * T[i, 0] + ik[1] * T[i, 1] + ik[2] * T[i, 2])
    out[0] = _leray(out[0], grid)

    M01, M02, M12 = hat[6], hat[7], hat[8]
    out[1, 0] = ik[1] * M01 + ik[2] * M02
    out[1, 1] = -ik[0] * M01 + ik[2] * M12
    out[1, 2] = -ik[0] * M02 - ik[1] * M12

    for i in range(3):
        base = 9 + 3 * i
        out[2, i] = -(ik[0] * hat[base] + ik[1] * hat[base + 1] + ik[2] * hat[base + 2])
    return out


def nonlinear_tendency(s: State) -> tuple[VectorField, VectorField, VectorField]:
    """Projected advective tendencies ``(Nu, NB, Nw)`` of a state."""
    out = _nonlinear(s.data * s.grid.dealias_mask, s.grid)
    return tuple(VectorField(s.grid, c) for c in out)


def _coupling(data: np.ndarray, grid: GridSpec, chi: float) -> np.ndarray:
    out = np.zeros_like(data)
    if chi:
        out[0] = 2 * chi * _curl(data[2], grid)
        out[2] = 2 * chi * _curl(data[0], grid)
    return out


def coupling_tendency(s: State, p: PhysParams) -> tuple[VectorField, VectorField]:
    """``(2 chi curl w, 2 chi curl u)``."""
    out = _coupling(s.data, s.grid, p.chi)
    return VectorField(s.grid, out[0]), VectorField(s.grid, out[2])


# ---------------------------------------------------------------- propagator

@dataclass(frozen=True, eq=False)
class LinearPropagator:
    """Exact per-mode solution operator of the linear part over a time ``dt``.

    On the plane orthogonal to xi, with ``K = i xi_hat x`` (so ``K^2 = I``
    there), the u / w-perpendicular block is ``[[uu, uw K], [uw K, ww]]``.
    The w component along xi decays by ``w_par``; B decays by ``bb``.
    With explicit coupling ``uw`` is zero and the diagonal entries are the
    uncoupled exponentials.
    """

    grid: GridSpec
    dt: float
    uu: np.ndarray
    uw: np.ndarray
    ww: np.ndarray
    w_par: np.ndarray
    bb: np.ndarray
    coupled: bool

    def apply(self, data: np.ndarray) -> np.ndarray:
        grid = self.grid
        khat = self.khat
        u, B, w = data
        w_par = khat * np.einsum("i...,i...->...", khat, w)
        out = np.empty_like(data)
        np.multiply(self.bb, B, out=out[1])
        if self.coupled:
            out[0] = self.uu * u + self.uw_k * _curl(w, grid)
            out[2] = self.ww * w + self.uw_k * _curl(u, grid) + self.dw * w_par
        else:
            np.multiply(self.uu, u, out=out[0])
            out[2] = self.ww * w + self.dw * w_par
        return out

    @cached_property
    def khat(self) -> np.ndarray:
        kd2 = self.grid.kd2
        inv = np.divide(1.0, np.sqrt(kd2), out=np.zeros_like(kd2), where=kd2 > 0)
        return self.grid.kd_vector * inv

    @cached_property
    def uw_k(self) -> np.ndarray:
        # uw * K applied as uw / |xi| times the curl multiplier.
        kd2 = self.grid.kd2
        return np.divide(self.uw, np.sqrt(kd2), out=np.zeros_like(kd2), where=kd2 > 0)

    @cached_property
    def dw(self) -> np.ndarray:
        return self.w_par - self.ww


def _sym2_expm(a, b, c, dt):
    """Entries of ``expm(dt * [[-a, b], [b, -c]])`` for arrays a, c >= 0 with ac >= b^2."""
    det = a * c - b * b
    tr = a + c
    root = np.sqrt((a - c) ** 2 + 4 * b * b)
    lam2 = -(tr + root) / 2
    # The slow eigenvalue from the determinant avoids cancellation near zero.
    lam1 = np.divide(det, lam2, out=np.zeros_like(lam2), where=lam2 != 0)
    lam1 = np.minimum(lam1, 0.0)
    e1 = np.exp(lam1 * dt)
    e2 = np.exp(lam2 * dt)
    gap = lam1 - lam2
    # (e1 - e2) / gap, with its limit dt * e1 as the eigenvalues merge; expm1
    # only where gap * dt is small, since it overflows for widely split pairs.
    x = gap * dt
    safe_gap = np.where(gap > 0, gap, 1.0)
    near = e2 * np.expm1(np.minimum(x, 1.0)) / safe_gap
    s = np.where(gap > 0, np.where(x <= 1.0, near, (e1 - e2) / safe_gap), dt * e1)
    half = (e1 + e2) / 2
    d = (a - c) / 2
    return half - d * s, b * s, half + d * s


def linear_propagator(p: PhysParams, grid: GridSpec, dt: float, coupled: bool = True) -> LinearPropagator:
    """Per-mode exponential of the linear operator over ``dt``.

    The diagonal rates are ``mu|xi_h|^2 + chi|xi|^2`` for u, ``nu|xi_h|^2``
    for B, ``gamma|xi_h|^2 + 4 chi`` for w across xi and
    ``gamma|xi_h|^2 + kappa|xi|^2 + 4 chi`` for w along xi. When ``coupled``
    the ``2 chi curl`` exchange between u and w is folded in exactly.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    kh2, k2 = grid.kh2, grid.k2
    a = p.mu * kh2 + p.chi * k2
    c = p.gamma * kh2 + 4 * p.chi
    bb = np.exp(-p.nu * kh2 * dt)
    w_par = np.exp(-(p.gamma * kh2 + p.kappa * grid.kd2 + 4 * p.chi) * dt)
    if coupled and p.chi > 0:
        b = 2 * p.chi * np.sqrt(grid.kd2)
        uu, uw, ww = _sym2_expm(a, b, c, dt)
        return LinearPropagator(grid, dt, uu, uw, ww, w_par, bb, True)
    zero = np.zeros_like(kh2)
    return LinearPropagator(grid, dt, np.exp(-a * dt), zero, np.exp(-c * dt), w_par, bb, False)


# ---------------------------------------------------------------- stepping

Forcing = Callable[[float], np.ndarray]


class _PropagatorCache:
    def __init__(self, maxsize: int = 4):
        self._store: dict = {}
        self._maxsize = maxsize

    def get(self, p: PhysParams, grid: GridSpec, dt: float, coupled: bool) -> LinearPropagator:
        key = (p, grid, float(dt), coupled)
        prop = self._store.get(key)
        if prop is None:
            if len(self._store) >= self._maxsize:
                self._store.pop(next(iter(self._store)))
            prop = self._store[key] = linear_propagator(p, grid, dt, coupled)
        return prop


_cache = _PropagatorCache()


def _explicit(data, grid, p, t, explicit_coupling, forcing, nonlinear):
    if nonlinear:
        out = _nonlinear(data, grid)
    else:
        out = np.zeros_like(data)
    if explicit_coupling:
        out += _coupling(data, grid, p.chi)
    if forcing is not None:
        out += forcing(t)
    return out


def step(
    s: State,
    p: PhysParams,
    dt: float,
    *,
    explicit_coupling: bool = False,
    forcing: Forcing | None = None,
    nonlinear: bool = True,
    horizontal_mean_free: bool = False,
) -> State:
    """Advance one Lawson-RK4 step.

    ``forcing(t)`` returns a coefficient array shaped like ``State.data`` that
    is added to the explicit part. ``horizontal_mean_free`` removes the
    ``xi_h = 0`` modes after the step (see README, decay studies).
    """
    grid = s.grid
    coupled = not explicit_coupling
    full = _cache.get(p, grid, dt, coupled)
    half = _cache.get(p, grid, dt / 2, coupled)
    t = s.t
    U = s.data

    def F(x, tt):
        return _explicit(x, grid, p, tt, explicit_coupling, forcing, nonlinear)

    k1 = F(U, t)
    EhU = half.apply(U)
    k2 = F(EhU + 0.5 * dt * half.apply(k1), t + dt / 2)
    k3 = F(EhU + 0.5 * dt * k2, t + dt / 2)
    k4 = F(full.apply(U) + dt * half.apply(k3), t + dt)
    new = full.apply(U + (dt / 6) * k1) + (dt / 6) * (half.apply(2 * (k2 + k3)) + k4)
    new = _clean(new, grid, horizontal_mean_free)
    t_new = t + dt
    if not np.all(np.isfinite(new)):
        raise BlowUpError(t_new)
    return State(grid, new, t_new)


def cfl_dt(s: State, safety: float = 0.5) -> float:
    """Advective step bound from the pointwise maximum of ``max(|u|, |B|)``."""
    if not 0 < safety <= 1:
        raise ValueError("safety must lie in (0, 1]")
    phys = _irfftn(s.data[:2], s.grid.shape)
    speed = np.sqrt(np.max(np.sum(phys**2, axis=1), initial=0.0))
    return safety * min(s.grid.spacing) / (speed + CFL_FLOOR)
