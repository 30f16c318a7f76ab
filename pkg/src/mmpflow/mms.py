"""Manufactured-solution convergence study for the time integrator.

The exact solution is

    u = e^{-t} (0, 0, sin x1),  B = e^{-t} (0, 0, sin x2),  w = e^{-t} (sin x3, 0, 0)

and the forcing that makes it exact is derived symbolically with sympy from
the continuous equations, independently of the spectral operators.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy as sp

from .dynamics import PhysParams, State, step
from .spectral import GridSpec, _leray, _rfftn

__all__ = ["MMSResult", "manufactured_forcing", "exact_solution", "mms_convergence"]

_x1, _x2, _x3, _t = sp.symbols("x1 x2 x3 t", real=True)
_X = (_x1, _x2, _x3)


def _grad_dot(a, f):
    """(a . grad) f for sympy 3-vectors."""
    return [sum(a[j] * sp.diff(f[i], _X[j]) for j in range(3)) for i in range(3)]


def _curl(f):
    return [
        sp.diff(f[2], _x2) - sp.diff(f[1], _x3),
        sp.diff(f[0], _x3) - sp.diff(f[2], _x1),
        sp.diff(f[1], _x1) - sp.diff(f[0], _x2),
    ]


def _lap_h(f):
    return [sp.diff(c, _x1, 2) + sp.diff(c, _x2, 2) for c in f]


def _lap(f):
    return [sp.diff(c, _x1, 2) + sp.diff(c, _x2, 2) + sp.diff(c, _x3, 2) for c in f]


def _exact_exprs():
    decay = sp.exp(-_t)
    u = [0, 0, decay * sp.sin(_x1)]
    B = [0, 0, decay * sp.sin(_x2)]
    w = [decay * sp.sin(_x3), 0, 0]
    return u, B, w


@lru_cache(maxsize=None)
def _forcing_functions(params: tuple[float, float, float, float, float]):
    mu, nu, gamma, kappa, chi = params
    u, B, w = _exact_exprs()
    div_w = sum(sp.diff(w[j], _X[j]) for j in range(3))
    grad_div_w = [sp.diff(div_w, x) for x in _X]
    curl_u, curl_w = _curl(u), _curl(w)
    ugu, BgB, ugB, Bgu, ugw = (
        _grad_dot(u, u), _grad_dot(B, B), _grad_dot(u, B), _grad_dot(B, u), _grad_dot(u, w),
    )
    lhu, lu, lhB, lhw = _lap_h(u), _lap(u), _lap_h(B), _lap_h(w)
    fu = [sp.diff(u[i], _t) + ugu[i] - mu * lhu[i] - chi * lu[i] - BgB[i] - 2 * chi * curl_w[i]
          for i in range(3)]
    fB = [sp.diff(B[i], _t) + ugB[i] - nu * lhB[i] - Bgu[i] for i in range(3)]
    fw = [sp.diff(w[i], _t) + ugw[i] - gamma * lhw[i] - kappa * grad_div_w[i] + 4 * chi * w[i]
          - 2 * chi * curl_u[i] for i in range(3)]
    exprs = [sp.simplify(e) for e in fu + fB + fw]
    return [sp.lambdify((_x1, _x2, _x3, _t), e, "numpy") for e in exprs]


def _evaluate(funcs, grid: GridSpec, t: float) -> np.ndarray:
    x1, x2, x3 = grid.mesh()
    samples = np.empty((9,) + grid.shape)
    for n, f in enumerate(funcs):
        samples[n] = np.broadcast_to(f(x1, x2, x3, t), grid.shape)
    hat = _rfftn(samples).reshape((3, 3) + grid.spectral_shape) * grid.dealias_mask
    hat[0] = _leray(hat[0], grid)
    hat[1] = _leray(hat[1], grid)
    return hat


def manufactured_forcing(p: PhysParams, grid: GridSpec):
    """Callable ``t -> forcing coefficients`` for use with :func:`step`."""
    funcs = _forcing_functions(p.as_tuple())
    return lambda t: _evaluate(funcs, grid, t)


@lru_cache(maxsize=None)
def _exact_functions():
    return [sp.lambdify((_x1, _x2, _x3, _t), e, "numpy") for e in sum(_exact_exprs(), [])]


def exact_solution(grid: GridSpec, t: float) -> State:
    x1, x2, x3 = grid.mesh()
    samples = np.empty((9,) + grid.shape)
    for n, f in enumerate(_exact_functions()):
        samples[n] = np.broadcast_to(f(x1, x2, x3, t), grid.shape)
    return State(grid, _rfftn(samples).reshape((3, 3) + grid.spectral_shape), t)


def _relative_error(a: State, b: State) -> float:
    g = a.grid
    diff = g.weights * np.abs(a.data - b.data) ** 2
    ref = g.weights * np.abs(b.data) ** 2
    return float(np.sqrt(diff.sum() / ref.sum()))


def _integrate(grid, p, dt, nsteps):
    forcing = manufactured_forcing(p, grid)
    s = exact_solution(grid, 0.0)
    for _ in range(nsteps):
        s = step(s, p, dt, forcing=forcing)
    return s


@dataclass
class MMSResult:
    dts: np.ndarray
    errors: np.ndarray
    orders: np.ndarray
    slope: float
    spatial_error: float

    def summary(self) -> str:
        lines = ["dt  error  order"]
        for i, (dt, err) in enumerate(zip(self.dts, self.errors)):
            order = "" if i == 0 else f"{self.orders[i - 1]:.3f}"
            lines.append(f"{dt:.6g}  {err:.6e}  {order}")
        lines.append(f"fitted slope {self.slope:.4f}; spatial error {self.spatial_error:.3e}")
        return "\n".join(lines)


def mms_convergence(
    grid: GridSpec,
    p: PhysParams,
    base_dt: float,
    levels: int = 4,
    t_end: float = 1.0,
) -> MMSResult:
    """Temporal order of the stepper from ``levels`` successive dt halvings.

    ``t_end / base_dt`` must be an integer. The spatial error is the relative
    difference between the finest-dt solutions on ``grid`` and on a grid
    refined by two along every axis, compared at the coarse collocation points.
    """
    if levels < 3:
        raise ValueError("levels must be at least 3")
    n0 = t_end / base_dt
    if abs(n0 - round(n0)) > 1e-9:
        raise ValueError("t_end must be an integer multiple of base_dt")
    n0 = int(round(n0))
    exact = exact_solution(grid, t_end)
    dts, errors = [], []
    finest = None
    for level in range(levels):
        nsteps = n0 * 2**level
        dt = t_end / nsteps
        finest = _integrate(grid, p, dt, nsteps)
        dts.append(dt)
        errors.append(_relative_error(finest, exact))
    dts, errors = np.array(dts), np.array(errors)
    orders = np.log2(errors[:-1] / errors[1:])
    slope = float(np.polyfit(np.log(dts), np.log(errors), 1)[0])

    fine_grid = GridSpec(2 * grid.n1, 2 * grid.n2, 2 * grid.n3, *grid.lengths, grid.dealias_fraction)
    fine = _integrate(fine_grid, p, dts[-1], n0 * 2 ** (levels - 1))
    a = np.fft.irfftn(finest.data, s=grid.shape, axes=(-3, -2, -1), norm="forward")
    b = np.fft.irfftn(fine.data, s=fine_grid.shape, axes=(-3, -2, -1), norm="forward")[..., ::2, ::2, ::2]
    spatial = float(np.sqrt(np.sum((a - b) ** 2) / np.sum(a**2)))
    return MMSResult(dts, errors, orders, slope, spatial)
