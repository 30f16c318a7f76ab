"""Scalar models of the decay argument: the superlinear damping ODE, the
exponent iteration, and a monitor for the negative-norm bootstrap bounds."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .diagnostics import NormSeries
from .spectral import IllPosedNormError

__all__ = [
    "StepSizeError",
    "LedgerConfig",
    "decay_ode_closed_form",
    "integrate_decay_ode",
    "iterate_exponents",
    "closed_form_exponents",
    "exponent_table",
    "BootstrapReport",
    "bootstrap_monitor",
]


class StepSizeError(RuntimeError):
    """The fixed step produced a value the exact solution never takes."""


@dataclass(frozen=True)
class LedgerConfig:
    sigma: float
    c: float = 1.0
    x0: float = 1.0
    t_end: float = 100.0
    dt: float = 1e-3

    def __post_init__(self):
        if not 0 < self.sigma < 1:
            raise ValueError("sigma must lie in (0, 1)")
        if not self.c > 0:
            raise ValueError("c must be positive")
        if not self.x0 >= 0:
            raise ValueError("x0 must be nonnegative")
        if not self.t_end > 0 or not self.dt > 0:
            raise ValueError("t_end and dt must be positive")


def decay_ode_closed_form(cfg: LedgerConfig, t):
    """``X(t) = (X0^(-1/sigma) + (c/sigma) t)^(-sigma)``; identically zero for X0 = 0."""
    t = np.asarray(t, dtype=float)
    if cfg.x0 == 0:
        return np.zeros_like(t)
    return (cfg.x0 ** (-1.0 / cfg.sigma) + (cfg.c / cfg.sigma) * t) ** (-cfg.sigma)


def integrate_decay_ode(cfg: LedgerConfig) -> tuple[np.ndarray, np.ndarray]:
    """Classical RK4 for ``X' = -c X^((1+sigma)/sigma)`` with fixed step.

    Returns ``(t, X)``. The last step is shortened to land on ``t_end``.
    """
    p = (1.0 + cfg.sigma) / cfg.sigma
    c = cfg.c

    def f(x):
        return -c * x**p

    n_full = int(math.floor(cfg.t_end / cfg.dt + 1e-9))
    steps = [cfg.dt] * n_full
    rest = cfg.t_end - n_full * cfg.dt
    if rest > 1e-12 * cfg.t_end:
        steps.append(rest)
    t = np.empty(len(steps) + 1)
    x = np.empty(len(steps) + 1)
    t[0], x[0] = 0.0, cfg.x0
    for i, h in enumerate(steps):
        xi = x[i]
        if xi == 0:
            x[i + 1] = 0.0
        else:
            k1 = f(xi)
            k2 = f(xi + 0.5 * h * k1)
            k3 = f(xi + 0.5 * h * k2)
            k4 = f(xi + h * k3)
            x[i + 1] = xi + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            # The exact solution is positive and decreasing.
            if not 0 < x[i + 1] <= xi:
                raise StepSizeError(f"step left the solution's range at t = {t[i] + h!r}; reduce dt")
        t[i + 1] = t[i] + h
    t[-1] = cfg.t_end
    return t, x


def iterate_exponents(sigma: float, n: int) -> np.ndarray:
    """``a_0 = 2 sigma``, ``a_k = (a_{k-1} - sigma) / 2 + a_0`` for k = 1..n."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if not 0 < sigma < 1:
        raise ValueError("sigma must lie in (0, 1)")
    a = np.empty(n + 1)
    a[0] = 2 * sigma
    for k in range(1, n + 1):
        a[k] = 0.5 * (a[k - 1] - sigma) + a[0]
    return a


def closed_form_exponents(sigma: float, n: int) -> np.ndarray:
    return 3 * sigma - sigma / 2.0 ** np.arange(n + 1)


def exponent_table(sigma: float, n: int) -> str:
    """Text table of the iteration against its closed form and ``min(1 + sigma, a_k)``."""
    a = iterate_exponents(sigma, n)
    b = closed_form_exponents(sigma, n)
    out = io.StringIO()
    out.write(f"# sigma = {sigma!r}; limit 3*sigma = {3 * sigma!r}; target 1+sigma = {1 + sigma!r}\n")
    out.write("k,a_k,closed_form,abs_diff,effective_exponent\n")
    for k in range(n + 1):
        out.write(f"{k},{float(a[k])!r},{float(b[k])!r},{float(abs(a[k] - b[k]))!r},{float(min(1 + sigma, a[k]))!r}\n")
    return out.getvalue()


@dataclass(frozen=True)
class BootstrapReport:
    e0: float
    sup: float
    t_sup: float
    first_violation: int | None
    improved_bound_held: bool
    transient: float

    @property
    def passed(self) -> bool:
        return self.first_violation is None


def bootstrap_monitor(series: NormSeries, e0: float, transient: float = 0.0) -> BootstrapReport:
    """Track ``negh_U^2 + negh_d3U^2`` against ``2 e0`` and, for ``t >= transient``, ``1.5 e0``."""
    if len(series) == 0:
        raise ValueError("empty series")
    if any(r.negh_U is None or r.negh_d3U is None for r in series):
        raise IllPosedNormError("series lacks negative horizontal norm entries")
    values = series.column("negh_U") ** 2 + series.column("negh_d3U") ** 2
    t = series.t
    i = int(np.argmax(values))
    over = np.nonzero(values > 2 * e0)[0]
    late = t >= transient
    improved = bool(np.all(values[late] <= 1.5 * e0))
    return BootstrapReport(
        e0=float(e0),
        sup=float(values[i]),
        t_sup=float(t[i]),
        first_violation=int(over[0]) if over.size else None,
        improved_bound_held=improved,
        transient=float(transient),
    )
