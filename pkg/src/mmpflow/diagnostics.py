"""Norms, energy audit, smallness checks and algebraic decay fits."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, fields
from typing import Callable, Iterable, Sequence

import numpy as np

from .dynamics import PhysParams, State
from .spectral import ZERO_MODE_TOL, IllPosedNormError, _curl, _div, _sq

__all__ = [
    "FitError",
    "NormReport",
    "NormSeries",
    "DecayFit",
    "EnergyAuditRecord",
    "SmallnessVerdict",
    "CSV_COLUMNS",
    "norms",
    "dissipation",
    "exchange",
    "energy_audit",
    "smallness_check",
    "fit_power_law",
    "fit_decay",
    "write_series_csv",
    "read_series_csv",
]

CSV_COLUMNS = (
    "t", "l2_U", "l2_d3U", "l2_gradhU", "h1_U", "negh_U", "negh_d3U",
    "div_u_max", "div_B_max", "audit_residual",
)


class FitError(ValueError):
    """The requested decay fit is not defined on the data."""


@dataclass(frozen=True)
class NormReport:
    """Diagnostic norms of one state; ``None`` marks an absent entry.

    ``gradh_h1_U`` is ``||grad_h (u, B, w)||_{H^1}`` and is kept for
    time-integrated dissipation checks; it is not part of the CSV contract.
    """

    t: float
    l2_U: float
    l2_d3U: float
    l2_gradhU: float
    h1_U: float
    negh_U: float | None
    negh_d3U: float | None
    div_u_max: float
    div_B_max: float
    gradh_h1_U: float = 0.0
    audit_residual: float | None = None

    def with_audit(self, residual: float | None) -> "NormReport":
        return NormReport(**{**self.__dict__, "audit_residual": residual})


@dataclass
class NormSeries:
    sigma: float
    reports: list[NormReport] = field(default_factory=list)

    def __post_init__(self):
        if not 0 < self.sigma < 1:
            raise ValueError("sigma must lie in (0, 1)")
        reports, self.reports = self.reports, []
        for r in reports:
            self.append(r)

    def append(self, report: NormReport) -> None:
        if self.reports and not report.t > self.reports[-1].t:
            raise ValueError("sample times must be strictly increasing")
        self.reports.append(report)

    def __len__(self) -> int:
        return len(self.reports)

    def __iter__(self):
        return iter(self.reports)

    def __getitem__(self, i):
        return self.reports[i]

    @property
    def t(self) -> np.ndarray:
        return np.array([r.t for r in self.reports])

    def column(self, name: str) -> np.ndarray:
        """Values of one NormReport attribute; absent entries become NaN."""
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name) for r in self.reports])


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    prefactor: float
    window: tuple[float, float]
    r_squared: float
    n_samples: int


@dataclass(frozen=True)
class EnergyAuditRecord:
    t: float
    residual: float


@dataclass(frozen=True)
class SmallnessVerdict:
    sup: float
    t_sup: float
    bound: float
    passed: bool
    violation_time: float | None


def _weighted(data, grid, mult):
    return grid.volume * float(np.sum(grid.weights * mult * (data.real**2 + data.imag**2)))


def norms(s: State, sigma: float, zero_mode_tol: float = ZERO_MODE_TOL) -> NormReport:
    """All diagnostic norms of a state, by Parseval in coefficient space.

    The negative horizontal norms are ``None`` when the state carries
    horizontal-mean content above ``zero_mode_tol``.
    """
    g = s.grid
    U = s.data
    kh2, k2, k3sq = g.kh2, g.k2, g.k[2] ** 2
    l2 = _sq(U, g)
    d3 = _weighted(U, g, k3sq)
    gh = _weighted(U, g, kh2)
    grad_sq = _weighted(U, g, k2)
    gradh_h1 = gh + _weighted(U, g, kh2 * k2)
    hz = g.horizontal_zero
    if np.max(np.abs(U[..., hz]), initial=0.0) > zero_mode_tol:
        negh = negh_d3 = None
    else:
        mult = np.zeros_like(kh2)
        np.power(kh2, -sigma, out=mult, where=~hz)
        negh = math.sqrt(_weighted(U, g, mult))
        negh_d3 = math.sqrt(_weighted(U, g, mult * k3sq))
    return NormReport(
        t=s.t,
        l2_U=math.sqrt(l2),
        l2_d3U=math.sqrt(d3),
        l2_gradhU=math.sqrt(gh),
        h1_U=math.sqrt(l2 + grad_sq),
        negh_U=negh,
        negh_d3U=negh_d3,
        div_u_max=float(np.max(np.abs(_div(U[0], g)), initial=0.0)),
        div_B_max=float(np.max(np.abs(_div(U[1], g)), initial=0.0)),
        gradh_h1_U=math.sqrt(gradh_h1),
    )


def require_negh(report: NormReport) -> None:
    if report.negh_U is None:
        raise IllPosedNormError("state has horizontal-mean content; negative horizontal norms undefined")


def dissipation(s: State, p: PhysParams) -> float:
    """mu|grad_h u|^2 + nu|grad_h B|^2 + gamma|grad_h w|^2 + kappa|div w|^2 + chi|grad u|^2 + 4chi|w|^2."""
    g = s.grid
    u, B, w = s.data
    return (
        p.mu * _weighted(u, g, g.kh2)
        + p.nu * _weighted(B, g, g.kh2)
        + p.gamma * _weighted(w, g, g.kh2)
        + p.kappa * _sq(_div(w, g), g)
        + p.chi * _weighted(u, g, g.k2)
        + 4 * p.chi * _sq(w, g)
    )


def exchange(s: State, p: PhysParams) -> float:
    """4 chi <w, curl u>."""
    g = s.grid
    cu = _curl(s.data[0], g)
    w = s.data[2]
    return 4 * p.chi * g.volume * float(np.sum(g.weights * (w.conj() * cu).real))


def energy_audit(prev: State, next: State, p: PhysParams, dt: float) -> EnergyAuditRecord:
    """One-step defect of the energy identity.

        residual = 1/2|U_next|^2 - 1/2|U_prev|^2 + dt * [trap(D) - trap(G)]

    with trapezoidal averages of the dissipation D and the exchange term G.
    The defect is per step, not per unit time, so it is O(dt^3).
    """
    if abs(next.t - prev.t - dt) > 1e-12 * max(1.0, abs(next.t)):
        raise ValueError(f"next.t - prev.t = {next.t - prev.t!r} does not match dt = {dt!r}")
    e_prev = 0.5 * _sq(prev.data, prev.grid)
    e_next = 0.5 * _sq(next.data, next.grid)
    d = 0.5 * (dissipation(prev, p) + dissipation(next, p))
    gx = 0.5 * (exchange(prev, p) + exchange(next, p))
    return EnergyAuditRecord(next.t, e_next - e_prev + dt * (d - gx))


def smallness_check(series: NormSeries, eps: float, c_bound: float) -> SmallnessVerdict:
    """Check ``sup_t (l2_U + l2_d3U) <= c_bound * eps``."""
    if len(series) == 0:
        raise ValueError("empty series")
    values = series.column("l2_U") + series.column("l2_d3U")
    t = series.t
    i = int(np.argmax(values))
    bound = c_bound * eps
    over = np.nonzero(values > bound)[0]
    violation = float(t[over[0]]) if over.size else None
    return SmallnessVerdict(float(values[i]), float(t[i]), bound, over.size == 0, violation)


def fit_power_law(t: Sequence[float], y: Sequence[float], t0: float, t1: float, min_samples: int = 8) -> DecayFit:
    """Least-squares line through ``(log(1+t), log y)`` over ``t0 <= t <= t1``."""
    if not t0 < t1:
        raise FitError("window must satisfy t0 < t1")
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    sel = (t >= t0) & (t <= t1)
    ts, ys = t[sel], y[sel]
    if ts.size < min_samples:
        raise FitError(f"only {ts.size} samples in [{t0}, {t1}], need {min_samples}")
    if not np.all(np.isfinite(ys)) or np.any(ys <= 0):
        raise FitError("nonpositive or missing values in fit window")
    x = np.log1p(ts)
    z = np.log(ys)
    slope, intercept = np.polyfit(x, z, 1)
    resid = z - (slope * x + intercept)
    ss_tot = float(np.sum((z - z.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(slope), float(np.exp(intercept)), (float(t0), float(t1)), max(0.0, r2), int(ts.size))


QUANTITIES: dict[str, Callable[[NormSeries], np.ndarray]] = {
    "energy": lambda s: s.column("l2_U") ** 2 + s.column("l2_d3U") ** 2,
    "gradh": lambda s: s.column("l2_gradhU") ** 2,
    "negh": lambda s: s.column("negh_U") ** 2 + s.column("negh_d3U") ** 2,
}


def fit_decay(series: NormSeries, quantity: str | Callable[[NormSeries], np.ndarray], t0: float, t1: float) -> DecayFit:
    """Fit ``value ~ prefactor * (1+t)^exponent`` on a window of a series.

    ``quantity`` is ``"energy"`` (l2_U^2 + l2_d3U^2), ``"gradh"``
    (l2_gradhU^2), ``"negh"``, any NormReport column name, or a callable
    mapping the series to an array.
    """
    if callable(quantity):
        values = quantity(series)
    elif quantity in QUANTITIES:
        values = QUANTITIES[quantity](series)
    else:
        values = series.column(quantity)
    return fit_power_law(series.t, values, t0, t1)


def _fmt(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def write_series_csv(series: Iterable[NormReport], target) -> None:
    """Write the CSV contract (header plus one row per report) to a path or text stream."""
    if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
        with open(target, "w", newline="") as fh:
            write_series_csv(series, fh)
        return
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in series:
        writer.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])


def read_series_csv(source, sigma: float = 0.8) -> NormSeries:
    """Read a series CSV by column name (extra columns are ignored)."""
    if isinstance(source, str) and "\n" in source:
        fh = io.StringIO(source)
    elif hasattr(source, "read"):
        fh = source
    else:
        fh = open(source, newline="")
    with fh:
        rows = list(csv.DictReader(fh))
    names = {f.name for f in fields(NormReport)}
    out = NormSeries(sigma)
    for row in rows:
        kw = {}
        for c in CSV_COLUMNS:
            if c in names:
                kw[c] = None if row[c] == "" else float(row[c])
        for c in ("l2_U", "l2_d3U", "l2_gradhU", "h1_U", "div_u_max", "div_B_max"):
            kw[c] = kw[c] if kw[c] is not None else float("nan")
        out.append(NormReport(**kw))
    return out
