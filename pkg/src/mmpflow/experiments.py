"""Experiment drivers: single runs, decay studies and smallness sweeps.

Output paths in a :class:`RunConfig` are taken relative to ``out_dir`` when
one is given. A run writes

* the norm series CSV (columns :data:`mmpflow.diagnostics.CSV_COLUMNS`),
* a checkpoint holding the most recent snapshot, rewritten every
  ``checkpoint_interval`` of simulated time and at the end,
* ``<series>.config``, the emitted configuration that produced the run,
* ``<series>.failure`` on blow-up, with the failure time.

All artifacts are a pure function of the configuration and seed.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .checkpoint import save_checkpoint
from .config import RunConfig, emit_config
from .diagnostics import (
    DecayFit,
    FitError,
    NormSeries,
    QUANTITIES,
    energy_audit,
    fit_power_law,
    norms,
    write_series_csv,
)
from .dynamics import BlowUpError, State, cfl_dt, step
from .reduced_ode import BootstrapReport, bootstrap_monitor
from .spectral import random_divfree_field

__all__ = [
    "ExitStatus",
    "RunResult",
    "DecayReport",
    "SweepMember",
    "SweepReport",
    "initial_state",
    "run_simulation",
    "detect_floor",
    "run_decay_study",
    "run_stability_sweep",
    "AuditStudy",
    "audit_convergence",
    "MONOTONE_SLACK",
]

MONOTONE_SLACK = 1e-10
# Steps shorter than this are treated as a blow-up of the advective speed.
MIN_DT = 1e-10
H1_GROWTH_LIMIT = 10.0
TAIL_FRACTION = 0.2


class ExitStatus(enum.IntEnum):
    CLEAN = 0
    CONFIG_ERROR = 2
    BLOW_UP = 3
    IO_ERROR = 4


@dataclass
class RunResult:
    status: ExitStatus
    series: NormSeries
    final_state: State
    n_steps: int
    max_audit_residual: float
    monotone_violations: int
    failure_time: float | None = None
    artifacts: dict[str, Path] = field(default_factory=dict)


def initial_state(cfg: RunConfig) -> State:
    """Independent random solenoidal u, B, w with L^2 norms eps_u, eps_B, eps_w.

    Component seeds are ``[seed, 0]``, ``[seed, 1]`` and ``[seed, 2]``.
    """
    i = cfg.init
    kw = dict(
        spectrum_slope=i.spectrum_slope,
        k_peak=i.k_peak,
        horizontal_mean_free=i.horizontal_mean_free,
        k_vertical=i.k_vertical,
    )
    fields_ = [
        random_divfree_field(cfg.grid, [i.seed, j], amplitude=a, **kw)
        for j, a in enumerate((i.eps_u, i.eps_B, i.eps_w))
    ]
    return State.from_fields(*fields_, t=0.0, horizontal_mean_free=i.horizontal_mean_free)


def _resolve(path: str, out_dir) -> Path:
    p = Path(path)
    return p if out_dir is None or p.is_absolute() else Path(out_dir) / p


def _check_writable(paths: list[Path]) -> None:
    """Fail fast, before any compute, if an output cannot be written."""
    for p in paths:
        p.parent.mkdir(parents=True, exist_ok=True)
        existed = p.exists()
        with open(p, "ab"):
            pass
        if not existed:
            p.unlink()


def _sample_times(t_end: float, interval: float) -> list[float]:
    n = int(math.floor(t_end / interval + 1e-9))
    times = [k * interval for k in range(1, n + 1)]
    if t_end - (times[-1] if times else 0.0) > 1e-9 * max(interval, t_end):
        times.append(t_end)
    return times


def run_simulation(cfg: RunConfig, out_dir=None, *, write: bool = True) -> RunResult:
    """Integrate from random initial data to ``t_end`` and record diagnostics.

    Every ``sample_interval`` the norms are recorded together with the
    largest one-step energy-audit defect since the previous sample. The step
    within one interval is uniform, ``interval / ceil(interval / min(dt_max,
    cfl))``, so samples land exactly on their nominal times.
    """
    series_path = _resolve(cfg.output.series, out_dir)
    ckpt_path = _resolve(cfg.output.checkpoint, out_dir)
    config_path = series_path.with_name(series_path.name + ".config")
    failure_path = series_path.with_name(series_path.name + ".failure")
    if write:
        _check_writable([series_path, ckpt_path, config_path, failure_path])
        config_path.write_text(emit_config(cfg))

    p = cfg.params
    hmf = cfg.init.horizontal_mean_free
    s = initial_state(cfg)
    series = NormSeries(cfg.sigma)
    series.append(norms(s, cfg.sigma))

    ckpt_every = cfg.output.checkpoint_interval
    next_ckpt = ckpt_every if ckpt_every > 0 else math.inf
    n_steps = 0
    max_audit = 0.0
    violations = 0
    status = ExitStatus.CLEAN
    failure_time = None

    try:
        for target in _sample_times(cfg.time.t_end, cfg.time.sample_interval):
            span = target - s.t
            dt_cap = min(cfg.time.dt_max, cfl_dt(s, cfg.time.cfl_safety))
            if dt_cap < MIN_DT:
                raise BlowUpError(s.t, f"advective step bound {dt_cap!r} below {MIN_DT}")
            n = max(1, math.ceil(span / dt_cap - 1e-12))
            dt = span / n
            worst = 0.0
            for k in range(n):
                nxt = step(s, p, dt, horizontal_mean_free=hmf)
                if k == n - 1:
                    nxt = State(nxt.grid, nxt.data, target)
                res = energy_audit(s, nxt, p, dt).residual
                if abs(res) > abs(worst):
                    worst = res
                s = nxt
                n_steps += 1
            report = norms(s, cfg.sigma).with_audit(worst)
            if report.l2_U > series[-1].l2_U * (1 + MONOTONE_SLACK):
                violations += 1
            series.append(report)
            max_audit = max(max_audit, abs(worst))
            if write and target >= next_ckpt - 1e-12:
                save_checkpoint(ckpt_path, s, p)
                while next_ckpt <= target + 1e-12:
                    next_ckpt += ckpt_every
    except BlowUpError as exc:
        status = ExitStatus.BLOW_UP
        failure_time = float(exc.t)

    artifacts: dict[str, Path] = {}
    if write:
        write_series_csv(series, series_path)
        artifacts = {"series": series_path, "config": config_path}
        if status is ExitStatus.CLEAN:
            save_checkpoint(ckpt_path, s, p)
            artifacts["checkpoint"] = ckpt_path
        else:
            failure_path.write_text(f"status = blow_up\nfailure_time = {failure_time!r}\nlast_sample = {series[-1].t!r}\n")
            artifacts["failure"] = failure_path
    return RunResult(status, series, s, n_steps, max_audit, violations, failure_time, artifacts)


def _log_slopes(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Slopes of log y against log(1 + t) between consecutive samples."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.diff(np.log(y)) / np.diff(np.log1p(t))


def detect_floor(series: NormSeries, quantity: str = "energy", after: float = 0.0) -> float | None:
    """First sample time at which the instantaneous log-slope of the quantity
    drops below ``-(1 + sigma) - 1``, the signature of exponential decay set by
    the lowest horizontal wavenumber of the box; ``None`` if it never does.

    Intervals starting before ``after`` are ignored so that the fast early
    decay of strongly damped modes is not mistaken for the floor.
    """
    t = series.t
    slopes = _log_slopes(t, QUANTITIES[quantity](series))
    threshold = -(1 + series.sigma) - 1
    hit = np.nonzero((slopes < threshold) & (t[:-1] >= after))[0]
    return float(t[hit[0]]) if hit.size else None


@dataclass
class DecayReport:
    sigma: float
    window: tuple[float, float]
    energy_fit: DecayFit | None
    gradh_fit: DecayFit | None
    bootstrap: BootstrapReport
    floor_time: float | None
    run: RunResult = field(repr=False)

    @property
    def floor_reached(self) -> bool:
        return self.floor_time is not None

    @property
    def downgraded(self) -> bool:
        """True when the floor arrived before enough samples for a fit."""
        return self.energy_fit is None

    def to_text(self) -> str:
        lines = [
            f"sigma = {self.sigma!r}",
            f"window = {self.window[0]!r}, {self.window[1]!r}",
            f"floor_time = {self.floor_time!r}",
            f"torus_floor_reached = {self.floor_reached}",
        ]
        for name, fit, target in (
            ("energy", self.energy_fit, -self.sigma),
            ("gradh", self.gradh_fit, -(1 + self.sigma)),
        ):
            if fit is None:
                lines.append(f"{name}: no fit (floor reached before enough samples)")
            else:
                lines.append(
                    f"{name}: exponent = {fit.exponent!r} target = {target!r} "
                    f"r_squared = {fit.r_squared!r} n_samples = {fit.n_samples}"
                )
        b = self.bootstrap
        lines += [
            f"bootstrap_e0 = {b.e0!r}",
            f"bootstrap_sup = {b.sup!r} at t = {b.t_sup!r}",
            f"bootstrap_within_2e0 = {b.passed}",
            f"bootstrap_within_1.5e0_after_{b.transient:g} = {b.improved_bound_held}",
        ]
        return "\n".join(lines) + "\n"


def run_decay_study(
    cfg: RunConfig,
    window: tuple[float, float] | None = None,
    out_dir=None,
    *,
    write: bool = True,
    transient: float = 1.0,
) -> DecayReport:
    """Run, then fit the energy and horizontal-gradient decay exponents.

    The fit window defaults to ``[1, t_end]`` and is cut at the detected
    floor time. If fewer than the minimum number of samples remain because
    the floor arrived early, the fits are reported as absent instead of
    raising; any other fit failure propagates as :class:`FitError`.
    """
    if not cfg.init.horizontal_mean_free:
        raise ValueError("decay studies need init.horizontal_mean_free = true")
    result = run_simulation(cfg, out_dir, write=write)
    series = result.series
    t0, t1 = window if window is not None else (min(1.0, cfg.time.t_end), cfg.time.t_end)
    floor = detect_floor(series, after=t0)
    if floor is not None:
        t1 = min(t1, floor)
    try:
        energy = fit_power_law(series.t, QUANTITIES["energy"](series), t0, t1)
        gradh = fit_power_law(series.t, QUANTITIES["gradh"](series), t0, t1)
    except FitError:
        if floor is None:
            raise
        energy = gradh = None
    first = series[0]
    e0 = first.negh_U**2 + first.negh_d3U**2
    boot = bootstrap_monitor(series, e0, transient)
    report = DecayReport(cfg.sigma, (t0, t1), energy, gradh, boot, floor, result)
    if write:
        series_path = _resolve(cfg.output.series, out_dir)
        series_path.with_name(series_path.name + ".decay").write_text(report.to_text())
    return report


@dataclass(frozen=True)
class SweepMember:
    eps: float
    status: ExitStatus
    initial: float
    sup: float
    sup_ratio: float
    h1_max: float
    dissipation_integral: float
    tail_fraction: float
    failure_time: float | None
    run: RunResult | None = field(default=None, repr=False, compare=False)

    @property
    def bounded(self) -> bool:
        if self.status is not ExitStatus.CLEAN:
            return False
        if self.eps == 0:
            return True
        return (
            math.isfinite(self.h1_max)
            and math.isfinite(self.dissipation_integral)
            and self.tail_fraction <= 0.1
        )


@dataclass
class SweepReport:
    members: list[SweepMember]

    @property
    def largest_bounded(self) -> float | None:
        ok = [m.eps for m in self.members if m.bounded]
        return max(ok) if ok else None

    def to_text(self) -> str:
        out = ["eps,status,initial,sup,sup_ratio,h1_max,dissipation_integral,tail_fraction,bounded"]
        for m in self.members:
            out.append(
                f"{m.eps!r},{m.status.name},{m.initial!r},{m.sup!r},{m.sup_ratio!r},"
                f"{m.h1_max!r},{m.dissipation_integral!r},{m.tail_fraction!r},{m.bounded}"
            )
        out.append(f"# largest_bounded_eps = {self.largest_bounded!r}")
        return "\n".join(out) + "\n"


def _trapezoid(t: np.ndarray, y: np.ndarray) -> float:
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(t))) if t.size > 1 else 0.0


def _scaled(cfg: RunConfig, eps: float) -> RunConfig:
    i = cfg.init
    base = math.sqrt(i.eps_u**2 + i.eps_B**2 + i.eps_w**2)
    if base == 0:
        raise ValueError("base configuration has zero amplitude; cannot rescale")
    r = eps / base
    return cfg.with_amplitudes(i.eps_u * r, i.eps_B * r, i.eps_w * r)


def _member(eps: float, result: RunResult) -> SweepMember:
    s = result.series
    size = s.column("l2_U") + s.column("l2_d3U")
    t = s.t
    h1 = s.column("h1_U")
    g = s.column("gradh_h1_U") ** 2
    total = _trapezoid(t, g)
    cut = t[-1] - TAIL_FRACTION * (t[-1] - t[0])
    late = t >= cut
    tail = _trapezoid(t[late], g[late])
    initial = float(size[0])
    h1_max = float(np.max(h1))
    if result.status is ExitStatus.CLEAN and h1_max > H1_GROWTH_LIMIT * max(h1[0], 1e-300):
        h1_max = math.inf
    return SweepMember(
        eps=eps,
        status=result.status,
        initial=initial,
        sup=float(np.max(size)),
        sup_ratio=float(np.max(size)) / eps if eps > 0 else math.nan,
        h1_max=h1_max,
        dissipation_integral=total,
        tail_fraction=tail / total if total > 0 else 0.0,
        failure_time=result.failure_time,
        run=result,
    )


def run_stability_sweep(base: RunConfig, epsilons, out_dir=None, *, write: bool = True) -> SweepReport:
    """Run the base configuration at each total initial L^2 norm in ``epsilons``.

    The three amplitudes keep the proportions of the base configuration and
    are rescaled so that ``||(u0, B0, w0)||_{L^2} = eps``. Member ``i`` writes
    into ``out_dir/member_<i>``. Blow-ups are recorded, not raised.
    ``h1_max`` is reported as infinite if H^1 grew beyond
    ``H1_GROWTH_LIMIT`` times its initial value.
    """
    eps_list = [float(e) for e in epsilons]
    if not eps_list:
        raise ValueError("no epsilons given")
    if any(e < 0 for e in eps_list) or any(b <= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("epsilons must be nonnegative and strictly ascending")
    members = []
    for idx, eps in enumerate(eps_list):
        cfg = _scaled(base, eps)
        member_dir = None
        if out_dir is not None:
            member_dir = Path(out_dir) / f"member_{idx}"
        result = run_simulation(cfg, member_dir, write=write and member_dir is not None)
        members.append(_member(eps, result))
    report = SweepReport(members)
    if write and out_dir is not None:
        Path(out_dir, "sweep.csv").write_text(report.to_text())
    return report


@dataclass(frozen=True)
class AuditStudy:
    dts: tuple[float, ...]
    residuals: tuple[float, ...]

    @property
    def ratios(self) -> tuple[float, ...]:
        r = self.residuals
        return tuple(abs(a) / abs(b) if b != 0 else math.inf for a, b in zip(r, r[1:]))

    def to_text(self) -> str:
        lines = ["dt,residual,ratio_to_previous"]
        ratios = ("",) + tuple(repr(x) for x in self.ratios)
        lines += [f"{d!r},{r!r},{q}" for d, r, q in zip(self.dts, self.residuals, ratios)]
        return "\n".join(lines) + "\n"


def audit_convergence(cfg: RunConfig, levels: int = 4, dt0: float | None = None) -> AuditStudy:
    """One-step energy-audit defect from the configured initial data at
    ``dt0, dt0/2, ...`` (``levels`` values; ``dt0`` defaults to ``dt_max``)."""
    if levels < 2:
        raise ValueError("need at least two step sizes")
    s0 = initial_state(cfg)
    dt0 = cfg.time.dt_max if dt0 is None else dt0
    dts = tuple(dt0 / 2**j for j in range(levels))
    hmf = cfg.init.horizontal_mean_free
    residuals = tuple(
        energy_audit(s0, step(s0, cfg.params, dt, horizontal_mean_free=hmf), cfg.params, dt).residual
        for dt in dts
    )
    return AuditStudy(dts, residuals)
