"""Randomized measurement of the implied constants in anisotropic product
estimates and the one-dimensional interpolation inequality.

Every ratio is ``lhs / rhs`` with the constant set to one, so a suite reports
the empirical implied constant instead of asserting a value. On the torus the
distinguished fields must be mean free along their derivative direction,
otherwise a derivative factor can vanish while the integral does not.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .spectral import GridSpec, _rfftn, random_scalar_field

__all__ = [
    "RatioSample",
    "SuiteReport",
    "lemma21_ratio_a",
    "lemma21_ratio_b",
    "lemma22_ratio",
    "suite",
    "KINDS",
]

KINDS = ("lemma21_a", "lemma21_b", "lemma22")


@dataclass(frozen=True)
class RatioSample:
    lhs: float
    rhs: float
    seed: int = 0
    homogeneity_defect: float = 0.0

    @property
    def ratio(self) -> float | None:
        return self.lhs / self.rhs if self.rhs > 0 else None

    @property
    def degenerate(self) -> bool:
        return self.rhs == 0 and self.lhs > 0


def _check_shape(grid: GridSpec, *arrays):
    for a in arrays:
        if np.shape(a) != grid.shape:
            raise ValueError(f"field of shape {np.shape(a)} does not match grid {grid.shape}")


class _Norms:
    """L^2 norms of mixed partial derivatives of one real field, by Parseval."""

    def __init__(self, f: np.ndarray, grid: GridSpec):
        self.grid = grid
        c = _rfftn(f)
        self.power = grid.volume * grid.weights * (c.real**2 + c.imag**2)

    def __call__(self, *axes: int) -> float:
        mult = 1.0
        for a in axes:
            mult = mult * self.grid.kd[a - 1] ** 2
        return math.sqrt(float(np.sum(mult * self.power)))


def _triple_integral(f, g, h, grid: GridSpec) -> float:
    dv = grid.volume / grid.npoints
    return float(np.sum(np.abs(f * g * h))) * dv


def _rhs_a(f, g, h, grid) -> float:
    nf, ng, nh = _Norms(f, grid), _Norms(g, grid), _Norms(h, grid)
    return math.sqrt(nf() * nf(1) * ng() * ng(2) * nh() * nh(3))


def _rhs_b(f, g, h, grid) -> float:
    nf, ng, nh = _Norms(f, grid), _Norms(g, grid), _Norms(h, grid)
    return (nf() * nf(1) * nf(2) * nf(1, 2)) ** 0.25 * math.sqrt(ng() * ng(3)) * nh()


def lemma21_ratio_a(f, g, h, grid: GridSpec) -> RatioSample:
    """``int |fgh|`` against ``|f|^1/2 |d1 f|^1/2 |g|^1/2 |d2 g|^1/2 |h|^1/2 |d3 h|^1/2``.

    ``f`` should be mean free along x1, ``g`` along x2 and ``h`` along x3.
    """
    _check_shape(grid, f, g, h)
    return RatioSample(_triple_integral(f, g, h, grid), _rhs_a(f, g, h, grid))


def lemma21_ratio_b(f, g, h, grid: GridSpec) -> RatioSample:
    """``int |fgh|`` against ``(|f||d1 f||d2 f||d1 d2 f|)^1/4 |g|^1/2 |d3 g|^1/2 |h|``.

    ``f`` should be mean free along x1 and x2, ``g`` along x3.
    """
    _check_shape(grid, f, g, h)
    return RatioSample(_triple_integral(f, g, h, grid), _rhs_b(f, g, h, grid))


def lemma22_ratio(f, q: float, s: float, length: float = 2 * np.pi) -> RatioSample:
    """``|f|_{L^q}`` against ``|f|^(1-theta) |Lambda^s f|^theta`` on a periodic interval.

    ``theta = (1/2 - 1/q) / s``; ``q = inf`` gives the max norm. ``f`` must be
    mean free.
    """
    f = np.asarray(f, dtype=float)
    if f.ndim != 1 or f.size < 2:
        raise ValueError("f must be one-dimensional samples")
    if not q >= 2:
        raise ValueError(f"q must lie in [2, inf], got {q}")
    inv_q = 0.0 if math.isinf(q) else 1.0 / q
    if not s > 0.5 - inv_q:
        raise ValueError(f"s must exceed 1/2 - 1/q = {0.5 - inv_q}, got {s}")
    n = f.size
    dx = length / n
    scale = np.max(np.abs(f), initial=0.0)
    if abs(np.mean(f)) > 1e-10 * max(scale, 1e-300) and scale > 0:
        raise ValueError("f must be mean free")
    if math.isinf(q):
        lhs = float(scale)
    else:
        lhs = float(np.sum(np.abs(f) ** q) * dx) ** inv_q
    c = np.fft.rfft(f) / n
    wts = np.full(c.size, 2.0)
    wts[0] = 1.0
    if n % 2 == 0:
        wts[-1] = 1.0
    xi = 2 * np.pi * np.arange(c.size) / length
    power = length * wts * np.abs(c) ** 2
    l2 = math.sqrt(float(np.sum(power)))
    ls = math.sqrt(float(np.sum(xi ** (2 * s) * power)))
    theta = (0.5 - inv_q) / s
    if theta == 0:
        rhs = math.sqrt(float(np.sum(f**2) * dx))
    else:
        rhs = l2 ** (1 - theta) * ls**theta
    return RatioSample(lhs, rhs)


@dataclass
class SuiteReport:
    kind: str
    n_samples: int
    max_ratio: float
    mean_ratio: float
    quantiles: dict[float, float]
    failures: int
    skipped: int
    max_homogeneity_defect: float
    samples: list[RatioSample] = field(repr=False, default_factory=list)

    def to_text(self) -> str:
        lines = [
            f"kind = {self.kind}",
            f"n_samples = {self.n_samples}",
            f"max_ratio = {self.max_ratio!r}",
            f"mean_ratio = {self.mean_ratio!r}",
        ]
        lines += [f"quantile_{q:g} = {v!r}" for q, v in self.quantiles.items()]
        lines += [
            f"failures = {self.failures}",
            f"skipped = {self.skipped}",
            f"max_homogeneity_defect = {self.max_homogeneity_defect!r}",
        ]
        return "\n".join(lines) + "\n"

    def summary_line(self) -> str:
        return (
            f"{self.kind}: n={self.n_samples} max_ratio={self.max_ratio:.6g} "
            f"mean_ratio={self.mean_ratio:.6g} failures={self.failures}"
        )

    def samples_csv(self) -> str:
        out = io.StringIO()
        out.write("seed,lhs,rhs,ratio,homogeneity_defect\n")
        for smp in self.samples:
            ratio = "" if smp.ratio is None else repr(smp.ratio)
            out.write(f"{smp.seed},{smp.lhs!r},{smp.rhs!r},{ratio},{smp.homogeneity_defect!r}\n")
        return out.getvalue()


_MEAN_FREE = {
    "lemma21_a": ((1,), (2,), (3,)),
    "lemma21_b": ((1, 2), (3,), ()),
}


def _sample_seed(seed: int, i: int) -> int:
    return seed * 1_000_003 + i


def _random_1d(n, length, rng, slope, k_peak):
    m = np.arange(n // 2 + 1)
    xi = 2 * np.pi * m / length
    amp = np.zeros(m.size)
    pos = (m > 0) & (m <= n // 3)
    amp[pos] = np.sqrt(xi[pos] ** slope * np.exp(-((xi[pos] / k_peak) ** 2)))
    c = amp * np.exp(1j * rng.uniform(0, 2 * np.pi, m.size))
    return np.fft.irfft(c, n)


def _one_sample(kind, grid, rng, slope, k_peak, q, s):
    scales = rng.uniform(0.1, 10.0, size=3)
    if kind == "lemma22":
        f = _random_1d(grid.n1, grid.l1, rng, slope, k_peak)
        base = lemma22_ratio(f, q, s, grid.l1)
        scaled = lemma22_ratio(scales[0] * f, q, s, grid.l1)
    else:
        fields = [
            random_scalar_field(grid, rng, slope, k_peak, axes).to_real() for axes in _MEAN_FREE[kind]
        ]
        func = lemma21_ratio_a if kind == "lemma21_a" else lemma21_ratio_b
        base = func(*fields, grid)
        scaled = func(*(c * a for c, a in zip(scales, fields)), grid)
    defect = 0.0
    if base.ratio is not None and scaled.ratio is not None:
        defect = abs(scaled.ratio - base.ratio) / base.ratio
    return base, defect


def suite(
    kind: str,
    grid: GridSpec,
    n_samples: int,
    seed: int = 0,
    spectrum_slope: float = 0.0,
    k_peak: float = 4.0,
    q: float = math.inf,
    s: float = 1.0,
) -> SuiteReport:
    """Aggregate ``n_samples`` random ratios of one kind.

    Sample ``i`` draws from ``default_rng(seed * 1000003 + i)``, so seed sets
    for different ``seed`` values are disjoint whenever ``n_samples`` is below
    1000003. ``lemma22`` uses the first grid axis as the periodic interval.
    Each sample also reports the relative change of its ratio under an
    independent random positive rescaling of every input.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}; expected one of {KINDS}")
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    samples = []
    for i in range(n_samples):
        sid = _sample_seed(seed, i)
        smp, defect = _one_sample(kind, grid, np.random.default_rng(sid), spectrum_slope, k_peak, q, s)
        samples.append(RatioSample(smp.lhs, smp.rhs, sid, defect))
    ratios = np.array([x.ratio for x in samples if x.ratio is not None])
    failures = sum(x.degenerate for x in samples)
    skipped = sum(x.rhs == 0 and x.lhs == 0 for x in samples)
    if ratios.size:
        qs = {p: float(np.quantile(ratios, p)) for p in (0.5, 0.9, 0.99)}
        max_ratio, mean_ratio = float(ratios.max()), float(ratios.mean())
    else:
        qs = {p: math.nan for p in (0.5, 0.9, 0.99)}
        max_ratio = mean_ratio = math.nan
    return SuiteReport(
        kind=kind,
        n_samples=n_samples,
        max_ratio=max_ratio,
        mean_ratio=mean_ratio,
        quantiles=qs,
        failures=int(failures),
        skipped=int(skipped),
        max_homogeneity_defect=max(x.homogeneity_defect for x in samples),
        samples=samples,
    )
