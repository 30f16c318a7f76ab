import numpy as np
import pytest

from mmpflow.diagnostics import NormReport, NormSeries
from mmpflow.reduced_ode import (
    LedgerConfig,
    StepSizeError,
    bootstrap_monitor,
    closed_form_exponents,
    decay_ode_closed_form,
    exponent_table,
    integrate_decay_ode,
    iterate_exponents,
)
from mmpflow.spectral import IllPosedNormError


class TestDecayODE:
    def test_half_sigma_closed_form(self):
        cfg = LedgerConfig(sigma=0.5, t_end=4.0, dt=1e-3)
        t = np.array([0.0, 1.0, 4.0])
        assert np.allclose(decay_ode_closed_form(cfg, t), (1 + 2 * t) ** -0.5, rtol=1e-15)

    @pytest.mark.parametrize("sigma", [0.6, 0.8, 0.99])
    def test_rk4_against_closed_form(self, sigma):
        cfg = LedgerConfig(sigma=sigma, c=2.0, x0=0.7, t_end=10.0, dt=1e-2)
        t, x = integrate_decay_ode(cfg)
        assert t[-1] == 10.0
        assert np.max(np.abs(x / decay_ode_closed_form(cfg, t) - 1)) < 1e-8

    def test_partial_last_step(self):
        cfg = LedgerConfig(sigma=0.5, t_end=1.05, dt=0.1)
        t, _ = integrate_decay_ode(cfg)
        assert len(t) == 12 and t[-1] == 1.05

    def test_zero_initial_value(self):
        cfg = LedgerConfig(sigma=0.5, x0=0.0, t_end=1.0, dt=0.1)
        _, x = integrate_decay_ode(cfg)
        assert not np.any(x)

    def test_oversized_step(self):
        with pytest.raises(StepSizeError):
            integrate_decay_ode(LedgerConfig(sigma=0.5, x0=10.0, t_end=1.0, dt=1.0))

    @pytest.mark.parametrize("kw", [dict(sigma=1.0), dict(sigma=0.5, c=0.0), dict(sigma=0.5, x0=-1.0), dict(sigma=0.5, dt=0.0)])
    def test_config_validation(self, kw):
        with pytest.raises(ValueError):
            LedgerConfig(**kw)


class TestExponents:
    def test_first_terms(self):
        assert np.allclose(iterate_exponents(0.6, 3), [1.2, 1.5, 1.65, 1.725], rtol=0, atol=1e-15)

    def test_closed_form_limit(self):
        a = closed_form_exponents(0.8, 60)
        assert a[0] == pytest.approx(1.6)
        assert a[-1] == pytest.approx(2.4, abs=1e-15)

    def test_table(self):
        text = exponent_table(0.75, 4)
        assert "np." not in text
        lines = text.splitlines()
        assert lines[1] == "k,a_k,closed_form,abs_diff,effective_exponent"
        assert len(lines) == 7
        # effective exponent is capped at 1 + sigma
        assert lines[-1].split(",")[-1] == repr(1.75)

    def test_validation(self):
        with pytest.raises(ValueError):
            iterate_exponents(0.5, -1)
        with pytest.raises(ValueError):
            iterate_exponents(1.5, 3)


def series_from(values, times):
    reps = [NormReport(t, 1.0, 0.0, 0.0, 1.0, v, 0.0, 0.0, 0.0) for t, v in zip(times, values)]
    return NormSeries(0.8, reps)


class TestBootstrap:
    def test_bounds(self):
        s = series_from(np.sqrt([1.0, 1.8, 1.2, 1.0]), [0.0, 0.5, 1.0, 2.0])
        rep = bootstrap_monitor(s, 1.0, transient=1.0)
        assert rep.passed and rep.improved_bound_held
        assert rep.sup == pytest.approx(1.8) and rep.t_sup == 0.5
        strict = bootstrap_monitor(s, 1.0, transient=0.0)
        assert not strict.improved_bound_held

    def test_violation_index(self):
        s = series_from(np.sqrt([1.0, 2.5, 1.0]), [0.0, 1.0, 2.0])
        assert bootstrap_monitor(s, 1.0).first_violation == 1

    def test_missing_negative_norms(self):
        s = series_from([None, 1.0], [0.0, 1.0])
        with pytest.raises(IllPosedNormError):
            bootstrap_monitor(s, 1.0)
