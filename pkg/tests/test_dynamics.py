import numpy as np
import pytest
from scipy.linalg import expm

from mmpflow.diagnostics import norms
from mmpflow.dynamics import (
    BlowUpError,
    PhysParams,
    State,
    cfl_dt,
    coupling_tendency,
    linear_propagator,
    max_divergence,
    nonlinear_tendency,
    step,
)
from mmpflow.spectral import GridSpec, ShapeError, VectorField, forward_transform, random_divfree_field


def state_from_real(grid, u, B, w, t=0.0):
    def v(f):
        return forward_transform(np.stack([np.broadcast_to(c, grid.shape) for c in f]), grid)

    return State.from_fields(v(u), v(B), v(w), t)


def random_state(grid, seed, amp=0.1):
    return State.from_fields(
        *(random_divfree_field(grid, [seed, j], k_peak=2.0, amplitude=amp) for j in range(3))
    )


class TestParams:
    @pytest.mark.parametrize("field", ["mu", "nu", "gamma"])
    def test_horizontal_viscosities_positive(self, field):
        kw = dict(mu=1, nu=1, gamma=1, kappa=1, chi=1)
        kw[field] = 0.0
        with pytest.raises(ValueError):
            PhysParams(**kw)

    def test_degenerate_needs_override(self):
        with pytest.raises(ValueError):
            PhysParams(1, 1, 1, 0, 1)
        assert PhysParams(1, 1, 1, 0, 0, allow_degenerate=True).chi == 0


class TestState:
    def test_shape_checked(self, grid8):
        with pytest.raises(ShapeError):
            State(grid8, np.zeros((3, 3, 8, 8, 8), dtype=complex))

    def test_from_fields_projects(self, grid8):
        x, _, _ = grid8.mesh()
        zero = np.zeros(grid8.shape)
        s = state_from_real(grid8, (np.sin(x), zero, zero), (zero,) * 3, (np.sin(x), zero, zero))
        assert max_divergence(s.u) < 1e-15
        # w is not projected
        assert np.max(np.abs(s.w.coeffs)) > 0.1


class TestTendencies:
    def test_uniform_flow_advects_w(self, grid8):
        x, _, _ = grid8.mesh()
        zero = np.zeros(grid8.shape)
        one = np.ones(grid8.shape)
        s = state_from_real(grid8, (0.7 * one, zero, zero), (zero,) * 3, (zero, zero, np.sin(x)))
        Nu, NB, Nw = nonlinear_tendency(s)
        assert np.allclose(Nw.to_real()[2], -0.7 * np.cos(x), atol=1e-14)
        assert np.allclose(Nu.to_real(), 0, atol=1e-14)

    def test_induction_and_lorentz(self, grid8):
        x, _, _ = grid8.mesh()
        zero = np.zeros(grid8.shape)
        one = np.ones(grid8.shape)
        # uniform u advects B
        s = state_from_real(grid8, (0.5 * one, zero, zero), (zero, np.sin(x), zero), (zero,) * 3)
        _, NB, _ = nonlinear_tendency(s)
        assert np.allclose(NB.to_real()[1], -0.5 * np.cos(x), atol=1e-14)
        # B = (B0, sin x, 0) gives a Lorentz force B0 cos x along x2
        s = state_from_real(grid8, (zero,) * 3, (0.5 * one, np.sin(x), zero), (zero,) * 3)
        Nu, _, _ = nonlinear_tendency(s)
        assert np.allclose(Nu.to_real()[1], 0.5 * np.cos(x), atol=1e-14)

    def test_nonlinear_energy_neutral(self, grid16):
        s = random_state(grid16, 4, amp=1.0)
        N = np.stack([f.coeffs for f in nonlinear_tendency(s)])
        g = grid16
        work = g.volume * np.sum(g.weights * (s.data.conj() * N).real)
        scale = g.volume * np.sum(g.weights * np.abs(N) ** 2) ** 0.5
        assert abs(work) < 1e-13 * scale

    def test_coupling(self, grid8, params):
        x, _, _ = grid8.mesh()
        zero = np.zeros(grid8.shape)
        s = state_from_real(grid8, (zero, np.sin(x), zero), (zero,) * 3, (zero,) * 3)
        Cu, Cw = coupling_tendency(s, params)
        assert np.allclose(Cw.to_real()[2], 2 * params.chi * np.cos(x), atol=1e-14)
        assert np.allclose(Cu.to_real(), 0)


def mode_operator(p, xi):
    """6x6 linear generator for (u, w) at one wavevector, u restricted by projection."""
    k2 = xi @ xi
    kh2 = xi[0] ** 2 + xi[1] ** 2
    P = np.eye(3) - np.outer(xi, xi) / k2
    K = 1j * np.array([[0, -xi[2], xi[1]], [xi[2], 0, -xi[0]], [-xi[1], xi[0], 0]])
    L = np.zeros((6, 6), dtype=complex)
    L[:3, :3] = -(p.mu * kh2 + p.chi * k2) * np.eye(3)
    L[:3, 3:] = 2 * p.chi * P @ K
    L[3:, :3] = 2 * p.chi * K
    L[3:, 3:] = -(p.gamma * kh2 + 4 * p.chi) * np.eye(3) - p.kappa * np.outer(xi, xi)
    return L


class TestPropagator:
    @pytest.mark.parametrize("idx", [(1, 0, 0), (0, 0, 2), (1, 2, 3), (3, -1, 1), (0, 1, 0)])
    def test_matches_matrix_exponential(self, params, idx):
        grid = GridSpec.cube(16)
        dt = 0.37
        prop = linear_propagator(params, grid, dt)
        i1, i2, i3 = idx
        xi = np.array([i1, i2, i3], dtype=float)
        rng = np.random.default_rng(0)
        u = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        u -= xi * (xi @ u) / (xi @ xi)
        w = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        data = np.zeros((3, 3) + grid.spectral_shape, dtype=complex)
        data[0][:, i1, i2, i3] = u
        data[2][:, i1, i2, i3] = w
        out = prop.apply(data)
        ref = expm(mode_operator(params, xi) * dt) @ np.concatenate([u, w])
        assert np.allclose(out[0][:, i1, i2, i3], ref[:3], rtol=1e-13, atol=1e-15)
        assert np.allclose(out[2][:, i1, i2, i3], ref[3:], rtol=1e-13, atol=1e-15)

    def test_magnetic_decay(self, params):
        grid = GridSpec.cube(8)
        prop = linear_propagator(params, grid, 0.5)
        assert prop.bb[2, 1, 3] == pytest.approx(np.exp(-params.nu * 5 * 0.5))
        # no vertical magnetic dissipation
        assert prop.bb[0, 0, 3] == 1.0

    def test_contractive(self, params):
        grid = GridSpec.cube(16)
        for dt in (1e-3, 0.1, 10.0):
            prop = linear_propagator(params, grid, dt)
            assert np.all(np.abs(prop.uu) <= 1 + 1e-15)
            assert np.all(prop.uu + prop.ww <= 2 + 1e-15)

    def test_rejects_nonpositive_dt(self, params, grid8):
        with pytest.raises(ValueError):
            linear_propagator(params, grid8, 0.0)


class TestStep:
    def test_exact_linear_modes(self, params):
        grid = GridSpec.cube(8)
        x, _, z = grid.mesh()
        zero = np.zeros(grid.shape)
        s = state_from_real(grid, (zero,) * 3, (zero, zero, np.sin(x)), (zero, zero, 0.3 * np.sin(z)))
        for _ in range(7):
            s = step(s, params, 1.0 / 7)
        phys = s.B.to_real()[2], s.w.to_real()[2]
        assert np.allclose(phys[0], np.exp(-params.nu) * np.sin(x), rtol=0, atol=1e-14)
        assert np.allclose(phys[1], 0.3 * np.exp(-(params.kappa + 4 * params.chi)) * np.sin(z), atol=1e-14)

    def test_linear_only_step_is_exact(self, params, grid16):
        s = random_state(grid16, 2)
        a = step(s, params, 0.3, nonlinear=False)
        b = linear_propagator(params, grid16, 0.3).apply(s.data)
        assert np.allclose(a.data, b, atol=1e-16)

    def test_explicit_coupling_agrees_at_small_dt(self, params, grid16):
        s = random_state(grid16, 3)
        dt = 1e-3
        a = step(s, params, dt)
        b = step(s, params, dt, explicit_coupling=True)
        assert np.max(np.abs(a.data - b.data)) < 1e-12 * np.max(np.abs(s.data))

    def test_energy_and_divergence_over_run(self, params, grid16):
        s = random_state(grid16, 6, amp=0.3)
        last = norms(s, 0.8).l2_U
        for _ in range(20):
            s = step(s, params, 0.05)
            rep = norms(s, 0.8)
            assert rep.l2_U <= last * (1 + 1e-10)
            assert rep.div_u_max <= 1e-11 and rep.div_B_max <= 1e-11
            last = rep.l2_U
        assert s.t == pytest.approx(1.0)

    def test_horizontal_mean_filter(self, params, grid16):
        s = random_state(grid16, 1)
        out = step(s, params, 0.1, horizontal_mean_free=True)
        assert np.max(np.abs(out.data[..., grid16.horizontal_zero])) == 0.0

    def test_blow_up_detected(self, params, grid8):
        s = random_state(grid8, 1)
        bad = State(grid8, s.data * np.nan, 0.0)
        with pytest.raises(BlowUpError) as info:
            step(bad, params, 0.1)
        assert info.value.t == pytest.approx(0.1)

    def test_zero_state_stays_zero(self, params, grid8):
        s = step(State.zeros(grid8), params, 0.5)
        assert not np.any(s.data)


def test_cfl(grid16):
    x, _, _ = grid16.mesh()
    zero = np.zeros(grid16.shape)
    s = state_from_real(grid16, (zero, np.sin(x), zero), (zero,) * 3, (zero,) * 3)
    assert cfl_dt(s, 0.5) == pytest.approx(0.5 * grid16.spacing[0], rel=1e-6)
    with pytest.raises(ValueError):
        cfl_dt(s, 0.0)
    assert cfl_dt(State.zeros(grid16)) > 1e6
