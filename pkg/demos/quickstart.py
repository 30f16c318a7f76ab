"""Build a random solenoidal state, advance it and watch the energy budget.

Run with ``python3 demos/quickstart.py``. Nothing is written to disk.
"""
from mmpflow import GridSpec, PhysParams, State, energy_audit, norms, random_divfree_field, step

grid = GridSpec.cube(16)
params = PhysParams(mu=0.1, nu=0.1, gamma=0.1, kappa=0.1, chi=0.1)

# one independent field per unknown; amplitudes are L2 norms over the box
u, B, w = (random_divfree_field(grid, [2024, j], k_peak=3.0, amplitude=a) for j, a in enumerate((0.1, 0.1, 0.05)))
state = State.from_fields(u, B, w)

dt = 0.05
print(f"{'t':>5} {'l2_U':>12} {'l2_gradhU':>12} {'audit':>10} {'div u':>9}")
for _ in range(20):
    nxt = step(state, params, dt)
    audit = energy_audit(state, nxt, params, dt)
    state = nxt
    r = norms(state, sigma=0.8)
    print(f"{state.t:5.2f} {r.l2_U:12.6e} {r.l2_gradhU:12.6e} {audit.residual:10.2e} {r.div_u_max:9.1e}")

# The audit column is the per-step mismatch between the energy change and the
# trapezoidal estimate of what was dissipated; halving dt cuts it about 8x.
# Energy itself never increases.
