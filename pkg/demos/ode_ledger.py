"""The scalar decay model behind the exponents and the improving exponent ladder.

    python3 demos/ode_ledger.py
"""
import numpy as np

from mmpflow.reduced_ode import LedgerConfig, decay_ode_closed_form, exponent_table, integrate_decay_ode

# X' = -c X^(1 + 1/sigma): for sigma = 1/2 the solution is (1 + 2t)^(-1/2).
cfg = LedgerConfig(sigma=0.5, c=1.0, x0=1.0, t_end=100.0, dt=1e-3)
t, x = integrate_decay_ode(cfg)
exact = decay_ode_closed_form(cfg, t)
for target in (1.0, 4.0, 100.0):
    i = int(np.argmin(abs(t - target)))
    print(f"t = {t[i]:6.1f}  rk4 {x[i]:.12f}  exact {exact[i]:.12f}  rel err {abs(x[i] / exact[i] - 1):.1e}")

# Each pass of the decay argument improves the rate exponent; the iterates
# approach 3 sigma geometrically and the usable rate saturates at 1 + sigma.
print()
print(exponent_table(0.8, 8))
