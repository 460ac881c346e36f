# %% [markdown]
# # Lyapunov envelopes
# Under a PL modulus sigma the gap V = f - f* stays below
# V0 exp(-2 k sigma I(t)); along the slowest eigenvector it is an equality.

# %%
import numpy as np

from ptflow import EnvelopeSpec, IntegratorConfig, PrescribedTimeGF, PTRegulator, TimeScaleParams
from ptflow import check_envelope, integrate, lemma2_oracle, make_quadratic, regulator_bound_check

tight = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-14)
ts = TimeScaleParams(Tp=10.0)
flow = PrescribedTimeGF(0.1, ts)
quad = make_quadratic(np.diag([1.0, 4.0]))
for kind in ("pl_envelope", "sc_envelope"):
    rep = check_envelope(integrate(flow, quad, [1.0, -1.0], tight), quad, EnvelopeSpec(kind, 1.0, ts, gain=0.1))
    print(f"{kind}: holds={rep.holds} worst exceedance {rep.max_violation:.1e}")

eye = make_quadratic(np.eye(2))
rep = check_envelope(integrate(flow, eye, [1.0, -1.0], tight), eye, EnvelopeSpec("pl_envelope", 1.0, ts, gain=0.1))
print("equality case, max rel gap:", np.max(np.abs(rep.V - rep.bound) / rep.bound))

# %% [markdown]
# The scalar lemma: a disturbance L(t) enters through T(t) L^2 / (4 lambda).
# The bound adds sup L^2 / (8 rho lambda) to the decaying envelope.

# %%
for L, label in ((lambda t: np.zeros_like(t), "L=0"), (lambda t: np.sin(10 * t), "L=sin 10t")):
    res = lemma2_oracle(0.5, 2.0, L, TimeScaleParams(Tp=5.0), 1.0, 5.0 * (1 - 1e-6))
    print(f"{label:9s} holds={res.holds}  V(t_stop)={res.V_traj[-1]:.3e}  bound={res.bound_traj[-1]:.3e}")

# %% [markdown]
# The regulator x' = -(rho0 + r/Tp) T x has x = x0 (1 - t/Tp)**(rho0 Tp + 1)
# for r = 1. That meets the rate-rho0 state bound with equality, while the
# rate-2 rho0 variant is violated.

# %%
cfg = IntegratorConfig(mode="stretched", rel_tol=1e-10, abs_tol=1e-300)
traj = integrate(PTRegulator(1.0, ts), None, [5.0], cfg)
rep = regulator_bound_check(traj, 1.0, ts)
print(f"rate rho0: holds={rep.holds}   rate 2 rho0: holds={rep.strict_holds}"
      f" (worst exceedance {rep.strict_max_violation:.2g})")
