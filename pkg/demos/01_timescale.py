# %% [markdown]
# # Time scale
# The gain T(t) = (Tp / (Tp + t0 - t))**r blows up at t0 + Tp. Its integral
# is the stretched time s, so the horizon [t0, t0 + Tp) maps onto [0, inf).

# %%
import numpy as np

from ptflow import TimeScaleParams, eval_dT, eval_T, integral_T, physical_time, stretched_time

ts1 = TimeScaleParams(Tp=5.0, r=1)
ts2 = TimeScaleParams(Tp=5.0, r=2)
t = np.array([0.0, 2.5, 4.5, 4.95, 5.0 * (1 - 1e-6)])
for p in (ts1, ts2):
    print(f"r={p.r}  T   :", np.array2string(eval_T(p, t), precision=4))
    print(f"r={p.r}  dT  :", np.array2string(eval_dT(p, t), precision=4))
    print(f"r={p.r}  I(t):", np.array2string(integral_T(p, t), precision=4))

# %% [markdown]
# With r = 1 the stretched time only grows like Tp ln(1/delta); with r = 2 it
# grows like Tp / delta. That is why r = 2 drives errors much lower by the
# stopping time t_stop = Tp (1 - delta).

# %%
s = stretched_time(ts2, t)
back = physical_time(ts2, s)
print("round trip error:", np.max(np.abs(back - t)))

# %%
try:
    eval_T(ts1, 5.0)
except ValueError as exc:
    print("outside the horizon:", exc)
