# %% [markdown]
# # Flow vector fields
# Vanilla, two fractional-power baselines, the prescribed-time flow and the
# scalar regulator, all evaluated through one ``field`` function.

# %%
import numpy as np

from ptflow import PrescribedTimeGF, PTRegulator, QRescaledGF, QSignedGF, TimeScaleParams, VanillaGF
from ptflow import field, make_trid

obj = make_trid(2)
x = np.array([-2.0, 3.0])
ts = TimeScaleParams(Tp=10.0)
flows = {
    "vanilla c=1": VanillaGF(1.0),
    "q-rescaled q=3": QRescaledGF(1.0, 3.0),
    "q-signed q=3": QSignedGF(1.0, 3.0),
    "prescribed k=0.1": PrescribedTimeGF(0.1, ts),
}
g = obj.grad(x)
for name, spec in flows.items():
    v = field(spec, obj, 0.0, x)
    print(f"{name:18s} v = {v}  descent: {float(v @ g) < 0}")

# %% [markdown]
# The prescribed-time field is the vanilla one scaled by k T(t), so its speed
# grows without bound near t0 + Tp.

# %%
pt = flows["prescribed k=0.1"]
for t in (0.0, 5.0, 9.0, 9.99):
    print(f"t={t:5.2f}  |v| = {np.linalg.norm(field(pt, obj, t, x)):.4g}")

# %%
reg = PTRegulator(1.0, ts)
print("regulator at x=5, t=0:", field(reg, None, 0.0, np.array([5.0])))
