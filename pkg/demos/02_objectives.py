# %% [markdown]
# # Objectives and landscape checks
# Trid and Rosenbrock test functions, quadratics, a finite-difference gradient
# check and grid-based PL / strong-convexity verifiers.

# %%
import numpy as np

from ptflow import BoxDomain, check_gradient, make_quadratic, make_rosenbrock, make_trid
from ptflow import verify_pl, verify_strong_convexity

trid = make_trid(4)
print("trid n=4 minimizer", trid.minimizer, "f* =", trid.min_value)
print("recorded moduli", trid.pl_modulus, trid.sc_modulus)

rng = np.random.default_rng(0)
for obj in (make_trid(2), make_rosenbrock(2), make_rosenbrock(5), make_quadratic(np.diag([1.0, 4.0]))):
    worst = max(check_gradient(obj, x) for x in rng.uniform(-5, 5, size=(100, obj.dim)))
    print(f"{obj.name:10s} n={obj.dim}  worst gradient mismatch {worst:.1e}")

# %% [markdown]
# The PL ratio |grad f|^2 / (2 (f - f*)) on a grid. For a quadratic its
# minimum is the smallest eigenvalue.

# %%
quad = make_quadratic(np.diag([1.0, 4.0]))
print("quadratic sigma_hat", verify_pl(quad, BoxDomain.cube(2), 51).sigma_hat)
ros = verify_pl(make_rosenbrock(2), BoxDomain.cube(2), 101, sigma=0.1)
print("rosenbrock sigma_hat", ros.sigma_hat, "points below 0.1:", len(ros.violations))

# %%
pairs = verify_strong_convexity(quad, BoxDomain.cube(2), 200, mu=4.5, seed=1)
print("mu = 4.5 exceeds the largest eigenvalue:", len(pairs), "of 200 pairs violate")
print("mu = 1:", len(verify_strong_convexity(quad, BoxDomain.cube(2), 200, mu=1.0, seed=1)), "violations")
