# %% [markdown]
# # Command line
# The same recipes are available as ``ptflow run|sweep|verify|plot``. Here
# they are driven from Python through ``ptflow.cli.main``; outputs land under
# ./out relative to the working directory.

# %%
from pathlib import Path

from ptflow.cli import main

configs = Path(__file__).resolve().parents[1] / "configs"

print("exit", main(["run", str(configs / "fig1_trid_tp.cfg")]))
print("exit", main(["sweep", str(configs / "fig2_trid_inits.cfg")]))
print(Path("out/fig2/sweep.csv").read_text())

# %% [markdown]
# Verification exits 1 when the requested modulus fails on the grid.

# %%
print("exit", main(["verify", str(configs / "verify_quadratic_sc.cfg"), "--set", "verify.samples=20"]))
print("exit", main(["verify", str(configs / "verify_rosenbrock_pl.cfg")]))

# %%
print("exit", main(["run", str(configs / "regulator.cfg")]))
print("exit", main(["plot", "out/regulator/ptreg.csv", "-o", "out/regulator/replot.svg"]))
