# %% [markdown]
# LMS, TLS and MTLS on a noisy-input system identification problem.
# Four impulses hit the output; watch which learning curves jump.

# %%
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from mmtls.experiments import fig2_curves
from mmtls.metrics import to_db
from mmtls.star_sim import FIG2_IMPULSE_TIMES

# %%
res = fig2_curves(trials=100, seed=0)   # shared step size 0.05
cols = res.columns()
for name in ("lms", "tls", "mtls"):
    print(name, "terminal NMSD %.2f dB" % cols[f"nmsd_{name}_db"][-1])

# %%
# level just before each impulse vs the peak right after it
for n in FIG2_IMPULSE_TIMES:
    row = [to_db(res.curves[k][n + 3]) - to_db(res.curves[k][n - 52:n - 2].mean()) for k in ("lms", "tls", "mtls")]
    print(n, np.round(row, 2))

# %%
fig, ax = plt.subplots(figsize=(7, 4))
for name in ("lms", "tls", "mtls"):
    ax.plot(cols["n"], cols[f"nmsd_{name}_db"], label=name.upper(), lw=0.8)
ax.set_xlabel("n")
ax.set_ylabel("NMSD (dB)")
ax.legend()
fig.savefig("impulse_testbench.png", dpi=120)

# %%
# without impulses TLS still wins: LMS is biased by the input noise
clean = fig2_curves(trials=100, seed=0, impulses=False)
print({k: round(to_db(v.mean()), 2) for k, v in clean.terminal.items()})
