# %% [markdown]
# How many layers, and when do they pay off?
# The RT estimate of every layer is noisy in much the same way, so averaging
# helps most when SI leakage dominates the error, i.e. at high ISR and SNR.

# %%
import numpy as np

from mmtls.config import Config, apply
from mmtls.experiments import compare_snr, star_terminal, sweep_isr
from mmtls.metrics import to_db

np.set_printoptions(suppress=True)

# %%
for layers in (1, 2, 3, 4):
    cfg = apply(Config(), [("isr_db", "40"), ("snr_db", "30"), ("layers", str(layers))])
    r = star_terminal(cfg, 100)
    print(layers, "layers: RT NMSD %.2f dB" % to_db(r["mmtls"].mean()))

# %%
sweep = sweep_isr(apply(Config(), [("snr_db", "30")]), trials=100)
print(np.column_stack([sweep["isr_db"], sweep["nmsd_mtls_db"], sweep["nmsd_mmtls_db"]]).round(2))

# %%
# heavier impulses hurt the block LS baseline much more than the robust stack
for pi in ("0.01", "0.05"):
    tab = compare_snr(apply(Config(), [("impulse_prob", pi)]), trials=100)
    print("Pi", pi)
    print(np.column_stack(list(tab.values())).round(2))
