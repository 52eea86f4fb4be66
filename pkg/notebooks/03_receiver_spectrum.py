# %% [markdown]
# Received spectrum before and after cancellation at ISR 40 dB, SNR 20 dB.

# %%
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from mmtls.config import Config, apply
from mmtls.experiments import spectrum
from mmtls.metrics import to_db

# %%
cfg = apply(Config(), [("isr_db", "40"), ("snr_db", "20")])
res = spectrum(cfg, trials=100)
for k, p in res.power.items():
    print(f"{k:9s} {to_db(p):7.2f} dB")

# %%
fig, ax = plt.subplots(figsize=(7, 4))
for k, label in (("rx", "received"), ("rt_noise", "RT + noise"), ("post_sic", "after SIC"), ("rt", "RT only")):
    ax.plot(res.freqs, to_db(res.psd[k]), label=label)
ax.set_xlabel("frequency (Hz)")
ax.set_ylabel("PSD (dB/Hz)")
ax.legend()
fig.savefig("receiver_spectrum.png", dpi=120)
