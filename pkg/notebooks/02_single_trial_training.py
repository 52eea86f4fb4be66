# %% [markdown]
# One STAR training block through a three-layer stack, sample by sample.

# %%
import numpy as np

from mmtls.joint_estimator import make_stack, run_training
from mmtls.metrics import nmsd, residual_si_power
from mmtls.star_sim import StarScenario, gen_channels, synthesize, trial_rng

# %%
sc = StarScenario(isr_db=30, snr_db=25, impulse_prob=0.05)
rng = trial_rng(sc.seed, 0)
ch = gen_channels(sc, rng)
records = synthesize(sc, ch, rng)
print("||w||^2 = %.3g, ||h||^2 = %.3g, noise var = %.3g" % (ch.si_taps @ ch.si_taps, ch.rt_taps @ ch.rt_taps, sc.noise_var))

# %%
trace = run_training(make_stack(sc.si_len, sc.rt_len), records, sc.ns, truth=ch)
print("final NMSD  SI %.2f dB  RT %.2f dB" % (trace.nmsd_si_db[-1], trace.nmsd_rt_db[-1]))
print("rejected updates per layer", trace.rejected.mean(axis=0).round(3))

# %%
# impulses are where the rejections cluster
hits = np.array([abs(r.noise) > 5 * np.sqrt(sc.noise_var) for r in records])
print("rejection rate on impulse samples %.2f, elsewhere %.3f"
      % (trace.rejected[hits, 0].mean(), trace.rejected[~hits, 0].mean()))

# %%
# each layer's own RT estimate vs the average
for l in range(trace.stack.num_layers):
    print("layer", l + 1, "RT NMSD %.2f dB" % nmsd(trace.stack.estimate(l).rt_part, ch.rt_taps))
w_sum = sum(trace.stack.estimate(l).si_part for l in range(3))
print("residual SI power %.1f dB" % residual_si_power(records, w_sum))
