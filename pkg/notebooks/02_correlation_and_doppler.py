# ---
# jupyter:
#   jupytext:
#     formats: py:percent
# ---

# %% [markdown]
# # Temporal and spatial correlation, Doppler spectrum
#
# The closed-form ACF and CCF are compared with estimates pooled over
# realizations. The closed form is evaluated on the same cluster geometry as
# the simulation, so the two should agree up to ensemble noise.

# %%
import matplotlib.pyplot as plt
import numpy as np

from nsmimo import ChannelSimulator, load_config
from nsmimo.stats import (acf_empirical, acf_theoretical, ccf_empirical, ccf_theoretical, doppler_psd)

cfg = load_config("../configs/umi_nlos_correlation.ini")
f_m = cfg.ms_motion.speed / cfg.wavelength
n_lag = int(np.ceil(3 / (f_m * cfg.sample_interval))) + 1
n_real = 100

records, rays = {0.0: [], 2.0: []}, {0.0: [], 2.0: []}
for r in range(n_real):
    sim = ChannelSimulator(cfg, r)
    for t in records:
        k = int(round(t / cfg.sample_interval))
        records[t].append(sim.evaluate(np.arange(k, k + n_lag)))
        rays[t].append(sim.rays(k))

# %%
fig, (a1, a2) = plt.subplots(1, 2, figsize=(10, 4))
for t in records:
    emp = acf_empirical(records[t])
    th = acf_theoretical(rays[t], emp.lags, cfg)
    a1.plot(emp.lags * f_m, np.abs(th.values), label=f"theory t={t:g} s")
    a1.plot(emp.lags * f_m, np.abs(emp.values), ".", ms=3, label=f"simulated t={t:g} s")
    c = ccf_empirical(records[t])
    ct = ccf_theoretical(rays[t], c.lags)
    a2.plot(c.lags / cfg.wavelength, np.abs(ct.values))
    a2.plot(c.lags / cfg.wavelength, np.abs(c.values), ".", ms=3)
    print(f"t={t:g}: max ACF deviation {np.max(np.abs(emp.values - th.values)):.3f}, "
          f"max CCF deviation {np.max(np.abs(c.values - ct.values)):.3f}")
a1.set_xlabel("normalized lag f_m Δt")
a1.set_ylabel("|ACF|")
a1.legend(fontsize=7)
a2.set_xlabel("element spacing (wavelengths)")
a2.set_ylabel("|CCF|")
fig.tight_layout()
fig.savefig("correlation.png", dpi=120)

# %% [markdown]
# ## Doppler PSD drift
#
# The spectrum of the closed-form ACF at three instants. Its peak moves as
# the terminal and the clusters change their relative directions.

# %%
cfg = load_config("../configs/uma_nlos_doppler.ini")
f_max = (50 + 20 + 20) / cfg.wavelength
lags = np.arange(400) / (4 * f_max)
sim = ChannelSimulator(cfg, 0)
plt.figure()
for t in (0.0, 2.0, 4.0):
    acf = acf_theoretical([sim.rays(int(round(t / cfg.sample_interval)))], lags, cfg)
    psd = doppler_psd(acf)
    plt.plot(psd.lags, psd.values / psd.values.max(), label=f"t={t:g} s")
    print(f"t={t:g}: peak at {psd.lags[np.argmax(psd.values)]:.1f} Hz")
plt.xlim(-f_max, f_max)
plt.xlabel("Doppler frequency (Hz)")
plt.ylabel("normalized PSD")
plt.legend()
plt.savefig("doppler_psd.png", dpi=120)
