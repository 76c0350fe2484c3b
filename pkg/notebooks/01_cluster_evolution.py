# ---
# jupyter:
#   jupytext:
#     formats: py:percent
# ---

# %% [markdown]
# # Cluster birth and death
#
# Clusters appear and disappear as the terminal and the scatterers move.
# The expected count settles at `lambda_G / lambda_R` whatever the start.
# Here a 60 m/s terminal sees first-bounce clusters at 15 m/s and last-bounce
# clusters at 5 m/s, with 30% of clusters moving.

# %%
import matplotlib.pyplot as plt
import numpy as np

from nsmimo import ChannelSimulator, loads_config

text = """
[scenario]
preset = umi-nlos
[simulation]
carrier_frequency = 2e9
sample_interval = 0.1
birth_death_steps = 1
duration = 60
seed = 5
[ms]
speed = 60
travel_azimuth = 60
[geometry]
D_T_init = 100
D_R_init = 100
D_LoS_init = 150
[clusters]
speed_A = fixed 15
speed_Z = fixed 5
"""
cfg = loads_config(text)
sim = ChannelSimulator(cfg, 0)
sc = cfg.scenario
print(f"expected count {sc.expected_cluster_count:g}, mean lifetime {cfg.mean_lifetime:.2f} s")

# %% [markdown]
# Each cluster is a horizontal bar from birth to death.

# %%
fig, ax = plt.subplots(figsize=(8, 4))
dt = cfg.sample_interval
for cid in sim.start_step:
    ax.plot([sim.start_step[cid] * dt, sim.end_step[cid] * dt], [cid, cid], lw=2)
ax.set_xlabel("time (s)")
ax.set_ylabel("cluster index")
fig.tight_layout()
fig.savefig("cluster_lifetimes.png", dpi=120)

# %%
counts = sim.cluster_count()
print("time-averaged count:", counts.mean())

# %% [markdown]
# ## Transition region
#
# A new cluster fades in over `L_c` metres of travel and fades out the same
# way before it dies.

# %%
from nsmimo.evolution import attenuation_factor

t = np.linspace(0, 5, 500)
xi = attenuation_factor(t, 5.0, sc.L_c, 60.0, cfg.wavelength)
plt.figure()
plt.plot(t, xi)
plt.xlabel("time since birth (s)")
plt.ylabel("attenuation factor")
plt.savefig("attenuation.png", dpi=120)
