"""Birth-death evolution of the cluster set.

Clusters die with a memoryless law whose rate follows the mean channel
fluctuation ``v_MS + P_c (v_A + v_Z)``; new clusters are born as a Poisson
count with the expectation that keeps the mean population at
``lambda_G / lambda_R``. Powers fade in and out through an arctan ramp.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .scenario import Cluster, SimulationConfig, new_cluster

__all__ = [
    "FluctuationParams",
    "BirthDeathEvent",
    "channel_fluctuation",
    "survival_probability",
    "expected_new_clusters",
    "evolve_cluster_set",
    "attenuation_factor",
]


@dataclass(frozen=True)
class FluctuationParams:
    P_c: float
    v_A_mean: float
    v_Z_mean: float
    v_MS: float

    def __post_init__(self):
        if not 0.0 <= self.P_c <= 1.0:
            raise ValueError("P_c must lie in [0, 1]")
        if min(self.v_A_mean, self.v_Z_mean, self.v_MS) < 0:
            raise ValueError("speeds must be >= 0")

    @classmethod
    def from_config(cls, cfg: SimulationConfig) -> "FluctuationParams":
        v_a, v_z = cfg.mean_cluster_speeds
        return cls(cfg.scenario.P_c, v_a, v_z, cfg.ms_motion.speed)

    @property
    def rate(self) -> float:
        """Fluctuation in meters per second."""
        return self.v_MS + self.P_c * (self.v_A_mean + self.v_Z_mean)


@dataclass
class BirthDeathEvent:
    time: float
    died: list[int] = field(default_factory=list)
    born: list[int] = field(default_factory=list)


def channel_fluctuation(fp: FluctuationParams, dt_bd: float) -> float:
    """delta_P = [v_MS + P_c (v_A + v_Z)] dt_bd, in meters."""
    if dt_bd < 0:
        raise ValueError("dt_bd must be >= 0")
    return fp.rate * dt_bd


def survival_probability(delta_p: float, lambda_R: float, D_c: float) -> float:
    return math.exp(-lambda_R * delta_p / D_c)


def expected_new_clusters(lambda_G: float, lambda_R: float, p_survival: float) -> float:
    if lambda_R <= 0:
        raise ValueError("lambda_R must be > 0")
    return lambda_G / lambda_R * (1.0 - p_survival)


def evolve_cluster_set(clusters: list[Cluster], cfg: SimulationConfig, rng: np.random.Generator,
                       t: float, dt_bd: float, next_id: int) -> tuple[list[Cluster], BirthDeathEvent, int]:
    """One birth-death step from ``t`` to ``t + dt_bd``.

    Clusters whose lifetime ends by ``t + dt_bd`` are dropped; survivors are
    returned untouched. Newborns are created at ``t + dt_bd``.

    Returns:
        (surviving + new clusters, event record, next free cluster id)
    """
    t_next = t + dt_bd
    survivors = [c for c in clusters if c.death_time > t_next]
    died = [c.id for c in clusters if c.death_time <= t_next]

    sc = cfg.scenario
    p_surv = survival_probability(channel_fluctuation(FluctuationParams.from_config(cfg), dt_bd), sc.lambda_R, sc.D_c)
    n_new = int(rng.poisson(expected_new_clusters(sc.lambda_G, sc.lambda_R, p_surv)))
    born = []
    for _ in range(n_new):
        survivors.append(new_cluster(cfg, rng, next_id, t_next))
        born.append(next_id)
        next_id += 1
    return survivors, BirthDeathEvent(t_next, died, born), next_id


def attenuation_factor(t_rel, lifetime: float, L_c: float, v_ms: float, wavelength: float):
    """Fade-in/fade-out factor xi for a cluster aged ``t_rel`` seconds.

    ``xi = 1/2 - arctan(2 [L_c + (|2t - T| - T) v_MS] / sqrt(lambda L_c)) / pi``.
    ``|2t - T| - T`` is evaluated as ``-2 min(t, T - t)`` so that an infinite
    lifetime gives a pure fade-in.

    Raises:
        ValueError: if ``t_rel`` lies outside ``[0, lifetime]``.
    """
    t_rel = np.asarray(t_rel, dtype=float)
    tol = 1e-9 * max(1.0, float(np.max(np.abs(t_rel), initial=0.0)))
    if np.any(t_rel < -tol) or np.any(t_rel > lifetime + tol):
        raise ValueError("attenuation_factor needs 0 <= t_rel <= lifetime")
    t_rel = np.clip(t_rel, 0.0, lifetime)
    shape = -2.0 * np.minimum(t_rel, lifetime - t_rel)
    arg = 2.0 * (L_c + shape * v_ms) / math.sqrt(wavelength * L_c)
    xi = 0.5 - np.arctan(arg) / np.pi
    return xi if xi.ndim else float(xi)
