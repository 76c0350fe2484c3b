"""Per-sample updates of cluster geometry, delays, powers and angles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter
from scipy.special import logsumexp

from .geometry import SPEED_OF_LIGHT, DirectionAngles, GeometryError, MIN_NORM, cartesian_to_angles
from .scenario import Cluster, ScenarioParams

__all__ = [
    "LosState",
    "update_positions",
    "geometric_delay",
    "update_virtual_delay",
    "virtual_delay_series",
    "virtual_delay_extend",
    "log_power",
    "update_power",
    "normalize_powers",
    "update_angles",
    "update_los",
]


@dataclass(frozen=True)
class LosState:
    """Direct BS -> MS path at one instant."""

    vector: np.ndarray
    D_LoS: float
    departure: DirectionAngles
    arrival: DirectionAngles

    @property
    def delay(self) -> float:
        return self.D_LoS / SPEED_OF_LIGHT


def _relative_time(cluster: Cluster, t) -> np.ndarray:
    t_rel = np.asarray(t, dtype=float) - cluster.anchor_time
    if np.any(t_rel < -1e-9):
        raise ValueError(f"cluster {cluster.id}: positions requested before its anchor time")
    return np.maximum(t_rel, 0.0)


def update_positions(cluster: Cluster, ms_velocity, t) -> tuple[np.ndarray, np.ndarray]:
    """Ray bounce positions at absolute time(s) ``t``.

    Returns arrays of shape ``t.shape + (M, 3)``: BS -> first bounce and
    MS -> last bounce.

    Raises:
        GeometryError: if any ray collapses onto the BS or MS (< 1 mm).
    """
    t_rel = _relative_time(cluster, t)[..., None, None]
    pos_t = cluster.ray_positions_T + cluster.v_A * t_rel
    pos_r = cluster.ray_positions_R + (cluster.v_Z - np.asarray(ms_velocity, dtype=float)) * t_rel
    for label, p in (("first-bounce", pos_t), ("last-bounce", pos_r)):
        if np.any(np.linalg.norm(p, axis=-1) < MIN_NORM):
            raise GeometryError(f"cluster {cluster.id}: {label} ray collapsed onto its anchor")
    return pos_t, pos_r


def geometric_delay(pos_t: np.ndarray, pos_r: np.ndarray) -> np.ndarray:
    """(D_T + D_R)/c with D_T, D_R the ray-averaged bounce distances."""
    d_t = np.linalg.norm(pos_t, axis=-1).mean(axis=-1)
    d_r = np.linalg.norm(pos_r, axis=-1).mean(axis=-1)
    return (d_t + d_r) / SPEED_OF_LIGHT


def update_virtual_delay(previous: float, x: float, dt: float, zeta: float) -> float:
    """One step of the first-order filter ``a prev + (1 - a) x``, ``a = exp(-dt/zeta)``."""
    a = math.exp(-dt / zeta)
    return a * previous + (1.0 - a) * x


def virtual_delay_series(cluster: Cluster, scenario: ScenarioParams, los_delays: np.ndarray,
                         geometric: np.ndarray, dt: float, per_step: bool = False) -> np.ndarray:
    """Filtered virtual delay on the sample grid starting at the anchor sample.

    ``los_delays[k]`` and ``geometric[k]`` are ``D_LoS/c`` and
    ``(D_T + D_R)/c`` at the k-th sample after the anchor (``k = 0`` is the
    anchor itself). The filter input is the virtual-link share of a total
    delay drawn like the initial delays, ``X_k = max(0, D_LoS_k/c + u tau_max -
    geometric_k)``, so the filter relaxes toward the same delay range the
    cluster was initialized from. ``u`` is the cluster's fixed quantile, or an
    independent uniform per step when ``per_step`` is true (drawn from the
    cluster's own stream, so the series does not depend on evaluation order).
    """
    n = len(los_delays)
    if n == 0:
        return np.empty(0)
    head = np.array([cluster.virtual_delay])
    return np.concatenate([head, virtual_delay_extend(cluster, scenario, cluster.virtual_delay, los_delays[1:],
                                                      geometric[1:], dt, 1, per_step)])


def virtual_delay_extend(cluster: Cluster, scenario: ScenarioParams, previous: float, los_delays: np.ndarray,
                         geometric: np.ndarray, dt: float, offset: int, per_step: bool = False) -> np.ndarray:
    """Continue :func:`virtual_delay_series` from sample ``offset`` (>= 1).

    ``previous`` is the filtered value at ``offset - 1``; the inputs cover
    samples ``offset, offset + 1, ...``. Concatenating pieces reproduces the
    one-shot series.
    """
    n = len(los_delays)
    if n == 0:
        return np.empty(0)
    if per_step:
        u = np.random.default_rng(cluster.stream_seed).random(offset - 1 + n)[offset - 1:]
    else:
        u = cluster.delay_target_quantile
    x = np.maximum(0.0, np.asarray(los_delays, dtype=float) + u * scenario.tau_max - geometric)
    a = math.exp(-dt / scenario.zeta)
    return lfilter([1.0 - a], [1.0, -a], x, zi=[a * previous])[0]


def log_power(tau, xi, shadowing_db, scenario: ScenarioParams):
    """Natural log of the unnormalized cluster power.

    Single slope: ``xi^2 exp(-tau (r-1)/(r sigma)) 10^(-Z/10)``; the UMi NLoS
    form uses ``exp(-tau/sigma)``.
    """
    tau = np.asarray(tau, dtype=float)
    if scenario.pdp_kind == "single-slope-exponential":
        decay = (scenario.r_tau - 1.0) / (scenario.r_tau * scenario.sigma_tau)
    else:
        decay = 1.0 / scenario.sigma_tau
    return 2.0 * np.log(xi) - tau * decay - shadowing_db * math.log(10.0) / 10.0


def update_power(tau, xi, shadowing_db, scenario: ScenarioParams):
    """Unnormalized cluster power (may underflow for very large delays; prefer log_power)."""
    return np.exp(log_power(tau, xi, shadowing_db, scenario))


def normalize_powers(log_p: np.ndarray, groups: np.ndarray | None = None, n_groups: int | None = None) -> np.ndarray:
    """Normalize powers to unit sum, optionally per group (snapshot).

    Works in the log domain so that tiny absolute powers cannot underflow.
    """
    log_p = np.asarray(log_p, dtype=float)
    if groups is None:
        if log_p.size == 0:
            raise ValueError("cannot normalize an empty power list")
        return np.exp(log_p - logsumexp(log_p))
    n_groups = int(groups.max()) + 1 if n_groups is None else n_groups
    peak = np.full(n_groups, -np.inf)
    np.maximum.at(peak, groups, log_p)
    if np.any(~np.isfinite(peak[np.unique(groups)])):
        raise FloatingPointError("power sum is zero or not finite")
    p = np.exp(log_p - peak[groups])
    total = np.bincount(groups, weights=p, minlength=n_groups)
    return p / total[groups]


def update_angles(pos_t: np.ndarray, pos_r: np.ndarray, label: str = "cluster") -> tuple[DirectionAngles, DirectionAngles]:
    """(departure, arrival) angles per ray from T-side and R-side vectors."""
    return cartesian_to_angles(pos_t, f"{label} first bounce"), cartesian_to_angles(pos_r, f"{label} last bounce")


def update_los(los0: np.ndarray, ms_velocity, t) -> LosState:
    """LoS state at time ``t`` from the BS -> MS vector at t = 0.

    Departure angles come from the BS -> MS vector, arrival angles from its
    reverse.
    """
    vec = np.asarray(los0, dtype=float) + np.asarray(ms_velocity, dtype=float) * np.asarray(t, dtype=float)[..., None]
    d = np.linalg.norm(vec, axis=-1)
    if np.any(d < MIN_NORM):
        raise GeometryError("MS crossed the BS position (LoS distance < 1 mm)")
    return LosState(vec, d if d.ndim else float(d), cartesian_to_angles(vec, "LoS"), cartesian_to_angles(-vec, "LoS"))
