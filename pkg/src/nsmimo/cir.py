"""Channel coefficient synthesis and the time-stepping simulator.

The Doppler term of each ray can be evaluated two ways:

* ``"accumulated"`` (default): the phase is the integral of the
  instantaneous Doppler frequency. Because ``nu = -d/dt (|D_T| + |D_R|) / lambda``
  for every ray, the integral is exactly ``-2 pi (L(t) - L(anchor)) / lambda``
  with ``L`` the ray's bounce path length, so no step-by-step summation is
  needed and the phase is continuous.
* ``"literal"``: ``exp(j 2 pi nu(t) t)`` with the current Doppler frequency
  multiplying absolute time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .antenna import AntennaArray
from .evolution import BirthDeathEvent, attenuation_factor, evolve_cluster_set
from .geometry import MIN_NORM, SPEED_OF_LIGHT, GeometryError, cartesian_to_angles
from .kinematics import (geometric_delay, log_power, normalize_powers, update_los, update_positions,
                         virtual_delay_extend)
from .scenario import Cluster, SimulationConfig, init_clusters, realization_rng

__all__ = [
    "doppler_frequency",
    "polarization_matrix",
    "nlos_coefficient",
    "los_coefficient",
    "ChannelSnapshot",
    "CirRecord",
    "LOS_ID",
    "RayEnsemble",
    "ChannelSimulator",
    "run",
    "transfer_function",
]

LOS_ID = -1
_CHUNK = 2_000_000  # complex elements per evaluation block


def doppler_frequency(ms_velocity, v_A, v_Z, Phi, Psi, wavelength: float):
    """``nu = (v_MS . Psi - v_A . Phi - v_Z . Psi) / lambda`` in Hz.

    Inputs broadcast over leading axes; the last axis holds x, y, z.
    """
    Phi = np.asarray(Phi, dtype=float)
    Psi = np.asarray(Psi, dtype=float)
    nu = (np.sum(np.asarray(ms_velocity) * Psi, axis=-1) - np.sum(np.asarray(v_A) * Phi, axis=-1)
          - np.sum(np.asarray(v_Z) * Psi, axis=-1)) / wavelength
    return nu if np.ndim(nu) else float(nu)


def polarization_matrix(phases, xpr) -> np.ndarray:
    """2x2 matrices ``[[e^{jVV}, k^-1/2 e^{jVH}], [k^-1/2 e^{jHV}, e^{jHH}]]``.

    ``phases`` has shape ``(..., 4)`` ordered VV, VH, HV, HH.
    """
    e = np.exp(1j * np.asarray(phases, dtype=float))
    k = np.asarray(xpr, dtype=float) ** -0.5
    return np.stack([np.stack([e[..., 0], k * e[..., 1]], -1), np.stack([k * e[..., 2], e[..., 3]], -1)], -2)


def _ray_sum(Phi, Psi, phases, xpr, doppler_phase, tx: AntennaArray, rx: AntennaArray, wavelength: float):
    """Sum over rays of pattern x polarization x array phases x Doppler.

    Shapes: ``Phi, Psi (T, M, 3)``; ``phases (M, 4)``; ``xpr (M,)``;
    ``doppler_phase (T, M)``. Returns ``(T, U, S)``.
    """
    dep = cartesian_to_angles(Phi, "departure direction")
    arr = cartesian_to_angles(Psi, "arrival direction")
    fvt, fht = tx.field(dep.elevation, dep.azimuth)
    fvr, fhr = rx.field(arr.elevation, arr.azimuth)
    pol = polarization_matrix(phases, xpr)
    term = (fvr * (pol[..., 0, 0] * fvt + pol[..., 0, 1] * fht)
            + fhr * (pol[..., 1, 0] * fvt + pol[..., 1, 1] * fht))
    term = term * np.exp(1j * doppler_phase)
    k = 2.0 * np.pi / wavelength
    tx_phase = np.exp(1j * k * (Phi @ tx.positions.T))  # (T, M, S)
    rx_phase = np.exp(1j * k * (Psi @ rx.positions.T))  # (T, M, U)
    # Batched (U x M) @ (M x S) product per time sample.
    return np.matmul((term[..., None] * rx_phase).transpose(0, 2, 1), tx_phase)


def nlos_coefficient(power: float, K: float, Phi, Psi, phases, xpr, doppler_phase, tx: AntennaArray,
                     rx: AntennaArray, wavelength: float) -> np.ndarray:
    """Coefficient ``h[u, s]`` of one cluster at one instant.

    ``Phi, Psi`` are ``(M, 3)`` unit vectors, ``doppler_phase`` the ``(M,)``
    Doppler phases in radians.
    """
    Phi = np.asarray(Phi, dtype=float)[None]
    Psi = np.asarray(Psi, dtype=float)[None]
    m = Phi.shape[1]
    g = _ray_sum(Phi, Psi, phases, xpr, np.asarray(doppler_phase, dtype=float)[None], tx, rx, wavelength)[0]
    return math.sqrt(power / ((K + 1.0) * m)) * g


def los_coefficient(K: float, Phi, theta_vv: float, theta_hh: float, doppler_phase, tx: AntennaArray,
                    rx: AntennaArray, wavelength: float) -> np.ndarray:
    """LoS coefficient(s) ``sqrt(K/(K+1))`` x patterns x diagonal polarization x array phases.

    ``Phi`` is the BS -> MS unit vector with shape ``(T, 3)`` (or ``(3,)``);
    the arrival direction is ``-Phi``. Returns ``(T, U, S)`` (or ``(U, S)``).
    """
    Phi = np.asarray(Phi, dtype=float)
    single = Phi.ndim == 1
    Phi = np.atleast_2d(Phi)
    Psi = -Phi
    dep = cartesian_to_angles(Phi, "LoS")
    arr = cartesian_to_angles(Psi, "LoS")
    fvt, fht = tx.field(dep.elevation, dep.azimuth)
    fvr, fhr = rx.field(arr.elevation, arr.azimuth)
    term = fvr * np.exp(1j * theta_vv) * fvt + fhr * np.exp(1j * theta_hh) * fht
    term = term * np.exp(1j * np.broadcast_to(np.asarray(doppler_phase, dtype=float), term.shape))
    k = 2.0 * np.pi / wavelength
    g = (term[:, None, None] * np.exp(1j * k * (Psi @ rx.positions.T))[:, :, None]
         * np.exp(1j * k * (Phi @ tx.positions.T))[:, None, :])
    g = math.sqrt(K / (K + 1.0)) * g
    return g[0] if single else g


@dataclass
class ChannelSnapshot:
    t: float
    cluster_ids: np.ndarray
    delays: np.ndarray
    powers: np.ndarray
    coefficients: np.ndarray  # (N, U, S)

    @property
    def N(self) -> int:
        return len(self.cluster_ids)


@dataclass
class CirRecord:
    """Snapshots of one realization in ragged (flattened) form.

    Entries of snapshot ``i`` occupy ``offsets[i]:offsets[i+1]`` of the
    per-entry arrays, sorted by (delay, id). When K > 0 the LoS component is
    either its own entry (id ``LOS_ID``, delay ``D_LoS/c``, power
    ``K/(K+1)``) or is added to the first cluster entry, depending on the
    configuration. Cluster powers sum to one per snapshot.
    """

    fingerprint: str
    sample_interval: float
    carrier_frequency: float
    n_rays: int
    seed: int
    realization: int
    rx_positions: np.ndarray
    tx_positions: np.ndarray
    steps: np.ndarray
    offsets: np.ndarray
    cluster_ids: np.ndarray
    delays: np.ndarray
    powers: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        if len(self.offsets) != len(self.steps) + 1:
            raise ValueError("offsets must have one more entry than steps")
        if len(self.steps) > 1 and np.any(np.diff(self.steps) <= 0):
            raise ValueError("snapshot times must be strictly increasing")

    @property
    def times(self) -> np.ndarray:
        return self.steps * self.sample_interval

    @property
    def n_snapshots(self) -> int:
        return len(self.steps)

    @property
    def n_rx(self) -> int:
        return self.rx_positions.shape[0]

    @property
    def n_tx(self) -> int:
        return self.tx_positions.shape[0]

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def entry_counts(self) -> np.ndarray:
        return np.diff(self.offsets)

    @property
    def cluster_counts(self) -> np.ndarray:
        """Live clusters per snapshot (a separate LoS entry is not counted)."""
        return np.bincount(self.snapshot_index[self.cluster_ids != LOS_ID], minlength=self.n_snapshots)

    @property
    def snapshot_index(self) -> np.ndarray:
        """Snapshot number of every flattened entry."""
        return np.repeat(np.arange(self.n_snapshots), self.entry_counts)

    def snapshot(self, i: int) -> ChannelSnapshot:
        a, b = self.offsets[i], self.offsets[i + 1]
        return ChannelSnapshot(float(self.times[i]), self.cluster_ids[a:b], self.delays[a:b], self.powers[a:b],
                               self.coefficients[a:b])

    def narrowband(self, u: int = 0, s: int = 0) -> np.ndarray:
        """Sum of all path coefficients per snapshot for one antenna pair."""
        return np.bincount(self.snapshot_index, weights=self.coefficients[:, u, s].real, minlength=self.n_snapshots) \
            + 1j * np.bincount(self.snapshot_index, weights=self.coefficients[:, u, s].imag, minlength=self.n_snapshots)

    def identical(self, other: "CirRecord") -> bool:
        """Bit-exact equality of every field."""
        if not isinstance(other, CirRecord):
            return False
        for name in self.__dataclass_fields__:
            a, b = getattr(self, name), getattr(other, name)
            if isinstance(a, np.ndarray):
                if a.shape != b.shape or a.dtype != b.dtype or a.tobytes() != b.tobytes():
                    return False
            elif a != b:
                return False
        return True


@dataclass
class RayEnsemble:
    """Geometry of all live clusters at one instant, for closed-form statistics.

    Arrays are indexed by live cluster (sorted by delay, so index 0 is the
    first path): ``pos_T, pos_R (N, M, 3)``, ``v_A, v_Z (N, 3)``,
    ``powers (N,)`` normalized to unit sum.
    """

    t: float
    pos_T: np.ndarray
    pos_R: np.ndarray
    v_A: np.ndarray
    v_Z: np.ndarray
    powers: np.ndarray
    los_vector: np.ndarray
    ms_velocity: np.ndarray
    K: float
    wavelength: float
    cluster_ids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def Phi(self) -> np.ndarray:
        return self.pos_T / np.linalg.norm(self.pos_T, axis=-1, keepdims=True)

    @property
    def Psi(self) -> np.ndarray:
        return self.pos_R / np.linalg.norm(self.pos_R, axis=-1, keepdims=True)

    def doppler(self) -> np.ndarray:
        """Per-ray Doppler frequencies ``(N, M)``."""
        return doppler_frequency(self.ms_velocity, self.v_A[:, None], self.v_Z[:, None], self.Phi, self.Psi,
                                 self.wavelength)


class ChannelSimulator:
    """One realization: birth-death history plus on-demand snapshot evaluation.

    The cluster history over ``[0, duration]`` is generated once at
    construction (birth-death runs first at every multiple of the
    birth-death interval). Snapshots can then be evaluated for any subset of
    sample indices; the result does not depend on which subset is requested.
    """

    def __init__(self, cfg: SimulationConfig, realization: int = 0):
        self.cfg = cfg
        self.realization = realization
        rng = realization_rng(cfg.seed, realization)
        self.los_phases = rng.uniform(0.0, 2.0 * np.pi, 2)
        live = init_clusters(cfg, rng)
        n = cfg.n_snapshots
        self.clusters: dict[int, Cluster] = {c.id: c for c in live}
        self.start_step: dict[int, int] = {c.id: 0 for c in live}
        self.end_step: dict[int, int] = {}
        self.events: list[BirthDeathEvent] = []
        self._vdelay: dict[int, np.ndarray] = {}
        next_id = len(live)
        bd = cfg.birth_death_steps
        j = 1
        while j * bd <= n - 1:
            t_prev = (j - 1) * bd * cfg.sample_interval
            live, event, next_id = evolve_cluster_set(live, cfg, rng, t_prev, cfg.birth_death_interval, next_id)
            for cid in event.died:
                self.end_step[cid] = j * bd
            for c in live:
                if c.id not in self.clusters:
                    self.clusters[c.id] = c
                    self.start_step[c.id] = j * bd
            event.time = j * bd * cfg.sample_interval
            self.events.append(event)
            j += 1
        for c in live:
            self.end_step.setdefault(c.id, n)

    # ------------------------------------------------------------------
    def cluster_count(self, steps=None) -> np.ndarray:
        steps = np.arange(self.cfg.n_snapshots) if steps is None else np.asarray(steps)
        start = np.array(list(self.start_step.values()))
        end = np.array([self.end_step[c] for c in self.start_step])
        return ((steps[:, None] >= start) & (steps[:, None] < end)).sum(axis=1)

    def _check_steps(self, steps) -> np.ndarray:
        steps = np.unique(np.asarray(steps, dtype=np.int64))
        if steps.size and (steps[0] < 0 or steps[-1] >= self.cfg.n_snapshots):
            raise ValueError(f"sample indices must lie in [0, {self.cfg.n_snapshots - 1}]")
        return steps

    def _cluster_states(self, steps: np.ndarray):
        """Yield (cluster, positions in steps, pos_T, pos_R, tau, log power) per live cluster."""
        cfg = self.cfg
        sc = cfg.scenario
        dt = cfg.sample_interval
        v_ms = cfg.ms_velocity
        for cid, c in self.clusters.items():
            s0, s1 = self.start_step[cid], self.end_step[cid]
            idx = np.nonzero((steps >= s0) & (steps < s1))[0]
            if idx.size == 0:
                continue
            sel = steps[idx]
            t = sel * dt
            pos_t, pos_r = update_positions(c, v_ms, t)
            geo = geometric_delay(pos_t, pos_r)
            tau = geo + self._virtual_delay(c, s0, sel[-1])[sel - s0]
            t_rel = np.clip(t - c.birth_time, 0.0, c.lifetime)
            xi = attenuation_factor(t_rel, c.lifetime, sc.L_c, cfg.ms_motion.speed, cfg.wavelength)
            yield c, idx, pos_t, pos_r, tau, log_power(tau, xi, c.shadowing_db, sc)

    def _virtual_delay(self, c: Cluster, s0: int, last: int) -> np.ndarray:
        """Virtual delay of cluster ``c`` on samples ``s0 .. >= last``, memoized per cluster.

        A longer request continues the filter from the cached tail.
        """
        cached = self._vdelay.get(c.id)
        have = 0 if cached is None else len(cached)
        if have > last - s0:
            return cached
        cfg = self.cfg
        dt = cfg.sample_interval
        per_step = cfg.virtual_delay_input == "per-step"
        if have == 0:
            cached = np.array([c.virtual_delay])
            have = 1
        # Grow geometrically so step-by-step requests stay linear overall.
        last = min(max(last, s0 + 2 * have), self.end_step[c.id] - 1)
        grid = np.arange(s0 + have, last + 1) * dt
        los_delay = np.linalg.norm(cfg.los_vector + cfg.ms_velocity * grid[:, None], axis=-1) / SPEED_OF_LIGHT
        geo = _geometric_delay_track(c, cfg.ms_velocity, grid)
        tail = virtual_delay_extend(c, cfg.scenario, cached[-1], los_delay, geo, dt, have, per_step)
        out = np.concatenate([cached, tail])
        self._vdelay[c.id] = out
        return out

    def _doppler_phase(self, c: Cluster, pos_t, pos_r, t) -> np.ndarray:
        cfg = self.cfg
        if cfg.doppler_phase == "accumulated":
            length = np.linalg.norm(pos_t, axis=-1) + np.linalg.norm(pos_r, axis=-1)
            length0 = np.linalg.norm(c.ray_positions_T, axis=-1) + np.linalg.norm(c.ray_positions_R, axis=-1)
            return -2.0 * np.pi * (length - length0) / cfg.wavelength
        Phi = pos_t / np.linalg.norm(pos_t, axis=-1, keepdims=True)
        Psi = pos_r / np.linalg.norm(pos_r, axis=-1, keepdims=True)
        nu = doppler_frequency(cfg.ms_velocity, c.v_A, c.v_Z, Phi, Psi, cfg.wavelength)
        return 2.0 * np.pi * nu * np.asarray(t)[:, None]

    def _los_gain(self, steps: np.ndarray) -> np.ndarray:
        cfg = self.cfg
        t = steps * cfg.sample_interval
        los = update_los(cfg.los_vector, cfg.ms_velocity, t)
        d = np.atleast_1d(los.D_LoS)
        Phi = np.atleast_2d(los.vector) / d[:, None]
        if cfg.doppler_phase == "accumulated":
            phase = -2.0 * np.pi * (d - cfg.D_LoS_init) / cfg.wavelength
        else:
            nu = doppler_frequency(cfg.ms_velocity, 0.0, 0.0, Phi, -Phi, cfg.wavelength)
            phase = 2.0 * np.pi * nu * t
        return los_coefficient(cfg.scenario.rice_factor_K, Phi, self.los_phases[0], self.los_phases[1], phase,
                               cfg.tx_array, cfg.rx_array, cfg.wavelength)

    def evaluate(self, steps=None) -> CirRecord:
        """Snapshots at the given sample indices (default: all)."""
        cfg = self.cfg
        steps = self._check_steps(np.arange(cfg.n_snapshots) if steps is None else steps)
        K = cfg.scenario.rice_factor_K
        u, s = cfg.rx_array.n_elements, cfg.tx_array.n_elements
        group, ids, taus, logp, gains = [], [], [], [], []
        for c, idx, pos_t, pos_r, tau, lp in self._cluster_states(steps):
            t = steps[idx] * cfg.sample_interval
            m = c.n_rays
            g = np.empty((len(idx), u, s), dtype=complex)
            block = max(1, _CHUNK // (m * max(u, s) * max(u * s, 1)))
            for a in range(0, len(idx), block):
                sl = slice(a, a + block)
                pt, pr = pos_t[sl], pos_r[sl]
                Phi = pt / np.linalg.norm(pt, axis=-1, keepdims=True)
                Psi = pr / np.linalg.norm(pr, axis=-1, keepdims=True)
                g[sl] = _ray_sum(Phi, Psi, c.phases, c.xpr, self._doppler_phase(c, pt, pr, t[sl]),
                                 cfg.tx_array, cfg.rx_array, cfg.wavelength)
            gains.append(g / math.sqrt((K + 1.0) * m))
            group.append(idx)
            ids.append(np.full(len(idx), c.id, dtype=np.int64))
            taus.append(tau)
            logp.append(lp)

        n_snap = len(steps)
        if group:
            group = np.concatenate(group)
            ids = np.concatenate(ids)
            taus = np.concatenate(taus)
            powers = normalize_powers(np.concatenate(logp), group, n_snap)
            coeffs = np.sqrt(powers)[:, None, None] * np.concatenate(gains)
        else:
            group = np.zeros(0, dtype=np.int64)
            ids = np.zeros(0, dtype=np.int64)
            taus = powers = np.zeros(0)
            coeffs = np.zeros((0, u, s), dtype=complex)
        own_los = K > 0 and cfg.los_placement == "own-delay"
        if own_los:
            los_delay = np.linalg.norm(cfg.los_vector + cfg.ms_velocity * (steps * cfg.sample_interval)[:, None],
                                       axis=1) / SPEED_OF_LIGHT
            group = np.concatenate([group, np.arange(n_snap)])
            ids = np.concatenate([ids, np.full(n_snap, LOS_ID, dtype=np.int64)])
            taus = np.concatenate([taus, los_delay])
            powers = np.concatenate([powers, np.full(n_snap, K / (K + 1.0))])
            coeffs = np.concatenate([coeffs, self._los_gain(steps)])
        order = np.lexsort((ids, taus, group))
        group, ids, taus, powers, coeffs = group[order], ids[order], taus[order], powers[order], coeffs[order]
        counts = np.bincount(group, minlength=n_snap)
        offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        if K > 0 and not own_los:
            has = counts > 0
            coeffs[offsets[:-1][has]] += self._los_gain(steps[has])
        return CirRecord(
            fingerprint=cfg.fingerprint, sample_interval=cfg.sample_interval, carrier_frequency=cfg.carrier_frequency,
            n_rays=cfg.scenario.M, seed=cfg.seed, realization=self.realization,
            rx_positions=cfg.rx_array.positions.copy(), tx_positions=cfg.tx_array.positions.copy(),
            steps=steps, offsets=offsets, cluster_ids=ids, delays=np.asarray(taus, dtype=float),
            powers=np.asarray(powers, dtype=float), coefficients=coeffs,
        )

    def rays(self, step: int) -> RayEnsemble:
        """Ray geometry and powers of all clusters live at sample ``step``."""
        cfg = self.cfg
        steps = self._check_steps([step])
        rows = [(tau[0], c, pt[0], pr[0], lp[0]) for c, _, pt, pr, tau, lp in self._cluster_states(steps)]
        rows.sort(key=lambda r: (r[0], r[1].id))
        m = cfg.scenario.M
        if rows:
            powers = normalize_powers(np.array([r[4] for r in rows]))
        else:
            powers = np.zeros(0)
        t = float(steps[0] * cfg.sample_interval)
        return RayEnsemble(
            t=t,
            pos_T=np.array([r[2] for r in rows]).reshape(-1, m, 3),
            pos_R=np.array([r[3] for r in rows]).reshape(-1, m, 3),
            v_A=np.array([r[1].v_A for r in rows]).reshape(-1, 3),
            v_Z=np.array([r[1].v_Z for r in rows]).reshape(-1, 3),
            powers=powers,
            los_vector=cfg.los_vector + cfg.ms_velocity * t,
            ms_velocity=cfg.ms_velocity,
            K=cfg.scenario.rice_factor_K,
            wavelength=cfg.wavelength,
            cluster_ids=np.array([r[1].id for r in rows], dtype=np.int64),
        )


def _ray_distance_track(p0: np.ndarray, w: np.ndarray, t_rel: np.ndarray) -> np.ndarray:
    """``|p0 + w t|`` per ray from the expanded quadratic, shape ``(T, M)``."""
    a = np.einsum("mk,mk->m", w, w)
    b = 2.0 * np.einsum("mk,mk->m", p0, w)
    c = np.einsum("mk,mk->m", p0, p0)
    t = t_rel[:, None]
    return np.sqrt(np.maximum(c + t * (b + t * a), 0.0))


def _geometric_delay_track(c: Cluster, v_ms, times) -> np.ndarray:
    """Geometric delay of one cluster on a dense time grid.

    Same quantity as :func:`geometric_delay` on :func:`update_positions`, but
    without materializing the (T, M, 3) position arrays.
    """
    t_rel = np.maximum(np.asarray(times, dtype=float) - c.anchor_time, 0.0)
    w_r = np.broadcast_to(c.v_Z - np.asarray(v_ms, dtype=float), c.ray_positions_R.shape)
    w_t = np.broadcast_to(c.v_A, c.ray_positions_T.shape)
    d_t = _ray_distance_track(c.ray_positions_T, w_t, t_rel)
    d_r = _ray_distance_track(c.ray_positions_R, w_r, t_rel)
    if d_t.size and min(d_t.min(), d_r.min()) < MIN_NORM:
        raise GeometryError(f"cluster {c.id}: ray collapsed onto its anchor")
    return (d_t.mean(axis=1) + d_r.mean(axis=1)) / SPEED_OF_LIGHT


def run(cfg: SimulationConfig, realization: int = 0, steps=None) -> CirRecord:
    """Simulate one realization and return its snapshots."""
    return ChannelSimulator(cfg, realization).evaluate(steps)


def transfer_function(record: CirRecord, frequencies, snapshots=None) -> np.ndarray:
    """``H[u, s, f, t] = sum_n h_n(t) exp(-j 2 pi f tau_n(t))``.

    Args:
        record: Simulated snapshots.
        frequencies: Frequency grid in Hz.
        snapshots: Optional snapshot indices to evaluate (default: all).
    """
    f = np.asarray(frequencies, dtype=float)
    if not np.all(np.isfinite(f)):
        raise ValueError("frequency grid must be finite")
    idx = np.arange(record.n_snapshots) if snapshots is None else np.asarray(snapshots)
    out = np.zeros((record.n_rx, record.n_tx, f.size, idx.size), dtype=complex)
    for j, i in enumerate(idx):
        a, b = record.offsets[i], record.offsets[i + 1]
        phase = np.exp(-2j * np.pi * np.outer(f, record.delays[a:b]))  # (F, N)
        out[:, :, :, j] = np.einsum("nus,fn->usf", record.coefficients[a:b], phase)
    return out
