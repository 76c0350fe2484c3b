"""Spatial cross-correlation and temporal autocorrelation: closed forms and estimators.

Both estimators pool over realizations and over every live cluster:

    rho = sum h_a conj(h_b) / sqrt(sum |h_a|^2 sum |h_b|^2)

Because cluster coefficients carry their power, the matching closed form is
the power-weighted average of the per-cluster ray expectations, with the LoS
term added to the first path. Correlations are ``E{h_a conj(h_b)}`` with
``h_b`` at the larger spacing or later time.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..cir import CirRecord, RayEnsemble, doppler_frequency

__all__ = [
    "CorrelationCurve",
    "ccf_theoretical",
    "ccf_empirical",
    "acf_theoretical",
    "acf_empirical",
    "survival_factor",
    "check_homogeneous",
]


@dataclass
class CorrelationCurve:
    lags: np.ndarray
    values: np.ndarray
    kind: str
    half_width: np.ndarray | None = None


def check_homogeneous(records: Sequence[CirRecord]):
    if not records:
        raise ValueError("need at least one record")
    prints = {r.fingerprint for r in records}
    if len(prints) > 1:
        raise ValueError("records come from different configurations (fingerprint mismatch)")


def _weights(ens: RayEnsemble) -> np.ndarray:
    return ens.powers / (ens.K + 1.0)


def ccf_theoretical(ensembles: Sequence[RayEnsemble], spacings, axis=(0.0, 1.0, 0.0), tx_spacing: float = 0.0,
                    tx_axis=(0.0, 1.0, 0.0)) -> CorrelationCurve:
    """Spatial CCF between rx elements ``spacings`` meters apart along ``axis``.

    Averages the ray-level phase expectation over the given ensembles (one per
    realization, all at the same instant). A non-zero ``tx_spacing`` adds the
    BS-side term.
    """
    d = np.asarray(spacings, dtype=float)
    axis = np.asarray(axis, dtype=float)
    tx_axis = np.asarray(tx_axis, dtype=float)
    total = np.zeros(d.shape, dtype=complex)
    for ens in ensembles:
        k = 2.0 * np.pi / ens.wavelength
        w = _weights(ens)
        proj = ens.Psi @ axis  # (N, M)
        proj_t = ens.Phi @ tx_axis
        phase = np.exp(-1j * k * (d[..., None, None] * proj + tx_spacing * proj_t))
        total += np.sum(w * phase.mean(axis=-1), axis=-1)
        if ens.K > 0 and len(ens.powers):
            phi_los = ens.los_vector / np.linalg.norm(ens.los_vector)
            total += ens.K / (ens.K + 1.0) * np.exp(-1j * k * (d * (-phi_los @ axis) + tx_spacing * (phi_los @ tx_axis)))
    return CorrelationCurve(d, total / len(ensembles), "spatial-ccf")


def ccf_empirical(records: Sequence[CirRecord], snapshot: int = 0, tx: int = 0,
                  normalization: str = "ensemble") -> CorrelationCurve:
    """Spatial CCF between rx element 0 and every rx element.

    Args:
        records: Realizations of one configuration.
        snapshot: Snapshot index within each record.
        tx: Transmit element.
        normalization: ``"ensemble"`` (pooled RMS) or ``"per-sample"``
            (each product divided by its own magnitudes).
    """
    check_homogeneous(records)
    h = np.concatenate([r.snapshot(snapshot).coefficients[:, :, tx] for r in records])  # (E, U)
    rx = records[0].rx_positions
    lags = np.linalg.norm(rx - rx[0], axis=1)
    prod = h[:, :1] * np.conj(h)
    if normalization == "ensemble":
        values = prod.sum(axis=0) / np.sqrt(np.sum(np.abs(h[:, 0]) ** 2) * np.sum(np.abs(h) ** 2, axis=0))
        half = None
    elif normalization == "per-sample":
        unit = prod / np.maximum(np.abs(prod), 1e-300)
        values = unit.mean(axis=0)
        half = 1.96 * unit.std(axis=0) / math.sqrt(len(unit))
    else:
        raise ValueError("normalization must be 'ensemble' or 'per-sample'")
    if len(records) < 100:
        warnings.warn("fewer than 100 realizations: expect correlation errors above a few percent", stacklevel=2)
    return CorrelationCurve(lags, values, "spatial-ccf", half)


def survival_factor(lags, lambda_R: float, D_c: float, fluctuation_rate: float):
    """Probability that a cluster survives ``lags`` seconds."""
    return np.exp(-lambda_R / D_c * fluctuation_rate * np.asarray(lags, dtype=float))


def _path_length(pos_t, pos_r):
    return np.linalg.norm(pos_t, axis=-1) + np.linalg.norm(pos_r, axis=-1)


def acf_theoretical(ensembles: Sequence[RayEnsemble], lags, cfg, survival: bool = True,
                    doppler_phase: str | None = None) -> CorrelationCurve:
    """Temporal ACF at the ensembles' instant for non-negative ``lags`` (s).

    Each ray contributes ``exp(j (phi(t) - phi(t + lag)))`` where ``phi`` is
    the Doppler phase of the chosen mode, with geometry advanced linearly
    over the lag. The sum is multiplied by the cluster survival probability
    unless ``survival`` is false.
    """
    lags = np.asarray(lags, dtype=float)
    if np.any(lags < 0):
        raise ValueError("lags must be >= 0")
    mode = doppler_phase or cfg.doppler_phase
    total = np.zeros(lags.shape, dtype=complex)
    tau = lags[:, None, None, None]
    for ens in ensembles:
        lam = ens.wavelength
        w = _weights(ens)
        v_ms = ens.ms_velocity
        pt1 = ens.pos_T + ens.v_A[:, None, :] * tau
        pr1 = ens.pos_R + (ens.v_Z - v_ms)[:, None, :] * tau
        if mode == "accumulated":
            dl = _path_length(pt1, pr1) - _path_length(ens.pos_T, ens.pos_R)
            ray = np.exp(2j * np.pi * dl / lam)
        else:
            nu0 = ens.doppler()
            phi1 = pt1 / np.linalg.norm(pt1, axis=-1, keepdims=True)
            psi1 = pr1 / np.linalg.norm(pr1, axis=-1, keepdims=True)
            nu1 = doppler_frequency(v_ms, ens.v_A[:, None], ens.v_Z[:, None], phi1, psi1, lam)
            ray = np.exp(2j * np.pi * (nu0 * ens.t - nu1 * (ens.t + lags[:, None, None])))
        total += np.sum(w * ray.mean(axis=-1), axis=-1)
        if ens.K > 0 and len(ens.powers):
            d0 = np.linalg.norm(ens.los_vector)
            d1 = np.linalg.norm(ens.los_vector + v_ms * lags[:, None], axis=-1)
            if mode == "accumulated":
                total += ens.K / (ens.K + 1.0) * np.exp(2j * np.pi * (d1 - d0) / lam)
            else:
                nu0 = -(v_ms @ ens.los_vector) / d0 / lam
                nu1 = -np.sum(v_ms * (ens.los_vector + v_ms * lags[:, None]), axis=-1) / d1 / lam
                total += ens.K / (ens.K + 1.0) * np.exp(2j * np.pi * (nu0 * ens.t - nu1 * (ens.t + lags)))
    values = total / len(ensembles)
    if survival:
        values = values * survival_factor(lags, cfg.scenario.lambda_R, cfg.scenario.D_c, cfg.fluctuation_rate)
    return CorrelationCurve(lags, values, "temporal-acf")


def acf_empirical(records: Sequence[CirRecord], start: int = 0, max_lag: int | None = None, u: int = 0,
                  s: int = 0) -> CorrelationCurve:
    """Temporal ACF from snapshot ``start`` to ``start + max_lag`` of each record.

    Clusters are matched by id; a cluster that died in the meantime
    contributes zero. ``|h|^2`` terms at the lagged instant include newborns.
    Records must share a uniform snapshot spacing over the window.
    """
    check_homogeneous(records)
    rec0 = records[0]
    n_avail = min(r.n_snapshots for r in records) - start
    n_lag = n_avail if max_lag is None else min(max_lag + 1, n_avail)
    if n_lag < 1:
        raise ValueError("start index beyond the end of the records")
    num = np.zeros(n_lag, dtype=complex)
    p1 = 0.0
    p2 = np.zeros(n_lag)
    for rec in records:
        steps = rec.steps[start:start + n_lag]
        if len(steps) > 1 and np.any(np.diff(steps) != steps[1] - steps[0]):
            raise ValueError("acf_empirical needs uniformly spaced snapshots")
        a0, b0 = rec.offsets[start], rec.offsets[start + 1]
        ids0 = rec.cluster_ids[a0:b0]
        h0 = rec.coefficients[a0:b0, u, s]
        order = np.argsort(ids0)
        ids_sorted, h_sorted = ids0[order], h0[order]
        a, b = rec.offsets[start], rec.offsets[start + n_lag]
        ids = rec.cluster_ids[a:b]
        h = rec.coefficients[a:b, u, s]
        lag_of = np.repeat(np.arange(n_lag), np.diff(rec.offsets[start:start + n_lag + 1]))
        prod = np.zeros(len(ids), dtype=complex)
        if len(ids_sorted):
            pos = np.minimum(np.searchsorted(ids_sorted, ids), len(ids_sorted) - 1)
            match = ids_sorted[pos] == ids
            prod[match] = h_sorted[pos[match]] * np.conj(h[match])
        num += np.bincount(lag_of, prod.real, n_lag) + 1j * np.bincount(lag_of, prod.imag, n_lag)
        p1 += float(np.sum((h0 * np.conj(h0)).real))
        p2 += np.bincount(lag_of, (h * np.conj(h)).real, n_lag)
    values = num / np.sqrt(p1 * p2)
    dt_lag = (rec0.steps[start + 1] - rec0.steps[start]) * rec0.sample_interval if n_lag > 1 else rec0.sample_interval
    return CorrelationCurve(np.arange(n_lag) * dt_lag, values, "temporal-acf")
