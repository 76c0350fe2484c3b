"""Stationary interval from the correlation of averaged power delay profiles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..cir import CirRecord

__all__ = ["StationarityResult", "apdp", "apdp_correlation", "stationary_interval", "ccdf", "ccdf_quantile"]


@dataclass
class StationarityResult:
    """Per-drop stationary intervals and their CCDF.

    ``censored[k]`` is true when the correlation never dropped below the
    threshold before the record (or ``max_lag``) ended, so ``intervals[k]`` is
    a lower bound.
    """

    start_times: np.ndarray
    intervals: np.ndarray
    censored: np.ndarray
    ccdf_x: np.ndarray
    ccdf_p: np.ndarray

    def quantile(self, probability: float) -> float:
        """Interval exceeded by ``probability`` of the drops (e.g. 0.8)."""
        return ccdf_quantile(self.intervals, probability)


def _check_uniform(record: CirRecord) -> float:
    steps = record.steps
    if len(steps) > 1 and np.any(np.diff(steps) != steps[1] - steps[0]):
        raise ValueError("stationarity analysis needs uniformly spaced snapshots")
    return float((steps[1] - steps[0]) * record.sample_interval) if len(steps) > 1 else record.sample_interval


def power_delay_profiles(record: CirRecord, bin_width: float = 5e-9, u: int = 0, s: int = 0):
    """Instantaneous PDPs on a fixed delay grid.

    Coefficients of clusters falling into one delay bin add coherently. Only
    occupied bins are kept; returns ``(bin_delays, P)`` with ``P`` of shape
    ``(snapshots, bins)``.
    """
    bins = np.floor(record.delays / bin_width).astype(np.int64)
    occupied, col = np.unique(bins, return_inverse=True)
    row = record.snapshot_index
    h = np.zeros((record.n_snapshots, occupied.size), dtype=complex)
    np.add.at(h, (row, col), record.coefficients[:, u, s])
    return occupied * bin_width, (h * np.conj(h)).real


def apdp(pdp: np.ndarray, n_pdp: int = 10) -> np.ndarray:
    """Sliding mean over ``n_pdp`` consecutive profiles (rows k .. k+n_pdp-1)."""
    if pdp.shape[0] < n_pdp:
        raise ValueError(f"record has {pdp.shape[0]} snapshots, fewer than N_PDP = {n_pdp}")
    c = np.cumsum(np.vstack([np.zeros((1, pdp.shape[1])), pdp]), axis=0)
    return (c[n_pdp:] - c[:-n_pdp]) / n_pdp


def apdp_correlation(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise ``sum(a b) / max(sum a^2, sum b^2)``."""
    num = np.einsum("kb,kb->k", a, b)
    den = np.maximum(np.einsum("kb,kb->k", a, a), np.einsum("kb,kb->k", b, b))
    return num / den


def ccdf(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Points ``(x, P(X >= x))`` at the sorted unique sample values."""
    v = np.sort(np.asarray(values, dtype=float))
    x, first = np.unique(v, return_index=True)
    return x, 1.0 - first / v.size


def ccdf_quantile(values, probability: float) -> float:
    """Value exceeded by a fraction ``probability`` of samples."""
    return float(np.quantile(np.asarray(values, dtype=float), 1.0 - probability))


def stationary_interval(record: CirRecord, n_pdp: int = 10, c_thresh: float = 0.8, bin_width: float = 5e-9,
                        rule: str = "first-crossing", max_lag: int | None = None, stride: int = 1, u: int = 0,
                        s: int = 0) -> StationarityResult:
    """Stationary interval ``T_s(t_k)`` for every drop ``t_k``.

    Args:
        record: Uniformly sampled snapshots of one realization.
        n_pdp: Profiles per APDP.
        c_thresh: Correlation threshold in (0, 1).
        bin_width: Delay bin width in seconds.
        rule: ``"first-crossing"``: the longest lag up to which the
            correlation stays above the threshold without interruption.
            ``"max"``: the largest lag with correlation above the threshold.
        max_lag: Largest lag examined, in snapshots. When given, only drops
            followed by at least ``max_lag`` profiles are evaluated, so
            intervals near the end of the record are not truncated. By
            default every drop is searched to the end of the record and
            truncated intervals are flagged in ``censored``.
        stride: Evaluate every ``stride``-th drop.
    """
    if not 0 < c_thresh < 1:
        raise ValueError("c_thresh must lie in (0, 1)")
    if rule not in ("first-crossing", "max"):
        raise ValueError("rule must be 'first-crossing' or 'max'")
    dt = _check_uniform(record)
    _, pdp = power_delay_profiles(record, bin_width, u, s)
    prof = apdp(pdp, n_pdp)
    n = prof.shape[0]
    if max_lag is None:
        limit = n - 1
        starts = np.arange(0, n, stride)
    else:
        if max_lag < 1:
            raise ValueError("max_lag must be >= 1")
        limit = int(max_lag)
        starts = np.arange(0, n - limit, stride)
        if starts.size == 0:
            raise ValueError(f"record too short for max_lag = {max_lag} ({n} APDPs)")
    best = np.zeros(starts.size, dtype=np.int64)
    alive = np.ones(starts.size, dtype=bool)
    for j in range(1, limit + 1):
        valid = starts + j < n
        if rule == "first-crossing" and not np.any(alive & valid):
            break
        idx = np.nonzero(valid & (alive if rule == "first-crossing" else True))[0]
        if idx.size == 0:
            break
        c = apdp_correlation(prof[starts[idx]], prof[starts[idx] + j])
        ok = c >= c_thresh
        best[idx[ok]] = j
        if rule == "first-crossing":
            alive[idx[~ok]] = False
    # Censored: the search ran out of lags before the correlation failed.
    horizon = np.minimum(n - 1 - starts, limit)
    if rule == "first-crossing":
        censored = alive & (best == horizon)
    else:
        censored = best == horizon
    intervals = best * dt
    x, p = ccdf(intervals)
    return StationarityResult(starts * dt + record.times[0], intervals, censored, x, p)
