"""Level-crossing rate and average fade duration of the Rician envelope."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .marcum import marcum_q1

__all__ = [
    "SpectralMoments",
    "spectral_moments",
    "spectral_moments_from_rays",
    "lcr_theoretical",
    "afd_theoretical",
    "lcr_empirical",
    "afd_empirical",
    "first_path_envelope",
]

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(96)
_THETA = 0.25 * np.pi * (_NODES + 1.0)
_THETA_W = 0.25 * np.pi * _WEIGHTS


class DegenerateSpectrumError(ValueError):
    """All rays share one Doppler frequency, so the LCR is undefined."""


@dataclass(frozen=True)
class SpectralMoments:
    b0: float
    b1: float
    b2: float
    chi: float

    def __post_init__(self):
        if not self.b0 > 0:
            raise ValueError("b0 must be > 0")


def spectral_moments(doppler, K: float) -> SpectralMoments:
    """Moments ``b_l = (2 pi)^l / (K + 1) mean_m(nu_m^l)`` of the first path.

    Args:
        doppler: Per-ray Doppler frequencies in Hz, shape ``(M,)``.
        K: Rice factor.

    Raises:
        DegenerateSpectrumError: if ``b0 b2 - b1^2 <= 0`` while ``K > 0``.
    """
    nu = np.asarray(doppler, dtype=float)
    b0 = 1.0 / (K + 1.0)
    b1 = 2.0 * np.pi * nu.mean() / (K + 1.0)
    b2 = (2.0 * np.pi) ** 2 * np.mean(nu * nu) / (K + 1.0)
    det = b0 * b2 - b1 * b1
    # Relative floor: identical Doppler values leave only rounding noise.
    if det <= 1e-12 * b0 * b2:
        if K > 0:
            raise DegenerateSpectrumError("b0 b2 - b1^2 <= 0: all rays have the same Doppler frequency")
        det = 0.0
    chi = math.sqrt(K * b1 * b1 / det) if K > 0 else 0.0
    return SpectralMoments(b0, float(b1), float(b2), chi)


def spectral_moments_from_rays(ensemble) -> SpectralMoments:
    """Moments of the first (smallest-delay) path of a :class:`RayEnsemble`."""
    if len(ensemble.powers) == 0:
        raise ValueError("ray ensemble has no clusters")
    return spectral_moments(ensemble.doppler()[0], ensemble.K)


def _log_cosh(x):
    x = np.abs(x)
    return x + np.log1p(np.exp(-2.0 * x)) - math.log(2.0)


def lcr_theoretical(r, moments: SpectralMoments, K: float):
    """Downward level-crossing rate (1/s) at normalized thresholds ``r``.

    The theta integral over [0, pi/2] uses 96-point Gauss-Legendre
    quadrature; the cosh factor is combined with the exponential prefactor in
    the log domain so large ``K r`` does not overflow.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("thresholds must be > 0")
    b0, b1, b2, chi = moments.b0, moments.b1, moments.b2, moments.chi
    spread = math.sqrt(max(b2 / b0 - (b1 / b0) ** 2, 0.0))
    rr = r[..., None]
    cs = chi * np.sin(_THETA)
    bracket = np.exp(-cs * cs) + math.sqrt(math.pi) * cs * erf(cs)
    log_k = _log_cosh(2.0 * math.sqrt(K * (K + 1.0)) * rr * np.cos(_THETA)) - K - (K + 1.0) * rr * rr
    integral = np.sum(_THETA_W * np.exp(log_k) * bracket, axis=-1)
    out = 2.0 * r * math.sqrt(K + 1.0) / math.pi ** 1.5 * spread * integral
    return out if out.ndim else float(out)


def afd_theoretical(r, moments: SpectralMoments, K: float):
    """Average fade duration (s); ``inf`` where the crossing rate is zero."""
    r = np.asarray(r, dtype=float)
    n = np.asarray(lcr_theoretical(r, moments, K))
    cdf = 1.0 - np.asarray(marcum_q1(math.sqrt(2.0 * K), np.sqrt(2.0 * (K + 1.0)) * r))
    with np.errstate(divide="ignore"):
        out = np.where(n > 0, cdf / np.where(n > 0, n, 1.0), np.inf)
    return out if out.ndim else float(out)


def _segments(envelope):
    if isinstance(envelope, (list, tuple)):
        return [np.asarray(e, dtype=float) for e in envelope]
    env = np.asarray(envelope, dtype=float)
    return [env] if env.ndim == 1 else list(env)


def lcr_empirical(envelope, dt: float, thresholds):
    """Downward crossings per second.

    ``envelope`` is one series, a 2-D array or a list of independent
    segments; the observation time is ``(n - 1) dt`` per segment.
    """
    thresholds = np.atleast_1d(np.asarray(thresholds, dtype=float))
    counts = np.zeros(thresholds.size)
    duration = 0.0
    for seg in _segments(envelope):
        above = seg[:-1, None] >= thresholds
        below = seg[1:, None] < thresholds
        counts += np.sum(above & below, axis=0)
        duration += (len(seg) - 1) * dt
    return counts / duration


def afd_empirical(envelope, dt: float, thresholds):
    """Mean fade duration: time spent below the threshold divided by the fade count."""
    thresholds = np.atleast_1d(np.asarray(thresholds, dtype=float))
    time_below = np.zeros(thresholds.size)
    fades = np.zeros(thresholds.size)
    for seg in _segments(envelope):
        time_below += np.sum(seg[:-1, None] < thresholds, axis=0) * dt
        fades += np.sum((seg[:-1, None] >= thresholds) & (seg[1:, None] < thresholds), axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(fades > 0, time_below / np.maximum(fades, 1), np.inf)


def first_path_envelope(record, u: int = 0, s: int = 0) -> np.ndarray:
    """Envelope of the first path per snapshot, scaled to unit RMS.

    The first path is the smallest-delay cluster. Its coefficient is divided
    by the square root of its power so that, as in the closed form, the
    diffuse part has power ``1/(K+1)``; a separate LoS entry is added on top.
    When the LoS is already merged into the first entry the coefficient is
    used unscaled.
    """
    from ..cir import LOS_ID

    env = np.zeros(record.n_snapshots)
    for i in range(record.n_snapshots):
        a, b = record.offsets[i], record.offsets[i + 1]
        ids = record.cluster_ids[a:b]
        h = record.coefficients[a:b, u, s]
        clusters = np.nonzero(ids != LOS_ID)[0]
        los = h[ids == LOS_ID].sum()
        if clusters.size == 0:
            env[i] = abs(los)
            continue
        k = clusters[0]
        if np.any(ids == LOS_ID):
            env[i] = abs(los + h[k] / math.sqrt(record.powers[a + k]))
        else:
            env[i] = abs(h[k])
    rms = math.sqrt(np.mean(env * env))
    if rms == 0:
        raise ValueError("first-path envelope is identically zero")
    return env / rms
