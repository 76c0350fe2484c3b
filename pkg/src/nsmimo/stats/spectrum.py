"""Doppler power spectral density from a one-sided temporal ACF."""

from __future__ import annotations

import numpy as np

from .correlation import CorrelationCurve

__all__ = ["doppler_psd", "psd_support", "psd_integral"]


def doppler_psd(acf: CorrelationCurve, window: str = "hann", n_fft: int | None = None,
                normalize_peak: bool = False) -> CorrelationCurve:
    """Fourier transform of the ACF over the lag axis.

    The one-sided ACF ``r(0..L-1)`` is extended Hermitian-symmetrically to
    ``2L - 1`` lags, windowed and transformed: ``S(f) = d sum_k w_k r_k
    exp(-j 2 pi f tau_k)``. With the default ``n_fft = 2L - 1`` the discrete
    integral ``sum S df`` equals ``r(0)`` exactly.

    Args:
        acf: Temporal ACF on a uniform non-negative lag grid starting at 0.
        window: ``"hann"`` (``0.5 (1 + cos(pi tau / T))`` with ``T`` one
            step beyond the last lag) or ``"rectangular"``.
        n_fft: Transform length (zero padding); at least ``2L - 1``.
        normalize_peak: Scale the result to unit peak.

    Raises:
        ValueError: on a non-uniform lag grid.
    """
    lags = np.asarray(acf.lags, dtype=float)
    r = np.asarray(acf.values, dtype=complex)
    if lags.size < 2:
        raise ValueError("need at least two lags")
    d = lags[1] - lags[0]
    if lags[0] != 0 or not np.allclose(np.diff(lags), d, rtol=1e-9, atol=0.0):
        raise ValueError("the ACF must be sampled on a uniform lag grid starting at 0")
    n = lags.size
    if window == "hann":
        w = 0.5 * (1.0 + np.cos(np.pi * lags / (lags[-1] + d)))
    elif window == "rectangular":
        w = np.ones(n)
    else:
        raise ValueError("window must be 'hann' or 'rectangular'")
    size = 2 * n - 1 if n_fft is None else int(n_fft)
    if size < 2 * n - 1:
        raise ValueError("n_fft must be at least 2 L - 1")
    x = np.zeros(size, dtype=complex)
    x[:n] = w * r
    x[size - n + 1:] = np.conj(w[1:] * r[1:])[::-1]
    spec = d * np.fft.fft(x)
    freqs = np.fft.fftfreq(size, d)
    order = np.argsort(freqs)
    s = spec.real[order]
    if normalize_peak:
        s = s / s.max()
    return CorrelationCurve(freqs[order], s, "doppler-psd")


def psd_integral(psd: CorrelationCurve) -> float:
    """Rectangle-rule integral ``sum S df`` (exact inverse of the DFT at lag 0)."""
    f = psd.lags
    return float(np.sum(psd.values) * (f[1] - f[0]))


def psd_support(psd: CorrelationCurve, rel_threshold: float = 1e-3) -> float:
    """Largest |f| whose PSD value reaches ``rel_threshold`` times the peak."""
    s = psd.values
    mask = s >= rel_threshold * s.max()
    return float(np.max(np.abs(psd.lags[mask])))
