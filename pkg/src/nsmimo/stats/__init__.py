"""Closed-form channel statistics and their empirical estimators."""

from .correlation import (CorrelationCurve, acf_empirical, acf_theoretical, ccf_empirical, ccf_theoretical,
                          survival_factor)
from .lcr import (DegenerateSpectrumError, SpectralMoments, afd_empirical, afd_theoretical, first_path_envelope,
                  lcr_empirical, lcr_theoretical, spectral_moments, spectral_moments_from_rays)
from .marcum import marcum_q1
from .spectrum import doppler_psd, psd_integral, psd_support
from .stationarity import StationarityResult, ccdf, ccdf_quantile, stationary_interval

__all__ = [
    "CorrelationCurve", "acf_empirical", "acf_theoretical", "ccf_empirical", "ccf_theoretical", "survival_factor",
    "DegenerateSpectrumError", "SpectralMoments", "afd_empirical", "afd_theoretical", "first_path_envelope", "lcr_empirical",
    "lcr_theoretical", "spectral_moments", "spectral_moments_from_rays", "marcum_q1", "doppler_psd",
    "psd_integral", "psd_support", "StationarityResult", "ccdf", "ccdf_quantile", "stationary_interval",
]
