from .butterworth import ButterworthConfig, butterworth_lowpass, butterworth_sos
from .lwpr import lwpr_smooth
from .pipeline import DENOISERS, denoise_and_estimate, denoise_positions
from .regression import regression_state_detect
from .signal import Signal1D
from .spectral import dft_magnitude
from .tv import TVConfig, shrink, tv_denoise, tv_objective
from .wavelet import wavelet_denoise

__all__ = [
    "ButterworthConfig", "butterworth_lowpass", "butterworth_sos", "lwpr_smooth",
    "DENOISERS", "denoise_and_estimate", "denoise_positions", "regression_state_detect",
    "Signal1D", "dft_magnitude", "TVConfig", "shrink", "tv_denoise", "tv_objective",
    "wavelet_denoise",
]
