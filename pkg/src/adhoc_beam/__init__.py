"""Channel selection and mask-based MVDR beamforming for ad-hoc microphone arrays."""

from .beamformer import enhance, mvdr_weights, solve_mvdr, weighted_covariance
from .estimation import TFMask, ideal_ratio_mask, true_channel_weight
from .metrics import evaluate, si_sdr
from .selection import SelectionVector, select
from .spectral import ComplexSpectrogram, StftConfig, TimeSignal, istft, stft
from .sync import gcc_phat, synchronize

__version__ = "0.1.0"

__all__ = ["enhance", "mvdr_weights", "solve_mvdr", "weighted_covariance", "TFMask",
           "ideal_ratio_mask", "true_channel_weight", "evaluate", "si_sdr", "SelectionVector",
           "select", "ComplexSpectrogram", "StftConfig", "TimeSignal", "istft", "stft",
           "gcc_phat", "synchronize"]
