"""Multi-level compressive-sensing encryption for ECG segments.

A signal is measured with a secret Gaussian matrix. A sign mask corrupts
chosen samples or frequency bins, and a ternary watermark carrying the
mask is added to the measurements. Key holders without the embedding key
recover a degraded signal; holders of both keys strip the watermark, read
the mask from it and recover the signal in full.
"""

from .codec import (
    Ciphertext,
    CodecConfig,
    HeaderMismatchError,
    MaskConfig,
    RecoveryReport,
    encrypt,
    recover_user_a,
    recover_user_b,
)
from .ecg import AnnotatedRecord, Signal, SynthParams, pan_tompkins, segment, synth_ecg
from .masking import FreqBand, MaskType, NoMask, TimePeaks
from .metrics import EvalReport, full_recovery_rate, peak_match, psnr
from .sensing import EmbedKey, SenseKey
from .solver import SolverConfig, bpdn_solve

__version__ = "0.1.0"
