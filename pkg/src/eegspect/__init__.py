"""EEG movement-execution classification pipeline.

Filtered multi-channel trials become log-power STFT spectrograms, raw
labels merge into movement classes, and a compact convolutional network is
trained per subject. See the README for the CLI and the estimator API.
"""

from .dataset import (
    FOUR_CLASS,
    THREE_CLASS,
    Example,
    MergedLabel,
    SplitManifest,
    build_examples,
    merge_classes,
    slice_trial,
    split,
)
from .estimators import BandNotchFilter, SpectrogramTransformer, VggLiteClassifier
from .filters import (
    Biquad,
    SosCascade,
    apply_sos,
    design_cheby_bandpass,
    design_notch,
    frequency_response,
)
from .stft import (
    ComplexStft,
    Spectrogram,
    StackedSpectrogram,
    StftConfig,
    blackman_window,
    export_image,
    log_power,
    stack3,
    stft,
)
from .trial_store import (
    RawLabel,
    SynthSpec,
    Trial,
    TrialSet,
    import_csv,
    read_archive,
    synthesize_dataset,
    write_archive,
)

__version__ = "0.1.0"
