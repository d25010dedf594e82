"""Estimator-style API over the pipeline: transformers and a classifier.

These wrappers follow the scikit-learn conventions (constructor stores
hyperparameters verbatim, ``fit`` returns ``self``, fitted state gets a
trailing underscore, ``get_params``/``set_params`` come from the base
class), so the whole pipeline composes with ``sklearn.pipeline.Pipeline``:

    Pipeline([
        ("filter", BandNotchFilter()),
        ("spectrogram", SpectrogramTransformer()),
        ("clf", VggLiteClassifier()),
    ])

``X`` is a stack of raw signals (n_signals x n_samples) through the two
transformers and a tensor (n x 3 x H x W) into the classifier.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin

from . import nn
from .filters import apply_sos, design_cheby_bandpass, design_notch
from .stft import StftConfig, log_power, stack3, stft
from .validation import as_float_matrix


class BandNotchFilter(TransformerMixin, BaseEstimator):
    """Chebyshev bandpass plus power-line notch applied row-wise."""

    def __init__(
        self,
        order: int = 8,
        low_hz: float = 0.01,
        high_hz: float = 200.0,
        ripple_db: float = 0.5,
        notch_hz: float = 50.0,
        notch_q: float = 35.0,
        fs: float = 512.0,
    ):
        self.order = order
        self.low_hz = low_hz
        self.high_hz = high_hz
        self.ripple_db = ripple_db
        self.notch_hz = notch_hz
        self.notch_q = notch_q
        self.fs = fs

    def fit(self, X=None, y=None):
        self.cascades_ = [
            design_cheby_bandpass(
                self.order, self.low_hz, self.high_hz, self.fs, self.ripple_db
            ),
            design_notch(self.notch_hz, self.fs, self.notch_q),
        ]
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "cascades_"):
            self.fit()
        signals = as_float_matrix(X, "X")
        out = np.empty_like(signals)
        for i, row in enumerate(signals):
            for cascade in self.cascades_:
                row = apply_sos(cascade, row)
            out[i] = row
        return out


class SpectrogramTransformer(TransformerMixin, BaseEstimator):
    """Rows of signal in, stacked log-power spectrogram tensors out.

    With stacked=True (default) the output is n x 3 x bins x frames, ready
    for the classifier; stacked=False yields the raw log-power matrices
    n x bins x frames without normalization.
    """

    def __init__(
        self,
        win_len: int = 342,
        hop: int = 2,
        nfft: int = 447,
        fs: float = 512.0,
        epsilon: float = 1e-12,
        stacked: bool = True,
    ):
        self.win_len = win_len
        self.hop = hop
        self.nfft = nfft
        self.fs = fs
        self.epsilon = epsilon
        self.stacked = stacked

    def fit(self, X=None, y=None):
        self.cfg_ = StftConfig(
            win_len=self.win_len,
            hop=self.hop,
            nfft=self.nfft,
            fs=self.fs,
            epsilon=self.epsilon,
        )
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "cfg_"):
            self.fit()
        signals = as_float_matrix(X, "X")
        out = []
        for row in signals:
            spect = log_power(stft(row, self.cfg_))
            if self.stacked:
                out.append(stack3(spect).as_tensor())
            else:
                out.append(spect.values)
        return np.stack(out)


class VggLiteClassifier(ClassifierMixin, BaseEstimator):
    """The VGG-lite network behind a fit/predict interface.

    ``fit`` holds out ``validation_fraction`` of the training data (seeded
    shuffle) for the per-epoch validation pass unless an explicit
    ``validation`` pair is given. Class labels may be arbitrary values;
    they are indexed through ``classes_`` in sorted order.
    """

    def __init__(
        self,
        n_blocks: int = 4,
        lr: float = 0.001,
        momentum: float = 0.9,
        batch_size: int = 16,
        epochs: int = 20,
        seed: int = 0,
        selection: str = nn.BEST_VAL,
        validation_fraction: float = 0.1,
    ):
        self.n_blocks = n_blocks
        self.lr = lr
        self.momentum = momentum
        self.batch_size = batch_size
        self.epochs = epochs
        self.seed = seed
        self.selection = selection
        self.validation_fraction = validation_fraction

    def fit(self, X, y, validation: tuple[np.ndarray, np.ndarray] | None = None):
        x = np.asarray(X, dtype=np.float64)
        labels = np.asarray(y)
        if x.ndim != 4:
            raise ValueError(f"X must be n x C x H x W, got shape {x.shape}")
        if labels.shape != (x.shape[0],):
            raise ValueError("y must be one label per row of X")
        self.classes_, encoded = np.unique(labels, return_inverse=True)
        if self.classes_.size < 2:
            raise ValueError("need at least 2 classes")
        cfg = nn.TrainConfig(
            lr=self.lr,
            momentum=self.momentum,
            batch_size=self.batch_size,
            epochs=self.epochs,
            seed=self.seed,
            selection=self.selection,
        )
        if validation is not None:
            x_val = np.asarray(validation[0], dtype=np.float64)
            y_val = self._encode(np.asarray(validation[1]))
            train_data = (x, encoded)
        else:
            if not (0.0 < self.validation_fraction < 1.0):
                raise ValueError("validation_fraction must lie in (0, 1)")
            rng = np.random.default_rng(self.seed)
            order = rng.permutation(x.shape[0])
            n_val = max(1, int(round(self.validation_fraction * x.shape[0])))
            if n_val >= x.shape[0]:
                raise ValueError("not enough data to hold out a validation set")
            val_idx, train_idx = order[:n_val], order[n_val:]
            train_data = (x[train_idx], encoded[train_idx])
            x_val, y_val = x[val_idx], encoded[val_idx]
        net = nn.init_net(
            k=self.classes_.size,
            seed=self.seed,
            input_hw=x.shape[2:],
            n_blocks=self.n_blocks,
            in_channels=x.shape[1],
        )
        self.net_, self.history_ = nn.train(net, train_data, (x_val, y_val), cfg)
        return self

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        labels, _ = nn.predict(self.net_, np.asarray(X, dtype=np.float64))
        return self.classes_[labels]

    def predict_proba(self, X) -> np.ndarray:
        self._check_fitted()
        _, probs = nn.predict(self.net_, np.asarray(X, dtype=np.float64))
        return probs

    def _encode(self, labels: np.ndarray) -> np.ndarray:
        index = {value: i for i, value in enumerate(self.classes_)}
        try:
            return np.array([index[v] for v in labels], dtype=np.int64)
        except KeyError as exc:
            raise ValueError(f"unseen label {exc.args[0]!r}") from None

    def _check_fitted(self) -> None:
        if not hasattr(self, "net_"):
            raise RuntimeError("classifier is not fitted; call fit first")
