"""Fusion of the three cues, center prior, smoothing, and the end-to-end estimator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin, clone
from sklearn.utils.validation import check_is_fitted

from .config import PipelineConfig
from .context import Context, ContextClassifier, extract_area_features, load_model
from .core import (
    check_label_map,
    check_rgb_image,
    check_same_shape,
    check_saliency_map,
    mean_filter,
    normalize,
    rgb_to_hsv,
)
from .features import color_saliency, contrast_saliency
from .semantic import LutBank, load_lut_bank, semantic_saliency


def fuse_color_contrast(s_cn, s_cl, w1: float = 0.5, w2: float = 0.5) -> np.ndarray:
    """Linear blend ``w1 * s_cn + w2 * s_cl``."""
    if w1 < 0 or w2 < 0 or not w1 + w2 > 0:
        raise ValueError("fusion weights must be non-negative with a positive sum")
    s_cn = check_saliency_map(s_cn)
    s_cl = check_saliency_map(s_cl)
    check_same_shape(s_cn, s_cl, names=("s_cn", "s_cl"))
    return w1 * s_cn + w2 * s_cl


def fuse_semantic(s_sege, s_cncl) -> np.ndarray:
    s_sege = check_saliency_map(s_sege)
    s_cncl = check_saliency_map(s_cncl)
    check_same_shape(s_sege, s_cncl, names=("s_sege", "s_cncl"))
    return s_sege * s_cncl


def center_weights(shape, sigma_sq: float = 40.0) -> np.ndarray:
    """``2 + exp(-D^2 / (sigma_sq * max(M, N)))`` on an ``M x N`` grid.

    ``D`` is the distance from pixel ``(x, y)`` (row, column) to the
    continuous center ``(M/2, N/2)``.
    """
    if not sigma_sq > 0:
        raise ValueError(f"sigma_sq must be > 0, got {sigma_sq}")
    m, n = shape[:2]
    x = np.arange(m, dtype=np.float64)[:, None] - m / 2.0
    y = np.arange(n, dtype=np.float64)[None, :] - n / 2.0
    d_sq = x * x + y * y
    return 2.0 + np.exp(-d_sq / (sigma_sq * max(m, n)))


def center_prior(values, sigma_sq: float = 40.0, *, normalized: bool = True) -> np.ndarray:
    arr = check_saliency_map(values)
    weighted = arr * center_weights(arr.shape, sigma_sq)
    return normalize(weighted) if normalized else weighted


@dataclass
class SaliencyResult:
    final: np.ndarray
    s_cn: np.ndarray
    s_cl: np.ndarray
    s_sege: np.ndarray
    s_cncl: np.ndarray
    context: Context

    def intermediates(self) -> dict[str, np.ndarray]:
        return {"s_cn": self.s_cn, "s_cl": self.s_cl, "s_sege": self.s_sege, "s_cncl": self.s_cncl}


def run_pipeline(img, labels, cfg: PipelineConfig, model, bank: LutBank) -> SaliencyResult:
    img = check_rgb_image(img)
    labels = check_label_map(labels)
    check_same_shape(img, labels, names=("image", "label map"))

    hsv = rgb_to_hsv(img)
    s_cn = contrast_saliency(hsv, cfg.block_size)
    s_cl = color_saliency(hsv, cfg.p)
    s_sege, ctx = semantic_saliency(labels, bank, model, cfg.user_lut)

    s_cncl = fuse_color_contrast(s_cn, s_cl, cfg.w1, cfg.w2)
    final = fuse_semantic(s_sege, s_cncl)
    if cfg.center_prior:
        final = center_prior(final, cfg.sigma_sq)
    if cfg.smooth:
        final = mean_filter(final, cfg.smooth_size)
    final = normalize(final)
    return SaliencyResult(final, s_cn, s_cl, s_sege, s_cncl, ctx)


class ContextSaliency(TransformerMixin, BaseEstimator):
    """Context-aware saliency maps from (RGB image, label map) pairs.

    ``X`` is a sequence of ``(image, labels)`` pairs with matching ``H x W``.
    :meth:`fit` either adopts an already fitted ``context_model`` (``y`` is
    None) or trains a clone of it on the label maps of ``X`` against the
    context codes in ``y``. :meth:`transform` returns a list of final maps,
    one per pair, since images may differ in size.

    Parameters
    ----------
    block_size : int, default 16
        Window side for the contrast energy.
    p : float, default 4.0
        Hue filter sharpening exponent.
    w1, w2 : float, default 0.5
        Contrast and color weights of the linear fusion.
    sigma_sq : float, default 40.0
        Center prior spread.
    center_prior : bool, default True
    smooth : bool, default True
    smooth_size : int, default 20
        Mean filter size.
    use_user_lut : bool, default False
        Use the bank's user LUT instead of the context-selected one.
    context_model : ContextClassifier or None
    lut_bank : LutBank or None
        None loads the packaged default bank.
    """

    def __init__(self, block_size=16, p=4.0, w1=0.5, w2=0.5, sigma_sq=40.0,
                 center_prior=True, smooth=True, smooth_size=20, use_user_lut=False,
                 context_model=None, lut_bank=None):
        self.block_size = block_size
        self.p = p
        self.w1 = w1
        self.w2 = w2
        self.sigma_sq = sigma_sq
        self.center_prior = center_prior
        self.smooth = smooth
        self.smooth_size = smooth_size
        self.use_user_lut = use_user_lut
        self.context_model = context_model
        self.lut_bank = lut_bank

    @classmethod
    def from_config(cls, cfg: PipelineConfig) -> "ContextSaliency":
        """Build from a config, loading the model and LUT bank files it names."""
        model = load_model(cfg.model) if cfg.model else None
        bank = load_lut_bank(cfg.lut_bank)
        return cls(block_size=cfg.block_size, p=cfg.p, w1=cfg.w1, w2=cfg.w2,
                   sigma_sq=cfg.sigma_sq, center_prior=cfg.center_prior, smooth=cfg.smooth,
                   smooth_size=cfg.smooth_size, use_user_lut=cfg.user_lut,
                   context_model=model, lut_bank=bank)

    def _config(self) -> PipelineConfig:
        return PipelineConfig(block_size=self.block_size, p=self.p, w1=self.w1, w2=self.w2,
                              sigma_sq=self.sigma_sq, center_prior=self.center_prior,
                              smooth_size=self.smooth_size, smooth=self.smooth,
                              user_lut=self.use_user_lut)

    def fit(self, X=None, y=None):
        self.config_ = self._config()
        self.lut_bank_ = self.lut_bank if self.lut_bank is not None else load_lut_bank()
        if y is None:
            if self.context_model is None:
                raise ValueError("no context_model given and no context labels to train one")
            check_is_fitted(self.context_model, "coefs_")
            self.context_model_ = self.context_model
        else:
            features = np.stack([extract_area_features(labels) for _, labels in X])
            base = self.context_model if self.context_model is not None else ContextClassifier()
            self.context_model_ = clone(base).fit(features, y)
        return self

    def run(self, image, labels) -> SaliencyResult:
        check_is_fitted(self, "context_model_")
        return run_pipeline(image, labels, self.config_, self.context_model_, self.lut_bank_)

    def transform(self, X):
        return [self.run(image, labels).final for image, labels in X]

    def predict_context(self, X):
        """Detected context code of each pair."""
        check_is_fitted(self, "context_model_")
        features = np.stack([extract_area_features(labels) for _, labels in X])
        return self.context_model_.predict(features)
