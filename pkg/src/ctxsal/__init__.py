"""Context-aware saliency maps from color, contrast and semantic segmentation."""
from .context import (
    AreaFeatures,
    Context,
    ContextClassifier,
    classify,
    extract_area_features,
    forward,
    load_model,
    save_model,
    train,
)
from .config import PipelineConfig
from .core import VOC_CLASSES, VOID, hsv_to_rgb, mean_filter, normalize, rgb_to_hsv
from .dataset import (
    ContextDataset,
    VocCorpus,
    build_context_dataset,
    decode_label_png,
    derive_context_label,
    load_context_mapping,
    load_corpus,
)
from .features import color_saliency, contrast_saliency
from .pipeline import (
    ContextSaliency,
    SaliencyResult,
    center_prior,
    fuse_color_contrast,
    fuse_semantic,
    run_pipeline,
)
from .semantic import LutBank, SaliencyLut, apply_lut, load_lut_bank, select_lut, semantic_saliency

__version__ = "0.1.0"

__all__ = [
    "AreaFeatures", "Context", "ContextClassifier", "ContextDataset", "ContextSaliency",
    "LutBank", "PipelineConfig", "SaliencyLut", "SaliencyResult", "VOC_CLASSES", "VOID",
    "VocCorpus", "apply_lut", "build_context_dataset", "center_prior", "classify",
    "color_saliency", "contrast_saliency", "decode_label_png", "derive_context_label",
    "extract_area_features", "forward", "fuse_color_contrast", "fuse_semantic",
    "hsv_to_rgb", "load_context_mapping", "load_corpus", "load_lut_bank", "load_model",
    "mean_filter", "normalize", "rgb_to_hsv", "run_pipeline", "save_model",
    "select_lut", "semantic_saliency", "train",
]
