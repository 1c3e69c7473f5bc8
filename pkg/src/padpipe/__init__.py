"""padpipe: liveness features and spoof classification for color FFR captures.

Pipeline stages: ingest and clean capture bursts, pick the analysis frame
pair, segment foreground/ridge regions, extract static (164) and dynamic (51)
features, train the fully-connected classifier under cross validation, and
report ROC / APCER / BPCER metrics.  A synthetic capture generator provides a
labeled verification corpus.
"""

from .capture import CaptureSequence, Frame, GroundTruth, RegionSet, to_grayscale
from .classifier import (
    EvalReport,
    ModelBundle,
    NetworkSpec,
    NormalizationStats,
    TrainConfig,
    apply_normalizer,
    fit_normalizer,
    kfold_cv,
    load_model,
    predict,
    roc_metrics,
    save_model,
    train_network,
)
from .config import RunConfig, load_config
from .dynamic_features import (
    DynamicFeatureBlock,
    color_feature_block,
    color_ratio_image,
    color_ratio_measure,
    delta_image_feature,
    intensity_dynamic_features,
    mask_features,
    pair_metrics,
    perspiration_features,
    sequence_euclid,
)
from .frame_selection import FramePair, select_frames
from .ingest import (
    CleaningReport,
    Manifest,
    clean_sequence,
    is_blank,
    load_dataset,
    manifest_from_csv,
    read_manifest,
    write_manifest,
)
from .layout import FeatureLayout, layout_for
from .pipeline import (
    FeatureParams,
    extract_capture,
    extract_features,
    read_features_csv,
    write_features_csv,
)
from .segmentation import (
    RidgeSignal,
    compute_foreground,
    extract_regions,
    extract_ridges,
    realign_signals,
)
from .static_features import (
    haar_decompose,
    intensity_features,
    lbp_features,
    valley_signal,
    wavelet_multires_features,
)
from .synth import LIVE_PRESET, SPOOF_PRESET, PhenomenaParams, generate, generate_preset, save_corpus

__version__ = "0.1.0"
