"""voicedet: cloned-voice detection toolkit.

Three feature families (perceptual timing/amplitude cues, spectral
descriptors with functionals, and external speaker embeddings) feed a
linear and a forest classifier for two tasks: real-vs-synthetic
detection and generator-architecture attribution.  Includes dataset
manifest tooling, adversarial laundering and EER-based evaluation.
"""

from .audio import (
    AudioClip,
    ClipLabel,
    TARGET_SAMPLE_RATE_HZ,
    canonicalize,
    decode_wav,
    encode_wav,
    normalize_amplitude,
    read_wav,
    resample,
    write_wav,
)
from .classify import (
    LogisticRegression,
    RandomForest,
    TrainedModel,
    load_model,
    predict_proba,
    save_model,
    synthetic_score,
    train_model,
    tune_hyperparameters,
)
from .embeddings import EMBEDDING_DIM, Embedding, load_embeddings, write_embeddings
from .errors import VoicedetError
from .evaluate import (
    EvalReport,
    RocCurve,
    class_accuracies,
    compute_eer,
    report_csv,
    report_table,
    roc_curve,
)
from .launder import EncoderConfig, add_noise, assign_laundering, launder_clip, transcode
from .manifest import (
    DatasetManifest,
    LaunderingSpec,
    ManifestEntry,
    balance_architectures,
    balance_paired_utterances,
    build_manifest,
    read_manifest,
    split_dataset,
    write_manifest,
)
from .perceptual import (
    PerceptualExtractor,
    PerceptualFeatures,
    amplitude_features,
    detect_pauses,
    pause_statistics,
    perceptual_features,
    smooth_envelope,
    welch_t_test,
)
from .spectral import (
    ForestFeatureSelector,
    SpectralExtractor,
    Standardizer,
    apply_functionals,
    compute_llds,
    frame_signal,
    lpc_coefficients,
    select_features,
    spectral_features,
    standardize_apply,
    standardize_fit,
)
from .store import FeatureVector, read_feature_store, write_feature_store

__version__ = "0.1.0"

__all__ = [
    "AudioClip",
    "ClipLabel",
    "TARGET_SAMPLE_RATE_HZ",
    "canonicalize",
    "decode_wav",
    "encode_wav",
    "normalize_amplitude",
    "read_wav",
    "resample",
    "write_wav",
    "LogisticRegression",
    "RandomForest",
    "TrainedModel",
    "load_model",
    "predict_proba",
    "save_model",
    "synthetic_score",
    "train_model",
    "tune_hyperparameters",
    "EMBEDDING_DIM",
    "Embedding",
    "load_embeddings",
    "write_embeddings",
    "VoicedetError",
    "EvalReport",
    "RocCurve",
    "class_accuracies",
    "compute_eer",
    "report_csv",
    "report_table",
    "roc_curve",
    "EncoderConfig",
    "add_noise",
    "assign_laundering",
    "launder_clip",
    "transcode",
    "DatasetManifest",
    "LaunderingSpec",
    "ManifestEntry",
    "balance_architectures",
    "balance_paired_utterances",
    "build_manifest",
    "read_manifest",
    "split_dataset",
    "write_manifest",
    "PerceptualExtractor",
    "PerceptualFeatures",
    "amplitude_features",
    "detect_pauses",
    "pause_statistics",
    "perceptual_features",
    "smooth_envelope",
    "welch_t_test",
    "ForestFeatureSelector",
    "SpectralExtractor",
    "Standardizer",
    "apply_functionals",
    "compute_llds",
    "frame_signal",
    "lpc_coefficients",
    "select_features",
    "spectral_features",
    "standardize_apply",
    "standardize_fit",
    "FeatureVector",
    "read_feature_store",
    "write_feature_store",
]
