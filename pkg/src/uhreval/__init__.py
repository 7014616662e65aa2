"""Evaluation metrics and training-loss kernels for ultra-high-resolution
image synthesis work: patch-level texture scoring, a deterministic baseline
JPEG encoder for compression ratios, Haar wavelet transforms, diffusion and
autoencoder loss kernels, correlation statistics, and dataset curation."""

__version__ = "0.1.0"

from .curation import (
    DatasetStats,
    IMAGE_CAPTION_PROMPT,
    ManifestRecord,
    dataset_stats,
    filter_short_side,
    proportion_above,
    read_manifest,
    request_caption,
    write_manifest,
)
from .diffusion import (
    HF_EMPHASIS_SUBBANDS,
    LossWeights,
    NoiseSchedule,
    RfSample,
    euler_sample,
    forward_marginal,
    forward_step,
    noise_pred_loss,
    rf_loss,
    rf_loss_grad,
    wlf_loss,
    wlf_loss_grad,
)
from .glcm import DEFAULT_OFFSETS, Glcm, GlcmOffset, glcm, glcm_entropy, glcm_score
from .jpeg import JpegSettings, QuantTables, compression_ratio, encode, scale_quant_tables
from .pixel import load_rgb, partition, quantize, to_gray
from .report import ScoreSettings, build_report, compare_sets, score_image, score_paths
from .stats import (
    GaussianMoments,
    fid_from_moments,
    moments_from_features,
    plcc,
    srcc,
)
from .vae import (
    VaeLossWeights,
    adaptive_weight,
    adv_discriminator_loss,
    adv_generator_loss,
    kl_loss,
    sc_loss,
    upsample2x,
    vae_total_loss,
)
from .wavelet import SubbandSet, dwt, idwt

__all__ = [
    "__version__",
    "DatasetStats",
    "IMAGE_CAPTION_PROMPT",
    "ManifestRecord",
    "dataset_stats",
    "filter_short_side",
    "proportion_above",
    "read_manifest",
    "request_caption",
    "write_manifest",
    "HF_EMPHASIS_SUBBANDS",
    "LossWeights",
    "NoiseSchedule",
    "RfSample",
    "euler_sample",
    "forward_marginal",
    "forward_step",
    "noise_pred_loss",
    "rf_loss",
    "rf_loss_grad",
    "wlf_loss",
    "wlf_loss_grad",
    "DEFAULT_OFFSETS",
    "Glcm",
    "GlcmOffset",
    "glcm",
    "glcm_entropy",
    "glcm_score",
    "JpegSettings",
    "QuantTables",
    "compression_ratio",
    "encode",
    "scale_quant_tables",
    "load_rgb",
    "partition",
    "quantize",
    "to_gray",
    "ScoreSettings",
    "build_report",
    "compare_sets",
    "score_image",
    "score_paths",
    "GaussianMoments",
    "fid_from_moments",
    "moments_from_features",
    "plcc",
    "srcc",
    "VaeLossWeights",
    "adaptive_weight",
    "adv_discriminator_loss",
    "adv_generator_loss",
    "kl_loss",
    "sc_loss",
    "upsample2x",
    "vae_total_loss",
    "SubbandSet",
    "dwt",
    "idwt",
]
