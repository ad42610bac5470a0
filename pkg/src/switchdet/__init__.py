"""Spoken language and speaker change point detection toolkit.

Sliding-window distance contours over voiced frames, with three distance
backends: symmetric KL divergence between window Gaussians, cosine distance
between window occupancy vectors (optionally LDA/WCCN projected), and PLDA
log-likelihood-ratio scoring. Includes corpus synthesis by stitching,
Gaussian amplitude masking around change points, and evaluation utilities.
"""
from .audio import AudioBuffer, read_wav, write_wav
from .backend import (EmbeddingSet, EmbeddingTrack, PldaModel, build_trials,
                      cosine_distance, eer, export_embeddings,
                      import_embeddings, length_normalize, plda_score,
                      plda_score_many, train_lda, train_plda, train_wccn)
from .corpus import (Annotation, apply_gaussian_mask, gaussian_mask,
                     load_annotations, load_manifest, save_annotations,
                     save_manifest, stitch_code_switched)
from .detect import (ChangePointSet, DetectorConfig, DistanceContour,
                     ModelBundle, detect_changes, detect_changes_from_features,
                     embedding_contour, gaussian_kl_contour, pick_peaks,
                     smooth_contour, threshold_contour)
from .errors import SwitchDetError
from .evaluate import (EvalConfig, EvalReport, UttScore, anova_f,
                       detection_error_rate, discrimination_study,
                       evaluate_corpus, score_detection,
                       segment_duration_stats, true_false_distances)
from .features import (FeatureMatrix, append_deltas, extract_features,
                       load_features, lpcc, mfcc, save_features, sdc)
from .gaussian import (DiagGaussian, DiagGmm, StatVector,
                       class_occupancy_vector, fit_diag_gaussian, load_gmm,
                       map_adapt_means, occupancy_vector, save_gmm,
                       symmetric_kl, train_gmm_em)
from .seeding import derive_rng
from .vad import (VadResult, endpoint_trim, energy_vad, select_voiced,
                  select_voiced_from_mask)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
