"""Layer-wise word and sentence analyses over speech-model feature dumps."""

__version__ = "0.1.0"

from .featurestore import (  # noqa: F401
    AttributeTable,
    FeatureSequence,
    FeatureStore,
    SegmentSample,
    WordSpan,
    build_onehot_table,
    build_prob_attribute_table,
    load_alignments,
    load_attribute_table,
    read_feature_file,
    sample_word_instances,
    write_feature_file,
)
from .pooling import PoolingSpec, frames_in_span, pool, pool_samples  # noqa: F401
from .cca import CcaResult, ViewPair, cca_protocol, evaluate_cca, fit_cca, pwcca_score  # noqa: F401
from .awd import ScoredPair, average_precision, awd_run, cosine_distance, dtw_distance  # noqa: F401
from .wordseg import (  # noqa: F401
    DissimilarityCurve,
    SegHypothesis,
    SegScore,
    detect_peaks,
    dissimilarity_curve,
    evaluate_boundaries,
    grid_search_layer,
    normalize_utterance,
)
from .sts import SentencePair, pair_similarity, spearman, sts_run, text_overlap_baseline  # noqa: F401
