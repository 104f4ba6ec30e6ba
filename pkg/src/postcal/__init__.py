"""Calibration analysis for probabilistic predictions, plus Monte Carlo
propagation of clustering uncertainty into event-count time series."""

from .calibration import (
    BinSummary,
    Binning,
    CalibReport,
    CurvePoint,
    PredictionPair,
    ScoreDecomposition,
    bin_stats,
    brier_score,
    calib_error_ci,
    calibration_analysis,
    calibration_error,
    cross_entropy,
    decomposition_by_unique_q,
    fixed_width_binning,
    reliability_curve,
    sort_and_bin,
)
from .chain import HMMModel, Marginals, TagLattice, forward_backward, train_hmm
from .classify import (
    BinaryDocument,
    BinaryMetrics,
    LRModel,
    NBModel,
    evaluate_binary,
    grid_select,
    nb_posterior,
    nb_to_logistic,
    train_bernoulli_nb,
    train_logistic_regression,
)
from .coref import (
    Clustering,
    CorefDocument,
    PairwiseMarginals,
    antecedent_distributions,
    connected_components,
    coref_pairwise_calibration,
    enumerate_clustering_distribution,
    enumerate_pairwise_marginals,
    pairwise_from_labels,
    pairwise_marginals,
    sample_antecedent_vector,
    sample_clustering,
    sample_component_labels,
    synthetic_document,
)
from .errors import (
    NoDataError,
    ParameterError,
    PostcalError,
    TrainingError,
    ValidationError,
)
from .events import (
    AnnotatedDocument,
    EventBand,
    EventQueryResult,
    FlaggedDocument,
    Mention,
    doc_attack_indicator,
    document_indicator_matrix,
    entity_country_attack_match,
    event_count_series,
    exact_count_means,
    exact_document_indicator_probability,
    flag_uncertain_documents,
    posterior_band,
    series_bands,
)
from .tagging import LabelCalibration, extract_tag_prediction_pairs, per_label_calibration

__version__ = "0.1.0"
