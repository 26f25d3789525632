"""Learning bilinear similarities that are good for sparse linear classifiers."""
__version__ = "0.1.0"

from .classifier import (
    Landmarks,
    SimilarityEvaluator,
    SimilarityKNNClassifier,
    SimilarityLinearClassifier,
    SLLCClassifier,
    SparseLinearClassifier,
    accuracy,
    knn_predict,
    predict,
    similarity_map,
    train_l1_classifier,
)
from .data import (
    AttributeScaler,
    Dataset,
    SplitSpec,
    apply_scaling,
    fit_scaling,
    generate_rings,
    load_dataset,
    parse_dataset,
    split,
)
from .exceptions import (
    DataError,
    DegenerateReasonableSet,
    InvalidParameter,
    NoConvergence,
    NumericalError,
    SimGoodError,
)
from .goodness import ReasonableSet, empirical_goodness, signed_mean, stability_bound, stability_constant, v_loss
from .harness import ExperimentConfig, format_report, run_experiment
from .kpca import GaussianKPCA, KpcaModel, kpca_fit, kpca_project
from .persistence import load_model, save_model
from .sllc import SLLC, SimilarityModel, SllcConfig, solve_sllc, solve_sllc_full, solve_sllc_reduced
