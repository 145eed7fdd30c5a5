"""Conditional anomaly detection with soft harmonic label propagation.

Detects examples whose -1/+1 label is unusual given their features by
propagating the observed labels over a similarity graph and scoring each
example by how far its propagated soft label lands from the label it
carries.  Includes a quantized backbone graph for scalability, weighted
k-NN and Gaussian-posterior baselines, synthetic benchmark generators and
ranking-agreement evaluation.
"""

from .baselines import (
    GaussianClassModel,
    fit_gaussian_class_model,
    gaussian_posterior_scores,
    qda_scores,
    weighted_knn_scores,
)
from .datasets import (
    Dataset,
    GaussianComponent,
    MixtureModel,
    flip_labels,
    load_dataset,
    load_mixture_config,
    load_ordinal_csv,
    load_preset,
    preset_models,
    sample_mixture,
    save_dataset,
    synthetic_benchmark,
    true_anomaly_score,
)
from .estimators import QDACAD, SoftHarmonicCAD, WeightedKNNCAD
from .experiments import ExperimentConfig, ExperimentTable, repeat_experiment, run_single, sweep
from .graph import (
    GraphLaplacian,
    SimilarityGraph,
    build_knn_graph,
    laplacian,
    laplacian_from_weights,
    load_graph,
    save_graph,
    sigma_heuristic,
    weighted_sq_distance,
    wilcoxon_feature_weights,
)
from .metrics import AgreementResult, agreement_score, agreement_score_brute_force, roc_auc
from .quantize import (
    BackboneGraph,
    assign_multiplicities,
    build_backbone,
    compact_weights,
    load_backbone,
    save_backbone,
    select_centroids,
)
from .scoring import (
    AnomalyScores,
    CentroidModel,
    MultiTaskScores,
    PipelineConfig,
    TaskScaler,
    anomaly_scores,
    apply_task_scaler,
    fit_task_scaler,
    prepare_model,
    score_multitask,
    score_recent,
    score_with_model,
)
from .solver import (
    ConvergenceError,
    SoftLabels,
    SolverConfig,
    dense_solve_oracle,
    soft_harmonic,
    soft_harmonic_backbone,
)

__version__ = "0.1.0"
