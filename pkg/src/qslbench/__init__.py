"""Measurement-budgeted benchmark toolkit for learning ground-state
properties and phases of spin chains from randomized measurements."""

from .budget import (
    BudgetViolation,
    MachineRate,
    ResourceBudget,
    estimate_cost,
    estimate_walltime,
    load_rates,
    ssl_split_check,
    validate_budget,
)
from .datasets import (
    Dataset,
    GroundStateCache,
    Instance,
    LabeledDataset,
    exact_labeled,
    generate_split,
    load_dataset,
    preprocess_labels,
    randomize_measurements,
    rebalance_upsample,
    save_dataset,
)
from .experiment import (
    ExperimentConfig,
    MetricsReport,
    emit_report,
    read_report_csv,
    run_experiment,
)
from .features import (
    FeatureSpec,
    dirichlet_features,
    dirichlet_gram,
    featurize,
    make_concat_rff,
    make_rff,
    ntk_gram,
    rbf_gram,
)
from .forest import RandomForest, fit_random_forest
from .groundstate import (
    GroundState,
    PhaseLabel,
    SolverError,
    dense_diagonalize,
    exact_correlation,
    exact_phase_label,
    exact_renyi2_adjacent,
    ground_state,
    phase_label_from_scores,
)
from .hamiltonians import (
    HBParams,
    RydbergParams,
    TFIMParams,
    build_heisenberg,
    build_rydberg,
    build_tfim,
    feature_vector,
    sample_params,
)
from .metrics import accuracy, rmse_correlation, rmse_entropy
from .mlp import MLPModel, fit_mlp
from .models import fit_kernel_logistic, fit_kernel_ridge, fit_lasso, fit_ridge
from .paulis import (
    PauliString,
    SparseOperator,
    StateVector,
    apply_operator,
    expectation,
    parse_pauli,
)
from .pipeline import ModelConfig, Pipeline, load_pipeline, save_pipeline, train_model
from .rng import substream
from .shadows import (
    BitstringSet,
    ShadowSet,
    estimate_phase_scores,
    sample_shadow,
    sample_zbasis,
    shadow_correlation,
    shadow_expectation,
    shadow_renyi2,
)

__version__ = "0.1.0"
