"""Oversampling, classifiers, counterfactuals and risk analysis for imbalanced clinical tables."""

from ._metaboost import (
    BalanceError,
    ConfigError,
    Dataset,
    DependencyError,
    MetaboostError,
    Model,
    SchemaError,
    TrainTestSplit,
    balance,
    counterfactuals,
    evaluate,
    f1_score,
    fit,
    hybrid_balance,
    load_dataset,
    load_model,
    parse_dataset,
    report_text,
    risk_report,
    run_pipeline,
    simplex_grid,
    split_balanced,
    surrogate_csv,
)

__version__ = "0.1.0"

__all__ = [
    "BalanceError",
    "ConfigError",
    "Dataset",
    "DependencyError",
    "MetaboostError",
    "Model",
    "SchemaError",
    "TrainTestSplit",
    "balance",
    "counterfactuals",
    "evaluate",
    "f1_score",
    "fit",
    "hybrid_balance",
    "load_dataset",
    "load_model",
    "parse_dataset",
    "report_text",
    "risk_report",
    "run_pipeline",
    "simplex_grid",
    "split_balanced",
    "surrogate_csv",
]
