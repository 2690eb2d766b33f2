"""Statistical analysis of like/dislike evaluation counts."""

__version__ = "0.1.0"

from .core import DatasetError, EvaluationDataset, FilterReport, FilterState, Item, filter_items, load_dataset
from .distfit import Family, FitError, best_fit, compare_fits, exponential_binned_pdf, fit_distribution, ks_distance
from .dualreg import RegimeLabel, RegressionError, analyze_dual_regime, fit_ols, fit_single_knot, to_loglog
from .inference import ModelError, fit_linear, fit_logistic, polarization, spearman_matrix, standardize_logcounts
from .pipeline import RunConfig, emit_plot_data, run_pipeline
from .sentiment import PnLexicon, VadLexicon, score_pn, score_text, score_vad, tokenize

__all__ = [
    "DatasetError", "EvaluationDataset", "FilterReport", "FilterState", "Item", "filter_items", "load_dataset",
    "Family", "FitError", "best_fit", "compare_fits", "exponential_binned_pdf", "fit_distribution", "ks_distance",
    "RegimeLabel", "RegressionError", "analyze_dual_regime", "fit_ols", "fit_single_knot", "to_loglog",
    "ModelError", "fit_linear", "fit_logistic", "polarization", "spearman_matrix", "standardize_logcounts",
    "RunConfig", "emit_plot_data", "run_pipeline",
    "PnLexicon", "VadLexicon", "score_pn", "score_text", "score_vad", "tokenize",
]
