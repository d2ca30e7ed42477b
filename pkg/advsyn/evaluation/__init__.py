"""Classification metrics and distribution comparison"""

from advsyn.evaluation.distribution import (
    DistributionComparison,
    bin_centers,
    compare_real_synthetic,
    histogram_divergence,
    intensity_histogram,
    sample_diversity,
)
from advsyn.evaluation.metrics import (
    ClassMetrics,
    ConfusionMatrix,
    EvalReport,
    classification_report,
    confusion_matrix,
    evaluate_predictions,
    per_provenance_reports,
)
