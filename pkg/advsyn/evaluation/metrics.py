"""Binary classification metrics shaped like a per-class classification report"""

import logging
from dataclasses import dataclass, field

import numpy as np
from sklearn.metrics import confusion_matrix as _sk_confusion_matrix
from sortedcontainers import SortedDict

logger = logging.getLogger(__name__)

CLASS_NAMES = ('no_tumor', 'tumor')
REPORT_HEADER = ('class', 'precision', 'recall', 'f1', 'support')


@dataclass(frozen=True)
class ConfusionMatrix(object):
    """Counts of a binary prediction outcome, negative class first"""

    tn: int
    fp: int
    fn: int
    tp: int

    def __post_init__(self):
        for name in ('tn', 'fp', 'fn', 'tp'):
            value = getattr(self, name)
            if int(value) != value or value < 0:
                raise ValueError('{} must be a non-negative integer, got {!r}'.format(name, value))
            object.__setattr__(self, name, int(value))

    @property
    def total(self):
        return self.tn + self.fp + self.fn + self.tp

    def as_array(self):
        """2x2 array indexed [truth, prediction]"""
        return np.array([[self.tn, self.fp], [self.fn, self.tp]], dtype=np.int64)

    def rows(self):
        """CSV rows with a header, one row per true class"""
        return [
            ('truth', 'pred_no_tumor', 'pred_tumor'),
            (CLASS_NAMES[0], self.tn, self.fp),
            (CLASS_NAMES[1], self.fn, self.tp),
        ]


def _check_binary(values, name):
    values = np.asarray(values).reshape(-1)
    if values.size and not np.all(np.isin(values, (0, 1))):
        raise ValueError('{} must be binary, got values {}'.format(name, sorted(set(values.tolist()) - {0, 1})))
    return values.astype(np.int64)


def confusion_matrix(y_true, y_pred):
    """Count outcomes of binary predictions

    Raises:
        ValueError: Length mismatch or labels outside {0, 1}
    """
    y_true = _check_binary(y_true, 'y_true')
    y_pred = _check_binary(y_pred, 'y_pred')
    if len(y_true) != len(y_pred):
        raise ValueError('y_true has {} labels but y_pred has {}'.format(len(y_true), len(y_pred)))
    if not len(y_true):
        return ConfusionMatrix(0, 0, 0, 0)

    tn, fp, fn, tp = _sk_confusion_matrix(y_true, y_pred, labels=[0, 1]).ravel()
    return ConfusionMatrix(tn, fp, fn, tp)


@dataclass
class ClassMetrics(object):
    name: str
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class EvalReport(object):
    """Per-class precision, recall, F1 and support plus accuracy and averages

    Attributes:
        classes (list(ClassMetrics)): Negative class first
        accuracy (float): (tp + tn) / total
        macro (dict): Unweighted mean of precision, recall and f1
        weighted (dict): Support-weighted mean of precision, recall and f1
        total (int): Evaluated sample count
        undefined (list(str)): Metrics whose denominator was zero, reported as 0
        divergence (float): Optional histogram divergence attached by the caller
    """

    classes: list
    accuracy: float
    macro: dict
    weighted: dict
    total: int
    undefined: list = field(default_factory=list)
    divergence: float = None

    def __getitem__(self, name):
        for metrics in self.classes:
            if metrics.name == name:
                return metrics
        raise KeyError(name)

    def rows(self, digits=6):
        """CSV rows: header, one row per class, then accuracy, macro and weighted averages"""
        def fmt(value):
            return '{:.{}f}'.format(value, digits)

        rows = [REPORT_HEADER]
        for metrics in self.classes:
            rows.append((metrics.name, fmt(metrics.precision), fmt(metrics.recall), fmt(metrics.f1), metrics.support))
        rows.append(('accuracy', '', '', fmt(self.accuracy), self.total))
        for label, averages in (('macro avg', self.macro), ('weighted avg', self.weighted)):
            rows.append((label, fmt(averages['precision']), fmt(averages['recall']), fmt(averages['f1']), self.total))
        if self.divergence is not None:
            rows.append(('divergence', '', '', fmt(self.divergence), ''))
        return rows


def _ratio(numerator, denominator, label, undefined):
    if denominator == 0:
        undefined.append(label)
        return 0.0
    return numerator / denominator


def classification_report(cm):
    """Derive per-class and averaged metrics from a confusion matrix

    Zero denominators give a metric of 0 and add its label (for example ``precision(tumor)``) to
    :attr:`EvalReport.undefined`.

    Raises:
        ValueError: If the matrix is empty
    """
    if cm.total == 0:
        raise ValueError('cannot report on an empty confusion matrix')

    undefined = []
    classes = []
    # (correct, predicted as class, truly class) per class
    for name, hits, predicted, actual in (
        (CLASS_NAMES[0], cm.tn, cm.tn + cm.fn, cm.tn + cm.fp),
        (CLASS_NAMES[1], cm.tp, cm.tp + cm.fp, cm.tp + cm.fn),
    ):
        precision = _ratio(hits, predicted, 'precision({})'.format(name), undefined)
        recall = _ratio(hits, actual, 'recall({})'.format(name), undefined)
        f1 = _ratio(2 * precision * recall, precision + recall, 'f1({})'.format(name), undefined)
        classes.append(ClassMetrics(name, precision, recall, f1, actual))

    macro = {}
    weighted = {}
    for key in ('precision', 'recall', 'f1'):
        values = [getattr(metrics, key) for metrics in classes]
        macro[key] = sum(values) / len(values)
        weighted[key] = sum(v * m.support for v, m in zip(values, classes)) / cm.total

    if undefined:
        logger.warning('Undefined metrics reported as 0: {}'.format(', '.join(undefined)))

    return EvalReport(
        classes=classes,
        accuracy=(cm.tp + cm.tn) / cm.total,
        macro=macro,
        weighted=weighted,
        total=cm.total,
        undefined=undefined
    )


def evaluate_predictions(y_true, y_pred):
    """confusion_matrix followed by classification_report"""
    cm = confusion_matrix(y_true, y_pred)
    return cm, classification_report(cm)


def per_provenance_reports(y_true, y_pred, provenance):
    """One (ConfusionMatrix, EvalReport) pair per provenance flag present, keyed in name order"""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    provenance = np.asarray(provenance, dtype=object)

    reports = SortedDict()
    for flag in sorted(set(provenance.tolist())):
        mask = provenance == flag
        reports[flag] = evaluate_predictions(y_true[mask], y_pred[mask])
    return reports
