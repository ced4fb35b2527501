"""Binary change-detection accuracy metrics.

Convention: the positive class is *changed* (label 1). Specificity is the
true-negative rate over unchanged ground truth, sensitivity the
true-positive rate over changed ground truth, and the error rate is the
complement of overall accuracy.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import NonBinaryInput, ShapeMismatch


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "tn", "fp", "fn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def confusion(predicted, reference) -> ConfusionCounts:
    """Count agreement between a predicted mask and a reference mask.

    Both must be same-shape arrays containing only 0 and 1.
    """
    predicted = np.asarray(predicted)
    reference = np.asarray(reference)
    if predicted.shape != reference.shape:
        raise ShapeMismatch(f"{predicted.shape} vs {reference.shape}")
    for arr, name in ((predicted, "predicted"), (reference, "reference")):
        vals = np.unique(arr)
        if not np.isin(vals, (0, 1)).all():
            raise NonBinaryInput(f"{name} mask contains values other than 0/1")
    p = predicted.astype(bool)
    r = reference.astype(bool)
    return ConfusionCounts(
        tp=int(np.count_nonzero(p & r)),
        tn=int(np.count_nonzero(~p & ~r)),
        fp=int(np.count_nonzero(p & ~r)),
        fn=int(np.count_nonzero(~p & r)),
    )


@dataclass(frozen=True)
class MetricsReport:
    """OA, specificity, sensitivity, and error rate from confusion counts.

    A rate with an empty denominator is NaN and flagged in ``undefined``.
    """

    counts: ConfusionCounts
    oa: float
    spc: float
    sen: float
    err: float
    undefined: tuple[str, ...]

    @classmethod
    def from_counts(cls, counts: ConfusionCounts) -> "MetricsReport":
        undefined = []
        total = counts.total
        negatives = counts.tn + counts.fp
        positives = counts.tp + counts.fn
        if total > 0:
            oa = (counts.tp + counts.tn) / total
            err = 1.0 - oa
        else:
            oa = err = math.nan
            undefined += ["oa", "err"]
        if negatives > 0:
            spc = counts.tn / negatives
        else:
            spc = math.nan
            undefined.append("spc")
        if positives > 0:
            sen = counts.tp / positives
        else:
            sen = math.nan
            undefined.append("sen")
        return cls(counts=counts, oa=oa, spc=spc, sen=sen, err=err, undefined=tuple(undefined))

    def to_dict(self) -> dict:
        def opt(name, value):
            return None if name in self.undefined else value

        return {
            "oa": opt("oa", self.oa),
            "spc": opt("spc", self.spc),
            "sen": opt("sen", self.sen),
            "err": opt("err", self.err),
            "tp": self.counts.tp,
            "tn": self.counts.tn,
            "fp": self.counts.fp,
            "fn": self.counts.fn,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def evaluate(predicted, reference) -> MetricsReport:
    return MetricsReport.from_counts(confusion(predicted, reference))


def format_table(rows: dict[str, MetricsReport]) -> str:
    """Fixed-width text table, one row per named result."""
    headers = ("OA", "SPC", "SEN", "ERR")
    name_width = max([len(n) for n in rows] + [6])
    lines = [" ".join(["method".ljust(name_width)] + [h.rjust(8) for h in headers])]
    for name, report in rows.items():
        cells = []
        for attr in ("oa", "spc", "sen", "err"):
            value = getattr(report, attr)
            cells.append(("     n/a" if attr in report.undefined else f"{value:8.4f}"))
        lines.append(" ".join([name.ljust(name_width)] + cells))
    return "\n".join(lines)
