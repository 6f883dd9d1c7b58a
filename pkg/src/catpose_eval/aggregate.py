"""Thresholded correctness, dataset precision, threshold sweeps, best/worst hypotheses."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

from .errors import EmptyInput, MissingField, UnsortedGrid
from .metrics import DEFAULT_FSCORE_DELTA, InstanceEval

INF = math.inf


@dataclass(frozen=True)
class Thresholds:
    """Correctness bounds; ``inf`` / ``None`` disables a bound.

    Errors pass when ``value <= bound`` and scores when ``value >= bound``.
    """

    d_max: float = INF
    delta_max: float = INF
    iou_min: Optional[float] = None
    f_min: Optional[float] = None
    nad_max: Optional[float] = None
    cd_max: Optional[float] = None
    delta_for_f: float = DEFAULT_FSCORE_DELTA

    def active(self):
        """``(field, bound, kind)`` for every enabled bound."""
        out = []
        if self.d_max != INF:
            out.append(("d", self.d_max, "max"))
        if self.delta_max != INF:
            out.append(("delta", self.delta_max, "max"))
        if self.iou_min is not None:
            out.append(("iou_oriented", self.iou_min, "min"))
        if self.f_min is not None:
            out.append(("f_score", self.f_min, "min"))
        if self.nad_max is not None and self.nad_max != INF:
            out.append(("nad", self.nad_max, "max"))
        if self.cd_max is not None and self.cd_max != INF:
            out.append(("cd", self.cd_max, "max"))
        return out

    def as_dict(self):
        return {
            "d_max": self.d_max,
            "delta_max": self.delta_max,
            "iou_min": self.iou_min,
            "f_min": self.f_min,
            "nad_max": self.nad_max,
            "cd_max": self.cd_max,
            "delta_for_f": self.delta_for_f,
        }


PRESETS = {
    "strict": Thresholds(d_max=0.01, delta_max=math.radians(5.0), f_min=0.8),
    "lenient": Thresholds(d_max=0.02, delta_max=math.radians(10.0), f_min=0.6),
    "pose-strict": Thresholds(d_max=0.01, delta_max=math.radians(5.0)),
    "pose-lenient": Thresholds(d_max=0.02, delta_max=math.radians(10.0)),
}


def classify_correct(e: InstanceEval, th: Thresholds) -> bool:
    """True iff every active bound holds; absent predictions are never correct."""
    bounds = th.active()
    if not bounds:
        raise ValueError("thresholds have no active bound")
    if e.missing:
        return False
    for name, bound, kind in bounds:
        value = getattr(e, name)
        if value is None or math.isnan(value):
            raise MissingField(f"{e.instance_id or 'instance'}: no value for {name!r}")
        if name == "f_score" and not math.isclose(e.fscore_delta, th.delta_for_f, rel_tol=1e-12):
            raise MissingField(
                f"{e.instance_id or 'instance'}: F-score evaluated at {e.fscore_delta} m, "
                f"thresholds expect {th.delta_for_f} m"
            )
        if kind == "max" and not value <= bound:
            return False
        if kind == "min" and not value >= bound:
            return False
    return True


@dataclass
class PrecisionReport:
    overall: float
    per_category: Dict[str, float]
    count: int
    thresholds: Thresholds
    correct: int = 0
    per_category_counts: Dict[str, int] = field(default_factory=dict)
    per_category_correct: Dict[str, int] = field(default_factory=dict)

    def rows(self):
        """``(category, precision, correct, count)`` per category, then an ``all`` row."""
        out = [
            (c, self.per_category[c], self.per_category_correct[c], self.per_category_counts[c])
            for c in sorted(self.per_category)
        ]
        out.append(("all", self.overall, self.correct, self.count))
        return out

    def as_dict(self):
        return {
            "overall": self.overall,
            "correct": self.correct,
            "count": self.count,
            "per_category": {
                c: {"precision": p, "correct": k, "count": n} for c, p, k, n in self.rows()[:-1]
            },
            "thresholds": self.thresholds.as_dict(),
        }


def _report(flags: Sequence[bool], categories: Sequence[str], th: Thresholds) -> PrecisionReport:
    counts: Dict[str, int] = {}
    correct: Dict[str, int] = {}
    for ok, cat in zip(flags, categories):
        counts[cat] = counts.get(cat, 0) + 1
        correct[cat] = correct.get(cat, 0) + int(ok)
    total = sum(correct.values())
    return PrecisionReport(
        overall=total / len(flags),
        per_category={c: correct[c] / counts[c] for c in counts},
        count=len(flags),
        thresholds=th,
        correct=total,
        per_category_counts=counts,
        per_category_correct=correct,
    )


def precision(evals: Sequence[InstanceEval], th: Thresholds) -> PrecisionReport:
    if not evals:
        raise EmptyInput("precision over zero instances")
    return _report([classify_correct(e, th) for e in evals], [e.category for e in evals], th)


AXES = ("d", "delta", "f")
_AXIS_FIELD = {"d": "d_max", "delta": "delta_max", "f": "f_min"}

DEFAULT_GRIDS = {
    "d": [round(0.005 * k, 10) for k in range(11)],
    "delta": [math.radians(k) for k in range(21)],
    "f": [round(0.05 * k, 10) for k in range(21)],
}


@dataclass
class Curve:
    axis: str
    grid: List[float]
    values: List[float]


def sweep(evals: Sequence[InstanceEval], axis: str, grid: Sequence[float],
          base: Thresholds = Thresholds()) -> Curve:
    """Precision as one bound runs over ``grid`` while the others stay at ``base``."""
    if axis not in AXES:
        raise ValueError(f"unknown sweep axis {axis!r}")
    if not evals or len(grid) == 0:
        raise EmptyInput("sweep needs instances and a non-empty grid")
    grid = [float(g) for g in grid]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise UnsortedGrid("sweep grid must be sorted ascending")
    name = _AXIS_FIELD[axis]
    values = [precision(evals, replace(base, **{name: g})).overall for g in grid]
    return Curve(axis, grid, values)


def precision_best_worst(hypo_evals: Sequence[Sequence[InstanceEval]], th: Thresholds):
    """``(P_best, P_worst)``: an instance counts if any / all of its hypotheses are correct."""
    if not hypo_evals:
        raise EmptyInput("no instances")
    best = worst = 0
    for hyps in hypo_evals:
        if not hyps:
            raise EmptyInput("instance without hypotheses")
        flags = [classify_correct(e, th) for e in hyps]
        best += any(flags)
        worst += all(flags)
    n = len(hypo_evals)
    return best / n, worst / n

