"""B-cubed clustering evaluation, positive-pair accuracy, and strata.

Recall averages |P(t) ∩ T(t)| / |T(t)| over evaluated instances t,
precision averages |P(t) ∩ T(t)| / |P(t)|, where T(t) and P(t) are the
truth and predicted clusters containing t. The aggregation tallies
per-(truth, predicted) overlap counts, so cost is linear in instances
rather than quadratic.
"""

from __future__ import annotations

import json
from collections import Counter
from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import NamedTuple

from .corpus import Clustering, InstanceID
from .errors import EvaluationError


class B3Scores(NamedTuple):
    recall: float
    precision: float
    f1: float
    n: int
    dropped: int = 0


class PairAccuracy(NamedTuple):
    accuracy: float
    evaluated: int
    dropped: int


def _f1(recall: float, precision: float) -> float:
    if recall + precision == 0:
        return 0.0
    return 2 * recall * precision / (recall + precision)


def b3_scores(
    truth: Clustering,
    predicted: Clustering,
    *,
    strict: bool = True,
    restrict_predicted: bool = True,
) -> B3Scores:
    """Score `predicted` against `truth` over the truth instances.

    Instances only in `predicted` are ignored. Instances only in
    `truth` are an error when strict, otherwise dropped and counted.
    With restrict_predicted (default), P(t) is intersected with the
    evaluated universe before the precision denominator is taken;
    without it, unevaluated members of a predicted cluster still count
    against precision.
    """
    truth_assignment = truth.assignment
    if not truth_assignment:
        raise EvaluationError("nothing to evaluate: truth clustering is empty")
    predicted_assignment = predicted.assignment

    overlap: Counter[tuple[str, str]] = Counter()
    truth_sizes: Counter[str] = Counter()
    predicted_sizes: Counter[str] = Counter()
    dropped = 0
    for instance, truth_id in truth_assignment.items():
        predicted_id = predicted_assignment.get(instance)
        if predicted_id is None:
            if strict:
                raise EvaluationError(
                    f"instance {instance.pmid}_{instance.position} has no "
                    "predicted cluster (use lenient mode to drop)"
                )
            dropped += 1
            continue
        overlap[(truth_id, predicted_id)] += 1
        truth_sizes[truth_id] += 1
        predicted_sizes[predicted_id] += 1

    n = sum(truth_sizes.values())
    if n == 0:
        raise EvaluationError("nothing to evaluate: no truth instance has a prediction")

    recall_sum = 0.0
    precision_sum = 0.0
    predicted_clusters = predicted.clusters
    for (truth_id, predicted_id), count in overlap.items():
        shared = count * count
        recall_sum += shared / truth_sizes[truth_id]
        if restrict_predicted:
            precision_sum += shared / predicted_sizes[predicted_id]
        else:
            precision_sum += shared / len(predicted_clusters[predicted_id])
    recall = recall_sum / n
    precision = precision_sum / n
    return B3Scores(recall, precision, _f1(recall, precision), n, dropped)


def pair_accuracy_detail(
    pairs: Iterable[tuple[InstanceID, InstanceID]], predicted: Clustering
) -> PairAccuracy:
    """Fraction of positive pairs whose members share a predicted cluster.

    Pairs with a member absent from `predicted` are dropped and counted.
    """
    assignment = predicted.assignment
    evaluated = 0
    agreed = 0
    dropped = 0
    for a, b in pairs:
        cluster_a = assignment.get(a)
        cluster_b = assignment.get(b)
        if cluster_a is None or cluster_b is None:
            dropped += 1
            continue
        evaluated += 1
        if cluster_a == cluster_b:
            agreed += 1
    if evaluated == 0:
        raise EvaluationError("nothing to evaluate: no pair has both members clustered")
    return PairAccuracy(agreed / evaluated, evaluated, dropped)


def pair_accuracy(
    pairs: Iterable[tuple[InstanceID, InstanceID]], predicted: Clustering
) -> float:
    return pair_accuracy_detail(pairs, predicted).accuracy


STRATA = ("year", "gender", "ethnicity")
UNKNOWN_STRATUM = "UNKNOWN"


def stratified_eval(dataset, stratum: str) -> dict[str, B3Scores]:
    """Per-stratum B-cubed scores plus an unrestricted "ALL" entry.

    `dataset` is an EvalDataset; the stratum is one of year, gender, or
    ethnicity. Rows missing the attribute fall into "UNKNOWN". Within a
    stratum, truth and predicted clusterings are restricted to that
    stratum's instances before scoring.
    """
    if stratum not in STRATA:
        raise ValueError(f"unknown stratum {stratum!r}, expected one of {STRATA}")
    rows = list(dataset)
    if not rows:
        raise EvaluationError("nothing to evaluate: empty dataset")

    groups: dict[str, list] = {}
    for row in rows:
        value = getattr(row, stratum)
        key = UNKNOWN_STRATUM if value is None or value == "" else str(value)
        groups.setdefault(key, []).append(row)

    def score(subset) -> B3Scores:
        truth = Clustering.from_assignment(
            {row.instance: row.truth_label for row in subset}
        )
        predicted = Clustering.from_assignment(
            {row.instance: row.predicted_cluster_id for row in subset}
        )
        return b3_scores(truth, predicted)

    result = {value: score(group) for value, group in sorted(groups.items())}
    result["ALL"] = score(rows)
    return result


def metrics_to_json(
    scores: B3Scores, strata: Mapping[str, B3Scores] | None = None
) -> str:
    """Serialize scores as JSON with a stable key order."""

    def entry(s: B3Scores) -> dict:
        return {
            "recall": s.recall,
            "precision": s.precision,
            "f1": s.f1,
            "n": s.n,
            "dropped": s.dropped,
        }

    payload = entry(scores)
    if strata is not None:
        payload["strata"] = {value: entry(strata[value]) for value in sorted(strata)}
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"


def write_metrics_json(
    path: str | Path,
    scores: B3Scores,
    strata: Mapping[str, B3Scores] | None = None,
) -> None:
    Path(path).write_text(metrics_to_json(scores, strata), encoding="utf-8")
