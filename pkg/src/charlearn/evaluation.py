"""Offline evaluation of trained simulations: divergence and accuracy.

Both metrics replay the evaluation corpus with the same context/condition
derivation the trainer uses, group observations by (context words,
conditions) key, and compare the model's prediction at each key with the
key's empirical distribution.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from collections import Counter

from .core import ConditionVector
from .simulation import SimModel, predict, training_pairs

DEFAULT_EPSILON = 1e-9


def _check_distribution(dist, name):
    total = 0.0
    for item, p in dist.items():
        if p < 0 or not math.isfinite(p):
            raise ValueError("%s has a bad probability %r for %r" % (name, p, item))
        total += p
    if abs(total - 1.0) > 1e-6:
        raise ValueError("%s sums to %r, not 1" % (name, total))


def kld(p: dict, q: dict, epsilon: float = DEFAULT_EPSILON) -> float:
    """Kullback-Leibler divergence sum(p_i * ln(p_i / q_i)), in nats.

    Computed over the union support.  Q entries below epsilon are floored
    and Q is then renormalized; P is used as given (zero P terms contribute
    nothing).  Identical distributions come out exactly 0.0 because the
    floor never fires and every log term is ln(1).
    """
    _check_distribution(p, "p")
    _check_distribution(q, "q")
    support = set(p) | set(q)
    floored = {}
    fired = False
    for item in support:
        value = q.get(item, 0.0)
        if value < epsilon:
            value = epsilon
            fired = True
        floored[item] = value
    if fired:
        total = sum(floored.values())
        floored = {item: value / total for item, value in floored.items()}
    out = 0.0
    for item, pi in p.items():
        if pi > 0.0:
            out += pi * math.log(pi / floored[item])
    return out


def argmax_item(dist: dict):
    """Highest-probability item; ties broken by canonical item order."""
    return min(dist.items(), key=lambda kv: (-kv[1], kv[0]))[0]


@dataclass(frozen=True)
class KeyResult:
    words: tuple
    conditions: tuple
    observations: int
    predicted_item: str
    correct: bool
    kld: float


@dataclass(frozen=True)
class EvalReport:
    level: str
    n_keys: int
    accuracy: float
    mean_kld: float
    per_condition: dict  # condition canonical -> {"keys", "accuracy", "mean_kld"}
    keys: tuple


def collect_keys(model: SimModel, dialogues):
    """Empirical item counts per (context, conditions) key of the corpus."""
    keys = {}
    for context, cv, item in training_pairs(dialogues, model.lexicon, model.level):
        key = (tuple(context[-(model.n - 1):]) if model.n > 1 else (), cv.as_tuple())
        keys.setdefault(key, Counter())[item] += 1
    return keys


def evaluate(model: SimModel, dialogues, epsilon: float = DEFAULT_EPSILON) -> EvalReport:
    """Accuracy and mean KLD of the model against a corpus.

    A key counts as correct when the model's argmax item occurs among the
    items observed at that key.  KLD is taken from the key's empirical
    distribution to the model's prediction, then averaged over keys.
    """
    keys = collect_keys(model, dialogues)
    if not keys:
        raise ValueError("no evaluation keys in corpus")

    results = []
    by_condition = {}
    for (words, cond), counter in sorted(keys.items()):
        predicted = predict(model, words, ConditionVector.from_tuple(cond))
        total = sum(counter.values())
        empirical = {item: count / total for item, count in counter.items()}
        best = argmax_item(predicted)
        correct = best in counter
        divergence = kld(empirical, predicted, epsilon)
        results.append(
            KeyResult(
                words=words,
                conditions=cond,
                observations=total,
                predicted_item=best,
                correct=correct,
                kld=divergence,
            )
        )
        bucket = by_condition.setdefault(",".join(cond), [])
        bucket.append((correct, divergence))

    n = len(results)
    accuracy = sum(1 for r in results if r.correct) / n
    mean_kld = sum(r.kld for r in results) / n
    per_condition = {
        cond: {
            "keys": len(bucket),
            "accuracy": sum(1 for c, _ in bucket if c) / len(bucket),
            "mean_kld": sum(d for _, d in bucket) / len(bucket),
        }
        for cond, bucket in sorted(by_condition.items())
    }
    return EvalReport(
        level=model.level,
        n_keys=n,
        accuracy=accuracy,
        mean_kld=mean_kld,
        per_condition=per_condition,
        keys=tuple(results),
    )


def report_to_csv(report: EvalReport, path):
    """Per-key rows plus a trailing summary row."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["words", "conditions", "observations", "predicted", "correct", "kld"])
        for r in report.keys:
            writer.writerow(
                [
                    " ".join(r.words),
                    ",".join(r.conditions),
                    r.observations,
                    r.predicted_item,
                    int(r.correct),
                    "%.6f" % r.kld,
                ]
            )
        writer.writerow(["TOTAL", "", report.n_keys, "", "%.4f" % report.accuracy, "%.6f" % report.mean_kld])
