"""Word grounding: evidence counts mapping invented words to attribute labels.

The learner accumulates observations of (word, label) pairings across
dialogues.  Positive evidence adds one count to the observed label; negative
evidence (a rejected guess) spreads one count over the other labels of the
category.  Posteriors are Laplace-smoothed count ratios, so a fresh model is
uniform and the estimate is invariant to observation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import AttributeLexicon, VisualObject

LAPLACE_ALPHA = 1.0


@dataclass
class GroundingModel:
    lexicon: AttributeLexicon
    counts: dict = field(default_factory=dict)  # category -> word -> label -> float

    def _cell(self, category: str, word: str) -> dict:
        return self.counts.setdefault(category, {}).setdefault(word, {})

    def observe(self, category: str, word: str, label: str, positive: bool = True):
        labels = self.lexicon.labels(category)
        if label not in labels:
            raise ValueError("unknown %s label %r" % (category, label))
        cell = self._cell(category, word)
        if positive:
            cell[label] = cell.get(label, 0.0) + 1.0
        else:
            share = 1.0 / (len(labels) - 1)
            for other in labels:
                if other != label:
                    cell[other] = cell.get(other, 0.0) + share

    def posterior(self, category: str, word: str) -> dict:
        """P(label | word) with add-one smoothing over the category's labels."""
        labels = self.lexicon.labels(category)
        cell = self.counts.get(category, {}).get(word, {})
        total = sum(cell.values())
        denom = total + LAPLACE_ALPHA * len(labels)
        return {l: (cell.get(l, 0.0) + LAPLACE_ALPHA) / denom for l in labels}

    def best_word(self, category: str, label: str):
        """(word, P(label | word)) maximizing the posterior; lexicon order on ties."""
        best = None
        for word in self.lexicon.words(category):
            p = self.posterior(category, word)[label]
            if best is None or p > best[1]:
                best = (word, p)
        return best

    def confidence(self, category: str, obj: VisualObject) -> float:
        """Posterior mass the best word puts on the object's indicated label."""
        label = obj.indicated_label(category)
        return self.best_word(category, label)[1]

    def guess_word(self, category: str, obj: VisualObject) -> str:
        return self.best_word(category, obj.indicated_label(category))[0]


def classify_confidence(grounding: GroundingModel, category: str, obj: VisualObject) -> float:
    return grounding.confidence(category, obj)


def identification_accuracy(grounding: GroundingModel, objects, lexicon: AttributeLexicon) -> float:
    """Share of (object, category) pairs whose best word is the true word."""
    checks = 0
    correct = 0
    for obj in objects:
        for category in ("color", "shape"):
            label = obj.indicated_label(category)
            word, _ = grounding.best_word(category, label)
            correct += int(word == lexicon.word_for(category, label))
            checks += 1
    return correct / checks
