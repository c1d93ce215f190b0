import random

import pytest

from charlearn.core import DEFAULT_LEXICON, VisualObject, make_object_sequence
from charlearn.grounding import GroundingModel, identification_accuracy


@pytest.fixture
def model():
    return GroundingModel(DEFAULT_LEXICON)


def test_fresh_model_is_uniform(model):
    post = model.posterior("color", "sako")
    assert post == {"red": 1 / 3, "green": 1 / 3, "blue": 1 / 3}


def test_laplace_posterior_frozen_values(model):
    # two positive observations: (2 + 1) / (2 + 3) = 0.6 exactly
    model.observe("color", "sako", "red")
    model.observe("color", "sako", "red")
    post = model.posterior("color", "sako")
    assert post["red"] == 0.6
    assert post["green"] == 0.2 and post["blue"] == 0.2
    assert sum(post.values()) == pytest.approx(1.0, abs=1e-12)


def test_confidence_crosses_09_at_17_observations(model):
    obj = VisualObject("red", "square")
    for i in range(17):
        assert model.confidence("color", obj) < 0.9
        model.observe("color", "sako", "red")
    # (17 + 1) / (17 + 3) = 0.9 exactly
    assert model.confidence("color", obj) == 0.9


def test_negative_evidence_spreads_over_complement(model):
    model.observe("shape", "wakaki", "square", positive=False)
    post = model.posterior("shape", "wakaki")
    # counts: circle 0.5, triangle 0.5; denominators 0+... total=1, +3 -> 4
    assert post["square"] == pytest.approx(1 / 4)
    assert post["circle"] == pytest.approx(1.5 / 4)
    assert post["triangle"] == pytest.approx(1.5 / 4)


def test_positive_and_negative_cancel_out_in_ranking(model):
    model.observe("color", "zavi", "blue")
    model.observe("color", "zavi", "blue", positive=False)
    post = model.posterior("color", "zavi")
    # blue got +1 then the complement got +0.5 each: blue still leads
    assert post["blue"] > post["red"] == post["green"]


def test_order_invariance(model):
    other = GroundingModel(DEFAULT_LEXICON)
    seq = [("red", True), ("blue", False), ("red", True), ("green", False), ("red", True)]
    for label, positive in seq:
        model.observe("color", "sako", label, positive=positive)
    for label, positive in reversed(seq):
        other.observe("color", "sako", label, positive=positive)
    assert model.posterior("color", "sako") == pytest.approx(other.posterior("color", "sako"))


def test_posterior_monotone_in_positive_evidence(model):
    obj = VisualObject("green", "circle")
    last = model.posterior("color", "suzuli")["green"]
    for _ in range(30):
        model.observe("color", "suzuli", "green")
        now = model.posterior("color", "suzuli")["green"]
        assert now > last
        last = now
    assert last < 1.0  # smoothing keeps it strictly inside the simplex


def test_best_word_prefers_evidence_then_lexicon_order(model):
    # fresh model: every word ties at 1/3, lexicon order wins
    word, p = model.best_word("color", "red")
    assert word == "sako" and p == 1 / 3

    model.observe("color", "zavi", "red")  # perverse but allowed
    word, _ = model.best_word("color", "red")
    assert word == "zavi"


def test_observe_rejects_unknown_label(model):
    with pytest.raises(ValueError):
        model.observe("color", "sako", "magenta")


def test_identification_accuracy_after_teaching(model):
    objects = make_object_sequence(DEFAULT_LEXICON, 9, seed=5)
    start = identification_accuracy(model, objects, DEFAULT_LEXICON)
    for category in ("color", "shape"):
        for label in DEFAULT_LEXICON.labels(category):
            word = DEFAULT_LEXICON.word_for(category, label)
            for _ in range(3):
                model.observe(category, word, label)
    end = identification_accuracy(model, objects, DEFAULT_LEXICON)
    assert end == 1.0
    assert end >= start


def test_guess_word_uses_indicated_labels(model):
    model.observe("shape", "burchak", "square")
    obj = VisualObject("red", "square")
    assert model.guess_word("shape", obj) == "burchak"
