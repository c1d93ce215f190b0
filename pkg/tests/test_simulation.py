import random
from collections import Counter
from fractions import Fraction

import pytest

from charlearn.acts import DialogueAct, DialogueActType, parse_acts_string
from charlearn.conditions import initial_conditions
from charlearn.core import ConditionVector, Role, Turn, VisualObject
from charlearn.simulation import (
    DialogueState,
    RealizationError,
    SimModel,
    TrainingError,
    infer_acts_from_text,
    load_model,
    model_from_json,
    model_to_json,
    predict,
    realize,
    respond,
    sample,
    save_model,
    train,
    training_pairs,
)
from charlearn.synthesis import GeneratorParams, generate_synthetic_corpus

from conftest import act, dialogue, turn

A = DialogueActType
L, T = Role.LEARNER, Role.TUTOR


def tiny_corpus(lexicon):
    """Two handcrafted dialogues with known tutor act counts.

    At the key (context '... this ?', conditions unknown/unknown/color) the
    tutor answers inform(color=*) twice and check() once; checking leaves
    conditions untouched, so d2's closing inform trains at the same key.
    """
    red_square = VisualObject("red", "square")
    blue_circle = VisualObject("blue", "circle")
    d1 = dialogue(
        "c:00",
        red_square,
        [
            turn(0, L, "what is this ?", 0, acts=[act(A.ASKING, category="color")]),
            turn(1, T, "it is sako", 3000, acts=[act(A.INFORM, category="color", word="sako")]),
            turn(2, L, "what is this ?", 6000, acts=[act(A.ASKING, category="shape")]),
            turn(3, T, "it is burchak", 9000, acts=[act(A.INFORM, category="shape", word="burchak")]),
        ],
    )
    d2 = dialogue(
        "c:01",
        blue_circle,
        [
            turn(0, L, "what is this ?", 0, acts=[act(A.ASKING, category="color")]),
            turn(1, T, "got it ?", 3000, acts=[act(A.CHECKING)]),
            turn(2, L, "what is this ?", 6000, acts=[act(A.ASKING, category="color")]),
            turn(3, T, "it is zavi", 9000, acts=[act(A.INFORM, category="color", word="zavi")]),
        ],
    )
    return [d1, d2]


# -- training pairs -------------------------------------------------------------

def test_training_pairs_replays_conditions(lexicon):
    pairs = list(training_pairs(tiny_corpus(lexicon), lexicon, "act"))
    # four tutor turns in the corpus
    assert len(pairs) == 4
    ctx0, cv0, item0 = pairs[0]
    assert ctx0 == ("what", "is", "this", "?")
    assert cv0.as_tuple() == ("unknown", "unknown", "color")
    assert item0 == "inform(color=*)"
    # d1's second tutor turn sees color taught and the topic moved to shape
    ctx1, cv1, item1 = pairs[1]
    assert cv1.as_tuple() == ("known", "unknown", "shape")
    assert item1 == "inform(shape=*)"
    # d2's checking turn leaves conditions alone, so its closing inform
    # trains at the fresh key again
    ctx3, cv3, item3 = pairs[3]
    assert cv3.as_tuple() == ("unknown", "unknown", "color")
    assert item3 == "inform(color=*)"


def test_training_pairs_word_level_walks_tokens(lexicon):
    d = tiny_corpus(lexicon)[0]
    pairs = [
        (ctx, item)
        for ctx, _, item in training_pairs([d], lexicon, "word")
    ]
    first_turn = [p for p in pairs if p[1] in ("it", "is", "sako", "</u>")][:4]
    assert [item for _, item in first_turn] == ["it", "is", "sako", "</u>"]
    # context grows token by token inside the turn
    assert first_turn[1][0][-1] == "it"
    assert first_turn[2][0][-1] == "is"


def test_training_pairs_demand_objects_and_acts(lexicon):
    no_obj = dialogue("x", None, [turn(0, T, "hi", 0, acts=[act(A.CHECKING)])])
    with pytest.raises(TrainingError):
        list(training_pairs([no_obj], lexicon, "act"))

    bare = dialogue(
        "y", VisualObject("red", "square"), [turn(0, T, "hi", 0)]
    )
    with pytest.raises(TrainingError):
        list(training_pairs([bare], lexicon, "act"))
    # utterance level tolerates missing acts on context turns
    list(training_pairs([bare], lexicon, "utterance"))

    with pytest.raises(TrainingError):
        list(training_pairs([], lexicon, "clause"))


# -- exact count ratios ----------------------------------------------------------

def test_trained_conditionals_are_exact_count_ratios(lexicon):
    model = train(tiny_corpus(lexicon), lexicon, n=3, level="act")
    ctx = ("what", "is", "this", "?")
    cv = ConditionVector("unknown", "unknown", "color")
    dist = predict(model, ctx, cv)
    # counts at this key: inform(color=*) x2, check() x1
    assert dist == {
        "inform(color=*)": pytest.approx(float(Fraction(2, 3)), abs=0),
        "check()": pytest.approx(float(Fraction(1, 3)), abs=0),
    }
    assert dist["inform(color=*)"] == 2 / 3


def test_training_fills_every_order(lexicon):
    model = train(tiny_corpus(lexicon), lexicon, n=3, level="act")
    assert set(model.tables) == {1, 2, 3}
    # order 1 is condition-only: single empty context key
    assert set(model.tables[1]) == {()}
    # order 3 keys keep the last two context tokens
    assert all(len(ctx) <= 2 for ctx in model.tables[3])


def test_train_rejects_unusable_input(lexicon):
    with pytest.raises(TrainingError):
        train(tiny_corpus(lexicon), lexicon, n=0)
    learner_only = dialogue(
        "z",
        VisualObject("red", "square"),
        [turn(0, L, "hi ?", 0, acts=[act(A.ASKING, category="color")])],
    )
    with pytest.raises(TrainingError):
        train([learner_only], lexicon, n=2, level="act")


# -- back-off --------------------------------------------------------------------

def test_backoff_order_high_to_low(lexicon):
    model = train(tiny_corpus(lexicon), lexicon, n=3, level="act")
    cv = ConditionVector("unknown", "unknown", "color")

    # unseen trigram context backs off to the order-1 condition table
    dist = predict(model, ("never", "seen", "words"), cv)
    assert abs(sum(dist.values()) - 1.0) < 1e-12
    assert dist == predict(model, (), cv)


def test_backoff_nearest_condition_merge(lexicon):
    model = train(tiny_corpus(lexicon), lexicon, n=3, level="act")
    ctx = ("what", "is", "this", "?")
    # conditions stored under this context: (u,u,color) with counts
    # {inform(color=*): 2, check(): 1} and (known,u,shape) with
    # {inform(shape=*): 1}.  The query (known,u,color) is Hamming distance 1
    # from both, so their raw counts merge before normalizing.
    dist = predict(model, ctx, ConditionVector("known", "unknown", "color"))
    assert dist == {
        "inform(color=*)": 0.5,
        "inform(shape=*)": 0.25,
        "check()": 0.25,
    }


def test_backoff_tie_merge_is_count_weighted(lexicon):
    # two stored conditions at equal distance merge their raw counts, not
    # their normalized distributions
    model = SimModel(level="act", n=1, lexicon=lexicon, tables={1: {}})
    model.tables[1][()] = {
        ("known", "unknown", "color"): Counter({"a()": 3}),
        ("unknown", "known", "color"): Counter({"b()": 1}),
    }
    model.fallback = Counter({"a()": 3, "b()": 1})
    dist = predict(model, (), ConditionVector("guessed", "guessed", "color"))
    assert dist == {"a()": 0.75, "b()": 0.25}


def test_global_fallback_when_nothing_matches(lexicon):
    model = SimModel(level="act", n=2, lexicon=lexicon, tables={1: {}, 2: {}})
    model.fallback = Counter({"check()": 1})
    dist = predict(model, ("hm",), initial_conditions())
    assert dist == {"check()": 1.0}

    empty = SimModel(level="act", n=1, lexicon=lexicon, tables={1: {}})
    with pytest.raises(TrainingError):
        predict(empty, (), initial_conditions())


def test_backoff_totality_on_random_queries(lexicon):
    corpus = generate_synthetic_corpus(
        params=GeneratorParams(dialogues=40), seed=8
    ).dialogues
    model = train(corpus, lexicon, n=3, level="act")
    rng = random.Random(0)
    vocab = ["what", "is", "sako", "zavi", "?", "xyzzy", "this", "no"]
    from charlearn.core import all_condition_vectors

    vectors = all_condition_vectors()
    for _ in range(300):
        k = rng.randrange(0, 4)
        ctx = tuple(rng.choice(vocab) for _ in range(k))
        cv = rng.choice(vectors)
        dist = predict(model, ctx, cv)
        assert abs(sum(dist.values()) - 1.0) < 1e-9
        assert all(p > 0 for p in dist.values())


# -- sampling and realization -------------------------------------------------------

def test_sample_is_count_proportional(lexicon):
    model = train(tiny_corpus(lexicon), lexicon, n=3, level="act")
    ctx = ("what", "is", "this", "?")
    cv = ConditionVector("unknown", "unknown", "color")
    rng = random.Random(123)
    draws = Counter(sample(model, ctx, cv, rng) for _ in range(9000))
    assert abs(draws["inform(color=*)"] / 9000 - 2 / 3) < 0.02
    assert abs(draws["check()"] / 9000 - 1 / 3) < 0.02


def test_realize_prefers_harvested_templates(lexicon):
    model = train(tiny_corpus(lexicon), lexicon, n=3, level="act")
    acts = parse_acts_string("inform(color=zavi)")
    texts = {
        realize(acts, model.templates, random.Random(i), lexicon) for i in range(20)
    }
    assert texts == {"it is zavi"}


def test_realize_default_clauses(lexicon):
    rng = random.Random(0)
    acts = (
        DialogueAct(A.REJECTION),
        DialogueAct(A.INFORM, category="color", word="sako"),
    )
    text = realize(acts, {}, rng, lexicon)
    assert "no" in text and "sako" in text

    ask = (DialogueAct(A.ASKING, category="shape"),)
    assert "what shape" in realize(ask, {}, rng, lexicon)

    guess = (DialogueAct(A.ASKING, word="zavi"),)
    assert realize(guess, {}, rng, lexicon) == "is it zavi ?"


def test_realize_rejects_unbound_placeholder(lexicon):
    acts = (DialogueAct(A.INFORM, category="color", word="*"),)
    with pytest.raises(RealizationError):
        realize(acts, {}, random.Random(0), lexicon)
    with pytest.raises(RealizationError):
        realize((), {}, random.Random(0), lexicon)


# -- runtime tutor --------------------------------------------------------------------

def test_respond_teaches_until_done(lexicon):
    corpus = generate_synthetic_corpus(params=GeneratorParams(dialogues=60), seed=21).dialogues
    model = train(corpus, lexicon, n=3, level="act")
    obj = VisualObject("green", "circle")
    state = DialogueState(object=obj, lexicon=lexicon)
    rng = random.Random(4)

    learner = turn(0, L, "what is this ?", 0, acts=[act(A.ASKING, category="color")])
    reply = None
    for _ in range(20):
        reply = respond(model, learner, state, rng)
        learner = turn(0, L, "ok", 0, acts=[act(A.ACKNOWLEDGMENT)])
        if reply.done:
            break
    assert reply is not None and reply.done
    assert state.conditions.c_state == "known" and state.conditions.s_state == "known"


def test_respond_handles_silence(lexicon):
    corpus = generate_synthetic_corpus(params=GeneratorParams(dialogues=40), seed=22).dialogues
    model = train(corpus, lexicon, n=3, level="act")
    state = DialogueState(object=VisualObject("red", "circle"), lexicon=lexicon)
    reply = respond(model, None, state, random.Random(1))
    assert reply.text
    assert state.turns_taken == 1


def test_respond_rejects_word_level(lexicon):
    corpus = tiny_corpus(lexicon)
    model = train(corpus, lexicon, n=2, level="word")
    state = DialogueState(object=VisualObject("red", "square"), lexicon=lexicon)
    with pytest.raises(TrainingError):
        respond(model, None, state, random.Random(0))


def test_utterance_level_respond_uses_majority_acts(lexicon):
    corpus = tiny_corpus(lexicon)
    model = train(corpus, lexicon, n=3, level="utterance")
    state = DialogueState(object=VisualObject("red", "square"), lexicon=lexicon)
    learner = turn(0, L, "what is this ?", 0, acts=[act(A.ASKING, category="color")])
    reply = respond(model, learner, state, random.Random(2))
    assert reply.text in {"it is sako", "it is zavi", "it is burchak", "got it ?"}
    # the acts attached to the reply are the ones the corpus voted for
    assert reply.acts


# -- act inference at the prompt --------------------------------------------------------

def test_infer_acts_from_text(lexicon):
    assert infer_acts_from_text("no", lexicon)[0].type is A.REJECTION
    guess = infer_acts_from_text("is it sako ?", lexicon)[0]
    assert guess.type is A.ASKING and guess.word == "sako"
    inform = infer_acts_from_text("zavi", lexicon)[0]
    assert inform.type is A.INFORM and inform.category == "color"
    wh = infer_acts_from_text("what color ?", lexicon)[0]
    assert wh.type is A.ASKING and wh.category == "color"
    assert infer_acts_from_text("say that again", lexicon)[0].type is A.REPETITION
    assert infer_acts_from_text("the shape now", lexicon)[0].type is A.FOCUS
    assert infer_acts_from_text("ok", lexicon)[0].type is A.ACKNOWLEDGMENT


# -- model files ---------------------------------------------------------------------------

def test_model_json_round_trip(tmp_path, lexicon):
    model = train(tiny_corpus(lexicon), lexicon, n=3, level="act")
    path = tmp_path / "model.json"
    save_model(path, model)
    back = load_model(path)
    assert back.level == model.level and back.n == model.n
    assert back.lexicon == model.lexicon
    assert back.fallback == model.fallback
    assert back.templates == model.templates
    assert back.utterance_acts == model.utterance_acts
    for k in model.tables:
        assert back.tables[k] == model.tables[k]

    # predictions survive the round trip bit for bit
    cv = ConditionVector("unknown", "unknown", "color")
    ctx = ("what", "is", "this", "?")
    assert predict(back, ctx, cv) == predict(model, ctx, cv)


def test_model_version_gate(lexicon):
    model = train(tiny_corpus(lexicon), lexicon, n=2, level="act")
    data = model_to_json(model)
    data["format_version"] = 99
    with pytest.raises(TrainingError):
        model_from_json(data)
