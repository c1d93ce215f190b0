"""Tutor simulation: compound n-gram models with back-off and NN matching.

The model estimates P(item | recent words, conditions) by plain count
ratios.  Items live at one of three granularities: whole utterances,
abstracted act sequences, or single words.  Lookup order on a query:

  1. exact (words, conditions) key at order n, then n-1 ... 1
     (order k uses the last k-1 context tokens; order 1 is condition-only);
  2. otherwise, at the highest order where the word context is known at
     all, the stored condition vectors nearest in Hamming distance --
     distance ties merge their counts;
  3. otherwise the global item distribution.

Exact hits reproduce the training count ratios with no smoothing, so a
model evaluated on its own training corpus is exact.

Act-level items are stored abstracted (``inform(color=*)``): the concrete
word is bound at response time from the object under discussion, which is
what lets one trained model teach any object.
"""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass, field

from .acts import (
    DialogueAct,
    DialogueActType,
    abstract_acts_string,
    acts_to_string,
    parse_acts_string,
)
from .conditions import both_known, initial_conditions, update_conditions
from .core import AttributeLexicon, ConditionVector, Role, Turn, VisualObject
from .corpus import tokenize
from .synthesis import materialize_acts

LEVELS = ("utterance", "act", "word")
END_TOKEN = "</u>"

MODEL_FORMAT_VERSION = 1


class TrainingError(ValueError):
    """Corpus unusable for the requested model."""


class RealizationError(ValueError):
    """An act sequence cannot be rendered to text."""


@dataclass
class SimModel:
    level: str
    n: int
    lexicon: AttributeLexicon
    # order k -> {context words tuple -> {condition tuple -> Counter(item)}}
    tables: dict = field(default_factory=dict)
    templates: dict = field(default_factory=dict)  # abstract acts -> Counter(template)
    fallback: Counter = field(default_factory=Counter)
    utterance_acts: dict = field(default_factory=dict)  # utterance -> acts string


def training_pairs(dialogues, lexicon: AttributeLexicon, level: str, speaker: Role = Role.TUTOR):
    """Yield (context tokens, conditions, item) for every simulated turn.

    The context is the tokenized immediately preceding turn (whoever spoke
    it); conditions are replayed with the shared update table, so they match
    whatever produced the corpus.  Word-level items additionally walk the
    turn token by token, closing with the end sentinel.
    """
    if level not in LEVELS:
        raise TrainingError("unknown level %r" % (level,))
    for dialogue in dialogues:
        if dialogue.object is None:
            raise TrainingError(
                "dialogue %s has no object; conditions cannot be replayed" % dialogue.dialogue_id
            )
        cv = initial_conditions()
        prev_tokens = ()
        for turn in dialogue.turns:
            tokens = tuple(tokenize(turn.text))
            if turn.speaker is speaker:
                if level == "utterance":
                    yield prev_tokens, cv, turn.text
                elif level == "act":
                    if not turn.acts:
                        raise TrainingError(
                            "turn without act annotation in %s" % dialogue.dialogue_id
                        )
                    yield prev_tokens, cv, abstract_acts_string(turn.acts, lexicon)
                else:
                    history = list(prev_tokens)
                    for token in tokens + (END_TOKEN,):
                        yield tuple(history), cv, token
                        history.append(token)
            cv = update_conditions(cv, turn.speaker, turn.acts, dialogue.object, lexicon)
            prev_tokens = tokens
    return


def _template_of(text: str, lexicon: AttributeLexicon) -> str:
    out = []
    for tok in text.split():
        hit = lexicon.lookup_word(tok.lower())
        out.append("{%s}" % hit[0] if hit else tok)
    return " ".join(out)


def train(
    dialogues,
    lexicon: AttributeLexicon,
    n: int = 3,
    level: str = "act",
    speaker: Role = Role.TUTOR,
) -> SimModel:
    """Count-table training; raises TrainingError on an unusable corpus."""
    if n < 1:
        raise TrainingError("n must be >= 1")
    lexicon.validate_strict()
    model = SimModel(level=level, n=n, lexicon=lexicon, tables={k: {} for k in range(1, n + 1)})
    utterance_votes = {}
    trained = 0
    for context, cv, item in training_pairs(dialogues, lexicon, level, speaker):
        cond = cv.as_tuple()
        for k in range(1, n + 1):
            ctx = tuple(context[-(k - 1):]) if k > 1 else ()
            by_cond = model.tables[k].setdefault(ctx, {})
            by_cond.setdefault(cond, Counter())[item] += 1
        model.fallback[item] += 1
        trained += 1
    if not trained:
        raise TrainingError("no %s turns to train on" % speaker.value)

    for dialogue in dialogues:
        for turn in dialogue.turns:
            if turn.speaker is not speaker or not turn.acts:
                continue
            key = abstract_acts_string(turn.acts, lexicon)
            model.templates.setdefault(key, Counter())[_template_of(turn.text, lexicon)] += 1
            utterance_votes.setdefault(turn.text, Counter())[acts_to_string(turn.acts)] += 1
    model.utterance_acts = {
        text: votes.most_common(1)[0][0] for text, votes in utterance_votes.items()
    }
    return model


def _normalize(counter: Counter) -> dict:
    total = sum(counter.values())
    return {item: count / total for item, count in counter.items()}


def _cond_distance(a, b) -> int:
    return sum(1 for x, y in zip(a, b) if x != y)


def hamming(a: ConditionVector, b: ConditionVector) -> int:
    """Slots on which two condition vectors differ (0..3)."""
    return a.hamming(b)


def predict(model: SimModel, words, conditions: ConditionVector) -> dict:
    """Distribution over next items; total function on any query.

    See the module docstring for the back-off order.  The returned
    probabilities are exact count ratios of whichever table answered.
    """
    words = tuple(words)
    cond = conditions.as_tuple()

    for k in range(model.n, 0, -1):
        ctx = words[-(k - 1):] if k > 1 else ()
        hit = model.tables.get(k, {}).get(ctx, {}).get(cond)
        if hit:
            return _normalize(hit)

    for k in range(model.n, 0, -1):
        ctx = words[-(k - 1):] if k > 1 else ()
        by_cond = model.tables.get(k, {}).get(ctx)
        if not by_cond:
            continue
        best = min(_cond_distance(cond, stored) for stored in by_cond)
        merged = Counter()
        for stored, counter in by_cond.items():
            if _cond_distance(cond, stored) == best:
                merged.update(counter)
        return _normalize(merged)

    if model.fallback:
        return _normalize(model.fallback)
    raise TrainingError("model has no counts")


def sample(model: SimModel, words, conditions: ConditionVector, rng: random.Random):
    """Draw one item from predict(); deterministic for a given rng state."""
    dist = predict(model, words, conditions)
    r = rng.random()
    acc = 0.0
    items = sorted(dist.items())
    for item, p in items:
        acc += p
        if r < acc:
            return item
    return items[-1][0]


DEFAULT_ACT_TEMPLATES = {
    DialogueActType.INFORM: "it is {word}",
    DialogueActType.ACKNOWLEDGMENT: "yes",
    DialogueActType.REJECTION: "no",
    DialogueActType.ASKING: None,  # built from the act's arguments
    DialogueActType.FOCUS: "now the {category}",
    DialogueActType.CLARIFICATION: "i mean the {category}",
    DialogueActType.CHECKING: "got it ?",
    DialogueActType.REPETITION: "can you say that again ?",
    DialogueActType.OFFER_HELP: "do you need help ?",
}


def _default_realization(act: DialogueAct) -> str:
    if act.type is DialogueActType.ASKING:
        if act.word and act.word != "*":
            return "is it %s ?" % act.word
        return "what %s is it ?" % (act.category if act.category in ("color", "shape") else "thing")
    template = DEFAULT_ACT_TEMPLATES[act.type]
    if "{word}" in template:
        if not act.word or act.word == "*":
            raise RealizationError("unfillable word slot in %s" % act.type.value)
        return template.replace("{word}", act.word)
    if "{category}" in template:
        if act.category is None:
            return template.replace(" the {category}", " that")
        return template.replace("{category}", act.category)
    return template


def realize(acts, store: dict, rng: random.Random, lexicon: AttributeLexicon | None = None) -> str:
    """Render an act sequence to one utterance.

    Uses harvested templates for the sequence when available (sampled
    proportionally to how often each template occurred), otherwise falls
    back to one default clause per act, joined in act order.
    """
    acts = tuple(acts)
    if not acts:
        raise RealizationError("empty act sequence")

    slots = {}
    for act in acts:
        if act.word and act.word != "*":
            slots.setdefault("word", act.word)
            category = act.category
            if category is None and lexicon is not None:
                category = lexicon.category_of(act.word)
            if category in ("color", "shape"):
                slots.setdefault(category, act.word)
        elif act.word == "*":
            raise RealizationError("unbound placeholder word; materialize acts first")

    if lexicon is not None:
        key = abstract_acts_string(acts, lexicon)
    else:
        key = acts_to_string(acts)
    counter = store.get(key)
    if counter:
        r = rng.random()
        total = sum(counter.values())
        acc = 0.0
        text = None
        for template, count in sorted(counter.items()):
            acc += count / total
            if r < acc:
                text = template
                break
        if text is None:
            text = sorted(counter.items())[-1][0]
        for name in ("color", "shape", "word"):
            marker = "{%s}" % name
            if marker in text:
                if name not in slots:
                    raise RealizationError("unfillable slot %s in %r" % (marker, text))
                text = text.replace(marker, slots[name])
        if "{" in text:
            raise RealizationError("unfilled slot remains in %r" % (text,))
        return text

    return " ".join(_default_realization(a) for a in acts)


@dataclass
class DialogueState:
    """Mutable per-dialogue state the runtime tutor threads between turns."""

    object: VisualObject
    lexicon: AttributeLexicon
    conditions: ConditionVector = field(default_factory=initial_conditions)
    last_tokens: tuple = ()
    turns_taken: int = 0


@dataclass(frozen=True)
class TutorResponse:
    acts: tuple
    text: str
    conditions: ConditionVector
    done: bool


def respond(
    model: SimModel,
    learner_turn: Turn | None,
    state: DialogueState,
    rng: random.Random,
) -> TutorResponse:
    """One tutor reply given the learner's turn (or None for silence).

    Conditions are updated from the learner turn (a correct guess becomes
    known, a wrong one guessed, topic words move the context), the model is
    queried with the preceding utterance's tokens, and the sampled item is
    realized to text.  On silence the tutor continues from its own last
    utterance.  Word-level models do not support generation.
    """
    if model.level == "word":
        raise TrainingError("respond needs an act- or utterance-level model")

    if learner_turn is not None:
        state.conditions = update_conditions(
            state.conditions, learner_turn.speaker, learner_turn.acts, state.object, state.lexicon
        )
        state.last_tokens = tuple(tokenize(learner_turn.text))

    item = sample(model, state.last_tokens, state.conditions, rng)

    if model.level == "act":
        acts = materialize_acts(parse_acts_string(item), state.object, model.lexicon)
        text = realize(acts, model.templates, rng, model.lexicon)
    else:
        text = item
        stored = model.utterance_acts.get(item)
        acts = parse_acts_string(stored) if stored else ()

    state.conditions = update_conditions(
        state.conditions, Role.TUTOR, acts, state.object, state.lexicon
    )
    state.last_tokens = tuple(tokenize(text))
    state.turns_taken += 1
    return TutorResponse(
        acts=acts, text=text, conditions=state.conditions, done=both_known(state.conditions)
    )


_ACK_WORDS = frozenset(("ok", "okay", "yes", "yeah", "right", "thanks", "thank", "got"))
_REPEAT_WORDS = frozenset(("repeat", "again", "pardon"))
_CATEGORY_WORDS = {"color": "color", "colour": "color", "shape": "shape"}


def infer_acts_from_text(text: str, lexicon: AttributeLexicon):
    """Rough act tags for a free-typed learner line.

    Only used at the interactive prompt, where no annotator is available.
    Known attribute words dominate; a question mark turns a mention into a
    guess and a category keyword into a wh-question; short negations and
    confirmations map to rejection and acknowledgment.
    """
    tokens = tokenize(text)
    question = "?" in " ".join(tokens)
    word = next((t for t in tokens if t in lexicon.all_words()), None)
    category = next((_CATEGORY_WORDS[t] for t in tokens if t in _CATEGORY_WORDS), None)

    if tokens[:1] in (["no"], ["nope"], ["wrong"]):
        return (DialogueAct(DialogueActType.REJECTION),)
    if word is not None:
        if question:
            return (DialogueAct(DialogueActType.ASKING, category=lexicon.category_of(word), word=word),)
        return (DialogueAct(DialogueActType.INFORM, category=lexicon.category_of(word), word=word),)
    if question:
        return (DialogueAct(DialogueActType.ASKING, category=category or "both"),)
    if any(t in _REPEAT_WORDS for t in tokens):
        return (DialogueAct(DialogueActType.REPETITION),)
    if category is not None:
        return (DialogueAct(DialogueActType.FOCUS, category=category),)
    if any(t in _ACK_WORDS for t in tokens):
        return (DialogueAct(DialogueActType.ACKNOWLEDGMENT),)
    return (DialogueAct(DialogueActType.ACKNOWLEDGMENT),)


# ---------------------------------------------------------------------------
# model files

def model_to_json(model: SimModel) -> dict:
    rows = []
    for k in sorted(model.tables):
        for ctx, by_cond in sorted(model.tables[k].items()):
            for cond, counter in sorted(by_cond.items()):
                rows.append(
                    {
                        "order": k,
                        "words": list(ctx),
                        "conditions": list(cond),
                        "items": dict(sorted(counter.items())),
                    }
                )
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "level": model.level,
        "n": model.n,
        "lexicon": model.lexicon.to_json(),
        "rows": rows,
        "templates": {k: dict(sorted(v.items())) for k, v in sorted(model.templates.items())},
        "fallback": dict(sorted(model.fallback.items())),
        "utterance_acts": dict(sorted(model.utterance_acts.items())),
    }


def model_from_json(data: dict) -> SimModel:
    version = data.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise TrainingError("unsupported model format %r" % (version,))
    model = SimModel(
        level=data["level"],
        n=data["n"],
        lexicon=AttributeLexicon.from_json(data["lexicon"]),
        tables={k: {} for k in range(1, data["n"] + 1)},
        templates={k: Counter(v) for k, v in data.get("templates", {}).items()},
        fallback=Counter(data.get("fallback", {})),
        utterance_acts=dict(data.get("utterance_acts", {})),
    )
    for row in data["rows"]:
        ctx = tuple(row["words"])
        cond = tuple(row["conditions"])
        by_cond = model.tables[row["order"]].setdefault(ctx, {})
        by_cond[cond] = Counter(row["items"])
    return model


def save_model(path, model: SimModel):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_json(model), fh, ensure_ascii=False, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path) -> SimModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_json(json.load(fh))
