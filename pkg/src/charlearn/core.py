"""Core value objects: events, turns, dialogues, objects, lexicon, conditions.

Everything here is an immutable value; derived views are built with
``dataclasses.replace`` style helpers rather than mutation.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import product

from .acts import DialogueAct

COLOR_LABELS = ("red", "green", "blue")
SHAPE_LABELS = ("square", "circle", "triangle")

KNOWLEDGE_STATES = ("unknown", "guessed", "known")
PRE_CONTEXTS = ("none", "color", "shape", "both")


class Role(str, Enum):
    TUTOR = "tutor"
    LEARNER = "learner"


class PhenomenonTag(str, Enum):
    OVERLAP = "overlap"
    SELF_CORRECTION = "self_correction"
    SELF_REPETITION = "self_repetition"
    CONTINUATION = "continuation"
    FILLER = "filler"


class LexiconError(ValueError):
    """Lexicon fails validation."""


def is_printable_char(ch: str) -> bool:
    """True for the single printable characters the chat relays.

    Space passes; control characters (backspace, delete, newline, tab) do
    not -- deletion never reaches the wire.
    """
    return len(ch) == 1 and ch.isprintable()


@dataclass(frozen=True)
class CharEvent:
    """One relayed keystroke.

    ``server_ts`` is milliseconds since session start and is authoritative
    for ordering; ``seq`` is the per-session counter the relay assigns.
    """

    seq: int
    session_id: str
    object_index: int
    sender: Role
    ch: str
    server_ts: int
    client_ts: int = 0

    def __post_init__(self):
        if self.seq < 1:
            raise ValueError("seq starts at 1")
        if self.object_index < 0:
            raise ValueError("object_index must be >= 0")
        if not is_printable_char(self.ch):
            raise ValueError("ch must be a single printable character")
        if self.server_ts < 0:
            raise ValueError("server_ts must be >= 0")


@dataclass(frozen=True)
class VisualObject:
    """A colored shape shown to both participants."""

    color: str
    shape: str
    features: tuple = ()

    def label(self, category: str) -> str:
        if category == "color":
            return self.color
        if category == "shape":
            return self.shape
        raise ValueError("bad category %r" % (category,))

    def indicated_label(self, category: str) -> str:
        """Label read off the feature vector (falls back to the stored one).

        Features are one-hot per label with bounded noise, colors first, so
        the block argmax recovers the label.
        """
        if not self.features:
            return self.label(category)
        nc, ns = len(COLOR_LABELS), len(SHAPE_LABELS)
        if len(self.features) != nc + ns:
            return self.label(category)
        if category == "color":
            block, labels = self.features[:nc], COLOR_LABELS
        else:
            block, labels = self.features[nc:], SHAPE_LABELS
        return labels[max(range(len(block)), key=block.__getitem__)]

    def to_json(self) -> dict:
        return {"color": self.color, "shape": self.shape, "features": list(self.features)}

    @classmethod
    def from_json(cls, data: dict) -> "VisualObject":
        return cls(data["color"], data["shape"], tuple(data.get("features", ())))


@dataclass(frozen=True)
class Turn:
    """A contiguous single-speaker stretch of typing.

    ``events`` is kept for turns produced by segmentation; annotation and
    cleaning views may drop it (empty tuple).  When events are present the
    text is exactly their characters in order.
    """

    turn_id: int
    speaker: Role
    text: str
    start_ms: int
    end_ms: int
    events: tuple = ()
    acts: tuple = ()
    phenomena: frozenset = frozenset()

    def __post_init__(self):
        if self.end_ms < self.start_ms:
            raise ValueError("turn ends before it starts")
        if self.events and "".join(e.ch for e in self.events) != self.text:
            raise ValueError("turn text must equal its event characters")

    def with_annotations(self, acts=None, phenomena=None) -> "Turn":
        changes = {}
        if acts is not None:
            changes["acts"] = tuple(acts)
        if phenomena is not None:
            changes["phenomena"] = frozenset(phenomena)
        return replace(self, **changes)

    @property
    def span(self):
        return (self.start_ms, self.end_ms)


@dataclass(frozen=True)
class Outcome:
    color_identified: bool = False
    shape_identified: bool = False


@dataclass(frozen=True)
class Dialogue:
    """All turns about one object, in start order."""

    dialogue_id: str
    object: VisualObject | None
    turns: tuple
    outcome: Outcome = Outcome()


@dataclass(frozen=True)
class ConditionVector:
    """Dialogue-state conditions a prediction is keyed on.

    Two knowledge slots (was each attribute identified correctly, or merely
    guessed at) plus the attribute under discussion.  Exactly
    3 * 3 * 4 = 36 distinct values.
    """

    c_state: str = "unknown"
    s_state: str = "unknown"
    pre_context: str = "none"

    def __post_init__(self):
        if self.c_state not in KNOWLEDGE_STATES or self.s_state not in KNOWLEDGE_STATES:
            raise ValueError("bad knowledge state")
        if self.pre_context not in PRE_CONTEXTS:
            raise ValueError("bad pre_context %r" % (self.pre_context,))

    def as_tuple(self):
        return (self.c_state, self.s_state, self.pre_context)

    @classmethod
    def from_tuple(cls, t) -> "ConditionVector":
        return cls(t[0], t[1], t[2])

    def canonical(self) -> str:
        return "%s,%s,%s" % self.as_tuple()

    @classmethod
    def from_canonical(cls, s: str) -> "ConditionVector":
        return cls.from_tuple(s.split(","))

    def hamming(self, other: "ConditionVector") -> int:
        """Number of differing slots; 0..3 and a proper metric."""
        a, b = self.as_tuple(), other.as_tuple()
        return sum(1 for x, y in zip(a, b) if x != y)


def all_condition_vectors():
    """Every condition vector, in a fixed canonical order (36 values)."""
    return tuple(
        ConditionVector(c, s, p)
        for c, s, p in product(KNOWLEDGE_STATES, KNOWLEDGE_STATES, PRE_CONTEXTS)
    )


def hamming(a: ConditionVector, b: ConditionVector) -> int:
    return a.hamming(b)


@dataclass(frozen=True)
class AttributeLexicon:
    """Ground label -> invented word, per attribute category."""

    colors: dict = field(default_factory=dict)
    shapes: dict = field(default_factory=dict)

    def mapping(self, category: str) -> dict:
        if category == "color":
            return self.colors
        if category == "shape":
            return self.shapes
        raise ValueError("bad category %r" % (category,))

    def labels(self, category: str):
        return tuple(self.mapping(category))

    def words(self, category: str):
        return tuple(self.mapping(category).values())

    def word_for(self, category: str, label: str) -> str:
        try:
            return self.mapping(category)[label]
        except KeyError:
            raise LexiconError("no word for %s %r" % (category, label)) from None

    def lookup_word(self, word: str):
        """(category, label) for a word, or None when out of lexicon."""
        for category in ("color", "shape"):
            for label, w in self.mapping(category).items():
                if w == word:
                    return (category, label)
        return None

    def category_of(self, word: str):
        hit = self.lookup_word(word)
        return hit[0] if hit else None

    def all_words(self):
        return self.words("color") + self.words("shape")

    def validate(self) -> list:
        return validate_lexicon(self)

    def validate_strict(self) -> "AttributeLexicon":
        errors = self.validate()
        if errors:
            raise LexiconError("; ".join(errors))
        return self

    def to_json(self) -> dict:
        return {"color": dict(self.colors), "shape": dict(self.shapes)}

    @classmethod
    def from_json(cls, data: dict) -> "AttributeLexicon":
        return cls(colors=dict(data["color"]), shapes=dict(data["shape"]))


def validate_lexicon(lexicon: AttributeLexicon) -> list:
    """Return a list of problems; empty means the lexicon is usable.

    Each category carries exactly three entries and every invented word is
    unique across both categories.
    """
    errors = []
    for category in ("color", "shape"):
        mapping = lexicon.mapping(category)
        if len(mapping) != 3:
            errors.append("%s category needs exactly 3 entries, got %d" % (category, len(mapping)))
        for label, word in mapping.items():
            if not isinstance(word, str) or not word or not word.isascii() or not word.isalpha():
                errors.append("bad invented word %r for %s %r" % (word, category, label))
            elif word == label:
                errors.append("invented word %r shadows its own label" % (word,))
    words = list(lexicon.colors.values()) + list(lexicon.shapes.values())
    dupes = {w for w in words if words.count(w) > 1}
    for w in sorted(dupes):
        errors.append("word %r is not unique across the lexicon" % (w,))
    return errors


#: Default teaching vocabulary.  Three of the six words and their labels are
#: fixed by convention (sako=red, suzuli=green, burchak=square); the rest are
#: configuration placeholders and can be swapped freely in session config.
DEFAULT_LEXICON = AttributeLexicon(
    colors={"red": "sako", "green": "suzuli", "blue": "zavi"},
    shapes={"square": "burchak", "circle": "wakaki", "triangle": "aylana"},
)


def default_lexicon() -> AttributeLexicon:
    return DEFAULT_LEXICON


def _noisy_features(rng: random.Random, color_i: int, shape_i: int) -> tuple:
    # one-hot per label block with uniform noise of amplitude 0.1, kept in [0, 1]
    feats = []
    for i in range(len(COLOR_LABELS)):
        feats.append(1.0 - rng.uniform(0.0, 0.1) if i == color_i else rng.uniform(0.0, 0.1))
    for i in range(len(SHAPE_LABELS)):
        feats.append(1.0 - rng.uniform(0.0, 0.1) if i == shape_i else rng.uniform(0.0, 0.1))
    return tuple(feats)


def make_object_sequence(lexicon: AttributeLexicon, count: int, seed: int):
    """Deterministic object schedule covering the 3x3 attribute grid.

    Objects are drawn in shuffled blocks of all nine color/shape cells, so
    every cell appears once before any repeats (and exactly twice by 18).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    lexicon.validate_strict()
    colors = lexicon.labels("color")
    shapes = lexicon.labels("shape")
    cells = [(ci, si) for ci in range(len(colors)) for si in range(len(shapes))]
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        block = cells[:]
        rng.shuffle(block)
        for ci, si in block:
            if len(out) >= count:
                break
            out.append(
                VisualObject(colors[ci], shapes[si], _noisy_features(rng, ci, si))
            )
    return tuple(out)
