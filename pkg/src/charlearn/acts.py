"""Dialogue act inventory and the canonical act-string grammar.

Nine act types cover both tutor and learner behaviour in the
attribute-teaching dialogues.  Acts serialize to a compact canonical form
``name(key=value,...)`` -- ASCII, no spaces -- used in corpus files, model
files and act-sequence keys::

    inform(color=sako)      teach or state a word
    ack()                   bare acknowledgment
    ask(category=color)     wh-question about an attribute
    ask(word=suzuli)        polar question / guess
    reject(polarity=neg)    explicit negation

Grammar::

    sequence := act ("+" act)*
    act      := name "(" args? ")"
    args     := arg ("," arg)*
    arg      := CATEGORY "=" WORD     # category and word in one pair
              | "category=" CATEGORY
              | "word=" WORD
              | "polarity=" ("pos" | "neg")

``*`` is the placeholder word in abstracted acts: the category is fixed but
the concrete word is bound later (at realization time, from the object under
discussion).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum


class DialogueActType(str, Enum):
    INFORM = "inform"
    ACKNOWLEDGMENT = "acknowledgment"
    REJECTION = "rejection"
    ASKING = "asking"
    FOCUS = "focus"
    CLARIFICATION = "clarification"
    CHECKING = "checking"
    REPETITION = "repetition"
    OFFER_HELP = "offer_help"


#: short names used by the canonical grammar
SHORT_NAMES = {
    DialogueActType.INFORM: "inform",
    DialogueActType.ACKNOWLEDGMENT: "ack",
    DialogueActType.REJECTION: "reject",
    DialogueActType.ASKING: "ask",
    DialogueActType.FOCUS: "focus",
    DialogueActType.CLARIFICATION: "clarify",
    DialogueActType.CHECKING: "check",
    DialogueActType.REPETITION: "repeat",
    DialogueActType.OFFER_HELP: "offer",
}
_TYPES_BY_SHORT = {v: k for k, v in SHORT_NAMES.items()}

CATEGORIES = ("color", "shape")
CATEGORY_VALUES = ("color", "shape", "both")
POLARITIES = ("pos", "neg")

_ACT_RE = re.compile(r"^([a-z_]+)\((.*)\)$")
_WORD_RE = re.compile(r"^(\*|[a-z][a-z0-9_-]*)$")


class ActError(ValueError):
    """Malformed act or act string."""


@dataclass(frozen=True)
class DialogueAct:
    """One dialogue act with optional attribute arguments.

    ``category`` is one of color/shape/both, ``word`` an invented attribute
    word (or ``*`` for an unbound slot), ``polarity`` pos/neg.  inform always
    carries a word; asking carries a category or a word.
    """

    type: DialogueActType
    category: str | None = None
    word: str | None = None
    polarity: str | None = None

    def __post_init__(self):
        if not isinstance(self.type, DialogueActType):
            raise ActError("type must be a DialogueActType")
        if self.category is not None and self.category not in CATEGORY_VALUES:
            raise ActError("bad category %r" % (self.category,))
        if self.polarity is not None and self.polarity not in POLARITIES:
            raise ActError("bad polarity %r" % (self.polarity,))
        if self.word is not None:
            if not _WORD_RE.match(self.word):
                raise ActError("bad word %r" % (self.word,))
            if self.category == "both":
                raise ActError("a single word cannot have category 'both'")
            if self.word == "*" and self.category is None:
                raise ActError("placeholder word needs an explicit category")
        if self.type is DialogueActType.INFORM and self.word is None:
            raise ActError("inform requires a word")
        if self.type is DialogueActType.ASKING and self.word is None and self.category is None:
            raise ActError("asking requires a category or a word")


def canonical_act_string(act: DialogueAct) -> str:
    """Render an act in canonical form, e.g. ``inform(color=sako)``."""
    parts = []
    if act.category in CATEGORIES and act.word is not None:
        parts.append("%s=%s" % (act.category, act.word))
    elif act.category is not None:
        parts.append("category=%s" % act.category)
    elif act.word is not None:
        parts.append("word=%s" % act.word)
    if act.polarity is not None:
        parts.append("polarity=%s" % act.polarity)
    return "%s(%s)" % (SHORT_NAMES[act.type], ",".join(parts))


def parse_act_string(s: str) -> DialogueAct:
    """Inverse of :func:`canonical_act_string`."""
    m = _ACT_RE.match(s.strip())
    if not m:
        raise ActError("cannot parse act %r" % (s,))
    name, body = m.groups()
    act_type = _TYPES_BY_SHORT.get(name)
    if act_type is None:
        raise ActError("unknown act type %r" % (name,))
    category = word = polarity = None
    if body:
        for arg in body.split(","):
            if "=" not in arg:
                raise ActError("bad argument %r in %r" % (arg, s))
            key, value = arg.split("=", 1)
            if key == "category":
                category = value
            elif key == "word":
                word = value
            elif key == "polarity":
                polarity = value
            elif key in CATEGORIES:
                category, word = key, value
            else:
                raise ActError("bad argument key %r in %r" % (key, s))
    return DialogueAct(act_type, category=category, word=word, polarity=polarity)


def acts_to_string(acts) -> str:
    """Canonical form of an act sequence: acts joined with ``+``."""
    acts = tuple(acts)
    if not acts:
        raise ActError("an act sequence holds at least one act")
    return "+".join(canonical_act_string(a) for a in acts)


def parse_acts_string(s: str):
    parts = s.split("+")
    return tuple(parse_act_string(p) for p in parts)


def abstract_act(act: DialogueAct, lexicon) -> DialogueAct:
    """Replace a concrete word with the ``*`` placeholder.

    The category is resolved through ``lexicon`` when the act only carries a
    word, so the placeholder stays bindable.
    """
    if act.word is None or act.word == "*":
        return act
    category = act.category
    if category is None:
        category = lexicon.category_of(act.word)
        if category is None:
            return act  # out-of-lexicon word: leave untouched
    return replace(act, category=category, word="*")


def abstract_acts_string(acts, lexicon) -> str:
    return acts_to_string(abstract_act(a, lexicon) for a in acts)
