import random

import pytest

from charlearn.acts import DialogueAct, DialogueActType
from charlearn.core import (
    AttributeLexicon,
    CharEvent,
    Dialogue,
    Outcome,
    Role,
    Turn,
    VisualObject,
)

A = DialogueActType


@pytest.fixture
def lexicon():
    return AttributeLexicon(
        colors={"red": "sako", "green": "suzuli", "blue": "zavi"},
        shapes={"square": "burchak", "circle": "wakaki", "triangle": "aylana"},
    )


@pytest.fixture
def rng():
    return random.Random(12345)


def act(kind, category=None, word=None, polarity=None):
    return DialogueAct(kind, category=category, word=word, polarity=polarity)


def turn(turn_id, speaker, text, start, end=None, acts=()):
    return Turn(
        turn_id=turn_id,
        speaker=speaker,
        text=text,
        start_ms=start,
        end_ms=end if end is not None else start + 10 * max(len(text) - 1, 0),
        acts=tuple(acts),
    )


def dialogue(dialogue_id, obj, turns, outcome=None):
    return Dialogue(
        dialogue_id=dialogue_id,
        object=obj,
        turns=tuple(turns),
        outcome=outcome or Outcome(),
    )


def events_from_script(script, session_id="s", object_index=0, start_seq=1):
    """Build CharEvents from (ts, role, ch) triples, seq in list order."""
    out = []
    for i, (ts, role, ch) in enumerate(script):
        out.append(
            CharEvent(
                seq=start_seq + i,
                session_id=session_id,
                object_index=object_index,
                sender=role,
                ch=ch,
                server_ts=ts,
            )
        )
    return out


def typed_turn_events(text, role, t0, gap=100, session_id="s", object_index=0, start_seq=1):
    return events_from_script(
        [(t0 + i * gap, role, ch) for i, ch in enumerate(text)],
        session_id=session_id,
        object_index=object_index,
        start_seq=start_seq,
    )


@pytest.fixture
def red_square():
    return VisualObject("red", "square")


@pytest.fixture
def teaching_dialogue(lexicon, red_square):
    """Four-turn exchange: wh-question, teach, guess, confirm."""
    L, T = Role.LEARNER, Role.TUTOR
    turns = [
        turn(0, L, "what is this ?", 0, acts=[act(A.ASKING, category="color")]),
        turn(1, T, "it is sako", 2000, acts=[act(A.INFORM, category="color", word="sako")]),
        turn(2, L, "burchak ?", 4000, acts=[act(A.ASKING, category="shape", word="burchak")]),
        turn(
            3,
            T,
            "yes burchak",
            6000,
            acts=[act(A.ACKNOWLEDGMENT, category="shape", word="burchak")],
        ),
    ]
    return dialogue("d:00", red_square, turns, Outcome(True, True))
