import pytest

from charlearn.acts import (
    ActError,
    DialogueAct,
    DialogueActType,
    SHORT_NAMES,
    abstract_act,
    abstract_acts_string,
    acts_to_string,
    canonical_act_string,
    parse_act_string,
    parse_acts_string,
)
from charlearn.core import AttributeLexicon

A = DialogueActType

LEX = AttributeLexicon(
    colors={"red": "sako", "green": "suzuli", "blue": "zavi"},
    shapes={"square": "burchak", "circle": "wakaki", "triangle": "aylana"},
)


def test_nine_act_types():
    assert len(DialogueActType) == 9
    assert set(SHORT_NAMES) == set(DialogueActType)


@pytest.mark.parametrize(
    "act,expected",
    [
        (DialogueAct(A.INFORM, category="color", word="sako"), "inform(color=sako)"),
        (DialogueAct(A.ACKNOWLEDGMENT), "ack()"),
        (DialogueAct(A.ASKING, category="color"), "ask(category=color)"),
        (DialogueAct(A.ASKING, word="suzuli"), "ask(word=suzuli)"),
        (DialogueAct(A.REJECTION, polarity="neg"), "reject(polarity=neg)"),
        (DialogueAct(A.INFORM, category="shape", word="*"), "inform(shape=*)"),
        (DialogueAct(A.FOCUS, category="both"), "focus(category=both)"),
        (DialogueAct(A.CHECKING), "check()"),
        (DialogueAct(A.OFFER_HELP), "offer()"),
        (DialogueAct(A.REPETITION), "repeat()"),
        (DialogueAct(A.CLARIFICATION, category="shape"), "clarify(category=shape)"),
    ],
)
def test_canonical_form(act, expected):
    assert canonical_act_string(act) == expected
    assert parse_act_string(expected) == act


def test_sequence_round_trip():
    acts = (
        DialogueAct(A.REJECTION),
        DialogueAct(A.INFORM, category="color", word="zavi"),
    )
    s = acts_to_string(acts)
    assert s == "reject()+inform(color=zavi)"
    assert parse_acts_string(s) == acts


def test_all_types_round_trip_bare_or_minimal():
    # every act type must survive a serialization round trip
    for t in DialogueActType:
        if t is A.INFORM:
            a = DialogueAct(t, category="color", word="sako")
        elif t is A.ASKING:
            a = DialogueAct(t, category="shape")
        else:
            a = DialogueAct(t)
        assert parse_act_string(canonical_act_string(a)) == a


def test_empty_sequence_rejected():
    with pytest.raises(ActError):
        acts_to_string(())


@pytest.mark.parametrize(
    "bad",
    [
        "inform",  # no parens
        "inform()",  # inform needs a word
        "ask()",  # asking needs category or word
        "shrug()",  # unknown type
        "inform(color=sako",  # unbalanced
        "inform(hue=sako)",  # bad key
        "inform(color=Sako)",  # uppercase word
        "reject(polarity=maybe)",
    ],
)
def test_parse_rejects_malformed(bad):
    with pytest.raises(ActError):
        parse_act_string(bad)


def test_constructor_validation():
    with pytest.raises(ActError):
        DialogueAct(A.INFORM)  # word required
    with pytest.raises(ActError):
        DialogueAct(A.ASKING)  # category or word required
    with pytest.raises(ActError):
        DialogueAct(A.INFORM, category="both", word="sako")
    with pytest.raises(ActError):
        DialogueAct(A.INFORM, word="*")  # placeholder needs a category
    with pytest.raises(ActError):
        DialogueAct(A.FOCUS, category="size")


def test_abstraction_binds_category_and_stars_word():
    a = DialogueAct(A.INFORM, word="sako")
    abstracted = abstract_act(a, LEX)
    assert abstracted == DialogueAct(A.INFORM, category="color", word="*")

    # out-of-lexicon words stay as they are
    odd = DialogueAct(A.INFORM, word="blorp")
    assert abstract_act(odd, LEX) is odd

    # wordless acts pass through
    bare = DialogueAct(A.ACKNOWLEDGMENT)
    assert abstract_act(bare, LEX) is bare


def test_abstract_sequence_string():
    acts = (
        DialogueAct(A.REJECTION),
        DialogueAct(A.INFORM, category="shape", word="wakaki"),
    )
    assert abstract_acts_string(acts, LEX) == "reject()+inform(shape=*)"
