import pytest

from charlearn.acts import DialogueAct, DialogueActType
from charlearn.conditions import both_known, initial_conditions, update_conditions
from charlearn.core import ConditionVector, Role, VisualObject

A = DialogueActType
L, T = Role.LEARNER, Role.TUTOR

OBJ = VisualObject("red", "square")  # true words: sako, burchak


def step(cv, speaker, *acts, obj=OBJ, lexicon=None):
    from charlearn.core import DEFAULT_LEXICON

    return update_conditions(cv, speaker, acts, obj, lexicon or DEFAULT_LEXICON)


def test_initial_state():
    cv = initial_conditions()
    assert cv == ConditionVector("unknown", "unknown", "none")
    assert not both_known(cv)


def test_tutor_inform_teaches():
    cv = step(initial_conditions(), T, DialogueAct(A.INFORM, category="color", word="sako"))
    assert cv == ConditionVector("known", "unknown", "color")


def test_learner_correct_guess_becomes_known():
    cv = step(initial_conditions(), L, DialogueAct(A.ASKING, category="color", word="sako"))
    assert cv.c_state == "known"
    assert cv.pre_context == "color"


def test_learner_wrong_guess_becomes_guessed():
    cv = step(initial_conditions(), L, DialogueAct(A.ASKING, category="color", word="zavi"))
    assert cv.c_state == "guessed"


def test_learner_inform_is_judged_like_a_guess():
    cv = step(initial_conditions(), L, DialogueAct(A.INFORM, word="burchak"))
    assert cv.s_state == "known"
    cv = step(initial_conditions(), L, DialogueAct(A.INFORM, word="wakaki"))
    assert cv.s_state == "guessed"


def test_wh_question_moves_topic_only():
    cv = step(initial_conditions(), L, DialogueAct(A.ASKING, category="shape"))
    assert cv == ConditionVector("unknown", "unknown", "shape")
    cv = step(cv, T, DialogueAct(A.ASKING, category="color"))
    assert cv == ConditionVector("unknown", "unknown", "color")


def test_tutor_polar_question_moves_topic_without_knowledge():
    # the tutor checking "is it sako ?" must not mark color known
    cv = step(initial_conditions(), T, DialogueAct(A.ASKING, word="sako"))
    assert cv == ConditionVector("unknown", "unknown", "color")


def test_tutor_ack_with_category_confirms():
    cv = ConditionVector("guessed", "unknown", "color")
    cv = step(cv, T, DialogueAct(A.ACKNOWLEDGMENT, category="color", word="sako"))
    assert cv.c_state == "known"


def test_bare_ack_changes_nothing():
    cv = ConditionVector("guessed", "known", "shape")
    out = step(cv, T, DialogueAct(A.ACKNOWLEDGMENT))
    assert out == cv
    out = step(cv, L, DialogueAct(A.ACKNOWLEDGMENT))
    assert out == cv


def test_tutor_rejection_clears_guesses():
    cv = ConditionVector("guessed", "guessed", "both")
    out = step(cv, T, DialogueAct(A.REJECTION))
    assert out.c_state == "unknown" and out.s_state == "unknown"
    assert out.pre_context == "both"

    # category-scoped rejection clears just that slot
    out = step(cv, T, DialogueAct(A.REJECTION, category="shape"))
    assert out.c_state == "guessed" and out.s_state == "unknown"
    assert out.pre_context == "shape"


def test_learner_rejection_is_inert():
    cv = ConditionVector("guessed", "unknown", "color")
    assert step(cv, L, DialogueAct(A.REJECTION)) == cv


def test_focus_and_clarification_set_topic():
    cv = step(initial_conditions(), L, DialogueAct(A.FOCUS, category="shape"))
    assert cv.pre_context == "shape"
    cv = step(cv, T, DialogueAct(A.CLARIFICATION, category="both"))
    assert cv.pre_context == "both"


def test_checking_repetition_offer_change_nothing():
    cv = ConditionVector("known", "guessed", "color")
    for kind in (A.CHECKING, A.REPETITION, A.OFFER_HELP):
        assert step(cv, T, DialogueAct(kind)) == cv


def test_topic_persists_when_turn_touches_no_category():
    cv = ConditionVector("known", "unknown", "shape")
    out = step(cv, L, DialogueAct(A.ACKNOWLEDGMENT))
    assert out.pre_context == "shape"


def test_multi_act_turn_touching_both_categories():
    acts = (
        DialogueAct(A.INFORM, category="color", word="sako"),
        DialogueAct(A.INFORM, category="shape", word="burchak"),
    )
    cv = step(initial_conditions(), T, *acts)
    assert cv == ConditionVector("known", "known", "both")
    assert both_known(cv)


def test_reject_then_reinform_sequence():
    # wrong guess, then tutor corrects in one turn: reject()+inform(color=sako)
    cv = step(initial_conditions(), L, DialogueAct(A.ASKING, category="color", word="zavi"))
    assert cv.c_state == "guessed"
    cv = step(
        cv,
        T,
        DialogueAct(A.REJECTION),
        DialogueAct(A.INFORM, category="color", word="sako"),
    )
    assert cv.c_state == "known"
    assert cv.pre_context == "color"


def test_out_of_lexicon_word_teaches_nothing():
    cv = step(initial_conditions(), T, DialogueAct(A.INFORM, word="xyzzy"))
    assert cv == initial_conditions()


def test_full_teaching_replay(teaching_dialogue, lexicon):
    cv = initial_conditions()
    for t in teaching_dialogue.turns:
        cv = update_conditions(cv, t.speaker, t.acts, teaching_dialogue.object, lexicon)
    assert both_known(cv)
