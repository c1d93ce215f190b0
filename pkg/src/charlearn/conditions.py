"""Dialogue-knowledge tracking shared by the generator, trainer and runtime.

The same update table must be applied everywhere conditions are derived --
training replays it over annotated corpora, the synthetic generator uses it
to drive its policies, and the runtime tutor uses it between turns.  Keeping
one implementation is what makes trained conditionals line up with the
distributions that produced the data.

Update table (acts applied in turn order; X is the act's category, resolved
through the lexicon when only a word is given; correctness is judged against
the dialogue's ground-truth object):

    act                       speaker    effect
    -------------------------------------------------------------------
    asking(category=X)        any        topic X            (wh-question)
    asking(word=w)            learner    guess: X -> known if w is the
                                         object's word, else guessed
    asking(word=w)            tutor      topic X only
    inform(w)                 tutor      X -> known         (teaching)
    inform(w)                 learner    guess, as above
    acknowledgment(cat=X)     tutor      X -> known         (confirmation)
    acknowledgment()          any        no knowledge change
    rejection[(cat=X)]        tutor      X -> unknown (or every guessed
                                         slot when no category is given)
    focus / clarification(X)  any        topic X
    checking/repetition/offer any        no change

The topic slot (pre_context) becomes color, shape or both according to the
categories touched in the turn, and keeps its old value when the turn
touches none.
"""

from __future__ import annotations

from .acts import DialogueAct, DialogueActType
from .core import AttributeLexicon, ConditionVector, Role, VisualObject

_INITIAL = ConditionVector("unknown", "unknown", "none")


def initial_conditions() -> ConditionVector:
    return _INITIAL


def both_known(cv: ConditionVector) -> bool:
    return cv.c_state == "known" and cv.s_state == "known"


def _resolve_category(act: DialogueAct, lexicon: AttributeLexicon):
    if act.category in ("color", "shape"):
        return act.category
    if act.word and act.word != "*":
        return lexicon.category_of(act.word)
    return None


def _guess_outcome(word: str, category: str, obj: VisualObject, lexicon: AttributeLexicon) -> str:
    return "known" if word == lexicon.word_for(category, obj.label(category)) else "guessed"


def update_conditions(
    cv: ConditionVector,
    speaker: Role,
    acts,
    obj: VisualObject,
    lexicon: AttributeLexicon,
) -> ConditionVector:
    """Apply one turn's acts to the condition vector (see module table)."""
    states = {"color": cv.c_state, "shape": cv.s_state}
    touched = set()

    for act in acts:
        category = _resolve_category(act, lexicon)
        kind = act.type

        if kind is DialogueActType.ASKING:
            if act.word and act.word != "*" and speaker is Role.LEARNER and category:
                states[category] = _guess_outcome(act.word, category, obj, lexicon)
            if category:
                touched.add(category)
            elif act.category == "both":
                touched.update(("color", "shape"))

        elif kind is DialogueActType.INFORM:
            if category is None:
                continue  # word outside the lexicon teaches nothing
            if speaker is Role.TUTOR or act.word in (None, "*"):
                states[category] = "known"
            else:
                states[category] = _guess_outcome(act.word, category, obj, lexicon)
            touched.add(category)

        elif kind is DialogueActType.ACKNOWLEDGMENT:
            if speaker is Role.TUTOR and category:
                states[category] = "known"
                touched.add(category)

        elif kind is DialogueActType.REJECTION:
            if speaker is Role.TUTOR:
                targets = [category] if category else [
                    c for c, s in states.items() if s == "guessed"
                ]
                for c in targets:
                    states[c] = "unknown"
                    touched.add(c)

        elif kind in (DialogueActType.FOCUS, DialogueActType.CLARIFICATION):
            if category:
                touched.add(category)
            elif act.category == "both":
                touched.update(("color", "shape"))

        # checking / repetition / offer_help: no state or topic change

    if not touched:
        pre = cv.pre_context
    elif touched == {"color"}:
        pre = "color"
    elif touched == {"shape"}:
        pre = "shape"
    else:
        pre = "both"

    return ConditionVector(states["color"], states["shape"], pre)
