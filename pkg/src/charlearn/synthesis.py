"""Synthetic teaching-dialogue generator with known ground truth.

Drives a scripted learner and a scripted tutor whose act choice is a fixed
conditional policy over dialogue-state condition vectors.  Emits three
aligned artifacts per run:

  * gold dialogues (turns with acts, objects, outcomes),
  * a keystroke log with realistic typing cadence, deliberate cross-speaker
    overlaps and inter-turn pauses,
  * the realized overlap record.

Because the tutor policy is known exactly, corpora from here serve as
oracles: segmentation must recover the gold turns, overlap detection must
match the record, and a model trained on the gold corpus must reproduce the
policy's conditionals.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .acts import DialogueAct, DialogueActType, parse_acts_string
from .conditions import both_known, initial_conditions, update_conditions
from .core import (
    AttributeLexicon,
    CharEvent,
    ConditionVector,
    Dialogue,
    Outcome,
    Role,
    Turn,
    default_lexicon,
    make_object_sequence,
)

# Learner-side utterance templates, shared with the RL agent so that agent
# turns land inside the trained simulation's context vocabulary.  {word} is
# the guessed word; every variant of a move keeps the same closing tokens.
LEARNER_TEMPLATES = {
    "ask_color": ("what colour is this ?", "please what colour is this ?"),
    "ask_shape": ("what shape is this ?", "and what shape is this ?"),
    "guess_color": ("is {word} the colour ?", "i think {word} is the colour ?"),
    "guess_shape": ("is {word} the shape ?", "maybe {word} is the shape ?"),
    "ack": ("okay", "ah okay", "yes okay"),
    "dont_know": ("i do not know", "hmm i do not know"),
    "request_repeat": ("can you repeat that ?", "again please ?"),
    "final_ack": ("okay thanks", "great okay"),
}

# Tutor-side templates keyed by the abstract act-sequence string; {color} and
# {shape} bind to the current object's invented words.
TUTOR_TEMPLATES = {
    "inform(color=*)": ("it is {color}", "this one is {color}", "the colour is {color}"),
    "inform(shape=*)": ("it is a {shape}", "this is a {shape}", "the shape is {shape}"),
    "inform(color=*)+inform(shape=*)": (
        "this is a {color} {shape}",
        "it is a {color} {shape}",
    ),
    "ack()": ("yes", "yes well done", "right"),
    "ack()+focus(category=shape)": (
        "yes . and the shape ?",
        "well done . now the shape ?",
    ),
    "ack()+focus(category=color)": (
        "yes . and the colour ?",
        "good . now the colour ?",
    ),
    "ack()+inform(shape=*)": (
        "yes . and this is a {shape}",
        "right . the shape is {shape}",
    ),
    "ack()+inform(color=*)": (
        "yes . and it is {color}",
        "right . the colour is {color}",
    ),
    "reject()+inform(color=*)": ("no it is {color}", "no no it is {color}"),
    "reject()+inform(shape=*)": ("no it is a {shape}", "no this is a {shape}"),
    "ask(category=color)": ("what colour is this ?", "tell me the colour"),
    "ask(category=shape)": ("what is the shape ?", "so what shape is it ?"),
    "check()": ("got it ?", "do you understand ?"),
    "offer()": ("need help ?",),
}

# Conditional policies keyed by ConditionVector.canonical(); "*" is the
# fallback row.  Color is always taught first, which keeps every reachable
# condition well visited (important for the fidelity oracle).
DEFAULT_LEARNER_POLICY = {
    "unknown,unknown,none": {
        "ask_color": 0.55,
        "guess_color_right": 0.2,
        "guess_color_wrong": 0.25,
    },
    "unknown,unknown,color": {
        "ask_color": 0.4,
        "guess_color_right": 0.25,
        "guess_color_wrong": 0.35,
    },
    "known,unknown,color": {"ack": 0.4, "ask_shape": 0.45, "listen": 0.15},
    "known,unknown,shape": {
        "ask_shape": 0.25,
        "guess_shape_right": 0.3,
        "guess_shape_wrong": 0.3,
        "dont_know": 0.15,
    },
    "*": {"ack": 0.5, "ask_color": 0.5},
}

DEFAULT_TUTOR_POLICY = {
    "unknown,unknown,color": {
        "inform(color=*)": 0.55,
        "inform(color=*)+inform(shape=*)": 0.3,
        "check()": 0.15,
    },
    "guessed,unknown,color": {"reject()+inform(color=*)": 0.8, "inform(color=*)": 0.2},
    "known,unknown,color": {
        "ack()+inform(shape=*)": 0.8,
        "ack()+focus(category=shape)": 0.12,
        "ask(category=shape)": 0.08,
    },
    "known,unknown,shape": {
        "inform(shape=*)": 0.8,
        "ask(category=shape)": 0.12,
        "check()": 0.08,
    },
    "known,guessed,shape": {"reject()+inform(shape=*)": 0.8, "inform(shape=*)": 0.2},
    "known,known,shape": {"ack()": 1.0},
    "known,known,color": {"ack()": 1.0},
    "known,known,both": {"ack()": 1.0},
    "*": {"inform(color=*)": 0.5, "inform(shape=*)": 0.5},
}


@dataclass(frozen=True)
class GeneratorParams:
    dialogues: int = 120
    session_size: int = 9
    char_gap: tuple = (60, 240)  # intra-turn inter-character delay, ms
    turn_gap: tuple = (1300, 2600)  # pause between turns, ms
    dialogue_gap: tuple = (3000, 6000)
    overlap_prob: float = 0.12
    filler_prob: float = 0.0
    final_ack_prob: float = 0.6
    turn_cap: int = 40
    learner_policy: dict = field(default_factory=lambda: DEFAULT_LEARNER_POLICY)
    tutor_policy: dict = field(default_factory=lambda: DEFAULT_TUTOR_POLICY)

    def __post_init__(self):
        if self.dialogues < 1:
            raise ValueError("dialogues must be >= 1")
        if self.char_gap[1] >= 1100:
            raise ValueError("intra-turn character gaps must stay below the turn gap rule")
        if self.turn_gap[0] <= 1100:
            raise ValueError("inter-turn gaps must exceed the turn gap rule")
        for policy in (self.learner_policy, self.tutor_policy):
            if "*" not in policy:
                raise ValueError("policy needs a '*' fallback row")
            for cond, dist in policy.items():
                total = sum(dist.values())
                if abs(total - 1.0) > 1e-9:
                    raise ValueError("policy row %r sums to %r, not 1" % (cond, total))

    @classmethod
    def from_json(cls, data: dict) -> "GeneratorParams":
        kwargs = dict(data)
        for key in ("char_gap", "turn_gap", "dialogue_gap"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


@dataclass
class SynthResult:
    dialogues: list
    events: list
    gold_overlaps: dict  # dialogue_id -> set of (turn_id, turn_id)
    turn_total: int


def policy_row(policy: dict, cv: ConditionVector) -> dict:
    return policy.get(cv.canonical(), policy["*"])


def _weighted_choice(rng: random.Random, dist: dict):
    r = rng.random()
    acc = 0.0
    items = sorted(dist.items())
    for item, p in items:
        acc += p
        if r < acc:
            return item
    return items[-1][0]


def _learner_move(move, obj, lexicon, rng, cv):
    """-> (acts, text) for a scripted learner move; None for 'listen'."""
    if move == "listen":
        return None
    if move == "ack":
        return (DialogueAct(DialogueActType.ACKNOWLEDGMENT),), rng.choice(LEARNER_TEMPLATES["ack"])
    if move == "dont_know":
        target = cv.pre_context if cv.pre_context in ("color", "shape") else "color"
        acts = (DialogueAct(DialogueActType.ASKING, category=target),)
        return acts, rng.choice(LEARNER_TEMPLATES["dont_know"])
    if move in ("ask_color", "ask_shape"):
        category = move.split("_")[1]
        acts = (DialogueAct(DialogueActType.ASKING, category=category),)
        return acts, rng.choice(LEARNER_TEMPLATES[move])
    if move.startswith("guess_"):
        _, category, correctness = move.split("_")
        truth = lexicon.word_for(category, obj.label(category))
        if correctness == "right":
            word = truth
        else:
            word = rng.choice([w for w in lexicon.words(category) if w != truth])
        acts = (DialogueAct(DialogueActType.ASKING, category=category, word=word),)
        text = rng.choice(LEARNER_TEMPLATES["guess_" + category]).format(word=word)
        return acts, text
    raise ValueError("unknown learner move %r" % (move,))


def materialize_acts(acts, obj, lexicon: AttributeLexicon):
    """Bind ``*`` placeholder words to the object's true attribute words."""
    out = []
    for act in acts:
        if act.word == "*":
            word = lexicon.word_for(act.category, obj.label(act.category))
            out.append(DialogueAct(act.type, category=act.category, word=word, polarity=act.polarity))
        else:
            out.append(act)
    return tuple(out)


def _tutor_turn(acts_key, obj, lexicon, rng):
    acts = materialize_acts(parse_acts_string(acts_key), obj, lexicon)
    template = rng.choice(TUTOR_TEMPLATES[acts_key])
    text = template.format(
        color=lexicon.word_for("color", obj.color),
        shape=lexicon.word_for("shape", obj.shape),
    )
    return acts, text


def _maybe_filler(text, rng, prob):
    if prob > 0 and rng.random() < prob:
        words = text.split()
        pos = rng.randrange(1, len(words) + 1)
        words.insert(pos, rng.choice(("um", "err", "...")))
        return " ".join(words)
    return text


def _script_dialogue(obj, lexicon, params, rng):
    """One gold dialogue: list of (speaker, acts, text) plus its outcome.

    The learner moves first each round (possibly staying silent), the tutor
    always replies, and the tutor gets the last word so a closing correct
    guess still receives its confirmation.
    """
    cv = initial_conditions()
    script = []

    while len(script) < params.turn_cap:
        move = _weighted_choice(rng, policy_row(params.learner_policy, cv))
        built = _learner_move(move, obj, lexicon, rng, cv)
        if built is not None:
            acts, text = built
            text = _maybe_filler(text, rng, params.filler_prob)
            script.append((Role.LEARNER, acts, text))
            cv = update_conditions(cv, Role.LEARNER, acts, obj, lexicon)

        acts_key = _weighted_choice(rng, policy_row(params.tutor_policy, cv))
        acts, text = _tutor_turn(acts_key, obj, lexicon, rng)
        text = _maybe_filler(text, rng, params.filler_prob)
        script.append((Role.TUTOR, acts, text))
        cv = update_conditions(cv, Role.TUTOR, acts, obj, lexicon)
        if both_known(cv):
            break

    if both_known(cv) and rng.random() < params.final_ack_prob:
        acts = (DialogueAct(DialogueActType.ACKNOWLEDGMENT),)
        script.append((Role.LEARNER, acts, rng.choice(LEARNER_TEMPLATES["final_ack"])))

    outcome = Outcome(cv.c_state == "known", cv.s_state == "known")
    return script, outcome


def _lay_out_turns(script, t_start, last_by_speaker, params, rng):
    """Place scripted turns on the timeline and type out their characters.

    Returns (raw events as (ts, speaker, ch), gold turns, end time).  Turns
    normally start ``turn_gap`` after the previous turn ends; with
    probability ``overlap_prob`` a speaker barges in while the previous turn
    is still being typed.  A barge-in is only scheduled when the speaker's
    own inter-turn gap stays above the segmentation threshold, so gold turns
    remain exactly recoverable.
    """
    raw = []
    gold = []
    prev_start = prev_end = None
    prev_speaker = None
    cursor = t_start

    for turn_id, (speaker, acts, text) in enumerate(script):
        if prev_end is None:
            start = cursor
        else:
            start = prev_end + rng.randint(*params.turn_gap)
            if (
                speaker is not prev_speaker
                and rng.random() < params.overlap_prob
                and prev_end - prev_start >= 400
            ):
                barge = rng.randint(prev_start + (prev_end - prev_start) // 2, prev_end)
                own_last = last_by_speaker.get(speaker)
                if own_last is None or barge - own_last > 1100 + 150:
                    start = barge
        own_last = last_by_speaker.get(speaker)
        if own_last is not None and start - own_last <= 1100:
            start = own_last + 1100 + rng.randint(150, 400)

        t = start
        for i, ch in enumerate(text):
            if i:
                t += rng.randint(*params.char_gap)
            raw.append((t, speaker, ch))
        end = t
        gold.append(
            Turn(turn_id=turn_id, speaker=speaker, text=text, start_ms=start, end_ms=end, acts=acts)
        )
        last_by_speaker[speaker] = end
        if prev_end is None or end > prev_end:
            prev_start, prev_end, prev_speaker = start, end, speaker
        cursor = max(cursor, end)

    return raw, gold, cursor


def _span_overlaps(turns):
    """All cross-speaker pairs of turns whose closed spans intersect."""
    pairs = set()
    for i, a in enumerate(turns):
        for b in turns[i + 1 :]:
            if a.speaker is not b.speaker and b.start_ms <= a.end_ms and a.start_ms <= b.end_ms:
                pairs.add((a.turn_id, b.turn_id))
    return pairs


def generate_synthetic_corpus(
    lexicon: AttributeLexicon | None = None,
    params: GeneratorParams | None = None,
    seed: int = 0,
) -> SynthResult:
    lexicon = (lexicon or default_lexicon()).validate_strict()
    params = params or GeneratorParams()
    rng = random.Random(seed)

    dialogues = []
    all_events = []
    gold_overlaps = {}
    turn_total = 0

    n_sessions = (params.dialogues + params.session_size - 1) // params.session_size
    made = 0
    for s in range(n_sessions):
        session_id = "synth-%03d" % s
        objects = make_object_sequence(lexicon, params.session_size, seed=rng.randrange(1 << 30))
        session_raw = []  # (ts, object_index, speaker, ch)
        clock = 0
        last_by_speaker = {}
        for object_index in range(params.session_size):
            if made >= params.dialogues:
                break
            obj = objects[object_index]
            script, outcome = _script_dialogue(obj, lexicon, params, rng)
            clock += rng.randint(*params.dialogue_gap)
            raw, gold, clock = _lay_out_turns(script, clock, last_by_speaker, params, rng)
            dialogue_id = "%s:%02d" % (session_id, object_index)
            dialogues.append(
                Dialogue(dialogue_id=dialogue_id, object=obj, turns=tuple(gold), outcome=outcome)
            )
            gold_overlaps[dialogue_id] = _span_overlaps(gold)
            turn_total += len(gold)
            session_raw.extend((ts, object_index, speaker, ch) for ts, speaker, ch in raw)
            made += 1

        # a single relay stamps the session: seq follows timestamp order
        session_raw.sort(key=lambda item: item[0])
        for i, (ts, object_index, speaker, ch) in enumerate(session_raw):
            all_events.append(
                CharEvent(
                    seq=i + 1,
                    session_id=session_id,
                    object_index=object_index,
                    sender=speaker,
                    ch=ch,
                    server_ts=ts,
                    client_ts=ts,
                )
            )

    return SynthResult(
        dialogues=dialogues,
        events=all_events,
        gold_overlaps=gold_overlaps,
        turn_total=turn_total,
    )
