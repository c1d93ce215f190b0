"""Word-learning agent: tabular SARSA policy over dialogue states.

The agent plays the learner against a trained tutor simulation.  Its state
is what it can see: how confident its own grounding is about the current
object's two attributes (plus an override once the tutor has explicitly
named or confirmed one), the tutor acts it must react to, and the attribute
under discussion.  Actions are the eight learner moves; the reward arrives
at episode end as task reward minus tutor effort and incoherence penalties.

Tutor effort pricing: informing one concept costs c_inf, a bare
acknowledgment or rejection costs c_ack_rej, and a rejection immediately
followed by an inform in the same turn is one correction at c_crt (it is a
single repair of a single concept, not two separate moves).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .acts import DialogueAct, DialogueActType
from .core import AttributeLexicon, Role, Turn, VisualObject
from .grounding import GroundingModel, identification_accuracy
from .simulation import DialogueState, SimModel, respond
from .synthesis import LEARNER_TEMPLATES

# Canonical action order; greedy ties resolve to the earliest entry.  Guesses
# come first: with a zero-initialized table the untrained greedy agent then
# leads with knowledge-testing moves (the initiative-taking behavior the
# baseline was built around) instead of settling into pure question-asking.
ACTIONS = (
    "guess_polar(color)",
    "guess_polar(shape)",
    "ask_wh(color)",
    "ask_wh(shape)",
    "dont_know",
    "acknowledge",
    "listen",
    "request_repetition",
)

#: tutor act types the agent conditions on
_SALIENT_ACTS = ("asking", "inform", "checking", "offer_help")

POSITIVE_THRESHOLD = 0.9
MID_THRESHOLD = 0.5
TURN_CAP = 30
TASK_REWARD = 10.0
INCOHERENCE_PENALTY = 1.0


@dataclass(frozen=True)
class CostSchedule:
    c_inf: float = 5.0
    c_ack_rej: float = 0.5
    c_crt: float = 5.0

    def __post_init__(self):
        if min(self.c_inf, self.c_ack_rej, self.c_crt) < 0:
            raise ValueError("costs must be non-negative")


@dataclass
class CostLedger:
    """Per-episode act counts; the total is their dot product with the schedule."""

    informs: int = 0
    acks_rejections: int = 0
    corrections: int = 0

    def add_turn(self, acts):
        """Classify one tutor turn.  A rejection directly followed by an
        inform is one correction; anything left is priced separately."""
        pending_rejection = False
        for act in acts:
            kind = act.type
            if kind is DialogueActType.REJECTION:
                if pending_rejection:
                    self.acks_rejections += 1
                pending_rejection = True
            elif kind is DialogueActType.INFORM:
                if pending_rejection:
                    self.corrections += 1
                    pending_rejection = False
                else:
                    self.informs += 1
            elif kind is DialogueActType.ACKNOWLEDGMENT:
                self.acks_rejections += 1
            # questions, focus moves etc. cost nothing
        if pending_rejection:
            self.acks_rejections += 1

    def total(self, schedule: "CostSchedule") -> float:
        return (
            self.informs * schedule.c_inf
            + self.acks_rejections * schedule.c_ack_rej
            + self.corrections * schedule.c_crt
        )


def cost_of_acts(acts, schedule: CostSchedule = CostSchedule()) -> float:
    """Tutor effort for one turn's acts."""
    ledger = CostLedger()
    ledger.add_turn(acts)
    return ledger.total(schedule)


@dataclass(frozen=True)
class AgentState:
    c_status: int  # 0 / 1 / 2
    s_status: int
    prev_tutor_acts: frozenset  # subset of _SALIENT_ACTS
    pre_context: str  # none / color / shape / both


def encode_state(
    conf_color: float,
    conf_shape: float,
    informed: dict,
    prev_tutor_acts,
    pre_context: str,
    positive_threshold: float = POSITIVE_THRESHOLD,
) -> AgentState:
    """Confidence bands to statuses; explicit teaching forces status 2."""

    def status(conf, was_informed):
        if was_informed or conf >= positive_threshold:
            return 2
        if MID_THRESHOLD < conf < positive_threshold:
            return 1
        return 0

    return AgentState(
        c_status=status(conf_color, informed.get("color", False)),
        s_status=status(conf_shape, informed.get("shape", False)),
        prev_tutor_acts=frozenset(a for a in prev_tutor_acts if a in _SALIENT_ACTS),
        pre_context=pre_context,
    )


class QTable:
    """Plain tabular action values with a canonical-order argmax."""

    def __init__(self, alpha: float = 0.1, gamma: float = 1.0, epsilon: float = 0.2):
        self.q = {}
        self.alpha = alpha
        self.gamma = gamma
        self.epsilon = epsilon

    def value(self, state, action) -> float:
        return self.q.get((state, action), 0.0)

    def best_action(self, state):
        best = ACTIONS[0]
        best_v = self.value(state, best)
        for action in ACTIONS[1:]:
            v = self.value(state, action)
            if v > best_v:
                best, best_v = action, v
        return best

    def to_json(self) -> dict:
        rows = []
        for (state, action), value in self.q.items():
            rows.append(
                {
                    "c": state.c_status,
                    "s": state.s_status,
                    "acts": sorted(state.prev_tutor_acts),
                    "ctx": state.pre_context,
                    "action": action,
                    "value": value,
                }
            )
        rows.sort(key=lambda r: (r["c"], r["s"], r["acts"], r["ctx"], r["action"]))
        return {
            "alpha": self.alpha,
            "gamma": self.gamma,
            "epsilon": self.epsilon,
            "rows": rows,
        }

    @classmethod
    def from_json(cls, data: dict) -> "QTable":
        table = cls(alpha=data["alpha"], gamma=data["gamma"], epsilon=data["epsilon"])
        for row in data["rows"]:
            state = AgentState(row["c"], row["s"], frozenset(row["acts"]), row["ctx"])
            table.q[(state, row["action"])] = row["value"]
        return table


def select_action(table: QTable, state: AgentState, epsilon: float, rng: random.Random):
    """Epsilon-greedy over the canonical action tuple."""
    if rng.random() < epsilon:
        return ACTIONS[rng.randrange(len(ACTIONS))]
    return table.best_action(state)


def sarsa_update(
    table: QTable,
    state,
    action,
    reward: float,
    next_state=None,
    next_action=None,
) -> QTable:
    """One on-policy backup; terminal transitions pass next_state=None."""
    target = reward
    if next_state is not None and next_action is not None:
        target += table.gamma * table.value(next_state, next_action)
    old = table.value(state, action)
    table.q[(state, action)] = old + table.alpha * (target - old)
    return table


def is_incoherent(action: str, prev_tutor_acts: frozenset) -> bool:
    """Small coherence table; one penalty point per violation.

    Acknowledging a question (or acknowledging nothing), ignoring a direct
    question, claiming ignorance out of the blue and asking for a repeat
    before anything was said all count as incoherent.  Questions and guesses
    are always allowed (learner initiative).
    """
    asked = bool(prev_tutor_acts & {"asking", "checking", "offer_help"})
    if action == "acknowledge":
        return "asking" in prev_tutor_acts or not prev_tutor_acts
    if action == "listen":
        return asked
    if action == "dont_know":
        return not asked
    if action == "request_repetition":
        return not prev_tutor_acts
    return False


def _weaker_category(state: AgentState) -> str:
    return "color" if state.c_status <= state.s_status else "shape"


def rule_based_policy(state: AgentState, rng: random.Random | None = None) -> str:
    """Hand-written baseline, total over the state space.

    Pending tutor question: answer about the attribute under discussion,
    guessing when confidence clears the mid band, admitting ignorance
    otherwise.  Checking and offers get an acknowledgment.  Otherwise chase
    the attribute in the current context (ask at status 0, guess at 1); a
    fully known object is acknowledged.
    """
    if "asking" in state.prev_tutor_acts:
        target = state.pre_context if state.pre_context in ("color", "shape") else _weaker_category(state)
        status = state.c_status if target == "color" else state.s_status
        return ("guess_polar(%s)" % target) if status >= 1 else "dont_know"
    if state.prev_tutor_acts & {"checking", "offer_help"}:
        return "acknowledge"
    if state.c_status == 2 and state.s_status == 2:
        return "acknowledge"
    if state.pre_context == "color" and state.c_status < 2:
        target = "color"
    elif state.pre_context == "shape" and state.s_status < 2:
        target = "shape"
    else:
        target = _weaker_category(state)
        if state.c_status == 2:
            target = "shape"
        elif state.s_status == 2:
            target = "color"
    status = state.c_status if target == "color" else state.s_status
    return ("ask_wh(%s)" % target) if status == 0 else ("guess_polar(%s)" % target)


# ---------------------------------------------------------------------------
# episodes

@dataclass
class EpisodeResult:
    turns: int
    cost: float
    penalties: float
    reward: float
    identified: bool
    ledger: CostLedger = field(default_factory=CostLedger)


def _agent_turn(action: str, grounding: GroundingModel, obj: VisualObject, rng: random.Random):
    """-> (acts, text, guessed (category, word) or None); None for listen."""
    if action == "listen":
        return None
    if action == "acknowledge":
        return (DialogueAct(DialogueActType.ACKNOWLEDGMENT),), rng.choice(LEARNER_TEMPLATES["ack"]), None
    if action == "request_repetition":
        return (
            (DialogueAct(DialogueActType.REPETITION),),
            rng.choice(LEARNER_TEMPLATES["request_repeat"]),
            None,
        )
    if action == "dont_know":
        # functions as an information request about the weaker attribute
        target = "color" if grounding.confidence("color", obj) <= grounding.confidence("shape", obj) else "shape"
        acts = (DialogueAct(DialogueActType.ASKING, category=target),)
        return acts, rng.choice(LEARNER_TEMPLATES["dont_know"]), None
    name, _, rest = action.partition("(")
    category = rest.rstrip(")")
    if name == "ask_wh":
        acts = (DialogueAct(DialogueActType.ASKING, category=category),)
        return acts, rng.choice(LEARNER_TEMPLATES["ask_" + category]), None
    if name == "guess_polar":
        word = grounding.guess_word(category, obj)
        acts = (DialogueAct(DialogueActType.ASKING, category=category, word=word),)
        text = rng.choice(LEARNER_TEMPLATES["guess_" + category]).format(word=word)
        return acts, text, (category, word)
    raise ValueError("unknown action %r" % (action,))


def _absorb_tutor_acts(acts, obj, grounding, informed, pending_guess, lexicon):
    """Update grounding evidence and explicit-teaching flags from a reply."""
    rejected = False
    for act in acts:
        kind = act.type
        if kind is DialogueActType.REJECTION:
            rejected = True
            if pending_guess is not None:
                category, word = pending_guess
                grounding.observe(category, word, obj.label(category), positive=False)
        elif kind is DialogueActType.INFORM and act.word and act.word != "*":
            category = act.category or lexicon.category_of(act.word)
            if category in ("color", "shape"):
                grounding.observe(category, act.word, obj.label(category))
                informed[category] = True
        elif kind is DialogueActType.ACKNOWLEDGMENT and not rejected:
            if pending_guess is not None:
                category, word = pending_guess
                grounding.observe(category, word, obj.label(category))
                informed[category] = True


def _context_of(acts) -> str:
    touched = set()
    for act in acts:
        if act.category in ("color", "shape"):
            touched.add(act.category)
        elif act.category == "both":
            touched.update(("color", "shape"))
    if not touched:
        return ""
    if touched == {"color"}:
        return "color"
    if touched == {"shape"}:
        return "shape"
    return "both"


def run_episode(
    sim: SimModel,
    obj: VisualObject,
    grounding: GroundingModel,
    rng: random.Random,
    table: QTable | None = None,
    policy=None,
    schedule: CostSchedule = CostSchedule(),
    learn: bool = False,
    turn_cap: int = TURN_CAP,
    positive_threshold: float = POSITIVE_THRESHOLD,
) -> EpisodeResult:
    """One teaching dialogue about one object.

    Either a QTable (epsilon-greedy, optionally learning) or a plain policy
    callable drives the learner.  The episode ends when both statuses reach
    2 or at the turn cap; the single terminal reward is
    TASK_REWARD - tutor cost - incoherence penalties.
    """
    if (table is None) == (policy is None):
        raise ValueError("pass exactly one of table/policy")

    lexicon = sim.lexicon
    dialogue_state = DialogueState(object=obj, lexicon=lexicon)
    informed = {"color": False, "shape": False}
    prev_tutor_acts = frozenset()
    pre_context = "none"
    ledger = CostLedger()
    total_penalty = 0.0
    turns = 0
    prev_sa = None  # (state, action) awaiting its SARSA backup

    def current_state():
        return encode_state(
            grounding.confidence("color", obj),
            grounding.confidence("shape", obj),
            informed,
            prev_tutor_acts,
            pre_context,
            positive_threshold,
        )

    state = current_state()
    while not (state.c_status == 2 and state.s_status == 2) and turns < turn_cap:
        if table is not None:
            action = select_action(table, state, table.epsilon if learn else 0.0, rng)
        else:
            action = policy(state, rng)
        if learn and table is not None and prev_sa is not None:
            sarsa_update(table, prev_sa[0], prev_sa[1], 0.0, state, action)
        prev_sa = (state, action)

        if is_incoherent(action, prev_tutor_acts):
            total_penalty += INCOHERENCE_PENALTY

        built = _agent_turn(action, grounding, obj, rng)
        pending_guess = None
        if built is None:
            learner_turn = None
        else:
            acts, text, pending_guess = built
            learner_turn = Turn(
                turn_id=turns, speaker=Role.LEARNER, text=text, start_ms=0, end_ms=0, acts=acts
            )
            own_context = _context_of(acts)
            if own_context:
                pre_context = own_context

        reply = respond(sim, learner_turn, dialogue_state, rng)
        ledger.add_turn(reply.acts)
        _absorb_tutor_acts(reply.acts, obj, grounding, informed, pending_guess, lexicon)
        prev_tutor_acts = frozenset(a.type.value for a in reply.acts if a.type.value in _SALIENT_ACTS)
        reply_context = _context_of(reply.acts)
        if reply_context:
            pre_context = reply_context

        turns += 1
        state = current_state()

    total_cost = ledger.total(schedule)
    reward = TASK_REWARD - total_cost - total_penalty
    if learn and table is not None and prev_sa is not None:
        sarsa_update(table, prev_sa[0], prev_sa[1], reward, None, None)

    return EpisodeResult(
        turns=turns,
        cost=total_cost,
        penalties=total_penalty,
        reward=reward,
        identified=state.c_status == 2 and state.s_status == 2,
        ledger=ledger,
    )


# ---------------------------------------------------------------------------
# training runs and the performance curve

@dataclass(frozen=True)
class CurvePoint:
    instances: int
    cumulative_cost: float
    accuracy: float


@dataclass
class TrainRun:
    table: QTable | None
    grounding: GroundingModel
    curve: list
    total_cost: float


def perf_ratio(curve) -> float:
    """Accuracy gained per unit of tutor effort over a run."""
    if len(curve) < 2:
        raise ValueError("curve needs at least first and last points")
    first, last = curve[0], curve[-1]
    spent = last.cumulative_cost - first.cumulative_cost
    if spent <= 0:
        raise ValueError("no tutor cost spent; ratio undefined")
    return (last.accuracy - first.accuracy) / spent


def heldout_objects(lexicon: AttributeLexicon, seed: int = 2024):
    """Fixed evaluation grid: one object per color/shape cell."""
    from .core import make_object_sequence

    return make_object_sequence(lexicon, 9, seed)


def run_training(
    sim: SimModel,
    episodes: int = 500,
    seed: int = 0,
    policy: str = "sarsa",
    eval_every: int = 10,
    schedule: CostSchedule = CostSchedule(),
    alpha: float = 0.1,
    gamma: float = 1.0,
    epsilon: float = 0.2,
    positive_threshold: float = POSITIVE_THRESHOLD,
) -> TrainRun:
    """Train one agent for ``episodes`` teaching instances.

    ``policy`` is "sarsa" or "rule".  The identification accuracy on the
    fixed held-out grid is re-scored every ``eval_every`` instances and
    recorded against cumulative tutor cost.
    """
    from .core import make_object_sequence

    lexicon = sim.lexicon
    rng = random.Random(seed)
    objects = make_object_sequence(lexicon, episodes, seed=rng.randrange(1 << 30))
    eval_grid = heldout_objects(lexicon)
    grounding = GroundingModel(lexicon)
    table = QTable(alpha=alpha, gamma=gamma, epsilon=epsilon) if policy == "sarsa" else None

    curve = [CurvePoint(0, 0.0, identification_accuracy(grounding, eval_grid, lexicon))]
    total_cost = 0.0
    for i in range(episodes):
        result = run_episode(
            sim,
            objects[i],
            grounding,
            rng,
            table=table,
            policy=rule_based_policy if table is None else None,
            schedule=schedule,
            learn=table is not None,
            positive_threshold=positive_threshold,
        )
        total_cost += result.cost
        if (i + 1) % eval_every == 0 or i + 1 == episodes:
            curve.append(
                CurvePoint(i + 1, total_cost, identification_accuracy(grounding, eval_grid, lexicon))
            )
    return TrainRun(table=table, grounding=grounding, curve=curve, total_cost=total_cost)


def compare_policies(
    sim: SimModel,
    folds: int = 20,
    episodes: int = 500,
    seed: int = 0,
    eval_every: int = 10,
    alpha: float = 0.1,
    gamma: float = 1.0,
    epsilon: float = 0.2,
) -> dict:
    """Fresh learned and rule-based runs per fold, averaged.

    Every fold trains from scratch (new seed, empty grounding and Q table);
    the summary carries per-policy mean final accuracy, mean tutor cost,
    mean performance ratio, and the ratio of mean ratios.
    """
    results = {"sarsa": [], "rule": []}
    curves = {"sarsa": None, "rule": None}
    for fold in range(folds):
        for policy in ("sarsa", "rule"):
            run = run_training(
                sim,
                episodes=episodes,
                seed=seed * 100003 + fold,
                policy=policy,
                eval_every=eval_every,
                alpha=alpha,
                gamma=gamma,
                epsilon=epsilon,
            )
            results[policy].append(run)
            points = [(p.cumulative_cost, p.accuracy) for p in run.curve]
            if curves[policy] is None:
                curves[policy] = [[c, a] for c, a in points]
            else:
                for row, (c, a) in zip(curves[policy], points):
                    row[0] += c
                    row[1] += a

    summary = {"folds": folds, "episodes": episodes, "policies": {}}
    for policy in ("sarsa", "rule"):
        runs = results[policy]
        ratios = [perf_ratio(r.curve) for r in runs]
        instances = [p.instances for p in runs[0].curve]
        summary["policies"][policy] = {
            "mean_final_accuracy": sum(r.curve[-1].accuracy for r in runs) / folds,
            "mean_total_cost": sum(r.total_cost for r in runs) / folds,
            "mean_perf_ratio": sum(ratios) / folds,
            "curve": [
                {
                    "instances": instances[i],
                    "cumulative_cost": row[0] / folds,
                    "accuracy": row[1] / folds,
                }
                for i, row in enumerate(curves[policy])
            ],
        }
    rule_ratio = summary["policies"]["rule"]["mean_perf_ratio"]
    sarsa_ratio = summary["policies"]["sarsa"]["mean_perf_ratio"]
    summary["ratio_vs_rule"] = sarsa_ratio / rule_ratio if rule_ratio else float("inf")
    return summary
