"""Corpus pipeline: keystroke logs -> turns -> annotated, cleaned dialogues.

Covers turn segmentation from timestamped character events, overlap
detection, heuristic phenomenon tagging, rule-driven cleaning and corpus
statistics, plus the on-disk JSON formats.

Segmentation convention: each sender's character stream is segmented
independently -- a turn is a maximal run of one sender's characters with no
inter-character gap above ``gap_ms`` (default 1100).  Characters the other
participant types in between do not break a turn; that is exactly what lets
two turns overlap in time.  A turn never crosses an object boundary.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .acts import acts_to_string, parse_acts_string
from .core import (
    AttributeLexicon,
    CharEvent,
    Dialogue,
    Outcome,
    PhenomenonTag,
    Role,
    Turn,
    VisualObject,
)

DEFAULT_GAP_MS = 1100

FILLER_TOKENS = ("urm", "err", "uhh", "um", "uh", "...")
CORRECTION_MARKERS = ("no", "sorry")  # plus the two-token marker "i mean"
_TERMINAL_PUNCT = ".?!"
_PUNCT_SPLIT = re.compile(r"^(.*?)([.?!,;:]+)$")
_PUNCT_ONLY = re.compile(r"^[.?!,;:]+$")


class SegmentationError(ValueError):
    """Event stream unfit for segmentation (out of order, bad fields)."""


class CleaningError(ValueError):
    """Cleaning rules are inconsistent."""


# ---------------------------------------------------------------------------
# tokenization

def tokenize(text: str):
    """Lowercase, split on whitespace, split trailing punctuation off.

    The trailing punctuation run becomes its own token, which keeps fillers
    like ``...`` visible ("um..." -> ["um", "..."]).
    """
    tokens = []
    for raw in text.lower().split():
        m = _PUNCT_SPLIT.match(raw)
        if m and m.group(1):
            tokens.append(m.group(1))
            tokens.append(m.group(2))
        else:
            tokens.append(raw)
    return tokens


# ---------------------------------------------------------------------------
# event log I/O (JSONL, one keystroke per line)

def event_to_json_line(e: CharEvent) -> str:
    return json.dumps(
        {
            "seq": e.seq,
            "server_ts": e.server_ts,
            "session": e.session_id,
            "object_index": e.object_index,
            "sender": e.sender.value,
            "ch": e.ch,
        },
        ensure_ascii=False,
    )


def event_from_json(data: dict) -> CharEvent:
    return CharEvent(
        seq=data["seq"],
        session_id=data["session"],
        object_index=data["object_index"],
        sender=Role(data["sender"]),
        ch=data["ch"],
        server_ts=data["server_ts"],
        client_ts=data.get("client_ts", data["server_ts"]),
    )


def write_event_log(path, events):
    with open(path, "w", encoding="utf-8") as fh:
        for e in events:
            fh.write(event_to_json_line(e))
            fh.write("\n")


def read_event_log(path):
    events = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(event_from_json(json.loads(line)))
    return events


# ---------------------------------------------------------------------------
# segmentation

def _dialogue_id(session_id: str, object_index: int) -> str:
    return "%s:%02d" % (session_id, object_index)


def segment_events(events, gap_ms: int = DEFAULT_GAP_MS):
    """Group keystrokes into per-object dialogues of single-speaker turns.

    Events must arrive in seq order per session with non-decreasing
    timestamps; anything else raises SegmentationError.
    """
    if gap_ms <= 0:
        raise SegmentationError("gap_ms must be positive")

    last_seen = {}  # session -> (seq, server_ts)
    chunks = {}  # (session, object_index) -> [events]
    order = []
    for e in events:
        prev = last_seen.get(e.session_id)
        if prev is not None:
            if e.seq <= prev[0]:
                raise SegmentationError(
                    "events out of order in session %s (seq %d after %d)"
                    % (e.session_id, e.seq, prev[0])
                )
            if e.server_ts < prev[1]:
                raise SegmentationError(
                    "timestamps regress in session %s at seq %d" % (e.session_id, e.seq)
                )
        last_seen[e.session_id] = (e.seq, e.server_ts)
        key = (e.session_id, e.object_index)
        if key not in chunks:
            chunks[key] = []
            order.append(key)
        chunks[key].append(e)

    dialogues = []
    for key in order:
        session_id, object_index = key
        dialogues.append(
            Dialogue(
                dialogue_id=_dialogue_id(session_id, object_index),
                object=None,
                turns=_segment_chunk(chunks[key], gap_ms),
            )
        )
    return dialogues


def _segment_chunk(chunk, gap_ms):
    open_runs = {}  # sender -> [events]
    finished = []

    def flush(sender):
        run = open_runs.pop(sender, None)
        if run:
            finished.append(run)

    for e in chunk:
        run = open_runs.get(e.sender)
        if run is not None and e.server_ts - run[-1].server_ts > gap_ms:
            flush(e.sender)
            run = None
        if run is None:
            open_runs[e.sender] = [e]
        else:
            run.append(e)
    for sender in list(open_runs):
        flush(sender)

    finished.sort(key=lambda run: (run[0].server_ts, run[0].seq))
    turns = []
    for i, run in enumerate(finished):
        turns.append(
            Turn(
                turn_id=i,
                speaker=run[0].sender,
                text="".join(e.ch for e in run),
                start_ms=run[0].server_ts,
                end_ms=run[-1].server_ts,
                events=tuple(run),
            )
        )
    return tuple(turns)


# ---------------------------------------------------------------------------
# overlaps and phenomena

def detect_overlaps(dialogue: Dialogue):
    """Pairs of turn ids whose closed time spans intersect across speakers.

    Touching end/start counts as overlap; pairs are (lower_id, higher_id).
    """
    pairs = set()
    turns = dialogue.turns
    for i, a in enumerate(turns):
        for b in turns[i + 1 :]:
            if b.start_ms > a.end_ms:
                break  # turns are start-ordered; nothing later can reach back
            if a.speaker is not b.speaker and b.start_ms <= a.end_ms and a.start_ms <= b.end_ms:
                pairs.add((min(a.turn_id, b.turn_id), max(a.turn_id, b.turn_id)))
    return pairs


def _content_tokens(tokens):
    """Tokens with fillers, correction markers and bare punctuation removed."""
    out = []
    i = 0
    while i < len(tokens):
        if tokens[i] == "i" and i + 1 < len(tokens) and tokens[i + 1] == "mean":
            i += 2
            continue
        t = tokens[i]
        if t in FILLER_TOKENS or t in CORRECTION_MARKERS or _PUNCT_ONLY.match(t):
            i += 1
            continue
        out.append(t)
        i += 1
    return out


def _marker_split(tokens):
    """(before, after) content tokens around the first correction marker, or None."""
    for i, t in enumerate(tokens):
        if t in CORRECTION_MARKERS and i > 0:
            return _content_tokens(tokens[:i]), _content_tokens(tokens[i + 1 :])
        if t == "i" and i + 1 < len(tokens) and tokens[i + 1] == "mean" and i > 0:
            return _content_tokens(tokens[:i]), _content_tokens(tokens[i + 2 :])
    return None


def detect_phenomena(turn: Turn, prev_turn: Turn | None = None) -> frozenset:
    """Heuristic turn-local phenomenon tags (assistive, not gold).

    filler: any token from the filler list appears.
    self_repetition: some adjacent token block repeats once fillers,
        correction markers and punctuation are removed.
    self_correction: a correction marker (no / sorry / i mean) occurs after
        some content, and the material after it restarts the material before
        it (shared token, or a token that extends an aborted prefix).
    continuation: the previous turn lacks terminal punctuation and this turn
        starts in lowercase.
    """
    tags = set()
    tokens = tokenize(turn.text)

    if any(t in FILLER_TOKENS for t in tokens):
        tags.add(PhenomenonTag.FILLER)

    content = _content_tokens(tokens)
    n = len(content)
    found = False
    for k in range(1, n // 2 + 1):
        for i in range(0, n - 2 * k + 1):
            if content[i : i + k] == content[i + k : i + 2 * k]:
                found = True
                break
        if found:
            break
    if found:
        tags.add(PhenomenonTag.SELF_REPETITION)

    split = _marker_split(tokens)
    if split is not None:
        pre, post = split
        if pre and post:
            restart = post[0] in pre or any(
                len(p) >= 2 and q != p and q.startswith(p)
                for p in pre[-2:]
                for q in post[:2]
            )
            if restart:
                tags.add(PhenomenonTag.SELF_CORRECTION)

    if prev_turn is not None:
        prev_text = prev_turn.text.rstrip()
        cur = turn.text.lstrip()
        if prev_text and prev_text[-1] not in _TERMINAL_PUNCT and cur and cur[0].isalpha() and cur[0].islower():
            tags.add(PhenomenonTag.CONTINUATION)

    return frozenset(tags)


def annotate_phenomena(dialogue: Dialogue) -> Dialogue:
    """Attach per-turn phenomenon tags, including overlap pairs."""
    overlapping = set()
    for a, b in detect_overlaps(dialogue):
        overlapping.add(a)
        overlapping.add(b)
    new_turns = []
    prev = None
    for turn in dialogue.turns:
        tags = set(detect_phenomena(turn, prev))
        if turn.turn_id in overlapping:
            tags.add(PhenomenonTag.OVERLAP)
        new_turns.append(turn.with_annotations(phenomena=tags))
        prev = turn
    return replace(dialogue, turns=tuple(new_turns))


# ---------------------------------------------------------------------------
# cleaning

DEFAULT_EMOTICONS = (":)", ":(", ":D", ";)", ":P", ":-)", ":-(")


@dataclass(frozen=True)
class CleaningRules:
    """Spelling substitutions, emoticon patterns and excluded turn spans.

    ``substitutions`` maps misspelling -> correction, applied longest match
    first; no correction may contain a misspelling (keeps cleaning
    idempotent).  ``excluded_spans`` is (dialogue_id, first_turn, last_turn)
    inclusive; spans for one dialogue must not overlap.
    """

    substitutions: dict = field(default_factory=dict)
    emoticons: tuple = DEFAULT_EMOTICONS
    emoticon_regexes: tuple = ()
    excluded_spans: tuple = ()

    def __post_init__(self):
        for wrong, right in self.substitutions.items():
            if not wrong:
                raise CleaningError("empty substitution source")
            for other in self.substitutions:
                if other in right:
                    raise CleaningError(
                        "substitution %r -> %r reintroduces %r (not idempotent)"
                        % (wrong, right, other)
                    )
        spans = {}
        for span in self.excluded_spans:
            did, lo, hi = span
            if lo > hi:
                raise CleaningError("bad span %r" % (span,))
            for plo, phi in spans.get(did, ()):
                if lo <= phi and plo <= hi:
                    raise CleaningError("overlapping excluded spans in %s" % did)
            spans.setdefault(did, []).append((lo, hi))

    @classmethod
    def from_json(cls, data: dict) -> "CleaningRules":
        return cls(
            substitutions=dict(data.get("substitutions", {})),
            emoticons=tuple(data.get("emoticons", DEFAULT_EMOTICONS)),
            emoticon_regexes=tuple(data.get("emoticon_regexes", ())),
            excluded_spans=tuple(tuple(s) for s in data.get("excluded_spans", ())),
        )


@dataclass(frozen=True)
class CleanChange:
    dialogue_id: str
    turn_id: int
    kind: str  # substitution | emoticon | excluded | dropped_empty
    before: str
    after: str


def _strip_emoticons(text: str, rules: CleaningRules):
    patterns = [re.compile(r) for r in rules.emoticon_regexes]
    kept = []
    changed = False
    for tok in text.split(" "):
        bare = tok.strip()
        if bare and (bare in rules.emoticons or any(p.fullmatch(bare) for p in patterns)):
            changed = True
            continue
        kept.append(tok)
    out = " ".join(kept)
    if changed:
        out = re.sub(r"\s{2,}", " ", out).strip()
    return out, changed


def _apply_substitutions(text: str, rules: CleaningRules):
    changed = False
    keys = sorted(rules.substitutions, key=len, reverse=True)
    out = []
    i = 0
    while i < len(text):
        for key in keys:
            if text.startswith(key, i):
                out.append(rules.substitutions[key])
                i += len(key)
                changed = True
                break
        else:
            out.append(text[i])
            i += 1
    return "".join(out), changed


def clean_corpus(dialogues, rules: CleaningRules):
    """Apply cleaning rules; returns (cleaned dialogues, change report).

    Timing fields and event provenance are never touched -- only turn text
    changes, and excluded/emptied turns are dropped.
    """
    excluded = {}
    for did, lo, hi in rules.excluded_spans:
        excluded.setdefault(did, []).append((lo, hi))

    report = []
    cleaned = []
    for d in dialogues:
        spans = excluded.get(d.dialogue_id, ())
        turns = []
        for turn in d.turns:
            if any(lo <= turn.turn_id <= hi for lo, hi in spans):
                report.append(CleanChange(d.dialogue_id, turn.turn_id, "excluded", turn.text, ""))
                continue
            text, emo = _strip_emoticons(turn.text, rules)
            text, sub = _apply_substitutions(text, rules)
            if emo:
                report.append(CleanChange(d.dialogue_id, turn.turn_id, "emoticon", turn.text, text))
            if sub:
                report.append(CleanChange(d.dialogue_id, turn.turn_id, "substitution", turn.text, text))
            if not text.strip():
                report.append(CleanChange(d.dialogue_id, turn.turn_id, "dropped_empty", turn.text, ""))
                continue
            if text != turn.text:
                # events no longer spell the text: drop provenance, keep timing
                turns.append(replace(turn, text=text, events=()))
            else:
                turns.append(turn)
        cleaned.append(replace(d, turns=tuple(turns)))
    return cleaned, report


# ---------------------------------------------------------------------------
# statistics

@dataclass(frozen=True)
class CorpusStats:
    dialogue_count: int
    turn_count: int
    turns_per_dialogue: dict
    acts_per_turn: dict  # role -> {act_count: turns}
    act_frequency: dict  # act type name -> count
    phenomenon_frequency: dict  # tag -> count
    overlap_count: int

    @property
    def turn_mean(self) -> Fraction:
        """Mean turns per dialogue as an exact ratio."""
        return Fraction(self.turn_count, self.dialogue_count)

    @property
    def overlaps_per_dialogue(self) -> Fraction:
        return Fraction(self.overlap_count, self.dialogue_count)

    def turn_mean_str(self) -> str:
        return "%.2f" % float(self.turn_mean)

    def multi_act_share(self, role: Role) -> Fraction:
        """Share of a role's annotated turns that carry more than one act."""
        hist = self.acts_per_turn.get(role.value, {})
        total = sum(n for k, n in hist.items() if k > 0)
        multi = sum(n for k, n in hist.items() if k > 1)
        return Fraction(multi, total) if total else Fraction(0)


def compute_stats(dialogues) -> CorpusStats:
    if not dialogues:
        raise ValueError("empty corpus")
    turn_hist = {}
    acts_per_turn = {Role.TUTOR.value: {}, Role.LEARNER.value: {}}
    act_freq = {}
    phen_freq = {}
    overlap_count = 0
    turn_count = 0
    for d in dialogues:
        turn_hist[len(d.turns)] = turn_hist.get(len(d.turns), 0) + 1
        turn_count += len(d.turns)
        overlap_count += len(detect_overlaps(d))
        for turn in d.turns:
            hist = acts_per_turn[turn.speaker.value]
            hist[len(turn.acts)] = hist.get(len(turn.acts), 0) + 1
            for act in turn.acts:
                name = act.type.value
                act_freq[name] = act_freq.get(name, 0) + 1
            for tag in turn.phenomena:
                key = tag.value if isinstance(tag, PhenomenonTag) else str(tag)
                phen_freq[key] = phen_freq.get(key, 0) + 1
    return CorpusStats(
        dialogue_count=len(dialogues),
        turn_count=turn_count,
        turns_per_dialogue=turn_hist,
        acts_per_turn=acts_per_turn,
        act_frequency=act_freq,
        phenomenon_frequency=phen_freq,
        overlap_count=overlap_count,
    )


def stats_rows(stats: CorpusStats):
    """Flat (metric, value) rows for CSV export."""
    rows = [
        ("dialogues", stats.dialogue_count),
        ("turns", stats.turn_count),
        ("turns_per_dialogue_mean", stats.turn_mean_str()),
        ("overlaps", stats.overlap_count),
        ("overlaps_per_dialogue", "%.2f" % float(stats.overlaps_per_dialogue)),
    ]
    for length in sorted(stats.turns_per_dialogue):
        rows.append(("dialogues_with_%d_turns" % length, stats.turns_per_dialogue[length]))
    for role in (Role.TUTOR, Role.LEARNER):
        for k in sorted(stats.acts_per_turn[role.value]):
            rows.append(("%s_turns_with_%d_acts" % (role.value, k), stats.acts_per_turn[role.value][k]))
    for name in sorted(stats.act_frequency):
        rows.append(("act_%s" % name, stats.act_frequency[name]))
    for name in sorted(stats.phenomenon_frequency):
        rows.append(("phenomenon_%s" % name, stats.phenomenon_frequency[name]))
    return rows


# ---------------------------------------------------------------------------
# corpus JSON

def turn_to_json(turn: Turn) -> dict:
    data = {
        "speaker": turn.speaker.value,
        "start_ms": turn.start_ms,
        "end_ms": turn.end_ms,
        "text": turn.text,
        "acts": [],
        "phenomena": sorted(
            t.value if isinstance(t, PhenomenonTag) else str(t) for t in turn.phenomena
        ),
    }
    if turn.acts:
        data["acts"] = acts_to_string(turn.acts).split("+")
    return data


def dialogue_to_json(d: Dialogue) -> dict:
    return {
        "id": d.dialogue_id,
        "object": d.object.to_json() if d.object else None,
        "turns": [turn_to_json(t) for t in d.turns],
        "outcome": {
            "color_identified": d.outcome.color_identified,
            "shape_identified": d.outcome.shape_identified,
        },
    }


def corpus_to_json(dialogues, lexicon: AttributeLexicon | None = None) -> dict:
    data = {"dialogues": [dialogue_to_json(d) for d in dialogues]}
    if lexicon is not None:
        data["lexicon"] = lexicon.to_json()
    return data


def turn_from_json(i: int, data: dict) -> Turn:
    acts = ()
    if data.get("acts"):
        acts = parse_acts_string("+".join(data["acts"]))
    return Turn(
        turn_id=i,
        speaker=Role(data["speaker"]),
        text=data["text"],
        start_ms=data["start_ms"],
        end_ms=data["end_ms"],
        acts=acts,
        phenomena=frozenset(PhenomenonTag(p) for p in data.get("phenomena", ())),
    )


def dialogue_from_json(data: dict) -> Dialogue:
    outcome = data.get("outcome") or {}
    return Dialogue(
        dialogue_id=data["id"],
        object=VisualObject.from_json(data["object"]) if data.get("object") else None,
        turns=tuple(turn_from_json(i, t) for i, t in enumerate(data["turns"])),
        outcome=Outcome(
            bool(outcome.get("color_identified", False)),
            bool(outcome.get("shape_identified", False)),
        ),
    )


def corpus_from_json(data: dict):
    """-> (dialogues, lexicon or None)"""
    dialogues = [dialogue_from_json(d) for d in data["dialogues"]]
    lexicon = AttributeLexicon.from_json(data["lexicon"]) if data.get("lexicon") else None
    return dialogues, lexicon


def save_corpus(path, dialogues, lexicon=None):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(corpus_to_json(dialogues, lexicon), fh, ensure_ascii=False, indent=1, sort_keys=True)
        fh.write("\n")


def load_corpus(path):
    with open(path, encoding="utf-8") as fh:
        return corpus_from_json(json.load(fh))
