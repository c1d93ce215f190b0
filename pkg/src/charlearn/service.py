"""Session engine for the live character relay.

The engine is transport-free: the network layer feeds it parsed client
messages and a millisecond clock, and gets back a list of (recipients,
message) pairs to deliver.  That keeps every session rule (role ownership,
single-character keys, sequence stamping, object advancement, the session
time limit) testable without sockets.

Timing rule: ``server_ts`` on relayed keys is milliseconds since the session
became active (both roles present), so logs from different sessions share a
common zero and segment cleanly afterwards.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .core import AttributeLexicon, CharEvent, DEFAULT_LEXICON, Role, is_printable_char, make_object_sequence
from .corpus import event_to_json_line, read_event_log

DEFAULT_FADE_MS = 1000
DEFAULT_GAP_MS = 1100
DEFAULT_OBJECT_COUNT = 9
DEFAULT_TIME_LIMIT_MS = 1_800_000  # 30 minutes per session

BOTH_ROLES = (Role.TUTOR, Role.LEARNER)


class ServiceError(Exception):
    """Engine-level rejection; ``code`` goes out as an error message."""

    def __init__(self, code: str, detail: str = ""):
        super().__init__(detail or code)
        self.code = code


@dataclass(frozen=True)
class SessionConfig:
    session_id: str
    seed: int = 0
    fade_ms: int = DEFAULT_FADE_MS
    gap_ms: int = DEFAULT_GAP_MS
    object_count: int = DEFAULT_OBJECT_COUNT
    time_limit_ms: int = DEFAULT_TIME_LIMIT_MS

    def __post_init__(self):
        if not self.session_id:
            raise ValueError("session_id must be non-empty")
        if self.object_count < 1:
            raise ValueError("object_count must be positive")
        if self.fade_ms < 0 or self.gap_ms < 0 or self.time_limit_ms <= 0:
            raise ValueError("timing fields must be positive")


def _monotonic_ms() -> int:
    return time.monotonic_ns() // 1_000_000


class SessionEngine:
    """State machine for one session.

    Lifecycle: waiting (fewer than two roles) -> active -> ended.  Keys are
    accepted only while active; the tutor advances through the object list
    and the session completes after the last object or at the time limit.
    """

    def __init__(self, config: SessionConfig, lexicon: AttributeLexicon = DEFAULT_LEXICON, clock=None):
        self.config = config
        self.lexicon = lexicon
        self.clock = clock or _monotonic_ms
        self.objects = make_object_sequence(lexicon, config.object_count, config.seed)
        self.present = {}  # Role -> True while connected
        self.activated_at = None  # clock value when both roles first present
        self.object_index = 0
        self.events = []
        self.next_seq = 1
        self.end_reason = None

    # -- state helpers

    @property
    def active(self) -> bool:
        return self.activated_at is not None and self.end_reason is None

    def status(self) -> str:
        if self.end_reason is not None:
            return "ended"
        return "active" if self.activated_at is not None else "waiting"

    def server_ts(self) -> int:
        if self.activated_at is None:
            return 0
        return self.clock() - self.activated_at

    def _end(self, reason: str):
        self.end_reason = reason
        return [(BOTH_ROLES, {"type": "end", "reason": reason})]

    def _check_time_limit(self):
        if self.active and self.server_ts() >= self.config.time_limit_ms:
            return self._end("timeout")
        return None

    # -- client messages

    def join(self, role: Role):
        if self.end_reason is not None:
            raise ServiceError("session_not_active", "session already ended")
        if self.present.get(role):
            raise ServiceError("role_taken", "%s already connected" % role.value)
        self.present[role] = True
        ack = {
            "type": "joined",
            "role": role.value,
            "fade_ms": self.config.fade_ms,
            "status": None,  # filled below
            "object": self.objects[self.object_index].to_json(),
        }
        if role is Role.TUTOR:
            # only the tutor sees the word list; the learner must earn it
            ack["dictionary"] = self.lexicon.to_json()
        out = []
        activated = False
        if self.activated_at is None and all(self.present.get(r) for r in BOTH_ROLES):
            self.activated_at = self.clock()
            activated = True
        ack["status"] = self.status()
        out.append(((role,), ack))
        if activated:
            out.append(
                (
                    BOTH_ROLES,
                    {
                        "type": "object",
                        "index": self.object_index,
                        "object": self.objects[self.object_index].to_json(),
                    },
                )
            )
        return out

    def leave(self, role: Role):
        # frees the seat so a dropped participant can reconnect
        self.present.pop(role, None)
        return []

    def relay_key(self, role: Role, ch: str, client_ts: int = 0):
        if not self.present.get(role):
            raise ServiceError("malformed", "join before sending keys")
        ended = self._check_time_limit()
        if ended:
            return ended
        if not self.active:
            raise ServiceError("session_not_active", "session is %s" % self.status())
        if not isinstance(ch, str) or len(ch) > 1:
            raise ServiceError("paste_rejected", "one character per key message")
        if not is_printable_char(ch):
            raise ServiceError("char_rejected", "not a printable character")
        ts = self.server_ts()
        event = CharEvent(
            seq=self.next_seq,
            session_id=self.config.session_id,
            object_index=self.object_index,
            sender=role,
            ch=ch,
            server_ts=ts,
            client_ts=int(client_ts or 0),
        )
        self.next_seq += 1
        self.events.append(event)
        return [
            (
                BOTH_ROLES,
                {
                    "type": "key",
                    "seq": event.seq,
                    "sender": role.value,
                    "ch": ch,
                    "server_ts": ts,
                },
            )
        ]

    def advance(self, role: Role):
        if not self.present.get(role):
            raise ServiceError("malformed", "join before advancing")
        ended = self._check_time_limit()
        if ended:
            return ended
        if not self.active:
            raise ServiceError("session_not_active", "session is %s" % self.status())
        if role is not Role.TUTOR:
            raise ServiceError("advance_denied", "only the tutor advances objects")
        if self.object_index + 1 >= len(self.objects):
            return self._end("completed")
        self.object_index += 1
        return [
            (
                BOTH_ROLES,
                {
                    "type": "object",
                    "index": self.object_index,
                    "object": self.objects[self.object_index].to_json(),
                },
            )
        ]

    # -- persistence

    def export_log_lines(self):
        return [event_to_json_line(e) for e in self.events]

    def resume_from(self, events):
        """Restore relay state from a previous run's event log."""
        if self.activated_at is not None:
            raise ServiceError("session_not_active", "cannot resume an active session")
        restored = [e for e in events if e.session_id == self.config.session_id]
        for e in restored:
            if e.seq != self.next_seq:
                raise ServiceError("malformed", "log gap at seq %d" % e.seq)
            self.next_seq += 1
        self.events.extend(restored)
        if restored:
            self.object_index = restored[-1].object_index
        return len(restored)


class SessionRegistry:
    """All configured sessions plus the shared append-only key log."""

    def __init__(self, configs, lexicon: AttributeLexicon = DEFAULT_LEXICON, clock=None):
        self.engines = {}
        for cfg in configs:
            if cfg.session_id in self.engines:
                raise ValueError("duplicate session id %r" % cfg.session_id)
            self.engines[cfg.session_id] = SessionEngine(cfg, lexicon, clock)

    def get(self, session_id: str) -> SessionEngine:
        engine = self.engines.get(session_id)
        if engine is None:
            raise ServiceError("unknown_session", "no session %r" % session_id)
        return engine

    @classmethod
    def from_config_file(cls, path, clock=None) -> "SessionRegistry":
        import json

        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        lexicon = AttributeLexicon.from_json(data["lexicon"]) if "lexicon" in data else DEFAULT_LEXICON
        defaults = {
            "fade_ms": data.get("fade_ms", DEFAULT_FADE_MS),
            "gap_ms": data.get("gap_ms", DEFAULT_GAP_MS),
            "object_count": data.get("object_count", DEFAULT_OBJECT_COUNT),
            "time_limit_ms": data.get("time_limit_ms", DEFAULT_TIME_LIMIT_MS),
        }
        configs = []
        for row in data["sessions"]:
            merged = dict(defaults)
            merged.update({k: v for k, v in row.items() if k not in ("id",)})
            configs.append(SessionConfig(session_id=row["id"], **merged))
        return cls(configs, lexicon, clock)

    def resume_from_log(self, path) -> int:
        events = read_event_log(path)
        count = 0
        for engine in self.engines.values():
            count += engine.resume_from(events)
        return count
