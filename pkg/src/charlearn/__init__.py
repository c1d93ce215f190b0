"""Character-level tutoring chat: relay service, corpus tools, tutor
simulation, and a reinforcement-learning word learner.
"""

from .acts import DialogueAct, DialogueActType, acts_to_string, parse_acts_string
from .core import (
    AttributeLexicon,
    CharEvent,
    ConditionVector,
    DEFAULT_LEXICON,
    Dialogue,
    Role,
    Turn,
    VisualObject,
)
from .corpus import load_corpus, read_event_log, save_corpus, segment_events, write_event_log
from .evaluation import evaluate, kld
from .simulation import load_model, respond, sample, save_model, train
from .synthesis import GeneratorParams, generate_synthetic_corpus

__version__ = "0.1.0"

__all__ = [
    "AttributeLexicon",
    "CharEvent",
    "ConditionVector",
    "DEFAULT_LEXICON",
    "Dialogue",
    "DialogueAct",
    "DialogueActType",
    "GeneratorParams",
    "Role",
    "Turn",
    "VisualObject",
    "acts_to_string",
    "evaluate",
    "generate_synthetic_corpus",
    "kld",
    "load_corpus",
    "load_model",
    "parse_acts_string",
    "read_event_log",
    "respond",
    "sample",
    "save_corpus",
    "save_model",
    "segment_events",
    "train",
    "write_event_log",
]
