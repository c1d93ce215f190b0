"""End-to-end experiment pipeline: synthesize, segment, train, eval, rl.

Every stage writes its artifacts under one output directory and the run
ends with a manifest of file hashes.  All randomness comes from per-stage
seeds derived from the root seed, and no artifact embeds a timestamp, so
re-running a config reproduces the manifest bit for bit.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os

from .agent import perf_ratio, run_training
from .core import DEFAULT_LEXICON, AttributeLexicon
from .corpus import (
    annotate_phenomena,
    compute_stats,
    load_corpus,
    read_event_log,
    save_corpus,
    segment_events,
    write_event_log,
)
from .evaluation import evaluate, report_to_csv
from .simulation import save_model, train
from .synthesis import GeneratorParams, generate_synthetic_corpus

STAGES = ("synth", "segment", "train", "eval", "rl")

DEFAULT_CONFIG = {
    "seed": 7,
    "dialogues": 200,
    "level": "act",
    "order": 3,
    "stages": list(STAGES),
    "rl": {"episodes": 200, "eval_every": 10},
}


def derive_seed(root: int, label: str) -> int:
    digest = hashlib.sha256(("%d:%s" % (root, label)).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def ingest(path: str, fmt: str):
    """Load dialogues from a supported input format.

    ``corpus-json`` carries turn texts plus annotations; ``chat-log`` is a
    raw keystroke JSONL that gets segmented here (no act annotations).
    """
    if fmt == "corpus-json":
        return load_corpus(path)
    if fmt == "chat-log":
        events = read_event_log(path)
        dialogues = [annotate_phenomena(d) for d in segment_events(events)]
        return dialogues, None
    raise ValueError("unknown ingest format %r" % fmt)


def real_corpus_path() -> str | None:
    """Opt-in pointer to a non-synthetic corpus; unset in normal runs."""
    value = os.environ.get("CHARLEARN_REAL_CORPUS", "").strip()
    return value or None


def _merged_config(config: dict | None) -> dict:
    merged = json.loads(json.dumps(DEFAULT_CONFIG))
    for key, value in (config or {}).items():
        if key == "rl" and isinstance(value, dict):
            merged["rl"].update(value)
        else:
            merged[key] = value
    return merged


def run_pipeline(config: dict | None, out_dir: str) -> dict:
    """Run the requested stages; returns the manifest dict."""
    cfg = _merged_config(config)
    os.makedirs(out_dir, exist_ok=True)
    root = int(cfg["seed"])
    stages = [s for s in cfg["stages"] if s in STAGES]
    lexicon = AttributeLexicon.from_json(cfg["lexicon"]) if "lexicon" in cfg else DEFAULT_LEXICON
    artifacts = {}
    summary = {}

    def emit(name: str, writer):
        path = os.path.join(out_dir, name)
        writer(path)
        artifacts[name] = sha256_file(path)
        return path

    gold = None
    events = None
    if "synth" in stages:
        params = GeneratorParams(dialogues=int(cfg["dialogues"]))
        result = generate_synthetic_corpus(lexicon, params, derive_seed(root, "synth"))
        gold, events = result.dialogues, result.events
        emit("events.jsonl", lambda p: write_event_log(p, events))
        emit("gold_corpus.json", lambda p: save_corpus(p, gold, lexicon))
        summary["synth"] = {
            "dialogues": len(gold),
            "turns": result.turn_total,
            "events": len(events),
            "gold_overlaps": len(result.gold_overlaps),
        }

    if "segment" in stages:
        if events is None:
            raise ValueError("segment stage needs the synth stage")
        segmented = [annotate_phenomena(d) for d in segment_events(events)]
        gold_by_id = {d.dialogue_id: d for d in gold}
        matched = total = 0
        for d in segmented:
            ref = gold_by_id.get(d.dialogue_id)
            ref_texts = [t.text for t in ref.turns] if ref else []
            got_texts = [t.text for t in d.turns]
            total += max(len(ref_texts), len(got_texts))
            matched += sum(1 for a, b in zip(ref_texts, got_texts) if a == b)
        stats = compute_stats(segmented)
        report = {
            "dialogues": len(segmented),
            "turns": stats.turn_count,
            "turn_mean": stats.turn_mean_str(),
            "text_match_rate": round(matched / total, 6) if total else 1.0,
        }
        emit(
            "segment_report.json",
            lambda p: _write_json(p, report),
        )
        summary["segment"] = report

    model = None
    if "train" in stages:
        if gold is None:
            gold, _ = _load_gold(out_dir)
        model = train(gold, lexicon, n=int(cfg["order"]), level=cfg["level"])
        emit("sim_model.json", lambda p: save_model(p, model))
        summary["train"] = {"level": model.level, "order": model.n}

    if "eval" in stages:
        if model is None or gold is None:
            raise ValueError("eval stage needs the train stage")
        report = evaluate(model, gold)
        emit("eval_report.csv", lambda p: report_to_csv(report, p))
        summary["eval"] = {
            "keys": report.n_keys,
            "accuracy": round(report.accuracy, 6),
            "mean_kld": round(report.mean_kld, 9),
        }
        emit("eval_summary.json", lambda p: _write_json(p, summary["eval"]))

    if "rl" in stages:
        if model is None:
            raise ValueError("rl stage needs the train stage")
        rl_cfg = cfg["rl"]
        episodes = int(rl_cfg["episodes"])
        eval_every = int(rl_cfg.get("eval_every", 10))
        runs = {}
        for policy in ("sarsa", "rule"):
            runs[policy] = run_training(
                model,
                episodes=episodes,
                seed=derive_seed(root, "rl:" + policy),
                policy=policy,
                eval_every=eval_every,
            )
        emit("rl_curve.csv", lambda p: _write_curves(p, runs))
        rl_summary = {
            policy: {
                "final_accuracy": round(run.curve[-1].accuracy, 6),
                "total_cost": round(run.total_cost, 3),
                "perf_ratio": round(perf_ratio(run.curve), 9),
            }
            for policy, run in runs.items()
        }
        emit("rl_summary.json", lambda p: _write_json(p, rl_summary))
        summary["rl"] = rl_summary

    manifest = {
        "config": cfg,
        "stages": stages,
        "summary": summary,
        "files": artifacts,
    }
    _write_json(os.path.join(out_dir, "manifest.json"), manifest)
    return manifest


def _write_json(path: str, data):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _load_gold(out_dir: str):
    path = os.path.join(out_dir, "gold_corpus.json")
    if not os.path.exists(path):
        raise ValueError("train stage needs gold_corpus.json (run synth first)")
    return load_corpus(path)


def _write_curves(path: str, runs: dict):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["policy", "instances", "cumulative_cost", "accuracy"])
        for policy in sorted(runs):
            for point in runs[policy].curve:
                writer.writerow(
                    [policy, point.instances, "%.3f" % point.cumulative_cost, "%.6f" % point.accuracy]
                )
