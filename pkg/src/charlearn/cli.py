"""Command line entry points.

Subcommands mirror the workflow: ``serve`` runs the live relay, ``corpus``
covers segmentation/statistics/cleaning/synthesis, ``sim`` trains and
queries the tutor model, ``rl`` trains and compares learner policies, and
``run`` executes the whole pipeline from a config file.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import random
import sys

from .core import COLOR_LABELS, DEFAULT_LEXICON, Role, SHAPE_LABELS, Turn, VisualObject
from .corpus import (
    CleaningRules,
    annotate_phenomena,
    clean_corpus,
    compute_stats,
    load_corpus,
    read_event_log,
    save_corpus,
    segment_events,
    stats_rows,
    write_event_log,
)
from .pipeline import run_pipeline
from .simulation import (
    DialogueState,
    infer_acts_from_text,
    load_model,
    respond,
    save_model,
    train,
)
from .synthesis import GeneratorParams, generate_synthetic_corpus


def _cmd_serve(args) -> int:
    from .server import serve_forever
    from .service import SessionRegistry

    registry = SessionRegistry.from_config_file(args.session_config)
    if args.resume_log:
        restored = registry.resume_from_log(args.resume_log)
        print("restored %d events" % restored)
    try:
        asyncio.run(serve_forever(registry, args.host, args.port, args.log_dir))
    except KeyboardInterrupt:
        print("stopped")
    return 0


def _cmd_corpus_segment(args) -> int:
    events = read_event_log(args.events)
    dialogues = [annotate_phenomena(d) for d in segment_events(events, gap_ms=args.gap_ms)]
    save_corpus(args.out, dialogues)
    turns = sum(len(d.turns) for d in dialogues)
    print("segmented %d events into %d dialogues, %d turns" % (len(events), len(dialogues), turns))
    return 0


def _cmd_corpus_stats(args) -> int:
    dialogues, _ = load_corpus(args.corpus)
    stats = compute_stats(dialogues)
    for label, value in stats_rows(stats):
        print("%-34s %s" % (label, value))
    return 0


def _cmd_corpus_clean(args) -> int:
    dialogues, lexicon = load_corpus(args.corpus)
    with open(args.rules, "r", encoding="utf-8") as fh:
        rules = CleaningRules.from_json(json.load(fh))
    cleaned, changes = clean_corpus(dialogues, rules)
    save_corpus(args.out, cleaned, lexicon)
    kinds = {}
    for change in changes:
        kinds[change.kind] = kinds.get(change.kind, 0) + 1
    print("cleaned %d dialogues, %d changes" % (len(cleaned), len(changes)))
    for kind in sorted(kinds):
        print("  %-14s %d" % (kind, kinds[kind]))
    return 0


def _cmd_corpus_synth(args) -> int:
    params = GeneratorParams(dialogues=args.dialogues)
    result = generate_synthetic_corpus(DEFAULT_LEXICON, params, args.seed)
    write_event_log(args.events, result.events)
    save_corpus(args.out, result.dialogues, DEFAULT_LEXICON)
    print(
        "synthesized %d dialogues, %d turns, %d events"
        % (len(result.dialogues), result.turn_total, len(result.events))
    )
    return 0


def _cmd_sim_train(args) -> int:
    dialogues, lexicon = load_corpus(args.corpus)
    if lexicon is None:
        lexicon = DEFAULT_LEXICON
    model = train(dialogues, lexicon, n=args.order, level=args.level)
    save_model(args.out, model)
    contexts = sum(len(model.tables[k]) for k in model.tables)
    print("trained %s-level order-%d model (%d contexts) -> %s" % (args.level, args.order, contexts, args.out))
    return 0


def _cmd_sim_eval(args) -> int:
    from .evaluation import evaluate, report_to_csv

    model = load_model(args.model)
    dialogues, _ = load_corpus(args.corpus)
    report = evaluate(model, dialogues)
    print("keys      %d" % report.n_keys)
    print("accuracy  %.4f" % report.accuracy)
    print("mean KLD  %.6f" % report.mean_kld)
    if args.csv:
        report_to_csv(report, args.csv)
        print("per-key rows -> %s" % args.csv)
    return 0


def _cmd_sim_respond(args) -> int:
    model = load_model(args.model)
    obj = VisualObject(args.color, args.shape)
    state = DialogueState(object=obj, lexicon=model.lexicon)
    rng = random.Random(args.seed)
    print("object: %s %s (type a learner line, blank for silence, /quit to stop)" % (obj.color, obj.shape))
    while True:
        try:
            line = input("learner> ")
        except EOFError:
            break
        if line.strip() == "/quit":
            break
        if line.strip():
            acts = infer_acts_from_text(line, model.lexicon)
            turn = Turn(
                turn_id=state.turns_taken, speaker=Role.LEARNER, text=line.strip(),
                start_ms=0, end_ms=0, acts=acts,
            )
        else:
            turn = None
        reply = respond(model, turn, state, rng)
        print("tutor> %s" % reply.text)
        if reply.done:
            print("(both attributes established)")
            break
    return 0


def _cmd_rl_train(args) -> int:
    from .agent import perf_ratio, run_training

    model = load_model(args.model)
    run = run_training(
        model,
        episodes=args.episodes,
        seed=args.seed,
        policy=args.policy,
        alpha=args.alpha,
        gamma=args.gamma,
        epsilon=args.epsilon,
    )
    payload = {
        "policy": args.policy,
        "episodes": args.episodes,
        "final_accuracy": run.curve[-1].accuracy,
        "total_cost": run.total_cost,
        "perf_ratio": perf_ratio(run.curve),
        "curve": [
            {"instances": p.instances, "cumulative_cost": p.cumulative_cost, "accuracy": p.accuracy}
            for p in run.curve
        ],
    }
    if run.table is not None:
        payload["q_table"] = run.table.to_json()
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(
        "%s policy: accuracy %.3f, tutor cost %.1f, ratio %.5f -> %s"
        % (args.policy, payload["final_accuracy"], run.total_cost, payload["perf_ratio"], args.out)
    )
    return 0


def _cmd_rl_eval(args) -> int:
    import csv as _csv

    from .agent import QTable, compare_policies

    model = load_model(args.model)
    alpha, gamma, epsilon = 0.1, 1.0, 0.2
    if args.q:
        with open(args.q, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        table = QTable.from_json(data.get("q_table", data))
        alpha, gamma, epsilon = table.alpha, table.gamma, table.epsilon
    summary = compare_policies(
        model,
        folds=args.folds,
        episodes=args.episodes,
        seed=args.seed,
        alpha=alpha,
        gamma=gamma,
        epsilon=epsilon,
    )
    for policy in ("sarsa", "rule"):
        row = summary["policies"][policy]
        print(
            "%-5s  accuracy %.3f  cost %8.1f  ratio %.5f"
            % (policy, row["mean_final_accuracy"], row["mean_total_cost"], row["mean_perf_ratio"])
        )
    print("learned/rule ratio: %.3f" % summary["ratio_vs_rule"])
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["policy", "instances", "cumulative_cost", "accuracy"])
            for policy in ("sarsa", args.baseline):
                for point in summary["policies"][policy]["curve"]:
                    writer.writerow(
                        [
                            policy,
                            point["instances"],
                            "%.3f" % point["cumulative_cost"],
                            "%.6f" % point["accuracy"],
                        ]
                    )
        print("averaged curves -> %s" % args.csv)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=1, sort_keys=True)
            fh.write("\n")
        print("summary -> %s" % args.out)
    return 0


def _cmd_run(args) -> int:
    config = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            config = json.load(fh)
    manifest = run_pipeline(config, args.out_dir)
    for stage, info in manifest["summary"].items():
        print("%s: %s" % (stage, json.dumps(info, sort_keys=True)))
    print("artifacts -> %s (see manifest.json)" % args.out_dir)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="charlearn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the live chat relay")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--session-config", required=True)
    p.add_argument("--log-dir", default="logs")
    p.add_argument("--resume-log", default=None, help="event JSONL to replay before serving")
    p.set_defaults(func=_cmd_serve)

    corpus = sub.add_parser("corpus", help="corpus tools").add_subparsers(
        dest="subcommand", required=True
    )
    p = corpus.add_parser("segment", help="events JSONL -> dialogue corpus")
    p.add_argument("--events", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--gap-ms", type=int, default=1100)
    p.set_defaults(func=_cmd_corpus_segment)
    p = corpus.add_parser("stats", help="summary statistics table")
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=_cmd_corpus_stats)
    p = corpus.add_parser("clean", help="apply cleaning rules")
    p.add_argument("--corpus", required=True)
    p.add_argument("--rules", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_corpus_clean)
    p = corpus.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--events", required=True, help="output events JSONL")
    p.add_argument("--out", required=True, help="output gold corpus JSON")
    p.add_argument("--dialogues", type=int, default=120)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=_cmd_corpus_synth)

    sim = sub.add_parser("sim", help="tutor simulation").add_subparsers(
        dest="subcommand", required=True
    )
    p = sim.add_parser("train", help="fit the n-gram model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--level", choices=("utterance", "act", "word"), default="act")
    p.add_argument("--order", type=int, default=3)
    p.set_defaults(func=_cmd_sim_train)
    p = sim.add_parser("eval", help="accuracy and divergence against a corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--csv", default=None)
    p.set_defaults(func=_cmd_sim_eval)
    p = sim.add_parser("respond", help="interactive tutor prompt")
    p.add_argument("--model", required=True)
    p.add_argument("--color", choices=COLOR_LABELS, default="red")
    p.add_argument("--shape", choices=SHAPE_LABELS, default="square")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_sim_respond)

    rl = sub.add_parser("rl", help="learner policies").add_subparsers(
        dest="subcommand", required=True
    )
    p = rl.add_parser("train", help="train one policy against the simulation")
    p.add_argument("--model", required=True, help="trained sim model JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--episodes", type=int, default=500)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--policy", choices=("sarsa", "rule"), default="sarsa")
    p.set_defaults(func=_cmd_rl_train)
    p = rl.add_parser("eval", help="multi-fold learned vs rule-based comparison")
    p.add_argument("--model", required=True)
    p.add_argument("--q", default=None, help="rl train output; reuses its hyperparameters")
    p.add_argument("--baseline", choices=("rule",), default="rule")
    p.add_argument("--folds", type=int, default=20)
    p.add_argument("--episodes", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", default=None, help="averaged learning curves")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_rl_eval)

    p = sub.add_parser("run", help="full pipeline from a config file")
    p.add_argument("--config", default=None)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_run)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
