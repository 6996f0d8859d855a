"""Command-line surface: dataset generation, statistics, prediction
evaluation, batch reward export, coefficient fitting, equation search, and a
`serve` subcommand that launches the HTTP service.

All subcommands are seeded and produce byte-identical artifacts for identical
flags. Chat-backend credentials come from the environment, never from flags
(SRKIT_CHAT_BASE_URL, SRKIT_CHAT_MODEL, SRKIT_CHAT_API_KEY).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .dataset import (
    build_dataset,
    corpus_stats,
    evaluate_predictions,
    read_dataset,
    read_predictions,
    report_to_dict,
    write_entries,
)
from .expressions import extract_skeleton, to_string
from .fitting import fit
from .generator import GeneratorConfig, load_generator_config
from .hypotheses import sanitize_candidate
from .parsing import parse
from .rewards import RewardWeights, compute_reward, normalize_by_group
from .search import SearchConfig, search

GENERATE_DEFAULTS = {
    "count": 1000,
    "seed": 0,
    "max_vars": 3,
    "min_depth": 4,
    "max_depth": 12,
    "dom": 10.0,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="srkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a seeded equation dataset (JSONL)")
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-vars", type=int, default=None)
    p.add_argument("--min-depth", type=int, default=None)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--dom", type=float, default=None)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--test-fraction", type=float, default=None)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--config", type=Path, default=None, help="key=value generator config file")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("stats", help="corpus statistics for a dataset file")
    p.add_argument("--data", type=Path, required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("evaluate", help="score a predictions file against a dataset")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--pred", type=Path, required=True)
    p.add_argument("--tau", type=float, default=0.05)
    p.add_argument("--fit-seed", type=int, default=0)
    p.add_argument("--report", type=Path, required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("reward", help="batch reward export for (pred, truth_id) pairs")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--pred", type=Path, required=True, help="JSONL of {pred, truth_id}")
    p.add_argument("--weights", type=str, default="1,2,2,4")
    p.add_argument("--probe-seed", type=int, default=0)
    p.add_argument("--fit-seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_reward)

    p = sub.add_parser("fit", help="fit a skeleton's coefficients on one record's data")
    p.add_argument("--skeleton", type=str, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--id", type=str, required=True)
    p.add_argument("--budget", type=int, default=500)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("search", help="run the hypothesis search loop on one record")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--id", type=str, required=True)
    p.add_argument("--iterations", type=int, default=5)
    p.add_argument("--hypotheses", type=int, default=6)
    p.add_argument("--backend", choices=("chat", "local"), default="local")
    p.add_argument("--prompt-points", type=int, default=40)
    p.add_argument("--verify-points", type=int, default=5)
    p.add_argument("--temperature", type=float, default=0.7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", type=Path, required=True)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", type=str, default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def cmd_generate(args: argparse.Namespace) -> int:
    overrides = {
        key: value
        for key, value in {
            "target_count": args.count,
            "seed": args.seed,
            "max_vars": args.max_vars,
            "min_depth": args.min_depth,
            "max_depth": args.max_depth,
            "dom": args.dom,
        }.items()
        if value is not None
    }
    if args.config is not None:
        cfg = load_generator_config(args.config, **overrides)
    else:
        merged = {
            "target_count": GENERATE_DEFAULTS["count"],
            "seed": GENERATE_DEFAULTS["seed"],
            "max_vars": GENERATE_DEFAULTS["max_vars"],
            "min_depth": GENERATE_DEFAULTS["min_depth"],
            "max_depth": GENERATE_DEFAULTS["max_depth"],
            "dom": GENERATE_DEFAULTS["dom"],
        }
        merged.update(overrides)
        cfg = GeneratorConfig(**merged)
    t0 = time.perf_counter()
    entries = build_dataset(
        cfg,
        k=args.points,
        noise_sigma=args.noise_sigma,
        test_fraction=args.test_fraction,
    )
    write_entries(entries, args.out)
    print(
        f"wrote {len(entries)} records to {args.out} "
        f"({time.perf_counter() - t0:.1f}s, seed={cfg.seed})"
    )
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    entries = read_dataset(args.data)
    print(json.dumps(corpus_stats(entries), indent=2))
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    entries = read_dataset(args.data)
    predictions = read_predictions(args.pred)
    report = evaluate_predictions(entries, predictions, tau=args.tau, fit_seed=args.fit_seed)
    args.report.write_text(json.dumps(report_to_dict(report), indent=2) + "\n")
    s = report.summary
    print(
        f"evaluated {s.count} predictions: s_struct={s.s_struct:.4f} "
        f"r2={s.r2:.4f} acc_tau={s.acc_tau:.4f} ({report.wall_clock:.1f}s)"
    )
    return 0


def cmd_reward(args: argparse.Namespace) -> int:
    weights = [float(w) for w in args.weights.split(",")]
    if len(weights) != 4:
        print("error: --weights needs 4 comma-separated values", file=sys.stderr)
        return 2
    rw = RewardWeights(*weights)
    entries = {e.record.id: e for e in read_dataset(args.data)}
    pairs = []
    with open(args.pred, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            if "pred" not in obj or "truth_id" not in obj:
                print(f"error: {args.pred}:{lineno}: need pred and truth_id", file=sys.stderr)
                return 2
            pairs.append((obj["truth_id"], obj["pred"]))
    unknown = [tid for tid, _ in pairs if tid not in entries]
    if unknown:
        print(f"error: unknown truth ids {sorted(set(unknown))[:5]}", file=sys.stderr)
        return 2
    breakdowns = []
    for tid, pred in pairs:
        entry = entries[tid]
        breakdowns.append(
            compute_reward(
                sanitize_candidate(pred),
                entry.record.skeleton,
                entry.matrix,
                weights=rw,
                probe_seed=args.probe_seed,
                fit_seed=args.fit_seed,
            )
        )
    normalize_by_group(breakdowns, [tid for tid, _ in pairs])
    with open(args.out, "w", encoding="utf-8") as fh:
        for (tid, pred), b in zip(pairs, breakdowns):
            fh.write(
                json.dumps(
                    {
                        "truth_id": tid,
                        "pred": pred,
                        "format": b.format,
                        "similarity": b.similarity,
                        "numerical": b.numerical,
                        "equiv": b.equiv,
                        "total": b.total,
                        "group_advantage": b.group_advantage,
                    }
                )
            )
            fh.write("\n")
    print(f"wrote {len(breakdowns)} reward rows to {args.out}")
    return 0


def _entry_by_id(entries, record_id: str):
    for entry in entries:
        if entry.record.id == record_id:
            return entry
    raise KeyError(f"id {record_id!r} not found in dataset")


def cmd_fit(args: argparse.Namespace) -> int:
    entries = read_dataset(args.data)
    entry = _entry_by_id(entries, args.id)
    skel = extract_skeleton(parse(args.skeleton))
    result = fit(
        skel, entry.matrix, budget=args.budget, restarts=args.restarts, seed=args.seed
    )
    print(
        json.dumps(
            {
                "id": args.id,
                "skeleton": skel.canonical_string,
                "expression": to_string(result.expression),
                "r2": result.r2,
                "converged": result.converged,
                "n_restarts_used": result.n_restarts_used,
            },
            indent=2,
        )
    )
    return 0


def cmd_search(args: argparse.Namespace) -> int:
    entries = read_dataset(args.data)
    entry = _entry_by_id(entries, args.id)
    cfg = SearchConfig(
        iterations=args.iterations,
        hypotheses_per_iter=args.hypotheses,
        prompt_points=args.prompt_points,
        verify_points=args.verify_points,
        generator=args.backend,
        temperature=args.temperature,
    )
    best, trace = search(entry.matrix, cfg, seed=args.seed)
    args.report.write_text(
        json.dumps(
            {
                "id": args.id,
                "best": {"equation": best.equation, "score": best.score, "comments": best.comments},
                "trace": trace,
                "config": {
                    "iterations": cfg.iterations,
                    "hypotheses_per_iter": cfg.hypotheses_per_iter,
                    "backend": cfg.generator,
                    "seed": args.seed,
                },
            },
            indent=2,
        )
        + "\n"
    )
    print(f"best: {best.equation}  (r2={best.score:.6f})")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
