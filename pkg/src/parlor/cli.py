"""Command-line surface: serve, trial, bench-ground, bench-whisper, replay,
oracle-depth.

Every command prints a human-readable summary and can write the full
machine-readable JSON report with --out. Reports contain no timestamps, so
identical seeds produce byte-identical files. Exit codes: 0 success,
1 validation/usage failure, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Optional

from . import fixtures
from .errors import ParlorError, ParseError, ValidationError
from .ground import FixtureEmbedder, GroundingConfig, RemoteEmbedder
from .harness import (
    SETUPS,
    depth_distribution_oracle,
    load_probes,
    load_whisper_cases,
    oracle_mean_depth,
    run_grounding_benchmark,
    run_trial_batch,
    run_whisper_benchmark,
)
from .model import load_catalog
from .policy import MockPolicy, RemotePolicy
from .runtime import load_scenario, replay_trace


def _write_report(report: dict[str, Any], out: Optional[str]) -> None:
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_embedder(args) -> FixtureEmbedder | RemoteEmbedder:
    if args.embedder == "remote":
        if not args.embedder_endpoint:
            raise ValidationError("--embedder remote requires --embedder-endpoint")
        return RemoteEmbedder(args.embedder_endpoint)
    return FixtureEmbedder.from_file(args.embeddings)


def _load_policy(args) -> MockPolicy | RemotePolicy:
    if args.policy == "remote":
        if not args.policy_endpoint:
            raise ValidationError("--policy remote requires --policy-endpoint")
        return RemotePolicy(args.policy_endpoint)
    return MockPolicy.from_file(args.rules)


def _add_common_paths(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--catalog", default=str(fixtures.fixture_path(fixtures.CATALOG))
    )
    parser.add_argument(
        "--embeddings", default=str(fixtures.fixture_path(fixtures.EMBEDDINGS))
    )
    parser.add_argument(
        "--rules", default=str(fixtures.fixture_path(fixtures.POLICY_RULES))
    )
    parser.add_argument(
        "--scenario", default=str(fixtures.fixture_path(fixtures.SCENARIO))
    )
    parser.add_argument("--embedder", choices=["fixture", "remote"], default="fixture")
    parser.add_argument("--embedder-endpoint", default=None)
    parser.add_argument("--policy", choices=["mock", "remote"], default="mock")
    parser.add_argument("--policy-endpoint", default=None)


def cmd_trial(args) -> int:
    scenario = load_scenario(args.scenario)
    catalog = load_catalog(args.catalog)
    policy = _load_policy(args)
    embedder = _load_embedder(args)
    conditions = ("on", "off") if args.decay == "both" else (args.decay,)
    report = run_trial_batch(
        scenario,
        catalog,
        policy,
        embedder,
        setup=args.setup,
        n_trials=args.n,
        master_seed=args.seed,
        alpha=args.alpha,
        horizon=args.horizon,
        conditions=conditions,
    )
    print(f"setup={args.setup}  N={args.n}  alpha={args.alpha}  seed={args.seed}")
    print(f"{'condition':<11} {'depth mean (SD)':<17} {'range':<8} "
          f"{'natural':<8} {'cap':<6} {'share':<6}")
    for name, c in report["conditions"].items():
        depth = f"{c['depth_mean']:.1f} ({c['depth_sd']:.1f})"
        rng = f"{c['depth_range'][0]:.0f}-{c['depth_range'][1]:.0f}"
        print(
            f"decay-{name:<5} {depth:<17} {rng:<8} "
            f"{c['natural']}/{args.n:<6} {c['depth_cap']}/{args.n:<4} "
            f"{c['autonomy_share_mean']:.3f}"
        )
    _write_report(report, args.out)
    return 0


def cmd_bench_ground(args) -> int:
    catalog = load_catalog(args.catalog)
    embedder = _load_embedder(args)
    probes = load_probes(args.probes)
    config = GroundingConfig(
        fallback_threshold=args.threshold, max_pglv=args.max_pglv
    )
    report = run_grounding_benchmark(probes, embedder, catalog, config)
    print(f"grounding benchmark  embedder={embedder.model_id}  "
          f"max_pglv={args.max_pglv}  threshold={args.threshold}")
    for pool, stats in report["pools"].items():
        note = ""
        if stats["candidate_pool_size"] != stats["pool_size"]:
            note = (f"  (candidate pool reduced "
                    f"{stats['pool_size']}->{stats['candidate_pool_size']})")
        print(
            f"{pool:<10} n={stats['n']:<4} top-1 {stats['top1_accuracy']:.0%}  "
            f"top-3 {stats['top3_accuracy']:.0%}  "
            f"mean sim {stats['mean_top1_similarity']:.3f}{note}"
        )
        for confusion in stats["confusions"]:
            print(
                f"    miss: {confusion['intent']!r} -> {confusion['got']} "
                f"({confusion['similarity']:.3f}), expected {confusion['expected']}"
            )
    _write_report(report, args.out)
    return 0


def cmd_bench_whisper(args) -> int:
    scenario = load_scenario(args.scenario)
    catalog = load_catalog(args.catalog)
    policy = _load_policy(args)
    embedder = _load_embedder(args)
    cases, pairs = load_whisper_cases(args.cases)
    report = run_whisper_benchmark(
        cases, pairs, scenario, catalog, policy, embedder, master_seed=args.seed
    )
    print(f"whisper benchmark  policy={policy.backend_id}  n={len(cases)}")
    for condition, stats in report["conditions"].items():
        print(
            f"{condition:<10} n={stats['n']:<4} success {stats['success']}  "
            f"partial {stats['partial']}  failure {stats['failure']}  "
            f"aligned {stats['aligned_rate']:.1%}"
        )
    print(f"overall aligned rate: {report['overall_aligned_rate']:.1%}")
    cross = report["cross_whisper"]
    print(f"cross-whisper flips: {cross['flipped']}/{cross['n']}")
    _write_report(report, args.out)
    return 0


def cmd_replay(args) -> int:
    summary = replay_trace(args.trace)
    _write_report(summary, args.out)
    return 0


def cmd_oracle_depth(args) -> int:
    dist = depth_distribution_oracle(args.alpha, args.depth_cap)
    mean = oracle_mean_depth(args.alpha, args.depth_cap)
    print(f"terminal-depth distribution  alpha={args.alpha}  cap={args.depth_cap}")
    for depth, p in sorted(dist.items()):
        print(f"  P(depth={depth}) = {p:.6f}")
    print(f"  mean = {mean:.4f}")
    _write_report(
        {"alpha": args.alpha, "depth_cap": args.depth_cap,
         "distribution": {str(k): v for k, v in sorted(dist.items())}, "mean": mean},
        args.out,
    )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .gateway import RoomRunner, create_app
    from .harness import build_trial_room, TrialConfig

    scenario = load_scenario(args.scenario)
    catalog = load_catalog(args.catalog)
    policy = _load_policy(args)
    embedder = _load_embedder(args)
    room = build_trial_room(
        scenario, catalog, policy, embedder,
        TrialConfig(master_seed=args.seed), seed=args.seed,
    )
    runner = RoomRunner(room, scenario.owners, tick_seconds=args.tick_seconds)
    app = create_app({scenario.room_id: runner})
    print(f"serving room {scenario.room_id!r} on {args.host}:{args.port} "
          f"(tick every {args.tick_seconds}s)")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parlor", description="multi-agent room engine and eval harness"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="start the gateway with a live room")
    _add_common_paths(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8712)
    p.add_argument("--tick-seconds", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("trial", help="run seeded decay trials")
    _add_common_paths(p)
    p.add_argument("--setup", choices=sorted(SETUPS), default="baseline")
    p.add_argument("--decay", choices=["on", "off", "both"], default="both")
    p.add_argument("--alpha", type=float, default=0.2)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon", type=int, default=600)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_trial)

    p = sub.add_parser("bench-ground", help="run the grounding probe benchmark")
    _add_common_paths(p)
    p.add_argument(
        "--probes", default=str(fixtures.fixture_path(fixtures.GROUNDING_PROBES))
    )
    p.add_argument("--max-pglv", type=int, default=3)
    p.add_argument("--threshold", type=float, default=0.3)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench_ground)

    p = sub.add_parser("bench-whisper", help="run the whisper benchmark")
    _add_common_paths(p)
    p.add_argument(
        "--cases", default=str(fixtures.fixture_path(fixtures.WHISPER_CASES))
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench_whisper)

    p = sub.add_parser("replay", help="re-derive final state from a trace file")
    p.add_argument("--trace", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("oracle-depth", help="analytic terminal-depth distribution")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--depth-cap", type=int, default=10)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_oracle_depth)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ParlorError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
