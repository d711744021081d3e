"""Command-line entry points: gen, entropy, simulate, estimate, classify, report, validate.

Every subcommand prints its result as JSON on stdout. Exit status is 0 on
success, 1 on a validation or data failure, 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import entropy as entropy_mod
from . import estimator, generalization, logs, report, simulate, worldgen
from .entropy import ModelKind, Task

MODEL_CHOICES = ("one-hop", "recurrent", "2f", "independent")


def _task_and_kind(model: str) -> tuple[Task, ModelKind | None]:
    if model == "one-hop":
        return Task.ONE_HOP, None
    return Task.TWO_HOP, ModelKind(model)


def _relation_names(count: int) -> tuple[str, ...]:
    names = list(worldgen.DEFAULT_RELATIONS[:count])
    names += [f"relation_{i}" for i in range(len(names), count)]
    return tuple(names)


def _property_specs(count: int) -> tuple[tuple[str, int], ...]:
    props = list(worldgen.DEFAULT_PROPERTIES[:count])
    props += [(f"property_{i}", 1000) for i in range(len(props), count)]
    return tuple(props)


def _manifest_sha256(dataset_dir: Path) -> str:
    return worldgen.sha256_file(Path(dataset_dir) / "manifest.json")


def _check_binding(dataset_dir: Path, losses: Path, force: bool) -> None:
    run_meta_path = Path(losses).with_suffix(".json")
    if not run_meta_path.exists():
        if force:
            return
        raise worldgen.DatasetIOError(
            f"no run manifest at {run_meta_path}; pass --force to skip the dataset binding check"
        )
    with open(run_meta_path, encoding="utf-8") as f:
        run_meta = json.load(f)
    recorded = run_meta.get("dataset_manifest_sha256")
    actual = _manifest_sha256(dataset_dir)
    if recorded != actual and not force:
        raise worldgen.DatasetIOError(
            f"loss log was produced against a different dataset "
            f"(manifest sha256 {recorded} != {actual}); pass --force to override"
        )


def _read_run_meta(losses: Path) -> dict:
    run_meta_path = Path(losses).with_suffix(".json")
    if run_meta_path.exists():
        with open(run_meta_path, encoding="utf-8") as f:
            return json.load(f)
    return {}


def _two_hop_predicate(rec) -> bool:
    return rec.kind in ("two_hop", "two_hop_cot")


def _emit(payload: dict) -> None:
    json.dump(payload, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


# --- subcommand implementations ------------------------------------------


def _cmd_gen(args) -> int:
    config = worldgen.WorldConfig(
        n_profiles=args.profiles,
        first_names=args.name_pools[0],
        middle_names=args.name_pools[1],
        last_names=args.name_pools[2],
        relations=_relation_names(args.relations),
        properties=_property_specs(args.properties),
        seed=args.seed,
    )
    world = worldgen.generate_world(config)
    fractions = {kind: args.holdout_frac for kind in worldgen.HOLDOUT_KINDS}
    split_set = worldgen.build_splits(
        world,
        fractions,
        mix_ratio=args.mix_ratio,
        seed=args.seed,
        cot=(args.cot == "answers"),
    )
    manifest = worldgen.persist_dataset(split_set, world, Path(args.out))
    _emit(manifest)
    return 0


def _cmd_entropy(args) -> int:
    with open(args.config, encoding="utf-8") as f:
        config = worldgen.WorldConfig.from_dict(json.load(f))
    if args.task == "two-hop":
        if not args.model:
            print("error: two-hop entropy requires --model", file=sys.stderr)
            return 2
        task, kind = Task.TWO_HOP, ModelKind(args.model)
    else:
        task, kind = Task.ONE_HOP, None
    rep = entropy_mod.dataset_entropy(config, task, kind)
    payload = rep.to_dict()
    payload["baseline_bits"] = entropy_mod.baseline_content(config, task, kind)
    _emit(payload)
    return 0


def _parse_reliability(spec: str, config, kind: ModelKind, seed: int):
    if spec == "chance":
        return simulate.ReliabilityProfile.homogeneous(config, kind, None)
    if spec.startswith("budget:"):
        return simulate.allocate_budget(kind, float(spec.split(":", 1)[1]), config)
    if spec.startswith("two-point:"):
        p_low, p_high, frac_high = (float(x) for x in spec.split(":", 1)[1].split(","))
        return simulate.ReliabilityProfile.two_point(config, kind, p_low, p_high, frac_high, seed)
    return simulate.ReliabilityProfile.homogeneous(config, kind, float(spec))


def _cmd_simulate(args) -> int:
    split_set, world = worldgen.load_dataset(Path(args.dataset))
    _, kind = _task_and_kind(args.model)
    if kind is None:
        print("error: simulate needs a two-hop model kind", file=sys.stderr)
        return 2
    if args.reliability == "trained":
        profile = simulate.ReliabilityProfile.trained(world, split_set, kind)
    else:
        profile = _parse_reliability(args.reliability, world.config, kind, args.seed)
    records = simulate.generate_loss_log(
        world, profile, split_set, strict_property_fallback=args.strict_fallback
    )
    out = Path(args.out)
    logs.write_loss_log(records, out)
    run_meta = {
        "label": args.label,
        "param_count": args.param_count,
        "model_kind": kind.value,
        "reliability": args.reliability,
        "dataset_manifest_sha256": _manifest_sha256(Path(args.dataset)),
    }
    with open(out.with_suffix(".json"), "w", encoding="utf-8") as f:
        json.dump(run_meta, f, indent=2, sort_keys=True)
        f.write("\n")
    _emit({"records": len(records), "out": str(out)})
    return 0


def _estimate_for(dataset_dir: Path, losses: Path, model: str, variance_correction: str):
    manifest = worldgen.load_manifest(dataset_dir)
    config = worldgen.WorldConfig.from_dict(manifest["config"])
    task, kind = _task_and_kind(model)
    records = logs.read_loss_log(losses)
    if task is Task.ONE_HOP:
        agg = estimator.aggregate_losses(records, kind="one_hop")
    else:
        agg = estimator.aggregate_losses(records, predicate=_two_hop_predicate)
    rep = entropy_mod.dataset_entropy(config, task, kind)
    counts = estimator.FactCounts.from_config(config)
    est = estimator.content_estimate(task, kind, rep, agg, counts, variance_correction)
    return est, config, agg


def _cmd_estimate(args) -> int:
    _check_binding(Path(args.dataset), Path(args.losses), args.force)
    est, config, agg = _estimate_for(
        Path(args.dataset), Path(args.losses), args.model, args.variance_correction
    )
    task, kind = _task_and_kind(args.model)
    payload = est.to_dict()
    payload["baseline_bits"] = entropy_mod.baseline_content(config, task, kind)
    payload["mean_loss_bits"] = agg.mean_loss_bits
    payload["question_count"] = agg.count
    _emit(payload)
    return 0


def _cmd_classify(args) -> int:
    _check_binding(Path(args.dataset), Path(args.losses), args.force)
    split_set, world = worldgen.load_dataset(Path(args.dataset))
    records = logs.read_loss_log(Path(args.losses))
    baselines = generalization.uniform_baselines(split_set, world.config)
    aggregates = {}
    for kind in worldgen.HOLDOUT_KINDS:
        if kind not in baselines:
            continue
        aggregates[kind] = estimator.aggregate_losses(
            records, split=kind, predicate=_two_hop_predicate
        )
    signature = generalization.evaluate_holdouts(aggregates, baselines, args.threshold)
    generalization.classify_algorithm(signature)
    _emit(signature.to_dict())
    return 0


def _cmd_validate(args) -> int:
    diag = logs.validate_loss_log(Path(args.losses), Path(args.dataset))
    _emit(diag.to_dict())
    return 1 if diag.has_violations else 0


def _cmd_report(args) -> int:
    dataset_dir = Path(args.dataset)
    task, kind = _task_and_kind(args.model)
    manifest = worldgen.load_manifest(dataset_dir)
    config = worldgen.WorldConfig.from_dict(manifest["config"])
    baseline = entropy_mod.baseline_content(config, task, kind)
    points = []
    for losses in args.losses:
        _check_binding(dataset_dir, Path(losses), args.force)
        est, _, _ = _estimate_for(dataset_dir, Path(losses), args.model, args.variance_correction)
        run_meta = _read_run_meta(Path(losses))
        params = run_meta.get("param_count") or 0
        if params <= 0:
            print(f"error: {losses}: run manifest lacks a positive param_count", file=sys.stderr)
            return 1
        points.append(
            report.CapacityPoint(
                label=run_meta.get("label") or Path(losses).stem,
                param_count=params,
                model_kind=(kind.value if kind else "one-hop"),
                task=task.value,
                entropy_bits=est.entropy_bits,
                total_loss_bits=est.total_loss_bits,
                content_bits=est.content_bits,
                bits_per_param=estimator.bits_per_parameter(est.content_bits, params),
                baseline_bits=baseline,
            )
        )
    csv_text = report.capacity_table(points)
    Path(args.out_csv).write_text(csv_text, encoding="utf-8")
    outputs = {"csv": str(args.out_csv)}
    if args.out_svg:
        svg = report.scaling_plot(csv_text, capacity_slopes=tuple(args.slope))
        Path(args.out_svg).write_text(svg, encoding="utf-8")
        outputs["svg"] = str(args.out_svg)
    _emit({"points": len(points), "outputs": outputs})
    return 0


# --- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twohop",
        description="Two-hop QA dataset generation, entropy accounting, and "
        "information-content estimation from loss logs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    default_out = os.environ.get("TWOHOP_OUT", ".")

    p = sub.add_parser("gen", help="generate a world and its train/holdout dataset")
    p.add_argument("--profiles", type=int, required=True)
    p.add_argument("--relations", type=int, default=len(worldgen.DEFAULT_RELATIONS))
    p.add_argument("--properties", type=int, default=len(worldgen.DEFAULT_PROPERTIES))
    p.add_argument("--name-pools", type=int, nargs=3, default=list(worldgen.DEFAULT_NAME_POOLS),
                   metavar=("FIRST", "MIDDLE", "LAST"))
    p.add_argument("--mix-ratio", type=int, default=10,
                   help="two-hop questions per one-hop question in the train stream")
    p.add_argument("--holdout-frac", type=float, default=0.01)
    p.add_argument("--cot", choices=("none", "answers"), default="none")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=default_out)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("entropy", help="closed-form dataset entropy for a config")
    p.add_argument("--config", required=True)
    p.add_argument("--task", choices=("one-hop", "two-hop"), required=True)
    p.add_argument("--model", choices=("recurrent", "2f", "independent"))
    p.set_defaults(func=_cmd_entropy)

    p = sub.add_parser("simulate", help="produce a loss log from an exact model simulator")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model", choices=("recurrent", "2f", "independent"), required=True)
    p.add_argument("--reliability", default="trained",
                   help="trained | chance | VALUE | budget:BITS | two-point:LO,HI,FRAC")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strict-fallback", action="store_true",
                   help="first-hop misses fall back over the answer pool, not |N|")
    p.add_argument("--label", default="run")
    p.add_argument("--param-count", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="information-content lower bound from a loss log")
    p.add_argument("--dataset", required=True)
    p.add_argument("--losses", required=True)
    p.add_argument("--model", choices=MODEL_CHOICES, required=True)
    p.add_argument("--variance-correction", choices=("2f-only", "both"), default="2f-only")
    p.add_argument("--force", action="store_true", help="skip the dataset binding check")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("classify", help="holdout generalization signature and algorithm")
    p.add_argument("--dataset", required=True)
    p.add_argument("--losses", required=True)
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--force", action="store_true", help="skip the dataset binding check")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("validate", help="check a loss log against its dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--losses", required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("report", help="capacity table (CSV) and scaling plot (SVG)")
    p.add_argument("--dataset", required=True)
    p.add_argument("--losses", nargs="+", required=True)
    p.add_argument("--model", choices=MODEL_CHOICES, required=True)
    p.add_argument("--variance-correction", choices=("2f-only", "both"), default="2f-only")
    p.add_argument("--slope", type=float, action="append", default=None,
                   help="capacity reference slope(s); default 2.0, repeatable "
                   "(e.g. add 1.6 for the observed line)")
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out-svg", default=None)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "slope", None) is None and args.command == "report":
        args.slope = [2.0]
    try:
        return args.func(args)
    except (
        worldgen.ConfigError,
        worldgen.DatasetIOError,
        worldgen.VocabError,
        estimator.EstimatorError,
        generalization.EvaluationError,
        simulate.CoverageError,
        OSError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
