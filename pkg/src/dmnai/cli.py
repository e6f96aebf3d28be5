"""Command-line entry point: generate, simulate, compare, accuracy, config."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import replace

from .baselines import ICConfig
from .engine import SimulationConfig, derive_rng, with_overrides
from .experiment import (
    AUX,
    GRAPH_STREAM,
    Experiment,
    ExperimentSpec,
    final_stances_from_file,
    spec_from_output,
    write_outputs,
)
from .graph import GraphFormatError, generate_synthetic
from .metrics import METRICS, UniverseMismatch, load_reference, range_accuracy, stance_accuracy
from .trace import canonical_json

log = logging.getLogger("dmnai")

# CLI flag -> config field (dotted for kernel params)
CONFIG_FLAGS = {
    "rounds": "rounds",
    "tau": "sim_threshold",
    "r1": "r1",
    "r2": "r2",
    "aware_share": "aware_share",
    "init_perseverance": "init_perseverance",
    "vadj_scope": "vadj_scope",
    "direction": "adjacent_direction",
    "lambda_": "kernel.lambda_",
    "mu": "kernel.mu",
    "rate": "kernel.rate",
    "horizon": "kernel.horizon",
    "transfer": "kernel.transfer_interpretation",
}


class CLIError(Exception):
    pass


def _add_experiment_args(p: argparse.ArgumentParser, with_model: bool = True) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--graph", help="edge-list or graph JSON file")
    src.add_argument("--generate", metavar="KIND:N:PARAM",
                     help="synthetic graph, e.g. random:100:0.05 or preferential:1000:3")
    p.add_argument("--topics", type=int, help="number of topics z (default: from graph, else 1)")
    seeds = p.add_mutually_exclusive_group()
    seeds.add_argument("--seeds", help="seed file with 'node topic stance' lines")
    seeds.add_argument("--seed-rule", help="random-K or top-out-degree-K")
    p.add_argument("--seed-stance", default="mixed", help="stance for rule-selected seeds (0, 0.5, 1 or mixed)")
    if with_model:
        p.add_argument("--model", choices=("dmnai", "ic"), default="dmnai")
    p.add_argument("--config", help="JSON file with SimulationConfig fields")
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--master-seed", type=int)
    p.add_argument("--topic", type=int, help="simulate only this topic (default: all)")
    p.add_argument("--out", default="out")
    p.add_argument("--workers", type=int, default=1, help="threads used for replicas")
    p.add_argument("--edge-rates", help="file with 'u v rate' lines overriding the global rate")
    p.add_argument("--ic-probability", type=float, help="IC edge probability")

    g = p.add_argument_group("model parameters (override --config)")
    g.add_argument("--rounds", type=int)
    g.add_argument("--tau", type=float, help="similarity threshold for non-adjacent influence")
    g.add_argument("--r1", type=float)
    g.add_argument("--r2", type=float)
    g.add_argument("--aware-share", type=float)
    g.add_argument("--init-perseverance", type=float)
    g.add_argument("--vadj-scope", choices=("persistent", "per_round"))
    g.add_argument("--direction", choices=("out", "in"))
    g.add_argument("--no-tau-gate", action="store_true")
    g.add_argument("--lambda", dest="lambda_", type=float)
    g.add_argument("--mu", type=float)
    g.add_argument("--rate", type=float)
    g.add_argument("--horizon", type=float)
    g.add_argument("--transfer", choices=("literal", "complement"))


def _parse_generator(text: str) -> dict:
    try:
        kind, n, param = text.split(":")
        value = float(param)
        return {"kind": kind, "n": int(n), "edge_param": int(value) if value.is_integer() and kind == "preferential" else value}
    except ValueError:
        raise CLIError(f"bad --generate value {text!r}; expected KIND:N:PARAM") from None


def _abspath(path: str | None) -> str | None:
    return os.path.abspath(path) if path else None


def spec_from_args(args, model: str | None = None) -> ExperimentSpec:
    config = SimulationConfig()
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            config = SimulationConfig.from_dict(json.load(fh))
    overrides = {field: getattr(args, flag) for flag, field in CONFIG_FLAGS.items() if getattr(args, flag) is not None}
    if args.no_tau_gate:
        overrides["nadj_tau_gate"] = False
    if args.master_seed is not None:
        overrides["master_seed"] = args.master_seed
    config = with_overrides(config, **overrides)
    if not args.graph and not args.generate:
        raise CLIError("one of --graph or --generate is required")
    return ExperimentSpec(
        graph=_abspath(args.graph),
        generator=_parse_generator(args.generate) if args.generate else None,
        topics=args.topics,
        seeds=_abspath(args.seeds),
        seed_rule=args.seed_rule,
        seed_stance=args.seed_stance,
        model=model or args.model,
        config=config,
        ic_probability=args.ic_probability if args.ic_probability is not None else ICConfig().edge_probability,
        topic=args.topic,
        replicas=args.replicas,
        edge_rates=_abspath(args.edge_rates),
    )


def cmd_generate(args) -> int:
    rng = derive_rng(args.master_seed, AUX, GRAPH_STREAM)
    graph = generate_synthetic(args.kind, args.n, args.param, rng, args.topics)
    fmt = args.format or ("json" if args.out.endswith(".json") else "edgelist")
    text = canonical_json(graph.to_json()) if fmt == "json" else graph.to_edge_list()
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(f"wrote {args.out}: n={graph.n} m={graph.m} z={graph.z}")
    return 0


def cmd_simulate(args) -> int:
    spec = spec_from_output(args.rerun) if args.rerun else spec_from_args(args)
    exp = Experiment.resolve(spec)
    outputs = exp.run(workers=args.workers)
    written = write_outputs(exp, outputs, args.out)
    final = [t.affected_total for t in outputs[0].traces if t.round == outputs[0].traces[-1].round]
    print(f"{spec.model}: {len(outputs)} replica(s), {len(written)} file(s) in {args.out}; "
          f"replica 0 final affected per topic: {final}")
    return 0


def _score_series(exp: Experiment, outputs, ref_by_topic, metric) -> list[float]:
    """Mean per-round score over replicas and topics."""
    length = max(len(o.per_round) for o in outputs)
    names = exp.graph.node_ids
    series = []
    for r in range(length):
        scores = []
        for o in outputs:
            snap = o.per_round[min(r, len(o.per_round) - 1)]
            for j, col in snap.items():
                scores.append(metric(dict(zip(names, col)), ref_by_topic[j]))
        series.append(sum(scores) / len(scores))
    return series


def cmd_compare(args) -> int:
    if args.spec_a or args.spec_b:
        if not (args.spec_a and args.spec_b):
            raise CLIError("--spec-a and --spec-b go together")
        specs = []
        for path in (args.spec_a, args.spec_b):
            with open(path, encoding="utf-8") as fh:
                specs.append(ExperimentSpec.from_dict(json.load(fh)))
    else:
        base = spec_from_args(args, model="dmnai")
        specs = [base, replace(base, model="ic")]
    exps = [Experiment.resolve(s) for s in specs]
    a, b = exps
    if a.graph != b.graph:
        raise CLIError("the two experiments use different graphs")
    if sorted(map(repr, a.seeds)) != sorted(map(repr, b.seeds)):
        raise CLIError("the two experiments use different seed sets")
    with open(args.reference, encoding="utf-8") as fh:
        ref = load_reference(fh)
    topics = a.topics if a.spec.model == "dmnai" else b.topics
    names = a.graph.node_ids

    labels, finals, series = [], {}, {}
    for exp in exps:
        label = exp.spec.model if exp.spec.model not in labels else exp.spec.model + "_b"
        labels.append(label)
        outputs = exp.run(workers=args.workers)
        used = sorted({j for o in outputs for j in o.final})
        ref_by_topic = {j: ref.for_topic(j, names) for j in used}
        finals[label] = {
            name: sum(fn(o.final[j], ref_by_topic[j]) for o in outputs for j in o.final)
            / sum(len(o.final) for o in outputs)
            for name, fn in (("range_accuracy", range_accuracy), ("stance_accuracy", stance_accuracy))
        }
        series[label] = _score_series(exp, outputs, ref_by_topic, range_accuracy)

    print("metric," + ",".join(labels))
    for metric in ("range_accuracy", "stance_accuracy"):
        print(metric + "," + ",".join(f"{finals[l][metric]:.4f}" for l in labels))

    os.makedirs(args.out, exist_ok=True)
    prov = json.dumps({"spec_a": specs[0].to_dict(), "spec_b": specs[1].to_dict(),
                       "reference": os.path.abspath(args.reference), "topics": list(topics)},
                      sort_keys=True, separators=(",", ":"))
    with open(os.path.join(args.out, "compare.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# config={prov}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", *labels])
        for metric in ("range_accuracy", "stance_accuracy"):
            w.writerow([metric, *(f"{finals[l][metric]:.6f}" for l in labels)])
    with open(os.path.join(args.out, "compare_series.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# config={prov}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["round", *(f"range_accuracy_{l}" for l in labels)])
        for r in range(max(len(s) for s in series.values())):
            w.writerow([r, *(f"{series[l][min(r, len(series[l]) - 1)]:.6f}" for l in labels)])
    return 0


def cmd_accuracy(args) -> int:
    nodes, sim = final_stances_from_file(args.trace)
    with open(args.reference, encoding="utf-8") as fh:
        ref = load_reference(fh)
    if args.topic not in sim:
        raise CLIError(f"trace has no topic {args.topic}")
    value = METRICS[args.metric](sim[args.topic], ref.for_topic(args.topic, nodes))
    print(f"{value:.4f}")
    new = not os.path.exists(args.out)
    with open(args.out, "a", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(["metric", "topic", "value"])
        w.writerow([args.metric, args.topic, f"{value:.4f}"])
    return 0


def cmd_config(args) -> int:
    if not args.print_defaults:
        raise CLIError("nothing to do; try --print-defaults")
    doc = {"simulation": SimulationConfig().to_dict(), "ic": ICConfig().to_dict()}
    sys.stdout.write(canonical_json(doc))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dmnai", description="Stance dissemination experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic graph")
    p.add_argument("--kind", choices=("random", "preferential"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--param", type=float, required=True, help="edge probability or out-degree")
    p.add_argument("--topics", type=int, default=1)
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--format", choices=("edgelist", "json"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", help="run replicas and write traces")
    _add_experiment_args(p)
    p.add_argument("--rerun", help="reproduce the run embedded in an output file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="score DM-NAI and IC against a reference")
    _add_experiment_args(p, with_model=False)
    p.add_argument("--spec-a", help="experiment spec JSON (instead of the shared flags)")
    p.add_argument("--spec-b")
    p.add_argument("--reference", required=True, help="CSV with node,topic,stance")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("accuracy", help="score a trace against a reference")
    p.add_argument("--trace", required=True, help="trace JSON or node,topic,stance CSV")
    p.add_argument("--reference", required=True)
    p.add_argument("--metric", choices=sorted(METRICS), default="range")
    p.add_argument("--topic", type=int, default=0)
    p.add_argument("--out", default="accuracy.csv", help="CSV the score row is appended to")
    p.set_defaults(func=cmd_accuracy)

    p = sub.add_parser("config", help="show configuration defaults")
    p.add_argument("--print-defaults", action="store_true")
    p.set_defaults(func=cmd_config)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CLIError, GraphFormatError, UniverseMismatch, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
