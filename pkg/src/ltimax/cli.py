"""Command-line interface: generate | train | infer | spread | bench."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

from . import bench as bench_mod
from .checkpoint import load_checkpoint
from .errors import ConfigError, LtimaxError
from .graphs import GeneratorConfig, generate, load_edge_list, save_edge_list
from .heuristics import (select_degree_discount, select_greedy_celf,
                         select_high_degree, select_random)
from .inference import InferenceConfig, evaluate_solution, select_seeds
from .trainer import TrainConfig, train


def _add_graph_arguments(parser):
    parser.add_argument("--graph", required=True, help="edge-list file")
    parser.add_argument("--directed", action="store_true",
                        help="treat the edge list as directed arcs")


def _parse_int_list(text):
    try:
        return [int(part) for part in text.split(",") if part != ""]
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}")


def _load_train_config_file(path):
    """Flat key=value file with TrainConfig field names as keys."""
    known = {f.name: f for f in dataclasses.fields(TrainConfig)}
    values = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in known:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _coerce_config_value(known[key], value, path, lineno)
    return values


def _coerce_config_value(field, text, path, lineno):
    typename = field.type
    try:
        if typename == "int":
            return int(text)
        if typename == "float":
            return float(text)
        if typename == "int | None":
            return None if text.lower() == "none" else int(text)
        return text
    except ValueError:
        raise ConfigError(
            f"{path}:{lineno}: bad value {text!r} for {field.name}") from None


def cmd_generate(args):
    config = GeneratorConfig(model=args.model, n=args.n, m=args.m, p=args.p,
                             rng_seed=args.seed)
    graph = generate(config)
    save_edge_list(graph, args.output)
    print(f"wrote {args.output}: N={graph.node_count} arcs={graph.edge_count}")
    return 0


def cmd_train(args):
    values = {}
    if args.config:
        values.update(_load_train_config_file(args.config))
    overrides = {
        "rng_seed": args.seed,
        "max_iterations": args.max_iterations,
        "learning_rate": args.lr,
        "checkpoint_dir": args.out,
        "scale_min": args.scale_min,
        "scale_max": args.scale_max,
        "embedding_dim": args.embedding_dim,
        "layers": args.layers,
        "validate_every": args.validate_every,
        "validation_graphs": args.validation_graphs,
        "warmup_experiences": args.warmup,
        "sync_every": args.sync_every,
        "batch_size": args.batch_size,
        "n_step": args.n_step,
        "gamma": args.gamma,
        "alpha": args.alpha,
    }
    for key, value in overrides.items():
        if value is not None:
            values[key] = value
    config = TrainConfig(**values)
    result = train(config)
    print(f"trained {result.iterations} iterations over {result.episodes} episodes")
    print(f"validation return: initial {result.initial_return:.6f} "
          f"best {result.best_return:.6f} final {result.final_return:.6f}")
    print(f"best checkpoint: {result.best_checkpoint}")
    print(f"log: {result.log_path}")
    return 0


def _run_selection(args, graph):
    method = args.method
    if method == "random":
        return select_random(graph, args.budget, args.seed).nodes, None
    if method == "degree":
        return select_high_degree(graph, args.budget).nodes, None
    if method == "degree-discount":
        return select_degree_discount(graph, args.budget,
                                      propagation=args.dd_p).nodes, None
    if method == "greedy":
        seeds, trace = select_greedy_celf(
            graph, args.budget, args.selection_simulations, args.seed)
        return seeds.nodes, {"estimated_fraction_trace": trace}
    # dreim
    if not args.checkpoint:
        raise ConfigError("--method dreim requires --checkpoint")
    data = load_checkpoint(args.checkpoint)
    batch = args.batch if args.batch is not None else 1
    config = InferenceConfig(budget=args.budget, batch=batch,
                             layers=data.layers, checkpoint=args.checkpoint)
    seeds, snapshots = select_seeds(graph, data.params, config)
    steps = [{
        "step": snap.step,
        "chosen": list(snap.chosen),
        "chosen_q": list(snap.chosen_q),
        "candidate_count": snap.candidate_count,
        "q_max": snap.q_max,
        "q_min": snap.q_min,
    } for snap in snapshots]
    return seeds.nodes, {"steps": steps}


def cmd_infer(args):
    graph = load_edge_list(args.graph, directed=args.directed)
    nodes, extra = _run_selection(args, graph)
    if nodes:
        report = evaluate_solution(graph, nodes, args.simulations, args.seed,
                                   workers=args.threads)
        active_rate = report.active_rate
        std_error = report.std_error
        mean_count = report.mean_active_count
    else:
        active_rate, std_error, mean_count = 0.0, 0.0, 0.0
    original = graph.original_ids
    payload = {
        "method": args.method,
        "budget": args.budget,
        "seeds": [int(original[v]) for v in nodes],
        "seeds_compact": list(nodes),
        "simulations": args.simulations,
        "active_rate_mean": active_rate,
        "active_rate_std_error": std_error,
        "mean_active_count": mean_count,
    }
    if extra:
        payload.update(extra)
    text = json.dumps(payload, indent=2)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
    else:
        print(text)
    return 0


def cmd_spread(args):
    graph = load_edge_list(args.graph, directed=args.directed)
    if args.seeds_file:
        with open(args.seeds_file, "r", encoding="utf-8") as handle:
            raw = ",".join(line.strip() for line in handle
                           if line.strip() and not line.startswith("#"))
        seed_ids = _parse_int_list(raw)
    else:
        seed_ids = _parse_int_list(args.seeds)
    if graph.original_ids is not None:
        mapping = {int(orig): i for i, orig in enumerate(graph.original_ids)}
        try:
            seed_ids = [mapping[s] for s in seed_ids]
        except KeyError as exc:
            raise ConfigError(f"seed id {exc.args[0]} not in graph") from None
    report = evaluate_solution(graph, seed_ids, args.simulations, args.seed,
                               workers=args.threads)
    print(f"active_rate_mean,{report.active_rate:.6f}")
    print(f"active_rate_std_error,{report.std_error:.6f}")
    print(f"mean_active_count,{report.mean_active_count:.3f}")
    print(f"simulations,{args.simulations}")
    return 0


def cmd_bench(args):
    params = None
    layers = 3
    if "dreim" in args.methods:
        if not args.checkpoint:
            raise ConfigError("bench with dreim requires --checkpoint")
        data = load_checkpoint(args.checkpoint)
        params = data.params
        layers = data.layers
    rows, fits = bench_mod.run_bench(
        args.methods, args.scales, args.budgets, args.repetitions,
        gen_m=args.m, gen_p=args.p, simulations=args.simulations,
        selection_simulations=args.selection_simulations,
        rng_seed=args.seed, params=params, layers=layers, batch=args.batch,
        workers=args.threads)
    bench_mod.write_bench_csv(rows, args.output)
    print(f"wrote {args.output} ({len(rows)} rows, schema {bench_mod.BENCH_SCHEMA})")
    for fit in fits:
        print(f"timing fit method={fit.method} budget={fit.budget}: "
              f"{fit.slope_ms_per_arc:.6f} ms/arc + {fit.intercept_ms:.3f} ms "
              f"(R^2={fit.r_squared:.4f})")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ltimax",
        description="Influence maximization under linear threshold diffusion")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic graph edge list")
    p.add_argument("--model", default="powerlaw-cluster",
                   help="plc|ba|ws|er or full names")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--p", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train the Q-network on synthetic graphs")
    p.add_argument("--config", help="key = value file with TrainConfig fields")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--out", help="checkpoint directory")
    p.add_argument("--scale-min", type=int)
    p.add_argument("--scale-max", type=int)
    p.add_argument("--embedding-dim", type=int)
    p.add_argument("--layers", type=int)
    p.add_argument("--validate-every", type=int)
    p.add_argument("--validation-graphs", type=int)
    p.add_argument("--warmup", type=int)
    p.add_argument("--sync-every", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--n-step", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--alpha", type=float)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="select seeds and report their spread")
    _add_graph_arguments(p)
    p.add_argument("--method", required=True,
                   choices=["random", "degree", "degree-discount", "greedy",
                            "dreim"])
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--batch", type=int, help="nodes per adaptive step (dreim)")
    p.add_argument("--checkpoint", help="trained checkpoint (dreim)")
    p.add_argument("--simulations", type=int, default=10_000)
    p.add_argument("--selection-simulations", type=int, default=1000,
                   help="realizations for greedy marginal estimates")
    p.add_argument("--dd-p", type=float, default=None,
                   help="degree-discount propagation probability")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("-o", "--output", help="write the JSON report here")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("spread", help="Monte-Carlo spread of a given seed set")
    _add_graph_arguments(p)
    p.add_argument("--seeds", default="",
                   help="comma-separated node ids (original ids)")
    p.add_argument("--seeds-file", help="file with one node id per line")
    p.add_argument("--simulations", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_spread)

    p = sub.add_parser("bench", help="paired method comparison across scales")
    p.add_argument("--methods", type=lambda s: s.split(","), required=True,
                   help="comma-separated subset of "
                        "random,degree,degree-discount,greedy,dreim")
    p.add_argument("--scales", type=_parse_int_list, required=True)
    p.add_argument("--budgets", type=_parse_int_list, required=True)
    p.add_argument("--repetitions", type=int, default=1)
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--p", type=float, default=0.05)
    p.add_argument("--simulations", type=int, default=10_000)
    p.add_argument("--selection-simulations", type=int, default=1000)
    p.add_argument("--batch", type=int, default=1)
    p.add_argument("--checkpoint")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except LtimaxError as exc:
        parser.exit(2, f"error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
