"""Command-line surface: local learning, identification, benchmarks.

Exit codes: 0 success, 2 usage, 3 parse error, 4 validation or numerical
error, 5 inconsistent knowledge, 6 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .bench import ExperimentConfig, confusion_from_rows, mean_by_cell, run_suite, write_csv
from .bench import estimate_mpdag_from_data
from .ci import CICache, GaussianCI, OracleCI, as_session, load_csv_dataset
from .errors import (
    GraphError,
    InconsistencyError,
    NumericalError,
    ParseError,
    ResourceCapError,
)
from .graph import Dag, load_graph_json
from .identify import (
    classify_relations,
    classify_with_oracle_graph,
    knowledge_restricted_mpdag,
    non_descendant_predictors,
)
from .learn import BackgroundKnowledge, learn_local
from .metrics import kappa

EXIT_OK = 0
EXIT_PARSE = 3
EXIT_VALIDATION = 4
EXIT_INCONSISTENT = 5
EXIT_RESOURCE = 6


def _load_knowledge(path: str | None, resolve) -> BackgroundKnowledge:
    if path is None:
        return BackgroundKnowledge()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read knowledge file {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise ParseError("knowledge payload must be a JSON object")

    def pairs(key):
        out = []
        for item in payload.get(key, []):
            if not isinstance(item, (list, tuple)) or len(item) != 2:
                raise ParseError(f"{key} entries must be two-element pairs")
            out.append((resolve(item[0]), resolve(item[1])))
        return out

    fmt = payload.get("format", "knowledge-v1")
    if fmt != "knowledge-v1":
        raise ParseError(f"unsupported knowledge format {fmt!r}")
    return BackgroundKnowledge(
        direct=pairs("direct"),
        non_ancestral=pairs("non_ancestral"),
        ancestral=pairs("ancestral"),
    )


class _Inputs:
    """Resolved tester, labels, and optional true graph for a command."""

    def __init__(self, args):
        self.oracle = bool(getattr(args, "oracle", False))
        self.dag = None
        self.labels = None
        if getattr(args, "dag", None):
            g = load_graph_json(args.dag)
            self.dag = Dag(g.n, g.directed_edges(), labels=g.labels)
            self.labels = self.dag.labels
        data_path = getattr(args, "data", None)
        if self.oracle or (self.dag is not None and data_path is None):
            if self.dag is None:
                raise ParseError("--oracle requires --dag")
            self.tester = OracleCI(self.dag)
            self.oracle = True
        elif data_path:
            names, data = load_csv_dataset(data_path)
            self.labels = names
            self.tester = GaussianCI.from_data(data, alpha=args.alpha)
        else:
            raise ParseError("provide --dag (oracle) or --data (samples)")
        self.n = self.tester.n_vars

    def resolve(self, name) -> int:
        if isinstance(name, int):
            v = name
        elif isinstance(name, str) and self.labels and name in self.labels:
            return self.labels.index(name)
        else:
            try:
                v = int(name)
            except (TypeError, ValueError):
                raise ParseError(f"unknown variable {name!r}") from None
        if not (0 <= v < self.n):
            raise ParseError(f"variable index {v} out of range")
        return v

    def label(self, v: int) -> str:
        return self.labels[v] if self.labels else str(v)


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_learn_local(args) -> int:
    inputs = _Inputs(args)
    knowledge = _load_knowledge(args.knowledge, inputs.resolve)
    target = inputs.resolve(args.target)
    cache = CICache()
    start = time.perf_counter()
    ls = learn_local(
        target, inputs.tester, knowledge, cache=cache,
        strict=inputs.oracle,
    )
    elapsed = time.perf_counter() - start
    payload = ls.to_json()
    payload["labels"] = inputs.labels
    payload["backend"] = "oracle" if inputs.oracle else "gaussian"
    if not inputs.oracle:
        payload["alpha"] = args.alpha
        payload["sample_size"] = inputs.tester.sample_size
    payload["wall_time"] = round(elapsed, 6)
    _emit(payload, args.out)
    print(f"ci tests: {ls.ci_count}  wall time: {elapsed:.3f}s",
          file=sys.stderr)
    return EXIT_OK


def _relation_payload(relations, inputs):
    return {
        inputs.label(y): {
            "kind": rel.kind.value,
            "flavor": rel.flavor.value if rel.flavor else None,
        }
        for y, rel in sorted(relations.items())
    }


def cmd_identify(args) -> int:
    inputs = _Inputs(args)
    knowledge = _load_knowledge(args.knowledge, inputs.resolve)
    target = inputs.resolve(args.target)
    cache = CICache()
    start = time.perf_counter()
    if args.method in ("labiter", "local-itc"):
        used = knowledge if args.method == "labiter" else BackgroundKnowledge()
        session = as_session(inputs.tester, cache)
        ls = learn_local(target, session, used, strict=inputs.oracle)
        relations = classify_relations(ls, session)
    else:
        if inputs.oracle:
            graph, _ = knowledge_restricted_mpdag(inputs.dag, knowledge)
        else:
            graph = estimate_mpdag_from_data(
                inputs.tester, knowledge.direct, cache
            )
        method = "zuo" if args.method == "zuo" else "brute-force"
        relations = classify_with_oracle_graph(
            graph, target, method, cap=args.mec_cap
        )
    elapsed = time.perf_counter() - start
    payload = {
        "target": inputs.label(target),
        "method": args.method,
        "relations": _relation_payload(relations, inputs),
        "ci_tests": cache.count,
        "wall_time": round(elapsed, 6),
    }
    if args.compare == "brute-force":
        if inputs.dag is None:
            raise ParseError("--compare brute-force requires --dag")
        graph, _ = knowledge_restricted_mpdag(inputs.dag, knowledge)
        reference = classify_with_oracle_graph(
            graph, target, "brute-force", cap=args.mec_cap
        )
        payload["reference"] = _relation_payload(reference, inputs)
        payload["agreement"] = all(
            relations[y].kind == reference[y].kind for y in reference
        )
    _emit(payload, args.out)
    print(f"ci tests: {cache.count}  wall time: {elapsed:.3f}s",
          file=sys.stderr)
    return EXIT_OK


def cmd_select_predictors(args) -> int:
    inputs = _Inputs(args)
    knowledge = _load_knowledge(args.knowledge, inputs.resolve)
    target = inputs.resolve(args.target)
    cache = CICache()
    session = as_session(inputs.tester, cache)
    ls = learn_local(target, session, knowledge, strict=inputs.oracle)
    relations = classify_relations(ls, session)
    chosen = non_descendant_predictors(relations, relaxed=args.relaxed)
    payload = {
        "target": inputs.label(target),
        "relaxed": bool(args.relaxed),
        "predictors": [inputs.label(v) for v in chosen],
        "ci_tests": cache.count,
    }
    _emit(payload, args.out)
    return EXIT_OK


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x)


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x)


def cmd_bench(args) -> int:
    cfg = ExperimentConfig(
        suite=args.suite,
        sizes=_int_list(args.sizes),
        degrees=_float_list(args.degrees),
        sample_sizes=_int_list(args.sample_sizes),
        fractions=_float_list(args.fractions),
        repetitions=args.reps,
        backend="oracle" if args.suite == "chain-ci" else "gaussian",
        alpha=args.alpha,
        seed=args.seed,
        mec_cap=args.mec_cap,
        timing=args.timing,
    )
    rows = run_suite(cfg, n_jobs=args.jobs)
    write_csv(args.out, rows, timing=args.timing)
    print(f"wrote {len(rows)} rows to {args.out} "
          f"(config {cfg.config_hash})", file=sys.stderr)
    if cfg.suite == "chain-ci":
        for cell, value in mean_by_cell(rows, ("n", "fraction"), "ratio").items():
            print(f"n={cell[0]} fraction={cell[1]}: mean ci ratio "
                  f"{value:.4f}", file=sys.stderr)
    elif cfg.suite == "chain-shd":
        for column in ("shd_with_knowledge", "shd_plain"):
            for cell, value in mean_by_cell(
                rows, ("n", "fraction"), column
            ).items():
                print(f"n={cell[0]} fraction={cell[1]}: mean {column} "
                      f"{value:.4f}", file=sys.stderr)
    elif cfg.suite == "kappa":
        for method in cfg.methods:
            column = f"pred_{method.replace('-', '_')}"
            if rows and column in rows[0]:
                value = kappa(confusion_from_rows(rows, column))
                print(f"kappa[{method}] = {value:.4f}", file=sys.stderr)
            mean_time = [
                float(r[f"time_{method.replace('-', '_')}"]) for r in rows
                if f"time_{method.replace('-', '_')}" in r
            ]
            if mean_time:
                print(f"cpu[{method}] = {np.mean(mean_time):.4f}s",
                      file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="localcausal",
        description="Local causal structure learning and descendant "
        "identification under background knowledge.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_method=False):
        p.add_argument("--dag", help="true-graph JSON (enables the oracle)")
        p.add_argument("--data", help="CSV dataset with a header row")
        p.add_argument("--oracle", action="store_true",
                       help="force the d-separation oracle (requires --dag)")
        p.add_argument("--alpha", type=float, default=0.01,
                       help="significance level for the Gaussian test")
        p.add_argument("--target", required=True,
                       help="target variable (label or index)")
        p.add_argument("--knowledge", help="background-knowledge JSON file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output JSON path (default stdout)")
        p.add_argument("--mec-cap", type=int, default=4096)
        if with_method:
            p.add_argument(
                "--method",
                choices=("labiter", "local-itc", "zuo", "brute-force"),
                default="labiter",
            )
            p.add_argument("--compare", choices=("brute-force",))

    p_learn = sub.add_parser(
        "learn-local", help="learn the local structure around the target"
    )
    common(p_learn)
    p_learn.set_defaults(func=cmd_learn_local)

    p_ident = sub.add_parser(
        "identify", help="classify every node's relation to the target"
    )
    common(p_ident, with_method=True)
    p_ident.set_defaults(func=cmd_identify)

    p_sel = sub.add_parser(
        "select-predictors",
        help="emit variables safe to predict from (non-descendants)",
    )
    common(p_sel)
    p_sel.add_argument("--relaxed", action="store_true",
                       help="also keep possible descendants")
    p_sel.set_defaults(func=cmd_select_predictors)

    p_bench = sub.add_parser("bench", help="run a benchmark sweep")
    p_bench.add_argument("--suite", choices=("chain-ci", "chain-shd", "kappa"),
                         required=True)
    p_bench.add_argument("--sizes", default="10")
    p_bench.add_argument("--degrees", default="2.0")
    p_bench.add_argument("--sample-sizes", default="1000")
    p_bench.add_argument("--fractions", default="0.1,0.3,0.5,0.7,0.9")
    p_bench.add_argument("--reps", type=int, default=100)
    p_bench.add_argument("--alpha", type=float, default=0.01)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--mec-cap", type=int, default=4096)
    p_bench.add_argument("--jobs", type=int, default=1)
    p_bench.add_argument("--timing", action="store_true",
                         help="include wall-time columns (non-deterministic)")
    p_bench.add_argument("--out", required=True, help="rows CSV path")
    p_bench.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InconsistencyError as exc:
        print(f"inconsistent knowledge: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (GraphError, NumericalError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
