"""Command-line interface: cluster / teach / report / classify.

Every output document embeds the tool version, the resolved configuration,
and the seed, and identical invocations write byte-identical files.  Exit
codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import __version__, evaluation, modelio, self_organiser, teaching
from .dataset import TABLE1_DATASETS, load_dataset
from .errors import DataError, PhcError
from .metric import METRICS
from .self_organiser import SelfOrgConfig

log = logging.getLogger(__name__)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); usage errors are exit 1
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="phc", description=__doc__)
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="subcommand", metavar="COMMAND")

    def common_clustering(p):
        p.add_argument("--max-iter", type=int, default=50, dest="max_iterations")
        p.add_argument("--exemplar-threshold", type=int, default=2)
        p.add_argument("--metric", choices=sorted(METRICS), default="l2")
        p.add_argument("--seed", type=int, default=42)

    p_cluster = sub.add_parser("cluster", help="self-organise a dataset into a model")
    p_cluster.add_argument("--data", required=True, help="CSV data file")
    p_cluster.add_argument("--schema", required=True, help="JSON schema file")
    p_cluster.add_argument("--out", required=True, help="model JSON output path")
    common_clustering(p_cluster)

    p_teach = sub.add_parser("teach", help="teach true categories to a model")
    p_teach.add_argument("--model", required=True, help="model JSON from 'cluster'")
    p_teach.add_argument("--data", required=True)
    p_teach.add_argument("--schema", required=True)
    p_teach.add_argument("--out", required=True, help="teaching report output path")
    p_teach.add_argument("--seed", type=int, default=42)
    p_teach.add_argument(
        "--budget", type=int, default=None,
        help="maximum oracle queries (default: one per data row)",
    )
    p_teach.add_argument("--smart-sampling", action="store_true")

    p_report = sub.add_parser("report", help="benchmark comparison over named datasets")
    p_report.add_argument(
        "--datasets", default=",".join(TABLE1_DATASETS),
        help="comma-separated dataset names",
    )
    p_report.add_argument("--out", required=True, help="comparison JSON output path")
    p_report.add_argument("--data-dir", default=None)
    p_report.add_argument("--allow-missing", action="store_true")
    common_clustering(p_report)

    p_classify = sub.add_parser("classify", help="descend a model with a feature vector")
    p_classify.add_argument("--model", required=True)
    p_classify.add_argument("--row", help="comma-separated encoded feature values")
    p_classify.add_argument("--row-file", help="file with one feature vector per line")
    p_classify.add_argument("--teach-report", default=None)
    p_classify.add_argument("--data", default=None)
    p_classify.add_argument("--schema", default=None)

    return parser


def _config_dict(args, fields) -> dict:
    config = {"subcommand": args.subcommand}
    for name in fields:
        config[name] = getattr(args, name)
    return config


def _envelope(args, fields, seed) -> dict:
    return {
        "tool_version": __version__,
        "config": _config_dict(args, fields),
        "seed": seed,
    }


def _cmd_cluster(args) -> int:
    config = SelfOrgConfig(
        exemplar_threshold=args.exemplar_threshold,
        max_iterations=args.max_iterations,
        metric=args.metric,
    )
    rows, _, _ = load_dataset(args.data, args.schema)
    model = self_organiser.run(rows, config)
    document = _envelope(
        args,
        ["data", "schema", "out", "max_iterations", "exemplar_threshold", "metric"],
        args.seed,
    )
    document.update(modelio.model_to_dict(model))
    modelio.write_json(args.out, document)
    log.info(
        "model written to %s: %d clusters, %d sub-clusters",
        args.out, len(model.clusters), model.subcluster_count(),
    )
    return 0


def _cmd_teach(args) -> int:
    model = modelio.load_model(args.model)
    rows, oracle, _ = load_dataset(args.data, args.schema)
    if model.row_ids() != {r.id for r in rows}:
        raise DataError("model and dataset describe different row sets")
    model_dim = model.clusters[0].centroid.values.shape[0] if model.clusters else 0
    if rows and rows[0].features.shape[0] != model_dim:
        raise DataError(
            f"dataset encodes to dimension {rows[0].features.shape[0]}, "
            f"model was built on dimension {model_dim}"
        )
    budget = args.budget if args.budget is not None else len(rows)
    if budget < 0:
        raise UsageError("--budget must be >= 0")
    session = teaching.start_session(
        model, rows, oracle, seed=args.seed, smart_sampling=args.smart_sampling
    )
    report = teaching.run_teaching(session, oracle, budget)
    document = _envelope(
        args,
        ["model", "data", "schema", "out", "budget", "smart_sampling"],
        args.seed,
    )
    document["config"]["budget"] = budget
    document.update(teaching.report_to_dict(report, session, oracle))
    modelio.write_json(args.out, document)
    log.info(
        "taught %d queries, accuracy %.4f", report.queries_used, report.accuracy
    )
    return 0


def _cmd_report(args) -> int:
    names = [n.strip() for n in args.datasets.split(",") if n.strip()]
    config = SelfOrgConfig(
        exemplar_threshold=args.exemplar_threshold,
        max_iterations=args.max_iterations,
        metric=args.metric,
    )
    document = _envelope(
        args,
        [
            "datasets", "out", "data_dir", "allow_missing",
            "max_iterations", "exemplar_threshold", "metric",
        ],
        args.seed,
    )
    comparison = evaluation.table1_harness(
        names, config, data_dir=args.data_dir, allow_missing=args.allow_missing
    )
    document.update(comparison)
    modelio.write_json(args.out, document)
    print(evaluation.render_table(comparison))
    if comparison["missing"] and not args.allow_missing:
        raise DataError(
            "missing datasets: " + ", ".join(comparison["missing"])
            + " (use --allow-missing to tolerate)"
        )
    return 0


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.asarray([float(v) for v in text.split(",")], dtype=float)
    except ValueError:
        raise DataError(f"row is not a comma-separated numeric vector: {text!r}") from None


def _cmd_classify(args) -> int:
    if bool(args.row) == bool(args.row_file):
        raise UsageError("provide exactly one of --row or --row-file")
    if bool(args.data) != bool(args.schema):
        raise UsageError("--data and --schema must be given together")
    model = modelio.load_model(args.model)

    vectors = []
    if args.row:
        vectors.append(_parse_vector(args.row))
    else:
        try:
            with open(args.row_file, "r", encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        vectors.append(_parse_vector(line.strip()))
        except OSError as exc:
            raise DataError(f"cannot read {args.row_file}: {exc}") from exc

    teach_doc = modelio.read_json(args.teach_report) if args.teach_report else None
    rows_by_features = None
    if args.data:
        rows, _, _ = load_dataset(args.data, args.schema)
        rows_by_features = [(r.id, np.asarray(r.features, dtype=float)) for r in rows]

    for q in vectors:
        try:
            cluster_id, sub_id = self_organiser.classify(model, q)
        except ValueError as exc:
            raise DataError(str(exc)) from exc
        line = f"cluster={cluster_id} subcluster={sub_id}"
        if teach_doc is not None:
            label = teach_doc.get("subcluster_labels", {}).get(str(sub_id))
            if rows_by_features is not None:
                for rid, features in rows_by_features:
                    if features.shape == q.shape and np.array_equal(features, q):
                        label = teach_doc.get("row_labels", {}).get(str(rid), label)
                        break
            if label is not None:
                line += f" category={label['category']} confidence={label['confidence']}"
        print(line)
    return 0


_COMMANDS = {
    "cluster": _cmd_cluster,
    "teach": _cmd_teach,
    "report": _cmd_report,
    "classify": _cmd_classify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.subcommand not in _COMMANDS:
            raise UsageError(f"unknown or missing subcommand: {args.subcommand!r}")
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            stream=sys.stderr,
            format="%(levelname)s %(name)s: %(message)s",
        )
        return _COMMANDS[args.subcommand](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except (DataError, PhcError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
