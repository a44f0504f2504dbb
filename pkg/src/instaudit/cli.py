"""``audit`` command line.

Exit codes: 0 success, 2 usage error, 3 data/schema error, 4 internal
invariant breach.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import classifiers
from .classifiers import CLI_NAMES, ClassifierSpec, model_from_dict, model_to_dict
from .data_model import Schema, generate_synthetic_dataset, records_from_matrix, to_matrix, Dataset
from .errors import DataError, InvariantError
from .evaluation import evaluate
from .feature_select import GaConfig, cost_table, evolve, selected_columns, total_cost
from .io import read_dataset
from .oversample import SmoteConfig, smotenc_balance
from .parallel import thread_count
from .pipeline import (
    PUBLISHED_SIZES,
    automated_table,
    fake_table,
    prepare_split,
    run_classifier,
    stage_seed,
    synthetic_dataset,
    table_markdown,
)
from .preprocess import apply_minmax, fit_minmax, MinMaxScaler

DEFAULT_SEED = 42


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="audit",
        description="Fake and automated Instagram account detection pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, dataset=True):
        if dataset:
            p.add_argument("--dataset", action="append", metavar="PATH",
                           help="dataset file; repeat for the authors' per-class files")
        p.add_argument("--schema", choices=["fake", "automated"])
        p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                       help=f"master seed (default {DEFAULT_SEED})")
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--format", choices=["json", "md"], default="json")

    def ga_flags(p):
        p.add_argument("--generations", type=int, default=10)
        p.add_argument("--population", type=int, default=20)
        p.add_argument("--mutation-rate", type=float, default=0.05)

    common(sub.add_parser("ingest", help="validate a dataset and write it in canonical form"))

    p = sub.add_parser("synthesize", help="sample a synthetic dataset")
    common(p, dataset=False)
    p.add_argument("--n-real", type=int)
    p.add_argument("--n-positive", type=int)

    common(sub.add_parser("oversample", help="balance a fake-schema dataset with SMOTE-NC"))

    p = sub.add_parser("select-features", help="run the cost-sensitive genetic algorithm")
    common(p)
    ga_flags(p)

    for name, text in (("train", "fit a classifier on a whole dataset"),
                       ("evaluate", "train on 70%% and report metrics on the held-out 30%%")):
        p = sub.add_parser(name, help=text)
        common(p)
        p.add_argument("--classifier", choices=sorted(CLI_NAMES), default="svm")
        p.add_argument("--oversample", action="store_true")
        if name == "evaluate":
            p.add_argument("--paper-mode", action="store_true",
                           help="oversample before splitting, as the original experiments did")
            p.add_argument("--model", metavar="PATH",
                           help="score a model written by 'train' on the whole dataset instead")

    p = sub.add_parser("reproduce", help="rebuild one of the result tables")
    common(p)
    ga_flags(p)
    p.add_argument("--paper-mode", action="store_true")
    return parser


def _write(path, text: str):
    if path is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    Path(path).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")


def _dump(payload) -> str:
    return json.dumps(payload, indent=1, sort_keys=False)


def _load(args, require: Schema | None = None) -> Dataset:
    if not args.dataset:
        raise UsageError("--dataset is required")
    dataset = read_dataset(args.dataset, args.schema)
    if require is not None and dataset.schema is not require:
        raise DataError(f"this command needs a {require.value}-schema dataset")
    return dataset


def cmd_ingest(args):
    dataset = _load(args)
    _write(args.out, dataset.to_json())
    real, pos = dataset.class_counts()
    return f"ingested {len(dataset)} {dataset.schema.value} records (real={real}, positive={pos})"


def cmd_synthesize(args):
    if args.schema is None:
        raise UsageError("--schema is required")
    schema = Schema(args.schema)
    n_real, n_pos = PUBLISHED_SIZES[schema]
    dataset = generate_synthetic_dataset(
        schema, args.n_real or n_real, args.n_positive or n_pos, args.seed
    )
    _write(args.out, dataset.to_json())
    real, pos = dataset.class_counts()
    return f"synthesized {len(dataset)} {schema.value} records (real={real}, positive={pos})"


def cmd_oversample(args):
    dataset = _load(args, Schema.FAKE)
    balanced = smotenc_balance(to_matrix(dataset), SmoteConfig(seed=stage_seed(args.seed, "smote")))
    out = Dataset(Schema.FAKE, records_from_matrix(balanced, Schema.FAKE), dataset.source)
    _write(args.out, out.to_json())
    real, pos = out.class_counts()
    return f"oversampled to {len(out)} records (real={real}, fake={pos})"


def cmd_select_features(args):
    dataset = _load(args, Schema.AUTOMATED)
    matrix = to_matrix(dataset)
    scaled = apply_minmax(fit_minmax(matrix), matrix)
    config = GaConfig(population_size=args.population, generations=args.generations,
                      mutation_rate=args.mutation_rate, seed=stage_seed(args.seed, "ga"))
    costs = cost_table(scaled.column_names)
    result = evolve(scaled, costs, config, threads=thread_count())
    _write(args.out, result.trace.to_json())
    chosen = selected_columns(scaled, result.best)
    return (f"best fitness {result.best_fitness:.2f} with {', '.join(chosen)} "
            f"(cost {total_cost(result.best, costs)})")


def _model_payload(model, scaler: MinMaxScaler, spec: ClassifierSpec, args) -> dict:
    payload = model_to_dict(model, spec.hyperparameters)
    payload.update({"scaler": scaler.to_dict(), "seed": args.seed})
    return payload


def cmd_train(args):
    dataset = _load(args)
    matrix = to_matrix(dataset)
    if args.oversample:
        matrix = smotenc_balance(matrix, SmoteConfig(seed=stage_seed(args.seed, "smote")))
    scaler = fit_minmax(matrix)
    spec = ClassifierSpec(args.classifier, seed=stage_seed(args.seed, "model"))
    model = classifiers.fit(spec, apply_minmax(scaler, matrix))
    _write(args.out, _dump(_model_payload(model, scaler, spec, args)))
    return f"trained {spec.kind} on {matrix.n_rows} rows"


def cmd_evaluate(args):
    dataset = _load(args)
    matrix = to_matrix(dataset)
    if args.model:
        try:
            payload = json.loads(Path(args.model).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise DataError(f"no such file: {args.model}") from None
        model = model_from_dict(payload)
        scaler = MinMaxScaler.from_dict(payload["scaler"])
        report = evaluate(model, apply_minmax(scaler, matrix), model.kind,
                          payload.get("hyperparameters"), args.seed, dataset.source)
    else:
        prepared = prepare_split(matrix, args.seed, oversample=args.oversample,
                                 paper_mode=args.paper_mode)
        report = run_classifier(CLI_NAMES[args.classifier], prepared, args.seed, dataset.source)
    _write(args.out, _dump(report.to_dict()))
    return (f"{report.classifier}: precision={report.precision:.3f} recall={report.recall:.3f} "
            f"f1={report.f1:.3f} macro_f1={report.macro_f1:.3f}")


def cmd_reproduce(args):
    if args.schema is None:
        raise UsageError("--schema fake|automated selects the table to reproduce")
    schema = Schema(args.schema)
    dataset = _load(args, schema) if args.dataset else synthetic_dataset(schema, args.seed)
    matrix = to_matrix(dataset)
    if schema is Schema.FAKE:
        table = fake_table(matrix, args.seed, paper_mode=args.paper_mode, dataset=dataset.source)
    else:
        ga = GaConfig(population_size=args.population, generations=args.generations,
                      mutation_rate=args.mutation_rate)
        table = automated_table(matrix, args.seed, ga, dataset=dataset.source,
                                threads=thread_count())
    _write(args.out, table_markdown(table) if args.format == "md" else _dump(table))
    return f"reproduced the {schema.value} table on {dataset.source} ({len(table['rows'])} rows)"


COMMANDS = {
    "ingest": cmd_ingest,
    "synthesize": cmd_synthesize,
    "oversample": cmd_oversample,
    "select-features": cmd_select_features,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "reproduce": cmd_reproduce,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        summary = COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"audit: error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"audit: {exc}", file=sys.stderr)
        return 3
    except (InvariantError, AssertionError) as exc:
        print(f"audit: internal invariant breach: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"audit: error: {exc}", file=sys.stderr)
        return 2
    if args.out is not None:
        print(summary)
    else:
        print(summary, file=sys.stderr)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
