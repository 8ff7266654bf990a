"""Command-line experiment runner.

    chanceboost run --data vowel --learner tree --booster adaboost \\
        --measure informedness --iterations 26
    chanceboost suite experiments/table2.json
    chanceboost trace --data iris --measure informedness --iterations 26 --trace trace.csv
    chanceboost validate --data letter
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .boosting import BoostConfig, fit
from .data import REGISTRY, DataFormatError, Dataset, descriptor_path, load, validate
from .evaluation import MEASURE_NAMES, CVReport, cv_splits, equivalence_compare, run_repeated_cv, tally
from .learners import LEARNER_KINDS, LearnerSpec
from .metrics import MeasureKind

log = logging.getLogger("chanceboost")

BOOSTERS = ("adaboost", "multiboost", "none")
TRACE_HEADER = ["round", "kappa", "error", "beta", "alpha", "train_acc", "train_inf", "w_max", "w_min"]
CSV_HEADER = ["cell_id", "dataset", "learner", "booster", "measure", "iterations", "run", "fold", "metric", "value"]


class UsageError(Exception):
    """Bad flag combination or suite file; reported with exit status 2."""


def sig9(x: float) -> float:
    """Round to 9 significant digits (shared by the JSON and CSV renderings)."""
    return float(f"{x:.9g}")


def fmt9(x: float) -> str:
    return repr(sig9(x))


# ---------------------------------------------------------------------------
# Experiment cells


@dataclass(frozen=True)
class Cell:
    cell_id: str
    dataset: str
    data_path: str
    learner: str
    booster: str
    measure: str | None
    iterations: int
    subcommittees: int = 3
    method: str = ""

    def method_obj(self, seed: int):
        spec = LearnerSpec(self.learner)
        if self.booster == "none":
            return spec
        return BoostConfig(MeasureKind.parse(self.measure), self.iterations, spec, self.booster,
                           self.subcommittees, seed)


def method_label(learner: str, booster: str, measure: str | None, iterations: int) -> str:
    """Table-style method name such as ``DS``, ``RT`` or ``InfRT26B``."""
    spec = LearnerSpec(learner)
    if booster == "none":
        return {"stump": "DS", "tree": "RT", "cart": "SC", "nb": "NB"}[spec.kind]
    suffix = "B" if booster == "adaboost" else "M"
    return f"{MeasureKind.parse(measure).abbrev}{spec.abbrev}{iterations}{suffix}"


def make_cell(dataset: str, data_path: str, learner: str, booster: str, measure: str | None,
              iterations: int | None, subcommittees: int = 3, cell_id: str | None = None,
              method: str | None = None) -> Cell:
    if learner not in LEARNER_KINDS:
        raise UsageError(f"unknown learner {learner!r}; expected one of {', '.join(LEARNER_KINDS)}")
    if booster not in BOOSTERS:
        raise UsageError(f"unknown booster {booster!r}; expected one of {', '.join(BOOSTERS)}")
    if booster == "none":
        if iterations not in (None, 1):
            raise UsageError("--booster none trains a single model; --iterations must be 1")
        iterations, measure = 1, None
    else:
        iterations = 10 if iterations is None else int(iterations)
        if iterations < 1:
            raise UsageError("--iterations must be at least 1")
        try:
            measure = MeasureKind.parse(measure or "accuracy").value
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if booster == "multiboost" and not 1 <= subcommittees <= iterations:
            raise UsageError("--subcommittees must lie between 1 and --iterations")
    label = method or method_label(learner, booster, measure, iterations)
    return Cell(cell_id or f"{dataset}/{label}", dataset, str(data_path), learner, booster, measure,
                iterations, subcommittees, label)


def resolve_data(value: str) -> tuple[str, str]:
    """(dataset name, path) for a file path or a registered dataset name."""
    path = Path(value)
    if path.exists():
        return path.stem, str(path)
    if value.lower() in REGISTRY:
        descriptor = REGISTRY[value.lower()]
        return descriptor.name, str(descriptor_path(descriptor))
    raise UsageError(f"no such data file or registered dataset: {value}")


def load_data(path: str, class_name: str | None = None) -> Dataset:
    kwargs = {}
    if class_name is not None:
        kwargs = {"class_column": class_name} if path.lower().endswith(".csv") else {"class_attribute": class_name}
    return load(path, **kwargs)


def run_cell(cell: Cell, runs: int, folds: int, seed: int, class_name: str | None = None) -> dict:
    data = load_data(cell.data_path, class_name)
    report = run_repeated_cv(data, cell.method_obj(seed), runs=runs, k=folds, seed=seed)
    return make_record(cell, report, seed)


def make_record(cell: Cell, report: CVReport, seed: int) -> dict:
    record = {
        "cell_id": cell.cell_id,
        "dataset": cell.dataset,
        "method": cell.method,
        "learner": cell.learner,
        "booster": cell.booster,
        "measure": cell.measure,
        "iterations": cell.iterations,
    }
    if cell.booster == "multiboost":
        record["subcommittees"] = cell.subcommittees
    record.update({
        "runs": report.runs,
        "folds": report.k,
        "seed": seed,
        "per_fold": [
            {
                "run": f.run,
                "fold": f.fold,
                **{m: sig9(f.measures[m]) for m in MEASURE_NAMES},
                "rounds_run": f.rounds_run,
                "stop_reason": f.stop_reason,
            }
            for f in report.folds
        ],
        "means": {m: sig9(report.summary[m].mean) for m in MEASURE_NAMES},
        "sds": {m: sig9(report.summary[m].sd) for m in MEASURE_NAMES},
        "two_se": {m: sig9(report.summary[m].two_se) for m in MEASURE_NAMES},
        "rounds_run": {str(k): v for k, v in report.rounds_run.items()},
        "stop_reasons": report.stop_reasons,
        "metadata": {"created": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "version": __version__},
    })
    return record


def record_json(record: dict) -> str:
    return json.dumps(record, indent=2) + "\n"


def record_csv_rows(record: dict) -> list[list[str]]:
    """Tidy rows: one per fold per measure, then mean / sd / two_se per measure."""
    head = [record["cell_id"], record["dataset"], record["learner"], record["booster"],
            record["measure"] or "", str(record["iterations"])]
    rows = []
    for fold in record["per_fold"]:
        for m in MEASURE_NAMES:
            rows.append(head + [str(fold["run"]), str(fold["fold"]), m, fmt9(fold[m])])
    for stat in ("means", "sds", "two_se"):
        for m in MEASURE_NAMES:
            rows.append(head + ["", stat, m, fmt9(record[stat][m])])
    return rows


def record_csv(records: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for record in records:
        writer.writerows(record_csv_rows(record))
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Commands


def _cell_from_args(args) -> Cell:
    name, path = resolve_data(args.data)
    return make_cell(name, path, args.learner, args.booster, args.measure, args.iterations, args.subcommittees)


def cmd_run(args) -> int:
    cell = _cell_from_args(args)
    record = run_cell(cell, args.runs, args.folds, args.seed, args.class_name)
    _emit(record_json(record) if args.format == "json" else record_csv([record]), args.out)
    return 0


def cmd_trace(args) -> int:
    cell = _cell_from_args(args)
    if cell.booster == "none":
        raise UsageError("trace needs --booster adaboost or multiboost")
    data = load_data(cell.data_path, args.class_name)
    _, _, train_idx, _ = next(cv_splits(data, 1, args.folds, args.seed))
    ensemble = fit(data.subset(train_idx).with_weights(None), cell.method_obj(args.seed))
    with open(args.trace, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for rec in ensemble.history:
            beta = "" if rec.beta != rec.beta else fmt9(rec.beta)
            round_tag = str(rec.round) if rec.kept else f"{rec.round}:surrendered"
            writer.writerow([round_tag, fmt9(rec.kappa), fmt9(rec.error), beta, fmt9(rec.alpha),
                             fmt9(rec.train_accuracy), fmt9(rec.train_informedness),
                             fmt9(rec.w_max), fmt9(rec.w_min)])
    print(f"{cell.cell_id}: {len(ensemble.members)} members, {ensemble.rounds_run} rounds, "
          f"stop_reason={ensemble.stop_reason.value}; trace written to {args.trace}")
    return 0


def cmd_validate(args) -> int:
    name, path = resolve_data(args.data)
    key = (args.descriptor or name).lower()
    if key not in REGISTRY:
        raise UsageError(f"no registered descriptor {key!r}; registered: {', '.join(REGISTRY)}")
    report = validate(load_data(path, args.class_name), REGISTRY[key])
    print(report)
    return 0 if report.ok else 1


# ---------------------------------------------------------------------------
# Suites


@dataclass(frozen=True)
class SuiteSpec:
    cells: tuple[Cell, ...]
    seed: int = 0
    runs: int = 2
    folds: int = 5
    output: str = "results"
    baseline: str | None = None
    treeline: str | None = None
    band: float = 0.05


def parse_suite(spec: dict, base_dir: Path = Path(".")) -> SuiteSpec:
    """Build a suite from its JSON form (see README for the schema)."""
    datasets = {}
    for name, value in spec.get("datasets", {}).items():
        candidate = base_dir / value
        if candidate.exists():
            datasets[name] = str(candidate)
        else:
            datasets[name] = resolve_data(value)[1]

    def data_path(name):
        if name in datasets:
            return datasets[name]
        return resolve_data(name)[1]

    raw_cells = list(spec.get("cells", []))
    for method in spec.get("methods", []):
        for name in datasets:
            raw_cells.append({"dataset": name, **method})
    cells = []
    for raw in raw_cells:
        unknown = set(raw) - {"id", "dataset", "learner", "booster", "measure", "iterations", "subcommittees", "method"}
        if unknown:
            raise UsageError(f"unknown cell keys: {', '.join(sorted(unknown))}")
        if "dataset" not in raw:
            raise UsageError("every cell needs a dataset")
        cells.append(make_cell(
            raw["dataset"], data_path(raw["dataset"]), raw.get("learner", "stump"), raw.get("booster", "adaboost"),
            raw.get("measure"), raw.get("iterations"), int(raw.get("subcommittees", 3)),
            cell_id=raw.get("id"), method=raw.get("method"),
        ))
    if not cells:
        raise UsageError("suite has no cells")
    ids = [c.cell_id for c in cells]
    duplicates = sorted({i for i in ids if ids.count(i) > 1})
    if duplicates:
        raise UsageError(f"duplicate cell identifiers: {', '.join(duplicates)}")
    return SuiteSpec(
        tuple(cells), int(spec.get("seed", 0)), int(spec.get("runs", 2)), int(spec.get("folds", 5)),
        str(spec.get("output", "results")), spec.get("baseline"), spec.get("treeline"),
        float(spec.get("band", 0.05)),
    )


def _safe_name(cell_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", cell_id)


def _run_suite_cell(cell: Cell, suite: SuiteSpec):
    try:
        return run_cell(cell, suite.runs, suite.folds, suite.seed), None
    except Exception as exc:  # noqa: BLE001 -- a failing cell must not stop the suite
        return None, f"{type(exc).__name__}: {exc}"


def summarize_suite(records: list[dict], suite: SuiteSpec, measure: str = "informedness") -> dict:
    """Methods x datasets grid of mean scores plus equivalence tallies against the references."""
    methods = list(dict.fromkeys(r["method"] for r in records))
    datasets = list(dict.fromkeys(r["dataset"] for r in records))
    grid = {m: {} for m in methods}
    for r in records:
        grid[r["method"]][r["dataset"]] = r["means"][measure]
    averages = {m: sig9(sum(v.values()) / len(v)) for m, v in grid.items() if v}
    comparisons = {}
    for role, ref in (("baseline", suite.baseline), ("treeline", suite.treeline)):
        if not ref or ref not in grid:
            continue
        comparisons[role] = {"reference": ref, "methods": {}}
        for m in methods:
            shared = [d for d in datasets if d in grid[m] and d in grid[ref]]
            if m == ref or not shared:
                continue
            verdicts = equivalence_compare({d: grid[m][d] for d in shared}, {d: grid[ref][d] for d in shared},
                                           band=suite.band)
            comparisons[role]["methods"][m] = {
                "verdicts": {v.dataset: v.outcome.value for v in verdicts},
                "scores": {v.dataset: [v.method, v.reference] for v in verdicts},
                "tally": tally(verdicts),
            }
    return {"measure": measure, "methods": methods, "datasets": datasets, "grid": grid,
            "averages": averages, "comparisons": comparisons, "band": suite.band}


COMPARISON_HEADER = ["role", "reference", "method", "dataset", "method_score", "reference_score", "outcome"]


def comparison_rows(summary: dict) -> list[list[str]]:
    rows = []
    for role, comp in summary.get("comparisons", {}).items():
        for method, entry in comp["methods"].items():
            for dataset, outcome in entry["verdicts"].items():
                m, r = entry["scores"][dataset]
                rows.append([role, comp["reference"], method, dataset, fmt9(m), fmt9(r), outcome])
    return rows


def render_summary(summary: dict) -> str:
    methods, datasets, grid = summary["methods"], summary["datasets"], summary["grid"]
    width = max([len("SigBoosts(baseline)")] + [len(d) for d in datasets]) + 2
    colw = max([8] + [len(m) + 2 for m in methods])
    lines = [f"{summary['measure'].capitalize():<{width}}" + "".join(f"{m:>{colw}}" for m in methods)]
    for d in datasets:
        cells = [f"{grid[m][d]:.2f}" if d in grid[m] else "-" for m in methods]
        lines.append(f"{d:<{width}}" + "".join(f"{c:>{colw}}" for c in cells))
    lines.append(f"{'Average':<{width}}" + "".join(f"{summary['averages'].get(m, float('nan')):>{colw}.2f}" for m in methods))
    for role, comp in summary["comparisons"].items():
        for key, label in (("equi_win", "EquiWins"), ("sig_boost", "SigBoosts"), ("sig_loss", "SigLosses")):
            counts = []
            for m in methods:
                t = comp["methods"].get(m, {}).get("tally")
                counts.append(str(t[key]) if t and t[key] else "")
            lines.append(f"{label + '(' + role + ')':<{width}}" + "".join(f"{c:>{colw}}" for c in counts))
    return "\n".join(lines) + "\n"


def cmd_suite(args) -> int:
    spec_path = Path(args.spec)
    try:
        raw = json.loads(spec_path.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{spec_path}: invalid JSON: {exc}") from None
    suite = parse_suite(raw, spec_path.parent)
    out_dir = Path(args.output or suite.output)
    (out_dir / "records").mkdir(parents=True, exist_ok=True)

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(_run_suite_cell, suite.cells, [suite] * len(suite.cells)))
    else:
        outcomes = []
        for cell in suite.cells:
            log.info("running %s", cell.cell_id)
            outcomes.append(_run_suite_cell(cell, suite))

    records, failures = [], {}
    for cell, (record, error) in zip(suite.cells, outcomes):
        if error is not None:
            failures[cell.cell_id] = error
            log.error("cell %s failed: %s", cell.cell_id, error)
            continue
        records.append(record)
        (out_dir / "records" / f"{_safe_name(cell.cell_id)}.json").write_text(record_json(record))

    (out_dir / "results.csv").write_text(record_csv(records))
    summary = summarize_suite(records, suite) if records else {}
    summary["failures"] = failures
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    with open(out_dir / "comparisons.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COMPARISON_HEADER)
        writer.writerows(comparison_rows(summary))
    text = render_summary(summary) if records else "no cell produced a record\n"
    (out_dir / "summary.txt").write_text(text)
    sys.stdout.write(text)
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# Entry point


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="ARFF/CSV path or a registered dataset name")
    p.add_argument("--class", dest="class_name", help="class attribute/column (default: last nominal)")
    p.add_argument("--learner", choices=LEARNER_KINDS, default="stump")
    p.add_argument("--booster", choices=BOOSTERS, default="adaboost")
    p.add_argument("--measure", choices=[m.value for m in MeasureKind], default="accuracy")
    p.add_argument("--iterations", type=int, default=None, help="boosting rounds (default 10; 1 for --booster none)")
    p.add_argument("--runs", type=int, default=2)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--subcommittees", type=int, default=3)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chanceboost", description="Chance-corrected boosting experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="cross-validate one configuration and print its result record")
    _add_experiment_flags(p)
    p.add_argument("--out", help="write the record here instead of standard output")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("suite", help="run every cell of a JSON suite file")
    p.add_argument("spec")
    p.add_argument("--output", help="override the suite's output directory")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("trace", help="per-round boosting trace on the first training split")
    _add_experiment_flags(p)
    p.add_argument("--trace", required=True, help="CSV file to write")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("validate", help="check a dataset against its registered counts")
    p.add_argument("--data", required=True)
    p.add_argument("--class", dest="class_name")
    p.add_argument("--descriptor", help="registry entry to compare with (default: file stem)")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"chanceboost: error: {exc}", file=sys.stderr)
        return 2
    except (DataFormatError, OSError, ValueError) as exc:
        print(f"chanceboost: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
