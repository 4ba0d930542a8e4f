"""Command-line interface.

Exit codes: 0 on success, 1 on domain errors (bad data, unreachable
backend), 2 on usage errors. No command ever mutates its inputs; every
command that writes an artifact also writes a `<stem>.run.json` manifest
with the resolved configuration and tool version.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .backends import BackendSuite
from .backends.mocks import TemplateAugmenter, suite_from_truth_file
from .core import ProvenanceRecord, RelationSchema
from .corrupt import (
    SeededPipelineConfig,
    augment_irrelevant,
    build_detection_set,
    build_quant_set,
    corrupt_longer_texts,
    corrupt_missing_triples,
    fuse_test_set,
    read_detection_set,
    write_detection_set,
)
from .detect import detect_batch, read_verdicts, write_verdicts
from .errors import HalluAuditError, IdMismatch, IoError
from .evaluate import (
    SweepGrid,
    emit_report,
    sample_balanced,
    score_detection,
    score_quantifier,
    threshold_sweep,
)
from .ingest import (
    corpus_stats,
    parse_docred_json,
    parse_webnlg_xml,
    read_canonical,
    write_canonical,
)
from .prompts import PROMPT_IDS
from .quantify import quantify_dataset, read_quant_report, write_quant_report
from .rng import derive_seed

_SEEDED_STEPS = {"missing-triples", "longer-texts", "fuse-test", "quant-set", "augment"}
_PATH_KEYS = {"in", "out", "gold", "verdicts", "report", "oracle-truth", "config"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hallu-audit",
        description="Corruption benchmarks, detectors, and quantifiers for "
                    "hallucinations in data-to-text corpora.",
    )
    parser.add_argument("--version", action="version", version=f"hallu-audit {__version__}")
    parser.add_argument(
        "--json-errors", action="store_true",
        help="print domain errors as one JSON object on stderr",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("ingest", help="parse an external corpus into canonical JSONL")
    p.add_argument("--format", required=True,
                   choices=("webnlg-xml", "docred-json", "canonical"))
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", dest="out_path", required=True)
    p.add_argument("--name", default=None, help="dataset name (default: input stem)")
    p.add_argument("--split", default="train", choices=("train", "test"))

    p = commands.add_parser("stats", help="corpus statistics for a canonical dataset")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", dest="out_path", default=None)

    p = commands.add_parser("corrupt", help="seeded corruption pipelines")
    corrupt_sub = p.add_subparsers(dest="corruption", required=True)
    for name, help_text in (
        ("missing-triples", "delete one random triple per point (|T| >= 2)"),
        ("longer-texts", "append the text of an unrelated donor point"),
        ("fuse-test", "pair up test points, concatenating texts and merging triples"),
    ):
        sp = corrupt_sub.add_parser(name, help=help_text)
        sp.add_argument("--seed", type=int, required=True)
        sp.add_argument("--in", dest="in_path", required=True)
        sp.add_argument("--out", dest="out_path", required=True)

    p = commands.add_parser("augment", help="rewrite texts through an augmentation backend")
    p.add_argument("--prompt-id", required=True, choices=PROMPT_IDS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", dest="out_path", required=True)
    _add_backend_options(p, template_mock=True)

    p = commands.add_parser("build", help="derive benchmark sets")
    build_sub = p.add_subparsers(dest="benchmark", required=True)
    sp = build_sub.add_parser("detection-set", help="group annotation values with "
                                                    "their strict-superset texts")
    sp.add_argument("--in", dest="in_path", required=True)
    sp.add_argument("--out", dest="out_path", required=True)
    sp = build_sub.add_parser("quant-set", help="delete triples into missing_triples")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--in", dest="in_path", required=True)
    sp.add_argument("--out", dest="out_path", required=True)
    sp.add_argument("--fraction", type=float, default=None,
                    help="delete floor(f*|T|) per point instead of one")

    p = commands.add_parser("detect", help="classify texts as clean or hallucinated")
    p.add_argument("--method", required=True, choices=("ner", "nli"))
    p.add_argument("--threshold", type=float, default=None,
                   help="similarity acceptance threshold (ner only)")
    p.add_argument("--in", dest="in_path", required=True,
                   help="detection-set JSONL or canonical dataset JSONL")
    p.add_argument("--out", dest="out_path", required=True)
    p.add_argument("--sample-n", type=int, default=None,
                   help="balanced-sample this many detection samples first")
    p.add_argument("--sample-seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    _add_backend_options(p)

    p = commands.add_parser("sweep", help="threshold sweep for the ner method")
    p.add_argument("--in", dest="in_path", required=True, help="detection-set JSONL")
    p.add_argument("--lo", type=float, default=0.05)
    p.add_argument("--hi", type=float, default=0.95)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--n", type=int, default=None,
                   help="balanced-sample this many detection samples first")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", dest="out_path", required=True)
    p.add_argument("--format", default="csv", choices=("csv", "json"))
    _add_backend_options(p)

    p = commands.add_parser("quantify", help="find missing annotated triples")
    quant_sub = p.add_subparsers(dest="quantifier", required=True)
    sp = quant_sub.add_parser("ener", help="exhaustive entity-pair entailment")
    sp.add_argument("--relations", required=True,
                    help="comma-separated relevant relation types")
    sp.add_argument("--in", dest="in_path", required=True)
    sp.add_argument("--out", dest="out_path", required=True)
    sp.add_argument("--jobs", type=int, default=1)
    _add_backend_options(sp)

    p = commands.add_parser("evaluate", help="score detector or quantifier output")
    eval_sub = p.add_subparsers(dest="evaluation", required=True)
    sp = eval_sub.add_parser("detection", help="precision/recall/F1 of verdicts")
    sp.add_argument("--gold", required=True, help="detection-set JSONL")
    sp.add_argument("--verdicts", required=True, help="verdicts JSONL from detect")
    sp.add_argument("--out", dest="out_path", default=None)
    sp.add_argument("--format", default="json", choices=("json", "csv"))
    sp = eval_sub.add_parser("quant", help="triple-level scores of a quant report")
    sp.add_argument("--gold", required=True, help="quant-set JSONL with missing_triples")
    sp.add_argument("--report", required=True, help="report JSON from quantify")
    sp.add_argument("--out", dest="out_path", default=None)
    sp.add_argument("--format", default="json", choices=("json", "csv"))

    p = commands.add_parser("pipeline", help="run an ordered list of steps from a JSON file")
    p.add_argument("config", help="pipeline configuration JSON")

    return parser


def _add_backend_options(parser: argparse.ArgumentParser, template_mock: bool = False) -> None:
    parser.add_argument("--backend-url", default=None,
                        help="inference service base URL (default: $HALLU_BACKEND_URL)")
    parser.add_argument("--oracle-truth", default=None,
                        help="ground-truth JSONL enabling the in-process oracle backends")
    if template_mock:
        parser.add_argument("--template-mock", action="store_true",
                            help="use the deterministic template augmenter")


def _resolve_suite(args, roles) -> BackendSuite:
    if getattr(args, "oracle_truth", None):
        return suite_from_truth_file(args.oracle_truth)
    return BackendSuite.from_url(getattr(args, "backend_url", None), roles=roles)


def _write_run_manifest(out_path: str, command: str, args: argparse.Namespace) -> None:
    out = Path(out_path)
    params = {
        key: value for key, value in sorted(vars(args).items())
        if key not in ("command", "json_errors") and value is not None
    }
    manifest = {"command": command, "params": params, "version": __version__}
    target = out.with_name(out.stem + ".run.json")
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(
            json.dumps(manifest, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8", newline="\n",
        )
    except OSError as exc:
        raise IoError(f"cannot write run manifest to {target}: {exc}") from exc


def _sniff_detection_file(path: str) -> bool:
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                return False
            return isinstance(record, dict) and "clean_texts" in record
    return False


# -- command handlers ---------------------------------------------------------

def _cmd_ingest(args) -> int:
    name = args.name or Path(args.in_path).stem
    if args.format == "canonical":
        ds = read_canonical(args.in_path)
    else:
        try:
            raw = Path(args.in_path).read_bytes()
        except OSError as exc:
            raise IoError(f"cannot read corpus from {args.in_path}: {exc}") from exc
        parse = parse_webnlg_xml if args.format == "webnlg-xml" else parse_docred_json
        ds = parse(raw, name=name, split=args.split, source=Path(args.in_path).name)
    write_canonical(ds, args.out_path)
    _write_run_manifest(args.out_path, "ingest", args)
    print(f"ingested {len(ds)} points into {args.out_path}")
    return 0


def _cmd_stats(args) -> int:
    stats = corpus_stats(read_canonical(args.in_path))
    payload = json.dumps(stats.to_dict(), sort_keys=True, ensure_ascii=False, indent=2)
    if args.out_path:
        Path(args.out_path).write_text(payload + "\n", encoding="utf-8", newline="\n")
        _write_run_manifest(args.out_path, "stats", args)
    else:
        print(payload)
    return 0


def _cmd_corrupt(args) -> int:
    ds = read_canonical(args.in_path)
    cfg = SeededPipelineConfig(seed=args.seed)
    op = {
        "missing-triples": corrupt_missing_triples,
        "longer-texts": corrupt_longer_texts,
        "fuse-test": fuse_test_set,
    }[args.corruption]
    out = op(ds, cfg)
    write_canonical(out, args.out_path)
    _write_run_manifest(args.out_path, f"corrupt {args.corruption}", args)
    print(f"{args.corruption}: {len(ds)} -> {len(out)} points, seed {args.seed}")
    return 0


def _cmd_augment(args) -> int:
    ds = read_canonical(args.in_path)
    if getattr(args, "template_mock", False):
        augmenter = TemplateAugmenter()
    elif args.oracle_truth:
        augmenter = suite_from_truth_file(args.oracle_truth).require("augment")
    else:
        augmenter = BackendSuite.from_url(args.backend_url, roles=("augment",)).require("augment")
    out = augment_irrelevant(ds, args.prompt_id, augmenter, seed=args.seed)
    write_canonical(out, args.out_path)
    _write_run_manifest(args.out_path, "augment", args)
    print(f"augmented {len(out)} texts with prompt {args.prompt_id!r}")
    return 0


def _cmd_build(args) -> int:
    ds = read_canonical(args.in_path)
    if args.benchmark == "detection-set":
        samples = build_detection_set(ds)
        record = ProvenanceRecord(step="detection-set", seed=None, source=ds.name)
        write_detection_set(
            samples, args.out_path, name=ds.name, split=ds.split,
            provenance=ds.provenance + (record,),
        )
        _write_run_manifest(args.out_path, "build detection-set", args)
        print(f"detection set: {len(samples)} samples from {len(ds)} points")
        return 0
    cfg = SeededPipelineConfig(seed=args.seed)
    policy = "fraction" if args.fraction is not None else "one-per-point"
    out = build_quant_set(ds, cfg, policy=policy, fraction=args.fraction)
    write_canonical(out, args.out_path)
    _write_run_manifest(args.out_path, "build quant-set", args)
    deleted = sum(len(p.missing_triples) for p in out.points)
    print(f"quant set: {deleted} triples moved to missing_triples")
    return 0


def _cmd_detect(args) -> int:
    roles = ("ner", "similarity") if args.method == "ner" else ("nli",)
    suite = _resolve_suite(args, roles)
    if _sniff_detection_file(args.in_path):
        data = read_detection_set(args.in_path)
        if args.sample_n is not None:
            data = sample_balanced(data, args.sample_n, args.sample_seed)
    else:
        data = read_canonical(args.in_path)
    verdicts = detect_batch(data, args.method, suite,
                            threshold=args.threshold, jobs=args.jobs)
    write_verdicts(verdicts, args.out_path)
    _write_run_manifest(args.out_path, "detect", args)
    clean = sum(1 for v in verdicts if v.verdict.label == "clean")
    print(f"detect {args.method}: {clean}/{len(verdicts)} texts judged clean")
    return 0


def _cmd_sweep(args) -> int:
    suite = _resolve_suite(args, ("ner", "similarity"))
    samples = read_detection_set(args.in_path)
    if args.n is not None:
        samples = sample_balanced(samples, args.n, args.seed)
    result = threshold_sweep(samples, suite, SweepGrid(args.lo, args.hi, args.step))
    emit_report(result, args.out_path, fmt=args.format)
    _write_run_manifest(args.out_path, "sweep", args)
    print(f"sweep: best threshold {result.best_threshold} "
          f"(F1 {result.row_at(result.best_threshold).metrics.f1:.4f})")
    return 0


def _cmd_quantify(args) -> int:
    suite = _resolve_suite(args, ("ner", "nli"))
    ds = read_canonical(args.in_path)
    schema = RelationSchema(tuple(args.relations.split(",")))
    report = quantify_dataset(ds, schema, suite, jobs=args.jobs)
    write_quant_report(report, args.out_path)
    _write_run_manifest(args.out_path, "quantify ener", args)
    print(f"ener: {report.absolute_missing} missing triples found "
          f"({report.relative_missing:.4f} of annotated)")
    return 0


def _cmd_evaluate(args) -> int:
    if args.evaluation == "detection":
        gold = read_detection_set(args.gold)
        gold_ids = {s.id for s in gold}
        verdicts = read_verdicts(args.verdicts)
        for verdict in verdicts:
            sample_id = verdict.item_id.rsplit(":", 2)[0]
            if sample_id not in gold_ids:
                raise IdMismatch(
                    f"verdict {verdict.item_id!r} references no gold sample"
                )
        result = score_detection(verdicts)
    else:
        gold = read_canonical(args.gold)
        report = read_quant_report(args.report)
        result = score_quantifier(report, gold)
    if args.out_path:
        emit_report(result, args.out_path, fmt=args.format)
        _write_run_manifest(args.out_path, f"evaluate {args.evaluation}", args)
    else:
        print(json.dumps(result.to_dict(), sort_keys=True, ensure_ascii=False, indent=2))
    return 0


# -- pipeline -----------------------------------------------------------------

def _step_to_argv(step: dict, base_dir: Path, run_seed: int, index: int) -> list[str]:
    step = dict(step)
    try:
        name = step.pop("run")
    except KeyError:
        raise HalluAuditError(f"pipeline step {index} misses the 'run' key") from None
    argv = {
        "ingest": ["ingest"],
        "stats": ["stats"],
        "missing-triples": ["corrupt", "missing-triples"],
        "longer-texts": ["corrupt", "longer-texts"],
        "fuse-test": ["corrupt", "fuse-test"],
        "augment": ["augment"],
        "detection-set": ["build", "detection-set"],
        "quant-set": ["build", "quant-set"],
        "detect": ["detect"],
        "sweep": ["sweep"],
        "ener": ["quantify", "ener"],
        "evaluate-detection": ["evaluate", "detection"],
        "evaluate-quant": ["evaluate", "quant"],
    }.get(name)
    if argv is None:
        raise HalluAuditError(f"pipeline step {index}: unknown step {name!r}")
    if name in _SEEDED_STEPS and "seed" not in step:
        step["seed"] = derive_seed(run_seed, index)
    for key, value in step.items():
        if value is False or value is None:
            continue
        flag = f"--{key.replace('_', '-')}"
        if value is True:
            argv.append(flag)
            continue
        if key in _PATH_KEYS and not Path(str(value)).is_absolute():
            value = base_dir / str(value)
        argv.extend([flag, str(value)])
    return argv


def _cmd_pipeline(args, json_errors: bool) -> int:
    config_path = Path(args.config)
    try:
        config = json.loads(config_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read pipeline config {config_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise HalluAuditError(f"pipeline config is not valid JSON: {exc}") from exc
    if not isinstance(config, dict) or not isinstance(config.get("steps"), list):
        raise HalluAuditError("pipeline config must be an object with a 'steps' list")
    run_seed = int(config.get("seed", 0))
    base_dir = config_path.parent

    for index, step in enumerate(config["steps"]):
        if not isinstance(step, dict):
            raise HalluAuditError(f"pipeline step {index} must be an object")
        argv = _step_to_argv(step, base_dir, run_seed, index)
        if json_errors:
            argv = ["--json-errors"] + argv
        print(f"pipeline step {index}: {' '.join(argv)}")
        code = run(argv)
        if code != 0:
            print(
                f"pipeline failed at step {index} ({step.get('run', '?')}); "
                f"earlier artifacts are kept",
                file=sys.stderr,
            )
            return code
    return 0


# -- entry points ---------------------------------------------------------------

def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    if args.command == "detect" and args.method == "ner" and args.threshold is None:
        print("error: --method ner needs --threshold", file=sys.stderr)
        return 2

    handlers = {
        "ingest": lambda: _cmd_ingest(args),
        "stats": lambda: _cmd_stats(args),
        "corrupt": lambda: _cmd_corrupt(args),
        "augment": lambda: _cmd_augment(args),
        "build": lambda: _cmd_build(args),
        "detect": lambda: _cmd_detect(args),
        "sweep": lambda: _cmd_sweep(args),
        "quantify": lambda: _cmd_quantify(args),
        "evaluate": lambda: _cmd_evaluate(args),
        "pipeline": lambda: _cmd_pipeline(args, args.json_errors),
    }
    try:
        return handlers[args.command]()
    except HalluAuditError as exc:
        if args.json_errors:
            payload = {"error": type(exc).__name__, "message": str(exc)}
            print(json.dumps(payload, sort_keys=True), file=sys.stderr)
        else:
            print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
