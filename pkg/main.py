#!/usr/bin/env python3
import os
import sys
import json
import time
import argparse

import yaml

import infra.config as config
import infra.logger as logger
from corpus.dataset import read_dual_base, write_dual_base
from corpus.fetcher import FIXTURE_ONLY, LIVE_WITH_CACHE, Fetcher, FetchPolicy
from corpus.ingest import ingest, select_entities
from evaluation.baseline import FixtureLinker, LookupLinker, align_baseline, read_baseline, read_mapping
from evaluation.breakdown import per_property_breakdown, write_breakdown
from evaluation.corrections import apply_corrections, read_corrections
from evaluation.scorer import read_predictions, score, summarize_folds
from evidence.distiller import distill_with_diagnostics
from graph.model import DEFAULT_PREFIXES, property_set
from graph.turtle import expand, format_iri, parse_turtle
from infra.errors import IoFailure, ShapeforgeError, ValidationError
from infra.manifest import RunManifest, spec_hash
from infra.storage import read_jsonl, read_text, write_json, write_jsonl
from linearize.exporter import ABSTRACT_KINDS, PLAIN, export_training_set
from linearize.weights import compute_weights
from rules.engine import FixtureLookup, RuleSet, parse_rules
from sampling.augment import STRATEGIES, augment_all, augment_template
from sampling.samplers import SampleSpec, sample
from sampling.stats import FrequencySplit, compute_stats, read_stats, split_by_frequency, write_stats, stats_to_tsv
from sampling.stratify import OTHER, Fold, Stratum, kfold, stratify
from shapes.shacl import parse_shape

PROG = "shapeforge"
AUGMENT_ALL = "all"


class _Parser(argparse.ArgumentParser):
    """Usage errors print the help text and exit with status 1."""

    def error(self, message):
        self.print_help(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _validate_env_for_live(settings: dict) -> bool:
    """Live mode talks to Wikimedia and DBpedia; both want a throttle and an identifying User-Agent."""
    problems = []
    if float(settings.get("rate_limit") or 0) <= 0:
        problems.append("SHAPEFORGE_RATE_LIMIT (or rate_limit in the config) must be > 0")
    if not config.USER_AGENT.strip():
        problems.append("SHAPEFORGE_USER_AGENT must identify this client")
    if problems:
        logger.error("❌ Live mode is not configured:")
        for p in problems:
            logger.error(f"   - {p}")
        return False
    return True


# --- settings ---

def _settings(args) -> dict:
    file_config = config.load_run_config(args.config)
    defaults = {
        "seed": 0,
        "jobs": 1,
        "rate_limit": config.RATE_LIMIT,
        "cache_dir": config.CACHE_DIR,
        "mode": FIXTURE_ONLY,
        "log_level": config.LOG_LEVEL,
    }
    flags = {
        "seed": args.seed,
        "jobs": args.jobs,
        "cache_dir": args.fixtures,
        "mode": LIVE_WITH_CACHE if args.live else None,
        "log_level": args.log_level,
    }
    settings = config.merge_settings({**defaults, **file_config}, flags)
    prefixes = dict(DEFAULT_PREFIXES)
    prefixes.update(file_config.get("prefixes") or {})
    settings["prefixes"] = prefixes
    return settings


def _policy(settings: dict) -> FetchPolicy:
    return FetchPolicy(mode=settings["mode"], rate_limit=float(settings["rate_limit"]),
                       cache_dir=settings["cache_dir"])


def _fetcher(settings: dict) -> Fetcher:
    policy = _policy(settings)
    if policy.live and not _validate_env_for_live(settings):
        raise ValidationError("Live mode requested without a usable configuration")
    return Fetcher(policy)


def _shape(path: str, prefixes: dict):
    return parse_shape(read_text(path), prefixes)


def _rules(path: str | None, prefixes: dict) -> RuleSet:
    return parse_rules(read_text(path), prefixes) if path else RuleSet(())


def _manifest(command: str, settings: dict, inputs: list) -> RunManifest:
    manifest = RunManifest(command, {k: v for k, v in settings.items()}, settings.get("seed"))
    for path in inputs:
        manifest.add_input(path)
    return manifest


def _finish(manifest: RunManifest, primary: str, outputs: list) -> None:
    for path in outputs:
        manifest.add_output(path)
    path = manifest.write(primary)
    logger.info(f"📝 Run manifest written to {path}")


# --- split / strata files ---

def _write_split(path: str, split: FrequencySplit, prefixes: dict) -> None:
    names = lambda props: sorted(format_iri(p, prefixes) for p in props)
    write_json(path, {"mu_p": split.mu_p, "frequent": names(split.frequent), "rare": names(split.rare)})


def _read_split(path: str, prefixes: dict) -> FrequencySplit:
    try:
        data = json.loads(read_text(path))
        return FrequencySplit(float(data["mu_p"]),
                              frozenset(expand(p, prefixes) for p in data["frequent"]),
                              frozenset(expand(p, prefixes) for p in data["rare"]))
    except (ValueError, KeyError, TypeError) as e:
        raise ValidationError(f"{path}: not a frequency split file ({e})")


def _label_name(label, prefixes: dict) -> str:
    return OTHER if label == OTHER else format_iri(label, prefixes)


def _label_value(name: str, prefixes: dict):
    return OTHER if name == OTHER else expand(name, prefixes)


def _read_strata(path: str, prefixes: dict) -> tuple:
    try:
        data = json.loads(read_text(path))
        strata = [Stratum(_label_value(st["label"], prefixes), tuple(st["members"])) for st in data["strata"]]
        folds = [Fold(frozenset(f["train"]), frozenset(f["validation"]), frozenset(f["test"]))
                 for f in data.get("folds", [])]
    except (ValueError, KeyError, TypeError) as e:
        raise ValidationError(f"{path}: not a strata file ({e})")
    return strata, folds, data.get("seed", 0)


def _example_ids(path: str) -> set:
    return {r.get("example_id") or r["entity"] for r in read_jsonl(path)}


# --- commands ---

def cmd_ingest(args, settings) -> int:
    prefixes = settings["prefixes"]
    kg = parse_turtle(read_text(args.kg), prefixes)
    target_class = expand(args.target_class, prefixes) if args.target_class else None
    entities = select_entities(kg, target_class, args.sample_size, int(settings["seed"]))
    logger.info(f"🔍 {len(entities)} entities selected from {args.kg}")

    manifest = _manifest("ingest", settings, [args.kg])
    fetcher = _fetcher(settings)
    examples, report = ingest(kg, entities, fetcher)
    write_dual_base(args.out, examples, prefixes)
    if report.missing or report.inconsistent:
        write_json(args.out + ".report.json", report.__dict__)
    logger.info(f"🌐 {fetcher.network_calls} network calls")
    _finish(manifest, args.out, [args.out])
    return 0


def cmd_distill(args, settings) -> int:
    prefixes = settings["prefixes"]
    shape = _shape(args.shape, prefixes)
    rules = _rules(args.rules, prefixes)
    base = read_dual_base(args.input, prefixes)
    manifest = _manifest("distill", settings, [args.shape, args.rules, args.input, args.aux])

    fetcher = _fetcher(settings)
    aux = FixtureLookup(parse_turtle(read_text(args.aux), prefixes)) if args.aux else fetcher
    examples, outcomes = distill_with_diagnostics(base, shape, rules, fetcher.policy, aux, fetcher.type_lookup,
                                                  int(settings["jobs"]))
    diagnostics = args.diagnostics or args.out + ".diagnostics.jsonl"
    write_dual_base(args.out, examples, prefixes)
    write_jsonl(diagnostics, (r for o in outcomes for r in o.records(prefixes)))
    _finish(manifest, args.out, [args.out, diagnostics])
    return 0


def cmd_stats(args, settings) -> int:
    prefixes = settings["prefixes"]
    shape = _shape(args.shape, prefixes)
    stats = compute_stats(read_dual_base(args.input, prefixes), shape)
    if not args.out:
        sys.stdout.write(stats_to_tsv(stats, prefixes))
        return 0
    manifest = _manifest("stats", settings, [args.input, args.shape])
    write_stats(args.out, stats, prefixes)
    _finish(manifest, args.out, [args.out])
    return 0


def cmd_split(args, settings) -> int:
    prefixes = settings["prefixes"]
    classification = read_stats(args.classification, prefixes)
    threshold = read_stats(args.threshold or args.classification, prefixes)
    split = split_by_frequency(classification, threshold)
    logger.info(f"📊 mu_p = {split.mu_p:.4f}; {len(split.frequent)} frequent, {len(split.rare)} rare properties")

    manifest = _manifest("split", settings, [args.classification, args.threshold])
    _write_split(args.out, split, prefixes)
    _finish(manifest, args.out, [args.out])
    return 0


def cmd_sample(args, settings) -> int:
    prefixes = settings["prefixes"]
    shape = _shape(args.shape, prefixes)
    try:
        spec_data = yaml.safe_load(read_text(args.spec)) or {}
    except yaml.YAMLError as e:
        raise ValidationError(f"{args.spec}: invalid sample spec ({e})")
    if not isinstance(spec_data, dict):
        raise ValidationError(f"{args.spec}: a sample spec is a key-value mapping")
    if args.seed is not None or "seed" not in spec_data:
        spec_data["seed"] = int(settings["seed"])
    if args.size is not None:
        spec_data["size"] = args.size
    exclude = set(spec_data.get("exclude") or ())
    for path in args.exclude or ():
        exclude |= _example_ids(path)
    spec_data["exclude"] = sorted(exclude)
    spec = SampleSpec.from_dict(spec_data)

    split = _read_split(args.split, prefixes) if args.split else None
    manifest = _manifest("sample", {**settings, "spec": spec.to_dict()}, [args.input, args.shape, args.spec,
                                                                            args.split, *(args.exclude or ())])
    selected = sample(read_dual_base(args.input, prefixes), spec, shape, split)
    write_dual_base(args.out, selected, prefixes)

    counts = {}
    for ex in selected:
        for p in property_set(ex.graph):
            name = format_iri(p, prefixes)
            counts[name] = counts.get(name, 0) + 1
    summary = args.out + ".manifest.json"
    write_json(summary, {"seed": spec.seed, "spec_hash": spec_hash(spec.to_dict()), "spec": spec.to_dict(),
                         "size": len(selected), "counts": counts})
    _finish(manifest, args.out, [args.out, summary])
    return 0


def cmd_stratify(args, settings) -> int:
    prefixes = settings["prefixes"]
    split = _read_split(args.split, prefixes)
    dataset = read_dual_base(args.input, prefixes)
    seed = int(settings["seed"])
    strata = stratify(dataset, split.rare, seed)
    folds = kfold(strata, args.k, seed)

    manifest = _manifest("stratify", settings, [args.input, args.split])
    write_json(args.out, {
        "seed": seed,
        "k": args.k,
        "layout": "test=fold f, validation=fold f+1, train=rest",
        "strata": [{"label": _label_name(st.label, prefixes), "members": list(st.members)} for st in strata],
        "folds": [{"train": sorted(f.train), "validation": sorted(f.validation), "test": sorted(f.test)}
                  for f in folds],
    })
    _finish(manifest, args.out, [args.out])
    return 0


def cmd_augment(args, settings) -> int:
    prefixes = settings["prefixes"]
    target = expand(args.property, prefixes)
    base = read_dual_base(args.base, prefixes)
    dataset = read_dual_base(args.input, prefixes)
    manifest = _manifest("augment", settings, [args.base, args.input, args.shape])

    if args.strategy == AUGMENT_ALL:
        augmented = augment_all(base, dataset, target)
    else:
        if args.threshold is None:
            raise ValidationError(f"--threshold is required with strategy {args.strategy}")
        shape = _shape(args.shape, prefixes) if args.shape else None
        augmented = augment_template(base, dataset, target, args.threshold, args.strategy,
                                     int(settings["seed"]), shape)
    write_dual_base(args.out, augmented, prefixes)
    _finish(manifest, args.out, [args.out])
    return 0


def cmd_weights(args, settings) -> int:
    prefixes = settings["prefixes"]
    strata, _, _ = _read_strata(args.strata, prefixes)
    weights = compute_weights(strata)
    manifest = _manifest("weights", settings, [args.strata])
    write_json(args.out, {_label_name(label, prefixes): w for label, w in weights.items()})
    _finish(manifest, args.out, [args.out])
    return 0


def cmd_export(args, settings) -> int:
    prefixes = settings["prefixes"]
    strata, folds, seed = _read_strata(args.strata, prefixes)
    if not folds:
        raise ValidationError(f"{args.strata} holds no folds")
    raw_weights = json.loads(read_text(args.weights)) if args.weights else None
    weights = ({_label_value(k, prefixes): float(v) for k, v in raw_weights.items()}
               if raw_weights is not None else compute_weights(strata))

    manifest = _manifest("export", settings, [args.input, args.strata, args.weights])
    spec = {"strata": spec_hash({"strata": [[str(st.label), list(st.members)] for st in strata]}),
            "k": len(folds), "abstract_kind": args.abstract_kind}
    paths = export_training_set(read_dual_base(args.input, prefixes), strata, weights, folds, args.out_dir,
                                prefixes, args.abstract_kind, seed, spec)
    _finish(manifest, args.out_dir, paths)
    return 0


def _predictions(args, settings, shape, path: str) -> list:
    prefixes = settings["prefixes"]
    if not args.baseline_map:
        return read_predictions(path, prefixes)
    fetcher = _fetcher(settings)
    linker = FixtureLinker.from_csv(args.linker, prefixes) if args.linker else LookupLinker(fetcher)
    aux = FixtureLookup(parse_turtle(read_text(args.aux), prefixes)) if args.aux else fetcher
    preds, _ = align_baseline(read_baseline(path), read_mapping(args.baseline_map, prefixes), linker,
                              _rules(args.rules, prefixes), aux, shape, prefixes)
    return preds


def _evaluate(args, settings, corrections_path: str | None) -> int:
    prefixes = settings["prefixes"]
    shape = _shape(args.shape, prefixes)
    gold = read_dual_base(args.gold, prefixes)
    corrections = read_corrections(corrections_path, prefixes) if corrections_path else None
    inputs = [args.gold, args.shape, corrections_path, args.baseline_map, args.linker, args.rules, *args.pred]
    manifest = _manifest(args.command, settings, inputs)

    reports = []
    for path in args.pred:
        report = score(gold, _predictions(args, settings, shape, path), shape)
        if corrections is not None:
            report = apply_corrections(report, corrections)
        reports.append(report)

    if len(reports) == 1:
        output = reports[0].to_dict(prefixes)
    else:
        output = {"folds": [r.to_dict(prefixes) for r in reports], "summary": summarize_folds(reports)}
    write_json(args.out, output)

    base, _ = os.path.splitext(args.out)
    model = args.model or os.path.splitext(os.path.basename(args.pred[0]))[0]
    names = [model] if len(reports) == 1 else [f"{model}-fold{i}" for i in range(len(reports))]
    rows = per_property_breakdown(dict(zip(names, reports)), prefixes)
    tsv_path, plot_path = base + ".properties.tsv", base + ".plot.json"
    write_breakdown(tsv_path, plot_path, rows)
    _finish(manifest, args.out, [args.out, tsv_path, plot_path])
    return 0


def cmd_evaluate(args, settings) -> int:
    return _evaluate(args, settings, args.corrections)


# --- parser ---

def _add_common(p) -> None:
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--jobs", type=int, help="worker threads for parallel-safe stages")
    p.add_argument("--fixtures", metavar="DIR", help="response cache / fixture directory")
    p.add_argument("--live", action="store_true", help="fetch cache misses over HTTP")
    p.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING or ERROR")


def _add_eval_args(p, corrections_required: bool) -> None:
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True, action="append", help="prediction file, repeat once per fold")
    p.add_argument("--shape", required=True)
    p.add_argument("--corrections", required=corrections_required, help="CSV: entity,triple-ttl,class,verdict")
    p.add_argument("--baseline-map", dest="baseline_map", help="CSV: label,property; --pred files are baseline output")
    p.add_argument("--linker", help="CSV: text,iri (offline entity linking for the baseline)")
    p.add_argument("--rules", help="rule file used to enrich baseline output")
    p.add_argument("--aux", help="Turtle file backing PROPAGATE lookups")
    p.add_argument("--model", help="model name in the per-property breakdown")
    p.add_argument("--out", required=True, help="report JSON")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=PROG, description="Shape-guided relation-extraction dataset toolkit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("ingest", help="build the dual base from a KG and Wikipedia abstracts")
    p.add_argument("--kg", required=True, help="Turtle file with the entity descriptions")
    p.add_argument("--class", dest="target_class", default="dbo:Person")
    p.add_argument("--sample-size", dest="sample_size", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_ingest)

    p = sub.add_parser("distill", help="rule closure, shape restriction and evidence filtering")
    p.add_argument("--shape", required=True)
    p.add_argument("--rules")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--aux", help="Turtle file backing PROPAGATE lookups")
    p.add_argument("--diagnostics")
    p.set_defaults(handler=cmd_distill)

    p = sub.add_parser("stats", help="per-property triple counts and frequencies")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--shape", required=True)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_stats)

    p = sub.add_parser("split", help="frequent/rare property split")
    p.add_argument("--classification", required=True, help="stats TSV used to classify properties")
    p.add_argument("--threshold", help="stats TSV whose mean frequency is the threshold")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_split)

    p = sub.add_parser("sample", help="draw a dataset from a sample spec")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--shape", required=True)
    p.add_argument("--spec", required=True, help="JSON or YAML sample spec")
    p.add_argument("--split", help="frequency split JSON")
    p.add_argument("--size", type=int)
    p.add_argument("--exclude", action="append", help="dataset whose examples may not be drawn")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_sample)

    p = sub.add_parser("stratify", help="rare-property strata and k folds")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_stratify)

    p = sub.add_parser("augment", help="template-based or use-all augmentation")
    p.add_argument("--base", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--property", required=True)
    p.add_argument("--strategy", choices=STRATEGIES + (AUGMENT_ALL,), default="KR0")
    p.add_argument("--threshold", type=int)
    p.add_argument("--shape")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_augment)

    p = sub.add_parser("weights", help="loss weight per stratum")
    p.add_argument("--strata", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_weights)

    p = sub.add_parser("export", help="trainer-ready JSON Lines per fold")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--strata", required=True)
    p.add_argument("--weights")
    p.add_argument("--abstract", dest="abstract_kind", choices=ABSTRACT_KINDS, default=PLAIN)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(handler=cmd_export)

    p = sub.add_parser("evaluate", help="strict micro/macro F1 of predicted graphs")
    _add_eval_args(p, corrections_required=False)
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("correct", help="score with an annotator correction overlay")
    _add_eval_args(p, corrections_required=True)
    p.set_defaults(handler=cmd_evaluate)

    for action in sub.choices.values():
        _add_common(action)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 1
    if not getattr(args, "handler", None):
        parser.print_help(sys.stderr)
        return 1

    start = time.monotonic()
    try:
        settings = _settings(args)
        logger.configure(settings["log_level"], command=args.command)
        logger.info(f"🚀 {PROG} {args.command}")
        code = args.handler(args, settings)
        logger.info(f"✅ {args.command} finished in {logger.elapsed(start)}")
        return code
    except ShapeforgeError as e:
        logger.error(f"❌ {e}")
        return e.exit_code
    except OSError as e:
        logger.error(f"❌ {IoFailure(str(e))}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
