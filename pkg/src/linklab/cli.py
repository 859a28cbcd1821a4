"""Command line driver for batch linkage, evaluation, and profiling runs.

Every subcommand reads its inputs, writes its artifacts under ``--out``,
prints a one line summary, and drops a ``run_manifest.json`` recording
inputs, flags, seed, versions, and checksums so a run can be audited and
reproduced. Inputs are never modified.

Exit codes: 0 success, 2 usage error, 3 missing input, 4 input format
violation, 5 evaluation or configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import sys
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from ._tsv import open_text_read, write_rows
from .baseline import cluster_aini, cluster_fini, corpus_names, build_blocks, unparseable_count
from .corpus import (
    CLUSTERING_COLUMNS,
    ingest_annotations,
    ingest_authority,
    ingest_citations,
    ingest_clustering,
    ingest_corpus,
    ingest_grants,
    write_clustering,
)
from .errors import ConfigError, EvaluationError, IngestError, ParseError
from .linkage import (
    EVAL_COLUMNS,
    LABELS_COLUMNS,
    EvalRow,
    extract_selfcitation_pairs,
    join_labels,
    label_agreement,
    link_authority,
    link_grants,
    read_eval_dataset,
    read_labels,
    read_pairs,
    write_conflicts,
    write_eval_dataset,
    write_labels,
    write_pairs,
)
from .linkage import DUP_TITLE_POLICIES
from .metrics import b3_scores, pair_accuracy_detail, stratified_eval, write_metrics_json, STRATA
from .profile import (
    ATTRIBUTES,
    block_size_ccdf,
    classify_synonym_types,
    distribution,
    pair_year_distribution,
    perturb_tags,
    reference_sample,
    write_ccdf,
    write_distribution,
    write_typology,
)
from .synth import SynthConfig, generate, write_bundle

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING_INPUT = 3
EXIT_FORMAT = 4
EXIT_EVALUATION = 5

THREADS_ENV = "LINKLAB_THREADS"

MANIFEST_NAME = "run_manifest.json"


def thread_cap() -> int:
    """Worker cap for internal parallelism, set by LINKLAB_THREADS."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return max(1, min(4, os.cpu_count() or 1))
    if not raw.isdigit() or int(raw) < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return int(raw)


def _ingest_all(jobs: Sequence[tuple[str, Callable[[], object]]]) -> dict[str, object]:
    """Run independent ingest jobs, concurrently when allowed.

    Results are keyed by job name, so the worker count never affects
    output content.
    """
    cap = thread_cap()
    if len(jobs) <= 1 or cap == 1:
        return {name: job() for name, job in jobs}
    with ThreadPoolExecutor(max_workers=min(cap, len(jobs))) as pool:
        futures = [(name, pool.submit(job)) for name, job in jobs]
        return {name: future.result() for name, future in futures}


def _require(path: Path) -> Path:
    if not path.is_file():
        raise FileNotFoundError(str(path))
    return path


def _prepare_out(out: Path) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    return out


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _flags(args: argparse.Namespace) -> dict:
    # the output directory is where the manifest itself lives; omitting it
    # keeps identical runs into different directories byte-identical
    skip = {"func", "parser", "subcommand", "out"}
    flags = {}
    for key, value in vars(args).items():
        if key in skip:
            continue
        flags[key] = str(value) if isinstance(value, Path) else value
    return flags


def _finish(
    args: argparse.Namespace,
    inputs: Sequence[Path],
    outputs: Sequence[Path],
    summary: str,
) -> int:
    manifest = {
        "subcommand": args.subcommand,
        "flags": _flags(args),
        "seed": getattr(args, "seed", None),
        "versions": {"linklab": __version__, "python": platform.python_version()},
        "inputs": {
            str(path): {"sha256": _sha256(path), "bytes": path.stat().st_size}
            for path in inputs
        },
        "outputs": {
            path.name: {"sha256": _sha256(path), "bytes": path.stat().st_size}
            for path in outputs
        },
    }
    manifest_path = args.out / MANIFEST_NAME
    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(summary)
    return EXIT_OK


def _sniff_header(path: Path) -> tuple[str, ...]:
    with open_text_read(path) as handle:
        return tuple(handle.readline().rstrip("\n").split("\t"))


def cmd_link_authority(args: argparse.Namespace) -> int:
    _require(args.papers)
    _require(args.authority)
    data = _ingest_all(
        [
            ("corpus", lambda: ingest_corpus(args.papers)),
            ("registry", lambda: ingest_authority(args.authority)),
        ]
    )
    result = link_authority(
        data["corpus"],
        data["registry"],
        dup_title_policy=args.dup_title_policy,
        nonalpha=args.nonalpha,
    )
    out = _prepare_out(args.out)
    labels_path = out / "labels.tsv"
    conflicts_path = out / "conflicts.tsv"
    write_labels(labels_path, result.labels)
    write_conflicts(conflicts_path, result.conflicts)
    summary = (
        "link-authority: labels=%d conflicts=%d papers=%d profiles=%d candidates=%d"
        % (
            len(result.labels),
            len(result.conflicts),
            result.stats["papers"],
            result.stats["profiles"],
            result.stats["candidates"],
        )
    )
    return _finish(args, [args.papers, args.authority], [labels_path, conflicts_path], summary)


def cmd_link_grants(args: argparse.Namespace) -> int:
    _require(args.papers)
    _require(args.grants)
    data = _ingest_all(
        [
            ("corpus", lambda: ingest_corpus(args.papers)),
            ("grants", lambda: ingest_grants(args.grants)),
        ]
    )
    result = link_grants(data["corpus"], data["grants"])
    out = _prepare_out(args.out)
    labels_path = out / "labels.tsv"
    conflicts_path = out / "conflicts.tsv"
    write_labels(labels_path, result.labels)
    write_conflicts(conflicts_path, result.conflicts)
    summary = "link-grants: labels=%d conflicts=%d grants=%d funded_in_corpus=%d" % (
        len(result.labels),
        len(result.conflicts),
        result.stats["grants"],
        result.stats["funded_pmids_in_corpus"],
    )
    return _finish(args, [args.papers, args.grants], [labels_path, conflicts_path], summary)


def cmd_pairs(args: argparse.Namespace) -> int:
    _require(args.papers)
    _require(args.citations)
    data = _ingest_all(
        [
            ("corpus", lambda: ingest_corpus(args.papers)),
            ("citations", lambda: ingest_citations(args.citations)),
        ]
    )
    pairs = extract_selfcitation_pairs(data["corpus"], data["citations"])
    out = _prepare_out(args.out)
    pairs_path = out / "pairs.tsv"
    write_pairs(pairs_path, pairs)
    summary = "pairs: pairs=%d edges=%d" % (len(pairs.pairs), len(data["citations"]))
    return _finish(args, [args.papers, args.citations], [pairs_path], summary)


def cmd_baseline(args: argparse.Namespace) -> int:
    _require(args.papers)
    corpus = ingest_corpus(args.papers)
    names = list(corpus_names(corpus))
    clustering = cluster_fini(names) if args.method == "fini" else cluster_aini(names)
    out = _prepare_out(args.out)
    clustering_path = out / "clustering.tsv"
    write_clustering(clustering_path, clustering)
    summary = "baseline: method=%s clusters=%d instances=%d unparseable=%d" % (
        args.method,
        clustering.n_clusters,
        clustering.n_instances,
        unparseable_count(clustering),
    )
    return _finish(args, [args.papers], [clustering_path], summary)


def _evaluate_pairs(args: argparse.Namespace) -> int:
    _require(args.pairs)
    _require(args.pred)
    data = _ingest_all(
        [
            ("pairs", lambda: read_pairs(args.pairs)),
            ("pred", lambda: ingest_clustering(args.pred)),
        ]
    )
    detail = pair_accuracy_detail(data["pairs"], data["pred"])
    out = _prepare_out(args.out)
    metrics_path = out / "metrics.json"
    payload = {
        "pair_accuracy": detail.accuracy,
        "evaluated": detail.evaluated,
        "dropped": detail.dropped,
    }
    metrics_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    summary = "evaluate: pair_accuracy=%.6f evaluated=%d dropped=%d" % (
        detail.accuracy,
        detail.evaluated,
        detail.dropped,
    )
    return _finish(args, [args.pairs, args.pred], [metrics_path], summary)


def _evaluate_labels(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.papers is None:
        parser.error("evaluate with a labels file needs --papers for the join")
    _require(args.papers)
    jobs = [
        ("labels", lambda: read_labels(args.truth)),
        ("pred", lambda: ingest_clustering(args.pred)),
        ("corpus", lambda: ingest_corpus(args.papers)),
    ]
    inputs = [args.truth, args.pred, args.papers]
    if args.annotations is not None:
        _require(args.annotations)
        jobs.append(("annotations", lambda: ingest_annotations(args.annotations)))
        inputs.append(args.annotations)
    data = _ingest_all(jobs)
    dataset = join_labels(
        data["labels"],
        data["pred"],
        data["corpus"],
        data.get("annotations"),
        strict=args.strict,
    )
    out = _prepare_out(args.out)
    dataset_path = out / "eval_dataset.tsv"
    write_eval_dataset(dataset_path, dataset)
    metrics_path = out / "metrics.json"
    if args.stratum is not None:
        strata = stratified_eval(dataset, args.stratum)
        overall = strata["ALL"]
        write_metrics_json(
            metrics_path, overall, {k: v for k, v in strata.items() if k != "ALL"}
        )
    else:
        overall = b3_scores(dataset.truth_clustering(), dataset.predicted_clustering())
        write_metrics_json(metrics_path, overall)
    summary = (
        "evaluate: recall=%.6f precision=%.6f f1=%.6f n=%d"
        " dropped_unclustered=%d dropped_missing_paper=%d"
        % (
            overall.recall,
            overall.precision,
            overall.f1,
            overall.n,
            dataset.dropped_unclustered,
            dataset.dropped_missing_paper,
        )
    )
    return _finish(args, inputs, [dataset_path, metrics_path], summary)


def _evaluate_clusterings(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.stratum is not None:
        parser.error("--stratum needs a labels file as --truth (attributes come from the join)")
    data = _ingest_all(
        [
            ("truth", lambda: ingest_clustering(args.truth)),
            ("pred", lambda: ingest_clustering(args.pred)),
        ]
    )
    scores = b3_scores(data["truth"], data["pred"], strict=args.strict)
    out = _prepare_out(args.out)
    metrics_path = out / "metrics.json"
    write_metrics_json(metrics_path, scores)
    summary = "evaluate: recall=%.6f precision=%.6f f1=%.6f n=%d dropped=%d" % (
        scores.recall,
        scores.precision,
        scores.f1,
        scores.n,
        scores.dropped,
    )
    return _finish(args, [args.truth, args.pred], [metrics_path], summary)


def cmd_evaluate(args: argparse.Namespace) -> int:
    parser: argparse.ArgumentParser = args.parser
    if args.pairs is not None:
        return _evaluate_pairs(args)
    _require(args.truth)
    _require(args.pred)
    header = _sniff_header(args.truth)
    if header == LABELS_COLUMNS:
        return _evaluate_labels(args, parser)
    if header == CLUSTERING_COLUMNS:
        return _evaluate_clusterings(args, parser)
    raise IngestError(
        "truth file header matches neither a labels nor a clustering file",
        path=args.truth,
    )


def cmd_profile(args: argparse.Namespace) -> int:
    parser: argparse.ArgumentParser = args.parser
    if args.eval is None and args.papers is None:
        parser.error("profile needs --eval and/or --papers")
    for flag, name in ((args.truth, "--truth"), (args.pairs, "--pairs")):
        if flag is not None and args.papers is None:
            parser.error(f"profile {name} needs --papers")
    if args.sample is not None:
        if args.papers is None:
            parser.error("profile --sample needs --papers")
        if args.seed is None:
            parser.error("profile --sample needs --seed (no hidden entropy)")

    jobs = []
    inputs = []
    if args.eval is not None:
        _require(args.eval)
        jobs.append(("eval", lambda: read_eval_dataset(args.eval)))
        inputs.append(args.eval)
    if args.papers is not None:
        _require(args.papers)
        jobs.append(("corpus", lambda: ingest_corpus(args.papers)))
        inputs.append(args.papers)
    if args.truth is not None:
        _require(args.truth)
        jobs.append(("truth", lambda: ingest_clustering(args.truth)))
        inputs.append(args.truth)
    if args.pairs is not None:
        _require(args.pairs)
        jobs.append(("pairs", lambda: read_pairs(args.pairs)))
        inputs.append(args.pairs)
    data = _ingest_all(jobs)

    out = _prepare_out(args.out)
    outputs = []
    if args.eval is not None:
        for attribute in ATTRIBUTES:
            path = out / f"dist_{attribute}.tsv"
            write_distribution(path, {"percent": distribution(data["eval"], attribute)})
            outputs.append(path)
    if args.papers is not None:
        names = list(corpus_names(data["corpus"]))
        path = out / "ccdf.tsv"
        write_ccdf(path, {"fraction_at_least": block_size_ccdf(build_blocks(names))})
        outputs.append(path)
    if args.truth is not None:
        path = out / "typology.tsv"
        write_typology(path, classify_synonym_types(data["truth"], dict(names)))
        outputs.append(path)
    if args.pairs is not None:
        path = out / "dist_pair_year.tsv"
        write_distribution(
            path, {"percent": pair_year_distribution(data["pairs"], data["corpus"])}
        )
        outputs.append(path)
    if args.sample is not None:
        sample = reference_sample(data["corpus"].instances(), args.sample, args.seed)
        path = out / "sample.tsv"
        write_rows(path, ("instance_id",), [(str(i),) for i in sorted(sample)])
        outputs.append(path)
    summary = "profile: wrote %s" % ",".join(sorted(path.name for path in outputs))
    return _finish(args, inputs, outputs, summary)


def cmd_perturb(args: argparse.Namespace) -> int:
    _require(args.eval)
    dataset = read_eval_dataset(args.eval)
    perturbed = perturb_tags(dataset, args.fraction, args.seed)
    changed = sum(
        1
        for before, after in zip(dataset, perturbed)
        if before.ethnicity != after.ethnicity
    )
    out = _prepare_out(args.out)
    dataset_path = out / "eval_dataset.tsv"
    write_eval_dataset(dataset_path, perturbed)
    summary = "perturb: rows=%d changed=%d fraction=%g" % (
        len(perturbed),
        changed,
        args.fraction,
    )
    return _finish(args, [args.eval], [dataset_path], summary)


def _agreement_rows(path: Path) -> list[EvalRow]:
    """Load either a labels file or an eval dataset as comparison rows."""
    header = _sniff_header(path)
    if header == LABELS_COLUMNS:
        return [
            EvalRow(label.instance, label.label_id, "", 0, None, None)
            for label in read_labels(path)
        ]
    if header == EVAL_COLUMNS:
        return list(read_eval_dataset(path))
    raise IngestError(
        "agreement input header matches neither a labels nor an eval dataset file",
        path=path,
    )


def cmd_agree(args: argparse.Namespace) -> int:
    _require(args.a)
    _require(args.b)
    data = _ingest_all(
        [
            ("a", lambda: _agreement_rows(args.a)),
            ("b", lambda: _agreement_rows(args.b)),
        ]
    )
    report = label_agreement(data["a"], data["b"])
    out = _prepare_out(args.out)
    disagreements_path = out / "disagreements.tsv"
    write_rows(
        disagreements_path,
        ("instance_id", "label_a", "label_b"),
        [
            (str(instance), label_a, label_b)
            for instance, label_a, label_b in report.disagreements
        ],
    )
    report_path = out / "agreement.json"
    payload = {
        "overlap": report.overlap_count,
        "agree": report.agree_count,
        "disagreements": len(report.disagreements),
    }
    report_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    summary = "agree: overlap=%d agree=%d disagreements=%d" % (
        report.overlap_count,
        report.agree_count,
        len(report.disagreements),
    )
    return _finish(args, [args.a, args.b], [disagreements_path, report_path], summary)


def _load_synth_config(path: Path | None, seed: int) -> SynthConfig:
    if path is None:
        return SynthConfig(seed=seed)
    _require(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise IngestError(f"invalid JSON: {exc}", path=path)
    if not isinstance(raw, dict):
        raise IngestError("config must be a JSON object", path=path)
    if "seed" in raw:
        raise ConfigError("the seed comes from --seed, not the config file")
    allowed = set(SynthConfig.__dataclass_fields__)
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError("unknown config fields: " + ", ".join(unknown))
    for key in ("papers_per_author", "year_range"):
        if key in raw:
            if not isinstance(raw[key], list):
                raise ConfigError(f"{key} must be a two-element list")
            raw[key] = tuple(raw[key])
    return SynthConfig(seed=seed, **raw)


def cmd_synth(args: argparse.Namespace) -> int:
    config = _load_synth_config(args.config, args.seed)
    bundle = generate(config)
    out = _prepare_out(args.out)
    write_bundle(bundle, out)
    outputs = [out / name for name in sorted(os.listdir(out)) if name != MANIFEST_NAME]
    summary = "synth: authors=%d papers=%d instances=%d" % (
        bundle.manifest["authors"],
        bundle.manifest["papers"],
        bundle.manifest["instances"],
    )
    inputs = [args.config] if args.config is not None else []
    return _finish(args, inputs, outputs, summary)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linklab",
        description="Construct, evaluate, and profile author name disambiguation truth data.",
    )
    parser.add_argument("--version", action="version", version=f"linklab {__version__}")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)

    def add(name: str, func, help_text: str) -> argparse.ArgumentParser:
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--out", type=Path, required=True, help="output directory")
        sub.set_defaults(func=func, parser=sub)
        return sub

    sub = add("link-authority", cmd_link_authority, "label instances from a registry of profiles")
    sub.add_argument("--papers", type=Path, required=True)
    sub.add_argument("--authority", type=Path, required=True)
    sub.add_argument(
        "--dup-title-policy",
        choices=DUP_TITLE_POLICIES,
        default="drop-all",
        help="how to treat papers whose normalized titles collide",
    )
    sub.add_argument(
        "--nonalpha",
        choices=("delete", "space"),
        default="delete",
        help="drop non-letters inside title words, or break words there",
    )

    sub = add("link-grants", cmd_link_grants, "label instances from funded grants")
    sub.add_argument("--papers", type=Path, required=True)
    sub.add_argument("--grants", type=Path, required=True)

    sub = add("pairs", cmd_pairs, "extract self-citation instance pairs")
    sub.add_argument("--papers", type=Path, required=True)
    sub.add_argument("--citations", type=Path, required=True)

    sub = add("baseline", cmd_baseline, "cluster instances by name key")
    sub.add_argument("--papers", type=Path, required=True)
    sub.add_argument("--method", choices=("fini", "aini"), required=True)

    sub = add("evaluate", cmd_evaluate, "score a predicted clustering")
    sub.add_argument("--truth", type=Path, help="labels file or clustering file")
    sub.add_argument("--pairs", type=Path, help="positive pairs file (pair accuracy mode)")
    sub.add_argument("--pred", type=Path, required=True, help="predicted clustering file")
    sub.add_argument("--papers", type=Path, help="corpus, required when --truth is a labels file")
    sub.add_argument("--annotations", type=Path, help="instance attribute tags")
    sub.add_argument("--stratum", choices=STRATA, help="report scores per attribute value")
    sub.add_argument("--strict", action="store_true", help="fail on incomplete inputs instead of dropping")

    sub = add("profile", cmd_profile, "emit distribution, block size, and typology plot data")
    sub.add_argument("--eval", type=Path, help="eval dataset for attribute distributions")
    sub.add_argument("--papers", type=Path, help="corpus for block sizes and name forms")
    sub.add_argument("--truth", type=Path, help="truth clustering for the variant typology")
    sub.add_argument("--pairs", type=Path, help="pairs file for the pair year distribution")
    sub.add_argument("--sample", type=int, help="write a uniform reference sample of this size")
    sub.add_argument("--seed", type=int, help="sampling seed, required with --sample")

    sub = add("perturb", cmd_perturb, "randomly reassign a fraction of ethnicity tags")
    sub.add_argument("--eval", type=Path, required=True)
    sub.add_argument("--fraction", type=float, required=True)
    sub.add_argument("--seed", type=int, required=True)

    sub = add("agree", cmd_agree, "compare two labelings on shared instances")
    sub.add_argument("--a", type=Path, required=True, help="labels or eval dataset file")
    sub.add_argument("--b", type=Path, required=True, help="labels or eval dataset file")

    sub = add("synth", cmd_synth, "generate a synthetic bundle with known truth")
    sub.add_argument("--seed", type=int, required=True)
    sub.add_argument("--config", type=Path, help="JSON file of generator settings")

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except SystemExit as exc:
        # conditional flag validation reported through the subparser
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"linklab: missing input: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except (IngestError, ParseError) as exc:
        print(f"linklab: format violation: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (EvaluationError, ConfigError, ValueError) as exc:
        print(f"linklab: {exc}", file=sys.stderr)
        return EXIT_EVALUATION


if __name__ == "__main__":
    sys.exit(main())
