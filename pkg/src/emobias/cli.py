"""Command-line pipeline: ingest -> analyze -> index -> select -> serve ->
merge -> evaluate -> report.

Every command writes its artifacts plus a run manifest into the output
directory. Identical inputs and seed produce byte-identical artifacts;
wall-clock data lives only in the manifest. Exit codes: 0 success,
1 validation error, 2 I/O error, 3 internal invariant violation.
"""

from __future__ import annotations

import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import click
import yaml

from . import bias as bias_mod
from . import corpus as corpus_mod
from . import features as features_mod
from . import knn as knn_mod
from . import metrics as metrics_mod
from . import selection as selection_mod
from . import spectrum as spectrum_mod
from .store import AnnotationStore, StoreError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_INTERNAL = 3


class _Run:
    """Collects manifest data for one command invocation."""

    def __init__(self, command: str, out_dir: Path, seed: int | None, params: dict):
        self.command = command
        self.out_dir = out_dir
        self.seed = seed
        self.params = params
        self.inputs: dict[str, dict] = {}
        self.outputs: list[str] = []
        self.started = time.time()

    def add_input(self, role: str, path: str | Path) -> Path:
        path = Path(path)
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.inputs[role] = {"path": str(path), "sha256": digest}
        return path

    def artifact(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.outputs.append(name)
        return self.out_dir / name

    def finish(self) -> None:
        config_hash = hashlib.sha256(
            json.dumps(self.params, sort_keys=True, default=str).encode()
        ).hexdigest()
        manifest = {
            "command": self.command,
            "params": self.params,
            "config_hash": config_hash,
            "seed": self.seed,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "started_at": self.started,
            "duration_seconds": time.time() - self.started,
        }
        self.out_dir.mkdir(parents=True, exist_ok=True)
        with open(self.out_dir / f"{self.command}-manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        loaded = yaml.safe_load(fh)
    if loaded is None:
        return {}
    if not isinstance(loaded, dict):
        raise click.ClickException("config file must hold a mapping")
    return loaded


def _cfg(config: dict, *keys, default=None):
    node = config
    for key in keys:
        if not isinstance(node, dict) or key not in node:
            return default
        node = node[key]
    return node


def _load_index(index_path: str | None, features_path: str | None):
    if index_path:
        index = knn_mod.load_index_cache(index_path)
        if index is None:
            raise click.ClickException(f"index cache {index_path} is invalid")
        return index
    if features_path:
        return knn_mod.build_index(features_mod.read_features(features_path))
    raise click.ClickException("either --index or --features is required")


@click.group()
def cli():
    """Emotional-bias curation pipeline for affective captioning corpora."""


@cli.command()
@click.option("--annotations", required=True, type=click.Path())
@click.option("--source", type=click.Choice(["original", "contrastive"]), default="original")
@click.option("--features", "features_path", type=click.Path())
@click.option("--config", "config_path", type=click.Path())
@click.option("--out", required=True, type=click.Path())
def ingest(annotations, source, features_path, config_path, out):
    """Parse an annotation CSV (and optional feature file) into a corpus."""
    config = _load_config(config_path)
    run = _Run("ingest", Path(out), None, {"source": source})
    run.add_input("annotations", annotations)
    column_map = _cfg(config, "columns", default=None)
    corpus, skipped = corpus_mod.ingest_annotations(
        annotations, source_tag=source, columns=column_map
    )
    unmatched: list[str] = []
    if features_path:
        run.add_input("features", features_path)
        feats = features_mod.read_features(features_path)
        corpus, unmatched = corpus_mod.attach_features(corpus, feats)
    corpus_mod.export_jsonl(corpus, run.artifact("corpus.jsonl"))
    with open(run.artifact("skipped_rows.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["line_number", "reason"])
        for row in skipped:
            writer.writerow([row.line_number, row.reason])
    run.params.update(
        {
            "annotation_count": corpus.annotation_count,
            "painting_count": len(corpus.paintings),
            "skipped_rows": len(skipped),
            "unmatched_feature_ids": len(unmatched),
        }
    )
    run.finish()
    click.echo(
        f"ingested {corpus.annotation_count} annotations over "
        f"{len(corpus.paintings)} paintings ({len(skipped)} rows skipped)"
    )


@cli.command("build-index")
@click.option("--features", "features_path", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
def build_index(features_path, out):
    """Build the exact-kNN index cache from a feature file."""
    run = _Run("build-index", Path(out), None, {})
    run.add_input("features", features_path)
    index = knn_mod.build_index(features_mod.read_features(features_path))
    knn_mod.write_index_cache(index, run.artifact("index.afvi"))
    run.params.update({"vectors": len(index), "dim": index.dim})
    run.finish()
    click.echo(f"indexed {len(index)} vectors of dimension {index.dim}")


@cli.command("analyze-bias")
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--index", "index_path", type=click.Path())
@click.option("--features", "features_path", type=click.Path())
@click.option("--threshold", type=float, default=None)
@click.option("--k-min", type=int, default=None)
@click.option("--k-max", type=int, default=None)
@click.option("--entropy-k", type=int, multiple=True)
@click.option("--tagged", "tagged_path", type=click.Path(),
              help="tagged-token JSONL for POS statistics")
@click.option("--config", "config_path", type=click.Path())
@click.option("--out", required=True, type=click.Path())
def analyze_bias(corpus_path, index_path, features_path, threshold, k_min, k_max,
                 entropy_k, tagged_path, config_path, out):
    """Full bias diagnostics: scores, biased set, distributions, neighborhoods."""
    config = _load_config(config_path)
    threshold = threshold if threshold is not None else _cfg(
        config, "selector", "threshold", default=bias_mod.BIAS_THRESHOLD)
    k_min = k_min if k_min is not None else _cfg(config, "analysis", "k_min", default=2)
    k_max = k_max if k_max is not None else _cfg(config, "analysis", "k_max", default=10)
    entropy_ks = list(entropy_k) or _cfg(config, "analysis", "entropy_ks", default=[20])

    run = _Run("analyze-bias", Path(out), None,
               {"threshold": threshold, "k_min": k_min, "k_max": k_max,
                "entropy_ks": list(entropy_ks)})
    run.add_input("corpus", corpus_path)
    corpus = corpus_mod.load_jsonl(corpus_path)
    index = None
    if index_path or features_path:
        index = _load_index(index_path, features_path)
        run.add_input("index", index_path or features_path)
    report = bias_mod.analyze(
        corpus,
        index=index,
        threshold=threshold,
        ratio_k_range=range(k_min, k_max + 1),
        entropy_ks=entropy_ks,
    )
    if tagged_path:
        from dataclasses import asdict

        from .postags import load_tagged_captions

        run.add_input("tagged", tagged_path)
        captions = [tokens for _pid, tokens in load_tagged_captions(tagged_path)]
        report.metadata["pos_stats"] = asdict(bias_mod.pos_statistics(captions))
    bias_mod.write_report_json(report, run.artifact("bias_report.json"))
    bias_mod.write_scores_csv(report, run.artifact("scores.csv"))
    with open(run.artifact("ratio_by_k.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "similar_sentiment_ratio"])
        for k in sorted(report.neighborhood_ratio):
            writer.writerow([k, f"{report.neighborhood_ratio[k]:.6f}"])
    run.finish()
    click.echo(
        f"{len(report.biased_ids)} biased paintings, "
        f"{len(report.single_sentiment_ids)} single-sentiment, sentiment "
        f"split {', '.join(f'{k}={v:.1f}%' for k, v in report.sentiment_percentages.items())}"
    )


@cli.command("select-candidates")
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--index", "index_path", type=click.Path())
@click.option("--features", "features_path", type=click.Path())
@click.option("--threshold", type=float, default=None)
@click.option("--neighbors", type=int, default=None)
@click.option("--near", type=int, default=None)
@click.option("--high-score", type=int, default=None)
@click.option("--required-submissions", type=int, default=None)
@click.option("--seed", type=int, default=0)
@click.option("--config", "config_path", type=click.Path())
@click.option("--out", required=True, type=click.Path())
def select_candidates(corpus_path, index_path, features_path, threshold, neighbors,
                      near, high_score, required_submissions, seed, config_path, out):
    """Assemble contrastive candidate sets for all biased paintings."""
    config = _load_config(config_path)
    sel = selection_mod.SelectorConfig(
        neighbors=neighbors or _cfg(config, "selector", "neighbors", default=100),
        near=near or _cfg(config, "selector", "near", default=12),
        high_score=high_score or _cfg(config, "selector", "high_score", default=12),
        threshold=threshold if threshold is not None else _cfg(
            config, "selector", "threshold", default=0.3),
        required_submissions=required_submissions or _cfg(
            config, "service", "required_submissions", default=5),
    )
    run = _Run("select-candidates", Path(out), seed, {
        "neighbors": sel.neighbors, "near": sel.near, "high_score": sel.high_score,
        "threshold": sel.threshold, "required_submissions": sel.required_submissions,
    })
    run.add_input("corpus", corpus_path)
    corpus = corpus_mod.load_jsonl(corpus_path)
    index = _load_index(index_path, features_path)
    run.add_input("index", index_path or features_path)
    tasks = selection_mod.generate_tasks(
        corpus, index,
        required_submissions=sel.required_submissions,
        seed=seed, config=sel,
    )
    selection_mod.write_task_manifest(tasks, run.artifact("tasks.jsonl"))
    run.params["task_count"] = len(tasks)
    run.params["expected_submissions"] = len(tasks) * sel.required_submissions
    run.finish()
    click.echo(
        f"{len(tasks)} tasks written "
        f"({len(tasks) * sel.required_submissions} expected submissions)"
    )


@cli.command()
@click.option("--tasks", "tasks_path", required=True, type=click.Path())
@click.option("--corpus", "corpus_path", type=click.Path())
@click.option("--log", "log_path", required=True, type=click.Path())
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=None)
@click.option("--image-dir", type=click.Path())
@click.option("--ui-dir", type=click.Path())
@click.option("--config", "config_path", type=click.Path())
def serve(tasks_path, corpus_path, log_path, host, port, image_dir, ui_dir,
          config_path):
    """Run the annotation service until interrupted."""
    import uvicorn

    from .service import create_app

    config = _load_config(config_path)
    port = port or _cfg(config, "service", "port", default=8077)
    image_dir = image_dir or _cfg(config, "service", "image_dir", default=None)
    tasks = selection_mod.load_task_manifest(tasks_path)
    corpus = corpus_mod.load_jsonl(corpus_path) if corpus_path else None
    store = AnnotationStore(tasks, log_path=log_path)
    app = create_app(store, corpus=corpus, image_dir=image_dir, ui_dir=ui_dir)
    click.echo(f"serving {len(tasks)} tasks on {host}:{port}, log at {log_path}")
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        store.close()


@cli.command()
@click.option("--base", required=True, type=click.Path())
@click.option("--additions", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
def merge(base, additions, out):
    """Merge two corpora (annotation union, paintings deduplicated)."""
    run = _Run("merge", Path(out), None, {})
    run.add_input("base", base)
    run.add_input("additions", additions)
    merged = corpus_mod.merge(
        corpus_mod.load_jsonl(base), corpus_mod.load_jsonl(additions)
    )
    corpus_mod.export_jsonl(merged, run.artifact("merged.jsonl"))
    run.params["annotation_count"] = merged.annotation_count
    run.finish()
    click.echo(
        f"merged corpus holds {merged.annotation_count} annotations over "
        f"{len(merged.paintings)} paintings"
    )


@cli.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--target", required=True, type=int)
@click.option("--seed", type=int, default=0)
@click.option("--out", required=True, type=click.Path())
def subsample(corpus_path, target, seed, out):
    """Uniform random annotation subset of the given size."""
    run = _Run("subsample", Path(out), seed, {"target": target})
    run.add_input("corpus", corpus_path)
    corpus = corpus_mod.load_jsonl(corpus_path)
    reduced = corpus_mod.subsample(corpus, target, seed)
    corpus_mod.export_jsonl(reduced, run.artifact("subsampled.jsonl"))
    run.finish()
    click.echo(f"kept {reduced.annotation_count} of {corpus.annotation_count} annotations")


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
def evaluate(input_path, out):
    """Score generated captions (BLEU/ROUGE-L/CIDEr-D) with aggregation."""
    run = _Run("evaluate", Path(out), None, {})
    run.add_input("instances", input_path)
    instances = metrics_mod.load_eval_instances(input_path)
    report = metrics_mod.aggregate(instances)
    metrics_mod.write_metric_report_json(report, run.artifact("metric_report.json"))
    metrics_mod.write_metric_report_csv(report, run.artifact("metric_report.csv"))
    run.params["instances"] = len(instances)
    run.finish()
    summary = ", ".join(f"{m}={report.overall[m]:.3f}" for m in metrics_mod.METRIC_NAMES)
    click.echo(summary)


@cli.command("emotion-spectrum")
@click.option("--predictions", "predictions_path", required=True,
              type=click.Path())
@click.option("--compare", "compare_path", type=click.Path())
@click.option("--threshold", type=float, default=0.5)
@click.option("--out", required=True, type=click.Path())
def emotion_spectrum(predictions_path, compare_path, threshold, out):
    """Extended-emotion histogram and Pearson correlation data."""
    run = _Run("emotion-spectrum", Path(out), None, {"threshold": threshold})
    run.add_input("predictions", predictions_path)
    predictions = spectrum_mod.load_predictions(predictions_path)
    histogram = spectrum_mod.emotion_histogram(predictions, threshold)
    pearson = spectrum_mod.pearson_matrix(predictions)
    spectrum_mod.write_histogram_csv(histogram, run.artifact("histogram.csv"))
    spectrum_mod.write_matrix_csv(pearson, run.artifact("pearson.csv"))
    summary: dict = {
        "taxonomy": list(predictions.taxonomy),
        "predictions": len(predictions.keys),
        "histogram": histogram,
        "undefined_labels": list(pearson.undefined_labels),
    }
    if compare_path:
        run.add_input("compare", compare_path)
        other = spectrum_mod.load_predictions(compare_path)
        other_pearson = spectrum_mod.pearson_matrix(other)
        spectrum_mod.write_matrix_csv(
            other_pearson, run.artifact("pearson_compare.csv")
        )
        summary["offdiagonal_comparison"] = spectrum_mod.offdiagonal_comparison(
            pearson, other_pearson
        )
    with open(run.artifact("spectrum_summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    run.finish()
    click.echo(f"analyzed {len(predictions.keys)} predictions over "
               f"{len(predictions.taxonomy)} labels")


@cli.command()
@click.option("--bias", "bias_path", type=click.Path())
@click.option("--metrics", "metrics_path", type=click.Path())
@click.option("--spectrum", "spectrum_path", type=click.Path())
@click.option("--out", required=True, type=click.Path())
def report(bias_path, metrics_path, spectrum_path, out):
    """Bundle prior artifacts into a single curation report."""
    run = _Run("report", Path(out), None, {})
    bundle: dict = {}
    for role, path in (("bias", bias_path), ("metrics", metrics_path),
                       ("spectrum", spectrum_path)):
        if path:
            run.add_input(role, path)
            with open(path, encoding="utf-8") as fh:
                bundle[role] = json.load(fh)
    if not bundle:
        raise click.ClickException("nothing to report: pass at least one artifact")
    with open(run.artifact("report.json"), "w") as fh:
        json.dump(bundle, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(run.artifact("report.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["section", "key", "value"])
        if "bias" in bundle:
            for key in ("biased_count", "single_sentiment_count", "painting_count"):
                writer.writerow(["bias", key, bundle["bias"].get(key)])
            for k, v in bundle["bias"].get("sentiment_percentages", {}).items():
                writer.writerow(["bias", f"percent_{k}", f"{v:.2f}"])
        if "metrics" in bundle:
            for k, v in bundle["metrics"].get("overall", {}).items():
                writer.writerow(["metrics", k, f"{v:.6f}"])
    run.finish()
    click.echo(f"report bundles: {', '.join(sorted(bundle))}")


def main(argv: list[str] | None = None) -> int:
    """Entry point mapping failures onto the documented exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return EXIT_OK
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except (click.UsageError, click.ClickException, StoreError, ValueError,
            KeyError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_VALIDATION
    except OSError as exc:
        click.echo(f"i/o error: {exc}", err=True)
        return EXIT_IO
    except AssertionError as exc:
        click.echo(f"internal invariant violated: {exc}", err=True)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
