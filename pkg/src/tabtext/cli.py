"""Command-line entry point.

Subcommands: gen-corpus | serialize | embed | aggregate | baseline | eval |
ablate | compare. Exit codes: 0 success, 1 validation error, 2 stage failure,
3 backend failure. Stage logs go to standard error.
"""
from __future__ import annotations

import logging
import sys
from pathlib import Path

import click
import numpy as np

from .baseline import FeatureMatrix, build_baseline_features
from .data_model import load_schema, parse_table
from .embedding import DEFAULT_DIM, DEFAULT_MAX_CHARS, embed_text, make_backend
from .errors import BackendError, TabTextError, ValidationError
from .evaluation import SplitSpec, evaluate_features
from .pipeline import (
    build_tabtext_features,
    load_labels,
    load_run_config,
    load_sources,
    run_compare,
    run_grid,
)
from .serializer import (
    CombineMode,
    MissingPolicy,
    SerializationConfig,
    serialize_row,
)
from .synthetic import CorpusSpec, generate
from .temporal import TimedEmbedding, aggregate_timed


@click.group()
def cli():
    """TabText: tabular-to-text feature extraction and evaluation."""


def _ser_options(fn):
    fn = click.option(
        "--missing-policy",
        type=click.Choice([p.value for p in MissingPolicy]),
        default=MissingPolicy.ENCODE_MISSING.value,
    )(fn)
    fn = click.option("--meta/--no-meta", "include_meta", default=True)(fn)
    fn = click.option("--descriptive/--terse", default=False)(fn)
    fn = click.option(
        "--combine",
        type=click.Choice([m.value for m in CombineMode]),
        default=CombineMode.SEPARATE.value,
    )(fn)
    return fn


def _ser_config(missing_policy, include_meta, descriptive, combine) -> SerializationConfig:
    return SerializationConfig(
        missing_policy=MissingPolicy(missing_policy),
        include_meta=include_meta,
        descriptive=descriptive,
        combine_sources=CombineMode(combine),
    )


@cli.command("gen-corpus")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--seed", type=int, default=0)
@click.option("--n-entities", type=int, default=1590)
@click.option("--positive-rate", type=float, default=121 / 1590)
@click.option("--missingness-rate", type=float, default=0.2)
@click.option("--informative-missingness", is_flag=True, default=False)
def gen_corpus(out_dir, seed, n_entities, positive_rate, missingness_rate, informative_missingness):
    """Generate a seeded synthetic corpus (data + schemas + labels)."""
    spec = CorpusSpec(
        seed=seed,
        n_entities=n_entities,
        positive_rate=positive_rate,
        missingness_rate=missingness_rate,
        informative_missingness=informative_missingness,
    )
    path = generate(spec, out_dir)
    click.echo(f"corpus written to {path}")


@cli.command()
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--schema", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@_ser_options
def serialize(data, schema, out_path, missing_policy, include_meta, descriptive, combine):
    """Serialize a table to sentences: entity_id TAB [timestamp TAB] sentence."""
    table_schema = load_schema(schema)
    rows = parse_table(Path(data).read_bytes(), table_schema)
    config = _ser_config(missing_policy, include_meta, descriptive, combine)
    with open(out_path, "w", encoding="utf-8", newline="\n") as handle:
        for row in rows:
            sentence = serialize_row(table_schema, row, config)
            if table_schema.time_column is not None:
                handle.write(f"{row.entity_id}\t{row.timestamp!r}\t{sentence}\n")
            else:
                handle.write(f"{row.entity_id}\t{sentence}\n")
    click.echo(f"wrote {len(rows)} sentences to {out_path}")


def _backend_options(fn):
    fn = click.option("--backend", default="hashing")(fn)
    fn = click.option("--dim", type=int, default=DEFAULT_DIM)(fn)
    fn = click.option("--max-chars", type=int, default=DEFAULT_MAX_CHARS)(fn)
    fn = click.option("--cache", type=click.Path(), default=None)(fn)
    fn = click.option("--url", default=None)(fn)
    fn = click.option("--model-dir", type=click.Path(), default=None)(fn)
    return fn


@cli.command()
@click.option("--in", "in_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@_backend_options
def embed(in_path, out_path, backend, dim, max_chars, cache, url, model_dir):
    """Embed a sentence file into a per-row embedding CSV."""
    be = make_backend(
        backend, dim=dim, max_chars=max_chars, url=url, model_dir=model_dir, cache_dir=cache
    )
    lines = Path(in_path).read_text(encoding="utf-8").splitlines()
    with open(out_path, "w", encoding="utf-8", newline="\n") as handle:
        header = ["entity_id", "timestamp"] + [f"e{i}" for i in range(be.dim)]
        handle.write(",".join(header) + "\n")
        for line in lines:
            fields = line.split("\t")
            if len(fields) == 3:
                entity, timestamp, sentence = fields
            else:
                entity, sentence = fields[0], fields[-1]
                timestamp = ""
            vector = embed_text(sentence, be)
            handle.write(
                ",".join([entity, timestamp] + [repr(float(v)) for v in vector]) + "\n"
            )
    click.echo(f"wrote {len(lines)} embeddings to {out_path}")


@cli.command()
@click.option("--in", "in_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--normalize/--no-normalize", default=True)
def aggregate(in_path, out_path, normalize):
    """Aggregate per-row embeddings into one vector per entity."""
    lines = Path(in_path).read_text(encoding="utf-8").splitlines()
    dim = len(lines[0].split(",")) - 2
    grouped: dict[str, list[tuple[str, np.ndarray]]] = {}
    order: list[str] = []
    for line in lines[1:]:
        fields = line.split(",")
        entity, timestamp = fields[0], fields[1]
        vector = np.array([float(v) for v in fields[2:]], dtype=np.float64)
        if entity not in grouped:
            order.append(entity)
        grouped.setdefault(entity, []).append((timestamp, vector))

    rows = []
    for entity in order:
        entries = grouped[entity]
        if all(t == "" for t, _ in entries):
            if len(entries) > 1:
                raise ValidationError(
                    f"entity '{entity}' has {len(entries)} static rows; expected one"
                )
            rows.append(entries[0][1])
        else:
            series = [TimedEmbedding(float(t), v) for t, v in entries]
            rows.append(aggregate_timed(series, normalize=normalize))
    matrix = FeatureMatrix(
        entity_ids=order,
        feature_names=[f"e{i}" for i in range(dim)],
        values=np.stack(rows),
    )
    matrix.to_csv(out_path)
    click.echo(f"wrote {len(order)} entity vectors to {out_path}")


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
def baseline(config_path, out_path):
    """Build the traditional feature matrix for all configured sources."""
    config = load_run_config(config_path)
    sources = load_sources(config)
    entity_ids, labels = load_labels(config.labels)
    label_vec = np.array([labels[e] for e in entity_ids], dtype=np.int64)
    matrix = build_baseline_features(sources, entity_ids, label_vec, config.max_categories)
    target = Path(out_path) if out_path else config.output_dir / "baseline_features.csv"
    target.parent.mkdir(parents=True, exist_ok=True)
    matrix.to_csv(target)
    click.echo(f"wrote {len(entity_ids)} x {len(matrix.feature_names)} features to {target}")


@cli.command("eval")
@click.option("--features", "features_path", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=0)
@click.option("--train-fraction", type=float, default=0.8)
@click.option("--stratified/--no-stratified", default=True)
def eval_cmd(features_path, seed, train_fraction, stratified):
    """Split, fit the built-in classifier, and print test AUROC."""
    matrix = FeatureMatrix.from_csv(features_path)
    spec = SplitSpec(train_fraction=train_fraction, seed=seed, stratified=stratified)
    score, shash = evaluate_features(matrix, spec)
    click.echo(f"test AUROC: {score:.6f} (split {shash})")


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=None)
@click.option("--train-fraction", type=float, default=None)
@click.option("--backend", default=None)
@click.option("--grid-extended", is_flag=True, default=False)
def ablate(config_path, seed, train_fraction, backend, grid_extended):
    """Run the sentence-representation ablation grid."""
    config = load_run_config(config_path, backend_name=backend)
    if seed is not None or train_fraction is not None:
        config.split = SplitSpec(
            train_fraction=train_fraction or config.split.train_fraction,
            seed=seed if seed is not None else config.split.seed,
            stratified=config.split.stratified,
        )
    report = run_grid(config, extended=grid_extended)
    click.echo(report.render())


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=None)
@click.option("--repeats", type=int, default=None)
def compare(config_path, seed, repeats):
    """Run TabText and the traditional baseline, report both AUROCs."""
    config = load_run_config(config_path, repeats=repeats)
    if seed is not None:
        config.split = SplitSpec(
            train_fraction=config.split.train_fraction,
            seed=seed,
            stratified=config.split.stratified,
        )
    manifest = run_compare(config)
    results = manifest["results"]
    click.echo(f"Traditional AUROC: {results['baseline_auroc']:.6f}")
    click.echo(f"TabText AUROC: {results['tabtext_auroc']:.6f}")


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s"
    )
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return 1
    except click.Abort:
        return 1
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 3
    except TabTextError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
