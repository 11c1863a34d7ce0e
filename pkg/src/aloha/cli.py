"""Command-line entry points: serve, one-shot query, corpus ingest/refresh,
and intent-classifier evaluation."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import docstore
from .config import Config, load_config
from .intent import build_intent_index, evaluate_intent, load_examples_jsonl
from .providers import HashedNgramEmbedder
from .retrieval import InvertedIndex
from .service import build_state, create_app, handle_chat


@click.group()
def main():
    """Campus information assistant."""


def _config_from(path: str | None) -> Config:
    return load_config(path)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="key = value config file")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(config_path, host, port):
    """Run the HTTP service."""
    import uvicorn

    state = build_state(_config_from(config_path))
    uvicorn.run(create_app(state), host=host, port=port)


@main.command()
@click.argument("text")
@click.option("--lang", default="auto", show_default=True, help="expected language hint (detection stays authoritative)")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def query(text, lang, config_path):
    """Answer one query and print the wire-format JSON response."""
    state = build_state(_config_from(config_path))
    hint = None if lang == "auto" else lang
    wire = handle_chat(state, text, client_locale_hint=hint)
    click.echo(json.dumps(wire, ensure_ascii=False, indent=2))


@main.command()
@click.option("--corpus", required=True, type=click.Path(exists=True), help="JSONL file or directory of JSONL files")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="store directory to write")
@click.option("--dim", default=512, show_default=True, type=int)
def ingest(corpus, out_dir, dim):
    """Build a document store (documents.jsonl + embeddings.bin + manifest.json + lexical.idx)."""
    embedder = HashedNgramEmbedder(dim=dim)
    corpus_path = Path(corpus)
    files = sorted(corpus_path.glob("*.jsonl")) if corpus_path.is_dir() else [corpus_path]

    def records():
        for file in files:
            yield from docstore.iter_jsonl(file)

    snapshot = docstore.ingest(records(), embedder)
    docstore.save_store(snapshot, out_dir, embedder.embedder_id)
    full_view = docstore.DocView(documents=snapshot.documents, selector="all")
    InvertedIndex.from_view(full_view).save(Path(out_dir) / "lexical.idx")
    click.echo(json.dumps({"counts": snapshot.counts, "store": str(out_dir)}))


@main.command()
@click.option("--store", "store_dir", required=True, type=click.Path(exists=True))
@click.option("--add", "add_file", required=True, type=click.Path(exists=True), help="JSONL of new records")
@click.option("--dim", default=512, show_default=True, type=int)
def refresh(store_dir, add_file, dim):
    """Merge new records into an existing store (byte-identical pages dedupe)."""
    snapshot, manifest = docstore.load_store(store_dir)
    embedder = HashedNgramEmbedder.from_id(manifest.get("embedder_id", "")) or HashedNgramEmbedder(dim=dim)
    result = docstore.refresh(snapshot, docstore.iter_jsonl(add_file), embedder)
    docstore.save_store(result.snapshot, store_dir, embedder.embedder_id)
    full_view = docstore.DocView(documents=result.snapshot.documents, selector="all")
    InvertedIndex.from_view(full_view).save(Path(store_dir) / "lexical.idx")
    click.echo(json.dumps({"counts": result.snapshot.counts, "added": result.added, "deduped": result.deduped}))


@main.command(name="eval-intent")
@click.option("--train", "train_file", required=True, type=click.Path(exists=True))
@click.option("--test", "test_file", required=True, type=click.Path(exists=True))
@click.option("--k", default=50, show_default=True, type=int)
@click.option("--no-hic", is_flag=True, default=False, help="evaluate without candidate filtering")
@click.option("--dim", default=512, show_default=True, type=int)
def eval_intent(train_file, test_file, k, no_hic, dim):
    """Evaluate the kNN intent classifier and print the report as JSON."""
    embedder = HashedNgramEmbedder(dim=dim)
    index = build_intent_index(load_examples_jsonl(train_file), embedder)
    testset = [(text, label) for _id, text, label in load_examples_jsonl(test_file)]
    report = evaluate_intent(index, testset, k=k, with_hic=not no_hic)
    click.echo(report.to_json())


if __name__ == "__main__":
    sys.exit(main())
