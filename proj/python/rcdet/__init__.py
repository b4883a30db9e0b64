"""Root-cause deletion ranking for bug-fixing commits.

Thin wrapper over the native ``_rcdet`` module: graphs and reports come back
as JSON text from C++ and are decoded here.
"""

import json

from . import _rcdet
from ._rcdet import (
    RcdetError,
    bce_loss,
    fnv1a64,
    focal_loss,
    hashed_embed,
    mean_first_rank,
    pair_probability,
    read_embedding_file,
    recall_at_n,
    run_cli,
    write_embedding_file,
)

__all__ = [
    "RcdetError", "bce_loss", "build_graph", "cross_validate", "fnv1a64", "focal_loss",
    "hashed_embed", "load_dataset", "mean_first_rank", "pair_probability",
    "read_embedding_file", "recall_at_n", "render_report", "run_cli", "synth_corpus",
    "to_homogeneous", "validate_commit", "write_embedding_file",
]


def _text(commit):
    return commit if isinstance(commit, str) else json.dumps(commit)


def load_dataset(path):
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def synth_corpus(commits=200, projects=4, seed=7):
    return [json.loads(c) for c in _rcdet.synth_corpus(commits, projects, seed)]


def validate_commit(commit):
    return _rcdet.validate_commit(_text(commit))


def build_graph(commit):
    return json.loads(_rcdet.build_graph(_text(commit)))


def to_homogeneous(hetero, fill_missing=False):
    return json.loads(_rcdet.to_homogeneous(_text(hetero), fill_missing))


def cross_validate(commits, config="", jobs=1):
    """commits: list of dicts (or JSON strings). config: key=value text."""
    jsonl = "\n".join(_text(c) for c in commits) + "\n"
    return json.loads(_rcdet.cross_validate(jsonl, config, jobs))


def render_report(report, format="text"):
    return _rcdet.render_report(_text(report), format)
