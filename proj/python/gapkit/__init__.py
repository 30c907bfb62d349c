"""Modality-gap measurement and adaptation toolkit."""

import json as _json

from . import _core
from ._core import (
    Corpus,
    GapkitError,
    UnigramSampler,
    build_prompt,
    contains_keywords,
    decode_corpus,
    difference_vectors,
    encode_corpus,
    load_corpus,
    save_corpus,
    tokenize,
)

__all__ = [
    "Corpus", "GapkitError", "UnigramSampler", "apply_pipeline", "build_prompt",
    "contains_keywords", "decode_corpus", "diff_pca", "difference_vectors", "encode_corpus",
    "feature_correlations", "filter_candidates", "fit_covariance_noise", "fit_linear",
    "fit_mean_shift", "gap_stats", "keyword_success_stats", "load_corpus", "recall_at_k",
    "save_corpus", "sensitivity_sweep", "synthesize", "tokenize", "transfer", "validate",
]


def _dump(doc):
    if doc is None:
        return ""
    return doc if isinstance(doc, str) else _json.dumps(doc)


def validate(corpus):
    return _json.loads(_core._validate(corpus))


def gap_stats(corpus, samples=10000, seed=0, vector=False):
    return _json.loads(_core._gap_stats(corpus, samples, seed, vector))


def recall_at_k(corpus, k, adapter=None, seed=0):
    """Text-to-image recall@k; `adapter` is an adapter or pipeline document."""
    return _core._recall_at_k(corpus, k, _dump(adapter), seed)


def fit_mean_shift(corpus):
    return _json.loads(_core._fit_mean_shift(corpus))


def fit_linear(corpus, ridge_lambda=1e-4):
    return _json.loads(_core._fit_linear(corpus, ridge_lambda))


def fit_covariance_noise(corpus, jitter=1e-6, scale=1.0):
    return _json.loads(_core._fit_covariance_noise(corpus, jitter, scale))


def apply_pipeline(rows, pipeline, seed):
    """Normalize each row, then apply the pipeline (same stream as `gapkit apply`)."""
    return _core._apply_pipeline(rows, _dump(pipeline), seed)


def diff_pca(corpus, n_components, components=False):
    return _json.loads(_core._diff_pca(corpus, n_components, components))


def feature_correlations(corpus, top=20):
    return _json.loads(_core._feature_correlations(corpus, top))


def sensitivity_sweep(corpus, conditions=("none", "mean", "neg_mean"), noise=0.08, runs=3,
                      seed=0, train=None):
    return _json.loads(_core._sensitivity(corpus, list(conditions), noise, runs, seed,
                                          _dump(train)))


def synthesize(spec=None, **overrides):
    """Synthetic labelled corpus; `spec` is a corpus spec dict, keys may be overridden."""
    doc = dict(spec or {})
    doc.update(overrides)
    return _core._synthesize(_json.dumps(doc))


def transfer(corpus, conditions=("none", "noise:0.08"), seeds=(1,), train=None):
    if not isinstance(conditions, str):
        conditions = ",".join(conditions)
    return _json.loads(_core._transfer(corpus, conditions, _dump(train), list(seeds)))


def filter_candidates(candidates, keywords, seed):
    chosen, index, hit = _core._filter_candidates(list(candidates), list(keywords), seed)
    return {"chosen": chosen, "index": index, "contains_keywords": hit}


def keyword_success_stats(results):
    return _json.loads(_core._keyword_stats([list(r) for r in results]))
