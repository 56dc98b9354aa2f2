"""Seeded latent Dirichlet allocation fitted by collapsed Gibbs sampling.

Each schema attribute owns one topic (attribute ``i`` -> topic ``i``). The
supervision is an asymmetric prior: in its own topic, every seed term gets a
topic-word prior of ``beta * seed_boost`` instead of ``beta``, and seed
tokens start the chain in that topic. With ``seed_boost = 1`` this is plain
LDA. Extra topics (``K > |schema|``) soak up background vocabulary.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from webreview.corpus.matrix import DocumentTermMatrix
from webreview.corpus.tokenize import Tokenizer

logger = logging.getLogger(__name__)


@njit(cache=True)
def _gibbs_sweep(words, docs, z, ndk, nkw, nk, beta_kw, beta_sum, alpha, uniforms):
    n_topics = ndk.shape[1]
    cumulative = np.empty(n_topics)
    for i in range(words.shape[0]):
        w = words[i]
        d = docs[i]
        k = z[i]
        ndk[d, k] -= 1
        nkw[k, w] -= 1
        nk[k] -= 1
        total = 0.0
        for t in range(n_topics):
            total += (ndk[d, t] + alpha) * (nkw[t, w] + beta_kw[t, w]) / (nk[t] + beta_sum[t])
            cumulative[t] = total
        u = uniforms[i] * total
        k = 0
        while k < n_topics - 1 and cumulative[k] <= u:
            k += 1
        z[i] = k
        ndk[d, k] += 1
        nkw[k, w] += 1
        nk[k] += 1


@dataclass(eq=False)
class TopicModel:
    K: int
    phi: np.ndarray
    theta: np.ndarray
    seed_map: dict[str, int]
    alpha: float
    beta: float
    seed_boost: float
    rng_seed: int
    iterations: int
    terms: tuple[str, ...]
    doc_ids: tuple[str, ...]
    warnings: tuple[str, ...] = field(default=())

    def __post_init__(self):
        self._term_index = {t: i for i, t in enumerate(self.terms)}
        self._doc_index = {d: i for i, d in enumerate(self.doc_ids)}

    def term_index(self, term: str) -> int | None:
        return self._term_index.get(term)

    def doc_topics(self, doc_id: str) -> np.ndarray | None:
        i = self._doc_index.get(doc_id)
        return None if i is None else self.theta[i]

    def top_terms(self, k: int, n: int = 10) -> list[str]:
        # stable: ties resolved by term order
        order = np.argsort(-self.phi[k], kind="stable")[:n]
        return [self.terms[j] for j in order]

    def to_dict(self, top_n: int = 20) -> dict:
        return {
            "K": self.K,
            "alpha": self.alpha,
            "beta": self.beta,
            "seed_boost": self.seed_boost,
            "rng_seed": self.rng_seed,
            "iterations": self.iterations,
            "seed_map": dict(self.seed_map),
            "terms": list(self.terms),
            "doc_ids": list(self.doc_ids),
            "phi": self.phi.tolist(),
            "theta": self.theta.tolist(),
            "top_terms": [self.top_terms(k, top_n) for k in range(self.K)],
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TopicModel":
        return cls(
            K=d["K"], phi=np.array(d["phi"], dtype=np.float64), theta=np.array(d["theta"], dtype=np.float64),
            seed_map=dict(d["seed_map"]), alpha=d["alpha"], beta=d["beta"], seed_boost=d["seed_boost"],
            rng_seed=d["rng_seed"], iterations=d["iterations"], terms=tuple(d["terms"]),
            doc_ids=tuple(d["doc_ids"]), warnings=tuple(d.get("warnings", ())),
        )


def seed_prior(terms, schema, K: int, beta: float, seed_boost: float,
               tokenizer: Tokenizer = Tokenizer()) -> tuple[np.ndarray, list[str]]:
    """Topic-word prior matrix and warnings for attributes with no seed in the vocabulary."""
    index = {t: i for i, t in enumerate(terms)}
    prior = np.full((K, len(terms)), beta, dtype=np.float64)
    warnings = []
    for k, attr in enumerate(schema):
        found = 0
        for term in attr.seed_terms:
            for tok in tokenizer.terms(term):
                j = index.get(tok)
                if j is not None:
                    prior[k, j] = beta * seed_boost
                    found += 1
        if not found:
            msg = f"attribute '{attr.name}': no seed term is in the vocabulary; its topic is unsupervised"
            logger.warning(msg)
            warnings.append(msg)
    return prior, warnings


def fit_topics(m: DocumentTermMatrix, schema, K: int | None = None, alpha: float | None = None,
               beta: float = 0.01, seed_boost: float = 25.0, iterations: int = 1000,
               rng_seed: int = 0, *, tokenizer: Tokenizer = Tokenizer()) -> TopicModel:
    """Fit the seeded topic model.

    ``K`` defaults to ``len(schema) + 2`` and ``alpha`` to ``50 / K``. The
    returned phi/theta come from the final sample's counts, smoothed by the
    priors. Identical inputs and ``rng_seed`` give identical output.

    Raises:
        ValueError: ``K < len(schema)`` or the matrix has no documents.
    """
    schema = tuple(schema)
    if K is None:
        K = len(schema) + 2
    if K < len(schema):
        raise ValueError(f"K={K} is smaller than the number of schema attributes ({len(schema)})")
    if m.n_docs == 0:
        raise ValueError("cannot fit a topic model on an empty matrix")
    if alpha is None:
        alpha = 50.0 / K

    prior, warnings = seed_prior(m.vocab.terms, schema, K, beta, seed_boost, tokenizer)
    prior_sum = prior.sum(axis=1)

    coo = m.counts.tocoo()
    order = np.lexsort((coo.col, coo.row))
    reps = coo.data[order].astype(np.int64)
    docs = np.repeat(coo.row[order].astype(np.int64), reps)
    words = np.repeat(coo.col[order].astype(np.int64), reps)

    rng = np.random.Generator(np.random.PCG64(rng_seed))
    n_tokens = words.shape[0]
    z = rng.integers(0, K, size=n_tokens).astype(np.int64)
    # seed tokens start in their own topic; the prior alone is too weak to
    # stop label switching early in the chain
    seeded_topic = np.where(prior > beta, np.arange(K)[:, None], K).min(axis=0)
    start = seeded_topic[words]
    z = np.where(start < K, start, z)
    ndk = np.zeros((m.n_docs, K), dtype=np.int64)
    nkw = np.zeros((K, len(m.vocab)), dtype=np.int64)
    np.add.at(ndk, (docs, z), 1)
    np.add.at(nkw, (z, words), 1)
    nk = nkw.sum(axis=1)

    for _ in range(iterations):
        _gibbs_sweep(words, docs, z, ndk, nkw, nk, prior, prior_sum, float(alpha), rng.random(n_tokens))

    phi = (nkw + prior) / (nk + prior_sum)[:, None]
    nd = ndk.sum(axis=1)
    theta = (ndk + alpha) / (nd + K * alpha)[:, None]
    return TopicModel(
        K=K, phi=phi, theta=theta, seed_map={a.name: i for i, a in enumerate(schema)},
        alpha=float(alpha), beta=float(beta), seed_boost=float(seed_boost), rng_seed=int(rng_seed),
        iterations=int(iterations), terms=tuple(m.vocab.terms), doc_ids=tuple(m.docs),
        warnings=tuple(warnings),
    )
