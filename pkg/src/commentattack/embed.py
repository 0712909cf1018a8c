"""Skip-gram token embeddings and nearest-identifier candidate selection."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .lang import split_subtokens

logger = logging.getLogger(__name__)


@dataclass
class EmbedConfig:
    dim: int = 128
    window: int = 5
    epochs: int = 5
    negatives: int = 5
    min_count: int = 2
    learning_rate: float = 0.025
    seed: int = 0
    batch_size: int = 64


@dataclass
class EmbeddingTable:
    dim: int
    vocab: Dict[str, int]
    vectors: np.ndarray
    window: int
    seed: int
    # output-side vectors; only present on freshly trained tables
    context: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def tokens(self) -> List[str]:
        return sorted(self.vocab, key=self.vocab.__getitem__)

    def __contains__(self, token: str) -> bool:
        return token in self.vocab

    def __getitem__(self, token: str) -> np.ndarray:
        return self.vectors[self.vocab[token]]

    def identifier_vector(self, name: str) -> Optional[np.ndarray]:
        """Embedding of a whole identifier.

        Exact vocabulary hit first, otherwise the mean of its in-vocabulary
        subtokens. ``None`` when every subtoken is out of vocabulary.
        """
        if name in self.vocab:
            return self.vectors[self.vocab[name]]
        rows = [self.vocab[s] for s in split_subtokens(name) if s in self.vocab]
        if not rows:
            return None
        return self.vectors[rows].mean(axis=0)


@dataclass(frozen=True)
class CandidateSet:
    target: str
    candidates: Tuple[Tuple[str, float], ...]

    @property
    def names(self) -> List[str]:
        return [c for c, _ in self.candidates]

    def __len__(self) -> int:
        return len(self.candidates)


def _build_vocab(corpus: Sequence[Sequence[str]], min_count: int) -> Tuple[Dict[str, int], np.ndarray]:
    counts: Dict[str, int] = {}
    for sent in corpus:
        for tok in sent:
            counts[tok] = counts.get(tok, 0) + 1
    kept = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
    vocab = {t: i for i, t in enumerate(kept)}
    freq = np.array([counts[t] for t in kept], dtype=np.float64)
    return vocab, freq


def skipgram_pairs(corpus: Sequence[Sequence[str]], vocab: Dict[str, int], window: int) -> np.ndarray:
    """All (center, context) index pairs within ``window`` of each other; OOV tokens are removed first."""
    pairs: List[Tuple[int, int]] = []
    for sent in corpus:
        ids = [vocab[t] for t in sent if t in vocab]
        for t, center in enumerate(ids):
            lo, hi = max(0, t - window), min(len(ids), t + window + 1)
            for j in range(lo, hi):
                if j != t:
                    pairs.append((center, ids[j]))
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def _log_sigmoid(x: np.ndarray) -> np.ndarray:
    return -np.logaddexp(0.0, -x)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return np.exp(_log_sigmoid(x))


def _noise_distribution(freq: np.ndarray) -> np.ndarray:
    p = freq ** 0.75
    return p / p.sum()


def skipgram_objective(w_in: np.ndarray, w_out: np.ndarray, pairs: np.ndarray, noise: np.ndarray,
                       negatives: int, seed: int = 0) -> float:
    """Mean negative-sampling estimate of log p(context | center) over ``pairs``.

    Negatives are drawn from a fixed seed so two parameter settings can be
    compared on identical noise samples.
    """
    if len(pairs) == 0:
        return float("nan")
    rng = np.random.default_rng(seed)
    negs = rng.choice(len(noise), size=(len(pairs), negatives), p=noise)
    c = w_in[pairs[:, 0]]
    pos = np.einsum("ij,ij->i", c, w_out[pairs[:, 1]])
    neg = np.einsum("ikj,ij->ik", w_out[negs], c)
    return float(np.mean(_log_sigmoid(pos) + _log_sigmoid(-neg).sum(axis=1)))


def train_embeddings(corpus: Sequence[Sequence[str]], config: Optional[EmbedConfig] = None) -> EmbeddingTable:
    """Skip-gram with negative sampling, trained by mini-batch SGD.

    ``corpus`` is a sequence of subtoken streams, one per program. The
    learning rate decays linearly to 1e-4 of its start value. Runs are
    bit-reproducible for a fixed seed.
    """
    config = config or EmbedConfig()
    if config.dim < 1:
        raise ValueError("embedding dim must be >= 1")
    if config.window < 1:
        raise ValueError("window must be >= 1")
    if not corpus or not any(corpus):
        raise ValueError("cannot train embeddings on an empty corpus")
    vocab, freq = _build_vocab(corpus, config.min_count)
    if not vocab:
        raise ValueError("no token reaches min_count; vocabulary is empty")

    rng = np.random.default_rng(config.seed)
    v, d = len(vocab), config.dim
    w_in = (rng.random((v, d)) - 0.5) / d
    w_out = np.zeros((v, d))
    pairs = skipgram_pairs(corpus, vocab, config.window)
    noise = _noise_distribution(freq)

    total_steps = max(1, config.epochs * int(np.ceil(len(pairs) / config.batch_size)))
    step = 0
    for _ in range(config.epochs):
        order = rng.permutation(len(pairs))
        for lo in range(0, len(pairs), config.batch_size):
            batch = pairs[order[lo:lo + config.batch_size]]
            lr = config.learning_rate * max(1e-4, 1.0 - step / total_steps)
            step += 1
            centers, ctx = batch[:, 0], batch[:, 1]
            negs = rng.choice(v, size=(len(batch), config.negatives), p=noise)
            c = w_in[centers]
            o = w_out[ctx]
            n = w_out[negs]
            g_pos = _sigmoid(np.einsum("ij,ij->i", c, o)) - 1.0
            g_neg = _sigmoid(np.einsum("ikj,ij->ik", n, c))
            grad_c = g_pos[:, None] * o + np.einsum("ik,ikj->ij", g_neg, n)
            np.add.at(w_out, ctx, -lr * g_pos[:, None] * c)
            np.add.at(w_out, negs, -lr * g_neg[:, :, None] * c[:, None, :])
            np.add.at(w_in, centers, -lr * grad_c)

    if not np.all(np.isfinite(w_in)):
        raise FloatingPointError("embedding training diverged")
    return EmbeddingTable(dim=d, vocab=vocab, vectors=w_in, window=config.window, seed=config.seed,
                          context=w_out)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; 0 when either vector is all zeros."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def program_embedding(tokens: Iterable[str], table: EmbeddingTable) -> np.ndarray:
    """Mean of the in-vocabulary token vectors; the zero vector if none are known."""
    rows = [table.vocab[t] for t in tokens if t in table.vocab]
    if not rows:
        return np.zeros(table.dim)
    return table.vectors[rows].mean(axis=0)


class CandidateIndex:
    """Normalized identifier vectors for a fixed global vocabulary, for fast top-K scans."""

    def __init__(self, global_vocab: Iterable[str], table: EmbeddingTable):
        self.table = table
        names, rows = [], []
        for name in sorted(set(global_vocab)):
            vec = table.identifier_vector(name)
            if vec is None:
                continue
            norm = np.linalg.norm(vec)
            names.append(name)
            rows.append(vec / norm if norm > 0 else vec)
        self.names = names
        self.position = {n: i for i, n in enumerate(names)}
        self.matrix = np.array(rows) if rows else np.zeros((0, table.dim))

    def select(self, w: str, program_identifiers: Iterable[str], k: int) -> CandidateSet:
        vec = self.table.identifier_vector(w)
        if vec is None or not self.names:
            return CandidateSet(w, ())
        norm = np.linalg.norm(vec)
        if norm == 0:
            scores = np.zeros(len(self.names))
        else:
            scores = np.clip(self.matrix @ (vec / norm), -1.0, 1.0)
        excluded = set(program_identifiers) | {w}
        ranked = sorted(
            ((round(float(scores[i]), 12), name) for i, name in enumerate(self.names) if name not in excluded),
            key=lambda sn: (-sn[0], sn[1]))
        return CandidateSet(w, tuple((name, s) for s, name in ranked[:k]))


def select_candidates(w: str, program_identifiers: Iterable[str], global_vocab: Iterable[str],
                      table: EmbeddingTable, k: int = 5, index: Optional[CandidateIndex] = None) -> CandidateSet:
    """The ``k`` identifiers of ``global_vocab`` nearest to ``w`` by cosine.

    Identifiers declared in the current program (and ``w`` itself) are never
    candidates. Ties break on the identifier string. Vocabulary members with
    no embedding are skipped, as is ``w`` itself when it has none.
    """
    if k < 1:
        raise ValueError("k must be positive")
    index = index if index is not None else CandidateIndex(global_vocab, table)
    return index.select(w, program_identifiers, k)


def save_table(table: EmbeddingTable, path: Union[str, Path]) -> None:
    """Text format: ``dim window seed`` header, then ``token v1 ... vdim`` per row (9 significant digits)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"{table.dim} {table.window} {table.seed}\n")
        for tok in table.tokens:
            vals = " ".join(format(float(x), ".9g") for x in table.vectors[table.vocab[tok]])
            fh.write(f"{tok} {vals}\n")


def load_table(path: Union[str, Path]) -> EmbeddingTable:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise ValueError(f"{path}: bad header, expected 'dim window seed'")
        dim, window, seed = (int(x) for x in header)
        vocab: Dict[str, int] = {}
        rows = []
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise ValueError(f"{path}:{lineno}: expected {dim} values")
            vocab[parts[0]] = len(rows)
            rows.append([float(x) for x in parts[1:]])
    vectors = np.array(rows, dtype=np.float64).reshape(len(rows), dim)
    return EmbeddingTable(dim=dim, vocab=vocab, vectors=vectors, window=window, seed=seed)


def corpus_objective(table: EmbeddingTable, corpus: Sequence[Sequence[str]], negatives: int = 5,
                     seed: int = 0) -> float:
    """``skipgram_objective`` of a freshly trained table on ``corpus`` (needs the context vectors)."""
    if table.context is None:
        raise ValueError("table has no context vectors (loaded from disk?)")
    counts = np.zeros(len(table.vocab))
    for sent in corpus:
        for tok in sent:
            if tok in table.vocab:
                counts[table.vocab[tok]] += 1
    pairs = skipgram_pairs(corpus, table.vocab, table.window)
    return skipgram_objective(table.vectors, table.context, pairs, _noise_distribution(counts), negatives, seed)
