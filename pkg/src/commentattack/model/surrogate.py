"""Deterministic nearest-neighbour comment retrieval over subtoken multisets."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..corpus import CodeSample
from ..lang import code_subtokens


def jaccard(a: Counter, b: Counter) -> float:
    """Multiset Jaccard similarity; 0 when both are empty."""
    inter = sum((a & b).values())
    union = sum((a | b).values())
    return inter / union if union else 0.0


@dataclass
class SurrogateModel:
    lang: str
    memory: List[Tuple[Counter, str]]

    def __post_init__(self):
        if not self.memory:
            raise ValueError("surrogate memory is empty")
        vocab: Dict[str, int] = {}
        for bag, _ in self.memory:
            for tok in bag:
                vocab.setdefault(tok, len(vocab))
        counts = np.zeros((len(self.memory), len(vocab)), dtype=np.int64)
        for i, (bag, _) in enumerate(self.memory):
            for tok, c in bag.items():
                counts[i, vocab[tok]] = c
        self._vocab = vocab
        self._counts = counts
        self._sizes = counts.sum(axis=1)

    @classmethod
    def from_samples(cls, samples: Sequence[CodeSample]) -> "SurrogateModel":
        samples = list(samples)
        if not samples:
            raise ValueError("surrogate memory is empty")
        lang = samples[0].lang
        return cls(lang, [(Counter(code_subtokens(s.code, s.lang)), s.comment) for s in samples])

    def similarities(self, code: str) -> np.ndarray:
        query = Counter(code_subtokens(code, self.lang))
        q_size = sum(query.values())
        inter = np.zeros(len(self.memory), dtype=np.int64)
        for tok, c in query.items():
            col = self._vocab.get(tok)
            if col is not None:
                inter += np.minimum(self._counts[:, col], c)
        union = q_size + self._sizes - inter
        with np.errstate(invalid="ignore", divide="ignore"):
            sims = np.where(union > 0, inter / np.maximum(union, 1), 0.0)
        return sims

    def generate(self, code: str) -> str:
        return surrogate_generate(self, code)


def surrogate_generate(model: SurrogateModel, code: str) -> str:
    """Comment of the memory entry with the highest Jaccard similarity; ties go to the lowest index."""
    return model.memory[int(np.argmax(model.similarities(code)))][1]
