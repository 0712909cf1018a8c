"""A conditionally-unigram comment model and identifier-masked training.

P(comment token | code) = softmax(mean of the parameter rows of the code's
subtokens). There is no autoregressive conditioning on earlier comment
tokens; the model exists to make masked training runnable end to end.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..corpus import CodeSample
from ..lang import UNK, code_subtokens, extract_identifiers, significant, split_subtokens, tokenize
from ..lang.lexer import IDENTIFIER, LITERAL, STR_PLACEHOLDER
from ..metrics import normalize

logger = logging.getLogger(__name__)

OOV = "<oov>"


@dataclass
class MaskedTrainConfig:
    lam: float = 0.5
    count_masked: int = 2
    epochs: int = 100
    learning_rate: float = 0.1
    seed: int = 7
    batch_size: int = 1

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")
        if self.count_masked < 0:
            raise ValueError("count_masked must be non-negative")


@dataclass
class ToyModel:
    theta: np.ndarray
    code_vocab: Dict[str, int]
    comment_vocab: List[str]
    lang: str
    history: List[dict] = field(default_factory=list, repr=False)

    unk_token = UNK

    def features(self, code: str) -> np.ndarray:
        return self.feature_ids(code_subtokens(code, self.lang))

    def feature_ids(self, subtokens: Sequence[str]) -> np.ndarray:
        return np.array([self.code_vocab[t] for t in subtokens if t in self.code_vocab], dtype=np.int64)

    def comment_ids(self, comment: str) -> np.ndarray:
        index = {t: i for i, t in enumerate(self.comment_vocab)}
        return np.array([index.get(t, 0) for t in normalize(comment)], dtype=np.int64)

    def logits(self, feats: np.ndarray) -> np.ndarray:
        if len(feats) == 0:
            return np.zeros(len(self.comment_vocab))
        return self.theta[feats].mean(axis=0)

    def probabilities(self, code: str) -> np.ndarray:
        return softmax(self.logits(self.features(code)))

    def generate(self, code: str, length: int = 8) -> str:
        return toy_generate(self, code, length)


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - np.max(z))
    return e / e.sum()


def _loss_grad(model: ToyModel, feats: np.ndarray, targets: np.ndarray, want_grad: bool = True):
    """Loss and the gradient restricted to the feature rows (``rows``, ``row_grads``)."""
    z = model.logits(feats)
    m = z.max()
    logz = m + np.log(np.exp(z - m).sum())
    loss = float(np.mean(logz - z[targets]))
    if not want_grad:
        return loss, None, None
    p = np.exp(z - logz)
    g = p.copy()
    np.add.at(g, targets, -1.0 / len(targets))
    if len(feats) == 0:
        return loss, np.zeros(0, dtype=np.int64), np.zeros((0, len(z)))
    rows, counts = np.unique(feats, return_counts=True)
    return loss, rows, (counts / len(feats))[:, None] * g[None, :]


def toy_loss(model: ToyModel, code: str, comment: str) -> float:
    """Mean negative log-likelihood of the comment tokens given the code."""
    targets = model.comment_ids(comment)
    if len(targets) == 0:
        raise ValueError("comment has no tokens")
    return _loss_grad(model, model.features(code), targets, want_grad=False)[0]


def toy_loss_grad(model: ToyModel, code: str, comment: str) -> Tuple[float, np.ndarray]:
    """Loss and its dense gradient with respect to ``model.theta``."""
    targets = model.comment_ids(comment)
    if len(targets) == 0:
        raise ValueError("comment has no tokens")
    loss, rows, grads = _loss_grad(model, model.features(code), targets)
    dense = np.zeros_like(model.theta)
    dense[rows] = grads
    return loss, dense


def toy_generate(model: ToyModel, code: str, length: int = 8) -> str:
    """The ``length`` most probable comment tokens, most probable first (ties in vocabulary order)."""
    if length <= 0:
        return ""
    p = model.probabilities(code)[1:]
    order = np.argsort(-p, kind="stable")[:length]
    return " ".join(model.comment_vocab[i + 1] for i in order)


# ---------------------------------------------------------------- masking

def _choose(names: Sequence[str], count_masked: int, rng: np.random.Generator) -> List[str]:
    k = min(count_masked, len(names))
    if k == 0:
        return []
    picked = rng.choice(len(names), size=k, replace=False)
    return [names[i] for i in sorted(int(x) for x in picked)]


def mask_identifiers(code: str, count_masked: int, rng: np.random.Generator, lang: str) -> str:
    """Rename ``count_masked`` uniformly chosen declared identifiers to ``<unk>`` at every occurrence."""
    infos = extract_identifiers(code, lang)
    chosen = set(_choose([i.name for i in infos], count_masked, rng))
    if not chosen:
        return code
    spans = sorted(span for info in infos if info.name in chosen for span in info.occurrences)
    out, last = [], 0
    for start, end in spans:
        out.append(code[last:start])
        out.append(UNK)
        last = end
    out.append(code[last:])
    return "".join(out)


class _MaskPlan:
    """Precomputed subtoken layout of one sample so masking needs no re-lexing.

    ``masked(rng)`` consumes ``rng`` exactly as ``mask_identifiers`` does and
    yields the subtokens of the masked code.
    """

    def __init__(self, code: str, lang: str):
        infos = extract_identifiers(code, lang)
        self.names = [i.name for i in infos]
        owner = {span: info.name for info in infos for span in info.occurrences}
        self.parts: List[Tuple[List[str], Optional[str]]] = []
        for tok in significant(tokenize(code, lang)):
            if tok.kind == IDENTIFIER:
                subs = split_subtokens(tok.text)
            elif tok.kind == LITERAL and tok.text[-1] in "'\"":
                subs = [STR_PLACEHOLDER]
            else:
                subs = [tok.text.lower()]
            self.parts.append((subs, owner.get(tok.span)))

    def original(self) -> List[str]:
        return [s for subs, _ in self.parts for s in subs]

    def masked(self, count_masked: int, rng: np.random.Generator) -> List[str]:
        chosen = set(_choose(self.names, count_masked, rng))
        out: List[str] = []
        for subs, name in self.parts:
            if name is not None and name in chosen:
                out.append(UNK)
            else:
                out.extend(subs)
        return out


# ---------------------------------------------------------------- training

def build_toy(samples: Sequence[CodeSample]) -> ToyModel:
    """Zero-initialized model whose vocabularies cover ``samples``."""
    samples = list(samples)
    if not samples:
        raise ValueError("cannot build a toy model from an empty dataset")
    lang = samples[0].lang
    code_counts: Counter = Counter()
    comment_counts: Counter = Counter()
    for s in samples:
        code_counts.update(code_subtokens(s.code, s.lang))
        comment_counts.update(normalize(s.comment))
    code_tokens = sorted(code_counts, key=lambda t: (-code_counts[t], t))
    if UNK not in code_counts:
        code_tokens.append(UNK)
    comment_tokens = [OOV] + sorted((t for t in comment_counts if t != OOV), key=lambda t: (-comment_counts[t], t))
    if not code_counts or len(comment_tokens) < 2:
        raise ValueError("degenerate vocabulary: no code or comment tokens")
    theta = np.zeros((len(code_tokens), len(comment_tokens)))
    return ToyModel(theta=theta, code_vocab={t: i for i, t in enumerate(code_tokens)},
                    comment_vocab=comment_tokens, lang=lang)


def train_toy(samples: Sequence[CodeSample], config: Optional[MaskedTrainConfig] = None,
              masked: bool = True) -> ToyModel:
    """Mini-batch gradient descent on lam * L_origin + (1 - lam) * L_masked.

    Each epoch draws fresh masks for every sample. With ``masked=False`` the
    objective is L_origin alone (lam forced to 1). Shuffling and masking use
    separate seeded streams, so ``masked=True`` with lam=1 follows exactly
    the same trajectory as ``masked=False``. ``model.history`` holds one row
    per epoch (epoch 0 = initialization) of whole-dataset losses.
    """
    config = config or MaskedTrainConfig()
    model = build_toy(samples)
    lam = config.lam if masked else 1.0
    plans = [_MaskPlan(s.code, s.lang) for s in samples]
    orig_feats = [model.feature_ids(p.original()) for p in plans]
    targets = [model.comment_ids(s.comment) for s in samples]
    keep = [i for i, t in enumerate(targets) if len(t)]
    shuffle_rng = np.random.default_rng([config.seed, 0])
    mask_rng = np.random.default_rng([config.seed, 1])

    def epoch_losses(mask_feats):
        lo = float(np.mean([_loss_grad(model, orig_feats[i], targets[i], False)[0] for i in keep]))
        if mask_feats is None:
            return lo, float("nan"), lo
        lm = float(np.mean([_loss_grad(model, mask_feats[i], targets[i], False)[0] for i in keep]))
        return lo, lm, lam * lo + (1 - lam) * lm

    def draw_masks():
        return {i: model.feature_ids(plans[i].masked(config.count_masked, mask_rng)) for i in keep}

    use_masks = masked and lam < 1.0
    masks = draw_masks() if use_masks else None
    lo, lm, lc = epoch_losses(masks)
    model.history.append({"epoch": 0, "combined": lc, "origin": lo, "masked": lm})
    for epoch in range(1, config.epochs + 1):
        order = [keep[i] for i in shuffle_rng.permutation(len(keep))]
        for b in range(0, len(order), config.batch_size):
            batch = order[b:b + config.batch_size]
            rows, grads = [], []
            for i in batch:
                _, r, g = _loss_grad(model, orig_feats[i], targets[i])
                rows.append(r)
                grads.append(lam * g)
                if use_masks:
                    _, r, g = _loss_grad(model, masks[i], targets[i])
                    rows.append(r)
                    grads.append((1 - lam) * g)
            np.add.at(model.theta, np.concatenate(rows),
                      -(config.learning_rate / len(batch)) * np.concatenate(grads))
        lo, lm, lc = epoch_losses(masks)
        model.history.append({"epoch": epoch, "combined": lc, "origin": lo, "masked": lm})
        if use_masks and epoch < config.epochs:
            masks = draw_masks()
    if not np.all(np.isfinite(model.theta)):
        raise FloatingPointError("toy model training diverged")
    return model


# ---------------------------------------------------------------- persistence

def save_toy(model: ToyModel, path: Union[str, Path]) -> None:
    """Parameter rows in the embedding-table text format plus a ``.vocab`` listing."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"{len(model.comment_vocab)} 0 0\n")
        for tok, row in sorted(model.code_vocab.items(), key=lambda kv: kv[1]):
            vals = " ".join(format(float(x), ".9g") for x in model.theta[row])
            fh.write(f"{tok} {vals}\n")
    with open(str(path) + ".vocab", "w", encoding="utf-8", newline="") as fh:
        fh.write(f"lang {model.lang}\n")
        for tok in model.comment_vocab:
            fh.write(tok + "\n")


def load_toy(path: Union[str, Path]) -> ToyModel:
    from ..embed import load_table
    table = load_table(path)
    with open(str(path) + ".vocab", "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2 or header[0] != "lang":
            raise ValueError(f"{path}.vocab: bad header")
        comment_vocab = [line.rstrip("\n") for line in fh]
    if len(comment_vocab) != table.dim:
        raise ValueError(f"{path}: {table.dim} columns but {len(comment_vocab)} comment tokens")
    return ToyModel(theta=table.vectors.copy(), code_vocab=dict(table.vocab), comment_vocab=comment_vocab,
                    lang=header[1])
