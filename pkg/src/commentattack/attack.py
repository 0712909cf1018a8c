"""Identifier-substitution attacks: embedding-guided search plus random and Metropolis-Hastings baselines."""
from __future__ import annotations

import logging
import math
import string
import zlib
from dataclasses import asdict, dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .corpus import AdversarialSample, CodeSample
from .embed import CandidateIndex, EmbeddingTable, cosine, program_embedding, select_candidates
from .lang import (
    IdentifierInfo, RenameError, code_subtokens, extract_identifiers, identifier_texts, rename, validate,
)
from .metrics import bleu
from .model.adapter import AdapterError

logger = logging.getLogger(__name__)

METHODS = ("accent", "random", "mh")
ZERO_EPS = 1e-12


@dataclass
class AttackConfig:
    k: int = 5
    max: int = 2
    alpha: float = 0.5
    beta: float = 0.5
    seed: int = 0
    method: str = "accent"
    mh_iterations: int = 100
    mh_temperature: float = 0.05

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.k < 1 or self.max < 1:
            raise ValueError("k and max must be positive")
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.beta <= 1.0):
            raise ValueError("alpha and beta must lie in [0, 1]")
        if self.mh_iterations < 0 or self.mh_temperature <= 0:
            raise ValueError("mh_iterations must be >= 0 and mh_temperature > 0")


@dataclass
class SubstitutionRecord:
    w: str
    w_star: Optional[str]
    delta_score: Optional[float]
    saliency: Optional[float]
    h: Optional[float]
    applied: bool = False


@dataclass
class AttackResult:
    original: CodeSample
    adv: AdversarialSample
    records: List[SubstitutionRecord]
    score_before: float
    score_after: float
    queries: int
    output_before: str
    output_after: str
    valid: bool
    method: str

    @property
    def applied(self) -> List[SubstitutionRecord]:
        return [r for r in self.records if r.applied]

    def to_json(self) -> dict:
        return {
            "id": self.original.id,
            "method": self.method,
            "adv": self.adv.to_json(),
            "records": [asdict(r) for r in self.records],
            "score_before": self.score_before,
            "score_after": self.score_after,
            "queries": self.queries,
            "output_before": self.output_before,
            "output_after": self.output_after,
            "valid": self.valid,
        }


class Oracle:
    """Per-sample scoring against one reference with a query counter.

    Identical programs are scored once; ``queries`` counts real model calls.
    """

    def __init__(self, adapter, reference: str):
        self.adapter = adapter
        self.reference = reference
        self.queries = 0
        self._outputs: Dict[str, str] = {}

    def output(self, code: str) -> str:
        if code not in self._outputs:
            self._outputs[code] = self.adapter.generate(code)
            self.queries += 1
        return self._outputs[code]

    def __call__(self, code: str) -> float:
        return bleu(self.output(code), self.reference)


def sample_rng(seed: int, sample_id: str) -> np.random.Generator:
    """Independent stream per (seed, sample) so results do not depend on corpus order or jobs."""
    return np.random.default_rng([seed, zlib.crc32(sample_id.encode("utf-8"))])


def score(adapter, code: str, reference: str) -> float:
    """BLEU of the model's comment for ``code`` against ``reference`` (one query)."""
    return bleu(adapter.generate(code), reference)


def _clamp(x: float) -> float:
    return 0.0 if abs(x) < ZERO_EPS else x


def h_score(s: float, delta: float, alpha: float = 0.5, beta: float = 0.5) -> float:
    """Ranking score of an identifier from its saliency ``s`` and best BLEU drop ``delta``."""
    s, delta = _clamp(s), _clamp(delta)
    if s != 0.0 and delta != 0.0:
        return s * delta
    if s != 0.0:
        return s * beta
    if delta != 0.0:
        return delta * alpha
    return 0.0


def saliency(sample: CodeSample, w: str, table: EmbeddingTable) -> float:
    """cos(vec(w), vec(p)); 0 when ``w`` has no embedding or the program vector is zero."""
    vec = table.identifier_vector(w)
    if vec is None:
        return 0.0
    return cosine(vec, program_embedding(code_subtokens(sample.code, sample.lang), table))


def _try_rename(code: str, old: str, new: str, lang: str) -> Optional[str]:
    try:
        out = rename(code, old, new, lang)
    except RenameError as exc:
        logger.debug("candidate %r for %r unusable: %s", new, old, exc)
        return None
    return out if validate(out, lang) else None


def best_candidate(sample: CodeSample, w: str, candidates: Sequence[str], oracle: Callable[[str], float],
                   before: Optional[float] = None) -> Optional[Tuple[str, float]]:
    """Candidate causing the largest BLEU drop when substituted alone for ``w``.

    Colliding or invalid candidates are skipped; ties go to the earlier
    candidate. ``None`` when no candidate is usable.
    """
    if before is None:
        before = oracle(sample.code)
    best: Optional[Tuple[str, float]] = None
    for cand in candidates:
        adv = _try_rename(sample.code, w, cand, sample.lang)
        if adv is None:
            continue
        drop = before - oracle(adv)
        if best is None or drop > best[1]:
            best = (cand, drop)
    return best


def letter_candidate(w: str, code: str, lang: str, rng: np.random.Generator) -> Optional[str]:
    """A random different lowercase letter not already used as an identifier in ``code``."""
    taken = identifier_texts(code, lang) | {w}
    letters = [c for c in string.ascii_lowercase if c not in taken]
    if not letters:
        return None
    return letters[int(rng.integers(len(letters)))]


def _unchanged(sample: CodeSample, oracle: Oracle, records: List[SubstitutionRecord], method: str,
               before: Optional[float] = None) -> AttackResult:
    before = oracle(sample.code) if before is None else before
    out = oracle.output(sample.code)
    adv = AdversarialSample(sample.id, sample.code, (), sample.comment)
    return AttackResult(sample, adv, records, before, before, oracle.queries, out, out,
                        validate(sample.code, sample.lang), method)


def _finish(sample: CodeSample, oracle: Oracle, records: List[SubstitutionRecord], before: float,
            adv_code: str, subs: Sequence[Tuple[str, str]], method: str) -> AttackResult:
    after = oracle(adv_code)
    adv = AdversarialSample(sample.id, adv_code, tuple(subs), sample.comment)
    return AttackResult(sample, adv, records, before, after, oracle.queries, oracle.output(sample.code),
                        oracle.output(adv_code), validate(adv_code, sample.lang), method)


def accent_attack(sample: CodeSample, adapter, table: EmbeddingTable, global_vocab: Iterable[str],
                  config: Optional[AttackConfig] = None, index: Optional[CandidateIndex] = None) -> AttackResult:
    """Embedding-guided identifier substitution.

    Every declared identifier gets its best single substitution (nearest
    neighbours in embedding space, or a random letter for one-letter names),
    scored on the original program. Identifiers are ranked by ``h_score``
    (ties: declaration order) and the top ``config.max`` substitutions that
    still apply cleanly to the mutating program are kept.
    """
    config = config or AttackConfig()
    oracle = Oracle(adapter, sample.comment)
    infos = extract_identifiers(sample.code, sample.lang)
    if not infos:
        return _unchanged(sample, oracle, [], "accent")
    index = index if index is not None else CandidateIndex(global_vocab, table)
    rng = sample_rng(config.seed, sample.id)
    declared = [i.name for i in infos]
    before = oracle(sample.code)
    prog_vec = program_embedding(code_subtokens(sample.code, sample.lang), table)

    ranked: List[Tuple[float, int, SubstitutionRecord]] = []
    records: List[SubstitutionRecord] = []
    for pos, info in enumerate(infos):
        w = info.name
        if info.single_letter:
            letter = letter_candidate(w, sample.code, sample.lang, rng)
            cands = [letter] if letter else []
        else:
            cands = select_candidates(w, declared, (), table, config.k, index=index).names
        vec = table.identifier_vector(w)
        s = cosine(vec, prog_vec) if vec is not None else 0.0
        found = best_candidate(sample, w, cands, oracle, before) if cands else None
        if found is None:
            records.append(SubstitutionRecord(w, None, None, s, None))
            continue
        w_star, delta = found
        rec = SubstitutionRecord(w, w_star, delta, s, h_score(s, delta, config.alpha, config.beta))
        records.append(rec)
        ranked.append((rec.h, pos, rec))

    ranked.sort(key=lambda t: (-t[0], t[1]))
    code, subs = sample.code, []
    for _, _, rec in ranked:
        if len(subs) >= config.max:
            break
        out = _try_rename(code, rec.w, rec.w_star, sample.lang)
        if out is None:
            logger.info("%s: %r -> %r no longer applies, skipped", sample.id, rec.w, rec.w_star)
            continue
        code = out
        rec.applied = True
        subs.append((rec.w, rec.w_star))
    return _finish(sample, oracle, records, before, code, subs, "accent")


def _apply_map(code: str, infos: Sequence[IdentifierInfo], mapping: Dict[str, str]) -> str:
    """Rewrite all occurrences of every mapped identifier in one pass over the original spans."""
    spans = sorted((span, mapping[i.name]) for i in infos if i.name in mapping for span in i.occurrences)
    out, last = [], 0
    for (start, end), new in spans:
        out.append(code[last:start])
        out.append(new)
        last = end
    out.append(code[last:])
    return "".join(out)


def random_attack(sample: CodeSample, adapter, global_vocab: Iterable[str],
                  config: Optional[AttackConfig] = None) -> AttackResult:
    """Uniformly chosen identifiers, uniformly chosen replacements, no filtering.

    Invalid outputs are kept and flagged (``valid=False``).
    """
    config = config or AttackConfig(method="random")
    oracle = Oracle(adapter, sample.comment)
    infos = extract_identifiers(sample.code, sample.lang)
    vocab = sorted(set(global_vocab))
    if not infos or not vocab:
        return _unchanged(sample, oracle, [], "random")
    rng = sample_rng(config.seed, sample.id)
    before = oracle(sample.code)
    picked = sorted(int(i) for i in rng.choice(len(infos), size=min(config.max, len(infos)), replace=False))
    mapping: Dict[str, str] = {}
    records = []
    for i in picked:
        new = vocab[int(rng.integers(len(vocab)))]
        mapping[infos[i].name] = new
        records.append(SubstitutionRecord(infos[i].name, new, None, None, None, applied=True))
    adv_code = _apply_map(sample.code, infos, mapping)
    return _finish(sample, oracle, records, before, adv_code, list(mapping.items()), "random")


class _MHState:
    __slots__ = ("mapping", "code", "drop")

    def __init__(self, mapping: Dict[str, str], code: str, drop: float):
        self.mapping = mapping
        self.code = code
        self.drop = drop


def mh_candidates(sample: CodeSample, infos: Sequence[IdentifierInfo], table: EmbeddingTable,
                  config: AttackConfig, index: CandidateIndex) -> Dict[str, List[str]]:
    """Per-identifier proposal lists: nearest neighbours minus anything already used as an identifier."""
    declared = [i.name for i in infos]
    used = identifier_texts(sample.code, sample.lang)
    out: Dict[str, List[str]] = {}
    for info in infos:
        names = [c for c in select_candidates(info.name, declared, (), table, config.k, index=index).names
                 if c not in used]
        if names:
            out[info.name] = names
    return out


def mh_attack(sample: CodeSample, adapter, table: EmbeddingTable, global_vocab: Iterable[str],
              config: Optional[AttackConfig] = None, index: Optional[CandidateIndex] = None) -> AttackResult:
    """Metropolis-Hastings search over substitution maps.

    The state is a map of at most ``config.max`` identifiers to distinct
    candidates. Each step proposes, with equal probability, replacing one
    mapped target, inserting a new mapping or reverting one; infeasible or
    invalid proposals are rejected. The target density is
    exp(drop / temperature) with drop = (score(p) - score(x)) / 100. The best
    state ever visited (earliest on ties) is returned.
    """
    config = config or AttackConfig(method="mh")
    oracle = Oracle(adapter, sample.comment)
    infos = extract_identifiers(sample.code, sample.lang)
    if not infos or config.mh_iterations == 0:
        return _unchanged(sample, oracle, [], "mh")
    index = index if index is not None else CandidateIndex(global_vocab, table)
    cands = mh_candidates(sample, infos, table, config, index)
    if not cands:
        return _unchanged(sample, oracle, [], "mh")
    rng = sample_rng(config.seed, sample.id)
    before = oracle(sample.code)
    order = [i.name for i in infos if i.name in cands]

    current = _MHState({}, sample.code, 0.0)
    best = current
    for _ in range(config.mh_iterations):
        move = int(rng.integers(3))
        mapped = [n for n in order if n in current.mapping]
        free = [n for n in order if n not in current.mapping]
        mapping = dict(current.mapping)
        if move == 0 and mapped:
            w = mapped[int(rng.integers(len(mapped)))]
            options = [c for c in cands[w] if c != mapping[w]]
            if not options:
                continue
            mapping[w] = options[int(rng.integers(len(options)))]
        elif move == 1 and free and len(mapped) < config.max:
            w = free[int(rng.integers(len(free)))]
            mapping[w] = cands[w][int(rng.integers(len(cands[w])))]
        elif move == 2 and mapped:
            del mapping[mapped[int(rng.integers(len(mapped)))]]
        else:
            continue
        if len(set(mapping.values())) != len(mapping):
            continue
        code = _apply_map(sample.code, infos, mapping)
        if not validate(code, sample.lang):
            continue
        drop = (before - oracle(code)) / 100.0
        gain = (drop - current.drop) / config.mh_temperature
        if gain >= 0 or rng.random() < math.exp(gain):
            current = _MHState(mapping, code, drop)
            if current.drop > best.drop:
                best = current

    records = [SubstitutionRecord(w, best.mapping[w], None, None, None, applied=True)
               for w in order if w in best.mapping]
    subs = [(r.w, r.w_star) for r in records]
    return _finish(sample, oracle, records, before, best.code, subs, "mh")


@dataclass
class AttackFailure:
    sample_id: str
    error: str


def run_attack(sample: CodeSample, adapter, config: AttackConfig, table: Optional[EmbeddingTable] = None,
               global_vocab: Iterable[str] = (), index: Optional[CandidateIndex] = None) -> AttackResult:
    if config.method == "random":
        return random_attack(sample, adapter, global_vocab, config)
    if table is None:
        raise ValueError(f"method {config.method!r} needs an embedding table")
    if config.method == "mh":
        return mh_attack(sample, adapter, table, global_vocab, config, index)
    return accent_attack(sample, adapter, table, global_vocab, config, index)


def attack_many(samples: Sequence[CodeSample], adapter, config: AttackConfig,
                table: Optional[EmbeddingTable] = None, global_vocab: Iterable[str] = (), jobs: int = 1,
                ) -> Tuple[List[AttackResult], List[AttackFailure]]:
    """Attack every sample; a model failure only loses that sample. Results keep input order."""
    vocab = sorted(set(global_vocab))
    index = CandidateIndex(vocab, table) if table is not None and config.method != "random" else None

    def one(sample):
        try:
            return run_attack(sample, adapter, config, table, vocab, index)
        except AdapterError as exc:
            logger.error("%s: model query failed: %s", sample.id, exc)
            return AttackFailure(sample.id, f"{type(exc).__name__}: {exc}")

    if jobs <= 1:
        outcomes = [one(s) for s in samples]
    else:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(one, samples))
    results = [o for o in outcomes if isinstance(o, AttackResult)]
    failures = [o for o in outcomes if isinstance(o, AttackFailure)]
    return results, failures


def global_vocabulary(samples: Iterable[CodeSample]) -> List[str]:
    """Union of the declared identifiers of every program, sorted."""
    vocab = set()
    for s in samples:
        vocab.update(i.name for i in extract_identifiers(s.code, s.lang))
    return sorted(vocab)


def raw_vocabulary(samples: Iterable[CodeSample]) -> List[str]:
    """Every identifier-like or keyword token text in the corpus, unfiltered."""
    from .lang import significant, tokenize
    from .lang.lexer import IDENTIFIER, KEYWORD
    vocab = set()
    for s in samples:
        vocab.update(t.text for t in significant(tokenize(s.code, s.lang)) if t.kind in (IDENTIFIER, KEYWORD))
    return sorted(vocab)
