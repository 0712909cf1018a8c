"""Code-comment datasets and adversarial outputs as JSON Lines."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from .lang import LANGS, validate

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

ROLES = ("train", "validation", "test")


class DatasetParseError(ValueError):
    """A JSONL line could not be parsed; ``line`` is 1-based."""

    def __init__(self, path: PathLike, line: int, reason: str):
        super().__init__(f"{path}:{line}: {reason}")
        self.path = str(path)
        self.line = line


@dataclass(frozen=True)
class CodeSample:
    id: str
    code: str
    comment: str
    lang: str


@dataclass(frozen=True)
class Dataset:
    name: str
    samples: Tuple[CodeSample, ...]
    role: str = "test"
    dropped: int = 0

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def by_id(self, sample_id: str) -> CodeSample:
        for s in self.samples:
            if s.id == sample_id:
                return s
        raise KeyError(sample_id)


@dataclass(frozen=True)
class AdversarialSample:
    original_id: str
    adv_code: str
    substitutions: Tuple[Tuple[str, str], ...]
    comment: str

    def to_json(self) -> dict:
        return {
            "original_id": self.original_id,
            "adv_code": self.adv_code,
            "substitutions": [list(pair) for pair in self.substitutions],
            "comment": self.comment,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AdversarialSample":
        return cls(
            original_id=str(obj["original_id"]),
            adv_code=obj["adv_code"],
            substitutions=tuple((str(a), str(b)) for a, b in obj["substitutions"]),
            comment=obj["comment"],
        )


def make_dataset(samples: Sequence[CodeSample], name: str = "dataset", role: str = "test",
                 dropped: int = 0) -> Dataset:
    if role not in ROLES:
        raise ValueError(f"role must be one of {ROLES}")
    seen = set()
    for s in samples:
        if s.id in seen:
            raise ValueError(f"duplicate sample id {s.id!r}")
        seen.add(s.id)
    return Dataset(name=name, samples=tuple(samples), role=role, dropped=dropped)


def _read_jsonl(path: PathLike) -> List[Tuple[int, dict]]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetParseError(path, lineno, f"malformed JSON ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise DatasetParseError(path, lineno, "expected a JSON object")
            rows.append((lineno, obj))
    return rows


def load_dataset(path: PathLike, lang: str, role: str = "test", name: Optional[str] = None) -> Dataset:
    """Load ``{"code", "comment", "id"?}`` records.

    Missing ids become zero-padded line numbers. Records whose code fails
    the validity check, or whose comment is blank, are dropped and counted
    in ``Dataset.dropped``.
    """
    if lang not in LANGS:
        raise ValueError(f"unsupported language {lang!r}")
    rows = _read_jsonl(path)
    width = max(6, len(str(len(rows))))
    samples: List[CodeSample] = []
    dropped = 0
    seen = set()
    for lineno, obj in rows:
        if "code" not in obj or "comment" not in obj:
            raise DatasetParseError(path, lineno, "record needs 'code' and 'comment'")
        sid = str(obj["id"]) if obj.get("id") is not None else str(lineno).zfill(width)
        code, comment = obj["code"], obj["comment"]
        if not isinstance(code, str) or not isinstance(comment, str):
            raise DatasetParseError(path, lineno, "'code' and 'comment' must be strings")
        if not code.strip() or not " ".join(comment.split()) or not validate(code, lang):
            dropped += 1
            continue
        if sid in seen:
            raise DatasetParseError(path, lineno, f"duplicate id {sid!r}")
        seen.add(sid)
        samples.append(CodeSample(sid, code, comment, lang))
    if dropped:
        logger.info("%s: dropped %d invalid record(s)", path, dropped)
    return Dataset(name=name or Path(path).stem, samples=tuple(samples), role=role, dropped=dropped)


def _dump_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False) + "\n"


def save_dataset(dataset: Iterable[CodeSample], path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for s in dataset:
            fh.write(_dump_line({"id": s.id, "code": s.code, "comment": s.comment}))


def save_adversarial(samples: Iterable[AdversarialSample], path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for s in samples:
            fh.write(_dump_line(s.to_json()))


def load_adversarial(path: PathLike) -> List[AdversarialSample]:
    out = []
    for lineno, obj in _read_jsonl(path):
        try:
            out.append(AdversarialSample.from_json(obj))
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetParseError(path, lineno, f"bad adversarial record ({exc})") from None
    return out
