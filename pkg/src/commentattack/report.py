"""Robustness reports: per-sample metric rows and corpus-level r_d / v_r / s_r."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from .metrics import (
    bleu, corpus_bleu, is_degenerate, meteor_lite, relative_degradation, rouge_l, success_rate, valid_rate,
)


@dataclass
class ReportRow:
    id: str
    bleu_before: float
    bleu_after: float
    rouge_l_before: float
    rouge_l_after: float
    meteor_before: float
    meteor_after: float
    valid: bool
    queries: int
    degenerate: bool


@dataclass
class RobustnessReport:
    rows: List[ReportRow]
    corpus_bleu_before: float
    corpus_bleu_after: float
    r_d: float
    v_r: float
    s_r: float
    mean_queries: float
    degenerate: bool
    failed: List[str] = field(default_factory=list)
    config: Dict[str, Any] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def render(self) -> str:
        return render_table(self)


NOTES = [
    "bleu: smoothed sentence-level BLEU-4 (add-one on n>1); corpus BLEU uses pooled counts with the same smoothing",
    "meteor_lite: exact-match unigram METEOR, no stemming or synonyms",
]


def make_row(sample_id: str, reference: str, output_before: str, output_after: str, valid: bool,
             queries: int) -> ReportRow:
    b = bleu(output_before, reference)
    return ReportRow(
        id=sample_id,
        bleu_before=b,
        bleu_after=bleu(output_after, reference),
        rouge_l_before=rouge_l(output_before, reference),
        rouge_l_after=rouge_l(output_after, reference),
        meteor_before=meteor_lite(output_before, reference),
        meteor_after=meteor_lite(output_after, reference),
        valid=bool(valid),
        queries=int(queries),
        degenerate=is_degenerate(b),
    )


def aggregate(rows: Sequence[ReportRow], references: Sequence[str], outputs_before: Sequence[str],
              outputs_after: Sequence[str], failed: Sequence[str] = (), config: Optional[dict] = None,
              notes: Sequence[str] = ()) -> RobustnessReport:
    if not rows:
        raise ValueError("cannot build a report from zero samples")
    before = corpus_bleu(outputs_before, references)
    after = corpus_bleu(outputs_after, references)
    r_d = relative_degradation(before, after)
    v_r = valid_rate(sum(r.valid for r in rows), len(rows))
    return RobustnessReport(
        rows=list(rows),
        corpus_bleu_before=before,
        corpus_bleu_after=after,
        r_d=r_d,
        v_r=v_r,
        s_r=success_rate(r_d, v_r),
        mean_queries=sum(r.queries for r in rows) / len(rows),
        degenerate=is_degenerate(before),
        failed=list(failed),
        config=dict(config or {}),
        notes=NOTES + list(notes),
    )


def build_report(results: Sequence, adapter=None, config: Optional[dict] = None, failed: Sequence[str] = (),
                 notes: Sequence[str] = ()) -> RobustnessReport:
    """Report over attack results.

    Model outputs recorded during the attack are reused. When ``adapter`` is
    given, both programs are re-queried instead, which is what evaluating a
    stored adversarial set against another model needs.
    """
    if not results:
        raise ValueError("cannot build a report from zero samples")
    rows, refs, outs_b, outs_a = [], [], [], []
    for res in results:
        if adapter is not None:
            out_b = adapter.generate(res.original.code)
            out_a = adapter.generate(res.adv.adv_code)
        else:
            out_b, out_a = res.output_before, res.output_after
        rows.append(make_row(res.original.id, res.original.comment, out_b, out_a, res.valid, res.queries))
        refs.append(res.original.comment)
        outs_b.append(out_b)
        outs_a.append(out_a)
    return aggregate(rows, refs, outs_b, outs_a, failed, config, notes)


_COLUMNS = [
    ("id", "id"), ("bleu_before", "bleu"), ("bleu_after", "bleu'"), ("rouge_l_before", "rougeL"),
    ("rouge_l_after", "rougeL'"), ("meteor_before", "meteor_lite"), ("meteor_after", "meteor_lite'"),
    ("valid", "valid"), ("queries", "queries"),
]


def _cell(value) -> str:
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.2f}"
    return str(value)


def render_table(report: RobustnessReport) -> str:
    """Aligned plain-text table of the rows followed by the aggregates."""
    header = [title for _, title in _COLUMNS]
    body = [[_cell(getattr(r, key)) + ("*" if key == "bleu_before" and r.degenerate else "")
             for key, _ in _COLUMNS] for r in report.rows]
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]

    def line(cells):
        return "  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(cells, widths)))

    out = [line(header), "  ".join("-" * w for w in widths)]
    out.extend(line(row) for row in body)
    out.append("")
    out.append(f"corpus bleu before  {report.corpus_bleu_before:.2f}")
    out.append(f"corpus bleu after   {report.corpus_bleu_after:.2f}")
    out.append(f"r_d                 {100 * report.r_d:.2f}" + ("  (degenerate: zero baseline)" if report.degenerate
                                                               else ""))
    out.append(f"v_r                 {100 * report.v_r:.2f}")
    out.append(f"s_r                 {100 * report.s_r:.2f}")
    out.append(f"mean queries        {report.mean_queries:.2f}")
    if report.failed:
        out.append(f"failed samples      {len(report.failed)}: {', '.join(report.failed)}")
    if any(r.degenerate for r in report.rows):
        out.append("* zero baseline BLEU; row r_d defined as 0")
    for note in report.notes:
        out.append(f"note: {note}")
    return "\n".join(out) + "\n"


def write_report(report: RobustnessReport, out_dir: Union[str, Path], stem: str = "report") -> None:
    out_dir = Path(out_dir)
    with open(out_dir / f"{stem}.json", "w", encoding="utf-8", newline="") as fh:
        fh.write(report.dumps())
    with open(out_dir / f"{stem}.txt", "w", encoding="utf-8", newline="") as fh:
        fh.write(report.render())
