"""Span-level precision/recall/F1 with partial-overlap credit.

A predicted span s earns credit |s∩t|/|s| against each gold span t (and
symmetrically |s∩t|/|t| on the recall side), measured over character sets.
Document accumulators are summed micro-style by default; macro averaging
and token-level granularity are available behind flags.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

from .corpus import AnnotatedSample, ClaimSpan
from .errors import ValidationError
from .segment import Token


class EvalMode(str, enum.Enum):
    MICRO = "micro"
    MACRO = "macro"


class EvalUnit(str, enum.Enum):
    CHAR = "char"
    TOKEN = "token"


@dataclass(frozen=True)
class DocScores:
    doc_id: str
    p_num: float
    p_den: int
    r_num: float
    r_den: int


@dataclass(frozen=True)
class SpanEvalResult:
    precision: float
    recall: float
    f1: float
    per_doc: tuple[DocScores, ...] = ()

    @staticmethod
    def from_rates(precision: float, recall: float, per_doc=()) -> "SpanEvalResult":
        if precision + recall > 0:
            f1 = 2 * precision * recall / (precision + recall)
        else:
            f1 = 0.0
        return SpanEvalResult(precision, recall, f1, tuple(per_doc))


def doc_overlap_scores(
    pred: Sequence[ClaimSpan], gold: Sequence[ClaimSpan], doc_id: str = ""
) -> DocScores:
    """Accumulate overlap credit for one document.

    Spans within each side must be pairwise disjoint; the denominators are
    the span counts, so each span contributes at most 1 to its numerator.
    """
    _check_disjoint(pred, "predicted")
    _check_disjoint(gold, "gold")
    p_num = 0.0
    r_num = 0.0
    for s in pred:
        for t in gold:
            overlap = min(s.end_char, t.end_char) - max(s.start_char, t.start_char)
            if overlap > 0:
                p_num += overlap / len(s)
                r_num += overlap / len(t)
    return DocScores(doc_id, p_num, len(pred), r_num, len(gold))


def _check_disjoint(spans: Sequence[ClaimSpan], side: str) -> None:
    ordered = sorted(spans, key=lambda s: s.start_char)
    for a, b in zip(ordered, ordered[1:]):
        if b.start_char < a.end_char:
            raise ValidationError(f"{side} spans overlap")


def corpus_eval(
    docs: Sequence[tuple[str, Sequence[ClaimSpan], Sequence[ClaimSpan]]],
    mode: EvalMode = EvalMode.MICRO,
) -> SpanEvalResult:
    """Aggregate (doc id, predicted spans, gold spans) triples.

    Micro mode divides summed numerators by summed denominators; macro mode
    averages per-document rates. Zero denominators score 0.
    """
    per_doc = [doc_overlap_scores(pred, gold, doc_id) for doc_id, pred, gold in docs]
    if mode is EvalMode.MICRO:
        p_den = sum(d.p_den for d in per_doc)
        r_den = sum(d.r_den for d in per_doc)
        precision = sum(d.p_num for d in per_doc) / p_den if p_den else 0.0
        recall = sum(d.r_num for d in per_doc) / r_den if r_den else 0.0
    else:
        if not per_doc:
            precision = recall = 0.0
        else:
            precision = sum(
                d.p_num / d.p_den if d.p_den else 0.0 for d in per_doc
            ) / len(per_doc)
            recall = sum(
                d.r_num / d.r_den if d.r_den else 0.0 for d in per_doc
            ) / len(per_doc)
    return SpanEvalResult.from_rates(precision, recall, per_doc)


def pair_samples(
    pred: Sequence[AnnotatedSample], gold: Sequence[AnnotatedSample]
) -> list[tuple[str, tuple[ClaimSpan, ...], tuple[ClaimSpan, ...]]]:
    """Join two annotated corpora on post id, in gold order.

    Posts present on only one side raise ValidationError; prediction files
    must cover the gold set exactly.
    """
    pred_by_id = {s.post.id: s for s in pred}
    if len(pred_by_id) != len(pred):
        raise ValidationError("duplicate ids in predictions")
    gold_ids = {s.post.id for s in gold}
    extra = sorted(set(pred_by_id) - gold_ids)
    if extra:
        raise ValidationError(f"predictions for unknown ids: {', '.join(extra[:5])}")
    missing = [s.post.id for s in gold if s.post.id not in pred_by_id]
    if missing:
        raise ValidationError(f"missing predictions for: {', '.join(missing[:5])}")
    return [
        (s.post.id, pred_by_id[s.post.id].spans, s.spans) for s in gold
    ]


def to_token_spans(
    spans: Sequence[ClaimSpan], tokens: Sequence[Token]
) -> list[ClaimSpan]:
    """Re-express character spans as half-open token-index intervals.

    Used for token-granularity evaluation; a span maps to the contiguous
    range of tokens its characters overlap.
    """
    converted = []
    for span in spans:
        members = [
            k
            for k, tok in enumerate(tokens)
            if tok.start_char < span.end_char and span.start_char < tok.end_char
        ]
        if not members:
            raise ValidationError(
                f"span [{span.start_char}, {span.end_char}) overlaps no token"
            )
        converted.append(ClaimSpan(members[0], members[-1] + 1))
    return converted


def median_of_runs(results: Sequence[SpanEvalResult]) -> SpanEvalResult:
    """Componentwise median of P, R, and F1 across repeated runs.

    Even run counts take the lower median. The per-document breakdown is
    dropped because medians of different runs need not describe any single
    run's documents.
    """
    if not results:
        raise ValidationError("median_of_runs requires at least one result")
    return SpanEvalResult(
        precision=_lower_median([r.precision for r in results]),
        recall=_lower_median([r.recall for r in results]),
        f1=_lower_median([r.f1 for r in results]),
    )


def _lower_median(values: list[float]) -> float:
    return sorted(values)[(len(values) - 1) // 2]
