"""Data model, JSONL I/O, noise filters, splits, and dataset statistics.

Corpus files are JSONL, one record per line, UTF-8. Post records use the
fields id, language, platform, text, and optional source_url; annotated
records add spans (a list of [start, end] pairs) and provenance. Claim
files pair a post_id with the fact-checker-written normalized claim text.
All character offsets count Unicode scalar values.
"""

from __future__ import annotations

import enum
import json
import math
import random
import statistics
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import regex

from . import segment
from .errors import JsonlError, ValidationError

# Seed registry of language codes; extensible via configuration.
DEFAULT_LANGUAGES = frozenset({"en", "hi", "pa", "ta", "te", "bn"})

LANGUAGE_NAMES = {
    "en": "English",
    "hi": "Hindi",
    "pa": "Punjabi",
    "ta": "Tamil",
    "te": "Telugu",
    "bn": "Bengali",
}

_LETTERISH_RE = regex.compile(r"[\p{L}\p{M}\p{N}]")


class Provenance(str, enum.Enum):
    AUTO = "auto"
    MANUAL = "manual"
    PROJECTED = "projected"
    LLM = "llm"


class FilterReason(str, enum.Enum):
    OK = "ok"
    MEDIA_KEYWORD = "media_keyword"
    TOO_SHORT = "too_short"
    TOO_LONG = "too_long"


@dataclass(frozen=True)
class PostRecord:
    """One social-media post."""

    id: str
    language: str
    platform: str
    text: str
    source_url: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValidationError("post id must be nonempty")
        if not self.text:
            raise ValidationError(f"post {self.id}: text must be nonempty")
        if not self.language:
            raise ValidationError(f"post {self.id}: language must be nonempty")


@dataclass(frozen=True)
class NormalizedClaim:
    """The normalized claim a fact-checker wrote for one post."""

    post_id: str
    text: str

    def __post_init__(self):
        if not self.post_id:
            raise ValidationError("claim post_id must be nonempty")
        if not self.text:
            raise ValidationError(f"claim for {self.post_id}: text must be nonempty")


@dataclass(frozen=True, order=True)
class ClaimSpan:
    """Half-open [start_char, end_char) range marking claim text."""

    start_char: int
    end_char: int

    def __post_init__(self):
        if self.start_char < 0 or self.start_char >= self.end_char:
            raise ValidationError(
                f"bad span offsets [{self.start_char}, {self.end_char})"
            )

    def __len__(self) -> int:
        return self.end_char - self.start_char


@dataclass(frozen=True)
class AnnotatedSample:
    """A post plus the claim spans located in it.

    Spans are sorted by start offset and pairwise disjoint; each must cover
    at least one non-whitespace character of the post text. The pipeline
    emits exactly one span per post, but the container allows several.
    """

    post: PostRecord
    spans: tuple[ClaimSpan, ...]
    provenance: Provenance = Provenance.MANUAL

    def __post_init__(self):
        prev: ClaimSpan | None = None
        for span in self.spans:
            if span.end_char > len(self.post.text):
                raise ValidationError(
                    f"{self.post.id}: span end {span.end_char} exceeds "
                    f"text length {len(self.post.text)}"
                )
            if not self.post.text[span.start_char : span.end_char].strip():
                raise ValidationError(
                    f"{self.post.id}: span [{span.start_char}, {span.end_char}) "
                    "covers only whitespace"
                )
            if prev is not None and span.start_char < prev.end_char:
                raise ValidationError(
                    f"{self.post.id}: spans out of order or overlapping"
                )
            prev = span

    def span_texts(self) -> list[str]:
        return [self.post.text[s.start_char : s.end_char] for s in self.spans]


@dataclass(frozen=True)
class FilterVerdict:
    accepted: bool
    reason: FilterReason

    def __post_init__(self):
        if self.accepted != (self.reason is FilterReason.OK):
            raise ValidationError("verdict reason must be ok exactly when accepted")


@dataclass(frozen=True)
class FilterRules:
    """Collection-time noise filters.

    Media keywords match whole word tokens case-insensitively in the post
    or the claim; word-count bounds apply to both texts, counting tokens
    that contain at least one letter, digit, or combining mark.
    """

    keywords: frozenset[str] = frozenset({"video", "photo", "reel"})
    min_words: int = 3
    max_words: int = 700

    def __post_init__(self):
        if self.min_words < 1 or self.max_words < self.min_words:
            raise ValidationError("filter word bounds must satisfy 1 <= min <= max")


DEFAULT_FILTER_RULES = FilterRules()


@dataclass(frozen=True)
class LengthStats:
    mean: float
    std: float


@dataclass(frozen=True)
class LanguageStats:
    count: int
    post_tokens: LengthStats
    post_chars: LengthStats
    span_tokens: LengthStats | None
    span_chars: LengthStats | None


@dataclass(frozen=True)
class CorpusStats:
    languages: dict[str, LanguageStats]

    @property
    def total(self) -> int:
        return sum(s.count for s in self.languages.values())


def _word_tokens(text: str, language: str) -> list[str]:
    return [
        tok.text
        for tok in segment.tokenize(text, language)
        if _LETTERISH_RE.search(tok.text)
    ]


def filter_sample(
    post: PostRecord,
    claim: NormalizedClaim,
    rules: FilterRules = DEFAULT_FILTER_RULES,
) -> FilterVerdict:
    """Apply the noise filters to one post/claim pair. Total function."""
    keywords = {k.casefold() for k in rules.keywords}
    post_words = _word_tokens(post.text, post.language)
    claim_words = _word_tokens(claim.text, post.language)
    for words in (post_words, claim_words):
        if any(w.casefold() in keywords for w in words):
            return FilterVerdict(False, FilterReason.MEDIA_KEYWORD)
    if len(post_words) < rules.min_words or len(claim_words) < rules.min_words:
        return FilterVerdict(False, FilterReason.TOO_SHORT)
    if len(post_words) > rules.max_words or len(claim_words) > rules.max_words:
        return FilterVerdict(False, FilterReason.TOO_LONG)
    return FilterVerdict(True, FilterReason.OK)


def split_train_dev(
    samples: Sequence[AnnotatedSample],
    ratio: float = 0.8,
    seed: int = 13,
) -> tuple[list[AnnotatedSample], list[AnnotatedSample]]:
    """Deterministic seeded shuffle; floor(n * ratio) samples go to train."""
    if not 0 < ratio < 1:
        raise ValidationError(f"split ratio must lie in (0, 1), got {ratio}")
    order = list(range(len(samples)))
    random.Random(seed).shuffle(order)
    n_train = math.floor(len(samples) * ratio)
    train = [samples[i] for i in order[:n_train]]
    dev = [samples[i] for i in order[n_train:]]
    return train, dev


def corpus_stats(
    samples: Sequence[AnnotatedSample],
    tokenizer: Callable[[str, str], list[segment.Token]] = segment.tokenize,
) -> CorpusStats:
    """Per-language sample counts and length statistics.

    Post length is measured over all tokens and over characters; every span
    contributes one observation to the span-length statistics, counting the
    tokens its character range overlaps. Standard deviations use the
    population form (divide by n).
    """
    post_tok: dict[str, list[int]] = {}
    post_chr: dict[str, list[int]] = {}
    span_tok: dict[str, list[int]] = {}
    span_chr: dict[str, list[int]] = {}
    for sample in samples:
        lang = sample.post.language
        tokens = tokenizer(sample.post.text, lang)
        post_tok.setdefault(lang, []).append(len(tokens))
        post_chr.setdefault(lang, []).append(len(sample.post.text))
        for span in sample.spans:
            overlapping = sum(
                1
                for t in tokens
                if t.start_char < span.end_char and span.start_char < t.end_char
            )
            span_tok.setdefault(lang, []).append(overlapping)
            span_chr.setdefault(lang, []).append(len(span))
    languages = {}
    for lang in sorted(post_tok):
        languages[lang] = LanguageStats(
            count=len(post_tok[lang]),
            post_tokens=_length_stats(post_tok[lang]),
            post_chars=_length_stats(post_chr[lang]),
            span_tokens=_length_stats(span_tok[lang]) if lang in span_tok else None,
            span_chars=_length_stats(span_chr[lang]) if lang in span_chr else None,
        )
    return CorpusStats(languages=languages)


def _length_stats(values: list[int]) -> LengthStats:
    return LengthStats(
        mean=statistics.fmean(values),
        std=statistics.pstdev(values),
    )


def load_corpus(
    path,
    kind: str = "posts",
    languages: Iterable[str] | None = None,
) -> list[PostRecord] | list[AnnotatedSample]:
    """Read a JSONL corpus file.

    kind selects the record shape: "posts" yields PostRecord, "annotated"
    yields AnnotatedSample. Malformed lines and invariant violations raise
    JsonlError carrying the file path and line number; duplicate ids are
    rejected.
    """
    if kind not in ("posts", "annotated"):
        raise ValidationError(f"unknown corpus kind {kind!r}")
    registry = frozenset(languages) if languages is not None else DEFAULT_LANGUAGES
    records: list = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise JsonlError(f"invalid JSON: {exc.msg}", str(path), line_no)
            try:
                post = _post_from_obj(obj, registry)
                record = (
                    post if kind == "posts" else _annotated_from_obj(obj, post)
                )
            except ValidationError as exc:
                raise JsonlError(str(exc), str(path), line_no)
            if post.id in seen:
                raise JsonlError(f"duplicate id {post.id!r}", str(path), line_no)
            seen.add(post.id)
            records.append(record)
    return records


def _post_from_obj(obj, registry: frozenset[str]) -> PostRecord:
    if not isinstance(obj, dict):
        raise ValidationError("record must be a JSON object")
    for field_name in ("id", "language", "platform", "text"):
        if field_name not in obj:
            raise ValidationError(f"missing field {field_name!r}")
        if not isinstance(obj[field_name], str):
            raise ValidationError(f"field {field_name!r} must be a string")
    source_url = obj.get("source_url")
    if source_url is not None and not isinstance(source_url, str):
        raise ValidationError("field 'source_url' must be a string")
    post = PostRecord(
        id=obj["id"],
        language=obj["language"],
        platform=obj["platform"],
        text=obj["text"],
        source_url=source_url,
    )
    if post.language not in registry:
        raise ValidationError(
            f"{post.id}: language {post.language!r} not in registry"
        )
    return post


def _annotated_from_obj(obj, post: PostRecord) -> AnnotatedSample:
    raw_spans = obj.get("spans", [])
    if not isinstance(raw_spans, list):
        raise ValidationError(f"{post.id}: field 'spans' must be a list")
    spans = []
    for item in raw_spans:
        if (
            not isinstance(item, list)
            or len(item) != 2
            or not all(isinstance(v, int) for v in item)
        ):
            raise ValidationError(f"{post.id}: each span must be an [start, end] pair")
        spans.append(ClaimSpan(item[0], item[1]))
    provenance_raw = obj.get("provenance", Provenance.MANUAL.value)
    try:
        provenance = Provenance(provenance_raw)
    except ValueError:
        raise ValidationError(f"{post.id}: unknown provenance {provenance_raw!r}")
    return AnnotatedSample(post=post, spans=tuple(spans), provenance=provenance)


def write_corpus(records: Sequence[PostRecord | AnnotatedSample], path) -> None:
    """Write post or annotated records as JSONL; inverse of load_corpus."""
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            if isinstance(record, AnnotatedSample):
                obj = _post_obj(record.post)
                obj["spans"] = [[s.start_char, s.end_char] for s in record.spans]
                obj["provenance"] = record.provenance.value
            else:
                obj = _post_obj(record)
            handle.write(json.dumps(obj, ensure_ascii=False) + "\n")


def _post_obj(post: PostRecord) -> dict:
    obj = {
        "id": post.id,
        "language": post.language,
        "platform": post.platform,
        "text": post.text,
    }
    if post.source_url is not None:
        obj["source_url"] = post.source_url
    return obj


def load_claims(path) -> list[NormalizedClaim]:
    """Read a JSONL claims file with post_id and text fields."""
    claims: list[NormalizedClaim] = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise JsonlError(f"invalid JSON: {exc.msg}", str(path), line_no)
            if not isinstance(obj, dict):
                raise JsonlError("record must be a JSON object", str(path), line_no)
            for field_name in ("post_id", "text"):
                if not isinstance(obj.get(field_name), str):
                    raise JsonlError(
                        f"missing or non-string field {field_name!r}",
                        str(path),
                        line_no,
                    )
            try:
                claims.append(NormalizedClaim(obj["post_id"], obj["text"]))
            except ValidationError as exc:
                raise JsonlError(str(exc), str(path), line_no)
    return claims


def write_claims(claims: Sequence[NormalizedClaim], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for claim in claims:
            obj = {"post_id": claim.post_id, "text": claim.text}
            handle.write(json.dumps(obj, ensure_ascii=False) + "\n")


def pair_claims(
    posts: Sequence[PostRecord], claims: Sequence[NormalizedClaim]
) -> list[tuple[PostRecord, NormalizedClaim]]:
    """Match posts to claims by id, in post order.

    Raises ValidationError when a claim references an unknown post, a post
    lacks a claim, or one post has several claims.
    """
    by_id: dict[str, NormalizedClaim] = {}
    post_ids = {p.id for p in posts}
    for claim in claims:
        if claim.post_id not in post_ids:
            raise ValidationError(f"claim references unknown post {claim.post_id!r}")
        if claim.post_id in by_id:
            raise ValidationError(f"multiple claims for post {claim.post_id!r}")
        by_id[claim.post_id] = claim
    missing = [p.id for p in posts if p.id not in by_id]
    if missing:
        raise ValidationError(f"posts without claims: {', '.join(missing[:5])}")
    return [(post, by_id[post.id]) for post in posts]
