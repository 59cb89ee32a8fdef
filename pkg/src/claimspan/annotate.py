"""Pipeline orchestration: sentence selection, alignment, span derivation.

annotate_sample runs the full automated-annotation pass for one post and
its normalized claim; project_labels reuses it to carry spans onto an
externally produced translation, and normalize_llm_response reuses it to
turn a free-text model answer into a span. All three are deterministic
given their configuration.
"""

from __future__ import annotations

import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import repeat
from typing import Sequence

from .align import (
    AlignmentLinks,
    DEFAULT_SOFT_CONFIG,
    SoftAlignConfig,
    derive_span_first_last,
    derive_span_longest_contig,
    extract_links,
    lexical_align,
)
from .corpus import AnnotatedSample, NormalizedClaim, PostRecord, Provenance
from .errors import (
    ConfigurationError,
    EmptyResponseError,
    NoAlignmentError,
    SegmentationError,
    ValidationError,
)
from .segment import DEFAULT_TABLE, LanguageTable, SentenceSpan, Token, split_sentences, tokenize
from .similarity import (
    DEFAULT_MEASURE,
    EmbeddingProvider,
    HashEmbeddingProvider,
    SimilarityMeasure,
    bertscore,
    score,
)

_BERT_MODES = {
    SimilarityMeasure.BERTSCORE_P: "precision",
    SimilarityMeasure.BERTSCORE_R: "recall",
    SimilarityMeasure.BERTSCORE_F1: "f1",
}


class Aligner(str, enum.Enum):
    IMPORTED_LINKS = "links"
    SOFT = "soft"
    LEXICAL = "lexical"


class SpanRule(str, enum.Enum):
    FIRST_LAST = "first-last"
    LONGEST_CONTIG = "longest-contig"


@dataclass(frozen=True)
class AnnotateConfig:
    """Knobs for one annotation pass.

    The provider defaults to the hashed-trigram embedder so the default
    configuration runs without exported embedding files; swap in a
    FileEmbeddingStore to use real encoder output.
    """

    measure: SimilarityMeasure = DEFAULT_MEASURE
    aligner: Aligner = Aligner.SOFT
    span_rule: SpanRule = SpanRule.FIRST_LAST
    soft: SoftAlignConfig = DEFAULT_SOFT_CONFIG
    provider: EmbeddingProvider | None = field(default_factory=HashEmbeddingProvider)
    language_table: LanguageTable = DEFAULT_TABLE

    def __post_init__(self):
        needs_provider = (
            self.measure in _BERT_MODES or self.aligner is Aligner.SOFT
        )
        if needs_provider and self.provider is None:
            raise ConfigurationError(
                f"measure {self.measure.value} with aligner {self.aligner.value} "
                "requires an embedding provider"
            )


def select_sentence(
    claim: NormalizedClaim,
    sentences: Sequence[SentenceSpan],
    cfg: AnnotateConfig,
    post_id: str = "",
) -> int:
    """Index of the highest-scoring sentence; ties go to the lowest index.

    A single-sentence post short-circuits, which also covers the languages
    segmented as one whole-text sentence.
    """
    if not sentences:
        raise ValidationError("select_sentence requires at least one sentence")
    if len(sentences) == 1:
        return 0
    claim_tokens = _claim_tokens(claim)
    if cfg.measure in _BERT_MODES:
        scores = _bert_sentence_scores(claim_tokens, sentences, cfg, post_id)
    else:
        scores = [
            score(cfg.measure, claim_tokens, sent.tokens) for sent in sentences
        ]
    best = 0
    for idx, value in enumerate(scores):
        if value > scores[best]:
            best = idx
    return best


def _claim_tokens(claim: NormalizedClaim) -> list[Token]:
    tokens = tokenize(claim.text)
    if not tokens:
        raise ValidationError(f"claim for {claim.post_id} has no tokens")
    return tokens


def _bert_sentence_scores(
    claim_tokens: Sequence[Token],
    sentences: Sequence[SentenceSpan],
    cfg: AnnotateConfig,
    post_id: str,
) -> list[float]:
    # The stored sentence-role matrix covers the whole post's tokens, so
    # each sentence scores against its row slice.
    claim_matrix = cfg.provider.embed(post_id, "claim", claim_tokens)
    all_tokens = [tok for sent in sentences for tok in sent.tokens]
    post_matrix = cfg.provider.embed(post_id, "sentence", all_tokens)
    mode = _BERT_MODES[cfg.measure]
    scores = []
    offset = 0
    for sent in sentences:
        block = post_matrix.slice_rows(offset, offset + len(sent.tokens))
        scores.append(bertscore(block, claim_matrix, mode))
        offset += len(sent.tokens)
    return scores


def annotate_sample(
    post: PostRecord,
    claim: NormalizedClaim,
    cfg: AnnotateConfig,
    links: AlignmentLinks | None = None,
) -> AnnotatedSample:
    """Derive the claim span for one post.

    With the imported-links aligner the caller supplies this sample's link
    record, interpreted against the selected sentence's token indices.
    Emits exactly one span, provenance auto.
    """
    if claim.post_id != post.id:
        raise ValidationError(
            f"claim is for post {claim.post_id!r}, not {post.id!r}"
        )
    claim_tokens = _claim_tokens(claim)
    sentences = split_sentences(post.text, post.language, cfg.language_table)
    selected = sentences[select_sentence(claim, sentences, cfg, post_id=post.id)]

    if cfg.aligner is Aligner.IMPORTED_LINKS:
        if links is None:
            raise ConfigurationError(
                "imported-links aligner requires a links record per sample"
            )
    elif cfg.aligner is Aligner.LEXICAL:
        links = lexical_align(claim_tokens, selected.tokens)
    else:
        links = extract_links(
            _soft_similarity(claim_tokens, sentences, selected, cfg, post.id),
            cfg.soft,
        )

    try:
        if cfg.span_rule is SpanRule.FIRST_LAST:
            span = derive_span_first_last(links, selected)
        else:
            span = derive_span_longest_contig(links, selected)
    except NoAlignmentError:
        raise NoAlignmentError(post_id=post.id)
    return AnnotatedSample(post=post, spans=(span,), provenance=Provenance.AUTO)


def _soft_similarity(
    claim_tokens: Sequence[Token],
    sentences: Sequence[SentenceSpan],
    selected: SentenceSpan,
    cfg: AnnotateConfig,
    post_id: str,
):
    claim_matrix = cfg.provider.embed(post_id, "claim", claim_tokens)
    all_tokens = [tok for sent in sentences for tok in sent.tokens]
    post_matrix = cfg.provider.embed(post_id, "sentence", all_tokens)
    offset = 0
    for sent in sentences:
        if sent is selected:
            break
        offset += len(sent.tokens)
    block = post_matrix.slice_rows(offset, offset + len(selected.tokens))
    return claim_matrix.vectors @ block.vectors.T


def project_labels(
    source_span_text: str,
    target_text: str,
    target_language: str,
    cfg: AnnotateConfig,
    target_id: str = "projected",
    platform: str = "",
    source_url: str | None = None,
) -> AnnotatedSample:
    """Carry a source-language span onto a translated post.

    The source span text plays the normalized-claim role against the
    translation; the derived sample carries provenance projected.
    """
    if not source_span_text.strip():
        raise ValidationError("source span text must be nonempty")
    target = PostRecord(
        id=target_id,
        language=target_language,
        platform=platform,
        text=target_text,
        source_url=source_url,
    )
    claim = NormalizedClaim(post_id=target.id, text=source_span_text)
    sample = annotate_sample(target, claim, cfg)
    return AnnotatedSample(
        post=sample.post, spans=sample.spans, provenance=Provenance.PROJECTED
    )


def normalize_llm_response(
    response: str, post: PostRecord, cfg: AnnotateConfig
) -> AnnotatedSample:
    """Locate a model's free-text claim answer inside the post.

    The trimmed response is treated as a normalized claim and run through
    the annotation pipeline; provenance is llm. Empty responses raise
    EmptyResponseError, and a response sharing no alignable tokens with the
    post raises NoAlignmentError (expected under the lexical aligner when
    the model answers in another language).
    """
    trimmed = response.strip()
    if not trimmed:
        raise EmptyResponseError(f"empty model response for post {post.id}")
    claim = NormalizedClaim(post_id=post.id, text=trimmed)
    sample = annotate_sample(post, claim, cfg)
    return AnnotatedSample(
        post=sample.post, spans=sample.spans, provenance=Provenance.LLM
    )


REJECT_REASONS = {
    NoAlignmentError: "no_alignment",
    SegmentationError: "segmentation",
    ValidationError: "validation",
}


def _annotate_one(args):
    post, claim, cfg, links = args
    try:
        return ("ok", annotate_sample(post, claim, cfg, links=links))
    except (NoAlignmentError, SegmentationError, ValidationError) as exc:
        for klass, reason in REJECT_REASONS.items():
            if isinstance(exc, klass):
                return ("reject", post.id, reason, str(exc))
        raise AssertionError("unreachable")


def annotate_corpus(
    pairs: Sequence[tuple[PostRecord, NormalizedClaim]],
    cfg: AnnotateConfig,
    links: Sequence[AlignmentLinks] | None = None,
    jobs: int = 1,
) -> tuple[list[AnnotatedSample], list[tuple[str, str, str]]]:
    """Annotate a corpus, collecting per-sample failures instead of raising.

    Returns (samples, rejects) where each reject is (post id, reason code,
    detail). Output order matches input order for any job count.
    """
    if links is not None and len(links) != len(pairs):
        raise ValidationError(
            f"{len(links)} link records for {len(pairs)} samples"
        )
    link_seq = links if links is not None else repeat(None)
    work = [
        (post, claim, cfg, rec)
        for (post, claim), rec in zip(pairs, link_seq)
    ]
    if jobs > 1 and len(work) > 1:
        chunk = max(1, len(work) // (jobs * 4))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_annotate_one, work, chunksize=chunk))
    else:
        outcomes = [_annotate_one(item) for item in work]
    samples: list[AnnotatedSample] = []
    rejects: list[tuple[str, str, str]] = []
    for outcome in outcomes:
        if outcome[0] == "ok":
            samples.append(outcome[1])
        else:
            rejects.append(outcome[1:])
    return samples, rejects
