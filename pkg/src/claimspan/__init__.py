"""Claim-span annotation for multilingual social-media posts.

The package turns (post, normalized claim) pairs into character-level claim
spans: posts are split into sentences, the sentence closest to the claim is
picked by a similarity measure, claim and sentence tokens are aligned, and
the aligned region becomes the span. Around that core live corpus I/O and
filtering, tagging-scheme codecs for token classifiers, span-level
evaluation, and a prompting harness for chat models.
"""

from .align import (
    AlignmentLinks,
    EMPTY_LINKS,
    SoftAlignConfig,
    derive_span_first_last,
    derive_span_longest_contig,
    extract_links,
    lexical_align,
    load_links,
    write_links,
)
from .annotate import (
    Aligner,
    AnnotateConfig,
    SpanRule,
    annotate_corpus,
    annotate_sample,
    normalize_llm_response,
    project_labels,
    select_sentence,
)
from .corpus import (
    AnnotatedSample,
    ClaimSpan,
    DEFAULT_LANGUAGES,
    FilterReason,
    FilterRules,
    FilterVerdict,
    LANGUAGE_NAMES,
    NormalizedClaim,
    PostRecord,
    Provenance,
    corpus_stats,
    filter_sample,
    load_claims,
    load_corpus,
    pair_claims,
    split_train_dev,
    write_claims,
    write_corpus,
)
from .errors import (
    ClaimSpanError,
    ConfigurationError,
    EmptyResponseError,
    JsonlError,
    NoAlignmentError,
    PharaohError,
    SegmentationError,
    TransportError,
    ValidationError,
)
from .evaluation import (
    EvalMode,
    EvalUnit,
    SpanEvalResult,
    corpus_eval,
    doc_overlap_scores,
    median_of_runs,
    pair_samples,
    to_token_spans,
)
from .llm import (
    ChatClient,
    FixtureChatClient,
    HttpChatClient,
    LlmConfig,
    PromptKind,
    build_prompt,
    complete,
    pick_examples,
    run_llm_eval,
)
from .segment import (
    LanguageTable,
    SentenceSpan,
    Token,
    split_sentences,
    tokenize,
)
from .similarity import (
    EmbeddingMatrix,
    EmbeddingProvider,
    FileEmbeddingStore,
    HashEmbeddingProvider,
    PRF,
    SimilarityMeasure,
    bertscore,
    meteor,
    rouge_l,
    rouge_n,
    score,
    write_embeddings,
)
from .tags import TagScheme, TagSequence, decode, encode, export_conll

__version__ = "0.1.0"

__all__ = [
    "AlignmentLinks",
    "Aligner",
    "AnnotateConfig",
    "AnnotatedSample",
    "ChatClient",
    "ClaimSpan",
    "ClaimSpanError",
    "ConfigurationError",
    "DEFAULT_LANGUAGES",
    "EMPTY_LINKS",
    "EmbeddingMatrix",
    "EmbeddingProvider",
    "EmptyResponseError",
    "EvalMode",
    "EvalUnit",
    "FileEmbeddingStore",
    "FilterReason",
    "FilterRules",
    "FilterVerdict",
    "FixtureChatClient",
    "HashEmbeddingProvider",
    "HttpChatClient",
    "JsonlError",
    "LANGUAGE_NAMES",
    "LanguageTable",
    "LlmConfig",
    "NoAlignmentError",
    "NormalizedClaim",
    "PRF",
    "PharaohError",
    "PostRecord",
    "PromptKind",
    "Provenance",
    "SegmentationError",
    "SentenceSpan",
    "SimilarityMeasure",
    "SoftAlignConfig",
    "SpanEvalResult",
    "SpanRule",
    "TagScheme",
    "TagSequence",
    "Token",
    "TransportError",
    "ValidationError",
    "annotate_corpus",
    "annotate_sample",
    "bertscore",
    "build_prompt",
    "complete",
    "corpus_eval",
    "corpus_stats",
    "decode",
    "derive_span_first_last",
    "derive_span_longest_contig",
    "doc_overlap_scores",
    "encode",
    "export_conll",
    "extract_links",
    "filter_sample",
    "lexical_align",
    "load_claims",
    "load_corpus",
    "load_links",
    "median_of_runs",
    "meteor",
    "normalize_llm_response",
    "pair_claims",
    "pair_samples",
    "pick_examples",
    "project_labels",
    "rouge_l",
    "rouge_n",
    "run_llm_eval",
    "score",
    "select_sentence",
    "split_sentences",
    "split_train_dev",
    "to_token_spans",
    "tokenize",
    "write_claims",
    "write_corpus",
    "write_embeddings",
    "write_links",
]
