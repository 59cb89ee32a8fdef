"""Sentence-similarity measures for claim-guided sentence selection.

Three token-level measures (ROUGE-1, ROUGE-L, simplified METEOR) work on
plain token text; BERTScore works on unit-normalized token embeddings
supplied by a pluggable provider. In the score() dispatcher the post
sentence plays the candidate role and the normalized claim the reference
role, so the recall variants measure how much of the claim a sentence
covers.

The METEOR here is deliberately reduced: exact matching after case folding,
greedy left-to-right one-to-one assignment, no stemming or synonymy. The
measure is monolingual-resource-free, which is the point for a six-language
corpus.

Embedding file contract (shared with the exporter sidecar): a data file of
concatenated records, each a little-endian header <u32 token count,
u32 dimension, u8 normalized flag> followed by token_count * dimension
float32 values in row-major order; beside it an index file with one
"<id>\\t<role>\\t<byte offset>" line per record.
"""

from __future__ import annotations

import enum
import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from .errors import ConfigurationError, ValidationError
from .segment import Token

_HEADER = struct.Struct("<IIB")

DATA_FILE = "embeddings.bin"
INDEX_FILE = "embeddings.idx"


class SimilarityMeasure(str, enum.Enum):
    ROUGE1_F1 = "rouge1-f1"
    ROUGEL_F1 = "rougel-f1"
    METEOR = "meteor"
    BERTSCORE_P = "bertscore-p"
    BERTSCORE_R = "bertscore-r"
    BERTSCORE_F1 = "bertscore-f1"


DEFAULT_MEASURE = SimilarityMeasure.BERTSCORE_R

_BERT_MEASURES = {
    SimilarityMeasure.BERTSCORE_P: "precision",
    SimilarityMeasure.BERTSCORE_R: "recall",
    SimilarityMeasure.BERTSCORE_F1: "f1",
}


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float


def _prf(precision: float, recall: float) -> PRF:
    if precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
    return PRF(precision, recall, f1)


def _texts(tokens: Sequence) -> list[str]:
    return [t.text if isinstance(t, Token) else t for t in tokens]


def rouge_n(candidate: Sequence, reference: Sequence, n: int) -> PRF:
    """Clipped n-gram overlap precision/recall/F1.

    Either side having no n-grams yields all zeros.
    """
    if n < 1:
        raise ValidationError(f"n-gram order must be >= 1, got {n}")
    cand = _texts(candidate)
    ref = _texts(reference)
    cand_grams = _ngram_counts(cand, n)
    ref_grams = _ngram_counts(ref, n)
    total_cand = sum(cand_grams.values())
    total_ref = sum(ref_grams.values())
    if total_cand == 0 or total_ref == 0:
        return PRF(0.0, 0.0, 0.0)
    overlap = sum(
        min(count, ref_grams.get(gram, 0)) for gram, count in cand_grams.items()
    )
    return _prf(overlap / total_cand, overlap / total_ref)


def _ngram_counts(tokens: list[str], n: int) -> dict[tuple[str, ...], int]:
    counts: dict[tuple[str, ...], int] = {}
    for i in range(len(tokens) - n + 1):
        gram = tuple(tokens[i : i + n])
        counts[gram] = counts.get(gram, 0) + 1
    return counts


def rouge_l(candidate: Sequence, reference: Sequence) -> PRF:
    """Longest-common-subsequence precision/recall/F1."""
    cand = _texts(candidate)
    ref = _texts(reference)
    if not cand or not ref:
        return PRF(0.0, 0.0, 0.0)
    lcs = _lcs_length(cand, ref)
    return _prf(lcs / len(cand), lcs / len(ref))


def _lcs_length(a: list[str], b: list[str]) -> int:
    # Two-row DP keeps memory linear in the shorter side.
    if len(b) > len(a):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                curr.append(prev[j - 1] + 1)
            else:
                curr.append(max(prev[j], curr[j - 1]))
        prev = curr
    return prev[-1]


def meteor(candidate: Sequence, reference: Sequence) -> float:
    """Simplified METEOR: case-folded exact unigram matching.

    Matches are assigned greedily left to right, one to one. With m matches,
    P = m/|candidate|, R = m/|reference|, Fmean = 10PR/(R+9P); the chunk
    penalty is 0.5 * (chunks/m)^3 where a chunk is a maximal run of matches
    contiguous on both sides. No matches scores 0.
    """
    cand = [t.casefold() for t in _texts(candidate)]
    ref = [t.casefold() for t in _texts(reference)]
    if not cand or not ref:
        return 0.0
    matched_ref: set[int] = set()
    pairs: list[tuple[int, int]] = []
    for i, tok in enumerate(cand):
        for j, rtok in enumerate(ref):
            if j not in matched_ref and tok == rtok:
                matched_ref.add(j)
                pairs.append((i, j))
                break
    m = len(pairs)
    if m == 0:
        return 0.0
    precision = m / len(cand)
    recall = m / len(ref)
    fmean = 10 * precision * recall / (recall + 9 * precision)
    chunks = 1
    for (pi, pj), (ci, cj) in zip(pairs, pairs[1:]):
        if ci != pi + 1 or cj != pj + 1:
            chunks += 1
    penalty = 0.5 * (chunks / m) ** 3
    return fmean * (1.0 - penalty)


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    """One d-dimensional vector per token.

    Vectors are held as float64 regardless of on-disk precision so score
    arithmetic is stable. When normalized is set every row must have unit
    L2 norm within 1e-6.
    """

    tokens: tuple[str, ...]
    vectors: np.ndarray
    normalized: bool

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.float64)
        if vectors.ndim != 2:
            raise ValidationError("embedding vectors must form a 2-d matrix")
        if vectors.shape[0] != len(self.tokens):
            raise ValidationError(
                f"{len(self.tokens)} tokens but {vectors.shape[0]} vectors"
            )
        object.__setattr__(self, "vectors", vectors)
        if self.normalized and len(self.tokens):
            norms = np.linalg.norm(vectors, axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-6):
                raise ValidationError("normalized matrix has non-unit rows")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def slice_rows(self, start: int, stop: int) -> "EmbeddingMatrix":
        return EmbeddingMatrix(
            self.tokens[start:stop], self.vectors[start:stop], self.normalized
        )


def bertscore(candidate: EmbeddingMatrix, reference: EmbeddingMatrix, mode: str) -> float:
    """Greedy-matching embedding similarity, no IDF weighting.

    recall averages, over reference tokens, the best cosine against any
    candidate token; precision is symmetric; f1 is their harmonic mean, 0
    when either is non-positive.
    """
    if mode not in ("precision", "recall", "f1"):
        raise ValidationError(f"unknown bertscore mode {mode!r}")
    if len(candidate) == 0 or len(reference) == 0:
        raise ValidationError("bertscore requires nonempty matrices on both sides")
    if candidate.dim != reference.dim:
        raise ValidationError(
            f"dimension mismatch: {candidate.dim} vs {reference.dim}"
        )
    if not (candidate.normalized and reference.normalized):
        raise ValidationError("bertscore requires normalized matrices")
    sim = candidate.vectors @ reference.vectors.T
    precision = float(sim.max(axis=1).mean())
    recall = float(sim.max(axis=0).mean())
    if mode == "precision":
        return precision
    if mode == "recall":
        return recall
    if precision <= 0 or recall <= 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


class EmbeddingProvider(Protocol):
    """Maps (sample id, role, tokens) to a deterministic EmbeddingMatrix.

    role is "claim" or "sentence"; by convention the sentence matrix of a
    sample covers the full post's token sequence, and callers slice out
    per-sentence rows.
    """

    def embed(self, sample_id: str, role: str, tokens: Sequence) -> EmbeddingMatrix:
        ...


@dataclass(frozen=True)
class HashEmbeddingProvider:
    """Deterministic test provider: hashed character-trigram count vectors.

    Each token's trigrams (the whole token when shorter than 3) are hashed
    into dim buckets with md5, counted, and L2-normalized. Identical token
    text always embeds identically, across processes and runs.
    """

    dim: int = 64

    def embed(self, sample_id: str, role: str, tokens: Sequence) -> EmbeddingMatrix:
        del sample_id, role
        texts = _texts(tokens)
        vectors = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            grams = (
                [text[i : i + 3] for i in range(len(text) - 2)]
                if len(text) >= 3
                else [text]
            )
            for gram in grams:
                digest = hashlib.md5(gram.encode("utf-8")).hexdigest()
                vectors[row, int(digest[:8], 16) % self.dim] += 1.0
            vectors[row] /= np.linalg.norm(vectors[row])
        return EmbeddingMatrix(tuple(texts), vectors, normalized=True)


def write_embeddings(
    records: Iterable[tuple[str, str, EmbeddingMatrix]], directory
) -> None:
    """Write (id, role, matrix) records in the binary embedding format."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    index_lines = []
    with open(directory / DATA_FILE, "wb") as handle:
        for sample_id, role, matrix in records:
            if "\t" in sample_id or "\n" in sample_id:
                raise ValidationError(f"id {sample_id!r} not representable in index")
            index_lines.append(f"{sample_id}\t{role}\t{handle.tell()}\n")
            handle.write(_HEADER.pack(len(matrix), matrix.dim, int(matrix.normalized)))
            handle.write(
                np.ascontiguousarray(matrix.vectors, dtype="<f4").tobytes()
            )
    with open(directory / INDEX_FILE, "w", encoding="utf-8") as handle:
        handle.writelines(index_lines)


class FileEmbeddingStore:
    """Read-only embedding provider over the binary file format.

    The index is loaded eagerly; matrix reads reopen the data file per call,
    so one store instance may serve concurrent readers and survives
    pickling into worker processes.
    """

    def __init__(self, directory):
        self.directory = Path(directory)
        self._offsets: dict[tuple[str, str], int] = {}
        index_path = self.directory / INDEX_FILE
        if not index_path.exists():
            raise ConfigurationError(f"no embedding index at {index_path}")
        with open(index_path, encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                parts = line.rstrip("\n").split("\t")
                if len(parts) != 3:
                    raise ValidationError(
                        f"{index_path}:{line_no}: expected id<TAB>role<TAB>offset"
                    )
                try:
                    offset = int(parts[2])
                except ValueError:
                    raise ValidationError(
                        f"{index_path}:{line_no}: bad offset {parts[2]!r}"
                    )
                self._offsets[(parts[0], parts[1])] = offset

    def embed(self, sample_id: str, role: str, tokens: Sequence) -> EmbeddingMatrix:
        key = (sample_id, role)
        if key not in self._offsets:
            raise ValidationError(f"no stored embedding for id={sample_id!r} role={role!r}")
        texts = _texts(tokens)
        with open(self.directory / DATA_FILE, "rb") as handle:
            handle.seek(self._offsets[key])
            header = handle.read(_HEADER.size)
            if len(header) != _HEADER.size:
                raise ValidationError(f"truncated embedding record for {sample_id!r}")
            count, dim, normalized = _HEADER.unpack(header)
            if count != len(texts):
                raise ValidationError(
                    f"{sample_id}/{role}: stored matrix has {count} rows "
                    f"but {len(texts)} tokens were supplied"
                )
            payload = handle.read(count * dim * 4)
        if len(payload) != count * dim * 4:
            raise ValidationError(f"truncated embedding record for {sample_id!r}")
        vectors = np.frombuffer(payload, dtype="<f4").reshape(count, dim)
        return EmbeddingMatrix(tuple(texts), vectors, normalized=bool(normalized))


def score(
    measure: SimilarityMeasure,
    claim: Sequence,
    sentence: Sequence,
    provider: EmbeddingProvider | None = None,
    sample_id: str = "",
) -> float:
    """Score one sentence against the normalized claim.

    The sentence is the candidate, the claim the reference. BERTScore
    measures require an embedding provider; sample_id is forwarded to it
    for file-backed lookups.
    """
    if measure in _BERT_MEASURES:
        if provider is None:
            raise ConfigurationError(f"measure {measure.value} requires an embedding provider")
        cand = provider.embed(sample_id, "sentence", sentence)
        ref = provider.embed(sample_id, "claim", claim)
        return bertscore(cand, ref, _BERT_MEASURES[measure])
    if measure is SimilarityMeasure.ROUGE1_F1:
        return rouge_n(sentence, claim, 1).f1
    if measure is SimilarityMeasure.ROUGEL_F1:
        return rouge_l(sentence, claim).f1
    if measure is SimilarityMeasure.METEOR:
        return meteor(sentence, claim)
    raise ValidationError(f"unknown similarity measure {measure!r}")
