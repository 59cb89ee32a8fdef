"""Word-alignment link production and claim-span derivation.

Links pair a claim token index with a sentence token index and may be
many-to-many. Three sources are supported: softmax-threshold extraction
from a similarity matrix, a model-free lexical matcher, and Pharaoh-format
files produced by external aligners. Span derivation consumes only the
sentence-side index set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .corpus import ClaimSpan
from .errors import NoAlignmentError, PharaohError, ValidationError
from .segment import SentenceSpan, Token


@dataclass(frozen=True)
class AlignmentLinks:
    """A set of (claim token index, sentence token index) pairs."""

    links: frozenset[tuple[int, int]]

    def __post_init__(self):
        links = frozenset((int(i), int(j)) for i, j in self.links)
        for i, j in links:
            if i < 0 or j < 0:
                raise ValidationError(f"negative link index ({i}, {j})")
        object.__setattr__(self, "links", links)

    def __len__(self) -> int:
        return len(self.links)

    def __iter__(self):
        return iter(sorted(self.links))

    def __contains__(self, pair) -> bool:
        return pair in self.links

    def sentence_indices(self) -> list[int]:
        return sorted({j for _, j in self.links})

    def claim_indices(self) -> list[int]:
        return sorted({i for i, _ in self.links})


EMPTY_LINKS = AlignmentLinks(frozenset())


@dataclass(frozen=True)
class SoftAlignConfig:
    """Extraction rule parameters.

    The row-wise and column-wise softmax of sim/temperature are multiplied
    elementwise; cells above threshold become links. The temperature
    sharpens cosine matrices, which are otherwise too flat to clear any
    useful threshold.
    """

    threshold: float = 0.001
    temperature: float = 0.05

    def __post_init__(self):
        if not 0 < self.threshold < 1:
            raise ValidationError(
                f"threshold must lie in (0, 1), got {self.threshold}"
            )
        if self.temperature <= 0:
            raise ValidationError(
                f"temperature must be positive, got {self.temperature}"
            )


DEFAULT_SOFT_CONFIG = SoftAlignConfig()


def extract_links(sim, cfg: SoftAlignConfig = DEFAULT_SOFT_CONFIG) -> AlignmentLinks:
    """Bidirectional softmax-product thresholding over a similarity matrix.

    Rows index claim tokens, columns sentence tokens. Raises on empty or
    non-finite input.
    """
    matrix = np.asarray(sim, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] < 1 or matrix.shape[1] < 1:
        raise ValidationError(f"similarity matrix must be 2-d and nonempty, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValidationError("similarity matrix contains NaN or infinite entries")
    scaled = matrix / cfg.temperature
    rows = np.exp(scaled - scaled.max(axis=1, keepdims=True))
    rows /= rows.sum(axis=1, keepdims=True)
    cols = np.exp(scaled - scaled.max(axis=0, keepdims=True))
    cols /= cols.sum(axis=0, keepdims=True)
    mask = rows * cols > cfg.threshold
    pairs = frozenset(
        (int(i), int(j)) for i, j in np.argwhere(mask)
    )
    return AlignmentLinks(pairs)


def lexical_align(claim: Sequence, sentence: Sequence) -> AlignmentLinks:
    """Greedy left-to-right one-to-one lexical matching.

    A first pass links case-folded exact matches; a second pass links
    remaining tokens whose normalized Levenshtein similarity
    1 - distance/max(length) reaches 0.8. Each token on either side is used
    at most once.
    """
    claim_texts = [_text(t).casefold() for t in claim]
    sent_texts = [_text(t).casefold() for t in sentence]
    links: set[tuple[int, int]] = set()
    used_claim: set[int] = set()
    used_sent: set[int] = set()
    for i, ctok in enumerate(claim_texts):
        for j, stok in enumerate(sent_texts):
            if j not in used_sent and ctok == stok:
                links.add((i, j))
                used_claim.add(i)
                used_sent.add(j)
                break
    for i, ctok in enumerate(claim_texts):
        if i in used_claim:
            continue
        for j, stok in enumerate(sent_texts):
            if j in used_sent:
                continue
            if _similar(ctok, stok):
                links.add((i, j))
                used_claim.add(i)
                used_sent.add(j)
                break
    return AlignmentLinks(frozenset(links))


def _text(token) -> str:
    return token.text if isinstance(token, Token) else token


def _similar(a: str, b: str, threshold: float = 0.8) -> bool:
    longest = max(len(a), len(b))
    if longest == 0:
        return False
    # Distance is at least the length difference, so a large difference
    # cannot reach the threshold; skip the DP entirely.
    if abs(len(a) - len(b)) > longest * (1 - threshold):
        return False
    return 1 - _levenshtein(a, b) / longest >= threshold


def _levenshtein(a: str, b: str) -> int:
    if len(b) > len(a):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        curr = [i]
        for j, y in enumerate(b, start=1):
            cost = 0 if x == y else 1
            curr.append(min(prev[j] + 1, curr[j - 1] + 1, prev[j - 1] + cost))
        prev = curr
    return prev[-1]


def write_links(records: Iterable[AlignmentLinks], path) -> None:
    """Write Pharaoh-format alignments, one line per record.

    Pairs are serialized as "i-j" sorted by index; an empty link set
    becomes a blank line.
    """
    with open(path, "w", encoding="utf-8") as handle:
        for links in records:
            handle.write(" ".join(f"{i}-{j}" for i, j in links) + "\n")


def load_links(path) -> list[AlignmentLinks]:
    """Read Pharaoh-format alignments; inverse of write_links."""
    records: list[AlignmentLinks] = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped:
                records.append(EMPTY_LINKS)
                continue
            pairs = set()
            for chunk in stripped.split():
                left, sep, right = chunk.partition("-")
                if not sep or not left.isdigit() or not right.isdigit():
                    raise PharaohError(
                        f"malformed pair {chunk!r}", str(path), line_no
                    )
                pairs.add((int(left), int(right)))
            records.append(AlignmentLinks(frozenset(pairs)))
    return records


def derive_span_first_last(links: AlignmentLinks, sentence: SentenceSpan) -> ClaimSpan:
    """Span from the first aligned sentence token to the last one."""
    indices = _checked_indices(links, sentence)
    return ClaimSpan(
        sentence.tokens[indices[0]].start_char,
        sentence.tokens[indices[-1]].end_char,
    )


def derive_span_longest_contig(
    links: AlignmentLinks, sentence: SentenceSpan
) -> ClaimSpan:
    """Span over the longest run of consecutive aligned sentence tokens.

    Ties go to the earliest run.
    """
    indices = _checked_indices(links, sentence)
    best_start = run_start = indices[0]
    best_len = run_len = 1
    for prev, curr in zip(indices, indices[1:]):
        if curr == prev + 1:
            run_len += 1
        else:
            run_start = curr
            run_len = 1
        if run_len > best_len:
            best_start = run_start
            best_len = run_len
    return ClaimSpan(
        sentence.tokens[best_start].start_char,
        sentence.tokens[best_start + best_len - 1].end_char,
    )


def _checked_indices(links: AlignmentLinks, sentence: SentenceSpan) -> list[int]:
    if len(links) == 0:
        raise NoAlignmentError()
    indices = links.sentence_indices()
    if indices[-1] >= len(sentence.tokens):
        raise ValidationError(
            f"link index {indices[-1]} exceeds sentence length {len(sentence.tokens)}"
        )
    return indices
