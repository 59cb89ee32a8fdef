"""Token-label codecs for the IO, BIO, BEO, and BEIO schemes.

A token belongs to a span when their character intervals overlap, so spans
cut mid-token still label that token. Decoding is total: orphan labels are
repaired (an I without an open span opens one, an E without an open span
yields a one-token span), so any label sequence over a scheme's alphabet
produces a valid disjoint span list.

BEO has no inside label by construction: span-interior tokens encode as B,
and decoding closes a span only at an E, at the token before the next B, or
at the end of the sequence. The scheme does not round-trip; the others do.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

from .corpus import AnnotatedSample, ClaimSpan
from .errors import ValidationError
from .segment import Token, tokenize


class TagScheme(str, enum.Enum):
    IO = "IO"
    BIO = "BIO"
    BEO = "BEO"
    BEIO = "BEIO"


_ALPHABETS = {
    TagScheme.IO: frozenset("IO"),
    TagScheme.BIO: frozenset("BIO"),
    TagScheme.BEO: frozenset("BEO"),
    TagScheme.BEIO: frozenset("BEIO"),
}


@dataclass(frozen=True)
class TagSequence:
    labels: tuple[str, ...]
    scheme: TagScheme

    def __post_init__(self):
        alphabet = _ALPHABETS[self.scheme]
        for label in self.labels:
            if label not in alphabet:
                raise ValidationError(
                    f"label {label!r} not in {self.scheme.value} alphabet"
                )


def encode(
    tokens: Sequence[Token], spans: Sequence[ClaimSpan], scheme: TagScheme
) -> TagSequence:
    """Label tokens according to the spans under the given scheme."""
    groups = _token_groups(tokens, spans)
    labels = ["O"] * len(tokens)
    for first, last in groups:
        if scheme is TagScheme.IO:
            for k in range(first, last + 1):
                labels[k] = "I"
        elif scheme is TagScheme.BIO:
            labels[first] = "B"
            for k in range(first + 1, last + 1):
                labels[k] = "I"
        elif scheme is TagScheme.BEO:
            # Interior tokens have no inside label available; B also wins
            # over E on single-token spans.
            for k in range(first, last):
                labels[k] = "B"
            labels[last] = "B" if first == last else "E"
        else:
            labels[first] = "B"
            if last > first:
                labels[last] = "E"
            for k in range(first + 1, last):
                labels[k] = "I"
    return TagSequence(tuple(labels), scheme)


def _token_groups(
    tokens: Sequence[Token], spans: Sequence[ClaimSpan]
) -> list[tuple[int, int]]:
    ordered = sorted(spans, key=lambda s: s.start_char)
    for a, b in zip(ordered, ordered[1:]):
        if b.start_char < a.end_char:
            raise ValidationError("spans overlap")
    groups: list[tuple[int, int]] = []
    last_token = -1
    for span in ordered:
        members = [
            k
            for k, tok in enumerate(tokens)
            if tok.start_char < span.end_char and span.start_char < tok.end_char
        ]
        if not members:
            raise ValidationError(
                f"span [{span.start_char}, {span.end_char}) overlaps no token"
            )
        if members[0] <= last_token:
            raise ValidationError("two spans overlap the same token")
        last_token = members[-1]
        groups.append((members[0], members[-1]))
    return groups


def decode(
    tags: TagSequence, tokens: Sequence[Token], scheme: TagScheme | None = None
) -> list[ClaimSpan]:
    """Recover character spans from a label sequence. Total function."""
    if scheme is None:
        scheme = tags.scheme
    elif scheme is not tags.scheme:
        raise ValidationError(
            f"tag sequence carries scheme {tags.scheme.value}, not {scheme.value}"
        )
    if len(tags.labels) != len(tokens):
        raise ValidationError(
            f"{len(tags.labels)} labels for {len(tokens)} tokens"
        )
    if scheme is TagScheme.IO:
        groups = _decode_io(tags.labels)
    elif scheme is TagScheme.BIO:
        groups = _decode_bio(tags.labels)
    elif scheme is TagScheme.BEO:
        groups = _decode_beo(tags.labels)
    else:
        groups = _decode_beio(tags.labels)
    return [
        ClaimSpan(tokens[first].start_char, tokens[last].end_char)
        for first, last in groups
    ]


def _decode_io(labels: Sequence[str]) -> list[tuple[int, int]]:
    groups = []
    start = None
    for k, label in enumerate(labels):
        if label == "I":
            if start is None:
                start = k
        elif start is not None:
            groups.append((start, k - 1))
            start = None
    if start is not None:
        groups.append((start, len(labels) - 1))
    return groups


def _decode_bio(labels: Sequence[str]) -> list[tuple[int, int]]:
    groups = []
    start = None
    for k, label in enumerate(labels):
        if label == "B":
            if start is not None:
                groups.append((start, k - 1))
            start = k
        elif label == "I":
            if start is None:
                start = k
        else:
            if start is not None:
                groups.append((start, k - 1))
                start = None
    if start is not None:
        groups.append((start, len(labels) - 1))
    return groups


def _decode_beo(labels: Sequence[str]) -> list[tuple[int, int]]:
    # O never closes a span here; only E, a following B, or the end do.
    groups = []
    start = None
    for k, label in enumerate(labels):
        if label == "B":
            if start is not None:
                groups.append((start, k - 1))
            start = k
        elif label == "E":
            if start is not None:
                groups.append((start, k))
                start = None
            else:
                groups.append((k, k))
    if start is not None:
        groups.append((start, len(labels) - 1))
    return groups


def _decode_beio(labels: Sequence[str]) -> list[tuple[int, int]]:
    groups = []
    start = None
    for k, label in enumerate(labels):
        if label == "B":
            if start is not None:
                groups.append((start, k - 1))
            start = k
        elif label == "I":
            if start is None:
                start = k
        elif label == "E":
            if start is not None:
                groups.append((start, k))
                start = None
            else:
                groups.append((k, k))
        else:
            if start is not None:
                groups.append((start, k - 1))
                start = None
    if start is not None:
        groups.append((start, len(labels) - 1))
    return groups


def export_conll(
    samples: Sequence[AnnotatedSample], scheme: TagScheme, path
) -> None:
    """Write "token<TAB>label" lines, one blank line after each sample."""
    with open(path, "w", encoding="utf-8") as handle:
        for sample in samples:
            tokens = tokenize(sample.post.text, sample.post.language)
            tags = encode(tokens, sample.spans, scheme)
            for token, label in zip(tokens, tags.labels):
                handle.write(f"{token.text}\t{label}\n")
            handle.write("\n")
