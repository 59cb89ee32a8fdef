"""Offset-preserving word tokenization and rule-based sentence segmentation.

Tokens carry half-open character offsets into the parent text, counted in
Unicode scalar values, so downstream span arithmetic never re-derives
positions from token text. The tokenizer follows Unicode default word
boundaries with three social-media amendments: URLs, @mentions, and
#hashtags stay whole, and runs of punctuation form single tokens.

Sentence segmentation is deliberately rule-based (terminator character +
following whitespace, with an abbreviation stop-list) so output is stable
across machines with no model downloads. Languages not flagged segmentable
fall back to one sentence spanning the whole text.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import regex

from .errors import SegmentationError, ValidationError

# \p{M} keeps combining marks inside words (Indic matras), ZWJ/ZWNJ keep
# conjunct-forming joiners from splitting Devanagari/Gurmukhi words.
_WORD = r"[\p{L}\p{M}\p{N}_‌‍]"

_TOKEN_RE = regex.compile(
    rf"""
      https?://\S+                                 # URLs stay whole
    | www\.\S+
    | [@#]{_WORD}+                                 # mentions and hashtags
    | {_WORD}+(?:[.,'’]{_WORD}+)*             # words; internal . , ' as in U.S, 3,000, don't
    | [^\s\p{{L}}\p{{M}}\p{{N}}_‌‍]+     # punctuation runs
    """,
    regex.VERBOSE,
)

# Default sentence terminators; danda and double danda cover Indic scripts.
DEFAULT_TERMINATORS = frozenset(".!?…।॥")

DEFAULT_SEGMENTABLE = frozenset({"en", "hi", "ta", "te"})

DEFAULT_ABBREVIATIONS = frozenset({"Dr.", "Mr.", "Mrs.", "U.S."})


@dataclass(frozen=True)
class Token:
    """One token with its half-open offset range in the parent text."""

    text: str
    start_char: int
    end_char: int

    def __post_init__(self):
        if not self.text:
            raise ValidationError("token text must be nonempty")
        if not 0 <= self.start_char < self.end_char:
            raise ValidationError(
                f"bad token offsets [{self.start_char}, {self.end_char})"
            )
        if self.end_char - self.start_char != len(self.text):
            raise ValidationError("token offsets do not match token text length")


@dataclass(frozen=True)
class SentenceSpan:
    """A sentence as a character range plus the tokens it contains."""

    start_char: int
    end_char: int
    tokens: tuple[Token, ...]

    def __post_init__(self):
        if not self.tokens:
            raise ValidationError("a sentence must contain at least one token")
        for tok in self.tokens:
            if tok.start_char < self.start_char or tok.end_char > self.end_char:
                raise ValidationError(
                    f"token [{tok.start_char}, {tok.end_char}) outside "
                    f"sentence [{self.start_char}, {self.end_char})"
                )


@dataclass(frozen=True)
class LanguageTable:
    """Per-language segmentation capabilities.

    `segmentable` lists codes split on terminators; everything else gets the
    whole-text fallback. `extra_terminators` maps a code to additional
    terminator characters, merged with the defaults. The abbreviation
    stop-list suppresses sentence breaks after entries like "Dr.".
    """

    segmentable: frozenset[str] = DEFAULT_SEGMENTABLE
    extra_terminators: Mapping[str, str] = field(default_factory=dict)
    abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS

    def is_segmentable(self, language: str) -> bool:
        return language in self.segmentable

    def terminators_for(self, language: str) -> frozenset[str]:
        extra = self.extra_terminators.get(language, "")
        return DEFAULT_TERMINATORS | frozenset(extra)

    @classmethod
    def from_file(cls, path) -> "LanguageTable":
        """Load a table from an INI file.

        Recognized sections: [languages] with `code = true/false` entries
        (true adds to the segmentable set, false removes), [terminators]
        with `code = <chars>` adding terminator characters per language,
        and [abbreviations] with a space-separated `tokens` entry extending
        the stop-list.
        """
        parser = configparser.ConfigParser()
        with open(path, encoding="utf-8") as handle:
            parser.read_file(handle)
        return cls.from_config(parser)

    @classmethod
    def from_config(cls, parser: configparser.ConfigParser) -> "LanguageTable":
        segmentable = set(DEFAULT_SEGMENTABLE)
        if parser.has_section("languages"):
            for code in parser.options("languages"):
                if parser.getboolean("languages", code):
                    segmentable.add(code)
                else:
                    segmentable.discard(code)
        extra: dict[str, str] = {}
        if parser.has_section("terminators"):
            for code in parser.options("terminators"):
                extra[code] = parser.get("terminators", code)
        abbreviations = set(DEFAULT_ABBREVIATIONS)
        if parser.has_section("abbreviations"):
            abbreviations.update(parser.get("abbreviations", "tokens", fallback="").split())
        return cls(
            segmentable=frozenset(segmentable),
            extra_terminators=extra,
            abbreviations=frozenset(abbreviations),
        )


DEFAULT_TABLE = LanguageTable()


def tokenize(text: str, language: str = "und") -> list[Token]:
    """Split text into offset-annotated tokens.

    The language code is accepted for interface symmetry with
    split_sentences; the token rules themselves are language-independent.
    Empty text yields an empty list.
    """
    del language
    return [Token(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def split_sentences(
    text: str,
    language: str,
    table: LanguageTable | None = None,
) -> list[SentenceSpan]:
    """Split text into sentences; tokens are partitioned, never cut.

    For segmentable languages a sentence ends at a token whose final
    character is a terminator followed by whitespace or end of text, unless
    the preceding word plus the terminator form a stop-list abbreviation.
    Non-segmentable languages yield a single sentence over the whole text.

    Raises SegmentationError when the text contains no tokens.
    """
    if table is None:
        table = DEFAULT_TABLE
    tokens = tokenize(text, language)
    if not tokens:
        raise SegmentationError("text has no tokens to segment")

    if not table.is_segmentable(language):
        return [_sentence(tokens)]

    terminators = table.terminators_for(language)
    sentences: list[SentenceSpan] = []
    current: list[Token] = []
    for idx, tok in enumerate(tokens):
        current.append(tok)
        if tok.text[-1] not in terminators:
            continue
        at_end = tok.end_char == len(text)
        if not at_end and not text[tok.end_char].isspace():
            continue
        if _is_abbreviation(text, tokens, idx, table.abbreviations):
            continue
        sentences.append(_sentence(current))
        current = []
    if current:
        sentences.append(_sentence(current))
    return sentences


def _sentence(tokens: Iterable[Token]) -> SentenceSpan:
    toks = tuple(tokens)
    return SentenceSpan(toks[0].start_char, toks[-1].end_char, toks)


def _is_abbreviation(
    text: str, tokens: list[Token], idx: int, abbreviations: frozenset[str]
) -> bool:
    tok = tokens[idx]
    # Join with the preceding token only when directly adjacent, so the
    # chunk "U.S" + "." is checked as "U.S." but "word ." is just ".".
    if idx > 0 and tokens[idx - 1].end_char == tok.start_char:
        chunk = text[tokens[idx - 1].start_char : tok.end_char]
    else:
        chunk = tok.text
    return chunk in abbreviations
