import configparser

import pytest
from hypothesis import given, strategies as st

from claimspan.errors import SegmentationError, ValidationError
from claimspan.segment import (
    DEFAULT_TABLE,
    LanguageTable,
    SentenceSpan,
    Token,
    split_sentences,
    tokenize,
)


def texts(tokens):
    return [t.text for t in tokens]


class TestTokenize:
    def test_words_and_punctuation(self):
        tokens = tokenize("Hello, world!")
        assert texts(tokens) == ["Hello", ",", "world", "!"]
        assert [(t.start_char, t.end_char) for t in tokens] == [
            (0, 5),
            (5, 6),
            (7, 12),
            (12, 13),
        ]

    def test_offsets_slice_back_to_text(self):
        text = "Scientists confirmed: the vaccine works."
        for tok in tokenize(text):
            assert text[tok.start_char : tok.end_char] == tok.text

    def test_url_is_one_token(self):
        tokens = tokenize("see https://example.com/a?b=1 now")
        assert texts(tokens) == ["see", "https://example.com/a?b=1", "now"]

    def test_www_url_is_one_token(self):
        assert texts(tokenize("www.example.org rocks"))[0] == "www.example.org"

    def test_mention_and_hashtag(self):
        tokens = tokenize("@who said #claims matter")
        assert texts(tokens) == ["@who", "said", "#claims", "matter"]

    def test_contraction_stays_together(self):
        assert texts(tokenize("don't stop")) == ["don't", "stop"]

    def test_decimal_number_stays_together(self):
        assert texts(tokenize("over 3.5 million doses")) == [
            "over",
            "3.5",
            "million",
            "doses",
        ]

    def test_abbreviation_token_keeps_trailing_period_out(self):
        # "U.S" groups via internal periods, the final "." is punctuation.
        assert texts(tokenize("the U.S. said")) == ["the", "U.S", ".", "said"]

    def test_devanagari_with_matras(self):
        tokens = tokenize("टीका बच्चों के लिए सुरक्षित है।", "hi")
        assert texts(tokens) == ["टीका", "बच्चों", "के", "लिए", "सुरक्षित", "है", "।"]

    def test_zero_width_joiners_stay_inside_words(self):
        word = "स‍त"
        assert texts(tokenize(word, "hi")) == [word]

    def test_tamil_words(self):
        tokens = tokenize("தடுப்பூசி பாதுகாப்பானது.", "ta")
        assert texts(tokens) == ["தடுப்பூசி", "பாதுகாப்பானது", "."]

    def test_empty_text_yields_no_tokens(self):
        assert tokenize("") == []
        assert tokenize("   \n\t ") == []

    def test_emoji_grouped_as_punctuation_run(self):
        tokens = tokenize("great 🚀🚀 news")
        assert texts(tokens) == ["great", "🚀🚀", "news"]

    @given(st.text(max_size=80))
    def test_tokens_cover_disjoint_ascending_ranges(self, text):
        tokens = tokenize(text)
        prev_end = -1
        for tok in tokens:
            assert tok.start_char >= prev_end
            assert tok.start_char < tok.end_char
            assert text[tok.start_char : tok.end_char] == tok.text
            prev_end = tok.end_char

    @given(st.text(max_size=80))
    def test_non_whitespace_is_fully_covered(self, text):
        covered = set()
        for tok in tokenize(text):
            covered.update(range(tok.start_char, tok.end_char))
        for i, ch in enumerate(text):
            if not ch.isspace():
                assert i in covered


class TestTokenValidation:
    def test_negative_offset_rejected(self):
        with pytest.raises(ValidationError):
            Token("x", -1, 0)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            Token("xy", 0, 3)

    def test_sentence_requires_tokens_inside_range(self):
        tok = Token("hi", 10, 12)
        with pytest.raises(ValidationError):
            SentenceSpan(0, 5, (tok,))
        with pytest.raises(ValidationError):
            SentenceSpan(0, 12, ())


class TestSplitSentences:
    def test_english_terminators(self):
        sents = split_sentences("One here. Two there! Three? Done", "en")
        assert len(sents) == 4
        text = "One here. Two there! Three? Done"
        assert [text[s.start_char : s.end_char] for s in sents] == [
            "One here.",
            "Two there!",
            "Three?",
            "Done",
        ]

    def test_ellipsis_character_splits(self):
        sents = split_sentences("Wait… more text", "en")
        assert len(sents) == 2

    def test_abbreviations_do_not_split(self):
        sents = split_sentences("Dr. Smith met Mr. Jones. They spoke.", "en")
        assert len(sents) == 2
        assert sents[0].end_char == len("Dr. Smith met Mr. Jones.")

    def test_us_abbreviation_does_not_split(self):
        sents = split_sentences("The U.S. economy grew. Markets rose.", "en")
        assert len(sents) == 2

    def test_decimal_point_does_not_split(self):
        sents = split_sentences("Rates hit 3.5 percent. Banks reacted.", "en")
        assert len(sents) == 2

    def test_danda_splits_hindi(self):
        text = "नमस्ते दोस्तों। टीका सुरक्षित है। धन्यवाद।"
        sents = split_sentences(text, "hi")
        assert len(sents) == 3
        assert text[sents[1].start_char : sents[1].end_char] == "टीका सुरक्षित है।"

    def test_double_danda_splits(self):
        sents = split_sentences("पहला वाक्य॥ दूसरा वाक्य", "hi")
        assert len(sents) == 2

    def test_non_segmentable_language_is_one_sentence(self):
        text = "ভ্যাকসিন নিরাপদ। আরও খবর আসছে।"
        sents = split_sentences(text, "bn")
        assert len(sents) == 1
        assert sents[0].start_char == 0

    def test_punjabi_whole_text(self):
        sents = split_sentences("ਇਹ ਇੱਕ ਵਾਕ ਹੈ। ਇਹ ਦੂਜਾ ਹੈ।", "pa")
        assert len(sents) == 1

    def test_unknown_language_is_not_segmented(self):
        sents = split_sentences("One. Two.", "xx")
        assert len(sents) == 1

    def test_terminator_without_following_space_does_not_split(self):
        # mid-token terminators (URLs aside) only split before whitespace
        sents = split_sentences("visit example.com today. Bye.", "en")
        assert len(sents) == 2

    def test_whitespace_only_text_raises(self):
        with pytest.raises(SegmentationError):
            split_sentences("   ", "en")
        with pytest.raises(SegmentationError):
            split_sentences("", "en")

    def test_sentences_are_ascending_and_disjoint(self):
        text = "A b c. D e f! G h… Final bit."
        sents = split_sentences(text, "en")
        for prev, cur in zip(sents, sents[1:]):
            assert prev.end_char <= cur.start_char

    def test_tokens_concatenate_to_full_tokenization(self):
        text = "One here. Two there! Three."
        sents = split_sentences(text, "en")
        joined = [t for s in sents for t in s.tokens]
        assert joined == tokenize(text, "en")

    @given(
        st.lists(
            st.sampled_from(["Aa bb cc.", "Dd ee!", "Ff gg?", "Hh ii jj."]),
            min_size=1,
            max_size=6,
        )
    )
    def test_sentence_count_matches_chunk_count(self, chunks):
        text = " ".join(chunks)
        assert len(split_sentences(text, "en")) == len(chunks)


class TestLanguageTable:
    def test_defaults(self):
        assert DEFAULT_TABLE.is_segmentable("en")
        assert DEFAULT_TABLE.is_segmentable("ta")
        assert not DEFAULT_TABLE.is_segmentable("pa")
        assert not DEFAULT_TABLE.is_segmentable("bn")
        assert "।" in DEFAULT_TABLE.terminators_for("hi")

    def test_from_config_adds_language_and_terminator(self):
        parser = configparser.ConfigParser()
        parser.read_string(
            """
            [languages]
            mr = true
            ta = false
            [terminators]
            mr = ॥
            [abbreviations]
            tokens = Prof. St.
            """
        )
        table = LanguageTable.from_config(parser)
        assert table.is_segmentable("mr")
        assert not table.is_segmentable("ta")
        assert "॥" in table.terminators_for("mr")
        assert "Prof." in table.abbreviations
        # stock entries survive the merge
        assert table.is_segmentable("en")
        assert "Dr." in table.abbreviations

    def test_custom_abbreviation_suppresses_split(self):
        parser = configparser.ConfigParser()
        parser.read_string("[abbreviations]\ntokens = Prof.\n")
        table = LanguageTable.from_config(parser)
        sents = split_sentences("Prof. Rao spoke. All agreed.", "en", table)
        assert len(sents) == 2
