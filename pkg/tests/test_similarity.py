import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from claimspan.errors import ConfigurationError, ValidationError
from claimspan.similarity import (
    EmbeddingMatrix,
    FileEmbeddingStore,
    HashEmbeddingProvider,
    SimilarityMeasure,
    bertscore,
    meteor,
    rouge_l,
    rouge_n,
    score,
    write_embeddings,
)

WORDS = st.lists(st.sampled_from("the cat sat on mat dog ran far".split()), max_size=8)


def one_hot(tokens, vocab):
    index = {t: i for i, t in enumerate(vocab)}
    vectors = np.zeros((len(tokens), len(vocab)))
    for row, tok in enumerate(tokens):
        vectors[row, index[tok]] = 1.0
    return EmbeddingMatrix(tuple(tokens), vectors, normalized=True)


class TestRouge1:
    def test_partial_overlap(self):
        prf = rouge_n("the cat sat".split(), "the cat".split(), 1)
        assert prf.precision == pytest.approx(2 / 3)
        assert prf.recall == pytest.approx(1.0)
        assert prf.f1 == pytest.approx(0.8)

    def test_repeated_candidate_tokens_are_clipped(self):
        prf = rouge_n("the the the".split(), "the cat".split(), 1)
        assert prf.precision == pytest.approx(1 / 3)
        assert prf.recall == pytest.approx(0.5)
        assert prf.f1 == pytest.approx(0.4)

    def test_bigrams(self):
        prf = rouge_n("a b c d".split(), "a b d c".split(), 2)
        assert prf.precision == pytest.approx(1 / 3)
        assert prf.recall == pytest.approx(1 / 3)
        assert prf.f1 == pytest.approx(1 / 3)

    def test_empty_side_scores_zero(self):
        assert rouge_n([], "a b".split(), 1) == rouge_n("a b".split(), [], 1)
        assert rouge_n([], [], 1).f1 == 0.0

    def test_ngram_longer_than_text_scores_zero(self):
        assert rouge_n(["one"], ["one"], 2).f1 == 0.0

    def test_identical_texts_score_one(self):
        prf = rouge_n("a b c".split(), "a b c".split(), 1)
        assert (prf.precision, prf.recall, prf.f1) == (1.0, 1.0, 1.0)

    def test_matching_is_case_sensitive(self):
        assert rouge_n(["The"], ["the"], 1).f1 == 0.0

    def test_bad_order_rejected(self):
        with pytest.raises(ValidationError):
            rouge_n(["a"], ["a"], 0)

    @given(WORDS, WORDS)
    def test_scores_bounded_and_symmetric_in_roles(self, cand, ref):
        prf = rouge_n(cand, ref, 1)
        assert 0.0 <= prf.precision <= 1.0
        assert 0.0 <= prf.recall <= 1.0
        assert 0.0 <= prf.f1 <= 1.0
        flipped = rouge_n(ref, cand, 1)
        assert flipped.precision == pytest.approx(prf.recall)
        assert flipped.recall == pytest.approx(prf.precision)
        assert flipped.f1 == pytest.approx(prf.f1)


class TestRougeL:
    def test_lcs_with_reordering(self):
        prf = rouge_l("the cat sat on mat".split(), "the mat sat on cat".split())
        assert prf.precision == pytest.approx(0.6)
        assert prf.recall == pytest.approx(0.6)
        assert prf.f1 == pytest.approx(0.6)

    def test_subsequence_not_substring(self):
        prf = rouge_l("a x b y c".split(), "a b c".split())
        assert prf.recall == pytest.approx(1.0)
        assert prf.precision == pytest.approx(0.6)

    def test_disjoint_is_zero(self):
        assert rouge_l("a b".split(), "c d".split()).f1 == 0.0

    @given(WORDS, WORDS)
    def test_rouge_l_never_exceeds_rouge_1_recall(self, cand, ref):
        # an LCS is a subset of the clipped unigram overlap
        if cand and ref:
            assert rouge_l(cand, ref).recall <= rouge_n(cand, ref, 1).recall + 1e-12


class TestMeteor:
    def test_identical_six_tokens(self):
        value = meteor("the cat sat on the mat".split(), "the cat sat on the mat".split())
        assert value == pytest.approx(431 / 432)

    def test_two_tokens_swapped_gives_two_chunks(self):
        assert meteor("b a".split(), "a b".split()) == pytest.approx(0.5)

    def test_single_match_out_of_two(self):
        assert meteor("the cat".split(), "the dog".split()) == pytest.approx(0.25)

    def test_casefolded_matching(self):
        value = meteor("The CAT".split(), "the cat".split())
        assert value == pytest.approx(1.0 - 0.5 * (1 / 2) ** 3)

    def test_no_match_is_zero(self):
        assert meteor("a b".split(), "c d".split()) == 0.0

    def test_empty_side_is_zero(self):
        assert meteor([], "a".split()) == 0.0
        assert meteor("a".split(), []) == 0.0

    def test_duplicate_tokens_match_one_to_one(self):
        # second candidate "the" finds the second reference "the"
        value = meteor("the the".split(), "the x the".split())
        m, p, r = 2, 2 / 2, 2 / 3
        fmean = 10 * p * r / (r + 9 * p)
        # matches land on reference 0 and 2: two chunks
        expected = fmean * (1 - 0.5 * (2 / m) ** 3)
        assert value == pytest.approx(expected)

    @given(WORDS, WORDS)
    def test_bounded(self, cand, ref):
        assert 0.0 <= meteor(cand, ref) <= 1.0


class TestBertscore:
    def test_one_hot_partial_overlap(self):
        vocab = ["a", "b", "c"]
        cand = one_hot(["a", "b"], vocab)
        ref = one_hot(["a", "c"], vocab)
        assert bertscore(cand, ref, "precision") == pytest.approx(0.5)
        assert bertscore(cand, ref, "recall") == pytest.approx(0.5)
        assert bertscore(cand, ref, "f1") == pytest.approx(0.5)

    def test_recall_reduces_to_reference_coverage(self):
        vocab = ["a", "b", "c", "d"]
        cand = one_hot(["a", "b"], vocab)
        ref = one_hot(["a", "a", "d"], vocab)
        # two of three reference positions have their type in the candidate
        assert bertscore(cand, ref, "recall") == pytest.approx(2 / 3)

    def test_identical_matrices_score_one(self):
        vocab = ["x", "y"]
        mat = one_hot(["x", "y", "x"], vocab)
        for mode in ("precision", "recall", "f1"):
            assert bertscore(mat, mat, mode) == pytest.approx(1.0)

    def test_f1_zero_when_no_overlap(self):
        vocab = ["a", "b"]
        cand = one_hot(["a"], vocab)
        ref = one_hot(["b"], vocab)
        assert bertscore(cand, ref, "f1") == 0.0

    def test_unknown_mode_rejected(self):
        vocab = ["a"]
        mat = one_hot(["a"], vocab)
        with pytest.raises(ValidationError):
            bertscore(mat, mat, "accuracy")

    def test_dim_mismatch_rejected(self):
        a = one_hot(["a"], ["a", "b"])
        b = one_hot(["a"], ["a", "b", "c"])
        with pytest.raises(ValidationError):
            bertscore(a, b, "f1")

    @given(
        st.lists(st.sampled_from("abcd"), min_size=1, max_size=6),
        st.lists(st.sampled_from("abcd"), min_size=1, max_size=6),
    )
    def test_one_hot_recall_equals_type_coverage_oracle(self, cand, ref):
        vocab = sorted(set(cand) | set(ref))
        value = bertscore(one_hot(cand, vocab), one_hot(ref, vocab), "recall")
        oracle = sum(1 for t in ref if t in set(cand)) / len(ref)
        assert value == pytest.approx(oracle, abs=1e-9)


class TestEmbeddingMatrix:
    def test_requires_unit_rows_when_normalized(self):
        with pytest.raises(ValidationError):
            EmbeddingMatrix(("a",), np.array([[2.0, 0.0]]), normalized=True)

    def test_unnormalized_rows_allowed_when_flagged(self):
        mat = EmbeddingMatrix(("a",), np.array([[2.0, 0.0]]), normalized=False)
        assert mat.dim == 2

    def test_row_count_must_match_tokens(self):
        with pytest.raises(ValidationError):
            EmbeddingMatrix(("a", "b"), np.eye(3), normalized=True)

    def test_one_dimensional_array_rejected(self):
        with pytest.raises(ValidationError):
            EmbeddingMatrix(("a",), np.ones(3), normalized=False)

    def test_vectors_are_float64(self):
        mat = EmbeddingMatrix(("a",), np.array([[1, 0]], dtype=np.float32), normalized=True)
        assert mat.vectors.dtype == np.float64

    def test_slice_rows(self):
        mat = one_hot(["a", "b", "c"], ["a", "b", "c"])
        block = mat.slice_rows(1, 3)
        assert block.tokens == ("b", "c")
        assert np.array_equal(block.vectors, mat.vectors[1:3])


class TestHashProvider:
    def test_deterministic_and_unit_norm(self):
        provider = HashEmbeddingProvider(dim=32)
        first = provider.embed("s1", "claim", ["vaccine", "is", "safe"])
        second = provider.embed("s2", "sentence", ["vaccine", "is", "safe"])
        assert np.array_equal(first.vectors, second.vectors)
        norms = np.linalg.norm(first.vectors, axis=1)
        assert np.allclose(norms, 1.0)

    def test_same_token_same_vector_across_positions(self):
        provider = HashEmbeddingProvider(dim=32)
        mat = provider.embed("s", "claim", ["echo", "other", "echo"])
        assert np.array_equal(mat.vectors[0], mat.vectors[2])

    def test_different_tokens_differ(self):
        provider = HashEmbeddingProvider(dim=64)
        mat = provider.embed("s", "claim", ["alpha", "omega"])
        assert not np.array_equal(mat.vectors[0], mat.vectors[1])

    def test_empty_token_list_yields_empty_matrix(self):
        mat = HashEmbeddingProvider().embed("s", "claim", [])
        assert mat.tokens == () and mat.vectors.shape[0] == 0
        with pytest.raises(ValidationError):
            bertscore(mat, mat, "f1")


class TestEmbeddingFiles:
    def _matrices(self):
        provider = HashEmbeddingProvider(dim=16)
        return [
            ("post-1", "claim", provider.embed("post-1", "claim", ["a", "b"])),
            ("post-1", "sentence", provider.embed("post-1", "sentence", ["a", "b", "c"])),
            ("post-2", "claim", provider.embed("post-2", "claim", ["x"])),
        ]

    def test_round_trip(self, tmp_path):
        entries = self._matrices()
        write_embeddings(entries, tmp_path)
        store = FileEmbeddingStore(tmp_path)
        for sample_id, role, matrix in entries:
            loaded = store.embed(sample_id, role, list(matrix.tokens))
            assert loaded.tokens == matrix.tokens
            assert np.allclose(loaded.vectors, matrix.vectors, atol=1e-7)
            assert loaded.normalized

    def test_missing_entry_names_the_id(self, tmp_path):
        write_embeddings(self._matrices(), tmp_path)
        store = FileEmbeddingStore(tmp_path)
        with pytest.raises(ValidationError, match="post-9"):
            store.embed("post-9", "claim", ["a"])

    def test_row_count_mismatch_rejected(self, tmp_path):
        write_embeddings(self._matrices(), tmp_path)
        store = FileEmbeddingStore(tmp_path)
        with pytest.raises(ValidationError, match="post-1"):
            store.embed("post-1", "claim", ["a", "b", "c", "d"])

    def test_tab_in_id_rejected(self, tmp_path):
        provider = HashEmbeddingProvider(dim=8)
        entry = ("bad\tid", "claim", provider.embed("x", "claim", ["a"]))
        with pytest.raises(ValidationError):
            write_embeddings([entry], tmp_path)

    def test_corrupt_index_rejected(self, tmp_path):
        write_embeddings(self._matrices(), tmp_path)
        index = tmp_path / "embeddings.idx"
        index.write_text("only-two-fields\there\n", encoding="utf-8")
        with pytest.raises(ValidationError):
            FileEmbeddingStore(tmp_path)

    def test_missing_directory_rejected(self, tmp_path):
        with pytest.raises(ConfigurationError, match="absent"):
            FileEmbeddingStore(tmp_path / "absent")


class TestScoreDispatcher:
    def test_sentence_is_the_candidate(self):
        # precision averages over the sentence side, so a sentence with one
        # matching and one extra token scores 0.5 under bertscore-p
        provider = _OneHotProvider(["a", "b"])
        value = score(
            SimilarityMeasure.BERTSCORE_P, ["a"], ["a", "b"], provider, "s"
        )
        assert value == pytest.approx(0.5)
        value = score(
            SimilarityMeasure.BERTSCORE_R, ["a"], ["a", "b"], provider, "s"
        )
        assert value == pytest.approx(1.0)

    def test_rouge_f1_orientation(self):
        value = score(SimilarityMeasure.ROUGE1_F1, "the cat".split(), "the cat sat".split())
        assert value == pytest.approx(0.8)

    def test_meteor_dispatch(self):
        value = score(SimilarityMeasure.METEOR, ["a"], ["a"])
        assert value == pytest.approx(0.5)  # one chunk of one match: 1 - 0.5

    def test_bert_measure_without_provider_rejected(self):
        with pytest.raises(ConfigurationError):
            score(SimilarityMeasure.BERTSCORE_F1, ["a"], ["a"])

    def test_default_measure(self):
        assert SimilarityMeasure.BERTSCORE_R.value == "bertscore-r"


class _OneHotProvider:
    def __init__(self, vocab):
        self.vocab = list(vocab)

    def embed(self, sample_id, role, tokens):
        texts = [t if isinstance(t, str) else t.text for t in tokens]
        return one_hot(texts, self.vocab)
