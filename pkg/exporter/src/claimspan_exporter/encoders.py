"""Word-vector encoders behind the export operations.

Both encoders share one calling convention: encode(words, layer) returns a
matrix with one unit-normalized row per word, and a depth attribute bounds
the valid layer indices. HashEncoder needs no model files and is fully
deterministic, which makes exports reproducible byte for byte; it stands in
wherever a checkpoint is unavailable. TransformerEncoder wraps a pretrained
checkpoint through the optional torch/transformers dependencies and pools
hidden states per word token.
"""

from __future__ import annotations

import hashlib
from typing import Sequence

import numpy as np

from claimspan.errors import ConfigurationError, ValidationError


def _ngram_vector(ngram: str, dim: int) -> np.ndarray:
    seed = int.from_bytes(
        hashlib.blake2b(ngram.encode("utf-8"), digest_size=8).digest(), "big"
    )
    return np.random.default_rng(seed).standard_normal(dim)


class HashEncoder:
    """Deterministic encoder built from hashed character n-grams.

    A word is padded to <word>, split into character trigrams (short words
    stay whole), and its vector is the unit-normalized mean of the hashed
    trigram vectors. Equal words therefore always map to equal vectors and
    similar surface forms land near each other, which is all the export
    tests and dry runs need.
    """

    depth = 1

    def __init__(self, dim: int = 64):
        if dim < 2:
            raise ValidationError("embedding dimension must be >= 2")
        self.dim = dim
        self._cache: dict[str, np.ndarray] = {}

    def encode(self, words: Sequence[str], layer: int = 0) -> np.ndarray:
        if layer != 0:
            raise ConfigurationError(
                f"hash encoder has depth 1, layer {layer} is unavailable"
            )
        if not words:
            raise ValidationError("cannot encode an empty word list")
        return np.stack([self._word(word) for word in words])

    def _word(self, word: str) -> np.ndarray:
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        padded = f"<{word}>"
        if len(padded) <= 3:
            grams = [padded]
        else:
            grams = [padded[i : i + 3] for i in range(len(padded) - 2)]
        vector = np.mean([_ngram_vector(g, self.dim) for g in grams], axis=0)
        vector /= np.linalg.norm(vector)
        self._cache[word] = vector
        return vector


class TransformerEncoder:
    """Pretrained-checkpoint encoder; requires the "neural" extra.

    Words are fed pre-split so the tokenizer's word-id map ties every
    subword back to its source word; subword states from the requested
    hidden layer are mean-pooled per word and unit-normalized. Layer 0 is
    the embedding layer, depth-1 the top layer.
    """

    def __init__(self, model: str = "bert-base-multilingual-cased", device: str = "cpu"):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise ConfigurationError(
                "transformer encoding needs the torch and transformers packages "
                "(pip install 'claimspan-exporter[neural]')"
            ) from exc
        self._torch = torch
        try:
            self._tokenizer = AutoTokenizer.from_pretrained(model)
            self._model = AutoModel.from_pretrained(model, output_hidden_states=True)
        except Exception as exc:  # hub/file/config failures are all setup problems
            raise ConfigurationError(f"cannot load encoder {model!r}: {exc}") from exc
        self._model.eval()
        self._model.to(device)
        self.device = device
        self.dim = int(self._model.config.hidden_size)
        self.depth = int(self._model.config.num_hidden_layers) + 1

    def encode(self, words: Sequence[str], layer: int = 8) -> np.ndarray:
        if not 0 <= layer < self.depth:
            raise ConfigurationError(
                f"layer {layer} outside encoder depth {self.depth}"
            )
        if not words:
            raise ValidationError("cannot encode an empty word list")
        batch = self._tokenizer(
            list(words),
            is_split_into_words=True,
            return_tensors="pt",
            truncation=True,
        ).to(self.device)
        with self._torch.no_grad():
            states = self._model(**batch).hidden_states[layer][0]
        word_ids = batch.word_ids(0)
        rows = np.zeros((len(words), self.dim))
        counts = np.zeros(len(words))
        for position, word_id in enumerate(word_ids):
            if word_id is None:
                continue
            rows[word_id] += states[position].cpu().numpy()
            counts[word_id] += 1
        if np.any(counts == 0):
            missing = [words[k] for k in np.flatnonzero(counts == 0)]
            raise ValidationError(f"tokenizer dropped words: {missing!r}")
        rows /= counts[:, None]
        rows /= np.linalg.norm(rows, axis=1, keepdims=True)
        return rows
