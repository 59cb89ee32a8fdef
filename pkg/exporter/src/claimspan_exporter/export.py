"""Embedding and alignment exports in the primary package's file formats.

The writers here pack the on-disk formats themselves (record header plus
float32 rows for embeddings, "i-j" pair lines for alignments) instead of
borrowing claimspan's writer code, so a successful round trip through
claimspan's loaders genuinely certifies the format contract. Outputs land
in temporary siblings and are renamed into place, which keeps half-written
files invisible to a consumer watching the directory.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from claimspan.align import SoftAlignConfig, extract_links
from claimspan.corpus import load_claims, load_corpus
from claimspan.errors import ConfigurationError, ValidationError
from claimspan.segment import tokenize

# Record header shared with the reader: token count, dimension, normalized flag.
_HEADER = struct.Struct("<IIB")

DATA_FILE = "embeddings.bin"
INDEX_FILE = "embeddings.idx"
ROLES = ("claim", "sentence")


@dataclass(frozen=True)
class ExportJob:
    """One embedding-export request.

    The claim role embeds the normalized claim's tokens, the sentence role
    the whole post's tokens; both follow the reader's conventions so the
    files drop straight into an annotation run.
    """

    posts: str | Path
    out_dir: str | Path
    encoder: object
    claims: str | Path | None = None
    roles: tuple[str, ...] = ROLES
    layer: int = 0

    def __post_init__(self):
        if not self.roles:
            raise ValidationError("at least one role must be exported")
        unknown = [role for role in self.roles if role not in ROLES]
        if unknown:
            raise ValidationError(f"unknown roles {unknown!r}, expected {ROLES}")
        if self.layer < 0:
            raise ValidationError("layer index must be >= 0")


def _encoded(encoder, words: Sequence[str], layer: int, where: str) -> np.ndarray:
    matrix = np.asarray(encoder.encode(words, layer), dtype=np.float64)
    if matrix.shape != (len(words), encoder.dim):
        raise ValidationError(
            f"encoder returned shape {matrix.shape} for {len(words)} tokens ({where})"
        )
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(norms == 0):
        raise ValidationError(f"encoder produced a zero vector ({where})")
    return matrix / norms[:, None]


def _check_layer(encoder, layer: int) -> None:
    depth = getattr(encoder, "depth", 1)
    if not 0 <= layer < depth:
        raise ConfigurationError(f"layer {layer} outside encoder depth {depth}")


def export_embeddings(job: ExportJob) -> tuple[Path, Path]:
    """Write one embedding record per (sample, role) and the offset index.

    Returns (data path, index path). A repeat run over the same inputs
    produces byte-identical files.
    """
    _check_layer(job.encoder, job.layer)
    posts = load_corpus(job.posts, "posts")
    claims_by_id = {}
    if "claim" in job.roles:
        if job.claims is None:
            raise ConfigurationError("claim role requested but no claims file given")
        claims_by_id = {claim.post_id: claim for claim in load_claims(job.claims)}
        missing = [post.id for post in posts if post.id not in claims_by_id]
        if missing:
            raise ValidationError("posts without claims: " + ", ".join(missing))

    out_dir = Path(job.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    data_tmp = out_dir / (DATA_FILE + ".tmp")
    index_tmp = out_dir / (INDEX_FILE + ".tmp")

    index_lines = []
    with open(data_tmp, "wb") as handle:
        for post in posts:
            if "\t" in post.id or "\n" in post.id:
                raise ValidationError(f"id {post.id!r} not representable in index")
            for role in job.roles:
                text = claims_by_id[post.id].text if role == "claim" else post.text
                words = [token.text for token in tokenize(text)]
                matrix = _encoded(
                    job.encoder, words, job.layer, f"id {post.id!r} role {role!r}"
                )
                index_lines.append(f"{post.id}\t{role}\t{handle.tell()}\n")
                handle.write(_HEADER.pack(len(words), job.encoder.dim, 1))
                handle.write(np.ascontiguousarray(matrix, dtype="<f4").tobytes())
    with open(index_tmp, "w", encoding="utf-8") as handle:
        handle.writelines(index_lines)

    # Data first: an index is only published once its offsets are readable.
    os.replace(data_tmp, out_dir / DATA_FILE)
    os.replace(index_tmp, out_dir / INDEX_FILE)
    return out_dir / DATA_FILE, out_dir / INDEX_FILE


def export_alignments(
    pairs: Iterable[tuple[str, str]],
    out_path: str | Path,
    encoder,
    layer: int = 0,
    cfg: SoftAlignConfig | None = None,
) -> Path:
    """Align (claim text, sentence text) pairs and write one line per pair.

    Rows index claim tokens, columns sentence tokens; links come from the
    softmax-product rule at the given config (library defaults when None).
    """
    _check_layer(encoder, layer)
    cfg = cfg if cfg is not None else SoftAlignConfig()
    out_path = Path(out_path)

    lines = []
    for claim_text, sentence_text in pairs:
        claim_words = [token.text for token in tokenize(claim_text)]
        sentence_words = [token.text for token in tokenize(sentence_text)]
        where = f"pair {len(lines)}"
        claim_matrix = _encoded(encoder, claim_words, layer, where)
        sentence_matrix = _encoded(encoder, sentence_words, layer, where)
        links = extract_links(claim_matrix @ sentence_matrix.T, cfg)
        lines.append(" ".join(f"{i}-{j}" for i, j in sorted(links.links)) + "\n")

    tmp = out_path.with_name(out_path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as handle:
        handle.writelines(lines)
    os.replace(tmp, out_path)
    return out_path
