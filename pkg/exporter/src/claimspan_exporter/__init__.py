"""Sidecar exporter: embedding matrices and word alignments for claimspan.

Produces the binary embedding store and Pharaoh-style links files that the
primary package consumes, from either a pretrained transformer checkpoint
or a deterministic hash encoder that needs no model files.
"""

from .encoders import HashEncoder, TransformerEncoder
from .export import (
    DATA_FILE,
    INDEX_FILE,
    ROLES,
    ExportJob,
    export_alignments,
    export_embeddings,
)

__all__ = [
    "DATA_FILE",
    "INDEX_FILE",
    "ROLES",
    "ExportJob",
    "HashEncoder",
    "TransformerEncoder",
    "export_alignments",
    "export_embeddings",
]
