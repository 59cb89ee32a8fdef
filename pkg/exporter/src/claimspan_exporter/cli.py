"""Command-line front end for the exporter.

Two subcommands: embeddings writes the binary matrix store for a corpus,
alignments writes a links file for claim/sentence text pairs. Exit codes
follow the primary tool: 0 success, 1 bad input or configuration, 2 I/O.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from claimspan.align import SoftAlignConfig
from claimspan.errors import ConfigurationError, ValidationError

from .encoders import HashEncoder, TransformerEncoder
from .export import ROLES, ExportJob, export_alignments, export_embeddings


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; fold that into the validation code.
    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_encoder_flags(parser) -> None:
    parser.add_argument(
        "--encoder",
        choices=("transformer", "hash"),
        default="transformer",
        help="encoder backend (hash needs no model files)",
    )
    parser.add_argument(
        "--model",
        default="bert-base-multilingual-cased",
        help="checkpoint name for the transformer encoder",
    )
    parser.add_argument(
        "--dim", type=int, default=64, help="vector size for the hash encoder"
    )
    parser.add_argument(
        "--layer",
        type=int,
        help="encoder layer to export (default: 8 for transformer, 0 for hash)",
    )


def _build_parser() -> _Parser:
    parser = _Parser(prog="claimspan-export", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("embeddings", help="write embedding matrices for a corpus")
    p.add_argument("--corpus", required=True, help="posts JSONL")
    p.add_argument("--claims", help="normalized claims JSONL")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument(
        "--roles",
        default=",".join(ROLES),
        help="comma-separated roles to export (claim,sentence)",
    )
    _add_encoder_flags(p)

    p = sub.add_parser("alignments", help="write a links file for text pairs")
    p.add_argument(
        "--pairs",
        required=True,
        help='JSONL with {"claim": ..., "sentence": ...} per line',
    )
    p.add_argument("--out", required=True, help="output links file")
    p.add_argument("--threshold", type=float, help="link probability threshold")
    p.add_argument("--temperature", type=float, help="softmax temperature")
    _add_encoder_flags(p)

    return parser


def _make_encoder(args):
    if args.encoder == "hash":
        encoder = HashEncoder(dim=args.dim)
    else:
        encoder = TransformerEncoder(model=args.model)
    layer = args.layer
    if layer is None:
        layer = 8 if args.encoder == "transformer" else 0
    return encoder, layer


def _load_pairs(path) -> list[tuple[str, str]]:
    pairs = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{line_no}: bad JSON ({exc})")
            if not isinstance(row, dict) or not all(
                isinstance(row.get(key), str) and row[key] for key in ("claim", "sentence")
            ):
                raise ValidationError(
                    f"{path}:{line_no}: expected nonempty claim and sentence strings"
                )
            pairs.append((row["claim"], row["sentence"]))
    return pairs


def dispatch(argv) -> int:
    args = _build_parser().parse_args(argv)
    encoder, layer = _make_encoder(args)
    if args.command == "embeddings":
        job = ExportJob(
            posts=args.corpus,
            out_dir=args.out,
            encoder=encoder,
            claims=args.claims,
            roles=tuple(role.strip() for role in args.roles.split(",") if role.strip()),
            layer=layer,
        )
        data_path, _ = export_embeddings(job)
        print(f"wrote {len(job.roles)} roles per sample -> {data_path.parent}")
        return 0

    pairs = _load_pairs(args.pairs)
    defaults = SoftAlignConfig()
    cfg = SoftAlignConfig(
        threshold=defaults.threshold if args.threshold is None else args.threshold,
        temperature=defaults.temperature if args.temperature is None else args.temperature,
    )
    out = export_alignments(pairs, args.out, encoder, layer=layer, cfg=cfg)
    print(f"wrote {len(pairs)} alignment lines -> {out}")
    return 0


def main(argv=None) -> int:
    try:
        return dispatch(sys.argv[1:] if argv is None else list(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    except (ValidationError, ConfigurationError) as exc:
        print(f"claimspan-export: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"claimspan-export: i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
