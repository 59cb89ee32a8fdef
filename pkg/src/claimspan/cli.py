"""Single executable exposing the pipeline as subcommands.

Stages are scriptable one by one: filter, split, stats, annotate, project,
encode, eval, prompt, llm-run. Every subcommand accepts --config (an INI
file whose values flags override) and --json (machine-readable output
conforming to the schemas in cli_schema). Outputs are reproducible:
identical inputs and flags yield byte-identical files and reports.

Exit codes: 0 success, 1 validation or configuration problem, 2 I/O or
transport failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys

from .align import SoftAlignConfig, load_links
from .annotate import AnnotateConfig, Aligner, SpanRule, annotate_corpus
from .corpus import (
    AnnotatedSample,
    DEFAULT_LANGUAGES,
    FilterReason,
    FilterRules,
    LANGUAGE_NAMES,
    NormalizedClaim,
    Provenance,
    corpus_stats,
    filter_sample,
    load_claims,
    load_corpus,
    pair_claims,
    split_train_dev,
    write_claims,
    write_corpus,
)
from .errors import (
    ConfigurationError,
    EmptyResponseError,
    NoAlignmentError,
    SegmentationError,
    TransportError,
    ValidationError,
)
from .evaluation import EvalMode, EvalUnit, corpus_eval, pair_samples, to_token_spans
from .llm import (
    FixtureChatClient,
    HttpChatClient,
    LlmConfig,
    PromptKind,
    build_prompt,
    pick_examples,
    run_llm_eval,
)
from .segment import LanguageTable, tokenize
from .similarity import FileEmbeddingStore, HashEmbeddingProvider, SimilarityMeasure
from .tags import TagScheme, export_conll


class _Parser(argparse.ArgumentParser):
    # Usage problems are validation errors, exit 1 rather than argparse's 2.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"claimspan: error: {message}", file=sys.stderr)
        raise SystemExit(1)


class _Settings:
    """Config-file values with flag overrides."""

    def __init__(self, path: str | None):
        self.parser = configparser.ConfigParser()
        if path:
            try:
                with open(path, encoding="utf-8") as handle:
                    self.parser.read_file(handle)
            except OSError as exc:
                raise ConfigurationError(f"cannot read config file: {exc}")
            except configparser.Error as exc:
                raise ConfigurationError(f"bad config file: {exc}")

    def value(self, section: str, option: str, flag, default, cast=str):
        if flag is not None:
            return flag
        if self.parser.has_option(section, option):
            raw = self.parser.get(section, option)
            try:
                if cast is bool:
                    return self.parser.getboolean(section, option)
                return cast(raw)
            except ValueError:
                raise ConfigurationError(
                    f"config [{section}] {option} = {raw!r} is not a valid {cast.__name__}"
                )
        return default

    def languages(self) -> frozenset[str]:
        registry = set(DEFAULT_LANGUAGES)
        if self.parser.has_section("languages"):
            registry.update(self.parser.options("languages"))
        return frozenset(registry)

    def language_table(self) -> LanguageTable:
        return LanguageTable.from_config(self.parser)


def main(argv=None) -> int:
    try:
        return dispatch(sys.argv[1:] if argv is None else list(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    except (
        ValidationError,
        ConfigurationError,
        SegmentationError,
        EmptyResponseError,
        NoAlignmentError,
    ) as exc:
        print(f"claimspan: error: {exc}", file=sys.stderr)
        return 1
    except TransportError as exc:
        print(f"claimspan: transport error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"claimspan: i/o error: {exc}", file=sys.stderr)
        return 2


def dispatch(argv) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    settings = _Settings(args.config)
    handler = _HANDLERS[args.command]
    payload = handler(args, settings)
    if args.json:
        print(json.dumps(payload, ensure_ascii=False, indent=2))
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="claimspan",
        description="Claim-span annotation pipeline for multilingual social posts.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)

    p = _command(sub, "filter", "Apply collection-time noise filters to post/claim pairs.")
    p.add_argument("--posts", required=True, help="posts JSONL")
    p.add_argument("--claims", required=True, help="claims JSONL")
    p.add_argument("--out", required=True, help="accepted posts JSONL")
    p.add_argument("--out-claims", help="accepted claims JSONL")
    p.add_argument("--rejects", help="rejected ids JSONL (default: <out>.rejects.jsonl)")
    p.add_argument("--keywords", help="comma-separated media keywords")
    p.add_argument("--min-words", type=int)
    p.add_argument("--max-words", type=int)

    p = _command(sub, "split", "Deterministic train/dev split of an annotated corpus.")
    p.add_argument("--in", dest="input", required=True, help="annotated JSONL")
    p.add_argument("--train", required=True, help="train output JSONL")
    p.add_argument("--dev", required=True, help="dev output JSONL")
    p.add_argument("--ratio", type=float)
    p.add_argument("--seed", type=int)

    p = _command(sub, "stats", "Per-language counts and length statistics.")
    p.add_argument(
        "--in",
        dest="inputs",
        action="append",
        required=True,
        help="corpus JSONL (repeatable)",
    )
    p.add_argument("--kind", choices=["posts", "annotated"], default="annotated")

    p = _command(sub, "annotate", "Derive claim spans for post/claim pairs.")
    p.add_argument("--posts", required=True)
    p.add_argument("--claims", required=True)
    p.add_argument("--out", required=True, help="annotated output JSONL")
    p.add_argument("--rejects", help="default: <out>.rejects.jsonl")
    _add_pipeline_flags(p)
    p.add_argument("--links", help="Pharaoh alignment file for --aligner links")
    p.add_argument("--jobs", type=int, help="worker processes (default: all cores)")

    p = _command(sub, "project", "Project source spans onto translated posts.")
    p.add_argument("--source", required=True, help="source annotated JSONL")
    p.add_argument("--targets", required=True, help="translated posts JSONL (matching ids)")
    p.add_argument("--out", required=True)
    p.add_argument("--rejects", help="default: <out>.rejects.jsonl")
    _add_pipeline_flags(p)
    p.add_argument("--jobs", type=int)

    p = _command(sub, "encode", "Export token/label training files.")
    p.add_argument("--in", dest="input", required=True, help="annotated JSONL")
    p.add_argument("--scheme", required=True, choices=[s.value for s in TagScheme])
    p.add_argument("--out", required=True, help="CoNLL-style TSV output")

    p = _command(sub, "eval", "Span-level precision/recall/F1 of predictions against gold.")
    p.add_argument("--pred", required=True, help="predicted annotated JSONL")
    p.add_argument("--gold", required=True, help="gold annotated JSONL")
    p.add_argument("--mode", choices=[m.value for m in EvalMode])
    p.add_argument("--unit", choices=[u.value for u in EvalUnit])

    p = _command(sub, "prompt", "Build model prompts for inspection.")
    p.add_argument("--posts", required=True)
    p.add_argument("--kind", required=True, choices=[k.value for k in PromptKind])
    p.add_argument("--k", type=int, default=0, help="in-context example count")
    p.add_argument("--train", help="annotated JSONL supplying examples")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="prompts JSONL output")

    p = _command(sub, "llm-run", "Prompt a model for every post and score the spans.")
    p.add_argument("--gold", required=True, help="gold annotated JSONL")
    p.add_argument("--kind", required=True, choices=[k.value for k in PromptKind])
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--model")
    p.add_argument("--fixture", help="recorded prompt/response JSONL")
    p.add_argument("--endpoint", help="chat-completion endpoint URL")
    p.add_argument("--cache", help="response cache directory")
    p.add_argument("--train", help="annotated JSONL supplying examples")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-retries", type=int)
    p.add_argument("--backoff", type=float)
    _add_pipeline_flags(p)

    return parser


def _command(sub, name: str, help_text: str):
    p = sub.add_parser(name, help=help_text, description=help_text)
    p.add_argument("--config", help="INI config file; flags override its values")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    return p


def _add_pipeline_flags(p) -> None:
    p.add_argument("--measure", choices=[m.value for m in SimilarityMeasure])
    p.add_argument("--aligner", choices=[a.value for a in Aligner])
    p.add_argument("--span-rule", choices=[r.value for r in SpanRule])
    p.add_argument("--embeddings", help="directory with exported embedding files")
    p.add_argument("--hash-dim", type=int, help="fallback hashed-embedding dimension")
    p.add_argument("--threshold", type=float, help="soft-alignment link threshold")
    p.add_argument(
        "--temperature", type=float, help="soft-alignment softmax temperature"
    )


def _annotate_config(args, settings: _Settings) -> AnnotateConfig:
    measure = SimilarityMeasure(
        settings.value("annotate", "measure", args.measure, SimilarityMeasure.BERTSCORE_R.value)
    )
    aligner = Aligner(
        settings.value("annotate", "aligner", args.aligner, Aligner.SOFT.value)
    )
    span_rule = SpanRule(
        settings.value("annotate", "span_rule", args.span_rule, SpanRule.FIRST_LAST.value)
    )
    soft = SoftAlignConfig(
        threshold=settings.value("annotate", "threshold", args.threshold, 0.001, float),
        temperature=settings.value(
            "annotate", "temperature", args.temperature, 0.05, float
        ),
    )
    embeddings = settings.value("annotate", "embeddings", args.embeddings, None)
    if embeddings:
        provider = FileEmbeddingStore(embeddings)
    else:
        provider = HashEmbeddingProvider(
            dim=settings.value("annotate", "hash_dim", args.hash_dim, 64, int)
        )
    return AnnotateConfig(
        measure=measure,
        aligner=aligner,
        span_rule=span_rule,
        soft=soft,
        provider=provider,
        language_table=settings.language_table(),
    )


def _jobs(args, settings: _Settings) -> int:
    jobs = settings.value("annotate", "jobs", getattr(args, "jobs", None), None, int)
    if jobs is None:
        jobs = os.cpu_count() or 1
    if jobs < 1:
        raise ValidationError(f"--jobs must be >= 1, got {jobs}")
    return jobs


def _write_rejects(rejects, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for post_id, reason, detail in rejects:
            obj = {"id": post_id, "reason": reason, "detail": detail}
            handle.write(json.dumps(obj, ensure_ascii=False) + "\n")


def cmd_filter(args, settings: _Settings) -> dict:
    posts = load_corpus(args.posts, "posts", settings.languages())
    claims = load_claims(args.claims)
    pairs = pair_claims(posts, claims)
    keywords_raw = settings.value("filter", "keywords", args.keywords, None)
    rules = FilterRules(
        keywords=(
            frozenset(k for k in keywords_raw.replace(",", " ").split() if k)
            if keywords_raw is not None
            else FilterRules().keywords
        ),
        min_words=settings.value("filter", "min_words", args.min_words, 3, int),
        max_words=settings.value("filter", "max_words", args.max_words, 700, int),
    )
    kept_posts = []
    kept_claims = []
    rejects = []
    reasons = {r.value: 0 for r in FilterReason if r is not FilterReason.OK}
    for post, claim in pairs:
        verdict = filter_sample(post, claim, rules)
        if verdict.accepted:
            kept_posts.append(post)
            kept_claims.append(claim)
        else:
            reasons[verdict.reason.value] += 1
            rejects.append((post.id, verdict.reason.value, ""))
    write_corpus(kept_posts, args.out)
    if args.out_claims:
        write_claims(kept_claims, args.out_claims)
    rejects_path = args.rejects or f"{args.out}.rejects.jsonl"
    _write_rejects(rejects, rejects_path)
    if not args.json:
        print(f"accepted {len(kept_posts)} of {len(pairs)} pairs -> {args.out}")
        for reason, count in sorted(reasons.items()):
            print(f"  rejected {reason}: {count}")
    return {
        "command": "filter",
        "total": len(pairs),
        "accepted": len(kept_posts),
        "rejected": len(rejects),
        "reasons": reasons,
    }


def cmd_split(args, settings: _Settings) -> dict:
    samples = load_corpus(args.input, "annotated", settings.languages())
    ratio = settings.value("split", "ratio", args.ratio, 0.8, float)
    seed = settings.value("split", "seed", args.seed, 13, int)
    train, dev = split_train_dev(samples, ratio=ratio, seed=seed)
    write_corpus(train, args.train)
    write_corpus(dev, args.dev)
    if not args.json:
        print(
            f"split {len(samples)} samples into {len(train)} train / {len(dev)} dev "
            f"(ratio {ratio}, seed {seed})"
        )
    return {
        "command": "split",
        "total": len(samples),
        "train": len(train),
        "dev": len(dev),
        "ratio": ratio,
        "seed": seed,
    }


def _stats_obj(stats) -> dict:
    def length(entry):
        if entry is None:
            return None
        return {"mean": entry.mean, "std": entry.std}

    return {
        lang: {
            "count": s.count,
            "post_tokens": length(s.post_tokens),
            "post_chars": length(s.post_chars),
            "span_tokens": length(s.span_tokens),
            "span_chars": length(s.span_chars),
        }
        for lang, s in stats.languages.items()
    }


def cmd_stats(args, settings: _Settings) -> dict:
    files = []
    for path in args.inputs:
        records = load_corpus(path, args.kind, settings.languages())
        if args.kind == "posts":
            samples = [AnnotatedSample(post=p, spans=()) for p in records]
        else:
            samples = records
        stats = corpus_stats(samples)
        files.append({"path": path, "total": stats.total, "languages": _stats_obj(stats)})
        if not args.json:
            _print_stats(path, stats)
    return {"command": "stats", "files": files}


def _print_stats(path, stats) -> None:
    print(f"{path}: {stats.total} samples")
    header = f"  {'lang':<6}{'count':>7}  {'post tokens':>15}  {'post chars':>15}  {'span tokens':>15}  {'span chars':>15}"
    print(header)
    for lang, s in stats.languages.items():
        def fmt(entry):
            if entry is None:
                return "-"
            return f"{entry.mean:.2f} ± {entry.std:.2f}"

        print(
            f"  {lang:<6}{s.count:>7}  {fmt(s.post_tokens):>15}  {fmt(s.post_chars):>15}  "
            f"{fmt(s.span_tokens):>15}  {fmt(s.span_chars):>15}"
        )


def cmd_annotate(args, settings: _Settings) -> dict:
    posts = load_corpus(args.posts, "posts", settings.languages())
    claims = load_claims(args.claims)
    pairs = pair_claims(posts, claims)
    cfg = _annotate_config(args, settings)
    links = None
    links_path = settings.value("annotate", "links", args.links, None)
    if cfg.aligner is Aligner.IMPORTED_LINKS:
        if not links_path:
            raise ConfigurationError("--aligner links requires --links FILE")
        links = load_links(links_path)
    samples, rejects = annotate_corpus(pairs, cfg, links=links, jobs=_jobs(args, settings))
    write_corpus(samples, args.out)
    rejects_path = args.rejects or f"{args.out}.rejects.jsonl"
    _write_rejects(rejects, rejects_path)
    if not args.json:
        print(f"annotated {len(samples)} of {len(pairs)} samples -> {args.out}")
        print(f"rejected {len(rejects)} -> {rejects_path}")
    return {
        "command": "annotate",
        "annotated": len(samples),
        "rejected": len(rejects),
        "out": args.out,
        "rejects": rejects_path,
    }


def cmd_project(args, settings: _Settings) -> dict:
    source = load_corpus(args.source, "annotated", settings.languages())
    targets = load_corpus(args.targets, "posts", settings.languages())
    source_by_id = {s.post.id: s for s in source}
    missing = [t.id for t in targets if t.id not in source_by_id]
    if missing:
        raise ValidationError(
            f"targets without source annotations: {', '.join(missing[:5])}"
        )
    pairs = []
    for target in targets:
        src = source_by_id[target.id]
        if not src.spans:
            raise ValidationError(f"source sample {src.post.id} has no span to project")
        pairs.append((target, NormalizedClaim(target.id, src.span_texts()[0])))
    cfg = _annotate_config(args, settings)
    samples, rejects = annotate_corpus(pairs, cfg, jobs=_jobs(args, settings))
    projected = [
        AnnotatedSample(post=s.post, spans=s.spans, provenance=Provenance.PROJECTED)
        for s in samples
    ]
    write_corpus(projected, args.out)
    rejects_path = args.rejects or f"{args.out}.rejects.jsonl"
    _write_rejects(rejects, rejects_path)
    if not args.json:
        print(f"projected {len(projected)} of {len(targets)} posts -> {args.out}")
        print(f"rejected {len(rejects)} -> {rejects_path}")
    return {
        "command": "project",
        "projected": len(projected),
        "rejected": len(rejects),
        "out": args.out,
        "rejects": rejects_path,
    }


def cmd_encode(args, settings: _Settings) -> dict:
    samples = load_corpus(args.input, "annotated", settings.languages())
    scheme = TagScheme(args.scheme)
    export_conll(samples, scheme, args.out)
    if not args.json:
        print(f"wrote {len(samples)} samples as {scheme.value} tags -> {args.out}")
    return {
        "command": "encode",
        "samples": len(samples),
        "scheme": scheme.value,
        "out": args.out,
    }


def cmd_eval(args, settings: _Settings) -> dict:
    languages = settings.languages()
    pred = load_corpus(args.pred, "annotated", languages)
    gold = load_corpus(args.gold, "annotated", languages)
    mode = EvalMode(settings.value("eval", "mode", args.mode, EvalMode.MICRO.value))
    unit = EvalUnit(settings.value("eval", "unit", args.unit, EvalUnit.CHAR.value))
    docs = pair_samples(pred, gold)
    if unit is EvalUnit.TOKEN:
        pred_by_id = {s.post.id: s for s in pred}
        converted = []
        for sample in gold:
            other = pred_by_id[sample.post.id]
            if other.post.text != sample.post.text:
                raise ValidationError(
                    f"{sample.post.id}: prediction text differs from gold; "
                    "token-level evaluation needs identical posts"
                )
            tokens = tokenize(sample.post.text, sample.post.language)
            converted.append(
                (
                    sample.post.id,
                    to_token_spans(other.spans, tokens),
                    to_token_spans(sample.spans, tokens),
                )
            )
        docs = converted
    result = corpus_eval(docs, mode)
    if not args.json:
        print(
            f"precision {result.precision * 100:.2f}  recall {result.recall * 100:.2f}  "
            f"f1 {result.f1 * 100:.2f}  ({len(docs)} documents, {mode.value}, {unit.value})"
        )
    return {
        "command": "eval",
        "mode": mode.value,
        "unit": unit.value,
        "documents": len(docs),
        "precision": result.precision,
        "recall": result.recall,
        "f1": result.f1,
    }


def _examples_for(args, settings: _Settings, k: int):
    if k == 0:
        return []
    train_path = settings.value("llm", "train", getattr(args, "train", None), None)
    if not train_path:
        raise ConfigurationError("--k > 0 requires --train FILE for examples")
    train = load_corpus(train_path, "annotated", settings.languages())
    seed = settings.value("llm", "seed", args.seed, 13, int)
    return pick_examples(train, k, seed)


def cmd_prompt(args, settings: _Settings) -> dict:
    posts = load_corpus(args.posts, "posts", settings.languages())
    kind = PromptKind(args.kind)
    examples = _examples_for(args, settings, args.k)
    prompts = []
    for post in posts:
        prompts.append(
            {
                "id": post.id,
                "prompt": build_prompt(
                    kind,
                    post,
                    language_name=LANGUAGE_NAMES.get(post.language, post.language),
                    examples=examples,
                ),
            }
        )
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            for item in prompts:
                handle.write(json.dumps(item, ensure_ascii=False) + "\n")
    elif not args.json:
        for item in prompts:
            print(f"=== {item['id']}")
            print(item["prompt"])
            print()
    return {"command": "prompt", "kind": kind.value, "k": args.k, "prompts": prompts}


def cmd_llm_run(args, settings: _Settings) -> dict:
    gold = load_corpus(args.gold, "annotated", settings.languages())
    kind = PromptKind(args.kind)
    model = settings.value("llm", "model", args.model, None)
    if not model:
        raise ConfigurationError("llm-run requires --model (or [llm] model in config)")
    fixture = settings.value("llm", "fixture", args.fixture, None)
    endpoint = settings.value("llm", "endpoint", args.endpoint, None)
    if fixture:
        client = FixtureChatClient.from_file(fixture)
    elif endpoint:
        client = HttpChatClient(
            endpoint,
            api_key_env=settings.value("llm", "api_key_env", None, "CLAIMSPAN_API_KEY"),
        )
    else:
        raise ConfigurationError("llm-run requires --fixture FILE or --endpoint URL")
    llm_cfg = LlmConfig(
        model=model,
        temperature=settings.value("llm", "temperature", None, 0.0, float),
        max_retries=settings.value("llm", "max_retries", args.max_retries, 3, int),
        backoff_base=settings.value("llm", "backoff", args.backoff, 0.5, float),
        cache_dir=settings.value("llm", "cache_dir", args.cache, "llm-cache"),
    )
    train = None
    if args.k > 0:
        train_path = settings.value("llm", "train", args.train, None)
        if not train_path:
            raise ConfigurationError("--k > 0 requires --train FILE for examples")
        train = load_corpus(train_path, "annotated", settings.languages())
    result = run_llm_eval(
        gold,
        kind,
        args.k,
        client,
        _annotate_config(args, settings),
        llm_cfg,
        train=train,
        seed=settings.value("llm", "seed", args.seed, 13, int),
    )
    if not args.json:
        print(
            f"model {model} kind {kind.value} k {args.k}: "
            f"precision {result.precision * 100:.2f}  recall {result.recall * 100:.2f}  "
            f"f1 {result.f1 * 100:.2f}  ({len(gold)} documents)"
        )
    return {
        "command": "llm-run",
        "model": model,
        "kind": kind.value,
        "k": args.k,
        "documents": len(gold),
        "precision": result.precision,
        "recall": result.recall,
        "f1": result.f1,
    }


_HANDLERS = {
    "filter": cmd_filter,
    "split": cmd_split,
    "stats": cmd_stats,
    "annotate": cmd_annotate,
    "project": cmd_project,
    "encode": cmd_encode,
    "eval": cmd_eval,
    "prompt": cmd_prompt,
    "llm-run": cmd_llm_run,
}


if __name__ == "__main__":
    sys.exit(main())
