"""Command line for the quadruple-extraction pipeline.

Subcommands map one-to-one onto the library stages: corpus statistics,
vocabulary curation, latent-category training and inference, end-to-end
training, constrained decoding, evaluation, and trie inspection.  A plain
INI config file can seed any option; explicit flags win.  Every run logs
the resolved configuration's hash and the seed in play so an artifact can
be traced back to the exact invocation that produced it.

Exit codes: 0 success, 1 usage, 2 data or config error, 3 numeric failure.
Set QUADGEN_LOG (DEBUG/INFO/WARNING/ERROR) to control stderr verbosity.
"""

import argparse
import configparser
import csv
import hashlib
import logging
import os
import sys
from dataclasses import fields as dataclass_fields

import numpy as np

from .cbow import (
    build_cbow_vocab,
    featurize_corpus,
    load_cbow_vocab,
    load_wordlist,
    save_cbow_vocab,
)
from .decode import (
    ConfigError,
    GrammarError,
    OracleScorer,
    QuadrupleGrammar,
    RandomScorer,
    build_vocabulary,
    constrained_beam_decode,
    constrained_greedy_decode,
    unconstrained_greedy_decode,
)
from .evaluation import (
    evaluate_by_subset,
    format_report,
    load_linearized_quads,
    write_csv,
)
from .fusion import FusionConfig, decode_samples, load_model, save_model, train_model
from .lcd import (
    infer_lcd_batch,
    init_lcd_params,
    load_lcd_params,
    save_lcd_params,
    train_lcd,
)
from .linearize import BOS, EOS, LinearizeError, ParseError, linearize, to_line
from .resources import data_path
from .schema import SchemaError, dataset_stats, format_stats_table, ingest_acos_file, load_schema
from .trie import TrieError, build_category_trie, build_sentiment_trie

log = logging.getLogger("quadgen")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

_DATA_ERRORS = (
    OSError,
    SchemaError,
    ParseError,
    LinearizeError,
    TrieError,
    ConfigError,
    GrammarError,
    ValueError,
)


class NumericFailure(RuntimeError):
    """Raised when training diverges or produces non-finite values."""


def _setup_logging():
    level_name = os.environ.get("QUADGEN_LOG", "WARNING").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )


def _read_config(path, section):
    """Options from one INI section, raw strings keyed by option name."""
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)
    if not parser.has_section(section):
        return {}
    return dict(parser.items(section))


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _coerce(raw, like):
    if isinstance(like, bool):
        lowered = raw.strip().lower()
        if lowered in _TRUE:
            return True
        if lowered in _FALSE:
            return False
        raise ConfigError(f"expected a boolean, got {raw!r}")
    if isinstance(like, int):
        return int(raw)
    if isinstance(like, float):
        return float(raw)
    return raw


def _resolve_options(args, defaults):
    """Final option values: flag if given, else config entry, else default.

    `defaults` maps option name to its default; config entries are coerced
    to the default's type so INI files and flags agree.
    """
    config = {}
    if getattr(args, "config", None):
        config = _read_config(args.config, "quadgen")
    resolved = {}
    for name, default in defaults.items():
        flag_value = getattr(args, name, None)
        if flag_value is not None:
            resolved[name] = flag_value
        elif name in config:
            resolved[name] = _coerce(config[name], default)
        else:
            resolved[name] = default
    unknown = set(config) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown config options: {sorted(unknown)}")
    return resolved


def _config_hash(resolved):
    canon = "\n".join(f"{k}={resolved[k]!r}" for k in sorted(resolved))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def _log_run(command, resolved, seed):
    log.info("command=%s config=%s seed=%s", command, _config_hash(resolved), seed)


def _ingest(path, schema=None):
    result = ingest_acos_file(path, schema=schema)
    for problem in result.problems:
        log.warning("%s line %d: %s", path, problem.line_no, problem.message)
    if result.problems:
        raise SchemaError(
            f"{path}: {len(result.problems)} malformed line(s); see warnings"
        )
    return result.samples


def _wordlists(args):
    stop_path = args.stopwords or data_path("stopwords.txt")
    senti_path = args.sentiment_words or data_path("sentiment_words.txt")
    return load_wordlist(stop_path), load_wordlist(senti_path)


# ---------------------------------------------------------------- commands


def _cmd_stats(args):
    splits = {}
    for split in ("train", "dev", "test"):
        path = getattr(args, split)
        if path:
            splits[split] = _ingest(path)
    if not splits:
        raise ConfigError("give at least one of --train/--dev/--test")
    _log_run("stats", {k: getattr(args, k) for k in ("train", "dev", "test")}, "-")
    stats = dataset_stats(splits)
    print(format_stats_table(stats, name=args.name))
    return EXIT_OK


def _cmd_build_vocab(args):
    stopwords, sentiment_words = _wordlists(args)
    texts = []
    for path in args.data:
        texts.extend(s.text for s in _ingest(path))
    vocab = build_cbow_vocab(texts, stopwords, sentiment_words, min_count=args.min_count)
    if not len(vocab):
        raise ConfigError("vocabulary came out empty; loosen the word lists")
    save_cbow_vocab(vocab, args.out)
    _log_run("build-vocab", vars(args), "-")
    print(f"{len(vocab)} words -> {args.out}")
    return EXIT_OK


_LCD_DEFAULTS = {
    "k": None,
    "dim": 256,
    "hidden": 256,
    "epochs": 200,
    "lr": 0.3,
    "batch_size": 25,
    "init_scale": 0.05,
    "seed": 9,
}


def _cmd_train_lcd(args):
    defaults = dict(_LCD_DEFAULTS)
    resolved = _resolve_options(args, defaults)
    if resolved["k"] is None:
        if not args.schema:
            raise ConfigError("give --k or --schema to size the latent space")
        resolved["k"] = load_schema(args.schema).k
    resolved["k"] = int(resolved["k"])
    vocab = load_cbow_vocab(args.vocab)
    texts = [s.text for s in _ingest(args.data)]
    xs = featurize_corpus(texts, vocab)
    _log_run("train-lcd", resolved, resolved["seed"])
    params = init_lcd_params(
        l=len(vocab), k=resolved["k"], dim=resolved["dim"], hidden=resolved["hidden"],
        seed=resolved["seed"], init_scale=resolved["init_scale"],
    )
    result = train_lcd(
        params, xs, epochs=resolved["epochs"], lr=resolved["lr"],
        batch_size=resolved["batch_size"], seed=resolved["seed"],
    )
    if result.diverged:
        raise NumericFailure(
            "training diverged (non-finite objective); lower --lr or raise --batch-size"
        )
    save_lcd_params(result.params, args.out)
    if args.history:
        with open(args.history, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "mean_neg_elbo"])
            writer.writerows((i, f"{v:.6f}") for i, v in enumerate(result.history))
    first, last = result.history[0], result.history[-1]
    print(f"epochs={resolved['epochs']} neg_elbo {first:.4f} -> {last:.4f} ({args.out})")
    return EXIT_OK


def _cmd_infer_lcd(args):
    params = load_lcd_params(args.params)
    vocab = load_cbow_vocab(args.vocab)
    texts = [s.text for s in _ingest(args.data)]
    xs = featurize_corpus(texts, vocab)
    zs, _ = infer_lcd_batch(params, xs)
    if not np.all(np.isfinite(zs)):
        raise NumericFailure("non-finite category distribution; checkpoint is unusable")
    _log_run("infer-lcd", vars(args), "-")
    out = open(args.emit_z, "w", encoding="utf-8", newline="") if args.emit_z else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow([f"z{k}" for k in range(zs.shape[1])])
        writer.writerows([f"{v:.6f}" for v in row] for row in zs)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _cmd_train(args):
    defaults = {f.name: getattr(FusionConfig, f.name) for f in dataclass_fields(FusionConfig)}
    resolved = _resolve_options(args, defaults)
    config = FusionConfig(**resolved)
    schema = load_schema(args.schema) if args.schema else load_schema(data_path("mini.schema"))
    samples = _ingest(args.data, schema=schema)
    stopwords, sentiment_words = _wordlists(args)
    _log_run("train", resolved, config.seed)
    model, history = train_model(
        samples, schema, config, stopwords=stopwords, sentiment_words=sentiment_words
    )
    if history.diverged:
        raise NumericFailure(
            "training diverged (non-finite loss); lower --lr-gen/--lr-lcd"
        )
    save_model(model, args.out)
    print(
        f"gen loss {history.gen[0]:.4f} -> {history.gen[-1]:.4f}, "
        f"lcd epochs {len(history.lcd)}, saved to {args.out}"
    )
    return EXIT_OK


def _write_lines(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for tokens in rows:
            fh.write(to_line(tokens) + "\n")


def _cmd_decode(args):
    model = None
    if args.model:
        model = load_model(args.model)
        schema = model.schema
    elif args.schema:
        schema = load_schema(args.schema)
    else:
        raise ConfigError("give --model, or --schema with --scorer oracle/random")
    if args.scorer == "model" and model is None:
        raise ConfigError("--scorer model needs --model")
    samples = _ingest(args.data, schema=schema)
    _log_run("decode", vars(args), args.seed)

    if args.scorer == "model":
        predictions = decode_samples(
            model, samples, max_len=args.max_len, beam_width=args.beam,
            constrained=not args.unconstrained, copy_restriction=args.copy_restriction,
        )
        outputs = [p.tokens for p in predictions]
    else:
        if model is not None:
            vocab = model.vocab
        else:
            vocab = build_vocabulary(schema, samples)
        grammar = QuadrupleGrammar(schema, vocab, copy_restriction=args.copy_restriction)
        outputs = []
        for sample in samples:
            if args.scorer == "oracle":
                scorer = OracleScorer(vocab, linearize(sample.gold))
            else:
                scorer = RandomScorer(vocab, seed=args.seed)
            if args.unconstrained:
                result = unconstrained_greedy_decode(scorer, max_len=args.max_len)
            elif args.beam > 1:
                result = constrained_beam_decode(
                    grammar, scorer, beam_width=args.beam, max_len=args.max_len,
                    source_tokens=sample.text,
                )
            else:
                result = constrained_greedy_decode(
                    grammar, scorer, max_len=args.max_len, source_tokens=sample.text
                )
            outputs.append(result.tokens)

    cleaned = [[t for t in tokens if t not in (BOS, EOS)] for tokens in outputs]
    _write_lines(args.out, cleaned)
    if args.emit_gold:
        _write_lines(args.emit_gold, [linearize(s.gold) for s in samples])
    print(f"{len(cleaned)} sequences -> {args.out}")
    return EXIT_OK


def _cmd_eval(args):
    schema = load_schema(args.schema)
    pred = load_linearized_quads(args.pred, schema)
    gold = load_linearized_quads(args.gold, schema)
    if len(pred) != len(gold):
        raise ConfigError(
            f"prediction file has {len(pred)} lines but gold has {len(gold)}"
        )
    _log_run("eval", vars(args), "-")
    overall, by_subset = evaluate_by_subset(zip(pred, gold))
    print(format_report(overall, by_subset))
    if args.csv:
        write_csv(args.csv, overall, by_subset)
    return EXIT_OK


def _cmd_trie_dump(args):
    schema = load_schema(args.schema) if args.schema else load_schema(data_path("mini.schema"))
    _log_run("trie-dump", vars(args), "-")
    if args.which in ("categories", "both"):
        print("categories:")
        print(build_category_trie(schema).dump())
    if args.which in ("sentiments", "both"):
        print("sentiments:")
        print(build_sentiment_trie(schema).dump())
    return EXIT_OK


# ----------------------------------------------------------------- parser


def _add_config_flag(sub):
    sub.add_argument("--config", help="INI file seeding any option; flags win")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="quadgen",
        description="Grammar-constrained extraction of sentiment quadruples",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("stats", help="dataset statistics tables")
    p.add_argument("--train")
    p.add_argument("--dev")
    p.add_argument("--test")
    p.add_argument("--name", default="dataset")
    p.set_defaults(func=_cmd_stats)

    p = subs.add_parser("build-vocab", help="curate the category bag-of-words vocabulary")
    p.add_argument("--data", nargs="+", required=True)
    p.add_argument("--stopwords")
    p.add_argument("--sentiment-words", dest="sentiment_words")
    p.add_argument("--min-count", dest="min_count", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build_vocab)

    p = subs.add_parser("train-lcd", help="train the latent category model alone")
    _add_config_flag(p)
    p.add_argument("--data", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--schema")
    p.add_argument("--k", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--init-scale", dest="init_scale", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--history", help="write per-epoch objective CSV here")
    p.set_defaults(func=_cmd_train_lcd)

    p = subs.add_parser("infer-lcd", help="per-sample category distributions")
    p.add_argument("--params", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--emit-z", dest="emit_z", help="CSV path (default: stdout)")
    p.set_defaults(func=_cmd_infer_lcd)

    p = subs.add_parser("train", help="full category-aware seq2seq training")
    _add_config_flag(p)
    p.add_argument("--data", required=True)
    p.add_argument("--schema")
    p.add_argument("--stopwords")
    p.add_argument("--sentiment-words", dest="sentiment_words")
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--dec-hidden", dest="dec_hidden", type=int)
    p.add_argument("--max-pos", dest="max_pos", type=int)
    p.add_argument("--lcd-pretrain-epochs", dest="lcd_pretrain_epochs", type=int)
    p.add_argument("--gen-epochs", dest="gen_epochs", type=int)
    p.add_argument("--lcd-epochs", dest="lcd_epochs", type=int)
    p.add_argument("--rounds", type=int)
    p.add_argument("--lr-gen", dest="lr_gen", type=float)
    p.add_argument("--lr-lcd", dest="lr_lcd", type=float)
    p.add_argument("--lcd-batch-size", dest="lcd_batch_size", type=int)
    p.add_argument("--init-scale", dest="init_scale", type=float)
    p.add_argument("--min-count", dest="min_count", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--ablate-lcd", dest="ablate_lcd", action="store_const", const=True)
    p.add_argument("--rescale-v", dest="rescale_v", action="store_const", const=True)
    p.set_defaults(func=_cmd_train)

    p = subs.add_parser("decode", help="generate quadruple sequences")
    p.add_argument("--model")
    p.add_argument("--schema")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--emit-gold", dest="emit_gold", help="also write gold sequences here")
    p.add_argument("--scorer", choices=("model", "oracle", "random"), default="model")
    p.add_argument("--beam", type=int, default=1)
    p.add_argument("--max-len", dest="max_len", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--unconstrained", action="store_true")
    p.add_argument("--copy-restriction", dest="copy_restriction", action="store_true")
    p.set_defaults(func=_cmd_decode)

    p = subs.add_parser("eval", help="exact-match scoring of linearized files")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--csv", help="also write the table as CSV here")
    p.set_defaults(func=_cmd_eval)

    p = subs.add_parser("trie-dump", help="print the constraint tries")
    p.add_argument("--schema")
    p.add_argument(
        "--which", choices=("categories", "sentiments", "both"), default="both"
    )
    p.set_defaults(func=_cmd_trie_dump)

    return parser


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except NumericFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
