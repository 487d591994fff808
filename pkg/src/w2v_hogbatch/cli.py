"""Command line entry point: ``w2v-hogbatch {train,vocab,bench,eval}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

from .bench import run_bench
from .config import DTYPES, GEMM_PROVIDERS, TRAINERS, TrainingConfig
from .corpus import MAX_SENTENCE_LENGTH, CorpusReader, build_vocab, read_corpus
from .distsim import run_distributed
from .evaluation import Embeddings, evaluate, load_analogies, load_similarity_pairs
from .model import VectorFormatError, init_model, load_vectors, save_vectors
from .sampling import Rng
from .training import Trainer, table_for

log = logging.getLogger("w2v_hogbatch")


def _size(text: str) -> int:
    units = {"k": 10**3, "m": 10**6, "g": 10**9}
    text = text.strip().lower().rstrip("b")
    if text and text[-1] in units:
        return int(float(text[:-1]) * units[text[-1]])
    return int(text)


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_training_flags(p: argparse.ArgumentParser) -> None:
    d = TrainingConfig()
    g = p.add_argument_group("training")
    g.add_argument("--train", required=True, help="whitespace-tokenized corpus, one sentence per line")
    g.add_argument("--dim", "--size", type=int, default=d.dim, help="embedding dimension")
    g.add_argument("--negative", type=int, default=d.negative, help="negatives per target")
    g.add_argument("--window", type=int, default=d.window, help="maximum half-window")
    g.add_argument("--sample", type=float, default=d.sample, help="subsampling threshold, 0 disables")
    g.add_argument("--min-count", type=int, default=d.min_count)
    g.add_argument("--alpha", type=float, default=d.alpha, help="initial learning rate")
    g.add_argument("--iter", type=int, default=d.iterations, dest="iterations", help="epochs")
    g.add_argument("--threads", type=int, default=d.threads)
    g.add_argument("--trainer", choices=TRAINERS, default=d.trainer)
    g.add_argument("--batch-windows", type=int, default=d.batch_windows,
                   help="consecutive positions stacked into one batched step")
    g.add_argument("--gemm", choices=GEMM_PROVIDERS, default=d.gemm)
    g.add_argument("--dtype", choices=tuple(DTYPES), default=d.dtype)
    g.add_argument("--workers", type=int, default=d.workers, help="simulated data-parallel workers")
    g.add_argument("--sync-period-words", type=int, default=d.sync_period_words,
                   help="average replicas after each worker processes this many words (0: never)")
    g.add_argument("--sync-every-epoch", action="store_true")
    g.add_argument("--seed", type=int, default=d.seed, help="overridden by $W2V_SEED")
    g.add_argument("--sigmoid-mode", choices=("exact", "table"), default=d.sigmoid_mode)
    g.add_argument("--negative-power", type=float, default=d.negative_power)
    g.add_argument("--table-size", type=int, default=d.table_size)
    g.add_argument("--allow-target-negative", action="store_true",
                   help="let a sampled negative equal the target word")
    g.add_argument("--max-sentence-length", type=int, default=MAX_SENTENCE_LENGTH)


def config_from_args(args: argparse.Namespace) -> TrainingConfig:
    seed = int(os.environ["W2V_SEED"]) if os.environ.get("W2V_SEED") else args.seed
    return TrainingConfig(
        dim=args.dim, negative=args.negative, window=args.window, sample=args.sample,
        min_count=args.min_count, alpha=args.alpha, iterations=args.iterations,
        threads=args.threads, trainer=args.trainer, batch_windows=args.batch_windows,
        workers=args.workers, sync_period_words=args.sync_period_words,
        sync_every_epoch=args.sync_every_epoch, seed=seed, sigmoid_mode=args.sigmoid_mode,
        negative_power=args.negative_power, table_size=args.table_size,
        allow_target_negative=args.allow_target_negative,
        max_sentence_length=args.max_sentence_length, gemm=args.gemm, dtype=args.dtype,
        binary_output=bool(getattr(args, "binary", 1)),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="w2v-hogbatch", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train vectors and print a JSON report")
    _add_training_flags(p)
    p.add_argument("--output", required=True, help="vector file to write")
    p.add_argument("--binary", type=int, choices=(0, 1), default=1)
    p.add_argument("--save-vocab", help="also write the vocabulary here")

    p = sub.add_parser("vocab", help="count a corpus and write 'token count' lines")
    p.add_argument("--train", required=True)
    p.add_argument("--min-count", type=int, default=TrainingConfig.min_count)
    p.add_argument("--output", required=True)

    p = sub.add_parser("bench", help="words/sec of both trainers across thread counts")
    _add_training_flags(p)
    p.add_argument("--threads-list", type=_int_list, default=[1, 2, 4, 8])
    p.add_argument("--max-bytes", type=_size, default=_size("100M"), help="corpus prefix cap")
    p.add_argument("--csv", help="write records as CSV")
    p.add_argument("--plot", help="write a throughput-vs-threads chart (.png or .svg)")

    p = sub.add_parser("eval", help="word similarity and analogy scores as JSON")
    p.add_argument("--vectors", required=True)
    p.add_argument("--similarity", help="word-pair file, e.g. WS-353")
    p.add_argument("--analogy", help="questions-words.txt style file")
    p.add_argument("--top-vocab", type=int, default=30_000)
    p.add_argument("--case-sensitive", action="store_true")
    return parser


def _check_readable(parser, path):
    if not os.path.isfile(path):
        parser.error(f"corpus not found: {path}")


def cmd_train(args, parser) -> int:
    _check_readable(parser, args.train)
    config = config_from_args(args)
    corpus = read_corpus(args.train, config.min_count, config.max_sentence_length)
    log.info("vocabulary %d words, %d training words", len(corpus.vocab), corpus.n_words)
    if args.save_vocab:
        corpus.vocab.save(args.save_vocab)
    table = table_for(corpus, config)
    model = init_model(len(corpus.vocab), config.dim, Rng(config.seed), config.np_dtype)
    if config.workers > 1:
        result = run_distributed(corpus, config, model=model, table=table)
        report = result.combined_report()
    else:
        report = Trainer(config.trainer, model, corpus, config, table).run()
    save_vectors(model, corpus.vocab, args.output, binary=config.binary_output)
    print(report.to_json())
    return 1 if report.error else 0


def cmd_vocab(args, parser) -> int:
    _check_readable(parser, args.train)
    vocab = build_vocab(CorpusReader(args.train).tokens(), args.min_count)
    vocab.save(args.output)
    print(json.dumps({"vocab_size": len(vocab), "total_words": vocab.total_words}))
    return 0


def cmd_bench(args, parser) -> int:
    _check_readable(parser, args.train)
    config = config_from_args(args)
    corpus = read_corpus(args.train, config.min_count, config.max_sentence_length, max_bytes=args.max_bytes)
    report = run_bench(corpus, config, args.threads_list)
    if args.csv:
        report.write_csv(args.csv)
    if args.plot:
        report.plot(args.plot)
    print(report.summary(), file=sys.stderr)
    print(json.dumps(report.to_dict()))
    return 0


def cmd_eval(args, parser) -> int:
    tokens, vectors = load_vectors(args.vectors)
    emb = Embeddings(tokens, vectors, case_insensitive=not args.case_sensitive)
    sim = load_similarity_pairs(args.similarity) if args.similarity else None
    ana = load_analogies(args.analogy) if args.analogy else None
    print(json.dumps(evaluate(emb, sim, ana, args.top_vocab)))
    return 0


COMMANDS = {"train": cmd_train, "vocab": cmd_vocab, "bench": cmd_bench, "eval": cmd_eval}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args, parser)
    except (OSError, ValueError, VectorFormatError, MemoryError) as exc:
        print(f"w2v-hogbatch {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
