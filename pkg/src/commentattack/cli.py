"""Command-line entry point.

Exit codes: 0 ok, 2 bad input, 3 model adapter failure, 4 no successful
sample, 5 id mismatch between dataset and adversarial file.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
import zlib
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import attack as atk
from .config import ConfigError, RunConfig, load_config, override
from .corpus import AdversarialSample, DatasetParseError, load_adversarial, load_dataset, save_adversarial, save_dataset
from .embed import corpus_objective, load_table, save_table, train_embeddings
from .lang import LANGS, code_subtokens, validate
from .model import AdapterError, mask_identifiers, open_adapter, save_toy, train_toy
from .model.server import echo_generate, make_tcp_server, serve_stdio
from .report import aggregate, build_report, make_row, write_report
from .synth import synth_corpus

logger = logging.getLogger("commentattack")

EXIT_OK, EXIT_INPUT, EXIT_ADAPTER, EXIT_EMPTY, EXIT_MISMATCH = 0, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_config(cfg: RunConfig, out: Path) -> None:
    with open(out / "run_config.json", "w", encoding="utf-8", newline="") as fh:
        fh.write(cfg.dumps())


def _dataset(path: Optional[str], lang: str, role: str = "test"):
    if not path:
        raise CliError(EXIT_INPUT, "a dataset path is required")
    try:
        return load_dataset(path, lang, role=role)
    except FileNotFoundError:
        raise CliError(EXIT_INPUT, f"dataset not found: {path}") from None
    except (OSError, DatasetParseError, ValueError) as exc:
        raise CliError(EXIT_INPUT, str(exc)) from None


def _adapter(cfg: RunConfig):
    if not cfg.adapter:
        raise CliError(EXIT_INPUT, "an adapter spec is required (--adapter)")
    try:
        return open_adapter(cfg.adapter, lang=cfg.lang, timeout_ms=cfg.timeout_ms,
                            max_in_flight=cfg.max_in_flight, toy_length=cfg.toy_length)
    except (FileNotFoundError, DatasetParseError) as exc:
        raise CliError(EXIT_INPUT, f"adapter model input: {exc}") from None
    except AdapterError as exc:
        raise CliError(EXIT_ADAPTER, str(exc)) from None
    except ValueError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from None


# ---------------------------------------------------------------- commands

def cmd_embed_train(cfg: RunConfig) -> int:
    data = _dataset(cfg.dataset, cfg.lang, role="train")
    corpus = [code_subtokens(s.code, s.lang) for s in data]
    try:
        table = train_embeddings(corpus, cfg.embed)
    except ValueError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from None
    out = _out_dir(cfg)
    save_table(table, out / "embeddings.txt")
    _write_config(cfg, out)
    objective = corpus_objective(table, corpus, cfg.embed.negatives, cfg.embed.seed)
    print(f"vocab size {len(table.vocab)}")
    print(f"final objective {objective:.6f}")
    return EXIT_OK


def _vocabulary(cfg: RunConfig, samples) -> List[str]:
    pool = list(samples)
    for path in cfg.vocab_from:
        pool.extend(_dataset(path, cfg.lang, role="train"))
    if cfg.vocab == "raw":
        return atk.raw_vocabulary(pool)
    if cfg.vocab != "declared":
        raise CliError(EXIT_INPUT, f"vocab must be 'declared' or 'raw', not {cfg.vocab!r}")
    return atk.global_vocabulary(pool)


def cmd_attack(cfg: RunConfig) -> int:
    data = _dataset(cfg.dataset, cfg.lang)
    if not data.samples:
        raise CliError(EXIT_EMPTY, "dataset has no valid samples")
    table = None
    if cfg.attack.method != "random":
        if not cfg.embeddings:
            raise CliError(EXIT_INPUT, f"--embeddings is required for method {cfg.attack.method}")
        try:
            table = load_table(cfg.embeddings)
        except (OSError, ValueError) as exc:
            raise CliError(EXIT_INPUT, f"cannot load embeddings: {exc}") from None
    vocab = _vocabulary(cfg, data.samples)
    adapter = _adapter(cfg)
    try:
        jobs = max(1, min(cfg.jobs, cfg.max_in_flight))
        results, failures = atk.attack_many(data.samples, adapter, cfg.attack, table, vocab, jobs=jobs)
    finally:
        adapter.close()
    if not results:
        raise CliError(EXIT_EMPTY, "no sample could be attacked")
    out = _out_dir(cfg)
    save_adversarial([r.adv for r in results], out / "adversarial.jsonl")
    report = build_report(results, config=cfg.to_json(), failed=[f.sample_id for f in failures])
    write_report(report, out)
    _write_config(cfg, out)
    print(f"attacked {len(results)} sample(s), {len(failures)} failed; "
          f"r_d {report.r_d:.4f} v_r {report.v_r:.4f} s_r {report.s_r:.4f}")
    return EXIT_OK


def cmd_mask(cfg: RunConfig) -> int:
    data = _dataset(cfg.dataset, cfg.lang)
    masked = []
    for s in data:
        rng = np.random.default_rng([cfg.train.seed, zlib.crc32(s.id.encode("utf-8"))])
        masked.append(type(s)(s.id, mask_identifiers(s.code, cfg.train.count_masked, rng, s.lang), s.comment, s.lang))
    out = _out_dir(cfg)
    save_dataset(masked, out / "masked.jsonl")
    _write_config(cfg, out)
    print(f"masked {len(masked)} sample(s)")
    return EXIT_OK


def cmd_train_toy(cfg: RunConfig, masked: bool) -> int:
    data = _dataset(cfg.dataset, cfg.lang, role="train")
    if not data.samples:
        raise CliError(EXIT_INPUT, "dataset is empty")
    try:
        model = train_toy(data.samples, cfg.train, masked=masked)
    except ValueError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from None
    out = _out_dir(cfg)
    save_toy(model, out / "toy_model.txt")
    with open(out / "loss_curve.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "combined", "origin", "masked"])
        for row in model.history:
            writer.writerow([row["epoch"]] + [format(row[k], ".9g") for k in ("combined", "origin", "masked")])
    _write_config(cfg, out)
    first, last = model.history[0]["combined"], model.history[-1]["combined"]
    print(f"loss {first:.6f} -> {last:.6f} over {len(model.history) - 1} epoch(s)")
    return EXIT_OK


def cmd_evaluate(cfg: RunConfig) -> int:
    data = _dataset(cfg.dataset, cfg.lang)
    if not cfg.adversarial:
        raise CliError(EXIT_INPUT, "an adversarial file is required (--adversarial)")
    try:
        advs: List[AdversarialSample] = load_adversarial(cfg.adversarial)
    except FileNotFoundError:
        raise CliError(EXIT_INPUT, f"adversarial file not found: {cfg.adversarial}") from None
    except (OSError, DatasetParseError) as exc:
        raise CliError(EXIT_INPUT, str(exc)) from None
    known = {s.id: s for s in data}
    for adv in advs:
        if adv.original_id not in known:
            raise CliError(EXIT_MISMATCH, f"adversarial id {adv.original_id!r} is not in the dataset")
    if not advs:
        raise CliError(EXIT_EMPTY, "adversarial file is empty")
    adapter = _adapter(cfg)
    rows, refs, outs_b, outs_a, failed = [], [], [], [], []
    try:
        for adv in advs:
            original = known[adv.original_id]
            try:
                out_b = adapter.generate(original.code)
                out_a = adapter.generate(adv.adv_code)
            except AdapterError as exc:
                logger.error("%s: model query failed: %s", adv.original_id, exc)
                failed.append(adv.original_id)
                continue
            rows.append(make_row(original.id, original.comment, out_b, out_a, validate(adv.adv_code, cfg.lang), 2))
            refs.append(original.comment)
            outs_b.append(out_b)
            outs_a.append(out_a)
    finally:
        adapter.close()
    if not rows:
        raise CliError(EXIT_EMPTY, "no sample could be evaluated")
    report = aggregate(rows, refs, outs_b, outs_a, failed, cfg.to_json())
    out = _out_dir(cfg)
    write_report(report, out)
    _write_config(cfg, out)
    print(f"evaluated {len(rows)} sample(s); r_d {report.r_d:.4f} v_r {report.v_r:.4f} s_r {report.s_r:.4f}")
    return EXIT_OK


def cmd_synth(cfg: RunConfig, n: int, seed: int, prefix: str) -> int:
    out = _out_dir(cfg)
    save_dataset(synth_corpus(n, cfg.lang, seed, prefix), out / f"synth_{cfg.lang}.jsonl")
    print(f"wrote {n} {cfg.lang} sample(s)")
    return EXIT_OK


def cmd_serve(cfg: RunConfig, port: Optional[int]) -> int:
    if cfg.adapter in (None, "builtin:echo"):
        fn = echo_generate
    elif cfg.adapter.startswith("builtin:"):
        fn = _adapter(cfg).generate
    else:
        raise CliError(EXIT_INPUT, "serve needs a builtin:... model spec")
    if port is None:
        serve_stdio(fn)
        return EXIT_OK
    server = make_tcp_server(fn, "127.0.0.1", port)
    print(f"listening on 127.0.0.1:{server.server_address[1]}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


# ---------------------------------------------------------------- argument parsing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="commentattack",
                                     description="Identifier-substitution robustness testing for code comment models.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, dataset=True):
        p.add_argument("--config", help="JSON run config; flags override it")
        p.add_argument("--lang", choices=LANGS)
        p.add_argument("--out", help="output directory")
        if dataset:
            p.add_argument("--dataset", help="JSONL code-comment dataset")

    def adapter_flags(p):
        p.add_argument("--adapter", help="exec:<cmd> | tcp:<host>:<port> | builtin:surrogate:<train.jsonl> | "
                                         "builtin:toy:<model> | builtin:echo")
        p.add_argument("--timeout-ms", type=int)
        p.add_argument("--max-in-flight", type=int)
        p.add_argument("--toy-length", type=int)

    p = sub.add_parser("embed-train", help="train skip-gram subtoken embeddings")
    common(p)
    p.add_argument("--dim", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--negatives", type=int)
    p.add_argument("--min-count", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("attack", help="generate adversarial examples and a robustness report")
    common(p)
    adapter_flags(p)
    p.add_argument("--embeddings")
    p.add_argument("--method", choices=atk.METHODS)
    p.add_argument("--k", type=int)
    p.add_argument("--max", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--mh-iterations", type=int)
    p.add_argument("--mh-temperature", type=float)
    p.add_argument("--vocab", choices=("declared", "raw"),
                   help="replacement pool: declared identifiers (default) or every identifier/keyword token")
    p.add_argument("--vocab-from", action="append", help="extra dataset(s) contributing to the vocabulary")
    p.add_argument("--jobs", type=int)

    p = sub.add_parser("mask", help="replace random identifiers with <unk>")
    common(p)
    p.add_argument("--count-masked", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("train-toy", help="train the toy comment model, optionally with masked training")
    common(p)
    p.add_argument("--masked", action="store_true")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--count-masked", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("evaluate", help="re-query a model on stored adversarial examples")
    common(p)
    adapter_flags(p)
    p.add_argument("--adversarial")

    p = sub.add_parser("synth", help="write a seeded synthetic dataset")
    common(p, dataset=False)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--prefix", default="s")

    p = sub.add_parser("serve", help="answer the line-delimited JSON protocol on stdio or TCP")
    common(p, dataset=False)
    p.add_argument("--adapter", help="builtin model to serve (default builtin:echo)")
    p.add_argument("--port", type=int, help="serve TCP on this port instead of stdio (0 = any)")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    top = {k: getattr(args, k, None) for k in ("lang", "out", "dataset", "adapter", "embeddings", "adversarial",
                                                  "vocab", "vocab_from", "timeout_ms", "max_in_flight",
                                                  "toy_length", "jobs")}
    cfg = override(cfg, None, **top)
    if args.command == "embed-train":
        cfg = override(cfg, "embed", dim=args.dim, window=args.window, epochs=args.epochs, negatives=args.negatives,
                       min_count=args.min_count, learning_rate=args.lr, batch_size=args.batch_size, seed=args.seed)
    elif args.command == "attack":
        cfg = override(cfg, "attack", method=args.method, k=args.k, max=args.max, alpha=args.alpha, beta=args.beta,
                       seed=args.seed, mh_iterations=args.mh_iterations, mh_temperature=args.mh_temperature)
    elif args.command == "mask":
        cfg = override(cfg, "train", count_masked=args.count_masked, seed=args.seed)
    elif args.command == "train-toy":
        cfg = override(cfg, "train", lam=args.lam, count_masked=args.count_masked, epochs=args.epochs,
                       learning_rate=args.lr, batch_size=args.batch_size, seed=args.seed)
    return cfg


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "embed-train":
            return cmd_embed_train(cfg)
        if args.command == "attack":
            return cmd_attack(cfg)
        if args.command == "mask":
            return cmd_mask(cfg)
        if args.command == "train-toy":
            return cmd_train_toy(cfg, args.masked)
        if args.command == "evaluate":
            return cmd_evaluate(cfg)
        if args.command == "synth":
            return cmd_synth(cfg, args.n, args.seed, args.prefix)
        return cmd_serve(cfg, args.port)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
