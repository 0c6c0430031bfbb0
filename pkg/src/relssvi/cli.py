"""Command-line surface: ingest, split, train, grid, eval, report, compare, synth.

Every subcommand accepts --config pointing at a JSON file of option values;
explicit flags override the file, and the merged configuration is echoed
into output metadata so artifacts are reproducible from themselves.  Exit
codes: 0 success, 2 configuration error, 3 data error, 4 numerical abort.
"""

import argparse
import csv
import io
import itertools
import json
import logging
import os
import sys

from . import evaluation, gibbs, metrics, ssvi, synth
from .corpus import corpus_stats, load_corpus, split_corpus, write_corpus
from .errors import ConfigError, DataError, NumericalError
from .fileio import atomic_write_text
from .hyperopt import HyperOptConfig
from .model import LearningSchedule, VariationalModel

log = logging.getLogger(__name__)

# Defaults live here (not in argparse) so that config files and flags can be
# merged with a clear precedence: defaults < config file < explicit flags.
TRAIN_DEFAULTS = {
    "trainer": "ssvi",
    "R": 500,
    "a": 0.01,
    "b": 10.0,
    "c": 0.51,
    "S": 256,
    "sweeps": 25,
    "burnin": 5,
    "iterations": 100,
    "seed": 0,
    "eta0": 0.1,
    "alpha0": 0.1,
    "feature_set": None,
    "workers": 1,
    "optimize_eta": False,
    "optimize_alpha": False,
    "hyper_floor": 1e-5,
    "eval_corpus": None,
    "eval_every": 0,
    "eval_sweeps": 50,
    "eval_burnin": 10,
}


def _load_config_file(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path}: malformed JSON ({exc.msg})") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return obj


def _merge_options(args, defaults):
    """defaults < config file < explicit flags; rejects unknown config keys."""
    merged = dict(defaults)
    passed = {k: v for k, v in vars(args).items() if k not in ("handler", "config")}
    config_path = getattr(args, "config", None)
    if config_path:
        file_values = _load_config_file(config_path)
        unknown = sorted(set(file_values) - set(defaults))
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        merged.update(file_values)
    merged.update(passed)  # argparse SUPPRESS keeps unset flags out of args
    return merged


def _echo(merged):
    return {k: merged[k] for k in sorted(merged)}


def _print_json(obj):
    print(json.dumps(obj, ensure_ascii=False, indent=1))


def _metrics_path(out_path):
    base = out_path[: -len(".json")] if out_path.endswith(".json") else out_path
    return base + ".metrics.csv"


def _load_pair(model_path, train_corpus_path, eval_corpus_path=None):
    """Load a model plus the corpora it can be applied to.

    The model file carries only a vocabulary hash, so the training corpus is
    re-ingested to rebuild the vocabulary (hash-checked), and any further
    corpus is loaded under that frozen vocabulary.
    """
    model = VariationalModel.load(model_path)
    train = load_corpus(train_corpus_path, feature_set=model.feature_types)
    if model.vocab_hash and train.vocab.content_hash() != model.vocab_hash:
        raise DataError(
            f"{train_corpus_path} does not reproduce the model's vocabulary "
            "(is this the corpus the model was trained on?)"
        )
    train.vocab.freeze()
    other = None
    if eval_corpus_path is not None:
        other = load_corpus(eval_corpus_path, freeze_vocab=train.vocab)
    return model, train, other


# ---------------------------------------------------------------- subcommands


def cmd_ingest(args):
    merged = _merge_options(args, {"feature_set": None})
    corpus = load_corpus(args.input, feature_set=merged["feature_set"])
    write_corpus(corpus, args.out)
    _print_json(corpus_stats(corpus).as_dict())
    return 0


def cmd_split(args):
    merged = _merge_options(args, {"eval_fraction": 0.1, "seed": 0, "feature_set": None})
    corpus = load_corpus(args.corpus, feature_set=merged["feature_set"])
    train, evl = split_corpus(corpus, merged["eval_fraction"], merged["seed"])
    write_corpus(train, args.train_out)
    write_corpus(evl, args.eval_out)
    _print_json({"train": corpus_stats(train).as_dict(), "eval": corpus_stats(evl).as_dict()})
    return 0


def _run_training_cell(corpus, eval_c, merged, out_path):
    """Shared by train and grid: run one trainer configuration to files."""
    if merged["R"] < 1:
        raise ConfigError("R must be ≥ 1")
    mlog = metrics.MetricsLog()
    metadata = {
        "trainer": merged["trainer"],
        "config": _echo({k: v for k, v in merged.items() if k != "out"}),
        "perplexity_protocol": {
            "sweeps": merged["eval_sweeps"],
            "burnin": merged["eval_burnin"],
        },
    }
    if merged["trainer"] == "ssvi":
        schedule = LearningSchedule(merged["a"], merged["b"], merged["c"])
        config = ssvi.SsviConfig(
            S=merged["S"],
            S_prime=merged["sweeps"],
            burnin=merged["burnin"],
            T=merged["iterations"],
            schedule=schedule,
            seed=merged["seed"],
            workers=merged["workers"],
        )
        hyper = None
        if merged["optimize_eta"] or merged["optimize_alpha"]:
            hyper = HyperOptConfig(
                optimize_eta=merged["optimize_eta"],
                optimize_alpha=merged["optimize_alpha"],
                floor=merged["hyper_floor"],
            )
        model = ssvi.train(
            corpus,
            config,
            R=merged["R"],
            eta0=merged["eta0"],
            alpha0=merged["alpha0"],
            hyper=hyper,
            metrics=mlog,
            eval_corpus=eval_c,
            eval_every=merged["eval_every"],
            eval_sweeps=merged["eval_sweeps"],
            eval_burnin=merged["eval_burnin"],
        )
        model.vocab_hash = corpus.vocab.content_hash()
    elif merged["trainer"] == "gibbs":
        result = gibbs.run_gibbs(
            corpus,
            R=merged["R"],
            eta=merged["eta0"],
            alpha=merged["alpha0"],
            sweeps=merged["iterations"],
            seed=merged["seed"],
            metrics=mlog,
            eval_corpus=eval_c,
            eval_every=merged["eval_every"],
            eval_sweeps=merged["eval_sweeps"],
            eval_burnin=merged["eval_burnin"],
        )
        model = result.state.to_model(vocab_hash=corpus.vocab.content_hash())
        model.t = result.sweeps_run
    else:
        raise ConfigError(f"unknown trainer {merged['trainer']!r}")
    model.metadata = metadata
    model.save(out_path)
    mlog.write(_metrics_path(out_path))
    return model, mlog


def cmd_train(args):
    merged = _merge_options(args, TRAIN_DEFAULTS)
    corpus = load_corpus(args.corpus, feature_set=merged["feature_set"])
    corpus.vocab.freeze()
    eval_c = None
    if merged["eval_corpus"]:
        eval_c = load_corpus(merged["eval_corpus"], freeze_vocab=corpus.vocab)
    _run_training_cell(corpus, eval_c, merged, args.out)
    _print_json({"model": args.out, "metrics": _metrics_path(args.out)})
    return 0


def _parse_list(value, kind):
    try:
        if isinstance(value, (list, tuple)):
            return [kind(part) for part in value]
        return [kind(part) for part in str(value).split(",") if part != ""]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad list value {value!r}") from exc


def cmd_grid(args):
    defaults = dict(TRAIN_DEFAULTS)
    defaults.update({"R": "500", "a": "0.01", "b": "10.0"})
    merged = _merge_options(args, defaults)
    corpus = load_corpus(args.corpus, feature_set=merged["feature_set"])
    corpus.vocab.freeze()
    eval_c = None
    if merged["eval_corpus"]:
        eval_c = load_corpus(merged["eval_corpus"], freeze_vocab=corpus.vocab)
    rs = _parse_list(merged["R"], int)
    as_ = _parse_list(merged["a"], float)
    bs = _parse_list(merged["b"], float)
    if not rs or not as_ or not bs:
        raise ConfigError("grid lists for R, a, b must be non-empty")
    os.makedirs(args.out_dir, exist_ok=True)
    rows = []
    for R, a, b in itertools.product(rs, as_, bs):
        cell = dict(merged)
        cell.update({"R": R, "a": a, "b": b})
        name = f"model-R{R}-a{a}-b{b}.json"
        out_path = str(args.out_dir).rstrip("/") + "/" + name
        row = {"R": R, "a": a, "b": b, "model": name, "status": "ok",
               "final_elbo_proxy": None, "eval_perplexity": None}
        try:
            model, mlog = _run_training_cell(corpus, eval_c, cell, out_path)
            elbos = [r.get("elbo_proxy") for r in mlog.rows if r.get("elbo_proxy") is not None]
            row["final_elbo_proxy"] = elbos[-1] if elbos else None
            if eval_c is not None:
                row["eval_perplexity"] = evaluation.perplexity(
                    model, eval_c,
                    sweeps=cell["eval_sweeps"], burnin=cell["eval_burnin"], seed=cell["seed"],
                )
        except (ConfigError, DataError, NumericalError) as exc:
            row["status"] = f"error: {exc}"
            log.warning("grid cell R=%s a=%s b=%s failed: %s", R, a, b, exc)
        rows.append(row)

    def rank_key(row):
        perp = row["eval_perplexity"]
        elbo = row["final_elbo_proxy"]
        return (
            perp if perp is not None else float("inf"),
            -(elbo if elbo is not None else float("-inf")),
        )

    rows.sort(key=rank_key)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    cols = ["R", "a", "b", "model", "status", "final_elbo_proxy", "eval_perplexity"]
    writer.writerow(cols)
    for row in rows:
        writer.writerow(["" if row[c] is None else row[c] for c in cols])
    summary_path = str(args.out_dir).rstrip("/") + "/summary.csv"
    atomic_write_text(summary_path, buf.getvalue())
    _print_json({"cells": len(rows), "summary": summary_path})
    return 0


def cmd_eval(args):
    merged = _merge_options(args, {"sweeps": 50, "burnin": 10, "seed": 0})
    model, _, eval_c = _load_pair(args.model, args.train_corpus, args.corpus)
    value = evaluation.perplexity(
        model, eval_c, sweeps=merged["sweeps"], burnin=merged["burnin"], seed=merged["seed"]
    )
    _print_json({"perplexity": value})
    return 0


def cmd_report(args):
    merged = _merge_options(args, {"top_k": 10, "n_samples": 50, "burnin": 10, "seed": 0})
    corpus_path = args.corpus or args.train_corpus
    model, train, target = _load_pair(args.model, args.train_corpus, corpus_path)
    report = evaluation.rank_sentences(
        model,
        target,
        n_samples=merged["n_samples"],
        top_k=merged["top_k"],
        burnin=merged["burnin"],
        seed=merged["seed"],
    )
    report.save(args.out)
    _print_json({"report": args.out, "relations": report.R})
    return 0


def cmd_compare(args):
    if not args.ssvi_log and not args.gibbs_log:
        raise ConfigError("at least one metrics log is required")
    ssvi_rows = metrics.read_metrics(args.ssvi_log) if args.ssvi_log else []
    gibbs_rows = metrics.read_metrics(args.gibbs_log) if args.gibbs_log else []
    rows, warnings = evaluation.comparison_curves(ssvi_rows, gibbs_rows)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["document_sweeps", "ssvi_perplexity", "gibbs_perplexity"])
    for row in rows:
        writer.writerow(
            [
                row["document_sweeps"],
                "" if row["ssvi_perplexity"] is None else repr(row["ssvi_perplexity"]),
                "" if row["gibbs_perplexity"] is None else repr(row["gibbs_perplexity"]),
            ]
        )
    atomic_write_text(args.out, buf.getvalue())
    _print_json({"curves": args.out, "rows": len(rows), "warnings": warnings})
    return 0


def cmd_synth(args):
    defaults = {
        "D": 500,
        "R": 5,
        "seed": 0,
        "values_per_type": 25,
        "sentences_min": 2,
        "sentences_max": 6,
        "tokens_per_type": 1,
        "within_block": 0.98,
        "alpha": 0.3,
        "feature_set": "ent_left,ent_right,ent_type",
    }
    merged = _merge_options(args, defaults)
    planted = synth.generate_planted(
        D=merged["D"],
        R=merged["R"],
        feature_types=merged["feature_set"],
        values_per_type=merged["values_per_type"],
        sentences_per_doc=(merged["sentences_min"], merged["sentences_max"]),
        tokens_per_type=merged["tokens_per_type"],
        within_block=merged["within_block"],
        alpha=merged["alpha"],
        seed=merged["seed"],
    )
    os.makedirs(args.out_dir, exist_ok=True)
    out_dir = str(args.out_dir).rstrip("/")
    corpus_path = out_dir + "/corpus.jsonl"
    labels_path = out_dir + "/assignments.json"
    model_path = out_dir + "/planted_model.json"
    write_corpus(planted.corpus, corpus_path)
    synth.write_assignments(planted, labels_path)
    truth = synth.planted_model(planted)
    truth.metadata = {"planted": True, "config": _echo(merged)}
    truth.save(model_path)
    stats = corpus_stats(planted.corpus).as_dict()
    _print_json({"corpus": corpus_path, "assignments": labels_path, "planted_model": model_path,
                 "documents": stats["documents"], "sentences": stats["sentences"]})
    return 0


# ---------------------------------------------------------------- wiring


def build_parser():
    parser = argparse.ArgumentParser(
        prog="relssvi",
        description="Sparse stochastic variational inference for sentence-level relation clustering.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    p = sub.add_parser("ingest", help="validate a corpus file and write its canonical form")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--feature-set", dest="feature_set", default=S)
    p.add_argument("--config", default=None)
    p.set_defaults(handler=cmd_ingest)

    p = sub.add_parser("split", help="split a corpus into train and eval parts")
    p.add_argument("--corpus", required=True)
    p.add_argument("--train-out", dest="train_out", required=True)
    p.add_argument("--eval-out", dest="eval_out", required=True)
    p.add_argument("--eval-fraction", dest="eval_fraction", type=float, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--feature-set", dest="feature_set", default=S)
    p.add_argument("--config", default=None)
    p.set_defaults(handler=cmd_split)

    p = sub.add_parser("train", help="train a model (SSVI or collapsed Gibbs)")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trainer", choices=("ssvi", "gibbs"), default=S)
    p.add_argument("-R", type=int, default=S, help="number of relations")
    p.add_argument("-a", type=float, default=S, help="learning-rate scale a")
    p.add_argument("-b", type=float, default=S, help="learning-rate offset b")
    p.add_argument("-c", type=float, default=S, help="learning-rate exponent c in (1/2, 1]")
    p.add_argument("-S", type=int, default=S, help="minibatch size")
    p.add_argument("--sweeps", type=int, default=S, help="estimation sweeps S' per document chain")
    p.add_argument("--burnin", type=int, default=S, help="burn-in sweeps per document chain")
    p.add_argument("-T", "--iterations", dest="iterations", type=int, default=S,
                   help="SSVI iterations / Gibbs sweeps")
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--eta0", type=float, default=S, help="initial (or fixed) eta")
    p.add_argument("--alpha0", type=float, default=S, help="initial (or fixed) alpha")
    p.add_argument("--feature-set", dest="feature_set", default=S)
    p.add_argument("--workers", type=int, default=S)
    p.add_argument("--optimize-eta", dest="optimize_eta", action="store_true", default=S)
    p.add_argument("--optimize-alpha", dest="optimize_alpha", action="store_true", default=S)
    p.add_argument("--hyper-floor", dest="hyper_floor", type=float, default=S)
    p.add_argument("--eval-corpus", dest="eval_corpus", default=S)
    p.add_argument("--eval-every", dest="eval_every", type=int, default=S)
    p.add_argument("--eval-sweeps", dest="eval_sweeps", type=int, default=S)
    p.add_argument("--eval-burnin", dest="eval_burnin", type=int, default=S)
    p.add_argument("--config", default=None)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("grid", help="train over a grid of R, a, b values")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("-R", default=S, help="comma-separated R values")
    p.add_argument("-a", default=S, help="comma-separated a values")
    p.add_argument("-b", default=S, help="comma-separated b values")
    p.add_argument("-c", type=float, default=S)
    p.add_argument("-S", type=int, default=S)
    p.add_argument("--sweeps", type=int, default=S)
    p.add_argument("--burnin", type=int, default=S)
    p.add_argument("-T", "--iterations", dest="iterations", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--eta0", type=float, default=S)
    p.add_argument("--alpha0", type=float, default=S)
    p.add_argument("--feature-set", dest="feature_set", default=S)
    p.add_argument("--workers", type=int, default=S)
    p.add_argument("--eval-corpus", dest="eval_corpus", default=S)
    p.add_argument("--eval-every", dest="eval_every", type=int, default=S)
    p.add_argument("--eval-sweeps", dest="eval_sweeps", type=int, default=S)
    p.add_argument("--eval-burnin", dest="eval_burnin", type=int, default=S)
    p.add_argument("--config", default=None)
    p.set_defaults(handler=cmd_grid)

    p = sub.add_parser("eval", help="held-out perplexity of a model")
    p.add_argument("--model", required=True)
    p.add_argument("--train-corpus", dest="train_corpus", required=True,
                   help="corpus the model was trained on (rebuilds the vocabulary)")
    p.add_argument("--corpus", required=True, help="evaluation corpus")
    p.add_argument("--sweeps", type=int, default=S)
    p.add_argument("--burnin", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--config", default=None)
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("report", help="rank sentences by relation association")
    p.add_argument("--model", required=True)
    p.add_argument("--train-corpus", dest="train_corpus", required=True)
    p.add_argument("--corpus", default=None, help="corpus to rank (default: the training corpus)")
    p.add_argument("--out", required=True)
    p.add_argument("--top-k", dest="top_k", type=int, default=S)
    p.add_argument("--n-samples", dest="n_samples", type=int, default=S)
    p.add_argument("--burnin", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--config", default=None)
    p.set_defaults(handler=cmd_report)

    p = sub.add_parser("compare", help="align SSVI and Gibbs perplexity curves")
    p.add_argument("--ssvi", dest="ssvi_log", default=None)
    p.add_argument("--gibbs", dest="gibbs_log", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_compare)

    p = sub.add_parser("synth", help="generate a planted-structure corpus")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("-D", type=int, default=S)
    p.add_argument("-R", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--values-per-type", dest="values_per_type", type=int, default=S)
    p.add_argument("--sentences-min", dest="sentences_min", type=int, default=S)
    p.add_argument("--sentences-max", dest="sentences_max", type=int, default=S)
    p.add_argument("--tokens-per-type", dest="tokens_per_type", type=int, default=S)
    p.add_argument("--within-block", dest="within_block", type=float, default=S)
    p.add_argument("--alpha", type=float, default=S)
    p.add_argument("--feature-set", dest="feature_set", default=S)
    p.add_argument("--config", default=None)
    p.set_defaults(handler=cmd_synth)

    return parser


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (NumericalError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
