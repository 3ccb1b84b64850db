"""Command-line entry point: ``foci {synth,fit,rank,eval,sweep}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import data
from .data import build_user_word_matrix, read_content, read_questions
from .errors import FociError, OutOfVocabularyError
from .evaluation import (
    DEFAULT_ALPHAS,
    DEFAULT_BETAS,
    baseline_shared_foci,
    evaluate,
    model_ranker,
    random_ranker,
    sweep,
)
from .rank import SimilarityMetric, rank_answerers
from .solver import HyperParams, dump_factors, fit, load_factors
from .synthetic import SyntheticSpec, generate_synthetic

log = logging.getLogger("foci")

NETWORK_FILE = "network.tsv"
CONTENT_FILE = "content.tsv"
QUESTIONS_FILE = "questions.jsonl"
MANIFEST_FILE = "manifest.json"


def _csv_floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_hyper(p):
    d = HyperParams()
    p.add_argument("--alpha", type=float, default=d.alpha, help="content weight")
    p.add_argument("--beta", type=float, default=d.beta, help="network weight")
    p.add_argument("--gamma", type=float, default=d.gamma, help="regularization weight")
    p.add_argument("--k", type=int, default=d.k, help="number of latent foci")
    p.add_argument("--max-iters", type=int, default=d.max_iters)
    p.add_argument("--tol", type=float, default=d.tol)
    p.add_argument("--seed", type=int, default=d.seed)


def _add_instance(p, questions=True):
    p.add_argument("--network", required=True, metavar="PATH")
    p.add_argument("--content", required=True, metavar="PATH")
    if questions:
        p.add_argument("--questions", required=True, metavar="PATH")
    p.add_argument("--min-df", type=int, default=data.DEFAULT_MIN_DF)
    p.add_argument("--users", type=int, default=None, help="m+1; inferred from the files if omitted")


def _add_metric(p):
    p.add_argument(
        "--metric",
        choices=[m.value for m in SimilarityMetric],
        default=SimilarityMetric.EUCLIDEAN.value,
    )


def build_parser():
    parser = argparse.ArgumentParser(prog="foci", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a planted-foci instance")
    d = SyntheticSpec()
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--communities", type=int, default=d.communities)
    p.add_argument("--community-size", type=int, default=d.community_size)
    p.add_argument("--p-in", type=float, default=d.p_in)
    p.add_argument("--p-out", type=float, default=d.p_out)
    p.add_argument("--topic-words", type=int, default=d.topic_words)
    p.add_argument("--in-rate", type=float, default=d.in_rate)
    p.add_argument("--off-rate", type=float, default=d.off_rate)
    p.add_argument("--questions-per-topic", type=int, default=d.questions_per_topic)
    p.add_argument("--question-length", type=int, default=d.question_length)
    p.add_argument("--noise-content", action="store_true", help="topic-uninformative content")
    p.add_argument("--min-df", type=int, default=d.min_df)
    p.add_argument("--seed", type=int, default=d.seed)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit latent foci (offline step)")
    _add_instance(p, questions=False)
    _add_hyper(p)
    p.add_argument("--out", required=True, metavar="PATH", help="factor file")
    p.add_argument("--trace", metavar="PATH", help="trace JSON (default: OUT.trace.json)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("rank", help="rank answerers for each question")
    p.add_argument("--factors", required=True, metavar="PATH")
    p.add_argument("--content", required=True, metavar="PATH", help="content file the factors were fit on")
    p.add_argument("--questions", required=True, metavar="PATH")
    p.add_argument("--min-df", type=int, default=data.DEFAULT_MIN_DF)
    p.add_argument("--out", required=True, metavar="PATH")
    _add_metric(p)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("eval", help="evaluate the model and baselines")
    _add_instance(p)
    _add_hyper(p)
    _add_metric(p)
    p.add_argument("--cutoff", type=int, default=5)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--out", required=True, metavar="PATH")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="evaluate a grid of alpha/beta weights")
    _add_instance(p)
    _add_hyper(p)
    _add_metric(p)
    p.add_argument("--cutoff", type=int, default=5)
    p.add_argument("--alphas", type=_csv_floats, default=list(DEFAULT_ALPHAS))
    p.add_argument("--betas", type=_csv_floats, default=list(DEFAULT_BETAS))
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, metavar="PATH")
    p.set_defaults(func=cmd_sweep)
    return parser


def _hyper(args):
    return HyperParams(
        alpha=args.alpha,
        beta=args.beta,
        gamma=args.gamma,
        k=args.k,
        max_iters=args.max_iters,
        tol=args.tol,
        seed=args.seed,
    )


def _instance(args):
    return data.load_instance(
        args.network, args.content, getattr(args, "questions", None), args.min_df, args.users
    )


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fp:
        fp.write(text)


def _write_json(path, obj):
    _write_text(path, json.dumps(obj, indent=2, sort_keys=False) + "\n")


def cmd_synth(args):
    spec = SyntheticSpec(
        communities=args.communities,
        community_size=args.community_size,
        p_in=args.p_in,
        p_out=args.p_out,
        topic_words=args.topic_words,
        in_rate=args.in_rate,
        off_rate=args.off_rate,
        questions_per_topic=args.questions_per_topic,
        question_length=args.question_length,
        informative_content=not args.noise_content,
        min_df=args.min_df,
        seed=args.seed,
    )
    inst = generate_synthetic(spec)
    os.makedirs(args.out, exist_ok=True)
    data.write_network(os.path.join(args.out, NETWORK_FILE), inst.network)
    data.write_content(os.path.join(args.out, CONTENT_FILE), inst.counts)
    data.write_questions(os.path.join(args.out, QUESTIONS_FILE), inst.questions)
    manifest = {
        "spec": spec.to_dict(),
        "seed": spec.seed,
        "users": spec.n_users,
        "edges": inst.network.matrix.nnz,
        "vocabulary": len(inst.vocabulary),
        "questions": len(inst.questions),
        "files": {
            "network": NETWORK_FILE,
            "content": CONTENT_FILE,
            "questions": QUESTIONS_FILE,
        },
    }
    _write_json(os.path.join(args.out, MANIFEST_FILE), manifest)
    log.info("wrote %d users, %d edges, %d questions to %s", spec.n_users, manifest["edges"], len(inst.questions), args.out)


def cmd_fit(args):
    inst = _instance(args)
    factors, trace = fit(inst.content, inst.network, _hyper(args))
    _write_text(args.out, dump_factors(factors))
    _write_json(args.trace or args.out + ".trace.json", trace.to_dict())
    log.info("%s after %d iterations, objective %.6g", trace.stop_reason, trace.iterations, trace.objective[-1])


def cmd_rank(args):
    with open(args.factors, encoding="utf-8") as fp:
        factors = load_factors(fp)
    _, vocab = build_user_word_matrix(read_content(args.content), factors.n_users, args.min_df)
    if len(vocab) != factors.n_words:
        raise FociError(
            f"{args.content} yields {len(vocab)} words but {args.factors} has w={factors.n_words}"
        )
    blocks = []
    for q in read_questions(args.questions):
        try:
            ranked = rank_answerers(q, factors, vocab, args.metric)
        except OutOfVocabularyError as exc:
            log.warning("skipping question %s: %s", q.id, exc)
            continue
        blocks.append(f"# question {q.id}\n" + ranked.to_tsv())
    _write_text(args.out, "".join(blocks))


def cmd_eval(args):
    inst = _instance(args)
    h = _hyper(args)
    rankers = [
        (f"foci-{args.metric}", lambda: model_ranker(inst, h, args.metric)),
        ("random", lambda: random_ranker(inst.m, args.trials, args.seed)),
        ("shared-foci-network", lambda: baseline_shared_foci(inst, "network", h, args.metric)),
        ("shared-foci-content", lambda: baseline_shared_foci(inst, "content", h, args.metric)),
    ]
    reports = [evaluate(inst, make(), args.cutoff, name).to_dict() for name, make in rankers]
    for r in reports:
        if r["questions_skipped"]:
            log.warning("%s: skipped %d out-of-vocabulary questions", r["method"], r["questions_skipped"])
    _write_json(args.out, reports)


def cmd_sweep(args):
    inst = _instance(args)
    grid = sweep(inst, args.alphas, args.betas, _hyper(args), args.metric, args.cutoff, args.jobs)
    for (a, b), cell in grid.cells.items():
        if "error" in cell:
            log.warning("cell alpha=%g beta=%g failed: %s", a, b, cell["error"])
    _write_json(args.out, grid.to_dict())


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        args.func(args)
    except (FociError, OSError) as exc:
        log.error("%s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
