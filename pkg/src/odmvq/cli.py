"""Command-line entry point: ``odmvq <subcommand> ...``.

Exit codes: 0 success, 1 invalid input or spec, 2 some experiment cells failed.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import io as fileio
from .core import ContractError, classify, quantize
from .experiment import (
    OUTPUT_ENV,
    PRESETS,
    SpecError,
    load_spec,
    parse_cluster,
    read_metrics,
    run_experiment,
    train_method,
    write_similarity,
)
from .metrics import fidelity, validity
from .phantom import ClusterSpec, PhantomSpec, generate_phantom, separated_means
from .stats import StatsError

log = logging.getLogger("odmvq")


def _key_values(pairs):
    out = {}
    for item in pairs or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise SpecError(f"expected key=value, got {item!r}")
        out[key.strip()] = value
    return out


def cmd_phantom(args) -> int:
    if args.cluster:
        clusters = [parse_cluster(c) for c in args.cluster]
    else:
        means = separated_means(args.random_clusters, args.bands, seed=args.layout_seed)
        clusters = [ClusterSpec(tuple(m), args.std, 1.0 / args.random_clusters) for m in means]
    spec = PhantomSpec(args.height, args.width, args.bands, clusters, args.noise)
    image, truth = generate_phantom(spec, args.seed)
    fileio.save_image(args.out, image)
    if args.labels:
        fileio.write_labels(args.labels, truth)
    return 0


def cmd_train(args) -> int:
    image = fileio.ingest(args.input)
    out = train_method(args.method, image, args.seed, _key_values(args.set))
    fileio.write_codebook(args.out, out.codebook, {"method": args.method, "seed": args.seed,
                                                   "evaluations": out.evaluations})
    if args.trace:
        if not out.trace:
            raise SpecError(f"method {args.method} does not produce an optimizer trace")
        with open(args.trace, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "phase", "poles", "f_current", "f_historical", "evaluations"])
            for r in out.trace:
                w.writerow([r.iteration, r.phase, r.poles, repr(float(r.f_current)),
                            repr(float(r.f_historical)), r.evaluations])
    print(f"{args.method}: {out.codebook.size} classes, {out.evaluations} evaluations")
    return 0


def cmd_classify(args) -> int:
    image = fileio.ingest(args.input)
    book, _ = fileio.read_codebook(args.codebook)
    fileio.write_labels(args.out, classify(image, book))
    return 0


def cmd_quantize(args) -> int:
    image = fileio.ingest(args.input)
    book, _ = fileio.read_codebook(args.codebook)
    labels = fileio.read_labels(args.labels) if args.labels else classify(image, book)
    fileio.save_image(args.out, quantize(image, book, labels))
    return 0


def cmd_metrics(args) -> int:
    image = fileio.ingest(args.input)
    book, _ = fileio.read_codebook(args.codebook)
    labels = fileio.read_labels(args.labels) if args.labels else classify(image, book)
    fid = fidelity(image, quantize(image, book, labels))
    if args.scale != 1.0:
        fid = fid.rescaled(args.scale)
    val = validity(image, book, labels)
    rows = [("me", fid.me), ("mae", fid.mae), ("mse", fid.mse), ("rmse", fid.rmse), ("nmse", fid.nmse),
            ("psnr_db", fid.psnr), ("snr_db", fid.snr), ("j_e", val.j_e), ("d_max", val.d_max),
            ("d_min", val.d_min), ("j_o", val.j_o), ("db", val.db), ("xb", val.xb)]
    for name, value in rows:
        print(f"{name}\t{float(value)!r}")
    return 0


def cmd_compare(args) -> int:
    rows = read_metrics(args.metrics)
    methods = list(dict.fromkeys(r["method"] for r in rows))
    for path in write_similarity(Path(args.out), rows, methods):
        print(path)
    return 0


def cmd_run(args) -> int:
    spec = load_spec(args.spec)
    summary = run_experiment(spec, output=args.output)
    print(f"{len(summary.rows)} cells written to {summary.output}, {len(summary.failures)} failed")
    return summary.exit_code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="odmvq", description="Dialectical vector quantization experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    ph = sub.add_parser("phantom", help="generate a synthetic multiband phantom")
    ph.add_argument("--out", required=True, help="output .mbi header")
    ph.add_argument("--labels", help="ground-truth label map (PGM)")
    ph.add_argument("--height", type=int, default=64)
    ph.add_argument("--width", type=int, default=64)
    ph.add_argument("--bands", type=int, default=3)
    ph.add_argument("--cluster", action="append", help="'mean=a b c; std=s; fraction=f' (repeatable)")
    ph.add_argument("--random-clusters", type=int, default=4)
    ph.add_argument("--std", type=float, default=0.03)
    ph.add_argument("--layout-seed", type=int, default=0)
    ph.add_argument("--noise", type=float, default=0.0, help="noise level in percent")
    ph.add_argument("--seed", type=int, default=0)
    ph.set_defaults(func=cmd_phantom)

    tr = sub.add_parser("train", help="train one method preset and write its codebook")
    tr.add_argument("--method", required=True, choices=sorted(PRESETS))
    tr.add_argument("--input", nargs="+", required=True, help="band PGMs or one .mbi")
    tr.add_argument("--out", required=True, help="codebook file")
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a preset parameter")
    tr.add_argument("--trace", help="write the optimizer trace (optimized k-means methods) as CSV")
    tr.set_defaults(func=cmd_train)

    for name, func, help_ in (("classify", cmd_classify, "write the nearest-centroid label map"),
                              ("quantize", cmd_quantize, "write the quantized image")):
        c = sub.add_parser(name, help=help_)
        c.add_argument("--input", nargs="+", required=True)
        c.add_argument("--codebook", required=True)
        c.add_argument("--out", required=True)
        if name == "quantize":
            c.add_argument("--labels")
        c.set_defaults(func=func)

    me = sub.add_parser("metrics", help="print fidelity and validity indices")
    me.add_argument("--input", nargs="+", required=True)
    me.add_argument("--codebook", required=True)
    me.add_argument("--labels")
    me.add_argument("--scale", type=float, default=1.0, help="report fidelity on a 0..scale intensity range")
    me.set_defaults(func=cmd_metrics)

    co = sub.add_parser("compare", help="similarity tables from a metrics.csv")
    co.add_argument("--metrics", required=True)
    co.add_argument("--out", required=True)
    co.set_defaults(func=cmd_compare)

    ru = sub.add_parser("run", help="run a full experiment spec (INI)")
    ru.add_argument("spec")
    ru.add_argument("--output", help=f"output directory (default: spec value, then ${OUTPUT_ENV})")
    ru.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ContractError, StatsError, OSError) as exc:
        print(f"odmvq: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
