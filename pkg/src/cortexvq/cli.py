"""Command-line entry point: ``cortexvq {gen,train,encode,decode,bench,entropy}``.

Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench, formats, signals
from .baselines import birch, gmm_em, kmeans
from .errors import CortexVQError, UndertrainedTreeError
from .transform import NormalizationSpec, NormMode, dwpt_forward, dwpt_inverse

log = logging.getLogger("cortexvq")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _stream_out(stream, out_dir, name, binary):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if binary:
        path = out / f"{name}.bin"
        formats.save_stream_binary(stream, path)
    else:
        path = out / f"{name}.csv"
        formats.save_stream_csv(stream, path)
    return path


def load_stream(path):
    data = Path(path).read_bytes()[:8]
    if data == formats.STREAM_MAGIC:
        return formats.load_stream_binary(path)
    return formats.load_stream_csv(path)


def cmd_gen(args):
    n = args.frames
    stream = bench.make_stream(args.source, n, args.window, args.stride, args.seed)
    path = _stream_out(stream, args.out, f"{args.source}_{n}_s{args.seed}", args.binary)
    print(path)


def cmd_train(args):
    stream = load_stream(args.stream)
    cfg = bench.ExperimentConfig.from_ini(args.config) if args.config else bench.ExperimentConfig()
    window = args.window or cfg.window
    stride = args.stride or cfg.stride
    data = bench.prepare(stream, window, stride, mode=NormMode(cfg.normalization), scale=cfg.scale)
    x = data.coeffs
    if args.algorithm == "cortex":
        settings = cfg.cortex
        if args.k:
            frac, _ = bench.calibrate_cortex(x, settings, args.k)
        else:
            frac = settings.r_limit_fraction
        cb, secs = bench.train_cortex(x, settings, frac, data.spec)
    else:
        if not args.k:
            raise _UsageError(f"--k is required for {args.algorithm}")
        if args.algorithm == "kmeans":
            res, secs = bench.timed(kmeans, x, args.k, seed=args.seed, n_init=cfg.kmeans_n_init)
            cb = res.codebook
        elif args.algorithm == "birch":
            thr = bench._birch_threshold(x, args.k, cfg)
            cb, secs = bench.timed(birch, x, threshold=thr, branching=cfg.birch_branching, k=args.k)
        else:
            cb, secs = bench.timed(gmm_em, x, args.k, tol=cfg.gmm_tol, max_iter=cfg.gmm_max_iter,
                                   seed=args.seed)
        cb.meta["normalization"] = data.spec.to_dict()
        cb.meta["window"] = window
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{args.algorithm}.cvq"
    formats.save_codebook(cb, path, binary=args.binary)
    log.info("trained %s: K=%d in %.3f s", args.algorithm, cb.K, secs)
    print(path)


def _codebook_norm(cb):
    norm = getattr(cb, "normalization", None)
    if norm is None and hasattr(cb, "meta") and cb.meta.get("normalization"):
        norm = NormalizationSpec.from_dict(cb.meta["normalization"])
    if norm is None:
        norm = NormalizationSpec(1.0)
    return norm


def _codebook_window(cb):
    return cb.depth if hasattr(cb, "codewords") else cb.dim


def cmd_encode(args):
    cb = formats.load_codebook(args.codebook)
    stream = load_stream(args.stream)
    window = _codebook_window(cb)
    norm = _codebook_norm(cb)
    # frames tile the stream so that decode can rebuild it; a ragged tail is dropped
    frames = signals.frame_matrix(stream.samples, window, window)
    idx = cb.encode_batch(dwpt_forward(frames / norm.scale))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / (Path(args.stream).stem + ".idx")
    formats.save_indices(idx, path)
    print(path)


def cmd_decode(args):
    cb = formats.load_codebook(args.codebook)
    idx = formats.load_indices(args.indices)
    norm = _codebook_norm(cb)
    frames = dwpt_inverse(cb.decode_batch(idx)) * norm.scale
    stream = signals.SampleStream(np.ravel(frames), args.rate, signals.Source.BASIC_WAVES
                                  if args.source is None else signals.Source(args.source), args.seed)
    path = _stream_out(stream, args.out, Path(args.indices).stem + "_decoded", args.binary)
    print(path)


def cmd_bench(args):
    cfg = bench.ExperimentConfig.from_ini(args.config) if args.config else bench.ExperimentConfig()
    if args.seed is not None:
        cfg.seeds = (args.seed,)
    result = bench.run_experiment(cfg, serial_timing=args.serial_timing, workers=args.workers)
    out = args.out or cfg.out_dir
    for path in bench.emit_reports(result, out, args.format):
        print(path)
    failed = [c for c in result.cells if c.status != "ok"]
    for c in failed:
        log.warning("cell %s n=%d rep=%d failed: %s", c.algorithm, c.n, c.rep, c.reason)


def cmd_entropy(args):
    cfg = bench.EntropyConfig.from_ini(args.config) if args.config else bench.EntropyConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    rep = bench.entropy_experiment(cfg)
    out = args.out or cfg.out_dir
    for path in bench.emit_entropy_reports(rep, out, args.format):
        print(path)
    print(f"K={rep.K} H_cortex={rep.H_cortex:.4f} H_kmeans={rep.H_kmeans:.4f} "
          f"H_uniform={rep.H_uniform:.4f}")


def build_parser():
    p = _Parser(prog="cortexvq", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", help="INI experiment config")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        return sp

    g = common(sub.add_parser("gen", help="generate a dataset stream"), config=False)
    g.add_argument("--source", choices=("basic_waves", "lorenz", "gaussian_mixture"),
                   default="basic_waves")
    g.add_argument("--frames", type=int, default=16000, help="number of frames the stream yields")
    g.add_argument("--window", type=int, default=8)
    g.add_argument("--stride", type=int, default=1)
    g.add_argument("--binary", action="store_true", help="write the binary stream format")
    g.set_defaults(func=cmd_gen)

    t = common(sub.add_parser("train", help="train one algorithm and save its codebook"))
    t.add_argument("--algorithm", choices=bench.ALGORITHMS, default="cortex")
    t.add_argument("--stream", required=True)
    t.add_argument("--k", type=int, default=None, help="codebook size (cortex: target size)")
    t.add_argument("--window", type=int, default=None)
    t.add_argument("--stride", type=int, default=None)
    t.add_argument("--binary", action="store_true")
    t.set_defaults(func=cmd_train)

    e = common(sub.add_parser("encode", help="stream -> index file"), config=False)
    e.add_argument("--codebook", required=True)
    e.add_argument("--stream", required=True)
    e.set_defaults(func=cmd_encode)

    d = common(sub.add_parser("decode", help="index file -> stream"), config=False)
    d.add_argument("--codebook", required=True)
    d.add_argument("--indices", required=True)
    d.add_argument("--rate", type=float, default=8000.0)
    d.add_argument("--source", default=None)
    d.add_argument("--binary", action="store_true")
    d.set_defaults(func=cmd_decode)

    b = common(sub.add_parser("bench", help="run a comparison grid"))
    b.add_argument("--serial-timing", dest="serial_timing", action="store_true", default=True,
                   help="run cells one at a time on one BLAS thread (default)")
    b.add_argument("--no-serial-timing", dest="serial_timing", action="store_false")
    b.add_argument("--workers", type=int, default=None)
    b.set_defaults(func=cmd_bench)

    en = common(sub.add_parser("entropy", help="one-level entropy and convergence study"))
    en.set_defaults(func=cmd_entropy)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(f"cortexvq: {exc}", file=sys.stderr)
        return EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    for attr in ("out",):
        if getattr(args, attr, None) is None and args.command in ("gen", "train", "encode", "decode"):
            setattr(args, attr, ".")
    if getattr(args, "seed", None) is None and args.command in ("gen", "train", "decode"):
        args.seed = 0
    try:
        args.func(args)
    except _UsageError as exc:
        print(f"cortexvq: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except UndertrainedTreeError as exc:
        print(f"cortexvq: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (CortexVQError, ValueError, FileNotFoundError) as exc:
        print(f"cortexvq: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime error
        print(f"cortexvq: runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
