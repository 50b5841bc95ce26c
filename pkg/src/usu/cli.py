"""``usu`` command line: upsample, verify, bench, synth.

Exit codes: 0 success, 1 verification pattern mismatch, 2 invalid arguments,
3 I/O failure, 4 domain error (e.g. a score outside a potential's domain).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import io as usu_io
from .bench import ORACLES, PARTITIONS, aggregate, run_benchmark
from .errors import DomainError
from .evaluate import EXPECTED_PATTERNS, SCORERS, BatteryConfig, verify_desiderata
from .grid import SegmentPartition, block_partition, piecewise_constant_expand
from .interp import ALIGNMENTS
from .methods import METHODS, get_method
from .potentials import PotentialSpec
from .refine import RefineConfig, refine_pipeline
from .synth import PATTERNS, RESOLUTIONS, SHAPES, gen_dataset

EXIT_MISMATCH, EXIT_USAGE, EXIT_IO, EXIT_DOMAIN = 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _shape(text):
    try:
        h, w = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HxW, got {text!r}") from None
    if h < 1 or w < 1:
        raise argparse.ArgumentTypeError("target dimensions must be positive")
    return h, w


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _name_list(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def build_parser():
    parser = _Parser(prog="usu", description="Mass-conserving upsampling of attribution maps.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    up = sub.add_parser("upsample", help="upsample one coarse attribution map")
    up.add_argument("--method", choices=METHODS, required=True)
    up.add_argument("--coarse", type=Path, required=True)
    up.add_argument("--segments", type=Path, help="label file (required for usu/iwmr)")
    up.add_argument("--out", type=Path, required=True)
    up.add_argument("--target", type=_shape, help="output size HxW (defaults to the segment grid)")
    up.add_argument("--epsilon", type=float, default=0.1)
    up.add_argument("--epsilon-lambda", type=float, default=0.1)
    up.add_argument("--alignment", choices=ALIGNMENTS, default="half-pixel-centers")
    up.add_argument("--refine", action="store_true", help="refine the segments before redistributing")
    up.add_argument("--theta", type=float, default=0.05)
    up.add_argument("--mu", type=float, default=0.1)
    up.add_argument("--tau", type=float, default=0.05)
    up.add_argument("--tol", type=float, default=None)
    up.add_argument("--max-depth", type=int, default=4)
    up.add_argument("--export-pgm", type=Path)
    up.add_argument("--export-hierarchy", type=Path, metavar="DIR",
                    help="with --refine, write one label file per depth into DIR")
    up.add_argument("--format", choices=("binary", "csv"), default="binary")

    ver = sub.add_parser("verify", help="run the D1-D4 desiderata battery")
    ver.add_argument("--method", choices=METHODS, required=True)
    ver.add_argument("--trials", type=int, default=200)
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--epsilon", type=float, default=0.1)
    ver.add_argument("--epsilon-lambda", type=float, default=0.1)
    ver.add_argument("--expect", help="expected pass pattern, e.g. 1111 (default: the method's known pattern)")
    ver.add_argument("--report", type=Path, help="CSV report path")

    ben = sub.add_parser("bench", help="localisation benchmark on synthetic data")
    ben.add_argument("--dataset", choices=("shapes", "patterns"), default="shapes")
    ben.add_argument("--methods", type=_name_list, default=["usu", "iwmr", "bilinear"])
    ben.add_argument("--resolutions", type=_int_list, default=list(RESOLUTIONS))
    ben.add_argument("--oracle", choices=ORACLES, default="none")
    ben.add_argument("--partition", choices=PARTITIONS, default="image")
    ben.add_argument("--seed", type=int, default=0)
    ben.add_argument("--count", type=int, default=30, help="instances per kind")
    ben.add_argument("--size", type=int, default=64)
    ben.add_argument("--epsilon", type=float, default=0.1)
    ben.add_argument("--epsilon-lambda", type=float, default=0.1)
    ben.add_argument("--out", type=Path, help="CSV with per-instance and aggregate rows")

    syn = sub.add_parser("synth", help="write a synthetic dataset")
    syn.add_argument("--kind", choices=("shapes", "patterns") + SHAPES + PATTERNS, default="shapes")
    syn.add_argument("--count", type=int, default=30, help="instances per kind")
    syn.add_argument("--size", type=int, default=64)
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--resolutions", type=_int_list, default=list(RESOLUTIONS))
    syn.add_argument("--outdir", type=Path, required=True)
    syn.add_argument("--format", choices=("binary", "csv"), default="binary")
    return parser


def _warn(message):
    print(f"usu: warning: {message}", file=sys.stderr)


# -- file helpers honouring --format ------------------------------------------

def _read_grid(path, fmt):
    return usu_io.read_grid_csv(path) if fmt == "csv" else usu_io.read_grid(path)


def _read_labels(path, fmt):
    return usu_io.read_labels_csv(path) if fmt == "csv" else usu_io.read_labels(path)


def _grid_payload(grid, fmt):
    return usu_io.grid_csv(grid) if fmt == "csv" else usu_io.grid_bytes(grid)


def _labels_payload(partition, fmt):
    return usu_io.labels_csv(partition) if fmt == "csv" else usu_io.labels_bytes(partition)


class _InputError(Exception):
    """Wraps read failures so they map to the I/O exit code."""


def _load(reader, path, fmt):
    try:
        return reader(path, fmt)
    except (OSError, usu_io.FormatError) as exc:
        raise _InputError(f"cannot read {path}: {exc}") from exc


# -- commands -------------------------------------------------------------------

def cmd_upsample(args):
    method = get_method(args.method, args.epsilon, args.epsilon_lambda, args.alignment)
    if method.score_aware and args.segments is None:
        raise UsageError(f"--method {args.method} requires --segments")
    if args.refine and not method.score_aware:
        raise UsageError("--refine applies to usu and iwmr only")
    if args.export_hierarchy and not args.refine:
        raise UsageError("--export-hierarchy requires --refine")
    if not method.score_aware and args.segments is not None:
        _warn(f"{args.method} ignores segment scores; --segments only sets the target size")

    coarse = _load(_read_grid, args.coarse, args.format)
    segments = _load(_read_labels, args.segments, args.format) if args.segments else None
    target = args.target or (segments.shape if segments is not None else None)
    if target is None:
        raise UsageError("--target is required when no --segments are given")
    if segments is not None and segments.shape != tuple(target):
        raise UsageError(f"segment grid {segments.shape} does not match --target {target}")
    N = block_partition(*target, *coarse.shape)

    if args.refine:
        config = RefineConfig(args.theta, args.mu, args.tau, args.tol, args.max_depth)
        spec = PotentialSpec("tensor", temperature=args.epsilon)
        expanded = piecewise_constant_expand(coarse, N)
        _, _, states = refine_pipeline(expanded, N, segments, SCORERS["mean"], config, spec,
                                       return_states=True)
        segments = states[-1].partition
        print(f"refined to depth {states[-1].depth} with {segments.count} segments", file=sys.stderr)

    result = method(coarse, segments, N)
    outputs = [(args.out, _grid_payload(result, args.format))]
    if args.export_pgm:
        outputs.append((args.export_pgm, usu_io.pgm_bytes(result)))
    if args.export_hierarchy:
        args.export_hierarchy.mkdir(parents=True, exist_ok=True)
        ext = ".csv" if args.format == "csv" else ".usu"
        outputs += [(args.export_hierarchy / f"depth_{s.depth}{ext}", _labels_payload(s.partition, args.format))
                    for s in states]
    for path, payload in outputs:
        usu_io.atomic_write(path, payload)
    return 0


def _fmt_witness(w):
    return "" if w is None else ";".join(str(v) for v in w)


def cmd_verify(args):
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    expect = args.expect or EXPECTED_PATTERNS[args.method]
    if len(expect) != 4 or set(expect) - {"0", "1"}:
        raise UsageError("--expect must be four characters of 0/1")
    method = get_method(args.method, args.epsilon, args.epsilon_lambda)
    report = verify_desiderata(method, BatteryConfig(trials=args.trials, seed=args.seed), name=args.method)
    print(report.summary())
    print(f"pattern {report.pattern}, expected {expect}: {'match' if report.pattern == expect else 'MISMATCH'}")
    if args.report:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["method", "trials", "d1_error", "d1_pass", "d2_pass", "d3_pass", "d4_pass",
                         "d4_strict_pass", "d1_witness", "d2_witness", "d4_witness"])
        writer.writerow([report.method, report.trials, repr(report.d1_error),
                         *(int(f) for f in (report.d1_pass, report.d2_pass, report.d3_pass,
                                            report.d4_pass, report.d4_strict_pass)),
                         _fmt_witness(report.d1_witness), _fmt_witness(report.d2_witness),
                         _fmt_witness(report.d4_witness)])
        usu_io.atomic_write(args.report, buf.getvalue().encode())
    return 0 if report.pattern == expect else EXIT_MISMATCH


def cmd_bench(args):
    if not args.methods:
        raise UsageError("--methods must name at least one method")
    unknown = [m for m in args.methods if m not in METHODS]
    if unknown:
        raise UsageError(f"unknown methods {unknown}; choose from {METHODS}")
    if not args.resolutions or min(args.resolutions) < 1 or max(args.resolutions) > args.size:
        raise UsageError("--resolutions must be between 1 and --size")
    if args.count < 1:
        raise UsageError("--count must be >= 1")
    rows = run_benchmark(args.methods, args.dataset, args.resolutions, args.oracle, args.seed,
                         args.count, args.size, args.partition, epsilon=args.epsilon,
                         epsilon_lambda=args.epsilon_lambda)
    summary = aggregate(rows)
    print(f"{'method':<10} {'res':>4} {'IoU':>7} {'Conc':>7} {'PG':>7} {'n':>5}")
    for (method, res), m in summary.items():
        print(f"{method:<10} {res:>4} {m['iou']:7.4f} {m['concentration']:7.4f} "
              f"{m['pointing_game']:7.4f} {m['n']:>5}")
    if args.out:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["row", "index", "label", "resolution", "method", "iou", "concentration",
                         "pointing_game"])
        for r in rows:
            writer.writerow(["instance", r.index, r.label, r.resolution, r.method, repr(r.iou),
                             repr(r.concentration), r.pointing_game])
        for (method, res), m in summary.items():
            writer.writerow(["aggregate", "", "all", res, method, repr(m["iou"]),
                             repr(m["concentration"]), repr(m["pointing_game"])])
        usu_io.atomic_write(args.out, buf.getvalue().encode())
    return 0


def cmd_synth(args):
    kinds = {"shapes": SHAPES, "patterns": PATTERNS}.get(args.kind, (args.kind,))
    minimum = 32 if any(k in PATTERNS for k in kinds) else 16
    if args.size < minimum:
        raise UsageError(f"--size must be >= {minimum} for {args.kind}")
    if args.count < 1:
        raise UsageError("--count must be >= 1")
    if not args.resolutions or min(args.resolutions) < 1 or max(args.resolutions) > args.size:
        raise UsageError("--resolutions must be between 1 and --size")
    items = gen_dataset(args.count, args.size, tuple(args.resolutions), args.seed, kinds)

    ext = ".csv" if args.format == "csv" else ".usu"
    args.outdir.mkdir(parents=True, exist_ok=True)
    entries = []
    for index, item in enumerate(items):
        inst = item.instance
        stem = f"{index:04d}_{inst.label}"
        mask = SegmentPartition(inst.gt_mask.astype(np.int64), np.array([0.0, 1.0]))
        payloads = {
            "image": _grid_payload(inst.image, args.format),
            "mask": _labels_payload(mask, args.format),
            "gt_attribution": _grid_payload(inst.gt_attribution, args.format),
        }
        payloads.update({f"coarse_{res}": _grid_payload(c, args.format) for res, c in item.coarse.items()})
        files = {}
        for role, payload in payloads.items():
            name = f"{stem}_{role}{ext}"
            usu_io.atomic_write(args.outdir / name, payload)
            files[role] = name
        entries.append({"index": index, "label": inst.label, "seed": item.seed, "files": files})
    manifest = {"kind": args.kind, "count_per_kind": args.count, "size": args.size, "seed": args.seed,
                "resolutions": list(args.resolutions), "format": args.format, "instances": entries}
    usu_io.atomic_write(args.outdir / "manifest.json",
                        (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode())
    print(f"wrote {len(items)} instances to {args.outdir}")
    return 0


COMMANDS = {"upsample": cmd_upsample, "verify": cmd_verify, "bench": cmd_bench, "synth": cmd_synth}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usu: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"usu: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (_InputError, OSError) as exc:
        print(f"usu: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"usu: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
