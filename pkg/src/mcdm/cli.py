"""Command line entry point: ``mcdm loopback|sweep|adapt|oracle``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import logging
import sys
from typing import List, Optional, Sequence

from . import harness, oracles
from .config import DEFAULT, load_config
from .errors import ConfigError

EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 1, 2


def _snr_list(text: str) -> List[float]:
    try:
        values = [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma separated list of numbers: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty SNR list")
    return values


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=DEFAULT, help="INI experiment file, or 'default'")
    common.add_argument("--seed", type=_u64, help="master seed (overrides the config)")
    common.add_argument("--out", help="write CSV here instead of stdout")
    common.add_argument("--snr", type=_snr_list, help="comma separated SNR grid in dB")
    common.add_argument("--packets", type=_positive, help="packets per grid point / repetitions")
    common.add_argument("--csi", choices=[c.value for c in harness.CSI], help="channel knowledge at the receiver")
    common.add_argument("--jobs", type=_positive, default=1, help="worker processes")
    common.add_argument("--log", default="WARNING", help="log level for key=value run events")

    parser = argparse.ArgumentParser(prog="mcdm", description="Multicarrier chirp-division link simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("loopback", parents=[common], help="noiseless identity-channel check of every config")
    sub.add_parser("sweep", parents=[common], help="BER versus SNR for the configuration grid")
    adapt = sub.add_parser("adapt", parents=[common], help="probe candidates and commit to the best K")
    adapt.add_argument("--repetitions", type=_positive, default=1)
    oracle = sub.add_parser("oracle", parents=[common], help="closed-form reference BER curve")
    oracle.add_argument("--kind", choices=[k.value for k in oracles.OracleKind], default="awgn_bpsk")
    return parser


def _spec(args) -> harness.ExperimentSpec:
    spec = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.snr is not None:
        changes["snr_grid"] = tuple(args.snr)
    if args.packets is not None:
        changes["n_packets"] = args.packets
    if args.csi is not None:
        changes["csi"] = args.csi
    return dataclasses.replace(spec, **changes) if changes else spec


def _emit(text: str, out: Optional[str]):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _oracle_csv(kind: str, snr: Sequence[float]) -> str:
    curve = oracles.oracle_curve(kind, snr)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("kind", "snr_db", "ber"))
    for s, b in curve.points:
        writer.writerow((curve.kind.value, f"{s:g}", repr(b)))
    return buf.getvalue()


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log.upper(), format="%(levelname)s %(name)s %(message)s", stream=sys.stderr)

    if args.command == "oracle":
        _emit(_oracle_csv(args.kind, args.snr if args.snr is not None else [float(s) for s in range(0, 15, 2)]), args.out)
        return EXIT_OK

    try:
        spec = _spec(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "loopback":
        if args.packets is None:
            spec = dataclasses.replace(spec, n_packets=1)
        result = harness.loopback(spec, jobs=args.jobs)
        errors = sum(p.errors for p in result.points)
        bits = sum(p.bits for p in result.points)
        print(f"{errors} bit errors in {bits} bits over {len(result.points)} configurations")
        if args.out:
            _emit(result.to_csv(), args.out)
        return EXIT_OK if errors == 0 else EXIT_CHECK

    if args.command == "sweep":
        _emit(harness.sweep(spec, jobs=args.jobs).to_csv(), args.out)
        return EXIT_OK

    runs = [harness.adapt_run(spec, repetition=r) for r in range(args.repetitions)]
    for run in runs:
        print(f"chosen {run.chosen.config_id}", file=sys.stderr)
    _emit(harness.trace_csv(runs), args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
