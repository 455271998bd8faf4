"""``chirptrack`` command line: table, figures, analyze, dump-config."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .experiments import ESTIMATORS, ExperimentConfig, analyze_signal, dump_config, \
    load_config, run_figures, run_table
from .signal import SignalFormatError, read_signal

# flag dest -> ExperimentConfig field
_FLAG_FIELDS = {
    "signal": "signal", "n": "n", "snr": "snr", "trials": "trials", "seed": "seed",
    "segment_len": "segment_len", "hop": "hop", "window": "window", "lam": "lam",
    "l_bins": "l_bins", "pmax": "pmax", "gamma": "gamma", "estimators": "estimators",
    "freq_bins": "freq_bins", "tracks": "tracks", "out": "out",
}


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _names(text: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in text.split(",") if s.strip())


def _experiment_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("experiment")
    g.add_argument("--config", type=Path, help="key = value file; flags override it")
    g.add_argument("--signal", help="example1, example2 or file:<path>")
    g.add_argument("--n", type=int, help="samples per synthetic signal")
    g.add_argument("--snr", type=_floats, help="comma-separated SNRs in dB")
    g.add_argument("--trials", type=int)
    g.add_argument("--seed", type=int, help="trial t uses seed + t")
    g.add_argument("--segment-len", dest="segment_len", type=int)
    g.add_argument("--hop", type=int)
    g.add_argument("--window", choices=["rectangular", "hamming", "hann"])
    g.add_argument("--lambda", dest="lam", type=float, help="chirp-rate bound")
    g.add_argument("--l-bins", dest="l_bins", type=int, help="chirp-rate columns")
    g.add_argument("--pmax", type=int, help="max components per segment")
    g.add_argument("--gamma", type=float, help="matching-pursuit stop ratio")
    g.add_argument("--estimators", type=_names, help=f"subset of {','.join(ESTIMATORS)}")
    g.add_argument("--freq-bins", dest="freq_bins", type=int)
    g.add_argument("--tracks", type=int, help="tracks to pick when no truth is known")
    g.add_argument("--out", help="output directory")
    return p


def config_from_args(args) -> ExperimentConfig:
    overrides = {f: getattr(args, d, None) for d, f in _FLAG_FIELDS.items()}
    if getattr(args, "config", None) is not None:
        return load_config(args.config, **overrides)
    return ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})


def build_parser() -> argparse.ArgumentParser:
    shared = _experiment_flags()
    p = argparse.ArgumentParser(prog="chirptrack",
                                description="Chirp-based IF estimation experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("table", parents=[shared], help="Monte Carlo MSE table")
    sub.add_parser("figures", parents=[shared], help="PGM images and IF track CSVs")
    sub.add_parser("dump-config", parents=[shared], help="print the effective config")
    a = sub.add_parser("analyze", parents=[shared], help="transforms of a signal file")
    a.add_argument("path", type=Path)
    a.add_argument("--dlct", action="store_true", help="write the DLCT plane CSV")
    a.add_argument("--L", dest="dlct_bins", type=int, help="DLCT chirp-rate columns")
    a.add_argument("--estimate", action="store_true",
                   help="synthesized WD, components and IF tracks")
    return p


def _analyze(args) -> int:
    if not args.path.is_file():
        print(f"chirptrack: no such file: {args.path}", file=sys.stderr)
        return 2
    x = read_signal(args.path)
    if args.signal is None:
        args.signal = f"file:{args.path}"
    cfg = config_from_args(args)
    do_dlct = args.dlct or args.dlct_bins is not None
    do_estimate = args.estimate or not do_dlct
    bins = None
    if do_dlct:
        bins = args.dlct_bins or cfg.resolved(x.N).l_bins
    for path in analyze_signal(x, cfg.out, dlct_bins=bins, do_estimate=do_estimate, cfg=cfg):
        print(path)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "analyze":
            return _analyze(args)
        cfg = config_from_args(args)
        if args.command == "dump-config":
            sys.stdout.write(dump_config(cfg))
        elif args.command == "table":
            run_table(cfg)
        else:
            for path in run_figures(cfg):
                print(path)
    except SignalFormatError as err:
        print(f"chirptrack: {err}", file=sys.stderr)
        return 1
    except FileNotFoundError as err:
        print(f"chirptrack: no such file: {err.filename}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as err:
        print(f"chirptrack: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
