"""Command-line driver: ``wildeuler solve|certify|window|budget|report``.

Exit codes: 0 ok, 2 config error, 3 numerical abort, 4 certification
failure under ``--strict``. Failures print one line ``error: <Class>: <msg>``
to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import pipeline
from .config import ConfigError, load_config
from .pipeline import CertificationFailure, NumericalAbort

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CERT = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="experiment config (INI)")
    common.add_argument("--out", default="runs", help="root directory for run directories")
    common.add_argument("--seed", type=int, default=None, help="override [run] seed (u64)")
    common.add_argument("--threads", type=int, default=1, help="worker threads")
    common.add_argument("--quiet", action="store_true")
    common.add_argument("--strict", action="store_true",
                        help="exit 4 when a certification verdict fails")

    parser = _Parser(prog="wildeuler", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("solve", "certify", "window", "budget"):
        sub.add_parser(name, parents=[common])
    rep = sub.add_parser("report", parents=[common])
    rep.add_argument("run_dir", nargs="?", help="run directory (default: derived from --config)")
    return parser


def _config(args):
    if not args.config:
        raise ConfigError("--config is required")
    cfg = load_config(args.config)
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        cfg = cfg.with_seed(args.seed)
    return cfg


def run(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    say = (lambda *a, **k: None) if args.quiet else print

    if args.command == "report":
        rdir = args.run_dir or pipeline.run_dir(_config(args), args.out)
        say(pipeline.cmd_report(rdir), end="")
        return EXIT_OK

    cfg = _config(args)
    if args.command == "solve":
        rdir, summary, _ = pipeline.cmd_solve(cfg, args.out, args.threads)
        say(rdir)
        if summary["blowup_flag"]:
            raise NumericalAbort(f"solver stopped at t={summary['t_reached']!r} "
                                 f"({summary['blowup_reason']}); see {rdir}/solve.json")
    elif args.command == "certify":
        rdir, result = pipeline.cmd_certify(cfg, args.out, args.threads)
        say(rdir)
        say(json.dumps({"zero_margin": result["zero"]["margin_min"], "verdict": result["verdict"]}))
        if args.strict and result["verdict"] != "pass":
            raise CertificationFailure("subsolution certification failed; see certify.json")
    elif args.command == "window":
        rdir, result = pipeline.cmd_window(cfg, args.out, args.threads)
        say(rdir)
        say(json.dumps({"T_w": result["window"]["T_w"], "eps": result["window"]["eps"]}))
        if args.strict and result["window"]["empty"]:
            raise CertificationFailure("energy window is empty")
    else:
        rdir, result = pipeline.cmd_budget(cfg, args.out, args.threads)
        say(rdir)
        say(json.dumps({"lambda0": result["budget"]["lambda0"], "N0": result["budget"]["N0"]}))
    return EXIT_OK


def main(argv=None):
    try:
        return run(argv)
    except ConfigError as exc:
        err, code = exc, EXIT_CONFIG
    except NumericalAbort as exc:
        err, code = exc, EXIT_NUMERICAL
    except CertificationFailure as exc:
        err, code = exc, EXIT_CERT
    except OSError as exc:
        err, code = ConfigError(str(exc)), EXIT_CONFIG
    msg = " ".join(str(err).split())
    print(f"error: {type(err).__name__}: {msg}", file=sys.stderr)
    return code
