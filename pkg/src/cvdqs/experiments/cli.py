"""Command-line runner: ``cvdqs <command> --config a.json [b.json ...]``."""

import argparse
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .._validation import DegenerateEstimatorError, NoSolutionError, OutOfDomainError
from .commands import run_config
from .config import COMMANDS, ConfigError, load_config, preset_names

log = logging.getLogger("cvdqs")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
NUMERICAL_ERRORS = (NoSolutionError, DegenerateEstimatorError, OutOfDomainError, np.linalg.LinAlgError, FloatingPointError)


def write_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _run_one(command, config_path, seed, shots, out_dir):
    """Run one config; returns ``(exit_code, message)`` so it can cross process boundaries."""
    try:
        config = load_config(config_path).with_overrides(seed=seed, n_shots=shots)
        if config.command != command:
            raise ConfigError(f"{config_path} is a {config.command!r} config, not {command!r}")
        config.validate()
        outputs = run_config(config)
    except NUMERICAL_ERRORS as exc:
        return EXIT_NUMERICAL, f"{config_path}: {exc}"
    except (ConfigError, ValueError, KeyError, TypeError) as exc:
        return EXIT_CONFIG, f"{config_path}: {exc}"
    target = Path(out_dir) / config.name
    for name, text in outputs.items():
        write_atomic(target / name, text)
    return EXIT_OK, f"{config_path}: wrote {', '.join(sorted(outputs))} to {target}"


def build_parser():
    parser = argparse.ArgumentParser(prog="cvdqs", description="Entangled RF-photonic sensor network simulator.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", nargs="+", required=True, help="config path(s) or preset:NAME")
        p.add_argument("--seed", type=int, help="override run.seed")
        p.add_argument("--shots", type=int, help="override run.n_shots")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="configs run in parallel")
    sub.add_parser("presets", help="list shipped preset configs")
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        for name in preset_names():
            print(name)
        return EXIT_OK
    jobs = [(args.command, path, args.seed, args.shots, args.out) for path in args.config]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_run_one, *zip(*jobs)))
    else:
        results = [_run_one(*job) for job in jobs]
    code = EXIT_OK
    for status, message in results:
        (log.info if status == EXIT_OK else log.error)(message)
        code = max(code, status)
    return code


if __name__ == "__main__":
    sys.exit(main())
