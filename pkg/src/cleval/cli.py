"""Command-line front end.

Usage::

    cleval run --config run.json [--scenario KIND] [--steps N] [--base N]
               [--increment N] [--pooling MODE] [--top-k K]
               [--temperature T] [--seed S] [--workers N] [--report PATH]
               [--emit-confusion-csv]

The config file carries the full RunConfig as JSON; flags override single
fields.  Progress goes to stderr, the report file is the only artifact.
Exit codes: 0 success, 2 config error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import ClevalError, ConfigInvalid
from .harness import POOLING_MODES, SCENARIO_KINDS, RunConfig, run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3

# (flag dest, config key) pairs applied on top of the config file.
_OVERRIDES = (
    ("scenario", "scenario"),
    ("steps", "steps"),
    ("base", "base_classes"),
    ("increment", "increment"),
    ("pooling", "pooling"),
    ("top_k", "top_k"),
    ("temperature", "temperature"),
    ("seed", "seed"),
    ("workers", "workers"),
    ("report", "report"),
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cleval",
        description="Evaluate frozen dual-encoder embeddings on continual streams.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="execute one evaluation run")
    runp.add_argument("--config", required=True, help="JSON run configuration")
    runp.add_argument("--scenario", choices=SCENARIO_KINDS)
    runp.add_argument("--steps", type=int)
    runp.add_argument("--base", type=int)
    runp.add_argument("--increment", type=int)
    runp.add_argument("--pooling", choices=POOLING_MODES)
    runp.add_argument("--top-k", type=int, dest="top_k")
    runp.add_argument("--temperature", type=float)
    runp.add_argument("--seed", type=int)
    runp.add_argument("--workers", type=int)
    runp.add_argument("--report", help="report output path")
    runp.add_argument(
        "--emit-confusion-csv",
        action="store_true",
        default=None,
        help="also write one confusion CSV per step",
    )
    runp.add_argument("-v", "--verbose", action="store_true")
    return parser


def _load_config(args) -> RunConfig:
    from pathlib import Path

    path = Path(args.config)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigInvalid(f"{path}: config must be a JSON object")
    # Resolve config-file-relative paths before applying cwd-relative overrides.
    config = RunConfig.from_dict(doc, base_dir=path.parent)
    updates = {}
    for dest, key in _OVERRIDES:
        value = getattr(args, dest)
        if value is not None:
            updates[key] = value
    if args.emit_confusion_csv is not None:
        updates["emit_confusion_csv"] = True
    if not updates:
        return config
    merged = config.echo()
    merged["workers"] = config.workers
    merged.update(updates)
    return RunConfig(**merged)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
    )
    try:
        config = _load_config(args)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        run(config)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ClevalError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
