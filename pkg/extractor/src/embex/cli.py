"""Command-line front end.

Usage::

    extract images --dataset cifar100 --split test --model hf:NAME \
        --out DIR [--data-root DIR] [--batch-size N] [--device cpu]
    extract texts --dataset cifar100 --model hf:NAME --prompts FILE \
        --class-names FILE [--variant default] --out DIR

Exit codes: 0 success, 2 usage error, 3 extraction error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .datasets import DATASETS
from .errors import ExtractorError
from .jobs import CLASS_NAME_VARIANTS, ExtractJob, extract_images, extract_texts

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_EXTRACT = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extract",
        description="Embed dataset images or prompt grids with a frozen dual encoder.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument(
            "--dataset", required=True,
            help=f"one of {', '.join(DATASETS)}, or folder:<path>",
        )
        p.add_argument("--model", required=True, help="hf:<name> or stub:<dim>")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--batch-size", type=int, default=64)
        p.add_argument("--device", default="cpu")
        p.add_argument("-v", "--verbose", action="store_true")

    images = sub.add_parser("images", help="embed a dataset split")
    common(images)
    images.add_argument("--split", required=True, choices=("train", "test"))
    images.add_argument("--data-root", default=".", help="dataset location")

    texts = sub.add_parser("texts", help="embed the prompt x class grid")
    common(texts)
    texts.add_argument("--prompts", required=True, help="template file, one per line")
    texts.add_argument("--class-names", required=True, help="class-name file")
    texts.add_argument("--variant", default="default", choices=CLASS_NAME_VARIANTS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
    )
    try:
        if args.command == "images":
            job = ExtractJob(
                dataset=args.dataset,
                split=args.split,
                model=args.model,
                out_dir=args.out,
                data_root=args.data_root,
                batch_size=args.batch_size,
                device=args.device,
            )
            paths = extract_images(job)
        else:
            job = ExtractJob(
                dataset=args.dataset,
                split="test",
                model=args.model,
                out_dir=args.out,
                prompt_file=args.prompts,
                class_names_file=args.class_names,
                variant=args.variant,
                batch_size=args.batch_size,
                device=args.device,
            )
            paths = extract_texts(job)
    except (ExtractorError, OSError) as exc:
        print(f"extraction error: {exc}", file=sys.stderr)
        return EXIT_EXTRACT
    for kind, path in paths.items():
        print(f"{kind}: {path}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
