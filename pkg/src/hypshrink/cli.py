"""Command line entry point for HypShrink."""

# Copyright 2023 Google LLC
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import argparse
import logging

from typing import Optional, Sequence

from hypshrink.errors import ConfigurationError, HypShrinkError
from hypshrink.hypshrink import HypShrink

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypshrink",
        description="Shrinking target experiments on hyperbolic manifolds.")
    subparsers = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("run", "Validate the config, run its experiment and write results."),
        ("validate", "Print config errors and hypothesis warnings."),
    ):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument(
            "config",
            nargs="?",
            default=None,
            help="INI config file; packaged defaults fill missing keys.",
        )
        sub.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="SECTION.key=value",
            help="Override one config key. Repeatable.",
        )
        sub.add_argument("--seed", type=int, default=None)
        sub.add_argument("--workers", type=int, default=None)
        sub.add_argument(
            "--disable",
            default=None,
            help="Comma separated warning codes or names to silence.",
        )
        sub.add_argument("--output", default=None, help="Data file path.")
        sub.add_argument(
            "--format", dest="output_format", default=None,
            choices=("csv", "jsonl"))
        sub.add_argument(
            "--quiet", action="store_true",
            help="Skip the per-key aggregate log.")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    try:
        hyp = HypShrink(
            config_file=args.config,
            overrides=args.overrides,
            seed=args.seed,
            workers=args.workers,
            disable_rules=args.disable,
            output_file=args.output,
            output_format=args.output_format,
            verbose=not args.quiet,
        )

        if args.command == "validate":
            diagnostics = hyp.validate()
            if any(d.severity == "error" for d in diagnostics):
                return EXIT_CONFIG

            return EXIT_OK

        hyp.run()

    except ConfigurationError as err:
        logger.error("Configuration error: %s", err)
        return EXIT_CONFIG

    except HypShrinkError as err:
        logger.error("%s: %s", type(err).__name__, err)
        return EXIT_NUMERIC

    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
