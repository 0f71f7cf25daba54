# Copyright (c) 2025, hypocoerce contributors.  All rights reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Command-line front door.

    hypocoerce constants --geometry heisenberg --beta 3
    hypocoerce check grad --geometry abelian --beta 1 --observable x1 --t 1
    hypocoerce lattice speed --config speed.yaml integrator.n_paths=500
    hypocoerce replay results/exp_003/manifest.json --workers 1

Trailing ``key=value`` arguments are Hydra overrides applied after the config
file and the flags. Exit codes: 0 all checks hold or are inconclusive,
1 a check is violated, 2 invalid input, 3 numerical blowup.
"""

import argparse
import json
import logging
import os
import sys
from typing import Any, Optional, Sequence

from rich.console import Console
from rich.table import Table

from hypocoerce.experiments.outputs import REPORT_FILE, load_manifest
from hypocoerce.experiments.run import exit_code_for, replay_config, resolve_config, run
from hypocoerce.utils.logger import configure_rich_logging

logger = logging.getLogger(__name__)

CHECK_KINDS = ("grad", "lq", "lyapunov", "poincare", "expmoment")
LATTICE_COMMANDS = {"constants": "lattice_constants", "speed": "speed", "cauchy": "cauchy", "ergodicity": "ergodicity"}
# kinds whose whole report is printed to stdout
PRINTED_KINDS = ("geometry", "constants", "lattice_constants")


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="experiment YAML/JSON file")
    parser.add_argument("--workers", type=int, help="path-block workers (capped by HYPOCOERCE_WORKERS)")
    parser.add_argument("--output-dir", help="run directory (default: a new results/exp_NNN)")
    parser.add_argument("--log-level", default="INFO", help="logging level")


def _model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--geometry", help="catalog geometry")
    parser.add_argument("--dim", type=int, help="dimension for the abelian geometry")
    parser.add_argument("--beta", help="dilation drift strength β (exact rationals such as 5/2 are kept)")
    parser.add_argument("--observable", help="observable expression in x1..xN")
    parser.add_argument("--t", type=float, help="time")
    parser.add_argument("--t-grid", type=_floats, help="comma-separated time grid")
    parser.add_argument("--x", type=_floats, help="comma-separated starting point")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--n-paths", type=int)
    parser.add_argument("--dt", type=float)
    parser.add_argument("--q", type=float, help="exponent of the l_q bound")
    parser.add_argument("--variant", choices=["standard", "optimal", "g_zero", "pointwise"])


def _json_arg(text: str) -> Any:
    """Inline JSON, or the path of a JSON file."""
    if os.path.isfile(text):
        with open(text) as f:
            return json.load(f)
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise argparse.ArgumentTypeError(f"not a JSON value or file: {text!r}") from e


def _lattice_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--d", type=int, help="lattice dimension")
    parser.add_argument("--box", type=int, help="half width of the box B (lattice.active_radius must not exceed it)")
    parser.add_argument("--lambda", dest="support", type=_json_arg, help="support Λ(f) as JSON, e.g. [[0],[1]]")
    parser.add_argument("--range", type=int, help="interaction range R")
    parser.add_argument("--amplitude", help="interaction amplitude a")
    parser.add_argument("--stencil", type=_json_arg, help='J_v as JSON or a JSON file, e.g. {"1": 1, "-1": 1}')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hypocoerce", description=__doc__.splitlines()[0])
    commands = parser.add_subparsers(dest="command", required=True)

    for name in ("geometry", "constants", "simulate", "invariant"):
        sub = commands.add_parser(name)
        _common_flags(sub)
        _model_flags(sub)

    check = commands.add_parser("check").add_subparsers(dest="check", required=True)
    for name in CHECK_KINDS:
        sub = check.add_parser(name)
        _common_flags(sub)
        _model_flags(sub)

    lattice = commands.add_parser("lattice").add_subparsers(dest="lattice", required=True)
    for name in LATTICE_COMMANDS:
        sub = lattice.add_parser(name)
        _common_flags(sub)
        _model_flags(sub)
        _lattice_flags(sub)

    replay = commands.add_parser("replay")
    replay.add_argument("manifest", help="manifest.json of an earlier run")
    _common_flags(replay)
    return parser


def kind_of(args: argparse.Namespace) -> str:
    if args.command == "check":
        return args.check
    if args.command == "lattice":
        return LATTICE_COMMANDS[args.lattice]
    return args.command


FLAG_PATHS: dict[str, tuple[str, ...]] = {
    "geometry": ("model", "geometry"),
    "dim": ("model", "dim"),
    "beta": ("model", "beta"),
    "observable": ("experiment", "observable"),
    "t": ("experiment", "t"),
    "t_grid": ("experiment", "t_grid"),
    "x": ("experiment", "x"),
    "q": ("experiment", "q"),
    "variant": ("experiment", "variant"),
    "seed": ("integrator", "seed"),
    "n_paths": ("integrator", "n_paths"),
    "dt": ("integrator", "dt"),
    "output_dir": ("output", "dir"),
    "d": ("lattice", "d"),
    "box": ("lattice", "half_width"),
    "support": ("lattice", "support"),
    "range": ("lattice", "coupling", "range"),
    "amplitude": ("lattice", "coupling", "amplitude"),
    "stencil": ("lattice", "coupling", "stencil"),
    "workers": ("workers",),
}


def flag_layer(args: argparse.Namespace) -> dict[str, Any]:
    """Nested config values set through flags."""
    layer: dict[str, Any] = {}
    for flag, path in FLAG_PATHS.items():
        value = getattr(args, flag, None)
        if value is None:
            continue
        node = layer
        for key in path[:-1]:
            node = node.setdefault(key, {})
        node[path[-1]] = value
    return layer


def _print_summary(console: Console, manifest: Any, run_dir: str) -> None:
    table = Table(title=f"{manifest['kind']} checks")
    table.add_column("Check", style="dim")
    table.add_column("t", style="cyan")
    table.add_column("Verdict", style="bold")
    colours = {"holds": "green", "violated": "red", "inconclusive": "yellow"}
    for v in manifest["verdicts"]:
        colour = colours.get(v["verdict"], "white")
        table.add_row(str(v["kind"]), str(v["t"]), f"[{colour}]{v['verdict']}[/{colour}]")
    if manifest["verdicts"]:
        console.print(table)
    if manifest["kind"] in PRINTED_KINDS:
        with open(os.path.join(run_dir, REPORT_FILE)) as f:
            console.print_json(json.dumps(json.load(f)))


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args, overrides = parser.parse_known_args(argv)
    unknown = [o for o in overrides if o.startswith("-")]
    if unknown:
        parser.error(f"unrecognized arguments: {' '.join(unknown)}")
    configure_rich_logging(args.log_level)
    console = Console()

    try:
        if args.command == "replay":
            manifest = load_manifest(args.manifest)
            if args.workers is not None:
                manifest["config"]["workers"] = args.workers
            cfg = replay_config(manifest, args.output_dir)
            if overrides:
                cfg = resolve_config(cfg["kind"], user=dict(cfg), overrides=overrides)
            result = run(cfg, replay_of=os.path.abspath(args.manifest))
        else:
            cfg = resolve_config(kind_of(args), args.config, overrides, user=flag_layer(args))
            result = run(cfg)
    except Exception as e:
        code = exit_code_for(e)
        if code is None:
            raise
        logger.error(f"{type(e).__name__}: {e}")
        return code

    _print_summary(console, result, result["run_dir"])
    return result["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
