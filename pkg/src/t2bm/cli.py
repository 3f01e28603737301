"""Command-line front end.

Subcommands mirror the pipeline stages so each one can run standalone on
files: ``generate`` drives the whole workflow, ``validate``/``repair``
operate on building JSON, ``assess``/``export`` operate on voxel dumps,
and ``eval`` repeats generation and prints a contingency table.

Exit codes: 0 success; 1 startup/input error; 3 generation failure;
4 export failure.  ``validate`` exits 0 only when clean, and ``assess``
exits 0 only when the building is both complete and satisfying, so shell
pipelines can gate on correctness.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .assess import load_aliases
from .export import (
    EndpointUnreachable,
    export_command_script,
    export_voxel_dump,
    load_voxel_dump,
    place_via_http,
)
from .interlayer import ORIGIN, BlockPoint, ParseFailure, parse_document, serialize_document
from .llm import GenerationFailed, TransportError
from .pipeline import (
    ConfigError,
    PipelineConfig,
    _assess_grid,
    _requirements_for,
    run_eval,
    run_generate,
)
from .repair import (
    RegistryError,
    bundled_registry,
    load_registry,
    repair_document,
    validate_document,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_GENERATION = 3
EXIT_EXPORT = 4


def _parse_point(text: str) -> BlockPoint:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z got {text!r}")
    try:
        x, y, z = (int(p.strip()) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"coordinates must be integers: {text!r}")
    return BlockPoint(x, y, z)


def _add_pipeline_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", default="gpt-4")
    parser.add_argument("--base-url", default="https://api.openai.com/v1")
    parser.add_argument("--temperature", type=float, default=1.0)
    parser.add_argument("--max-attempts", type=int, default=3)
    parser.add_argument(
        "--no-refine",
        action="store_true",
        help="skip prompt refinement (the raw condition)",
    )
    parser.add_argument(
        "--fixtures",
        type=Path,
        default=None,
        help="directory of recorded responses; enables the offline transport",
    )
    parser.add_argument("--registry", type=Path, default=None)
    parser.add_argument("--aliases", type=Path, default=None)
    parser.add_argument("--prompts", type=Path, default=None, dest="prompt_dir")
    parser.add_argument(
        "--require",
        action="append",
        default=None,
        metavar="ID|GROUP",
        help="required material or alias group (repeatable); "
        "defaults derive from prompt keywords",
    )
    parser.add_argument(
        "--target",
        action="append",
        choices=("script", "dump", "http"),
        default=None,
        help="export targets (repeatable); default dump and script",
    )
    parser.add_argument("--endpoint", default="http://localhost:9000")
    parser.add_argument("--offset", type=_parse_point, default=ORIGIN)
    parser.add_argument("--batch-size", type=int, default=100)
    parser.add_argument("--gdpc-axes", action="store_true")


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    return PipelineConfig(
        model=args.model,
        base_url=args.base_url,
        temperature=args.temperature,
        max_attempts=args.max_attempts,
        refine=not args.no_refine,
        fixtures_dir=args.fixtures,
        registry_path=args.registry,
        alias_path=args.aliases,
        prompt_dir=args.prompt_dir,
        requirements=tuple(args.require or ()),
        targets=tuple(args.target or ("dump", "script")),
        endpoint=args.endpoint,
        offset=args.offset,
        batch_size=args.batch_size,
        gdpc_axes=args.gdpc_axes,
    )


def _load_registry_arg(path: Path | None):
    if path is None:
        return bundled_registry()
    if not path.is_file():
        raise ConfigError(f"registry path does not exist: {path}")
    return load_registry(path)


def _read_document(path: Path):
    if not path.is_file():
        raise ConfigError(f"input file does not exist: {path}")
    return parse_document(path.read_text(encoding="utf-8"), mode="strict")


def _cmd_generate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    try:
        config.validate_paths()
    except (ConfigError, RegistryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    out_dir = args.out
    if out_dir is None:
        stamp = time.strftime("%Y%m%d-%H%M%S")
        out_dir = Path("out") / f"{stamp}-pending"
    try:
        result = run_generate(args.prompt, config, out_dir=out_dir)
    except (GenerationFailed, TransportError) as exc:
        print(f"generation failed: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    except (EndpointUnreachable, OSError) as exc:
        print(f"export failed: {exc}", file=sys.stderr)
        return EXIT_EXPORT
    if args.out is None and result.out_dir is not None:
        # Fold the trace id into the directory name now that it is known.
        final = result.out_dir.with_name(
            result.out_dir.name.replace("pending", result.trace_id)
        )
        result.out_dir.rename(final)
        result.out_dir = final
    flags = f"C={str(result.completeness).lower()} S={str(result.satisfaction).lower()}"
    print(f"{result.trace_id} {flags} -> {result.out_dir}")
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    registry = _load_registry_arg(args.registry)
    doc = _read_document(args.file)
    violations = validate_document(doc, registry)
    for v in violations:
        print(f"{v.rule.value}: {v.path}: {v.message}")
    return EXIT_OK if not violations else EXIT_ERROR


def _cmd_repair(args: argparse.Namespace) -> int:
    registry = _load_registry_arg(args.registry)
    doc = _read_document(args.file)
    repaired, log = repair_document(doc, registry)
    for e in log.entries:
        print(f"{e.rule.value}: {e.path}: {e.before!r} -> {e.after!r}", file=sys.stderr)
    text = serialize_document(repaired)
    if args.out is not None:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_assess(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    config.start_point = args.start_point
    config.validate_paths()
    if not args.file.is_file():
        raise ConfigError(f"input file does not exist: {args.file}")
    grid = load_voxel_dump(args.file)
    reqs = _requirements_for(config, args.prompt or "")
    report = _assess_grid(grid, reqs, config)
    payload = {
        "completeness": report.completeness,
        "satisfaction": report.satisfaction,
        "requirements": list(reqs.required),
        "materials_found": sorted(report.materials_found),
        "main_structure_size": len(report.main_structure),
        "visited_count": report.visited_count,
        "prune_iterations": report.prune_iterations,
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out is not None:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK if report.completeness and report.satisfaction else EXIT_ERROR


def _cmd_export(args: argparse.Namespace) -> int:
    if not args.file.is_file():
        raise ConfigError(f"input file does not exist: {args.file}")
    grid = load_voxel_dump(args.file)
    target = args.target[0] if args.target else "script"
    try:
        if target == "script":
            out = args.out or args.file.with_suffix(".mcfunction")
            export_command_script(grid, offset=args.offset, path=out)
            print(out)
        elif target == "dump":
            out = args.out or args.file.with_suffix(".canonical.json")
            export_voxel_dump(grid, path=out)
            print(out)
        else:
            result = place_via_http(
                grid,
                endpoint=args.endpoint,
                offset=args.offset,
                batch_size=args.batch_size,
                gdpc_axes=args.gdpc_axes,
            )
            print(
                f"sent={result.sent} acknowledged={result.acknowledged} "
                f"failed={len(result.failed)}"
            )
            if result.failed:
                return EXIT_EXPORT
    except (EndpointUnreachable, OSError) as exc:
        print(f"export failed: {exc}", file=sys.stderr)
        return EXIT_EXPORT
    return EXIT_OK


def _cmd_eval(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    try:
        report = run_eval(args.prompt, args.trials, config, out_dir=args.out)
    except (ConfigError, RegistryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    sys.stdout.write(report.to_table())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="t2bm",
        description="Generate, repair, render, assess, and export Minecraft "
        "buildings from text prompts.",
    )
    parser.add_argument(
        "--config",
        type=Path,
        default=None,
        help="JSON file of default option values (flags still win)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_generate = sub.add_parser("generate", help="run the full pipeline")
    p_generate.add_argument("--prompt", required=True)
    p_generate.add_argument("--out", type=Path, default=None)
    _add_pipeline_options(p_generate)
    p_generate.set_defaults(func=_cmd_generate)

    p_validate = sub.add_parser("validate", help="report repairable defects")
    p_validate.add_argument("file", type=Path)
    p_validate.add_argument("--registry", type=Path, default=None)
    p_validate.set_defaults(func=_cmd_validate)

    p_repair = sub.add_parser("repair", help="repair a building document")
    p_repair.add_argument("file", type=Path)
    p_repair.add_argument("--registry", type=Path, default=None)
    p_repair.add_argument("--out", type=Path, default=None)
    p_repair.set_defaults(func=_cmd_repair)

    p_assess = sub.add_parser("assess", help="assess a voxel dump")
    p_assess.add_argument("file", type=Path)
    p_assess.add_argument("--prompt", default=None)
    p_assess.add_argument("--start-point", type=_parse_point, default=None)
    p_assess.add_argument("--out", type=Path, default=None)
    _add_pipeline_options(p_assess)
    p_assess.set_defaults(func=_cmd_assess)

    p_export = sub.add_parser("export", help="export a voxel dump")
    p_export.add_argument("file", type=Path)
    p_export.add_argument("--out", type=Path, default=None)
    _add_pipeline_options(p_export)
    p_export.set_defaults(func=_cmd_export)

    p_eval = sub.add_parser("eval", help="repeat generation and tabulate flags")
    p_eval.add_argument("--prompt", required=True)
    p_eval.add_argument("--trials", type=int, required=True)
    p_eval.add_argument("--out", type=Path, default=None)
    _add_pipeline_options(p_eval)
    p_eval.set_defaults(func=_cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)

    # A config file supplies defaults; explicit flags override them.
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path, default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config is not None:
        try:
            defaults = json.loads(known.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config file: {exc}", file=sys.stderr)
            return EXIT_ERROR
        for sub_action in parser._subparsers._group_actions:  # type: ignore[union-attr]
            for sub_parser in sub_action.choices.values():
                sub_parser.set_defaults(
                    **{
                        k: v
                        for k, v in defaults.items()
                        if any(a.dest == k for a in sub_parser._actions)
                    }
                )

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, RegistryError, ParseFailure, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
