"""Batch entry points wrapping the library: synthesis, restoration, evaluation.

Exit codes: 0 ok, 1 usage error, 2 I/O error, 3 backend failure. Progress
goes to stderr; machine output goes to files only.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import ballots as ballots_mod
from . import corpus, degrade, imaging, pipeline
from .backends import build_default_registry, load_backend_file
from .errors import BackendError, ParameterError, PhotoRestoreError
from .presets import apply_overrides, get_preset, load_preset_catalog

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_BACKEND = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract wants 1
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="photorestore",
                     description="Old-photo degradation synthesis and staged restoration")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("degrade", help="synthesize the four-tier degraded dataset")
    p.add_argument("--src", required=True, help="directory of clean source images")
    p.add_argument("--out", required=True, help="output directory for tiers + manifest")
    p.add_argument("--recipe", help="JSON recipe file (defaults built in)")
    p.add_argument("--count", type=int, required=True, help="number of images to degrade")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)

    p = sub.add_parser("restore", help="run the automatic pipeline on one image")
    p.add_argument("--input", required=True)
    p.add_argument("--mask", help="damage mask PNG (single channel, 255=restore)")
    p.add_argument("--preset", default="default")
    p.add_argument("--presets-file", help="JSON preset catalog extending the built-ins")
    p.add_argument("--backends", help="JSON descriptor file for external backends")
    p.add_argument("--out", required=True)
    p.add_argument("--transcript", help="directory to persist the session transcript")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--set", action="append", default=[], metavar="STAGE.FIELD=VALUE",
                   help="override preset values, e.g. denoise.strength=0.05")

    p = sub.add_parser("eval", help="score an automatic run over a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--preset", default="default")
    p.add_argument("--presets-file")
    p.add_argument("--backends")
    p.add_argument("--pad", type=int, default=2, help="mask dilation radius")
    p.add_argument("--out", required=True, help="CSV table path")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--set", action="append", default=[], metavar="STAGE.FIELD=VALUE")

    p = sub.add_parser("ballots", help="aggregate human-preference ballots")
    p.add_argument("--in", dest="input", required=True, help="ballot CSV")
    p.add_argument("--out", required=True, help="report text file")

    p = sub.add_parser("serve", help="run the HTTP session service")
    p.add_argument("--addr", default="127.0.0.1:8000")
    p.add_argument("--sessions", required=True, help="session root directory")
    p.add_argument("--backends", help="JSON descriptor file for external backends")
    p.add_argument("--presets-file")
    p.add_argument("--timeout", type=float, help="external backend timeout (seconds)")

    return parser


def _load_preset(args):
    catalog = load_preset_catalog(getattr(args, "presets_file", None))
    preset = get_preset(args.preset, catalog)
    overrides = list(getattr(args, "set", []))
    if getattr(args, "seed", 0):
        overrides += [f"{stage}.seed={args.seed}" for stage in pipeline.STAGE_ORDER]
    if overrides:
        preset = apply_overrides(preset, overrides)
    return preset


def _registry(args):
    registry = build_default_registry()
    backend_file = getattr(args, "backends", None)
    if backend_file:
        load_backend_file(registry, backend_file)
    return registry


def _cmd_degrade(args) -> int:
    recipe = (degrade.DegradationRecipe.from_file(args.recipe)
              if args.recipe else degrade.DegradationRecipe())
    manifest = degrade.build_dataset(args.src, args.out, recipe,
                                     count=args.count, seed=args.seed,
                                     jobs=args.jobs)
    print(f"manifest: {manifest}", file=sys.stderr)
    return EXIT_OK


def _cmd_restore(args) -> int:
    img = imaging.load_png(args.input)
    mask = None
    if args.mask:
        mask = imaging.load_png(args.mask)
        if mask.ndim != 2:
            mask = imaging.to_grayscale(mask)
        imaging.validate_mask(mask)
    preset = _load_preset(args)
    session = pipeline.run_auto_session(img, preset, mask=mask,
                                        registry=_registry(args),
                                        root=args.transcript)
    imaging.save_png(session.result(), args.out)
    print(f"restored: {args.out}", file=sys.stderr)
    return EXIT_OK


def _cmd_eval(args) -> int:
    preset = _load_preset(args)
    table = corpus.corpus_eval(args.manifest, preset, pad_radius=args.pad,
                               out_path=args.out, registry=_registry(args),
                               jobs=args.jobs)
    print(f"evaluation table: {table}", file=sys.stderr)
    return EXIT_OK


def _cmd_ballots(args) -> int:
    results = ballots_mod.aggregate_file(args.input)
    report = ballots_mod.format_report(results)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report, encoding="utf-8")
    print(report, end="", file=sys.stderr)
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, build_service

    host, _, port = args.addr.rpartition(":")
    config = ServiceConfig(
        session_root=Path(args.sessions),
        backend_file=Path(args.backends) if args.backends else None,
        preset_file=Path(args.presets_file) if args.presets_file else None,
        external_timeout_s=args.timeout,
    )
    app = build_service(config)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return EXIT_OK


_COMMANDS = {
    "degrade": _cmd_degrade,
    "restore": _cmd_restore,
    "eval": _cmd_eval,
    "ballots": _cmd_ballots,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        diagnostics = getattr(exc, "diagnostics", "")
        if diagnostics:
            print(diagnostics, file=sys.stderr)
        return EXIT_BACKEND
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, PhotoRestoreError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
