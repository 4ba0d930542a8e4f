"""Command-line entry point: load config, build the app, serve it."""

from __future__ import annotations

import argparse
import sys

import uvicorn

from . import __version__
from .app import create_app
from .config import SidecarConfig, SidecarConfigError


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="hallu-sidecar",
        description="Reference inference service for the hallu-audit wire protocol.",
    )
    parser.add_argument("--version", action="version", version=f"hallu-sidecar {__version__}")
    parser.add_argument("--config", help="JSON config file; defaults to builtin models")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8100)
    parser.add_argument("--device", help="override the configured device (cpu, cuda, ...)")
    args = parser.parse_args(argv)

    try:
        config = SidecarConfig.from_file(args.config) if args.config else SidecarConfig()
        if args.device:
            config = SidecarConfig(
                models=dict(config.models),
                device=args.device,
                max_batch_size=config.max_batch_size,
                max_text_length=config.max_text_length,
            )
        app = create_app(config, preload=False)
    except SidecarConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


if __name__ == "__main__":
    sys.exit(main())
