"""Command-line entry point: run sessions headless, render plots, serve.

Exit codes: 0 ok, 2 bad configuration, 3 diverged run, 4 I/O failure.
Flags override config-file values; the effective config is echoed into
the log header.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import (
    ConfigError,
    config_from_dict,
    config_to_dict,
    default_config_for_task,
)
from .logio import dumps, read_jsonl
from .plot import render_cloud_svg
from .service import serve
from .session import run_session

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_IO = 4


def _on_off(value: str) -> bool:
    return value == "on"


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--task", help="task kind (starts from that task's defaults)")
    p.add_argument("--layers", help="comma-separated width chain, e.g. 20,20,20")
    p.add_argument("--lr", type=float, help="initial learning rate")
    p.add_argument("--batch-size", type=int)
    p.add_argument("--epochs", type=int, help="max epochs")
    p.add_argument("--seed", type=int)
    p.add_argument("--bound-cadence", type=int)
    p.add_argument("--max-degree", type=int)
    p.add_argument("--guidance", choices=["on", "off"])
    p.add_argument("--use-bias", choices=["on", "off"])
    p.add_argument("--monotone", choices=["on", "off"])
    p.add_argument("--rcond", type=float)
    p.add_argument("--throttle-ms", type=float)
    p.add_argument("--out", help="log path prefix (writes <out>.jsonl and <out>.csv)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="traincert",
        description="Train small networks under live least-squares certification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a session headless and print a summary")
    _add_run_flags(p_run)

    p_plot = sub.add_parser("plot", help="render a run log to an SVG cloud figure")
    p_plot.add_argument("--log", required=True, help="JSONL run log")
    p_plot.add_argument("--out", required=True, help="output SVG path")
    p_plot.add_argument(
        "--linear", action="store_true", help="linear loss axis (default log)"
    )
    p_plot.add_argument(
        "--envelope",
        action="store_true",
        help="overlay the running minimum of the strongest bound",
    )

    p_serve = sub.add_parser("serve", help="run a session behind the monitor service")
    _add_run_flags(p_serve)
    p_serve.add_argument("--port", type=int, default=8787)
    p_serve.add_argument("--host", default="127.0.0.1")
    return parser


def _config_dict_from_args(args) -> dict:
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            try:
                base = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError("config", f"not valid JSON: {exc}") from None
        if not isinstance(base, dict):
            raise ConfigError("config", "top level must be an object")
        if args.task:
            base.setdefault("task", {})["kind"] = args.task
    elif args.task:
        base = config_to_dict(default_config_for_task(args.task))
    else:
        raise ConfigError("config", "need --config or --task")

    if args.layers is not None:
        try:
            layers = [int(v) for v in args.layers.split(",") if v != ""]
        except ValueError:
            raise ConfigError(
                "network.layers", f"not a comma-separated int list: {args.layers!r}"
            ) from None
        base.setdefault("network", {})["layers"] = layers
    if args.lr is not None:
        base.setdefault("optimizer", {})["eta0"] = args.lr
    if args.batch_size is not None:
        base["batch_size"] = args.batch_size
    if args.epochs is not None:
        base["max_epochs"] = args.epochs
    if args.seed is not None:
        base["seed"] = args.seed
    if args.bound_cadence is not None:
        base["bound_cadence"] = args.bound_cadence
    if args.max_degree is not None:
        base["max_degree"] = args.max_degree
    if args.guidance is not None:
        base.setdefault("guidance", {})["enabled"] = _on_off(args.guidance)
    if args.use_bias is not None:
        base.setdefault("network", {})["use_bias"] = _on_off(args.use_bias)
    if args.monotone is not None:
        base["monotone"] = _on_off(args.monotone)
    if args.rcond is not None:
        base["rcond"] = args.rcond
    if args.throttle_ms is not None:
        base["throttle_ms"] = args.throttle_ms
    if args.out is not None:
        base.setdefault("outputs", {})["jsonl_path"] = args.out + ".jsonl"
        base.setdefault("outputs", {})["csv_path"] = args.out + ".csv"
    return base


def _cmd_run(args) -> int:
    try:
        config = config_from_dict(_config_dict_from_args(args))
        result = run_session(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(dumps(result.summary()))
    return EXIT_DIVERGED if result.diverged else EXIT_OK


def _cmd_plot(args) -> int:
    try:
        _, records = read_jsonl(args.log)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"bad run log: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    svg = render_cloud_svg(records, log_scale=not args.linear, envelope=args.envelope)
    try:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(svg)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _cmd_serve(args) -> int:
    try:
        config = config_from_dict(_config_dict_from_args(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        server = serve(config, host=args.host, port=args.port)
    except OSError as exc:
        print(f"cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return EXIT_IO
    print(dumps({"url": f"http://{args.host}:{server.port}", "port": server.port}))
    sys.stdout.flush()
    try:
        server.wait_for_run()
        # let open streams deliver the terminal event before tearing down
        import time

        time.sleep(0.3)
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
    result = server.service.result
    if result is not None and result.diverged:
        return EXIT_DIVERGED
    if server.service.error is not None:
        print(f"session error: {server.service.error}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "plot":
        return _cmd_plot(args)
    return _cmd_serve(args)


if __name__ == "__main__":
    sys.exit(main())
