"""Command-line client for the experiment service.

By default the CLI talks to an in-process instance of the FastAPI app;
``--server http://host:port`` targets a running remote service instead.

Exit codes: 0 success, 2 validation failure, 3 runtime numeric failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import httpx

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    # the sync ASGI bridge from starlette drives the app in-process
    from starlette.testclient import TestClient

    from .service import app

    return TestClient(app)


def _fail_from(response: httpx.Response) -> int:
    detail = response.json().get("detail", response.text)
    if isinstance(detail, list):
        for violation in detail:
            print(f"error: {violation}", file=sys.stderr)
    else:
        print(f"error: {detail}", file=sys.stderr)
    if response.status_code == 422:
        return EXIT_VALIDATION
    return EXIT_NUMERIC


def cmd_validate(args, client: httpx.Client) -> int:
    payload = {"config_text": Path(args.config).read_text(), "seed": args.seed}
    res = client.post("/validate", json=payload)
    if res.status_code != 200:
        return _fail_from(res)
    body = res.json()
    if not body["valid"]:
        for violation in body["violations"]:
            print(f"invalid: {violation}", file=sys.stderr)
        return EXIT_VALIDATION
    print("config ok")
    return EXIT_OK


def cmd_run(args, client: httpx.Client) -> int:
    payload = {
        "config_text": Path(args.config).read_text(),
        "seed": args.seed,
        "out_dir": args.out,
    }
    res = client.post("/runs", json=payload)
    if res.status_code != 200:
        return _fail_from(res)
    body = res.json()
    print(
        f"{body['label']}: {body['episodes']} episodes in "
        f"{body['duration_s']:.1f}s -> {body['csv_path']}"
    )
    return EXIT_OK


def cmd_sweep(args, client: httpx.Client) -> int:
    payload = {
        "config_text": Path(args.config).read_text(),
        "seeds": [int(s) for s in args.seeds.split(",") if s],
        "modes": args.modes.split(",") if args.modes else None,
        "out_dir": args.out,
    }
    res = client.post("/sweep", json=payload)
    if res.status_code != 200:
        return _fail_from(res)
    for run in res.json()["runs"]:
        print(f"{run['label']}: {run['episodes']} episodes -> {run['csv_path']}")
    return EXIT_OK


def cmd_plot(args, client: httpx.Client) -> int:
    payload = {"csv_paths": args.csv, "window": args.window}
    res = client.post("/plot", json=payload)
    if res.status_code != 200:
        return _fail_from(res)
    Path(args.out).write_text(res.json()["svg"])
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="anorl")
    parser.add_argument("--server", help="remote service URL (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--out", help="output directory for CSV metrics")
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="check a config file")
    p_val.add_argument("--config", required=True)
    p_val.add_argument("--seed", type=int)
    p_val.set_defaults(func=cmd_validate)

    p_sweep = sub.add_parser("sweep", help="cartesian sweep over seeds/modes")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--seeds", required=True, help="comma-separated seeds")
    p_sweep.add_argument("--modes", help="comma-separated model modes")
    p_sweep.add_argument("--out")
    p_sweep.set_defaults(func=cmd_sweep)

    p_plot = sub.add_parser("plot", help="render reward curves to SVG")
    p_plot.add_argument("--out", required=True)
    p_plot.add_argument("--window", type=int, default=100)
    p_plot.add_argument("csv", nargs="+")
    p_plot.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    with _client(args.server) as client:
        return args.func(args, client)


if __name__ == "__main__":
    sys.exit(main())
