"""Command-line front end.

A thin client over the HTTP service: every subcommand builds a request,
sends it to an in-process application (or a remote one via --server), and
writes the returned CSV payloads to files. Logs go to stderr; only the fit
summary is printed to stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from pathlib import Path

log = logging.getLogger("uncertain_events.cli")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MISSING_INPUT = 2
EXIT_INSUFFICIENT_CODERS = 3
EXIT_BAD_BUNDLE = 4
EXIT_EMPTY_EVENTS = 5

_ERROR_CODE_EXITS = {
    "bad-bundle": EXIT_BAD_BUNDLE,
    "insufficient-coders": EXIT_INSUFFICIENT_CODERS,
    "empty-events": EXIT_EMPTY_EVENTS,
    "bad-survey": EXIT_MISSING_INPUT,
}

DEFAULT_FAMILIES = [
    f"{base}{mix}{shift}"
    for base in ("gumbel", "normal", "lognormal", "poisson", "negbin")
    for mix in ("", "-mix")
    for shift in ("", "-shift")
]


class CliError(Exception):
    def __init__(self, exit_code: int, message: str):
        self.exit_code = exit_code
        super().__init__(message)


def _client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=3600.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

        from .service.app import create_app

        return TestClient(create_app())


def _post(client, path: str, payload: dict) -> dict:
    response = client.post(path, json=payload)
    if response.status_code >= 400:
        detail = {}
        try:
            detail = response.json().get("detail", {})
        except ValueError:
            pass
        if isinstance(detail, dict) and "code" in detail:
            code = detail["code"]
            raise CliError(_ERROR_CODE_EXITS.get(code, EXIT_ERROR),
                           f"{code}: {detail.get('message', '')}")
        raise CliError(EXIT_ERROR, f"service error {response.status_code}: "
                                   f"{response.text[:500]}")
    return response.json()


def _read_input(path: str, kind: str) -> str:
    source = Path(path)
    if not source.is_file():
        raise CliError(EXIT_MISSING_INPUT, f"{kind} file not found: {path}")
    return source.read_text(encoding="utf-8")


def _read_bundle(path: str | None) -> dict | None:
    if path is None:
        return None
    source = Path(path)
    if not source.is_file():
        raise CliError(EXIT_BAD_BUNDLE, f"bundle file not found: {path}")
    try:
        return json.loads(source.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise CliError(EXIT_BAD_BUNDLE, f"cannot parse bundle {path}: {exc}")


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")
    log.info("wrote %s", path)


def _events_payload(path: str) -> list[dict]:
    from .errors import SchemaError
    from .predictor import read_events_csv

    try:
        events = read_events_csv(_read_input(path, "events"))
    except SchemaError as exc:
        raise CliError(EXIT_ERROR, f"bad events file: {exc}")
    if not events:
        raise CliError(EXIT_EMPTY_EVENTS, f"events file is empty: {path}")
    return [
        {
            "event_id": e.event_id,
            "reported_value": e.reported_value,
            "violence_type": e.violence_type,
            "country": e.country,
            "year": e.year,
            "context": e.context,
        }
        for e in events
    ]


def _parse_grid(text: str) -> list[int]:
    parts = [int(p) for p in text.split(":")]
    if len(parts) == 1:
        return parts
    lo, hi = parts[0], parts[1]
    step = parts[2] if len(parts) > 2 else 1
    return list(range(lo, hi + 1, step))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_fit(client, args) -> int:
    survey = _read_input(args.survey, "survey")
    payload = {
        "survey_csv": survey,
        "families": args.families.split(",") if args.families else DEFAULT_FAMILIES,
        "seed": args.seed,
        "population_size": args.population,
        "generations": args.generations,
        "threads": args.threads,
    }
    body = _post(client, "/fit", payload)
    out_dir = Path(args.out)
    _write(out_dir / "fits.csv", body["fits_csv"])
    print(f"fitted {body['n_fits']} (family x coder-distribution) cells, "
          f"{len(body['failures'])} failures")
    for entry in body["summary"]:
        print(f"  {entry['family']}: n={entry['n']} "
              f"median BAD={entry['median_bad']:.4f}")
    return EXIT_OK


def cmd_crossval(client, args) -> int:
    payload = {
        "survey_csv": _read_input(args.survey, "survey"),
        "fits_csv": _read_input(args.fits, "fits"),
        "tov": args.tov,
        "ivs": args.ivs,
        "enumerate_covariates": args.enumerate,
        "with_context": args.with_z,
        "w_method": args.w_method,
    }
    if args.families:
        payload["families"] = args.families.split(",")
    body = _post(client, "/crossval", payload)
    _write(Path(args.out), body["ranking_csv"])
    log.info("ranked %d configurations (%d skipped)",
             body["n_configurations"], len(body["skipped"]))
    return EXIT_OK


def cmd_predict(client, args) -> int:
    bundle = _read_bundle(args.bundle)
    if args.y is not None:
        body = _post(client, "/predict/pmf", {
            "reported_value": args.y,
            "violence_type": args.tov,
            "bundle": bundle,
            "max_quantile": args.max_quantile,
        })
        _write(Path(args.out or "pmf.csv"), body["csv"])
    else:
        body = _post(client, "/predict/curve", {
            "grid": _parse_grid(args.grid),
            "bundle": bundle,
        })
        _write(Path(args.out or "curve.csv"), body["csv"])
    return EXIT_OK


def cmd_draws(client, args) -> int:
    payload = {
        "events": _events_payload(args.events),
        "n": args.n,
        "seed": args.seed,
        "integer": not args.continuous,
        "bundle": _read_bundle(args.bundle),
    }
    body = _post(client, "/draws", payload)
    _write(Path(args.out), body["csv"])
    return EXIT_OK


def cmd_simulate(client, args) -> int:
    payload = {
        "events": _events_payload(args.events),
        "replicates": args.replicates,
        "seed": args.seed,
        "bundle": _read_bundle(args.bundle),
    }
    body = _post(client, "/simulate", payload)
    out_dir = Path(args.out)
    _write(out_dir / "totals.csv", body["totals_csv"])
    _write(out_dir / "summary.csv", body["summary_csv"])
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("uncertain_events.service.app:app", host=args.host,
                port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uncertain-events",
        description="Plausible-fatality distributions for reported conflict "
                    "events: fit, cross-validate, predict, draw, aggregate.",
    )
    parser.add_argument("--server", default=None,
                        help="base URL of a running service; default runs "
                             "the service in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="stage 1: fit families to a survey CSV")
    fit.add_argument("--survey", required=True)
    fit.add_argument("--families", default=None,
                     help="comma-separated labels, e.g. gumbel-mix,normal-mix "
                          "(default: all 20)")
    fit.add_argument("--seed", type=int, required=True)
    fit.add_argument("--population", type=int, default=100)
    fit.add_argument("--generations", type=int, default=100)
    fit.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                     help="parallel fit cells; results do not depend on it")
    fit.add_argument("--out", default=".", help="output directory")

    crossval = sub.add_parser("crossval",
                              help="leave-one-coder-out ranking of configurations")
    crossval.add_argument("--survey", required=True)
    crossval.add_argument("--fits", required=True)
    crossval.add_argument("--tov", default="sb",
                          choices=["sb", "ns", "os", "all"])
    crossval.add_argument("--families", default=None)
    crossval.add_argument("--ivs", default="y+D",
                          help="covariate set for every parameter "
                               "(none, y, D, z and + combinations)")
    crossval.add_argument("--enumerate", action="store_true",
                          help="search all per-parameter covariate combinations")
    crossval.add_argument("--with-z", action="store_true",
                          help="include context in the enumeration")
    crossval.add_argument("--w-method", default="irls", choices=["irls", "ols"])
    crossval.add_argument("--out", default="ranking.csv")

    predict = sub.add_parser("predict",
                             help="pmf table for one reported value, or the "
                                  "under-reporting curve over a grid")
    group = predict.add_mutually_exclusive_group(required=True)
    group.add_argument("--y", type=int, default=None,
                       help="reported value for a pmf table")
    group.add_argument("--grid", default=None,
                       help="curve grid as LO:HI[:STEP]")
    predict.add_argument("--tov", default="sb", choices=["sb", "ns", "os"])
    predict.add_argument("--bundle", default=None,
                         help="coefficient bundle JSON (default: shipped "
                              "state-based table, or UNCERTAIN_EVENTS_BUNDLE)")
    predict.add_argument("--max-quantile", type=float, default=0.9999)
    predict.add_argument("--out", default=None)

    draws = sub.add_parser("draws", help="per-event draw dataset")
    draws.add_argument("--events", required=True)
    draws.add_argument("--n", type=int, required=True, help="draws per event")
    draws.add_argument("--seed", type=int, required=True)
    draws.add_argument("--continuous", action="store_true",
                       help="raw continuous draws instead of integers")
    draws.add_argument("--bundle", default=None)
    draws.add_argument("--out", default="draws.csv")

    simulate = sub.add_parser("simulate",
                              help="distribution of the total over an event set")
    simulate.add_argument("--events", required=True)
    simulate.add_argument("--replicates", type=int, default=1000)
    simulate.add_argument("--seed", type=int, required=True)
    simulate.add_argument("--bundle", default=None)
    simulate.add_argument("--out", default=".", help="output directory")

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)

    return parser


_COMMANDS = {
    "fit": cmd_fit,
    "crossval": cmd_crossval,
    "predict": cmd_predict,
    "draws": cmd_draws,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    logging.getLogger("httpx").setLevel(logging.WARNING)
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        return cmd_serve(args)
    try:
        client = _client(args.server)
        try:
            return _COMMANDS[args.command](client, args)
        finally:
            client.close()
    except CliError as exc:
        log.error("%s", exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
