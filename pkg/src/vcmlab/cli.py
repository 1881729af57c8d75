"""Command line entry points: simulate, estimate, analyze, serve."""

from __future__ import annotations

import argparse
import fnmatch
import glob
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .econ import build_design, tobit_fit
from .errors import DomainError, StructuralError
from .report import build_report, render_report
from .simulate import parse_run_spec, read_log_jsonl, run_batch

BIND_ADDRESS_VAR = "VCMLAB_BIND"


def _cmd_simulate(args: argparse.Namespace) -> int:
    spec = parse_run_spec(args.config)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    if args.replications is not None:
        spec = replace(spec, replications=args.replications)
    result = run_batch(spec, out_dir=args.out)
    print(f"wrote {len(result.logs)} session logs to {args.out}")
    print(f"round-1 mean {result.per_round_means[0]:.2f}, "
          f"final-round mean {result.per_round_means[-1]:.2f}")
    return 0


def _load_logs(pattern: str) -> list:
    paths = sorted(glob.glob(pattern))
    if not paths:
        raise StructuralError(f"no logs match {pattern!r}")
    return [read_log_jsonl(p) for p in paths]


def _cmd_estimate(args: argparse.Namespace) -> int:
    logs = _load_logs(args.logs)
    rows = build_design(logs)
    endowment = logs[0].config.endowment_e
    fit = tobit_fit(rows, lower=0.0, upper=float(endowment))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"cell: {args.cell}", f"n_logs: {len(logs)}"]
    for key, value in fit.as_dict().items():
        if key == "coefficients":
            for name, stats in value.items():
                lines.append(f"{name}: {stats['estimate']!r}")
                lines.append(f"{name}_se: {stats['clustered_se']!r}")
        elif key == "sigma":
            lines.append(f"sigma: {value['estimate']!r}")
            lines.append(f"sigma_se: {value['clustered_se']!r}")
        else:
            lines.append(f"{key}: {value!r}")
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    csv_path = out.with_suffix(".csv") if out.suffix != ".csv" else out.with_suffix(".table.csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("coefficient,estimate,clustered_se\n")
        for name, b, s in zip(fit.names, fit.params, fit.se):
            fh.write(f"{name},{float(b)!r},{float(s)!r}\n")
        fh.write(f"sigma,{fit.sigma_hat!r},{fit.sigma_se!r}\n")
    print(f"fit written to {out} and {csv_path} "
          f"(N={fit.n_obs}, clusters={fit.n_clusters}, LLF={fit.llf:.2f})")
    return 0


def _parse_cells(spec: str) -> dict[str, str]:
    cells: dict[str, str] = {}
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise DomainError(
                f"bad cell spec {part!r}; expected label=filename-pattern"
            )
        label, pattern = part.split("=", 1)
        cells[label.strip()] = pattern.strip()
    if not cells:
        raise DomainError("empty --cells spec")
    return cells


def _parse_rounds(spec: str | None) -> tuple[int, int] | None:
    if spec is None:
        return None
    try:
        lo, hi = spec.split("..")
        return int(lo), int(hi)
    except ValueError:
        raise DomainError(f"bad --rounds {spec!r}; expected a..b") from None


def _cmd_analyze(args: argparse.Namespace) -> int:
    paths = sorted(glob.glob(args.logs))
    if not paths:
        raise StructuralError(f"no logs match {args.logs!r}")
    cells = _parse_cells(args.cells)
    cell_logs: dict[str, list] = {label: [] for label in cells}
    for path in paths:
        name = os.path.basename(path)
        for label, pattern in cells.items():
            if fnmatch.fnmatch(name, pattern):
                cell_logs[label].append(read_log_jsonl(path))
    empty = [label for label, logs in cell_logs.items() if not logs]
    if empty:
        raise StructuralError(f"cells with no matching logs: {empty}")
    comparisons = [tuple(c.split(":", 1)) for c in args.compare or []]
    report = build_report(
        cell_logs,
        comparisons=comparisons,
        rounds_window=_parse_rounds(args.rounds),
    )
    paths_written = render_report(report, args.out)
    for p in paths_written:
        print(f"wrote {p}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server import SessionRuntime, create_app, parse_serve_config

    serve_config = parse_serve_config(args.config)
    runtime = SessionRuntime.from_serve_config(serve_config, args.out)
    app = create_app(runtime)
    host = os.environ.get(BIND_ADDRESS_VAR, "127.0.0.1")
    print(f"session {runtime.state.session_id}: phase {runtime.state.phase.value}, "
          f"tokens in {Path(args.out) / 'tokens.json'}")
    uvicorn.run(app, host=host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vcmlab",
        description="public-goods laboratory: simulate sessions, estimate, analyze, serve",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a batch of simulated sessions")
    p_sim.add_argument("--config", required=True, help="run configuration JSON file")
    p_sim.add_argument("--out", required=True, help="output directory for logs")
    p_sim.add_argument("--seed", type=int, default=None, help="override the master seed")
    p_sim.add_argument("--replications", type=int, default=None,
                       help="override the replication count")
    p_sim.set_defaults(func=_cmd_simulate)

    p_est = sub.add_parser("estimate", help="fit the censored regression on logs")
    p_est.add_argument("--logs", required=True, help="glob of session log JSONL files")
    p_est.add_argument("--cell", required=True, help="label recorded in the output")
    p_est.add_argument("--out", required=True, help="flat key-value output file")
    p_est.set_defaults(func=_cmd_estimate)

    p_ana = sub.add_parser("analyze", help="full report over cells of logs")
    p_ana.add_argument("--logs", required=True, help="glob of session log JSONL files")
    p_ana.add_argument("--cells", required=True,
                       help="semicolon list of label=filename-pattern")
    p_ana.add_argument("--out", required=True, help="output directory")
    p_ana.add_argument("--rounds", default=None, help="restrict regressions to rounds a..b")
    p_ana.add_argument("--compare", action="append", default=None,
                       metavar="CELL_A:CELL_B",
                       help="coefficient comparison between two cells (repeatable)")
    p_ana.set_defaults(func=_cmd_analyze)

    p_srv = sub.add_parser("serve", help="run a live session server")
    p_srv.add_argument("--config", required=True, help="serve configuration JSON file")
    p_srv.add_argument("--port", type=int, required=True)
    p_srv.add_argument("--out", required=True,
                       help="directory for snapshots, tokens, and the final log")
    p_srv.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, StructuralError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
