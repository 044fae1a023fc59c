"""
Command-line interface.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 I/O error.
CSV output is preceded by ``#`` metadata lines (version, command, effective
config); nothing time-dependent is written, so reruns are byte-identical.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__, asymptotics, cycle_core, poisson_limit, sampler, verify
from .config import FORMATS, RunConfig

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _common(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("run configuration")
    g.add_argument("--config", type=Path, help="JSON file with RunConfig fields")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--workers", type=_positive, default=None)
    g.add_argument("--format", choices=FORMATS, default=None)
    g.add_argument("--output", type=Path, help="write to this file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="permfix", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--version", action="version", version=f"permfix {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exact", help="exact i(n, k) as a reduced fraction")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--k", type=_positive, required=True)
    _common(p)

    p = sub.add_parser("limit", help="i(inf, k) by exact DP or Monte Carlo")
    p.add_argument("--k", type=_positive, required=True)
    p.add_argument("--method", choices=("dp", "mc"), default="dp")
    p.add_argument("--samples", type=_positive, default=1_000_000)
    p.add_argument("--extended", action="store_true", default=None,
                   help="run the DP in mpmath extended precision")
    _common(p)

    p = sub.add_parser("estimate", help="Monte Carlo estimate of i(n, k)")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--k", type=_positive, required=True)
    p.add_argument("--samples", type=_positive, default=1_000_000)
    _common(p)

    p = sub.add_parser("el", help="E|L(X_k)|: Monte Carlo, or exact brackets for k <= 8")
    p.add_argument("--k", type=_positive)
    p.add_argument("--k-min", type=_positive)
    p.add_argument("--k-max", type=_positive)
    p.add_argument("--geometric", type=float, default=2.0)
    p.add_argument("--method", choices=("mc", "exact"), default="mc")
    p.add_argument("--samples", type=_positive, default=200_000)
    _common(p)

    p = sub.add_parser("scan", help="normalised i(r k, k) over a geometric k grid")
    p.add_argument("--k-min", type=_positive, required=True)
    p.add_argument("--k-max", type=_positive, required=True)
    p.add_argument("--geometric", type=float, default=2.0)
    p.add_argument("--n-ratio", type=_positive, default=2)
    p.add_argument("--samples", type=_positive, default=200_000)
    _common(p)

    p = sub.add_parser("fit", help="log-log decay exponent of a scan CSV")
    p.add_argument("--input", type=Path, required=True)
    _common(p)

    p = sub.add_parser("transitive", help="i(n, n/2) as a transitive-subgroup witness")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--samples", type=_positive, default=200_000)
    _common(p)

    p = sub.add_parser("verify", help="run verification suites")
    p.add_argument("--suite", choices=verify.SUITES + ("all",), default="all")
    p.add_argument("--n-max", type=_positive, default=40, help="sieve suite bound")
    p.add_argument("--sieve2-n-max", type=_positive, default=12)
    p.add_argument("--cauchy-n-max", type=_positive, default=10)
    p.add_argument("--oracle-n-max", type=_positive, default=8)
    p.add_argument("--samples", type=_positive, default=1_000_000, help="moments suite samples")
    p.add_argument("--instances", type=_positive, default=1000, help="cycle lemma instances")
    p.add_argument("--sumd-j-max", type=_positive, default=4)
    p.add_argument("--quiet", action="store_true", help="print only failures and summaries")
    _common(p)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.load(args.config).to_dict() if args.config else RunConfig().to_dict()
    for key in ("seed", "workers", "format"):
        if getattr(args, key, None) is not None:
            cfg[key] = getattr(args, key)
    if getattr(args, "extended", None):
        cfg["limit_extended"] = True
    return RunConfig.from_dict(cfg)


def _meta(command: str, cfg: RunConfig, **params) -> dict:
    return {"version": __version__, "command": command, "seed": cfg.seed,
            "params": params, "config": cfg.to_dict()}


def _meta_lines(meta: dict) -> list[str]:
    return [f"permfix {meta['version']}", f"command={meta['command']}", f"seed={meta['seed']}",
            "params=" + json.dumps(meta["params"], sort_keys=True),
            "config=" + json.dumps(meta["config"], sort_keys=True)]


def _csv(meta: dict, header: list[str], rows: list[list]) -> str:
    out = [f"# {line}" for line in _meta_lines(meta)]
    out.append(",".join(header))
    out.extend(",".join(_cell(v) for v in row) for row in rows)
    return "\n".join(out) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json(meta: dict, payload) -> str:
    return json.dumps({"meta": meta, **payload}, sort_keys=True, indent=1) + "\n"


def _table(cfg: RunConfig, meta: dict, header: list[str], rows: list[list]) -> str:
    if cfg.format == "json":
        return _json(meta, {"rows": [dict(zip(header, r)) for r in rows]})
    return _csv(meta, header, rows)


def _scan_rows(rows: list[asymptotics.ScanRow]) -> list[list]:
    return [[r.k, "inf" if r.n is None else r.n, r.samples, r.estimate, r.stderr, r.normalized]
            for r in rows]


def cmd_exact(args, cfg: RunConfig) -> str:
    n, k = args.n, args.k
    if not 1 <= k <= n // 2:
        raise UsageError(f"need 1 <= k <= n/2 (got n={n}, k={k}); i(n, n-k) = i(n, k)")
    if n > cycle_core.EXACT_N_MAX:
        raise UsageError(f"exact computation is limited to n <= {cycle_core.EXACT_N_MAX}; "
                         "use the 'estimate' subcommand for Monte Carlo")
    p = cycle_core.exact_i(n, k)
    meta = _meta("exact", cfg, n=n, k=k)
    if cfg.format == "json":
        return _json(meta, {"n": n, "k": k, "numerator": str(p.numerator),
                            "denominator": str(p.denominator), "decimal": float(p)})
    return _csv(meta, ["n", "k", "numerator", "denominator", "decimal"],
                [[n, k, p.numerator, p.denominator, float(p)]])


def cmd_limit(args, cfg: RunConfig) -> str:
    k = args.k
    header = ["k", "method", "samples", "estimate", "stderr"]
    if args.method == "dp":
        if k > poisson_limit.K_EXACT:
            raise UsageError(f"the exact DP supports k <= {poisson_limit.K_EXACT}; "
                             "use --method mc")
        value = poisson_limit.limit_i(k, extended=cfg.limit_extended, dps=cfg.limit_dps)
        meta = _meta("limit", cfg, k=k, method="dp")
        return _table(cfg, meta, header, [[k, "dp", None, value, 0.0]])
    res = sampler.estimate_limit_i(k, args.samples, cfg.seed, cfg.workers)
    meta = _meta("limit", cfg, k=k, method="mc", samples=args.samples)
    return _table(cfg, meta, header, [[k, "mc", res.samples, res.estimate, res.stderr]])


def cmd_estimate(args, cfg: RunConfig) -> str:
    n, k = args.n, args.k
    if not 1 <= k <= n // 2:
        raise UsageError(f"need 1 <= k <= n/2 (got n={n}, k={k})")
    res = sampler.estimate_i(n, k, args.samples, cfg.seed, cfg.workers)
    row = asymptotics.ScanRow.from_result(k, n, res)
    meta = _meta("estimate", cfg, n=n, k=k, samples=args.samples)
    return _table(cfg, meta, list(asymptotics.CSV_HEADER), _scan_rows([row]))


def _k_grid(args) -> list[int]:
    if args.k is not None:
        if args.k_min is not None or args.k_max is not None:
            raise UsageError("give either --k or --k-min/--k-max, not both")
        return [args.k]
    if args.k_min is None or args.k_max is None:
        raise UsageError("give --k or both --k-min and --k-max")
    return asymptotics.geometric_grid(args.k_min, args.k_max, args.geometric)


def cmd_el(args, cfg: RunConfig) -> str:
    grid = _k_grid(args)
    if args.method == "exact":
        if max(grid) > poisson_limit.EXACT_SMALL_K_MAX:
            raise UsageError(f"exact brackets need k <= {poisson_limit.EXACT_SMALL_K_MAX}; "
                             "use --method mc")
        rows = [[k, *poisson_limit.expected_L_size_exact_small(k)] for k in grid]
        meta = _meta("el", cfg, k_grid=grid, method="exact")
        return _table(cfg, meta, ["k", "lower", "upper"], rows)
    rows = asymptotics.scan_EL(grid, args.samples, cfg.seed, cfg.workers)
    meta = _meta("el", cfg, k_grid=grid, method="mc", samples=args.samples,
                 normalized="estimate * k^(delta-1) * (1+ln k)^1.5")
    return _table(cfg, meta, list(asymptotics.CSV_HEADER), _scan_rows(rows))


def cmd_scan(args, cfg: RunConfig) -> str:
    if args.n_ratio < 2:
        raise UsageError("--n-ratio must be >= 2 so that k <= n/2")
    grid = asymptotics.geometric_grid(args.k_min, args.k_max, args.geometric)
    rows = asymptotics.scan(grid, args.n_ratio, args.samples, cfg.seed, cfg.workers)
    meta = _meta("scan", cfg, k_grid=grid, n_ratio=args.n_ratio, samples=args.samples,
                 normalized="estimate * k^delta * (1+ln k)^1.5")
    return _table(cfg, meta, list(asymptotics.CSV_HEADER), _scan_rows(rows))


def cmd_fit(args, cfg: RunConfig) -> str:
    text = args.input.read_text(encoding="utf-8")
    rows = asymptotics.rows_from_csv(text)
    if any(line.startswith("# command=el") for line in text.splitlines()):
        rows = [asymptotics.ScanRow(r.k, r.n, r.samples, r.estimate, r.stderr, r.normalized, True)
                for r in rows]
    slope, se = asymptotics.fit_exponent(rows)
    meta = _meta("fit", cfg, input=args.input.name, reference=-asymptotics.delta())
    return _table(cfg, meta, ["slope", "stderr", "n_points"], [[slope, se, len(rows)]])


def cmd_transitive(args, cfg: RunConfig) -> str:
    demo = asymptotics.transitive_lower_demo(args.n, args.samples, cfg.seed, cfg.workers)
    meta = _meta("transitive", cfg, n=args.n)
    header = ["n", "i_half", "numerator", "denominator", "stderr", "normalized"]
    ex = demo.exact
    row = [demo.n, demo.i_half, None if ex is None else str(ex.numerator),
           None if ex is None else str(ex.denominator), demo.stderr, demo.normalized]
    return _table(cfg, meta, header, [row])


def cmd_verify(args, cfg: RunConfig) -> tuple[str, bool]:
    report = verify.run_suite(
        args.suite, n_max=args.n_max, sieve2_n_max=args.sieve2_n_max,
        cauchy_n_max=args.cauchy_n_max, oracle_n_max=args.oracle_n_max, samples=args.samples,
        seed=cfg.seed, workers=cfg.workers, instances=args.instances, sumd_j_max=args.sumd_j_max)
    lines = [f"# {line}" for line in _meta_lines(_meta("verify", cfg, suite=args.suite))]
    lines.extend(report.lines(verbose=not args.quiet))
    return "\n".join(lines) + "\n", report.passed


COMMANDS = {"exact": cmd_exact, "limit": cmd_limit, "estimate": cmd_estimate, "el": cmd_el,
            "scan": cmd_scan, "fit": cmd_fit, "transitive": cmd_transitive, "verify": cmd_verify}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        result = COMMANDS[args.command](args, cfg)
    except (UsageError, ValueError) as exc:
        print(f"permfix {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"permfix {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    passed = True
    if isinstance(result, tuple):
        result, passed = result
    try:
        if args.output:
            args.output.write_text(result, encoding="utf-8")
        else:
            sys.stdout.write(result)
    except OSError as exc:
        print(f"permfix {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK if passed else EXIT_FAIL
