"""Command-line entry point: ``spanforest <subcommand> ...``.

Exit codes: 0 success, 1 a validation check failed, 2 bad usage or
parameters outside the supported domain.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from collections import Counter

SEED_ENV = "SPANFOREST_SEED"


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}")


def _seed(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    if seed is None:
        raise UsageError(f"--seed is required (or set {SEED_ENV})")
    return seed


def _csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def _emit(text: str, path=None) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_sample(args) -> int:
    from .harness import ExperimentConfig, run_monte_carlo

    cfg = ExperimentConfig(
        N=args.n, l=args.l, replicates=args.reps, seed=_seed(args),
        kappa=args.kappa, c=args.c, workers=args.workers,
    )
    report = run_monte_carlo(cfg, keep_rows=args.format == "csv")
    if args.format == "json":
        _emit(report.to_json(), args.out)
    else:
        _emit(_csv_text(report.observation_rows()), args.out)
    if report.counts.failures:
        print(f"warning: {len(report.counts.failures)} replicates exhausted the step budget", file=sys.stderr)
    return 0


def cmd_exact(args) -> int:
    from .exact_model import ModelParams, oracle_csv

    _emit(oracle_csv(ModelParams(args.n, args.kappa, args.l)))
    return 0


def cmd_limits(args) -> int:
    from .limit_laws import limit_table

    cols = ["l", "r", "c", "C_lr", "I_lr", "CI_lr", "S_l"]
    rows = [cols] + [[row[k] if k in ("l", "r", "C_lr") else repr(float(row[k])) for k in cols]
                     for row in limit_table(args.lmax, args.c)]
    _emit(_csv_text(rows))
    return 0


def cmd_gibbs(args) -> int:
    from . import gibbs
    from .wilson import rng_stream

    if args.reps < 1:
        raise UsageError("--reps must be positive")
    seed = _seed(args)
    counts: Counter = Counter()
    for i in range(args.reps):
        blocks, _ = gibbs.sequential_sample(args.l, args.c, rng_stream(seed, i))
        counts[blocks] += 1
    rows = [["partition", "sizes", "eppf", "empirical_freq", "n_samples"]]
    for blocks, p in sorted(gibbs.partition_law(args.l, args.c).items()):
        rows.append([
            "|".join(",".join(map(str, b)) for b in blocks),
            ";".join(str(len(b)) for b in blocks),
            repr(p), repr(counts[blocks] / args.reps), args.reps,
        ])
    _emit(_csv_text(rows))
    return 0


def cmd_mixture(args) -> int:
    from .gibbs import pd_mixture_check

    rows = [["l", "r", "beta", "closed", "integrated", "abs_diff"]]
    for beta in args.beta:
        for l in range(1, args.lmax + 1):
            for r in range(1, l + 1):
                a, b = pd_mixture_check(l, r, beta)
                rows.append([l, r, beta, repr(a), repr(b), repr(abs(a - b))])
    _emit(_csv_text(rows))
    return 0


def cmd_validate(args) -> int:
    from .acceptance import run_all

    results = run_all(echo=lambda line: print(line, flush=True))
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    return 0 if passed == len(results) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spanforest", description="Marked subtrees of killed uniform spanning trees on K_N.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="Monte Carlo via Wilson's algorithm")
    s.add_argument("--n", type=int, required=True)
    mode = s.add_mutually_exclusive_group(required=True)
    mode.add_argument("--kappa", type=float)
    mode.add_argument("--c", type=float, help="critical scaling, kappa = c sqrt(N)")
    s.add_argument("--l", type=int, required=True)
    s.add_argument("--reps", type=int, required=True)
    s.add_argument("--seed", type=int, default=None, help=f"defaults to ${SEED_ENV}")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", default=None)
    s.add_argument("--format", choices=("csv", "json"), default="json")
    s.set_defaults(func=cmd_sample)

    e = sub.add_parser("exact", help="exact reduced-tree law by Pruefer enumeration (N <= 8)")
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--kappa", type=float, required=True)
    e.add_argument("--l", type=int, required=True)
    e.set_defaults(func=cmd_exact)

    lim = sub.add_parser("limits", help="C_{l,r}, I_{l,r}(c) and S_l(c)")
    lim.add_argument("--lmax", type=int, required=True)
    lim.add_argument("--c", type=_floats, required=True)
    lim.set_defaults(func=cmd_limits)

    g = sub.add_parser("gibbs", help="sequential Gibbs partition sampler vs its EPPF")
    g.add_argument("--l", type=int, required=True)
    g.add_argument("--c", type=float, required=True)
    g.add_argument("--reps", type=int, required=True)
    g.add_argument("--seed", type=int, default=None)
    g.set_defaults(func=cmd_gibbs)

    m = sub.add_parser("mixture", help="Poisson-Dirichlet mixture identity table")
    m.add_argument("--lmax", type=int, required=True)
    m.add_argument("--beta", type=_floats, required=True)
    m.set_defaults(func=cmd_mixture)

    v = sub.add_parser("validate", help="run every acceptance criterion")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"spanforest {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
