"""Command line driver: ``pdwg run --case case_const --k 2 --s 1 ...``.

Every flag may also be given in a ``key=value`` config file passed via
``--config``; flags on the command line win.  Exit status is 0 on
success, 2 on solver failure and 3 on bad arguments.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from .mesh import DOMAINS
from .problems import CASES, catalog
from .solver import SolverError
from .study import emit_field, emit_table, run_convergence

EXIT_OK, EXIT_SOLVER, EXIT_ARGS = 0, 2, 3

log = logging.getLogger("pdwg")


class ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ArgumentError(message)


def read_config(path) -> dict:
    """Parse a ``key=value`` file; ``#`` starts a comment, dashes and underscores are equivalent."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ArgumentError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pdwg", description="Primal-dual weak Galerkin convergence studies")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a convergence study")
    run.add_argument("--config", help="key=value file mirroring these flags")
    run.add_argument("--case", choices=CASES)
    run.add_argument("--k", type=int)
    run.add_argument("--s", type=int)
    run.add_argument("--variant", choices=("cminus1", "c0"))
    run.add_argument("--delta", type=float)
    run.add_argument("--levels", type=int)
    run.add_argument("--domain", choices=DOMAINS)
    run.add_argument("--out", help="directory for tables, fields and system dumps")
    run.add_argument("--format", choices=("csv", "markdown"))
    run.add_argument("--dump-system", action="store_true", default=None)
    run.add_argument("--quad-degree", type=int)
    run.add_argument("--mu", help="drift for case_disc_const, e.g. 1,1")
    return parser


DEFAULTS = dict(case="case_const", k=2, s=1, variant="c0", delta=1.0, levels=5, domain=None,
                out=None, format="csv", dump_system=False, quad_degree=None, mu=None)


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    settings = dict(DEFAULTS)
    if args.config:
        try:
            cfg = read_config(args.config)
        except OSError as exc:
            raise ArgumentError(str(exc)) from exc
        unknown = set(cfg) - set(DEFAULTS)
        if unknown:
            raise ArgumentError(f"unknown config keys: {sorted(unknown)}")
        # round-trip through the parser so types and choices are checked
        cfg_argv = []
        for key, value in cfg.items():
            flag = "--" + key.replace("_", "-")
            if key == "dump_system":
                if value.lower() in ("1", "true", "yes"):
                    cfg_argv.append(flag)
            else:
                cfg_argv += [flag, value]
        cfg_args = parser.parse_args(["run"] + cfg_argv)
        settings.update({k: v for k, v in vars(cfg_args).items() if k in DEFAULTS and v is not None})
    settings.update({k: v for k, v in vars(args).items() if k in DEFAULTS and v is not None})
    ns = argparse.Namespace(**settings)
    if ns.levels < 2:
        raise ArgumentError("--levels must be at least 2")
    if ns.k < 1 or ns.s < 0 or ns.s not in (ns.k - 1, ns.k - 2):
        raise ArgumentError("need k >= 1 and s in {k-1, k-2} with s >= 0")
    if ns.mu is not None:
        try:
            ns.mu = tuple(float(v) for v in ns.mu.split(","))
        except ValueError as exc:
            raise ArgumentError(f"bad --mu {ns.mu!r}") from exc
        if len(ns.mu) != 2:
            raise ArgumentError("--mu needs two components")
        if ns.case != "case_disc_const":
            raise ArgumentError("--mu only applies to case_disc_const")
    return ns


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    try:
        ns = parse_args(sys.argv[1:] if argv is None else argv)
    except ArgumentError as exc:
        print(f"pdwg: error: {exc}", file=sys.stderr)
        return EXIT_ARGS

    params = {"mu": ns.mu} if ns.mu is not None else {}
    problem = catalog(ns.case, **params)
    variant = "C0" if ns.variant == "c0" else "Cminus1"
    prefix = None
    if ns.out:
        os.makedirs(ns.out, exist_ok=True)
    if ns.dump_system:
        prefix = os.path.join(ns.out or ".", "system")
    try:
        report = run_convergence(problem, ns.k, ns.s, variant, ns.delta, ns.levels, ns.domain,
                                 ns.quad_degree, dump_prefix=prefix, keep_last=True)
    except SolverError as exc:
        print(f"pdwg: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    table = emit_table(report, ns.format)
    if ns.out:
        ext = "csv" if ns.format == "csv" else "md"
        with open(os.path.join(ns.out, f"errors.{ext}"), "w") as fh:
            fh.write(table)
        m, _, sol = report.meta["last"]
        emit_field(sol, m, os.path.join(ns.out, "u_h.vtk"), "vtk_legacy")
        emit_field(sol, m, os.path.join(ns.out, "u_h.csv"), "csv_points")
        log.info("wrote results to %s", ns.out)
    sys.stdout.write(table)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
