"""Command-line front end: ``ftqc compile | estimate | sweep | simulate | net``.

Machine-readable output (JSON, CSV) goes to stdout or to files under
``--out``; one-line human summaries go to stderr.  Exit codes: 0 success,
2 usage or rejected input, 3 infeasible or SK non-convergence, 4 resource
cap exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

from . import __version__, concat, ipea, report, sk, surface, tim
from .config import load_config, normalize_key, parse_bool
from .errors import FtqcError, RejectedInputError


EXIT_OK, EXIT_USAGE = 0, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- argument helpers ---------------------------------------------------------


def m_range(text: str) -> list[int]:
    """``"4..14"``, ``"4:14"``, ``"7"`` or ``"4,6,8"`` -> sorted list of ints."""
    text = text.strip()
    try:
        for sep in ("..", ":"):
            if sep in text:
                lo, hi = (int(x) for x in text.split(sep))
                values = list(range(lo, hi + 1))
                break
        else:
            values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid M range {text!r}; use e.g. 4..14") from None
    if not values:
        raise argparse.ArgumentTypeError(f"empty M range {text!r}")
    return sorted(set(values))


def float_list(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number list {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _add_net_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("base net")
    g.add_argument("--net-cache-path", default=None,
                   help="net cache file (default: $XDG_CACHE_HOME/ftqc/net_<params>.json)")
    g.add_argument("--build-net", action="store_true",
                   help="build and save the net if the cache file is missing")
    g.add_argument("--net-max-len", type=positive_int, default=sk.DEFAULT_MAX_LEN,
                   help="longest generator word in the net (default %(default)s)")
    g.add_argument("--net-dedup-tol", type=float, default=sk.DEFAULT_DEDUP_TOL,
                   help="merge entries closer than this (default %(default)s)")
    g.add_argument("--net-budget", type=positive_int, default=sk.DEFAULT_ENTRY_BUDGET,
                   help="entry budget during the build (default %(default)s)")
    g.add_argument("--sk-max-depth", type=int, default=sk.DEFAULT_MAX_DEPTH,
                   help="SK recursion depth cap (default %(default)s)")


def _add_out(p: argparse.ArgumentParser, formats: Sequence[str], default: str) -> None:
    p.add_argument("--out", default=None, help="directory for report files (default: stdout)")
    p.add_argument("--format", default=default,
                   help=f"comma-separated subset of {{{','.join(formats)}}} (default %(default)s)")


def _add_surface_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("-N", "--n", dest="n", type=int, default=100, help="spins (default %(default)s)")
    p.add_argument("--tau", type=float, default=None, help="evolution time unit (surface default pi/(2N), concat default 1.0)")
    p.add_argument("--p-ratio", type=float, default=0.1, help="p/p_th (default %(default)s)")
    p.add_argument("--p-th", type=float, default=surface.P_TH, help="threshold (default %(default)s)")
    p.add_argument("--t-phys", type=float, default=None,
                   help="physical gate time in s (surface default 20e-9, concat default 1e-5)")
    p.add_argument("--p-inject", type=float, default=None,
                   help="raw injected magic-state error (default p_ratio*p_th)")
    p.add_argument("--strict-sk-budget", action="store_true",
                   help="split the SK budget over the 9N rotations of a Trotter step")
    p.add_argument("--cycles-form", choices=("sum", "half"), default="sum",
                   help="total-cycle formula: exact sum or 2^(M-1) leading factor (default %(default)s)")
    p.add_argument("--p-phys", type=float, default=concat.P_PHYS,
                   help="[concat] physical gate error (default %(default)s)")
    p.add_argument("--eps-threshold", type=float, default=concat.EPS_THRESHOLD,
                   help="[concat] concatenation threshold (default %(default)s)")
    p.add_argument("--q-logical", type=int, default=None, help="[concat] logical qubits (default 4N)")
    p.add_argument("--level-overhead-base", type=float, default=concat.LEVEL_OVERHEAD_BASE,
                   help="[concat] calibrated step multiplier per level (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ftqc", description="Fault-tolerant resource estimates for TIM ground-state energy.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", default=None, help="flat key = value config file (default $FTQC_CONFIG)")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compile", help="compile one R_z rotation to H/S/T")
    p.add_argument("--angle", type=float, required=True, help="rotation angle in radians")
    p.add_argument("--eps", type=float, required=True, help="target phase-invariant distance")
    p.add_argument("--include-sequence", action="store_true", help="include the gate string")
    p.add_argument("--out", default=None, help="directory for compile.json (default: stdout)")
    _add_net_options(p)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("estimate", help="single resource estimate")
    p.add_argument("code", choices=("surface", "concat"))
    p.add_argument("-M", "--m", dest="m", type=int, default=10, help="precision bits (default %(default)s)")
    p.add_argument("--r", type=float, default=1.0, help="[surface] failure budget in (0, 1] (default %(default)s)")
    _add_surface_options(p)
    p.add_argument("--out", default=None, help="directory for estimate_<code>.json (default: stdout)")
    _add_net_options(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sweep", help="estimates over an M range (and r list)")
    p.add_argument("code", choices=("surface", "concat"))
    p.add_argument("-M", "--m", dest="m", type=m_range, required=True, help="M range, e.g. 4..14")
    p.add_argument("--r", type=float_list, default=[1.0], help="[surface] comma-separated r values (default 1)")
    p.add_argument("--jobs", type=positive_int, default=1, help="concurrent rows (default %(default)s)")
    _add_surface_options(p)
    _add_out(p, ("csv", "json", "svg"), "csv")
    _add_net_options(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="iterative phase estimation on a small chain")
    p.add_argument("-N", "--n", dest="n", type=int, default=2, help="spins (default %(default)s)")
    p.add_argument("-M", "--m", dest="m", type=int, default=8, help="bits (default %(default)s)")
    p.add_argument("--tau", type=float, default=None, help="time unit (default pi/(2N))")
    p.add_argument("--mode", choices=("exact", "trotter", "trotter_sk"), default="exact")
    p.add_argument("--seeds", type=positive_int, default=10, help="number of runs (default %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="first seed; runs use seed..seed+seeds-1")
    p.add_argument("--k0", type=positive_int, default=None, help="override the solved Trotter number")
    p.add_argument("--input", dest="input_state_mode", choices=("ground", "depolarized"), default="ground")
    p.add_argument("--overlap", type=float, default=1.0, help="ground-state weight for --input depolarized")
    p.add_argument("--out", default=None, help="directory for simulate.json (default: JSON lines on stdout)")
    _add_net_options(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("net", help="manage the base-net cache")
    p.add_argument("action", choices=("build", "info"))
    p.add_argument("--generators", default=",".join(sk.DEFAULT_GENERATORS),
                   help="comma-separated generator set (default %(default)s)")
    _add_net_options(p)
    p.set_defaults(func=cmd_net)
    return parser


# -- config file merging --------------------------------------------------------


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def _config_defaults(sub: argparse.ArgumentParser, values: dict[str, str], all_keys: set[str]) -> dict:
    """Convert config strings with each option's own type; keys unknown everywhere are errors."""
    by_key = {}
    for action in sub._actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                by_key[normalize_key(opt[2:])] = action
    out = {}
    for key, text in values.items():
        action = by_key.get(key)
        if action is None:
            if key not in all_keys:
                raise UsageError(f"unknown config key {key!r}")
            continue
        try:
            if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                value = parse_bool(text)
            elif action.type is not None:
                value = action.type(text)
            else:
                value = text
        except (ValueError, argparse.ArgumentTypeError, RejectedInputError) as exc:
            raise UsageError(f"config key {key!r}: {exc}") from None
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"config key {key!r}: {value!r} not in {sorted(action.choices)}")
        out[action.dest] = value
    return out


def _all_option_keys(parser: argparse.ArgumentParser) -> set[str]:
    keys = set()
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sp in action.choices.values():
                for a in sp._actions:
                    keys.update(normalize_key(o[2:]) for o in a.option_strings if o.startswith("--"))
    return keys


def parse_args(argv: Sequence[str] | None) -> argparse.Namespace:
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    values, source = load_config(known.config)
    if values:
        first = parser.parse_args(argv)  # find the subcommand, validating flags early
        sub = _subparser(parser, first.command)
        sub.set_defaults(**_config_defaults(sub, values, _all_option_keys(parser)))
    args = parser.parse_args(argv)
    args.config_source = source
    return args


# -- net --------------------------------------------------------------------------


def _net(args, build: bool | None = None) -> sk.BaseNet:
    gens = tuple(g.strip() for g in getattr(args, "generators", ",".join(sk.DEFAULT_GENERATORS)).split(","))
    try:
        return sk.load_or_build_net(
            args.net_cache_path,
            build=args.build_net if build is None else build,
            generator_set=gens,
            max_len=args.net_max_len,
            dedup_tol=args.net_dedup_tol,
            entry_budget=args.net_budget,
        )
    except FileNotFoundError as exc:
        raise RejectedInputError(f"{exc}; run `ftqc net build` first", stage="net_cache_path") from None


def _net_info(net: sk.BaseNet, path) -> dict:
    return {
        "net_cache_path": str(path),
        "generator_set": list(net.generator_set),
        "max_len": net.max_len,
        "dedup_tol": net.dedup_tol,
        "entries": len(net),
        "covering_radius_estimate": net.covering_radius_estimate(),
    }


def cmd_net(args) -> int:
    gens = tuple(g.strip() for g in args.generators.split(","))
    path = Path(args.net_cache_path) if args.net_cache_path else sk.default_net_cache_path(
        gens, args.net_max_len, args.net_dedup_tol
    )
    if args.action == "build":
        net = sk.build_net(gens, args.net_max_len, args.net_dedup_tol, args.net_budget)
        net.save(path)
    else:
        if not path.exists():
            raise RejectedInputError(f"net cache not found at {path}", stage="net_cache_path")
        net = sk.BaseNet.load(path)
    _emit(args, "net.json", report.to_json(_net_info(net, path)))
    print(f"net: {len(net)} entries at {path}", file=sys.stderr)
    return EXIT_OK


# -- output -----------------------------------------------------------------------


def _emit(args, filename: str, text: str) -> None:
    out = getattr(args, "out", None)
    if out:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        (d / filename).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _formats(args) -> list[str]:
    fmts = [f.strip() for f in args.format.split(",") if f.strip()]
    bad = [f for f in fmts if f not in ("csv", "json", "svg")]
    if bad or not fmts:
        raise UsageError(f"--format must be a subset of csv,json,svg, got {args.format!r}")
    if not args.out and (len(fmts) > 1 or fmts[0] == "svg"):
        raise UsageError("--out is required for svg output or several formats")
    return fmts


# -- commands -----------------------------------------------------------------------


def cmd_compile(args) -> int:
    net = _net(args)
    rot = sk.compile_rz(args.angle, args.eps, net, max_depth=args.sk_max_depth)
    record = rot.to_dict(include_sequence=args.include_sequence)
    _emit(args, "compile.json", report.to_json(record))
    c = rot.counts
    print(
        f"rz({args.angle:g}): depth {rot.depth}, N_T={c.n_t} N_S={c.n_s} N_H={c.n_h}, "
        f"eps={rot.achieved_eps:.3g}",
        file=sys.stderr,
    )
    return EXIT_OK


def _problem(args, M: int, r: float) -> surface.TimProblem:
    return surface.TimProblem(
        N=args.n, M=M, tau=args.tau, r=r, p_ratio=args.p_ratio, p_th=args.p_th,
        t_phys=surface.T_PHYS if args.t_phys is None else args.t_phys,
        p_inject=args.p_inject, strict_sk_budget=args.strict_sk_budget, cycles_form=args.cycles_form,
    )


def _concat_config(args) -> concat.ConcatConfig:
    kwargs = dict(
        p_phys=args.p_phys, eps_threshold=args.eps_threshold,
        t_phys=concat.T_PHYS if args.t_phys is None else args.t_phys,
        q_logical=args.q_logical, level_overhead_base=args.level_overhead_base,
    )
    if args.tau is not None:
        kwargs["tau"] = args.tau
    return concat.ConcatConfig(**kwargs)


def _human_time(seconds: float) -> str:
    if seconds >= 86400:
        return f"{seconds / 86400:.3g} days"
    if seconds >= 3600:
        return f"{seconds / 3600:.3g} h"
    return f"{seconds:.3g} s"


def cmd_estimate(args) -> int:
    if args.code == "surface":
        problem = _problem(args, args.m, args.r)
        rep = surface.estimate_surface(problem, _net(args), max_depth=args.sk_max_depth)
        summary = (
            f"surface N={problem.N} M={problem.M} r={problem.r:g}: d={rep.d}, "
            f"physical_qubits={rep.physical_qubits}, wall={_human_time(rep.wall_seconds)}"
        )
    else:
        rep = _concat_estimate(args, args.m, _concat_config(args), _LazyNet(args))
        summary = (
            f"concat N={args.n} M={args.m}: ec_needed={str(rep.ec_needed).lower()}, level={rep.level}, "
            f"physical_qubits={rep.physical_qubits}, wall={_human_time(rep.wall_seconds)}"
        )
    _emit(args, f"estimate_{args.code}.json", report.to_json(rep.to_dict()))
    print(summary, file=sys.stderr)
    return EXIT_OK


class _LazyNet:
    """Defers loading the net until an SK compilation actually needs it."""

    def __init__(self, args):
        self._args, self._net = args, None

    def get(self) -> sk.BaseNet:
        if self._net is None:
            self._net = _net(self._args)
        return self._net


def _concat_estimate(args, M: int, cfg: concat.ConcatConfig, holder: _LazyNet) -> concat.ConcatReport:
    """Concat estimate that only touches the net cache once error correction is on."""
    try:
        return concat.estimate_concat(args.n, M, None, cfg, None, args.sk_max_depth)
    except RejectedInputError as exc:
        if "base net is required" not in str(exc):
            raise
    return concat.estimate_concat(args.n, M, None, cfg, holder.get(), args.sk_max_depth)


def _run_rows(tasks: list[tuple[tuple, Callable[[], dict]]], jobs: int) -> list[dict]:
    """Run row builders concurrently; results come back in task order."""

    def safe(fn):
        try:
            return fn(), None
        except FtqcError as exc:
            return None, exc

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda t: safe(t[1]), tasks))
    else:
        results = [safe(fn) for _, fn in tasks]
    return results


def cmd_sweep(args) -> int:
    fmts = _formats(args)
    code = args.code
    if code == "surface":
        net = _net(args)
        for r in args.r:
            if not 0 < r <= 1:
                raise RejectedInputError(f"r must lie in (0, 1], got {r}")
        keys = [(M, r) for M in args.m for r in sorted(set(args.r))]

        def make(M, r):
            def run():
                problem = _problem(args, M, r)
                return surface.estimate_surface(problem, net, max_depth=args.sk_max_depth)
            return run

        tasks = [((M, r), make(M, r)) for M, r in keys]
    else:
        cfg = _concat_config(args)
        net_holder = _LazyNet(args)
        keys = [(M, None) for M in args.m]

        def make(M, _r):
            return lambda: _concat_estimate(args, M, cfg, net_holder)

        if args.jobs > 1:
            net_holder.get()  # load once before threads start
        tasks = [((M, None), make(M, None)) for M, _ in keys]

    results = _run_rows(tasks, args.jobs)
    rows, reports, errors = [], [], []
    for (M, r), (rep, exc) in zip(keys, results):
        if rep is not None:
            row = rep.csv_row()
            row[report.ERROR_COLUMN] = None
            reports.append(rep)
        else:
            row = {"N": args.n, "M": M, report.ERROR_COLUMN: str(exc)}
            if code == "surface":
                row.update(r=r, p_ratio=args.p_ratio)
            errors.append(exc)
        rows.append(row)

    columns = report.columns_for(code)
    if "csv" in fmts:
        _emit(args, f"sweep_{code}.csv", report.rows_to_csv(rows, columns))
    if "json" in fmts:
        payload = [rep.to_dict() for rep in reports]
        _emit(args, f"sweep_{code}.json", report.to_json({"rows": rows, "reports": payload}))
    if "svg" in fmts:
        for name, text in _svgs(code, rows, args).items():
            _emit(args, name, text)
    print(f"sweep {code}: {len(rows) - len(errors)}/{len(rows)} rows ok", file=sys.stderr)
    if errors and len(errors) == len(rows):
        return errors[0].exit_code
    return EXIT_OK


_SURFACE_METRICS = (("d", False), ("physical_qubits", True), ("K", True), ("wall_seconds", True))
_CONCAT_METRICS = (("K", True), ("physical_qubits", True), ("wall_seconds", True), ("level", False))


def _svgs(code: str, rows: list[dict], args) -> dict[str, str]:
    ok = [row for row in rows if not row.get(report.ERROR_COLUMN)]
    stamp = hashlib.sha256(json.dumps(vars_for_hash(args), sort_keys=True).encode()).hexdigest()[:12]
    out = {}
    metrics = _SURFACE_METRICS if code == "surface" else _CONCAT_METRICS
    for metric, log_y in metrics:
        if code == "surface":
            series = {}
            for row in ok:
                series.setdefault(f"r={row['r']:g}", []).append((row["M"], float(row[metric])))
        else:
            series = {f"N={args.n}": [(row["M"], float(row[metric])) for row in ok]}
        title = f"{code}: {metric} vs M (config {stamp})"
        out[f"sweep_{code}_{metric}.svg"] = report.svg_line_chart(series, title, "M", metric, log_y)
    return out


def vars_for_hash(args) -> dict:
    skip = {"func", "out", "format", "jobs", "config_source", "verbose"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def cmd_simulate(args) -> int:
    net = _net(args) if args.mode == "trotter_sk" else None
    records, errors = [], []
    e0 = tim.ground_energy_exact(args.n) if 2 <= args.n <= tim.MAX_DENSE_N else None
    for seed in range(args.seed, args.seed + args.seeds):
        run = ipea.ipea_run(
            args.n, args.m, args.tau, args.mode, seed=seed,
            input_state_mode=args.input_state_mode, overlap=args.overlap, k0=args.k0, net=net,
        )
        rec = run.to_dict()
        rec["exact_energy"] = e0
        records.append(rec)
        errors.append(abs(run.energy_estimate - e0))
    if args.out:
        _emit(args, "simulate.json", report.to_json(records))
    else:
        for rec in records:
            sys.stdout.write(json.dumps(rec) + "\n")
    tau = records[0]["tau"]
    grid = 2 * math.pi / (tau * 2**args.m)
    print(
        f"simulate N={args.n} M={args.m} mode={args.mode}: mean |E - E0| = "
        f"{sum(errors) / len(errors):.4g} (grid step {grid:.4g}, E0 = {e0:.6g})",
        file=sys.stderr,
    )
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except FtqcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ftqc {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FtqcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
