"""Command-line interface.

Subcommands: gen, descend, tau-scan, fixed-restarts, fixed-budget, fit,
oracle.  ``--config FILE`` reads flat ``key = value`` lines (``#`` starts a
comment); keys are option names with dashes or underscores and explicit
flags win over file values.

Exit codes: 0 success, 1 validation or parse error, 2 internal invariant
violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__, analysis, harness, oracle, streams
from .descent import DescentParams, descend, random_initial, write_trace
from .errors import InvariantViolation
from .sk_model import generate_instance, init_state, load_instance, parse_spins, save_instance

logger = logging.getLogger("glassdescent")

WORKERS_ENV = "GLASSDESCENT_WORKERS"


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _g(x: float) -> str:
    return f"{x:.6g}"


def _int_list(text):
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file into a dict of strings."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _add_plan_args(p, budget: bool):
    p.add_argument("--sizes", type=_int_list, required=False, help="comma-separated N values")
    p.add_argument("--p-values", type=_float_list, help="comma-separated greedy probabilities")
    p.add_argument("--disorder", type=int, default=1, help="disorder realizations per (N, P)")
    if budget:
        p.add_argument("--budget-flips", help="flip budget per disorder sample: 100000 or 50*N^2")
        p.add_argument("--restarts", default=None, help=argparse.SUPPRESS)
    else:
        p.add_argument("--restarts", default="N", help="restarts per disorder sample: 500, N or 2*N")
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--tie-break", choices=["lowest-index", "random"], default="lowest-index")
    p.add_argument("--out-csv", help="results CSV (printed to stdout when omitted)")
    p.add_argument("--out-json", help="results JSON including the resolved plan")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="glassdescent", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"glassdescent {__version__}")
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="flat key = value file; flags override it")
        p.add_argument("--workers", type=int, default=None, help=f"parallel workers (env {WORKERS_ENV})")

    p = sub.add_parser("gen", help="generate an SK instance file")
    common(p)
    p.add_argument("--n", type=int, required=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=False)

    p = sub.add_parser("descend", help="run one descent")
    common(p)
    p.add_argument("--instance", help="instance file (alternative to --n/--seed)")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p", type=float, default=1.0, help="greedy probability P")
    p.add_argument("--run-seed", type=int, default=0)
    p.add_argument("--tie-break", choices=["lowest-index", "random"], default="lowest-index")
    p.add_argument("--init", help="initial spins as a +/- string; random when omitted")
    p.add_argument("--trace", help="write 'step index energy' lines to this file")

    for name, budget in (("tau-scan", False), ("fixed-restarts", False), ("fixed-budget", True)):
        p = sub.add_parser(name, help=f"run the {name} experiment")
        common(p)
        _add_plan_args(p, budget)

    p = sub.add_parser("fit", help="fit tau(N) ~ N^alpha to a tau-scan CSV")
    common(p)
    p.add_argument("--in-csv", required=False)
    p.add_argument("--p", type=float, required=False)
    p.add_argument("--out-json")

    p = sub.add_parser("oracle", help="exact ground states and basin census for small N")
    common(p)
    p.add_argument("--n", type=int, required=False)
    p.add_argument("--disorder", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--basin", action="store_true", help="also run the basin census")
    p.add_argument("--p", type=float, default=1.0, help="greedy probability for the census")
    p.add_argument("--run-seed", type=int, default=0)
    p.add_argument("--tie-break", choices=["lowest-index", "random"], default="lowest-index")
    p.add_argument("--basin-csv", help="basin CSV path; '_d<k>' is appended when --disorder > 1")
    p.add_argument("--out-json")
    p.add_argument("--quiet", action="store_true", help="skip per-instance lines")
    return parser


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        values = read_config(args.config)
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in subparser._actions}
        unknown = sorted(set(values) - set(known) - {"config"})
        if unknown:
            raise UsageError(f"{args.config}: unknown keys {unknown}")
        for key, value in values.items():
            if isinstance(known[key], argparse._StoreTrueAction):
                values[key] = _bool(value)
        subparser.set_defaults(**values)
        args = parser.parse_args(argv)
    if getattr(args, "workers", None) is None:
        args.workers = _default_workers()
    return args


def _require(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError(f"missing required option(s): {', '.join(missing)}")


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def cmd_gen(args) -> int:
    _require(args, "n", "out")
    inst = generate_instance(args.n, args.seed)
    save_instance(inst, args.out)
    print(f"N={inst.n} seed={inst.seed} file={args.out}")
    return 0


def cmd_descend(args) -> int:
    if args.instance:
        inst = load_instance(args.instance)
    else:
        _require(args, "n")
        inst = generate_instance(args.n, args.seed)
    params = DescentParams(args.p, args.tie_break, args.run_seed)
    rng = params.rng()
    init = parse_spins(args.init) if args.init else random_initial(inst.n, rng)
    rec = descend(inst, init, params, rng=rng, trace=bool(args.trace))
    check = init_state(inst, rec.final_spins)
    if not check.is_stable():
        raise InvariantViolation("descent ended in a state that is not 1-spin-flip stable")
    if args.trace:
        write_trace(rec, args.trace)
    print(f"flips={rec.flips} energy_per_spin={_g(rec.final_energy_per_spin)} stable=true")
    return 0


def _plan_from_args(args, protocol) -> harness.ExperimentPlan:
    problems = []
    if args.sizes is None:
        problems.append(("sizes", "--sizes is required"))
    if args.p_values is None:
        problems.append(("p_values", "--p-values is required"))
    if protocol == "fixed-budget" and args.budget_flips is None:
        problems.append(("budget_flips", "--budget-flips is required for fixed-budget"))
    rules = {}
    for key in ("restarts", "budget_flips"):
        raw = getattr(args, key, None)
        if raw is None:
            rules[key] = None
            continue
        try:
            rules[key] = harness.CountRule.parse(raw)
        except ValueError as exc:
            problems.append((key, str(exc)))
    if problems:
        raise harness.PlanValidationError(problems)
    plan = harness.ExperimentPlan(
        sizes=args.sizes,
        p_values=args.p_values,
        num_disorder=args.disorder,
        restarts=rules["restarts"],
        budget_flips=rules["budget_flips"],
        master_seed=args.master_seed,
        tie_break=args.tie_break,
    )
    return plan.validate(protocol)


def cmd_experiment(args) -> int:
    protocol = args.command
    plan = _plan_from_args(args, protocol)
    result = harness.run_protocol(protocol, plan, workers=args.workers)
    csv_text = result.to_csv()
    if args.out_csv:
        _write_text(args.out_csv, csv_text)
    if args.out_json:
        _write_text(args.out_json, result.to_json())
    if not args.out_csv:
        sys.stdout.write(csv_text)
    else:
        for c in result.cells:
            print(
                f"{protocol} N={c.n} P={_g(c.p)} runs={c.total_runs} "
                f"tau={_g(c.tau_mean)} +/- {_g(c.tau_stderr)} "
                f"e_min={_g(c.e_min_mean)} +/- {_g(c.e_min_stderr)}"
            )
    return 0


def cmd_fit(args) -> int:
    _require(args, "in_csv", "p")
    with open(args.in_csv, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        columns = reader.fieldnames or []
        missing = [c for c in ("N", "P", "tau_mean") if c not in columns]
        if missing:
            raise UsageError(f"{args.in_csv}: missing required column(s) {missing}")
        rows = list(reader)
    try:
        chosen = [r for r in rows if abs(float(r["P"]) - args.p) <= 1e-12]
        points = [(int(r["N"]), float(r["tau_mean"])) for r in chosen]
        stderr = {
            int(r["N"]): float(r["tau_stderr"]) for r in chosen if r.get("tau_stderr") not in (None, "")
        }
    except ValueError as exc:
        raise UsageError(f"{args.in_csv}: malformed value ({exc})") from None
    if not points:
        raise UsageError(f"{args.in_csv}: no rows with P={args.p}")
    protocols = sorted({r.get("protocol") or "tau-scan" for r in chosen})
    fit = analysis.fit_power_law(points)
    report = analysis.fit_report(fit, ",".join(protocols), args.p, stderr)
    if args.out_json:
        doc = {
            "tool": "glassdescent",
            "version": __version__,
            "plan": {"in_csv": str(args.in_csv), "P": args.p},
            **report,
        }
        _write_text(args.out_json, _dump_json(doc))
    print(f"alpha={_g(fit.alpha)} +/- {_g(fit.alpha_stderr)} r2={_g(fit.r_squared)} points={len(points)}")
    return 0


def _basin_path(base: str, d: int, many: bool) -> Path:
    path = Path(base)
    return path.with_name(f"{path.stem}_d{d}{path.suffix}") if many else path


def cmd_oracle(args) -> int:
    _require(args, "n")
    if args.n > oracle.EXACT_MAX_N:
        raise oracle.OracleGuardError(
            f"n={args.n} refused: exact enumeration visits 2^n configurations and is "
            f"limited to n <= {oracle.EXACT_MAX_N}"
        )
    if args.basin and args.n > oracle.BASIN_MAX_N:
        raise oracle.OracleGuardError(
            f"n={args.n} refused: the basin census runs 2^n descents and is limited to "
            f"n <= {oracle.BASIN_MAX_N}"
        )
    if args.disorder < 1:
        raise UsageError("--disorder must be >= 1")
    params = DescentParams(args.p, args.tie_break, args.run_seed)
    instances = []
    values = []
    for d in range(args.disorder):
        seed = streams.disorder_seed(args.seed, args.n, d)
        inst = generate_instance(args.n, seed)
        sol = oracle.exact_solve(inst)
        values.append(sol.ground_energy_per_spin)
        entry = {
            "d": d,
            "seed": seed,
            "ground_energy_per_spin": sol.ground_energy_per_spin,
            "stable_states": int(sol.stable_codes.size),
        }
        line = f"d={d} seed={seed} e_gs={_g(sol.ground_energy_per_spin)} stable_states={sol.stable_codes.size}"
        if args.basin:
            report = oracle.basin_census(inst, params, sol)
            if report.total != 2**args.n:
                raise InvariantViolation("basin counts do not sum to 2^n")
            entry["basin_total"] = report.total
            entry["ground_basin_fraction"] = report.ground_fraction
            line += f" basin_total={report.total} ground_fraction={_g(report.ground_fraction)}"
            if args.basin_csv:
                report.write_csv(_basin_path(args.basin_csv, d, args.disorder > 1))
            elif args.disorder == 1:
                report.write_csv(sys.stdout)
        instances.append(entry)
        if not args.quiet:
            print(line)
    summary = analysis.summarize(values)
    print(f"n={args.n} disorder={args.disorder} mean_e_gs={_g(summary.mean)} stderr={_g(summary.stderr)}")
    if args.out_json:
        doc = {
            "tool": "glassdescent",
            "version": __version__,
            "plan": {
                "n": args.n,
                "disorder": args.disorder,
                "seed": args.seed,
                "basin": bool(args.basin),
                "p": args.p if args.basin else None,
                "run_seed": args.run_seed if args.basin else None,
                "tie_break": args.tie_break if args.basin else None,
            },
            "mean_ground_energy_per_spin": summary.mean,
            "stderr": summary.stderr,
            "instances": instances,
        }
        _write_text(args.out_json, _dump_json(doc))
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "descend": cmd_descend,
    "tau-scan": cmd_experiment,
    "fixed-restarts": cmd_experiment,
    "fixed-budget": cmd_experiment,
    "fit": cmd_fit,
    "oracle": cmd_oracle,
}


def main(argv=None) -> int:
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
        logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except InvariantViolation as exc:
        print(f"error: internal invariant violated: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
