"""Disorder-averaged experiments over grids of sizes and greedy probabilities.

Three protocols share one executor:

``tau-scan``
    mean number of flips to reach a stable state, pooled over all runs;
``fixed-restarts``
    a fixed number of descents per instance, keep the lowest energy;
``fixed-budget``
    descents until a per-instance flip budget is spent, keep the lowest
    energy.  The budget is soft: the run that exhausts it completes.

Work is split into one task per (N, disorder) pair.  Each run draws from a
stream keyed by ``(master_seed, N, P, d, r)`` and results are reduced in
ascending ``(d, r)`` order, so output is identical for any worker count.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import __version__, streams
from .descent import restart
from .errors import PlanValidationError
from .sk_model import Instance, generate_instance

logger = logging.getLogger(__name__)

PROTOCOLS = ("tau-scan", "fixed-restarts", "fixed-budget")

CSV_COLUMNS = [
    "protocol",
    "N",
    "P",
    "num_disorder",
    "runs_per_disorder",
    "tau_mean",
    "tau_stderr",
    "e_min_mean",
    "e_min_stderr",
    "total_flips",
]

_RULE_RE = re.compile(r"^\s*(?:(\d+(?:\.\d*)?)\s*\*?\s*)?N\s*(?:\^\s*(\d+))?\s*$")


@dataclass(frozen=True)
class CountRule:
    """A per-size count ``coef * N^power``; ``power == 0`` is a constant."""

    coef: float
    power: int = 0

    @classmethod
    def parse(cls, value) -> "CountRule":
        if isinstance(value, CountRule):
            return value
        if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
            return cls(float(value), 0)
        text = str(value).strip()
        if re.fullmatch(r"\d+", text):
            return cls(float(text), 0)
        m = _RULE_RE.match(text)
        if not m:
            raise ValueError(f"count rule must look like 100, N, 3*N or 50*N^2; got {value!r}")
        coef = float(m.group(1)) if m.group(1) else 1.0
        return cls(coef, int(m.group(2)) if m.group(2) else 1)

    def resolve(self, n: int) -> int:
        return int(round(self.coef * n**self.power))

    def __str__(self) -> str:
        coef = int(self.coef) if self.coef == int(self.coef) else self.coef
        if self.power == 0:
            return str(coef)
        base = "N" if self.power == 1 else f"N^{self.power}"
        return base if coef == 1 else f"{coef}*{base}"


@dataclass(frozen=True)
class ExperimentPlan:
    sizes: tuple
    p_values: tuple
    num_disorder: int
    restarts: CountRule = CountRule(1.0, 1)
    budget_flips: CountRule | None = None
    master_seed: int = 0
    tie_break: str = "lowest-index"

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(self.sizes))
        object.__setattr__(self, "p_values", tuple(float(p) for p in self.p_values))
        if self.restarts is not None:
            object.__setattr__(self, "restarts", CountRule.parse(self.restarts))
        if self.budget_flips is not None:
            object.__setattr__(self, "budget_flips", CountRule.parse(self.budget_flips))

    def problems(self, protocol: str | None = None) -> list:
        out = []
        if not self.sizes:
            out.append(("sizes", "at least one size is required"))
        elif any(int(n) != n or n < 2 for n in self.sizes):
            out.append(("sizes", f"all sizes must be integers >= 2, got {list(self.sizes)}"))
        elif len(set(self.sizes)) != len(self.sizes):
            out.append(("sizes", "sizes must be distinct"))
        if not self.p_values:
            out.append(("p_values", "at least one P value is required"))
        elif any(not 0.0 <= p <= 1.0 for p in self.p_values):
            out.append(("p_values", f"all P must lie in [0, 1], got {list(self.p_values)}"))
        elif len(set(self.p_values)) != len(self.p_values):
            out.append(("p_values", "P values must be distinct"))
        if int(self.num_disorder) != self.num_disorder or self.num_disorder < 1:
            out.append(("num_disorder", f"must be an integer >= 1, got {self.num_disorder}"))
        if not 0 <= int(self.master_seed) < 2**64:
            out.append(("master_seed", "must be a 64-bit unsigned integer"))
        if self.tie_break not in ("lowest-index", "random"):
            out.append(("tie_break", f"must be 'lowest-index' or 'random', got {self.tie_break!r}"))
        if protocol is not None and protocol not in PROTOCOLS:
            out.append(("protocol", f"unknown protocol {protocol!r}"))
        if protocol in ("tau-scan", "fixed-restarts"):
            if self.restarts is None:
                out.append(("restarts", "a restart rule is required"))
            elif self.restarts.coef <= 0 or any(self.restarts.resolve(n) < 1 for n in self.sizes if n >= 2):
                out.append(("restarts", "must give at least one restart for every size"))
        if protocol == "fixed-budget":
            if self.budget_flips is None:
                out.append(("budget_flips", "the fixed-budget protocol needs a flip budget"))
            elif self.budget_flips.coef < 0:
                out.append(("budget_flips", "must be non-negative"))
        return out

    def validate(self, protocol: str | None = None) -> "ExperimentPlan":
        problems = self.problems(protocol)
        if problems:
            raise PlanValidationError(problems)
        return self

    def to_dict(self) -> dict:
        return {
            "sizes": list(self.sizes),
            "p_values": list(self.p_values),
            "num_disorder": self.num_disorder,
            "restarts": None if self.restarts is None else str(self.restarts),
            "budget_flips": None if self.budget_flips is None else str(self.budget_flips),
            "master_seed": self.master_seed,
            "tie_break": self.tie_break,
        }


@dataclass
class DisorderResult:
    """All runs of one (N, P) cell on one disorder realization."""

    d: int
    seed: int
    flips: np.ndarray
    energies: np.ndarray

    @property
    def runs(self) -> int:
        return int(self.flips.size)

    @property
    def e_min(self) -> float:
        return float(self.energies.min())


@dataclass
class CellResult:
    protocol: str
    n: int
    p: float
    per_disorder: list = field(repr=False)

    @property
    def num_disorder(self) -> int:
        return len(self.per_disorder)

    @property
    def all_flips(self) -> np.ndarray:
        return np.concatenate([r.flips for r in self.per_disorder])

    @property
    def total_runs(self) -> int:
        return sum(r.runs for r in self.per_disorder)

    @property
    def total_flips(self) -> int:
        return int(sum(int(r.flips.sum()) for r in self.per_disorder))

    @property
    def runs_per_disorder(self):
        counts = {r.runs for r in self.per_disorder}
        if len(counts) == 1:
            return counts.pop()
        return self.total_runs / self.num_disorder

    @property
    def tau_mean(self) -> float:
        return float(self.all_flips.mean())

    @property
    def tau_stderr(self) -> float:
        return _stderr(self.all_flips)

    @property
    def e_min_values(self) -> np.ndarray:
        return np.array([r.e_min for r in self.per_disorder])

    @property
    def e_min_mean(self) -> float:
        return float(self.e_min_values.mean())

    @property
    def e_min_stderr(self) -> float:
        return _stderr(self.e_min_values)

    def row(self) -> dict:
        return {
            "protocol": self.protocol,
            "N": self.n,
            "P": self.p,
            "num_disorder": self.num_disorder,
            "runs_per_disorder": self.runs_per_disorder,
            "tau_mean": self.tau_mean,
            "tau_stderr": self.tau_stderr,
            "e_min_mean": self.e_min_mean,
            "e_min_stderr": self.e_min_stderr,
            "total_flips": self.total_flips,
        }


def _stderr(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0


@dataclass
class AggregateResult:
    protocol: str
    plan: ExperimentPlan
    cells: list

    def cell(self, n: int, p: float) -> CellResult:
        for c in self.cells:
            if c.n == n and c.p == p:
                return c
        raise KeyError((n, p))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for c in self.cells:
            w.writerow([_fmt(v) for v in c.row().values()])
        return buf.getvalue()

    def to_json_dict(self) -> dict:
        results = []
        for c in self.cells:
            row = c.row()
            row["per_disorder"] = [
                {
                    "d": r.d,
                    "seed": r.seed,
                    "runs": r.runs,
                    "flips": int(r.flips.sum()),
                    "tau_mean": float(r.flips.mean()),
                    "e_min": r.e_min,
                }
                for r in c.per_disorder
            ]
            results.append(row)
        return {
            "tool": "glassdescent",
            "version": __version__,
            "protocol": self.protocol,
            "plan": self.plan.to_dict(),
            "csv_columns": CSV_COLUMNS,
            "results": results,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


InstanceFactory = Callable[[int, int], Instance]


def _run_disorder(protocol, plan, n, d, instance_factory):
    seed = streams.disorder_seed(plan.master_seed, n, d)
    inst = instance_factory(n, seed)
    random_ties = plan.tie_break == "random"
    out = []
    for p in plan.p_values:
        flips, energies = [], []
        if protocol == "fixed-budget":
            budget = plan.budget_flips.resolve(n)
            spent = 0
            r = 0
            # soft budget: the run that crosses it completes; a zero-flip run is
            # charged one flip so degenerate instances still terminate
            while r == 0 or spent < budget:
                f, e = restart(inst, p, random_ties, streams.run_rng(plan.master_seed, n, p, d, r))
                flips.append(f)
                energies.append(e)
                spent += max(f, 1)
                r += 1
        else:
            for r in range(plan.restarts.resolve(n)):
                f, e = restart(inst, p, random_ties, streams.run_rng(plan.master_seed, n, p, d, r))
                flips.append(f)
                energies.append(e)
        out.append(
            DisorderResult(d, seed, np.array(flips, dtype=np.int64), np.array(energies) / n)
        )
    return out


def run_protocol(
    protocol: str,
    plan: ExperimentPlan,
    workers: int = 1,
    instance_factory: InstanceFactory | None = None,
) -> AggregateResult:
    """Run ``protocol`` over every (N, P) cell of ``plan``."""
    plan.validate(protocol)
    factory = instance_factory or generate_instance
    tasks = [(n, d) for n in plan.sizes for d in range(plan.num_disorder)]
    logger.info("%s: %d tasks on %d worker(s)", protocol, len(tasks), workers)

    def work(task):
        n, d = task
        res = _run_disorder(protocol, plan, n, d, factory)
        logger.debug("%s N=%d d=%d done", protocol, n, d)
        return res

    if workers <= 1:
        results = [work(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, tasks))

    by_task = dict(zip(tasks, results))
    cells = []
    for n in plan.sizes:
        for k, p in enumerate(plan.p_values):
            per = [by_task[(n, d)][k] for d in range(plan.num_disorder)]
            cells.append(CellResult(protocol, n, p, per))
    return AggregateResult(protocol, plan, cells)


def run_tau_scan(plan, workers=1, instance_factory=None) -> AggregateResult:
    return run_protocol("tau-scan", plan, workers, instance_factory)


def run_fixed_restarts(plan, workers=1, instance_factory=None) -> AggregateResult:
    return run_protocol("fixed-restarts", plan, workers, instance_factory)


def run_fixed_budget(plan, workers=1, instance_factory=None) -> AggregateResult:
    return run_protocol("fixed-budget", plan, workers, instance_factory)
