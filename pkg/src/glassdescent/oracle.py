"""Exhaustive reference results for small instances.

Configurations are encoded as integers: bit ``i`` set means spin ``i`` is
``-1``.  :func:`exact_solve` walks all ``2^N`` codes in Gray-code order with
O(N) incremental updates, then re-checks every stable candidate from
scratch.  :func:`basin_census` runs the descent from every configuration and
counts where each one lands.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numba
import numpy as np

from . import analysis, streams
from .descent import DescentParams, _descend_kernel
from .errors import InvariantViolation, OracleGuardError
from .sk_model import Instance, _energy_from_fields, _init_fields, generate_instance

EXACT_MAX_N = 24
BASIN_MAX_N = 20

# stable candidates whose incremental spectrum dips below -_CANDIDATE_TOL are
# discarded without a from-scratch check; drift over 2^24 steps is ~1e-12
_CANDIDATE_TOL = 1e-9


@dataclass
class ExactSolution:
    n: int
    ground_energy_per_spin: float
    stable_codes: np.ndarray
    stable_states: np.ndarray
    stable_energy_per_spin: np.ndarray
    is_ground: np.ndarray

    @property
    def ground_states(self) -> np.ndarray:
        return self.stable_states[self.is_ground]

    @property
    def ground_codes(self) -> np.ndarray:
        return self.stable_codes[self.is_ground]

    def index_of(self, spins) -> int:
        """Row of ``spins`` in the stable-state table, or -1."""
        code = spins_to_code(spins)
        k = int(np.searchsorted(self.stable_codes, code))
        if k < self.stable_codes.size and self.stable_codes[k] == code:
            return k
        return -1


@dataclass
class BasinReport:
    solution: ExactSolution
    counts: np.ndarray
    p_greedy: float

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def ground_fraction(self) -> float:
        """Fraction of all initial configurations that descend to a ground state."""
        return float(self.counts[self.solution.is_ground].sum()) / self.total

    def rows(self):
        sol = self.solution
        for k in range(sol.stable_codes.size):
            yield k, float(sol.stable_energy_per_spin[k]), int(self.counts[k]), bool(sol.is_ground[k])

    def write_csv(self, path_or_file) -> None:
        if hasattr(path_or_file, "write"):
            _write_basin_rows(path_or_file, self)
            return
        with open(path_or_file, "w", newline="", encoding="ascii") as fh:
            _write_basin_rows(fh, self)


def _write_basin_rows(fh, report: BasinReport) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["stable_state_id", "energy_per_spin", "basin_count", "is_ground"])
    for k, e, c, g in report.rows():
        w.writerow([k, repr(e), c, "true" if g else "false"])


def spins_to_code(spins) -> int:
    s = np.asarray(spins)
    return int(np.sum((s < 0).astype(np.int64) << np.arange(s.size, dtype=np.int64)))


def code_to_spins(code: int, n: int) -> np.ndarray:
    bits = (int(code) >> np.arange(n, dtype=np.int64)) & 1
    return (1 - 2 * bits).astype(np.int8)


@numba.njit(nogil=True, cache=True)
def _code_spins(code, n, out):
    for i in range(n):
        out[i] = -1 if (code >> i) & 1 else 1


@numba.njit(nogil=True, cache=True)
def _gray_scan(J, tol):
    n = J.shape[0]
    spins = np.ones(n, np.int8)
    fields = _init_fields(J, spins)
    code = 0
    found = np.empty(64, np.int64)
    count = 0
    total = 1 << n
    for t in range(total):
        if t > 0:
            k = 0
            while not (t >> k) & 1:
                k += 1
            c = 2.0 * spins[k]
            row = J[k]
            for j in range(n):
                fields[j] -= c * row[j]
            spins[k] = -spins[k]
            code ^= 1 << k
        m = 0.0
        for j in range(n):
            m = min(m, 2.0 * spins[j] * fields[j])
        if m >= -tol:
            if count == found.size:
                grown = np.empty(2 * found.size, np.int64)
                grown[:count] = found
                found = grown
            found[count] = code
            count += 1
    return found[:count]


@numba.njit(nogil=True, cache=True)
def _verify(J, codes):
    # from-scratch stability check and energy for each candidate code
    n = J.shape[0]
    keep = np.zeros(codes.size, np.bool_)
    energies = np.empty(codes.size)
    spins = np.empty(n, np.int8)
    for c in range(codes.size):
        _code_spins(codes[c], n, spins)
        fields = _init_fields(J, spins)
        ok = True
        for j in range(n):
            if 2.0 * spins[j] * fields[j] < 0.0:
                ok = False
                break
        keep[c] = ok
        energies[c] = _energy_from_fields(spins, fields)
    return keep, energies


@numba.njit(nogil=True, cache=True)
def _basin_kernel(J, p_greedy, random_ties, rng):
    n = J.shape[0]
    total = 1 << n
    terminal = np.empty(total, np.int64)
    spins = np.empty(n, np.int8)
    for code in range(total):
        _code_spins(code, n, spins)
        fields = _init_fields(J, spins)
        energy = _energy_from_fields(spins, fields)
        _descend_kernel(J, spins, fields, energy, p_greedy, random_ties, rng, False)
        end = 0
        for i in range(n):
            if spins[i] < 0:
                end |= 1 << i
        terminal[code] = end
    return terminal


def exact_solve(instance: Instance) -> ExactSolution:
    """Exact ground state and full census of 1-spin-flip stable states."""
    n = instance.n
    if n > EXACT_MAX_N:
        raise OracleGuardError(
            f"exhaustive enumeration is limited to n <= {EXACT_MAX_N} (2^n configurations); got n={n}"
        )
    J = instance.couplings
    candidates = np.sort(_gray_scan(J, _CANDIDATE_TOL))
    keep, energies = _verify(J, candidates)
    codes = candidates[keep]
    e = energies[keep] / n
    # the ground state is always stable, so the minimum over stable states is global
    e0 = float(e.min())
    is_ground = np.isclose(e, e0, rtol=1e-12, atol=1e-12)
    states = np.array([code_to_spins(c, n) for c in codes], dtype=np.int8).reshape(-1, n)
    return ExactSolution(n, e0, codes, states, e, is_ground)


@dataclass
class QuenchedEstimate:
    mean: float
    stderr: float
    per_instance: np.ndarray
    seeds: list


def quenched_ground_energy(n: int, num_disorder: int, seed: int) -> QuenchedEstimate:
    """Disorder average of the exact per-spin ground energy."""
    if n > EXACT_MAX_N:
        raise OracleGuardError(f"n={n} exceeds the enumeration guard n <= {EXACT_MAX_N}")
    if num_disorder < 1:
        raise ValueError("num_disorder must be >= 1")
    seeds = [streams.disorder_seed(seed, n, d) for d in range(num_disorder)]
    values = np.array([exact_solve(generate_instance(n, s)).ground_energy_per_spin for s in seeds])
    summary = analysis.summarize(values)
    return QuenchedEstimate(summary.mean, summary.stderr, values, seeds)


def basin_census(
    instance: Instance,
    params: DescentParams,
    solution: ExactSolution | None = None,
) -> BasinReport:
    """Descend from all ``2^N`` configurations and count terminal states.

    Stochastic dynamics (``0 < P < 1`` or random tie-breaks) consume a single
    stream ``params.rng()`` in configuration-code order.
    """
    n = instance.n
    if n > BASIN_MAX_N:
        raise OracleGuardError(
            f"basin census runs 2^n descents and is limited to n <= {BASIN_MAX_N}; got n={n}"
        )
    if solution is None:
        solution = exact_solve(instance)
    terminal = _basin_kernel(instance.couplings, params.p_greedy, params.random_ties, params.rng())
    ends, hits = np.unique(terminal, return_counts=True)
    rows = np.searchsorted(solution.stable_codes, ends)
    rows = np.minimum(rows, solution.stable_codes.size - 1)
    missing = solution.stable_codes[rows] != ends
    if np.any(missing):
        raise InvariantViolation(
            f"{int(missing.sum())} descent end points are not in the stable-state census"
        )
    counts = np.zeros(solution.stable_codes.size, dtype=np.int64)
    counts[rows] = hits
    return BasinReport(solution, counts, params.p_greedy)
