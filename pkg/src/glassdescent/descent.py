"""Greedy, reluctant and mixed single-spin-flip descent.

At every step a coin with probability ``p_greedy`` decides between the
greedy move (flip the spin with the most negative energy change) and the
reluctant move (flip the spin with the least negative energy change).  Only
strictly improving flips are eligible, and the run stops at the first
configuration where none exists.

The hot loop is compiled with numba and takes a ``numpy.random.Generator``
so every run owns its random stream.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from os import PathLike

import numba
import numpy as np

from .sk_model import (
    Instance,
    SpinState,
    _as_spins,
    _energy_from_fields,
    _init_fields,
    init_state,
)


class TieBreak(str, Enum):
    LOWEST_INDEX = "lowest-index"
    RANDOM = "random"


@dataclass(frozen=True)
class DescentParams:
    p_greedy: float = 1.0
    tie_break: TieBreak = TieBreak.LOWEST_INDEX
    run_seed: int = 0

    def __post_init__(self):
        p = float(self.p_greedy)
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p_greedy must lie in [0, 1], got {self.p_greedy}")
        object.__setattr__(self, "p_greedy", p)
        object.__setattr__(self, "tie_break", TieBreak(self.tie_break))

    @property
    def random_ties(self) -> bool:
        return self.tie_break is TieBreak.RANDOM

    def rng(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.run_seed))


@dataclass
class RunRecord:
    """Outcome of one descent."""

    flips: int
    final_energy_per_spin: float
    final_energy: float
    final_spins: np.ndarray | None = None
    disorder_index: int = 0
    restart_index: int = 0
    flipped: np.ndarray | None = None
    energies: np.ndarray | None = None


@numba.njit(nogil=True, cache=True)
def _pick(de, greedy, random_ties, rng):
    # greedy: most negative entry; reluctant: negative entry closest to zero
    n = de.size
    if greedy:
        m = 0.0
        for j in range(n):
            m = min(m, de[j])
        if m == 0.0:
            return -1
    else:
        m = -np.inf
        for j in range(n):
            d = de[j]
            m = max(m, d if d < 0.0 else -np.inf)
        if m == -np.inf:
            return -1
    skip = 0
    if random_ties:
        ties = 0
        for j in range(n):
            if de[j] == m:
                ties += 1
        if ties > 1:
            skip = rng.integers(0, ties)
    for j in range(n):
        if de[j] == m:
            if skip == 0:
                return j
            skip -= 1
    return -1


@numba.njit(nogil=True, cache=True)
def _select(spins, fields, p_greedy, random_ties, rng):
    # coin first, independent of the spectrum
    greedy = rng.random() < p_greedy
    return _pick(2.0 * spins * fields, greedy, random_ties, rng)


@numba.njit(nogil=True, cache=True)
def _random_spins(n, rng):
    u = rng.random(n)
    spins = np.empty(n, np.int8)
    for i in range(n):
        spins[i] = 1 if u[i] < 0.5 else -1
    return spins


@numba.njit(nogil=True, cache=True)
def _descend_kernel(J, spins, fields, energy, p_greedy, random_ties, rng, record):
    n = spins.size
    de = np.empty(n)
    for j in range(n):
        de[j] = 2.0 * spins[j] * fields[j]
    size = 64 if record else 0
    idx = np.empty(size, np.int64)
    ens = np.empty(size, np.float64)
    flips = 0
    while True:
        greedy = rng.random() < p_greedy
        k = _pick(de, greedy, random_ties, rng)
        if k < 0:
            break
        energy += de[k]
        old = spins[k]
        spins[k] = -old
        c = 2.0 * old
        row = J[k]
        for j in range(n):
            f = fields[j] - c * row[j]
            fields[j] = f
            de[j] = 2.0 * spins[j] * f
        if record:
            if flips == idx.size:
                grown = np.empty(2 * idx.size, np.int64)
                grown[:flips] = idx
                idx = grown
                grown_e = np.empty(2 * ens.size, np.float64)
                grown_e[:flips] = ens
                ens = grown_e
            idx[flips] = k
            ens[flips] = energy
        flips += 1
    keep = flips if record else 0
    return flips, energy, idx[:keep], ens[:keep]


@numba.njit(nogil=True, cache=True)
def _random_restart(J, p_greedy, random_ties, rng):
    spins = _random_spins(J.shape[0], rng)
    fields = _init_fields(J, spins)
    energy = _energy_from_fields(spins, fields)
    flips, energy, _, _ = _descend_kernel(
        J, spins, fields, energy, p_greedy, random_ties, rng, False
    )
    return flips, energy


def restart(instance: Instance, p_greedy: float, random_ties: bool, rng) -> tuple[int, float]:
    """One descent from a fresh uniform initial drawn from ``rng``.

    Same result as ``descend(instance, random_initial(n, rng), ..., rng=rng)``
    without the Python-side bookkeeping; returns ``(flips, final_energy)``.
    """
    return _random_restart(instance.couplings, p_greedy, random_ties, rng)


def random_initial(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random configuration, each spin +1 or -1 with probability 1/2."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    return _random_spins(int(n), rng)


def select_move(state: SpinState, params: DescentParams, rng: np.random.Generator):
    """Index of the spin the dynamics would flip next, or ``None`` if stable.

    Consumes one coin draw from ``rng`` (plus tie draws under random
    tie-breaking), exactly as a step of :func:`descend` does.
    """
    k = _select(state.spins, state.local_fields, params.p_greedy, params.random_ties, rng)
    return None if k < 0 else int(k)


def run_state(
    state: SpinState,
    p_greedy: float,
    random_ties: bool,
    rng: np.random.Generator,
    record: bool = False,
):
    """Descend in place from ``state``; returns ``(flipped, energies)`` or ``None``."""
    flips, e, idx, ens = _descend_kernel(
        state.instance.couplings,
        state.spins,
        state.local_fields,
        state.energy,
        p_greedy,
        random_ties,
        rng,
        record,
    )
    state.energy = e
    state.flips += flips
    return (idx, ens) if record else None


def descend(
    instance: Instance,
    initial_spins,
    params: DescentParams,
    *,
    rng: np.random.Generator | None = None,
    keep_spins: bool = True,
    trace: bool = False,
    disorder_index: int = 0,
    restart_index: int = 0,
) -> RunRecord:
    """Run the dynamics from ``initial_spins`` to a 1-spin-flip stable state.

    The random stream is ``params.rng()`` unless ``rng`` is given.  With
    ``trace=True`` the record also carries the flipped indices and the
    energy after each flip.
    """
    state = init_state(instance, _as_spins(instance, initial_spins))
    if rng is None:
        rng = params.rng()
    traced = run_state(state, params.p_greedy, params.random_ties, rng, record=trace)
    rec = RunRecord(
        flips=state.flips,
        final_energy_per_spin=state.energy / instance.n,
        final_energy=state.energy,
        final_spins=state.spins if keep_spins else None,
        disorder_index=disorder_index,
        restart_index=restart_index,
    )
    if traced is not None:
        rec.flipped, rec.energies = traced
    return rec


def write_trace(record: RunRecord, path: str | PathLike) -> None:
    """Dump a traced run as ``step flipped_index energy`` lines (steps from 1)."""
    if record.flipped is None:
        raise ValueError("record was produced without trace=True")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for step, (k, e) in enumerate(zip(record.flipped, record.energies), start=1):
            fh.write(f"{step} {int(k)} {float(e)!r}\n")
