"""Sherrington-Kirkpatrick instances, energies and incremental flip updates.

The energy of a configuration ``s`` in ``{-1, +1}^N`` is

    H(J, s) = -1/2 * sum_{i,j} J_ij s_i s_j

with ``J`` symmetric, zero on the diagonal and Gaussian off the diagonal
with mean 0 and variance ``1/N``.  The local field of spin ``i`` is
``h_i = sum_{j != i} J_ij s_j`` and flipping spin ``i`` changes the energy by
exactly ``2 s_i h_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from os import PathLike

import numba
import numpy as np

from .errors import DimensionError, InstanceFormatError

SEED_MAX = 2**64 - 1


def _check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


@dataclass(frozen=True, eq=False)
class Instance:
    """One disorder realization: ``n`` spins and their coupling matrix.

    The coupling array is made read-only so an instance can be shared by
    any number of concurrent descents.
    """

    n: int
    couplings: np.ndarray
    seed: int = 0

    def __post_init__(self):
        J = np.array(self.couplings, dtype=np.float64, copy=True)
        if J.shape != (self.n, self.n):
            raise DimensionError(f"couplings must be {self.n}x{self.n}, got {J.shape}")
        if not np.array_equal(J, J.T):
            raise ValueError("couplings must be symmetric")
        if np.any(np.diag(J) != 0.0):
            raise ValueError("couplings must have a zero diagonal")
        J.flags.writeable = False
        object.__setattr__(self, "couplings", J)
        object.__setattr__(self, "seed", _check_seed(self.seed))

    def scaled(self, factor: float) -> "Instance":
        """Copy with every coupling multiplied by ``factor``."""
        return Instance(self.n, self.couplings * factor, self.seed)


def generate_instance(n: int, disorder_seed: int) -> Instance:
    """Draw an SK instance with i.i.d. N(0, 1/n) couplings.

    The upper triangle is filled row by row from a PCG64 stream seeded with
    ``disorder_seed``, so the same ``(n, disorder_seed)`` always yields the
    same matrix.
    """
    if int(n) != n or n < 2:
        raise ValueError(f"instance size must be an integer >= 2, got {n}")
    n = int(n)
    rng = np.random.Generator(np.random.PCG64(_check_seed(disorder_seed)))
    iu = np.triu_indices(n, k=1)
    J = np.zeros((n, n))
    J[iu] = rng.normal(0.0, np.sqrt(1.0 / n), size=iu[0].size)
    J += J.T
    return Instance(n, J, disorder_seed)


def instance_from_upper(n: int, entries, seed: int = 0) -> Instance:
    """Build an instance from ``(i, j, J_ij)`` triples with ``i < j``.

    Missing pairs are zero.  Handy for small hand-made instances.
    """
    J = np.zeros((n, n))
    for i, j, value in entries:
        if not 0 <= i < j < n:
            raise ValueError(f"need 0 <= i < j < {n}, got ({i}, {j})")
        J[i, j] = J[j, i] = value
    return Instance(n, J, seed)


def _as_spins(instance: Instance, spins) -> np.ndarray:
    s = np.asarray(spins)
    if s.shape != (instance.n,):
        raise DimensionError(
            f"spin vector has shape {s.shape}, instance has {instance.n} spins"
        )
    if not np.all((s == 1) | (s == -1)):
        raise ValueError("spins must be +1 or -1")
    return s.astype(np.int8)


def energy(instance: Instance, spins) -> float:
    """From-scratch energy ``-1/2 s^T J s``."""
    s = _as_spins(instance, spins).astype(np.float64)
    return float(-0.5 * s @ (instance.couplings @ s))


@dataclass(eq=False)
class SpinState:
    """A configuration with cached local fields and energy.

    Single-owner and mutable; ``apply_flip`` keeps the caches coherent at
    O(N) cost per flip.
    """

    instance: Instance
    spins: np.ndarray
    local_fields: np.ndarray
    energy: float
    flips: int = field(default=0)

    @property
    def n(self) -> int:
        return self.instance.n

    def _check_index(self, i) -> int:
        if not 0 <= i < self.n:
            raise IndexError(f"spin index {i} out of range for n={self.n}")
        return int(i)

    def delta_energy(self, i: int) -> float:
        """Energy change of flipping spin ``i``; the state is unchanged."""
        i = self._check_index(i)
        return 2.0 * self.spins[i] * self.local_fields[i]

    def delta_spectrum(self) -> np.ndarray:
        """Energy changes for every single flip, as a new array."""
        return 2.0 * self.spins * self.local_fields

    def apply_flip(self, i: int) -> "SpinState":
        i = self._check_index(i)
        old = self.spins[i]
        self.energy += 2.0 * old * self.local_fields[i]
        # J_ii == 0 so h_i is untouched by this update
        self.local_fields -= (2.0 * old) * self.instance.couplings[i]
        self.spins[i] = -old
        self.flips += 1
        return self

    def is_stable(self) -> bool:
        """True when no single flip strictly lowers the energy."""
        return bool(np.all(self.delta_spectrum() >= 0.0))

    def copy(self) -> "SpinState":
        return SpinState(
            self.instance,
            self.spins.copy(),
            self.local_fields.copy(),
            self.energy,
            self.flips,
        )


@numba.njit(nogil=True, cache=True)
def _init_fields(J, spins):
    # row accumulation: vectorizes, and negating spins negates fields exactly
    n = spins.size
    fields = np.zeros(n)
    for i in range(n):
        c = float(spins[i])
        row = J[i]
        for j in range(n):
            fields[j] += c * row[j]
    return fields


@numba.njit(nogil=True, cache=True)
def _energy_from_fields(spins, fields):
    e = 0.0
    for i in range(spins.size):
        e += spins[i] * fields[i]
    return -0.5 * e


def init_state(instance: Instance, spins) -> SpinState:
    """Compute fields and energy from scratch for ``spins``."""
    s = _as_spins(instance, spins)
    h = _init_fields(instance.couplings, s)
    return SpinState(instance, s, h, float(_energy_from_fields(s, h)))


def delta_energy(state: SpinState, i: int) -> float:
    return state.delta_energy(i)


def apply_flip(state: SpinState, i: int) -> SpinState:
    return state.apply_flip(i)


def parse_spins(text: str) -> np.ndarray:
    """Parse a compact spin string such as ``"+-+"`` into an int8 vector."""
    lookup = {"+": 1, "-": -1}
    try:
        return np.array([lookup[c] for c in text.strip()], dtype=np.int8)
    except KeyError as exc:
        raise ValueError(f"spin strings use only '+' and '-', got {text!r}") from exc


def format_spins(spins) -> str:
    return "".join("+" if s > 0 else "-" for s in spins)


# Instance file format:
#   SK <N> <seed>
#   i j J_ij        (one line per pair i < j, 0-based, row-major order)


def save_instance(instance: Instance, path: str | PathLike) -> None:
    J = instance.couplings
    lines = [f"SK {instance.n} {instance.seed}"]
    for i in range(instance.n):
        for j in range(i + 1, instance.n):
            lines.append(f"{i} {j} {float(J[i, j])!r}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_instance(path: str | PathLike) -> Instance:
    with open(path, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise InstanceFormatError("empty file", 1)
    head = lines[0].split()
    if len(head) != 3 or head[0] != "SK":
        raise InstanceFormatError("header must be 'SK <N> <seed>'", 1)
    try:
        n, seed = int(head[1]), int(head[2])
    except ValueError:
        raise InstanceFormatError("N and seed must be integers", 1) from None
    if n < 2:
        raise InstanceFormatError(f"N must be >= 2, got {n}", 1)
    if not 0 <= seed <= SEED_MAX:
        raise InstanceFormatError("seed must be a 64-bit unsigned integer", 1)

    J = np.zeros((n, n))
    seen = np.zeros((n, n), dtype=bool)
    count = 0
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise InstanceFormatError("expected 'i j J_ij'", lineno)
        try:
            i, j, value = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise InstanceFormatError("could not parse 'i j J_ij'", lineno) from None
        if not 0 <= i < j < n:
            raise InstanceFormatError(f"need 0 <= i < j < {n}, got ({i}, {j})", lineno)
        if not np.isfinite(value):
            raise InstanceFormatError("coupling must be finite", lineno)
        if seen[i, j]:
            raise InstanceFormatError(f"duplicate pair ({i}, {j})", lineno)
        seen[i, j] = True
        J[i, j] = J[j, i] = value
        count += 1
    expected = n * (n - 1) // 2
    if count != expected:
        raise InstanceFormatError(
            f"expected {expected} coupling lines, found {count}", len(lines)
        )
    return Instance(n, J, seed)
