"""Closed-form resource estimates: gates per second-order Trotter step for
the JW and compact encodings, Trotter step scaling and shot overhead."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ContractError
from .model import LatticeSpec
from .noise import q_factor

JW = "JW"
COMPACT = "compact"


def _check_xy(x: int, y: int) -> None:
    if x < 2 or y < 2:
        raise ContractError(f"resource formulas need x, y >= 2, got {x}x{y}")


def n_jw(x: int, y: int) -> int:
    _check_xy(x, y)
    return 2 * y * x * x + 3 * x * y + 14 * x - 2 * y - 15


def n_compact(x: int, y: int) -> int:
    _check_xy(x, y)
    return 26 * x * y - 24 * (x + y)


def n_trotter_steps(n_qubits: int) -> int:
    """``ceil(sqrt(n_qubits / 8))``: 2 steps at 32 qubits, scaled as sqrt(N).

    Evaluated in integers to avoid float rounding at perfect squares.
    """
    if n_qubits < 1:
        raise ContractError("n_qubits must be >= 1")
    k = math.isqrt(n_qubits // 8)
    while 8 * k * k < n_qubits:
        k += 1
    return max(k, 1)


def gates_per_step(x: int, y: int, encoding: str) -> int:
    if encoding == JW:
        return n_jw(x, y)
    if encoding == COMPACT:
        return n_compact(x, y)
    raise ContractError(f"unknown encoding {encoding!r}")


@dataclass(frozen=True)
class ResourceEstimate:
    lattice: LatticeSpec
    encoding: str
    f: float
    n_steps: int
    gates_per_step: int
    total_2q: int
    q: float
    shot_overhead: float


def shot_overhead(lattice: LatticeSpec, encoding: str = JW, f: float = 0.998) -> ResourceEstimate:
    """``1/q^2`` with ``q = f^total`` and ``total = steps * per_step + 2(xy-1)``."""
    x, y = lattice.x, lattice.y
    per = gates_per_step(x, y, encoding)
    steps = n_trotter_steps(lattice.n_qubits)
    total = steps * per + 2 * (x * y - 1)
    q = q_factor(total, f)
    return ResourceEstimate(lattice, encoding, f, steps, per, total, q, q**-2)


def crossover_size(max_L: int = 64) -> int:
    """Smallest square side from which the compact encoding stays cheaper per step.

    The quadratic compact cost beats the cubic JW cost only asymptotically;
    at small sizes the order flips back and forth.
    """
    cheaper = [n_compact(L, L) < n_jw(L, L) for L in range(2, max_L + 1)]
    if not cheaper[-1]:
        raise ContractError(f"no crossover up to L={max_L}")
    k = len(cheaper) - 1
    while k > 0 and cheaper[k - 1]:
        k -= 1
    return k + 2


def sweep(sizes, fidelities, encodings=(JW, COMPACT)) -> list[ResourceEstimate]:
    return [shot_overhead(LatticeSpec(L, L), enc, f) for L in sizes for f in fidelities for enc in encodings]
