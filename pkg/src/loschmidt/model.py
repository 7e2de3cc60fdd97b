"""Fermi-Hubbard model on open rectangular lattices under a snake Jordan-Wigner layout.

Sites are ``(row, col)`` tuples with ``0 <= row < y`` and ``0 <= col < x``.
The snake runs along row 0 left to right, row 1 right to left, and so on.
Spin-up modes occupy qubits ``0 .. n_sites-1`` in snake order and spin-down
modes occupy ``n_sites .. 2*n_sites-1`` in the same order.

Bit convention used throughout the package: qubit ``q`` is character ``q``
of a bitstring, i.e. the most significant bit of the basis index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

from .errors import ContractError

Site = tuple[int, int]

DEFAULT_MAX_DENSE_QUBITS = 26


@dataclass(frozen=True)
class LatticeSpec:
    x: int
    y: int

    def __post_init__(self):
        if int(self.x) != self.x or int(self.y) != self.y or self.x < 1 or self.y < 1:
            raise ContractError(f"lattice dimensions must be positive integers, got {self.x}x{self.y}")

    @property
    def n_sites(self) -> int:
        return self.x * self.y

    @property
    def n_qubits(self) -> int:
        return 2 * self.n_sites

    def sites(self) -> list[Site]:
        return [(r, c) for r in range(self.y) for c in range(self.x)]

    def bonds(self) -> list[tuple[Site, Site]]:
        """Nearest-neighbour bonds, horizontal then vertical, open boundaries."""
        horizontal = [((r, c), (r, c + 1)) for r in range(self.y) for c in range(self.x - 1)]
        vertical = [((r, c), (r + 1, c)) for r in range(self.y - 1) for c in range(self.x)]
        return horizontal + vertical

    def neighbors(self, site: Site) -> list[Site]:
        r, c = site
        out = []
        for dr, dc in ((0, -1), (0, 1), (-1, 0), (1, 0)):
            rr, cc = r + dr, c + dc
            if 0 <= rr < self.y and 0 <= cc < self.x:
                out.append((rr, cc))
        return out

    def check_dense(self, max_qubits: int = DEFAULT_MAX_DENSE_QUBITS) -> None:
        if self.n_qubits > max_qubits:
            raise ContractError(
                f"{self.x}x{self.y} lattice needs {self.n_qubits} qubits; dense simulation is capped at {max_qubits}"
            )

    def __str__(self) -> str:
        return f"{self.x}x{self.y}"


@dataclass(frozen=True)
class HubbardParams:
    J: float = 0.5
    U: float = 2.0

    def __post_init__(self):
        if not (math.isfinite(self.J) and math.isfinite(self.U)):
            raise ContractError(f"J and U must be finite, got J={self.J}, U={self.U}")


@dataclass(frozen=True)
class JWLayout:
    snake_order: tuple[Site, ...]
    site_to_qubit_up: dict[Site, int] = field(hash=False, compare=False)
    site_to_qubit_down: dict[Site, int] = field(hash=False, compare=False)

    @property
    def n_sites(self) -> int:
        return len(self.snake_order)

    def qubit(self, site: Site, spin: int) -> int:
        """Qubit for ``site``; spin 0 is up, 1 is down."""
        return self.site_to_qubit_up[site] if spin == 0 else self.site_to_qubit_down[site]

    def position(self, site: Site) -> int:
        return self.site_to_qubit_up[site]


@dataclass(frozen=True)
class PauliTerm:
    """``coefficient * P`` with ``P`` a tensor product given as sorted (qubit, letter) pairs.

    An empty ``ops`` tuple is the identity (constant energy shift).
    """

    coefficient: float
    ops: tuple[tuple[int, str], ...]

    def __post_init__(self):
        if not math.isfinite(self.coefficient):
            raise ContractError("Pauli coefficient must be finite")
        for q, p in self.ops:
            if p not in "XYZ":
                raise ContractError(f"unknown Pauli letter {p!r}")

    @property
    def string(self) -> dict[int, str]:
        return dict(self.ops)

    def label(self, n_qubits: int) -> str:
        chars = ["I"] * n_qubits
        for q, p in self.ops:
            chars[q] = p
        return "".join(chars)


@dataclass(frozen=True)
class ProductState:
    """Computational-basis state, ``bits[q]`` is the occupation of qubit ``q``."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise ContractError("bits must be 0 or 1")

    @classmethod
    def from_bitstring(cls, s: str) -> ProductState:
        return cls(tuple(int(ch) for ch in s))

    @classmethod
    def from_index(cls, index: int, n_qubits: int) -> ProductState:
        return cls(tuple((index >> (n_qubits - 1 - q)) & 1 for q in range(n_qubits)))

    @property
    def n_qubits(self) -> int:
        return len(self.bits)

    @property
    def n_sites(self) -> int:
        """Sites of a two-register (up, down) state; odd widths have none."""
        if len(self.bits) % 2:
            raise ContractError("spin-resolved quantities need an even number of qubits (two spin registers)")
        return len(self.bits) // 2

    @property
    def n_up(self) -> int:
        return sum(self.bits[: self.n_sites])

    @property
    def n_down(self) -> int:
        return sum(self.bits[self.n_sites :])

    @cached_property
    def index(self) -> int:
        out = 0
        for b in self.bits:
            out = (out << 1) | b
        return out

    @property
    def bitstring(self) -> str:
        return "".join(map(str, self.bits))

    @property
    def hex(self) -> str:
        width = (self.n_qubits + 3) // 4
        return format(self.index, f"0{width}x")

    def occupied(self) -> list[int]:
        return [q for q, b in enumerate(self.bits) if b]

    def double_occupancy(self) -> float:
        """Average double occupancy per site."""
        ns = self.n_sites
        return sum(self.bits[i] * self.bits[i + ns] for i in range(ns)) / ns


def build_snake_layout(lattice: LatticeSpec) -> JWLayout:
    order: list[Site] = []
    for r in range(lattice.y):
        cols = range(lattice.x) if r % 2 == 0 else range(lattice.x - 1, -1, -1)
        order.extend((r, c) for c in cols)
    ns = lattice.n_sites
    up = {s: k for k, s in enumerate(order)}
    down = {s: ns + k for k, s in enumerate(order)}
    return JWLayout(tuple(order), up, down)


def hopping_terms(lattice: LatticeSpec, params: HubbardParams, layout: JWLayout) -> list[tuple[PauliTerm, PauliTerm]]:
    """(XX, YY) pairs, one per bond and spin, with the JW Z string in between."""
    out = []
    coeff = params.J / 2
    for a, b in lattice.bonds():
        for spin in (0, 1):
            p, q = sorted((layout.qubit(a, spin), layout.qubit(b, spin)))
            zs = tuple((k, "Z") for k in range(p + 1, q))
            out.append(
                (
                    PauliTerm(coeff, ((p, "X"),) + zs + ((q, "X"),)),
                    PauliTerm(coeff, ((p, "Y"),) + zs + ((q, "Y"),)),
                )
            )
    return out


def interaction_terms(lattice: LatticeSpec, params: HubbardParams, layout: JWLayout) -> list[PauliTerm]:
    out = []
    u4 = params.U / 4
    for s in layout.snake_order:
        qu, qd = layout.qubit(s, 0), layout.qubit(s, 1)
        out += [
            PauliTerm(u4, ()),
            PauliTerm(-u4, ((qu, "Z"),)),
            PauliTerm(-u4, ((qd, "Z"),)),
            PauliTerm(u4, ((qu, "Z"), (qd, "Z"))),
        ]
    return out


def hamiltonian_terms(lattice: LatticeSpec, params: HubbardParams, layout: JWLayout | None = None) -> list[PauliTerm]:
    """Qubit Hamiltonian: hopping ``J/2 (XX+YY) Z..Z`` per bond and spin, onsite ``U/4 (I-Z)(I-Z)``.

    The hopping sign is the one the JW image carries for ``+J (a^dag a + h.c.)``.
    On a bipartite lattice this is gauge-equivalent to ``-J``: a diagonal
    sign flip on one sublattice maps one to the other, leaving spectra and
    Z-basis Loschmidt amplitudes unchanged.
    """
    layout = layout or build_snake_layout(lattice)
    terms = [t for pair in hopping_terms(lattice, params, layout) for t in pair]
    return terms + interaction_terms(lattice, params, layout)


def neel_state(lattice: LatticeSpec, layout: JWLayout | None = None) -> ProductState:
    """Alternating up/down occupation along the snake, starting with up."""
    layout = layout or build_snake_layout(lattice)
    bits = [0] * lattice.n_qubits
    for k, s in enumerate(layout.snake_order):
        bits[layout.qubit(s, k % 2)] = 1
    return ProductState(tuple(bits))


def diagonal_energy(psi: ProductState, params: HubbardParams) -> float:
    """``<psi|H|psi>`` for a product state: only the onsite term survives."""
    return params.U * psi.double_occupancy() * psi.n_sites
