"""Trotter, GHZ-preparation and Loschmidt circuits plus closed-form gate counts.

Fermionic swaps are compiled as "CZ on the hardware, swap in software":
every mode stays on its physical qubit for the whole circuit and an FSWAP
only changes the Jordan-Wigner ordering used by later gates. A hopping term
between two modes that are adjacent in the current ordering is then a bare
``XXPhase . YYPhase`` on their qubits.

With this bookkeeping one Trotter step realises ``D . U_step`` where ``D``
is the (diagonal, +-1) product of the step's CZs, and the mirrored step
realises ``U_step' . D``. Pairs of steps therefore cancel the ``D``'s
exactly; an odd step count leaves one ``D`` which acts on the reference
product state as the sign returned by :meth:`Circuit.fswap_sign`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import ContractError
from .gates import CNOT, FSWAP, Gate, GPhase, H, Rz, XXPhase, YYPhase, ZZPhase
from .model import (
    HubbardParams,
    JWLayout,
    LatticeSpec,
    ProductState,
    Site,
    build_snake_layout,
    diagonal_energy,
)

GHZ = "GHZ"
HADAMARD = "Hadamard"


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...]
    relabel: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if not self.relabel:
            object.__setattr__(self, "relabel", _relabel_from(self.n_qubits, self.gates))
        if sorted(self.relabel) != list(range(self.n_qubits)):
            raise ContractError("relabel must be a permutation of the qubits")
        for g in self.gates:
            if any(not 0 <= t < self.n_qubits for t in g.targets):
                raise ContractError(f"gate {g.to_text()} outside {self.n_qubits} qubits")

    def __len__(self) -> int:
        return len(self.gates)

    def __add__(self, other: Circuit) -> Circuit:
        if other.n_qubits != self.n_qubits:
            raise ContractError("cannot concatenate circuits of different widths")
        return Circuit(self.n_qubits, self.gates + other.gates)

    @property
    def two_qubit_count(self) -> int:
        return sum(g.is_two_qubit for g in self.gates)

    def count(self, *kinds: str) -> int:
        return sum(g.kind in kinds for g in self.gates)

    def inverse(self) -> Circuit:
        return Circuit(self.n_qubits, tuple(g.inverse() for g in reversed(self.gates)))

    def fswap_sign(self, psi: ProductState) -> int:
        """Sign the software-swap bookkeeping leaves on ``psi`` (product of CZ phases)."""
        s = 1
        for g in self.gates:
            if g.kind == "FSWAP" and psi.bits[g.targets[0]] and psi.bits[g.targets[1]]:
                s = -s
        return s

    def to_text(self) -> str:
        lines = [f"qubits {self.n_qubits}"] + [g.to_text() for g in self.gates]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> Circuit:
        lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not lines or not lines[0].startswith("qubits "):
            raise ContractError("circuit text must start with 'qubits N'")
        n = int(lines[0].split()[1])
        return cls(n, tuple(Gate.from_text(ln) for ln in lines[1:]))


def _relabel_from(n: int, gates) -> tuple[int, ...]:
    """JW ordering after the circuit: entry ``k`` is the qubit holding position ``k``."""
    order = list(range(n))
    where = list(range(n))
    for g in gates:
        if g.kind == "FSWAP":
            a, b = g.targets
            pa, pb = where[a], where[b]
            order[pa], order[pb] = b, a
            where[a], where[b] = pb, pa
    return tuple(order)


@dataclass(frozen=True)
class FswapRound:
    """One layer of the swap network.

    ``column_pairs`` are the row slots swapped (identically in every row and
    both spin registers), ``pairs`` the resulting qubit pairs and ``bonds``
    the lattice bonds that are JW-adjacent after the layer and not yet used.
    """

    column_pairs: tuple[tuple[int, int], ...]
    pairs: tuple[tuple[int, int], ...]
    bonds: tuple[tuple[Site, Site], ...]


def _jw_position(lattice: LatticeSpec, slot_of: list[int], site: Site) -> int:
    r, c = site
    s = slot_of[c]
    return r * lattice.x + (s if r % 2 == 0 else lattice.x - 1 - s)


def build_fswap_network(lattice: LatticeSpec, layout: JWLayout | None = None) -> list[FswapRound]:
    """Rounds of column swaps that make every lattice bond JW-adjacent once.

    Round 0 has no swaps and carries the bonds adjacent in the plain snake
    (all horizontal bonds and the vertical bonds at row turns). Later rounds
    alternate swaps of slot pairs (0,1),(2,3),... and (1,2),(3,4),... until
    every vertical bond has been adjacent. For ``x == 2`` this is a single
    round of ``y`` swaps per spin.
    """
    layout = layout or build_snake_layout(lattice)
    x = lattice.x
    sigma = list(range(x))  # slot -> column
    slot_of = list(range(x))  # column -> slot
    remaining = list(lattice.bonds())

    def harvest() -> tuple[tuple[Site, Site], ...]:
        nonlocal remaining
        ready = [b for b in remaining if abs(_jw_position(lattice, slot_of, b[0]) - _jw_position(lattice, slot_of, b[1])) == 1]
        remaining = [b for b in remaining if b not in ready]
        return tuple(ready)

    rounds = [FswapRound((), (), harvest())]
    parity = 0
    max_rounds = 2 * x + 2
    while remaining:
        if len(rounds) > max_rounds:  # pragma: no cover - defensive
            raise ContractError("swap network failed to converge")
        col_pairs = tuple((j, j + 1) for j in range(parity, x - 1, 2))
        parity ^= 1
        if not col_pairs:
            continue
        pairs = []
        for spin in (0, 1):
            for r in range(lattice.y):
                for j, k in col_pairs:
                    pairs.append((layout.qubit((r, sigma[j]), spin), layout.qubit((r, sigma[k]), spin)))
        for j, k in col_pairs:
            sigma[j], sigma[k] = sigma[k], sigma[j]
        for s, c in enumerate(sigma):
            slot_of[c] = s
        rounds.append(FswapRound(col_pairs, tuple(pairs), harvest()))
    return rounds


def onsite_layer(lattice: LatticeSpec, params: HubbardParams, layout: JWLayout, dt: float) -> list[Gate]:
    """``exp(-i H_int dt)``: per site ZZPhase + two Rz + a global phase."""
    a = params.U * dt / 2
    out: list[Gate] = []
    for s in layout.snake_order:
        qu, qd = layout.qubit(s, 0), layout.qubit(s, 1)
        out += [ZZPhase(qu, qd, a), Rz(qu, -a), Rz(qd, -a), GPhase(params.U * dt / 4)]
    return out


def hopping_layer(
    lattice: LatticeSpec, params: HubbardParams, layout: JWLayout, dt: float, network: list[FswapRound] | None = None
) -> list[Gate]:
    network = network if network is not None else build_fswap_network(lattice, layout)
    alpha = params.J * dt
    out: list[Gate] = []
    for rnd in network:
        out += [FSWAP(a, b) for a, b in rnd.pairs]
        for a, b in rnd.bonds:
            for spin in (0, 1):
                p, q = sorted((layout.qubit(a, spin), layout.qubit(b, spin)))
                out += [XXPhase(p, q, alpha), YYPhase(p, q, alpha)]
    return out


def build_trotter_step(
    lattice: LatticeSpec,
    params: HubbardParams,
    layout: JWLayout | None,
    dt: float,
    reversed: bool = False,
    include_onsite: bool = True,
) -> Circuit:
    """One first-order step: onsite layer, then the hopping layer.

    ``reversed`` mirrors the hopping layer so the swap ordering unwinds.
    """
    layout = layout or build_snake_layout(lattice)
    gates = onsite_layer(lattice, params, layout, dt) if include_onsite else []
    hop = hopping_layer(lattice, params, layout, dt)
    gates += hop[::-1] if reversed else hop
    return Circuit(lattice.n_qubits, tuple(gates))


def ghz_pilot(psi0: ProductState) -> int:
    occ = psi0.occupied()
    if not occ:
        raise ContractError("GHZ preparation needs at least one occupied qubit")
    return occ[0]


def build_ghz_prep(psi0: ProductState, xi: float) -> Circuit:
    """``(|0..0> + e^{i xi}|psi0>)/sqrt(2)`` up to global phase."""
    occ = psi0.occupied()
    pilot = ghz_pilot(psi0)
    gates = [H(pilot), Rz(pilot, xi)] + [CNOT(pilot, q) for q in occ[1:]]
    return Circuit(psi0.n_qubits, tuple(gates))


def build_ghz_unprep(psi0: ProductState) -> Circuit:
    occ = psi0.occupied()
    pilot = ghz_pilot(psi0)
    gates = [CNOT(pilot, q) for q in reversed(occ[1:])] + [H(pilot)]
    return Circuit(psi0.n_qubits, tuple(gates))


@dataclass(frozen=True)
class LoschmidtCircuit(Circuit):
    """GHZ interferometry circuit with its readout strings.

    ``zero_string`` and ``pi_string`` are basis indices whose probabilities
    are ``p0`` and ``p_pi``. They already account for the swap-network sign.
    """

    psi0: ProductState | None = None
    pilot: int = 0
    zero_string: int = 0
    pi_string: int = 0
    t: float = 0.0
    E: float = 0.0
    n_steps: int = 1
    sign: int = 1
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def trotter_part(self) -> Circuit:
        """The evolution gates only, without GHZ prep/unprep."""
        return Circuit(self.n_qubits, self.gates[self.meta["prep_len"] : len(self.gates) - self.meta["unprep_len"]])


def build_trotter_evolution(
    lattice: LatticeSpec,
    params: HubbardParams,
    t: float,
    n_steps: int,
    layout: JWLayout | None = None,
    skip_first_onsite: bool = False,
) -> Circuit:
    """``n_steps`` steps of size ``t/n_steps``, alternating plain and mirrored."""
    if n_steps < 1:
        raise ContractError(f"n_steps must be >= 1, got {n_steps}")
    layout = layout or build_snake_layout(lattice)
    dt = t / n_steps
    gates: list[Gate] = []
    for k in range(n_steps):
        step = build_trotter_step(lattice, params, layout, dt, reversed=bool(k % 2), include_onsite=not (k == 0 and skip_first_onsite))
        gates += step.gates
    return Circuit(lattice.n_qubits, tuple(gates))


def build_loschmidt_circuit(
    psi0: ProductState,
    lattice: LatticeSpec,
    params: HubbardParams,
    t: float,
    n_steps: int,
    E: float,
    absorb_first_onsite: bool = False,
) -> LoschmidtCircuit:
    """GHZ prep with ``xi = E t``, Trotter evolution, GHZ unprep with ``xi = 0``.

    With ``absorb_first_onsite`` the first onsite layer is dropped and its
    phase on ``psi0`` (a product state) is folded into the prep rotation.
    """
    if t < 0:
        raise ContractError(f"t must be non-negative, got {t}")
    if psi0.n_qubits != lattice.n_qubits:
        raise ContractError("reference state width does not match the lattice")
    layout = build_snake_layout(lattice)
    xi = E * t
    if absorb_first_onsite:
        xi -= diagonal_energy(psi0, params) * t / n_steps
    prep = build_ghz_prep(psi0, xi)
    evo = build_trotter_evolution(lattice, params, t, n_steps, layout, skip_first_onsite=absorb_first_onsite)
    unprep = build_ghz_unprep(psi0)
    body = prep + evo + unprep
    pilot = ghz_pilot(psi0)
    sign = evo.fswap_sign(psi0)
    zero, pi = 0, 1 << (psi0.n_qubits - 1 - pilot)
    if sign < 0:
        zero, pi = pi, zero
    return LoschmidtCircuit(
        body.n_qubits,
        body.gates,
        body.relabel,
        psi0=psi0,
        pilot=pilot,
        zero_string=zero,
        pi_string=pi,
        t=float(t),
        E=float(E),
        n_steps=n_steps,
        sign=sign,
        meta={"prep_len": len(prep), "unprep_len": len(unprep), "absorb_first_onsite": absorb_first_onsite},
    )


def with_gates(circuit: LoschmidtCircuit, gates) -> LoschmidtCircuit:
    """Same readout metadata, different gate list (used by folding and noise)."""
    return replace(circuit, gates=tuple(gates), relabel=())


@dataclass(frozen=True)
class GateCounts:
    """Two-qubit gate tally in cost-table layout.

    ``hopping`` is per Trotter step, ``onsite`` and ``ghz`` are totals, so
    ``total_2q = onsite + n_steps * hopping + ghz``.
    """

    onsite: int
    hopping: int
    ghz: int
    total_2q: int
    n_qubits: int
    n_steps: int = 2


def count_gates(lattice: LatticeSpec, technique: str = GHZ) -> GateCounts:
    """Closed-form two-step costs for the GHZ or Hadamard-test technique."""
    x, y = lattice.x, lattice.y
    if technique == GHZ:
        onsite = x * y
        hopping = y * x * x + 7 * x * y - 4 * (x + y)
        ghz = 2 * (x * y - 1)
        total = 2 * y * x * x + 17 * y * x - 8 * (x + y) - 2
        return GateCounts(onsite, hopping, ghz, total, 2 * x * y)
    if technique == HADAMARD:
        onsite = 7 * x * y
        hopping = 5 * y * x * x + 11 * x * y - 8 * (x + y)
        total = 29 * x * y + 10 * y * x * x - 16 * (x + y)
        return GateCounts(onsite, hopping, 0, total, 2 * x * y + 1)
    raise ContractError(f"unknown technique {technique!r}")


def count_built_gates(circuit: LoschmidtCircuit) -> GateCounts:
    """Tally of an actual Loschmidt circuit in :class:`GateCounts` form."""
    onsite = circuit.count("ZZPhase")
    hop_total = circuit.count("XXPhase", "YYPhase", "FSWAP")
    ghz = circuit.count("CNOT")
    if hop_total % circuit.n_steps:
        raise ContractError("hopping gates are not evenly split across steps")
    return GateCounts(onsite, hop_total // circuit.n_steps, ghz, circuit.two_qubit_count, circuit.n_qubits, circuit.n_steps)


def network_fswap_count(lattice: LatticeSpec) -> int:
    """FSWAPs per Trotter step (both spins) in the network actually built."""
    return sum(len(r.pairs) for r in build_fswap_network(lattice))
