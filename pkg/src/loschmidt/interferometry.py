"""GHZ-interferometric readout of ``Re(G(t) e^{iEt})`` from a single circuit."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuit import LoschmidtCircuit, build_loschmidt_circuit, build_trotter_evolution
from .errors import ContractError
from .model import HubbardParams, LatticeSpec, ProductState
from .sim import StateVector, run_circuit, run_gates


@dataclass(frozen=True)
class InterferometryOutcome:
    p0: float
    p_pi: float
    shots: int | None = None  # None means exact probabilities
    raw_counts: dict[int, int] | None = field(default=None, compare=False)

    @property
    def re_g(self) -> float:
        return self.p0 - self.p_pi

    @property
    def variance(self) -> float:
        """Multinomial variance of ``p0 - p_pi``; zero for exact runs."""
        if self.shots is None:
            return 0.0
        return max(self.p0 + self.p_pi - (self.p0 - self.p_pi) ** 2, 0.0) / self.shots

    def counts_as_bitstrings(self, n_qubits: int) -> dict[str, int]:
        return {format(k, f"0{n_qubits}b"): v for k, v in sorted((self.raw_counts or {}).items())}


@dataclass(frozen=True)
class TimeGrid:
    m: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        if len(self.t) and (self.t[0] != 0 or np.any(np.diff(self.t) <= 0)):
            raise ContractError("time grid must start at 0 and increase strictly")

    def __len__(self) -> int:
        return len(self.t)


@dataclass
class TimeSeries:
    """``re_g[m] ~ Re(G(t_m) e^{iE t_m})`` with per-point variance."""

    t: np.ndarray
    re_g: np.ndarray
    variance: np.ndarray
    E: float = 0.0
    p0: np.ndarray | None = None
    p_pi: np.ndarray | None = None
    shots: int | None = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.re_g = np.asarray(self.re_g, dtype=float)
        self.variance = np.broadcast_to(np.asarray(self.variance, dtype=float), self.t.shape).copy()
        if self.re_g.shape != self.t.shape:
            raise ContractError("series values and times differ in length")

    @property
    def m(self) -> np.ndarray:
        return np.arange(len(self.t))


def make_time_grid(spec) -> TimeGrid:
    """``t_m = 2m/alpha`` for ``m = 0..R``."""
    m = np.arange(spec.R + 1)
    return TimeGrid(m, 2.0 * m / spec.alpha)


def output_distribution(circuit) -> np.ndarray:
    return run_circuit(circuit).probabilities()


def run_exact(circuit: LoschmidtCircuit, psi_ref: ProductState | None = None) -> InterferometryOutcome:
    if psi_ref is not None and circuit.psi0 is not None and psi_ref != circuit.psi0:
        raise ContractError("reference state does not match the circuit's GHZ state")
    probs = output_distribution(circuit)
    return InterferometryOutcome(float(probs[circuit.zero_string]), float(probs[circuit.pi_string]))


def sample_counts(probs: np.ndarray, shots: int, rng: np.random.Generator) -> dict[int, int]:
    if shots < 1:
        raise ContractError(f"shots must be >= 1, got {shots}")
    p = np.clip(probs, 0.0, None)
    counts = rng.multinomial(shots, p / p.sum())
    nz = np.flatnonzero(counts)
    return {int(k): int(counts[k]) for k in nz}


def outcome_from_counts(circuit: LoschmidtCircuit, counts: dict[int, int]) -> InterferometryOutcome:
    shots = sum(counts.values())
    return InterferometryOutcome(
        counts.get(circuit.zero_string, 0) / shots, counts.get(circuit.pi_string, 0) / shots, shots, dict(counts)
    )


def run_sampled(circuit: LoschmidtCircuit, shots: int, rng: np.random.Generator) -> InterferometryOutcome:
    counts = sample_counts(output_distribution(circuit), shots, rng)
    return outcome_from_counts(circuit, counts)


def trotter_overlap(psi0, lattice: LatticeSpec, params: HubbardParams, t: float, n_steps: int) -> complex:
    """``<psi0|U_trot(t)|psi0>`` by direct statevector overlap, no GHZ circuitry.

    ``psi0`` may be a :class:`ProductState` or an amplitude vector. The
    swap-network sign is removed so the result is in the plain JW encoding.
    """
    evo = build_trotter_evolution(lattice, params, t, n_steps)
    if isinstance(psi0, ProductState):
        v = StateVector.basis(psi0).amplitudes
        sign = evo.fswap_sign(psi0)
    else:
        v = np.asarray(psi0, dtype=complex)
        if n_steps % 2:
            raise ContractError("superposition inputs need an even step count (no diagonal sign to undo)")
        sign = 1
    out = run_gates(v, lattice.n_qubits, evo.gates)
    return complex(np.vdot(v, out)) * sign


def ghz_probabilities(G: complex, E: float, t: float) -> tuple[float, float]:
    """Noiseless ``(p0, p_pi)`` for Loschmidt amplitude ``G``."""
    g2 = abs(G) ** 2
    re = (G * np.exp(1j * E * t)).real
    return 0.25 * (1 + g2 + 2 * re), 0.25 * (1 + g2 - 2 * re)


def steps_for_point(m: int, policy) -> int:
    """Trotter steps at grid index ``m``.

    ``policy`` is an int (fixed) or ``"ramp"``: one step for the first two
    time points and two afterwards.
    """
    if policy == "ramp":
        return 1 if m < 2 else 2
    n = int(policy)
    if n < 1:
        raise ContractError("Trotter step count must be >= 1")
    return n


def circuit_time_series(
    psi0: ProductState,
    lattice: LatticeSpec,
    params: HubbardParams,
    times,
    E: float,
    steps_policy=2,
    shots: int | None = None,
    rng: np.random.Generator | None = None,
    absorb_first_onsite: bool = False,
) -> TimeSeries:
    """Build and run the Loschmidt circuit at every time point."""
    p0s, pps, var = [], [], []
    for m, t in enumerate(times):
        c = build_loschmidt_circuit(psi0, lattice, params, float(t), steps_for_point(m, steps_policy), E, absorb_first_onsite)
        out = run_exact(c) if shots is None else run_sampled(c, shots, rng)
        p0s.append(out.p0)
        pps.append(out.p_pi)
        var.append(out.variance)
    p0s, pps = np.array(p0s), np.array(pps)
    return TimeSeries(np.asarray(times, float), p0s - pps, np.array(var), E, p0s, pps, shots)
