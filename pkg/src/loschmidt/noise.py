"""Noise at three levels: gate-level Pauli trajectories, the outcome-level
``(q, gamma, K)`` channel, and series-level shot/Gaussian perturbations.
Coherent memory error is modelled at the outcome level only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .circuit import Circuit
from .errors import ContractError
from .gates import Gate
from .interferometry import TimeSeries, ghz_probabilities
from .sim import apply_to_array

SURVIVAL = "survival"
FIDELITY = "fidelity"

_PAULI_LETTERS = "IXYZ"


@dataclass(frozen=True)
class ThetaDistribution:
    """Distribution of the accumulated memory phase.

    ``kind`` is ``fixed`` (always ``mean``), ``uniform`` on
    ``[mean - spread, mean + spread]`` or ``normal`` with std ``spread``.
    """

    kind: str = "fixed"
    mean: float = 0.0
    spread: float = 0.0

    def __post_init__(self):
        if self.kind not in ("fixed", "uniform", "normal"):
            raise ContractError(f"unknown theta distribution {self.kind!r}")
        if self.spread < 0:
            raise ContractError("spread must be non-negative")

    def _damping(self) -> float:
        if self.kind == "fixed" or self.spread == 0:
            return 1.0
        if self.kind == "uniform":
            return math.sin(self.spread) / self.spread
        return math.exp(-0.5 * self.spread**2)

    @property
    def mean_cos(self) -> float:
        return self._damping() * math.cos(self.mean)

    @property
    def mean_sin(self) -> float:
        return self._damping() * math.sin(self.mean)


@dataclass(frozen=True)
class NoiseSpec:
    eps_2q: float = 0.0
    shots: int | None = None
    sigma_series: float = 0.0
    memory: ThetaDistribution | None = None
    convention: str = SURVIVAL

    def __post_init__(self):
        if not 0 <= self.eps_2q < 1:
            raise ContractError(f"eps_2q must lie in [0, 1), got {self.eps_2q}")
        if self.shots is not None and self.shots < 1:
            raise ContractError("shots must be >= 1")
        if self.sigma_series < 0:
            raise ContractError("sigma_series must be non-negative")
        if self.convention not in (SURVIVAL, FIDELITY):
            raise ContractError(f"unknown convention {self.convention!r}")


@dataclass(frozen=True)
class ChannelParams:
    q: float
    gamma: float
    n_qubits: int

    def __post_init__(self):
        if not (0 <= self.q <= 1 and self.gamma >= 0 and self.q + 2 * self.gamma <= 1 + 1e-12):
            raise ContractError(f"invalid channel q={self.q}, gamma={self.gamma}")

    @property
    def kappa(self) -> float:
        return (1 - self.q - 2 * self.gamma) / 2**self.n_qubits


def q_factor(n_2q_gates: int, f: float) -> float:
    if not 0 < f <= 1:
        raise ContractError(f"fidelity must lie in (0, 1], got {f}")
    return f**n_2q_gates


def depolarizing_q(n_2q_gates: int, eps: float, convention: str = SURVIVAL) -> float:
    """Analytic ``q`` for ``n`` gates each depolarised with probability ``eps``.

    ``survival`` uses ``(1-eps)^n``; ``fidelity`` uses the average gate
    fidelity ``1 - eps * 16/20`` of a d=4 depolarising channel.
    """
    if convention == SURVIVAL:
        return (1 - eps) ** n_2q_gates
    if convention == FIDELITY:
        return q_factor(n_2q_gates, 1 - eps * 16 / 20)
    raise ContractError(f"unknown convention {convention!r}")


def ghz_flip_channel(p0: float, p_pi: float, params: ChannelParams) -> tuple[float, float]:
    k = params.kappa
    a = params.q + params.gamma
    return a * p0 + params.gamma * p_pi + k, a * p_pi + params.gamma * p0 + k


def channel_on_distribution(probs: np.ndarray, zero: int, pi: int, params: ChannelParams) -> np.ndarray:
    """Full-distribution form: the two GHZ strings mix as above, every other
    outcome keeps weight ``q + 2 gamma``, and ``K`` is added everywhere."""
    probs = np.asarray(probs, dtype=float)
    out = (params.q + 2 * params.gamma) * probs + params.kappa
    out[zero], out[pi] = ghz_flip_channel(probs[zero], probs[pi], params)
    return out


def _pauli_gates(code: int, a: int, b: int) -> list[Gate]:
    pa, pb = _PAULI_LETTERS[code // 4], _PAULI_LETTERS[code % 4]
    out = []
    if pa != "I":
        out.append(Gate(pa, (a,)))
    if pb != "I":
        out.append(Gate(pb, (b,)))
    return out


def inject_pauli_noise(circuit: Circuit, eps_2q: float, rng: np.random.Generator) -> list[Gate]:
    """One trajectory: after each two-qubit gate, with probability ``eps``
    append a uniformly chosen non-identity two-qubit Pauli."""
    if not 0 <= eps_2q < 1:
        raise ContractError("eps_2q must lie in [0, 1)")
    out: list[Gate] = []
    for g in circuit.gates:
        out.append(g)
        if g.is_two_qubit and eps_2q > 0 and rng.random() < eps_2q:
            out.extend(_pauli_gates(int(rng.integers(1, 16)), *g.targets))
    return out


@dataclass(frozen=True)
class TrajectoryResult:
    mean_probs: np.ndarray
    counts: dict[int, int]
    n_trajectories: int


def simulate_trajectories(
    circuit: Circuit,
    eps_2q: float,
    n_trajectories: int,
    rng: np.random.Generator,
    batch: int = 256,
    eps_1q: float = 0.0,
) -> TrajectoryResult:
    """Batched Pauli-trajectory simulation, one measurement shot per trajectory.

    Trajectories run ``batch`` at a time as columns of one amplitude array.
    ``eps_1q`` optionally adds single-qubit depolarising errors after
    single-qubit gates.
    """
    if n_trajectories < 1:
        raise ContractError("need at least one trajectory")
    n = circuit.n_qubits
    dim = 1 << n
    total = np.zeros(dim)
    counts = np.zeros(dim, dtype=np.int64)
    done = 0
    while done < n_trajectories:
        B = min(batch, n_trajectories - done)
        amps = np.zeros((dim, B), dtype=complex)
        amps[0] = 1.0
        for g in circuit.gates:
            amps = apply_to_array(amps, n, g)
            if g.is_two_qubit:
                eps = eps_2q
            elif g.arity == 1:
                eps = eps_1q
            else:
                continue
            if eps <= 0:
                continue
            hit = np.flatnonzero(rng.random(B) < eps)
            if not len(hit):
                continue
            if g.is_two_qubit:
                codes = rng.integers(1, 16, size=len(hit))
            else:
                codes = 4 * rng.integers(1, 4, size=len(hit))
            for code in np.unique(codes):
                cols = hit[codes == code]
                sub = amps[:, cols]
                targets = g.targets if g.is_two_qubit else (g.targets[0], -1)
                for pg in _pauli_gates(int(code), *targets):
                    sub = apply_to_array(sub, n, pg)
                amps[:, cols] = sub
        probs = np.abs(amps) ** 2
        total += probs.sum(axis=1)
        cum = np.cumsum(probs, axis=0)
        u = rng.random(B) * cum[-1]
        outcome = np.minimum((cum < u[None, :]).sum(axis=0), dim - 1)
        np.add.at(counts, outcome, 1)
        done += B
    nz = np.flatnonzero(counts)
    return TrajectoryResult(total / n_trajectories, {int(k): int(counts[k]) for k in nz}, n_trajectories)


def perturb_series(
    series: TimeSeries, sigma: float = 0.0, shots: int | None = None, rng: np.random.Generator | None = None
) -> TimeSeries:
    """Shot resampling of ``(p0, p_pi)`` then additive Gaussian noise on ``re_g``."""
    if sigma < 0:
        raise ContractError("sigma must be non-negative")
    if not sigma and shots is None:
        return series
    if rng is None:
        raise ContractError("a random generator is required for stochastic perturbation")
    re = series.re_g.copy()
    var = series.variance.copy()
    p0, pp = series.p0, series.p_pi
    if shots is not None:
        if p0 is None or pp is None:
            raise ContractError("shot resampling needs p0 and p_pi")
        p0_new, pp_new = np.empty_like(re), np.empty_like(re)
        for i, (a, b) in enumerate(zip(p0, pp)):
            a, b = max(a, 0.0), max(b, 0.0)
            rest = max(1.0 - a - b, 0.0)
            tot = a + b + rest
            k = rng.multinomial(shots, [a / tot, b / tot, rest / tot])
            p0_new[i], pp_new[i] = k[0] / shots, k[1] / shots
        re = p0_new - pp_new
        var = var + np.maximum(p0_new + pp_new - re**2, 0.0) / shots
        p0, pp = p0_new, pp_new
    if sigma:
        re = re + rng.normal(0.0, sigma, size=re.shape)
        var = var + sigma**2
    return replace(series, re_g=re, variance=var, p0=p0, p_pi=pp, shots=shots)


def series_from_amplitudes(G: np.ndarray, times: np.ndarray, E: float) -> TimeSeries:
    """Noiseless series (with the implied ``p0``, ``p_pi``) from complex ``G(t)``."""
    G = np.asarray(G, dtype=complex)
    t = np.asarray(times, dtype=float)
    p0, pp = ghz_probabilities(G, E, t)
    return TimeSeries(t, p0 - pp, np.zeros_like(t), E, np.asarray(p0), np.asarray(pp))


def memory_error_outcomes(
    G: complex, E: float, t: float, theta: ThetaDistribution, params: ChannelParams
) -> tuple[float, float]:
    """``(p0*, p_pi*)`` with a random memory phase on the interference term."""
    Gp = complex(G) * complex(np.exp(1j * E * t))
    base = params.kappa + (params.q + 2 * params.gamma) / 4 * (1 + abs(G) ** 2)
    inter = params.q / 4 * (2 * theta.mean_cos * Gp.real - 2 * theta.mean_sin * Gp.imag)
    return base + inter, base - inter
