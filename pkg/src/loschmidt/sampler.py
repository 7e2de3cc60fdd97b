"""Metropolis-Hastings over Z-product states weighted by the filtered DOS,
with blocking analysis of the resulting correlated series."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .evaluators import EXACT, WeightFunction
from .model import HubbardParams, LatticeSpec, ProductState, build_snake_layout, neel_state
from .sim import hubbard_spectrum
from .spectral_filter import FilterSpec, make_filter

Move = tuple[int, int]  # (from qubit, to qubit), same spin register


def enumerate_moves(state: ProductState, lattice: LatticeSpec) -> list[Move]:
    """All single-fermion hops to an empty same-spin neighbour, in a fixed order."""
    layout = build_snake_layout(lattice)
    moves: list[Move] = []
    for spin in (0, 1):
        for site in layout.snake_order:
            q = layout.qubit(site, spin)
            if not state.bits[q]:
                continue
            for nb in lattice.neighbors(site):
                qn = layout.qubit(nb, spin)
                if not state.bits[qn]:
                    moves.append((q, qn))
    return moves


def apply_move(state: ProductState, move: Move) -> ProductState:
    bits = list(state.bits)
    a, b = move
    bits[a], bits[b] = 0, 1
    return ProductState(tuple(bits))


def propose_hop(state: ProductState, lattice: LatticeSpec, rng: np.random.Generator) -> tuple[ProductState, float, float]:
    """Uniform random legal hop; returns ``(state', p_fwd, p_rev)``."""
    moves = enumerate_moves(state, lattice)
    if not moves:
        return state, 1.0, 1.0
    move = moves[int(rng.integers(len(moves)))]
    new = apply_move(state, move)
    return new, 1.0 / len(moves), 1.0 / len(enumerate_moves(new, lattice))


def acceptance_probability(D_new: float, D_old: float, p_fwd: float, p_rev: float) -> float:
    """Hastings ratio ``min(1, D'/D * P(s'->s)/P(s->s'))``; zero for ``D' <= 0``."""
    if not D_old > 0:
        raise ContractError(f"current weight must be positive, got {D_old}")
    if not D_new > 0:
        return 0.0
    return min(1.0, (D_new / D_old) * (p_rev / p_fwd))


def accept(D_new: float, D_old: float, p_fwd: float, p_rev: float, rng: np.random.Generator) -> bool:
    a = acceptance_probability(D_new, D_old, p_fwd, p_rev)
    return bool(rng.random() < a)


@dataclass(frozen=True)
class ChainConfig:
    E: float
    delta: float = 1.0
    n_samples: int = 5000
    burn_in: int | None = None  # default 10% of n_samples
    seed: int = 0
    mode: str = EXACT
    shots: int | None = None
    sigma: float = 0.0
    x: float = 1.0
    steps_policy: object = 2

    def __post_init__(self):
        if self.n_samples < 1:
            raise ContractError("n_samples must be >= 1")
        if self.burn_in is not None and self.burn_in < 0:
            raise ContractError("burn_in must be >= 0")

    @property
    def burn_in_steps(self) -> int:
        return self.n_samples // 10 if self.burn_in is None else self.burn_in


@dataclass(frozen=True)
class SampleRecord:
    state: ProductState
    weight: float
    double_occupancy: float
    accepted: bool


@dataclass(frozen=True)
class BlockingResult:
    mean: float
    stderr: float
    naive_stderr: float
    block_sizes: tuple[int, ...]
    level_errors: tuple[float, ...]
    plateau_level: int


@dataclass
class ChainResult:
    config: ChainConfig
    records: list[SampleRecord]
    n_weight_evaluations: int
    restarts: int = 0
    blocking: BlockingResult | None = field(default=None)

    @property
    def observable(self) -> np.ndarray:
        return np.array([r.double_occupancy for r in self.records])

    @property
    def mean(self) -> float:
        return float(self.observable.mean())

    @property
    def acceptance_rate(self) -> float:
        return float(np.mean([r.accepted for r in self.records]))


def random_state_like(psi: ProductState, rng: np.random.Generator) -> ProductState:
    ns = psi.n_sites
    up = np.zeros(ns, dtype=int)
    dn = np.zeros(ns, dtype=int)
    up[rng.choice(ns, psi.n_up, replace=False)] = 1
    dn[rng.choice(ns, psi.n_down, replace=False)] = 1
    return ProductState(tuple(int(b) for b in np.concatenate([up, dn])))


def run_chain(
    config: ChainConfig,
    lattice: LatticeSpec,
    params: HubbardParams,
    filter_spec: FilterSpec | None = None,
    initial: ProductState | None = None,
    max_restarts: int = 100,
) -> ChainResult:
    """Sample ``n_samples`` states after ``burn_in`` proposals.

    Weights are memoised per state for the whole chain, so a noisy weight
    is drawn once and then reused, as a measured amplitude would be.
    """
    rng = np.random.default_rng(config.seed)
    spec = filter_spec or make_filter(lattice.n_qubits, config.delta, config.x)
    weigh = WeightFunction(config.mode, lattice, params, spec, config.E, config.shots, config.sigma, config.steps_policy)
    memo: dict[ProductState, float] = {}

    def weight(s: ProductState) -> float:
        if s not in memo:
            memo[s] = weigh(s, rng)
        return memo[s]

    state = initial or neel_state(lattice)
    restarts = 0
    while not weight(state) > 0:
        restarts += 1
        if restarts > max_restarts:
            raise ContractError(f"no state with positive weight found after {max_restarts} restarts")
        state = random_state_like(state, rng)

    D = weight(state)
    records: list[SampleRecord] = []
    total = config.burn_in_steps + config.n_samples
    for step in range(total):
        new, p_fwd, p_rev = propose_hop(state, lattice, rng)
        ok = False
        if new != state:
            D_new = weight(new)
            ok = accept(D_new, D, p_fwd, p_rev, rng)
            if ok:
                state, D = new, D_new
        if step >= config.burn_in_steps:
            records.append(SampleRecord(state, D, state.double_occupancy(), ok))
    result = ChainResult(config, records, len(memo), restarts)
    if len(records) >= 64:
        result.blocking = blocking_error(result.observable)
    return result


def exhaustive_weights(
    lattice: LatticeSpec, params: HubbardParams, E: float, delta: float, n_up: int | None = None, n_down: int | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(basis indices, D_p, O_p)`` over every product state in a particle sector.

    Defaults to the Neel state's sector.
    """
    if not delta > 0:
        raise ContractError("delta must be positive")
    neel = neel_state(lattice)
    n_up = neel.n_up if n_up is None else n_up
    n_down = neel.n_down if n_down is None else n_down
    size = math.comb(lattice.n_sites, n_up) * math.comb(lattice.n_sites, n_down)
    if size > 10**6:
        raise ContractError(f"sector has {size} states; exhaustive sum capped at 1e6")
    indices, eig = hubbard_spectrum(lattice, params).sector(n_up, n_down)
    g = np.exp(-((eig.eigenvalues - E) ** 2) / (2 * delta**2))
    D = (np.abs(eig.eigenvectors) ** 2) @ g
    n = lattice.n_qubits
    ns = lattice.n_sites
    bits = (indices[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    O = (bits[:, :ns] * bits[:, ns:]).sum(axis=1) / ns
    return indices, D, O


def exhaustive_expectation(lattice: LatticeSpec, params: HubbardParams, E: float, delta: float) -> float:
    """``sum_p D_p O_p / sum_p D_p`` over the half-filling sector."""
    _, D, O = exhaustive_weights(lattice, params, E, delta)
    return float(D @ O / D.sum())


def blocking_error(samples, min_blocks: int = 16, relsigma: float = 1.0) -> BlockingResult:
    """Flyvbjerg-Petersen blocking.

    Each level halves the series by averaging neighbouring pairs. The error
    estimate is the weighted mean of the top levels that stay consistent
    (within ``relsigma`` of their own uncertainty) with that mean, and is
    never reported below the naive i.i.d. error.
    """
    x = np.asarray(samples, dtype=float)
    if len(x) < 64:
        raise ContractError(f"blocking needs at least 64 samples, got {len(x)}")
    mean = float(x.mean())
    sizes, est, err = [], [], []
    block, size = x, 1
    while len(block) >= min_blocks:
        n = len(block)
        e = math.sqrt(block.var() / (n - 1))
        sizes.append(size)
        est.append(e)
        err.append(e / math.sqrt(2 * (n - 1)))
        block = 0.5 * (block[: n - n % 2 : 2] + block[1 : n - n % 2 : 2])
        size *= 2
    est_a, err_a = np.array(est), np.array(err)
    naive = est[0]
    if naive == 0.0:
        return BlockingResult(mean, 0.0, 0.0, tuple(sizes), tuple(est), 0)

    def wavg(i: int) -> float:
        w = 1.0 / np.maximum(err_a[i:], 1e-300) ** 2
        return float((est_a[i:] * w).sum() / w.sum())

    i = len(est) - 1
    while i > 0:
        if abs(est_a[i - 1] - wavg(i - 1)) > relsigma * err_a[i - 1]:
            break
        i -= 1
    stderr = max(wavg(i), naive)
    return BlockingResult(mean, stderr, naive, tuple(sizes), tuple(est), i)
