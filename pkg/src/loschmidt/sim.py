"""Dense statevector engine and exact-diagonalisation oracle.

Amplitude arrays have shape ``(2**n,)`` or ``(2**n, B)``; the second form
carries ``B`` independent states (noise trajectories) through the same
gate sequence. Qubit ``q`` is bit ``n-1-q`` of the basis index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh

from .errors import ContractError
from .gates import Gate, gate_matrix
from .model import (
    DEFAULT_MAX_DENSE_QUBITS,
    HubbardParams,
    LatticeSpec,
    PauliTerm,
    ProductState,
    build_snake_layout,
    hamiltonian_terms,
)


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape[0] != 1 << self.n_qubits:
            raise ContractError(f"expected {1 << self.n_qubits} amplitudes, got {self.amplitudes.shape[0]}")

    @classmethod
    def zeros(cls, n_qubits: int) -> StateVector:
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def basis(cls, psi: ProductState | str) -> StateVector:
        if isinstance(psi, str):
            n, index = len(psi), int(psi, 2)
        else:
            n, index = psi.n_qubits, psi.index
        amps = np.zeros(1 << n, dtype=complex)
        amps[index] = 1.0
        return cls(n, amps)

    def copy(self) -> StateVector:
        return StateVector(self.n_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


class _Bits:
    """Index arithmetic shared by the kernels, cached per qubit count."""

    def __init__(self, n: int):
        self.n = n
        self.idx = np.arange(1 << n, dtype=np.int64)

    def mask(self, q: int) -> int:
        return 1 << (self.n - 1 - q)

    @lru_cache(maxsize=None)
    def bit(self, q: int) -> np.ndarray:
        return ((self.idx >> (self.n - 1 - q)) & 1).astype(np.int8)

    @lru_cache(maxsize=None)
    def sign(self, q: int) -> np.ndarray:
        return (1 - 2 * self.bit(q)).astype(float)

    @lru_cache(maxsize=None)
    def flip(self, mask: int) -> np.ndarray:
        return self.idx ^ mask

    @lru_cache(maxsize=None)
    def cnot_perm(self, c: int, t: int) -> np.ndarray:
        return np.where(self.bit(c) == 1, self.idx ^ self.mask(t), self.idx)


@lru_cache(maxsize=32)
def _bits(n: int) -> _Bits:
    return _Bits(n)


def _check_targets(n: int, gate: Gate, targets: tuple[int, ...]) -> None:
    if len(targets) != gate.arity:
        raise ContractError(f"{gate.kind} needs {gate.arity} targets, got {len(targets)}")
    for t in targets:
        if not 0 <= t < n:
            raise IndexError(f"qubit {t} out of range for {n} qubits")
    if len(set(targets)) != len(targets):
        raise ContractError("targets must be distinct")


def _mul_diag(amps: np.ndarray, diag: np.ndarray) -> np.ndarray:
    return amps * (diag if amps.ndim == 1 else diag[:, None])


def _apply_dense(amps: np.ndarray, n: int, mat: np.ndarray, targets: tuple[int, ...]) -> np.ndarray:
    k = len(targets)
    extra = amps.shape[1:]
    psi = amps.reshape((2,) * n + extra)
    out = np.tensordot(mat.reshape((2,) * (2 * k)), psi, axes=(list(range(k, 2 * k)), list(targets)))
    out = np.moveaxis(out, list(range(k)), list(targets))
    return np.ascontiguousarray(out).reshape(amps.shape)


def apply_to_array(amps: np.ndarray, n: int, gate: Gate, targets: tuple[int, ...] | None = None) -> np.ndarray:
    """Return ``gate`` applied to ``amps``; the input array is not modified."""
    t = gate.targets if targets is None else tuple(targets)
    _check_targets(n, gate, t)
    b = _bits(n)
    k = gate.kind
    if k == "GPHASE":
        return amps * np.exp(-1j * gate.angle)
    if k == "X":
        return amps[b.flip(b.mask(t[0]))]
    if k == "Z":
        return _mul_diag(amps, b.sign(t[0]))
    if k == "Rz":
        th = gate.angle
        return _mul_diag(amps, np.exp(-0.5j * th * b.sign(t[0])))
    if k == "ZZPhase":
        zz = b.sign(t[0]) * b.sign(t[1])
        return _mul_diag(amps, np.exp(-0.5j * gate.angle * zz))
    if k in ("CZ", "FSWAP"):
        return _mul_diag(amps, 1.0 - 2.0 * (b.bit(t[0]) & b.bit(t[1])))
    if k == "CNOT":
        return amps[b.cnot_perm(t[0], t[1])]
    return _apply_dense(amps, n, gate_matrix(gate), t)


def apply_gate(state: StateVector, gate: Gate, targets: tuple[int, ...] | None = None) -> StateVector:
    return StateVector(state.n_qubits, apply_to_array(state.amplitudes, state.n_qubits, gate, targets))


def run_gates(amps: np.ndarray, n: int, gates) -> np.ndarray:
    for g in gates:
        amps = apply_to_array(amps, n, g)
    return amps


def run_circuit(circuit, state: StateVector | None = None) -> StateVector:
    """Simulate ``circuit`` (anything with ``n_qubits`` and ``gates``) from ``state`` or ``|0..0>``."""
    if circuit.n_qubits > DEFAULT_MAX_DENSE_QUBITS:
        raise ContractError(f"{circuit.n_qubits} qubits exceeds the dense cap of {DEFAULT_MAX_DENSE_QUBITS}")
    state = state or StateVector.zeros(circuit.n_qubits)
    if state.n_qubits != circuit.n_qubits:
        raise ContractError("state and circuit qubit counts differ")
    return StateVector(state.n_qubits, run_gates(state.amplitudes, state.n_qubits, circuit.gates))


def circuit_unitary(circuit) -> np.ndarray:
    """Dense unitary of ``circuit`` (columns are images of basis states)."""
    n = circuit.n_qubits
    if n > 12:
        raise ContractError("circuit_unitary is limited to 12 qubits")
    return run_gates(np.eye(1 << n, dtype=complex), n, circuit.gates)


# ---- operators ---------------------------------------------------------------


def pauli_sum_sparse(terms: list[PauliTerm], n_qubits: int) -> sp.csr_matrix:
    """Sparse matrix of ``sum_k c_k P_k``."""
    dim = 1 << n_qubits
    idx = np.arange(dim, dtype=np.int64)
    rows, cols, vals = [], [], []
    for term in terms:
        xmask = zmask = 0
        n_y = 0
        for q, p in term.ops:
            m = 1 << (n_qubits - 1 - q)
            if p in "XY":
                xmask |= m
            if p in "YZ":
                zmask |= m
            n_y += p == "Y"
        parity = np.zeros(dim, dtype=np.int64)
        z = idx & zmask
        while np.any(z):
            parity ^= z & 1
            z >>= 1
        phase = (1j**n_y) * (1 - 2 * parity)
        rows.append(idx ^ xmask)
        cols.append(idx)
        vals.append(term.coefficient * phase)
    mat = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim))
    return mat.tocsr()


def hamiltonian_sparse(lattice: LatticeSpec, params: HubbardParams) -> sp.csr_matrix:
    layout = build_snake_layout(lattice)
    return pauli_sum_sparse(hamiltonian_terms(lattice, params, layout), lattice.n_qubits)


def hamiltonian_dense(lattice: LatticeSpec, params: HubbardParams) -> np.ndarray:
    lattice.check_dense(14)
    return hamiltonian_sparse(lattice, params).toarray()


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruction_error(self, H: np.ndarray) -> float:
        V, w = self.eigenvectors, self.eigenvalues
        return float(np.abs(H - (V * w) @ V.conj().T).max())


def eigendecompose(H: np.ndarray, tol: float = 1e-12) -> EigenDecomposition:
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ContractError("operator must be square")
    if np.abs(H - H.conj().T).max() > tol * max(1.0, np.abs(H).max()):
        raise ContractError("operator is not Hermitian")
    w, V = eigh(H)
    return EigenDecomposition(w, V)


def _sector_masks(n_sites: int) -> tuple[np.ndarray, np.ndarray]:
    n = 2 * n_sites
    b = _bits(n)
    n_up = sum(b.bit(q).astype(np.int64) for q in range(n_sites))
    n_dn = sum(b.bit(q).astype(np.int64) for q in range(n_sites, n))
    return n_up, n_dn


class HubbardSpectrum:
    """Exact spectrum of the Hubbard Hamiltonian, diagonalised sector by sector.

    The Hamiltonian conserves ``(n_up, n_down)``, so each sector is
    diagonalised on its own the first time it is needed and cached.
    """

    def __init__(self, lattice: LatticeSpec, params: HubbardParams, max_qubits: int = DEFAULT_MAX_DENSE_QUBITS):
        lattice.check_dense(max_qubits)
        self.lattice = lattice
        self.params = params
        self.n_qubits = lattice.n_qubits
        self._H = hamiltonian_sparse(lattice, params)
        self._n_up, self._n_dn = _sector_masks(lattice.n_sites)
        self._sectors: dict[tuple[int, int], tuple[np.ndarray, EigenDecomposition]] = {}

    def sector(self, n_up: int, n_down: int) -> tuple[np.ndarray, EigenDecomposition]:
        key = (n_up, n_down)
        if key not in self._sectors:
            indices = np.flatnonzero((self._n_up == n_up) & (self._n_dn == n_down))
            if len(indices) == 0:
                raise ContractError(f"empty sector {key}")
            block = self._H[indices][:, indices].toarray()
            self._sectors[key] = (indices, eigendecompose(block))
        return self._sectors[key]

    def weights(self, psi: ProductState) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues and ``|<k|psi>|^2`` over the sector containing ``psi``."""
        indices, eig = self.sector(psi.n_up, psi.n_down)
        pos = int(np.searchsorted(indices, psi.index))
        return eig.eigenvalues, np.abs(eig.eigenvectors[pos]) ** 2

    def loschmidt(self, psi: ProductState, t, E: float = 0.0):
        w, p = self.weights(psi)
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        G = np.exp(-1j * np.outer(t_arr, w)) @ p * np.exp(1j * E * t_arr)
        return G if np.ndim(t) else complex(G[0])

    def fdos(self, psi: ProductState, E, delta: float):
        _check_delta(delta)
        w, p = self.weights(psi)
        E_arr = np.atleast_1d(np.asarray(E, dtype=float))
        D = np.exp(-((w[None, :] - E_arr[:, None]) ** 2) / (2 * delta**2)) @ p
        return D if np.ndim(E) else float(D[0])

    def energy_range(self, psi: ProductState) -> tuple[float, float]:
        w, _ = self.weights(psi)
        return float(w[0]), float(w[-1])


@lru_cache(maxsize=16)
def hubbard_spectrum(lattice: LatticeSpec, params: HubbardParams) -> HubbardSpectrum:
    """Cached spectrum per (lattice, params)."""
    return HubbardSpectrum(lattice, params)


def _check_delta(delta: float) -> None:
    if not delta > 0:
        raise ContractError(f"delta must be positive, got {delta}")


def _as_eig(H) -> EigenDecomposition:
    if isinstance(H, EigenDecomposition):
        return H
    if sp.issparse(H):
        H = H.toarray()
    return eigendecompose(H)


def _amplitudes(psi) -> np.ndarray:
    if isinstance(psi, ProductState):
        return StateVector.basis(psi).amplitudes
    if isinstance(psi, StateVector):
        return psi.amplitudes
    return np.asarray(psi, dtype=complex)


def exact_evolve(state, H, t: float) -> StateVector:
    """``exp(-iHt)|state>`` via eigendecomposition."""
    amps = _amplitudes(state)
    eig = _as_eig(H)
    if eig.eigenvectors.shape[0] != amps.shape[0]:
        raise ContractError("operator and state dimensions differ")
    V = eig.eigenvectors
    out = V @ (np.exp(-1j * eig.eigenvalues * t) * (V.conj().T @ amps))
    return StateVector(int(math.log2(len(out))), out)


def loschmidt_exact(psi, H, t, E: float = 0.0):
    """``exp(iEt) <psi|exp(-iHt)|psi>``; ``H`` may be a matrix, decomposition or ``HubbardSpectrum``."""
    if isinstance(H, HubbardSpectrum) and isinstance(psi, ProductState):
        return H.loschmidt(psi, t, E)
    amps = _amplitudes(psi)
    eig = _as_eig(H)
    overlaps = np.abs(eig.eigenvectors.conj().T @ amps) ** 2
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    G = np.exp(-1j * np.outer(t_arr, eig.eigenvalues)) @ overlaps * np.exp(1j * E * t_arr)
    return G if np.ndim(t) else complex(G[0])


def fdos_exact(psi, H, E, delta: float):
    """``sum_k |<k|psi>|^2 exp(-(E_k-E)^2 / 2 delta^2)``."""
    _check_delta(delta)
    if isinstance(H, HubbardSpectrum) and isinstance(psi, ProductState):
        return H.fdos(psi, E, delta)
    amps = _amplitudes(psi)
    eig = _as_eig(H)
    overlaps = np.abs(eig.eigenvectors.conj().T @ amps) ** 2
    E_arr = np.atleast_1d(np.asarray(E, dtype=float))
    D = np.exp(-((eig.eigenvalues[None, :] - E_arr[:, None]) ** 2) / (2 * delta**2)) @ overlaps
    return D if np.ndim(E) else float(D[0])
