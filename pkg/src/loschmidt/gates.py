"""Gate type, unitary matrices and lowering to the native trapped-ion gateset.

Rotation conventions (all angles in radians, stored as given):

* ``Rz(theta)      = exp(-i theta Z / 2)``
* ``U1q(theta, phi) = exp(-i theta/2 (cos(phi) X + sin(phi) Y))``
* ``ZZPhase(a)     = exp(-i a Z(x)Z / 2)``, likewise ``XXPhase`` and ``YYPhase``
* ``GPHASE(a)``    multiplies the whole state by ``exp(-i a)``; it has no targets
  and costs nothing.

``FSWAP`` is the fermionic swap. Simulators apply only its CZ part; the
swap of mode labels is tracked in software by the circuit builder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError

ONE_QUBIT = frozenset({"U1q", "Rz", "H", "X", "Y", "Z"})
TWO_QUBIT = frozenset({"ZZPhase", "XXPhase", "YYPhase", "CNOT", "CZ", "FSWAP"})
ZERO_QUBIT = frozenset({"GPHASE"})
KINDS = ONE_QUBIT | TWO_QUBIT | ZERO_QUBIT
NATIVE = frozenset({"U1q", "Rz", "ZZPhase", "GPHASE"})
DIAGONAL = frozenset({"Rz", "Z", "ZZPhase", "CZ", "FSWAP", "GPHASE"})

_N_ANGLES = {"U1q": 2, "Rz": 1, "ZZPhase": 1, "XXPhase": 1, "YYPhase": 1, "GPHASE": 1}


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[int, ...]
    params: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ContractError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if len(self.targets) != self.arity:
            raise ContractError(f"{self.kind} acts on {self.arity} qubits, got targets {self.targets}")
        if len(set(self.targets)) != len(self.targets):
            raise ContractError(f"{self.kind} targets must be distinct, got {self.targets}")
        if len(self.params) != _N_ANGLES.get(self.kind, 0):
            raise ContractError(f"{self.kind} expects {_N_ANGLES.get(self.kind, 0)} angle(s), got {self.params}")
        if not all(math.isfinite(p) for p in self.params):
            raise ContractError(f"{self.kind} angle must be finite")

    @property
    def arity(self) -> int:
        if self.kind in ONE_QUBIT:
            return 1
        if self.kind in TWO_QUBIT:
            return 2
        return 0

    @property
    def is_two_qubit(self) -> bool:
        return self.kind in TWO_QUBIT

    @property
    def angle(self) -> float:
        return self.params[0]

    def inverse(self) -> Gate:
        if self.kind == "U1q":
            return Gate("U1q", self.targets, (-self.params[0], self.params[1]))
        if self.kind in _N_ANGLES:
            return Gate(self.kind, self.targets, (-self.params[0],))
        return self  # H, X, Y, Z, CNOT, CZ, FSWAP are self-inverse

    def to_text(self) -> str:
        parts = [self.kind]
        if self.targets:
            parts.append(",".join(map(str, self.targets)))
        parts.extend(f"{p:.12g}" for p in self.params)
        return " ".join(parts)

    @classmethod
    def from_text(cls, line: str) -> Gate:
        fields = line.split()
        if not fields:
            raise ContractError("empty gate line")
        kind = fields[0]
        if kind in ZERO_QUBIT:
            return cls(kind, (), tuple(float(f) for f in fields[1:]))
        if len(fields) < 2:
            raise ContractError(f"gate line without targets: {line!r}")
        targets = tuple(int(t) for t in fields[1].split(","))
        return cls(kind, targets, tuple(float(f) for f in fields[2:]))


# constructors
def U1q(q, theta, phi):
    return Gate("U1q", (q,), (theta, phi))


def Rz(q, theta):
    return Gate("Rz", (q,), (theta,))


def ZZPhase(a, b, alpha):
    return Gate("ZZPhase", (a, b), (alpha,))


def XXPhase(a, b, alpha):
    return Gate("XXPhase", (a, b), (alpha,))


def YYPhase(a, b, alpha):
    return Gate("YYPhase", (a, b), (alpha,))


def GPhase(alpha):
    return Gate("GPHASE", (), (alpha,))


def H(q):
    return Gate("H", (q,))


def X(q):
    return Gate("X", (q,))


def CNOT(control, target):
    return Gate("CNOT", (control, target))


def CZ(a, b):
    return Gate("CZ", (a, b))


def FSWAP(a, b):
    return Gate("FSWAP", (a, b))


_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_matrix(letter: str) -> np.ndarray:
    return _PAULI[letter]


def _rot2(letter: str, alpha: float) -> np.ndarray:
    pp = np.kron(_PAULI[letter], _PAULI[letter])
    return math.cos(alpha / 2) * np.eye(4) - 1j * math.sin(alpha / 2) * pp


def gate_matrix(gate: Gate) -> np.ndarray:
    """Unitary of ``gate``; the first target is the most significant bit.

    ``FSWAP`` returns the CZ that simulators actually apply.
    """
    k, p = gate.kind, gate.params
    if k == "GPHASE":
        return np.array([[np.exp(-1j * p[0])]])
    if k == "Rz":
        return np.diag([np.exp(-0.5j * p[0]), np.exp(0.5j * p[0])])
    if k == "U1q":
        c, s = math.cos(p[0] / 2), math.sin(p[0] / 2)
        return np.array([[c, -1j * np.exp(-1j * p[1]) * s], [-1j * np.exp(1j * p[1]) * s, c]])
    if k == "H":
        return np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    if k in ("X", "Y", "Z"):
        return _PAULI[k].copy()
    if k == "ZZPhase":
        return _rot2("Z", p[0])
    if k == "XXPhase":
        return _rot2("X", p[0])
    if k == "YYPhase":
        return _rot2("Y", p[0])
    if k == "CNOT":
        m = np.eye(4, dtype=complex)
        m[2:, 2:] = _PAULI["X"]
        return m
    if k in ("CZ", "FSWAP"):
        return np.diag([1, 1, 1, -1]).astype(complex)
    raise ContractError(f"no matrix for {k}")  # pragma: no cover


def fswap_matrix() -> np.ndarray:
    """Full fermionic swap ``SWAP . CZ`` (for reference and tests)."""
    swap = np.eye(4, dtype=complex)[[0, 2, 1, 3]]
    return swap @ np.diag([1, 1, 1, -1])


# Native lowering. Each rule returns gates whose ordered product equals the
# original unitary exactly, including global phase.
def _lower_h(q):
    # H = i * U1q(pi/2, pi/2) . Rz(pi)
    return [Rz(q, math.pi), U1q(q, math.pi / 2, math.pi / 2), GPhase(-math.pi / 2)]


def _lower_cz(a, b):
    return [ZZPhase(a, b, math.pi / 2), Rz(a, -math.pi / 2), Rz(b, -math.pi / 2), GPhase(math.pi / 4)]


def lower_gate(gate: Gate) -> list[Gate]:
    k, t = gate.kind, gate.targets
    if k in NATIVE:
        return [gate]
    if k == "H":
        return _lower_h(t[0])
    if k == "X":
        # X = i * U1q(pi, 0)
        return [U1q(t[0], math.pi, 0.0), GPhase(-math.pi / 2)]
    if k == "Y":
        return [U1q(t[0], math.pi, math.pi / 2), GPhase(-math.pi / 2)]
    if k == "Z":
        return [Rz(t[0], math.pi), GPhase(-math.pi / 2)]
    if k in ("CZ", "FSWAP"):
        return _lower_cz(*t)
    if k == "CNOT":
        c, x = t
        return _lower_h(x) + _lower_cz(c, x) + _lower_h(x)
    a, b = t
    if k == "XXPhase":
        return _lower_h(a) + _lower_h(b) + [ZZPhase(a, b, gate.angle)] + _lower_h(a) + _lower_h(b)
    if k == "YYPhase":
        # Rz(pi/2) X Rz(-pi/2) = Y
        pre = [Rz(a, -math.pi / 2), Rz(b, -math.pi / 2)]
        post = [Rz(a, math.pi / 2), Rz(b, math.pi / 2)]
        return pre + lower_gate(XXPhase(a, b, gate.angle)) + post
    raise ContractError(f"cannot lower {k}")  # pragma: no cover


def lower_to_native(gates: list[Gate]) -> list[Gate]:
    out: list[Gate] = []
    for g in gates:
        out.extend(lower_gate(g))
    return out
