from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from loschmidt import gates as g
from loschmidt.circuit import Circuit
from loschmidt.errors import ContractError
from loschmidt.model import HubbardParams, LatticeSpec, ProductState, neel_state
from loschmidt.sim import (
    StateVector,
    apply_to_array,
    circuit_unitary,
    eigendecompose,
    exact_evolve,
    fdos_exact,
    hamiltonian_dense,
    hubbard_spectrum,
    loschmidt_exact,
    run_circuit,
)

P = HubbardParams(0.5, 2.0)

# Frozen from the independent Taylor-series / ladder-operator oracles
G_2X2_E1_T08 = 0.23798950691409013 + 0.5593660520931497j
FDOS_2X3_NEEL_E1 = 0.3046125742233194


def _random_gate(rng, n):
    kind = rng.choice(["U1q", "Rz", "ZZPhase", "XXPhase", "YYPhase", "H", "CNOT", "CZ", "X"])
    a, b = rng.choice(n, 2, replace=False)
    th = rng.uniform(-3, 3)
    return {
        "U1q": lambda: g.U1q(a, th, rng.uniform(-3, 3)), "Rz": lambda: g.Rz(a, th), "ZZPhase": lambda: g.ZZPhase(a, b, th),
        "XXPhase": lambda: g.XXPhase(a, b, th), "YYPhase": lambda: g.YYPhase(a, b, th), "H": lambda: g.H(a),
        "CNOT": lambda: g.CNOT(a, b), "CZ": lambda: g.CZ(a, b), "X": lambda: g.X(a),
    }[kind]()


def _kron_apply(gate, n, v):
    # full-matrix reference built by explicit tensor products and a permutation
    m = g.gate_matrix(gate)
    t = list(gate.targets)
    rest = [q for q in range(n) if q not in t]
    perm = t + rest
    psi = v.reshape([2] * n).transpose(perm).reshape(2 ** len(t), -1)
    out = (m @ psi).reshape([2] * n)
    return out.transpose(np.argsort(perm)).reshape(-1)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_gate_kernels_match_dense(seed):
    rng = np.random.default_rng(seed)
    n = 4
    v = rng.normal(size=16) + 1j * rng.normal(size=16)
    gate = _random_gate(rng, n)
    np.testing.assert_allclose(apply_to_array(v.copy(), n, gate), _kron_apply(gate, n, v), atol=1e-12)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_norm_preserved(seed):
    rng = np.random.default_rng(seed)
    gates = tuple(_random_gate(rng, 5) for _ in range(12))
    sv = run_circuit(Circuit(5, gates), StateVector.basis("10110"))
    assert abs(sv.norm() - 1) < 1e-12


def test_batched_kernel_matches_columns():
    rng = np.random.default_rng(3)
    v = rng.normal(size=(32, 4)) + 0j
    gate = g.XXPhase(1, 3, 0.7)
    out = apply_to_array(v.copy(), 5, gate)
    for k in range(4):
        np.testing.assert_allclose(out[:, k], apply_to_array(v[:, k].copy(), 5, gate), atol=1e-13)


def test_gphase():
    v = StateVector.zeros(2).amplitudes
    out = apply_to_array(v.copy(), 2, g.GPhase(0.3))
    assert np.isclose(out[0], np.exp(-0.3j))


def test_exact_evolve_vs_taylor_1x2():
    lat = LatticeSpec(1, 2)
    H = hamiltonian_dense(lat, P)
    v = StateVector.basis(neel_state(lat))
    out = exact_evolve(v, H, 1.0).amplitudes
    ref = oracles.taylor_expm_apply(H, v.amplitudes, 1.0)
    assert np.abs(out - ref).max() < 1e-8


def test_loschmidt_regression_2x2():
    lat = LatticeSpec(2, 2)
    G = loschmidt_exact(neel_state(lat), hamiltonian_dense(lat, P), 0.8, E=1.0)
    assert abs(G - G_2X2_E1_T08) < 1e-10
    G2 = hubbard_spectrum(lat, P).loschmidt(neel_state(lat), np.array([0.8]), 1.0)[0]
    assert abs(G2 - G_2X2_E1_T08) < 1e-10


def test_loschmidt_t0():
    lat = LatticeSpec(2, 2)
    assert abs(loschmidt_exact(neel_state(lat), hamiltonian_dense(lat, P), 0.0) - 1) < 1e-12


def test_loschmidt_matches_oracle_on_product_states():
    lat = LatticeSpec(2, 2)
    Hf = oracles.fermi_hubbard(2, 2, P.J, P.U)  # gauge-equivalent form
    spec = hubbard_spectrum(lat, P)
    for bits in oracles.half_filling_states(2, 2)[::5]:
        ref = np.vdot(oracles.basis_vector(bits), oracles.taylor_expm_apply(Hf, oracles.basis_vector(bits), 1.3))
        got = spec.loschmidt(ProductState.from_bitstring(bits), np.array([1.3]))[0]
        assert abs(got - ref) < 1e-9


def test_fdos_regression_2x3():
    lat = LatticeSpec(2, 3)
    assert abs(float(hubbard_spectrum(lat, P).fdos(neel_state(lat), 1.0, 1.0)) - FDOS_2X3_NEEL_E1) < 1e-12


def test_fdos_exact_generic_path():
    lat = LatticeSpec(2, 2)
    H = hamiltonian_dense(lat, P)
    psi = neel_state(lat)
    a = float(fdos_exact(psi, H, 0.7, 0.8))
    b = float(hubbard_spectrum(lat, P).fdos(psi, 0.7, 0.8))
    assert abs(a - b) < 1e-12


def test_fdos_wide_filter_is_one():
    lat = LatticeSpec(2, 2)
    assert abs(float(hubbard_spectrum(lat, P).fdos(neel_state(lat), 0.0, 1e6)) - 1) < 1e-6


def test_eigendecompose_reconstruction():
    H = hamiltonian_dense(LatticeSpec(2, 2), P)
    e = eigendecompose(H)
    assert e.reconstruction_error(H) < 1e-10


def test_eigendecompose_rejects_non_hermitian():
    with pytest.raises(ContractError):
        eigendecompose(np.array([[0, 1], [0, 0]], dtype=complex))


def test_fdos_rejects_bad_delta():
    lat = LatticeSpec(2, 2)
    with pytest.raises(ContractError):
        fdos_exact(neel_state(lat), hamiltonian_dense(lat, P), 0.0, 0.0)


def test_circuit_unitary_small():
    u = circuit_unitary(Circuit(2, (g.H(0), g.CNOT(0, 1))))
    np.testing.assert_allclose(u @ u.conj().T, np.eye(4), atol=1e-14)
