from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loschmidt.circuit import (
    GHZ,
    HADAMARD,
    Circuit,
    build_fswap_network,
    build_ghz_prep,
    build_loschmidt_circuit,
    build_trotter_evolution,
    build_trotter_step,
    count_built_gates,
    count_gates,
    network_fswap_count,
)
from loschmidt.errors import ContractError
from loschmidt.model import HubbardParams, LatticeSpec, PauliTerm, ProductState, build_snake_layout, interaction_terms, neel_state
from loschmidt.sim import circuit_unitary, pauli_sum_sparse, run_circuit, run_gates

P = HubbardParams(0.5, 2.0)

GOLDEN_STEP_2X1 = """qubits 4
ZZPhase 0,2 0.25
Rz 0 -0.25
Rz 2 -0.25
GPHASE 0.125
ZZPhase 1,3 0.25
Rz 1 -0.25
Rz 3 -0.25
GPHASE 0.125
XXPhase 0,1 0.125
YYPhase 0,1 0.125
XXPhase 2,3 0.125
YYPhase 2,3 0.125
"""


# ---- cost table, closed forms

@pytest.mark.parametrize(
    "x,y,technique,expect",
    [
        (2, 8, GHZ, (16, 104, 30, 254, 32)),
        (5, 5, GHZ, (25, 260, 48, 593, 50)),
        (2, 8, HADAMARD, (112, 256, None, 624, 33)),
        (5, 5, HADAMARD, (175, 820, None, 1815, 51)),
    ],
)
def test_count_gates_table(x, y, technique, expect):
    c = count_gates(LatticeSpec(x, y), technique)
    onsite, hop, ghz, total, nq = expect
    assert (c.onsite, c.hopping, c.total_2q, c.n_qubits) == (onsite, hop, total, nq)
    if ghz is not None:
        assert c.ghz == ghz


@given(st.integers(2, 9), st.integers(2, 9))
def test_ghz_total_decomposes(x, y):
    c = count_gates(LatticeSpec(x, y), GHZ)
    assert c.total_2q == c.onsite + c.n_steps * c.hopping + c.ghz


def test_built_circuit_reproduces_table_at_two_columns():
    lat = LatticeSpec(2, 8)
    c = build_loschmidt_circuit(neel_state(lat), lat, P, 1.0, 2, 0.0, absorb_first_onsite=True)
    b = count_built_gates(c)
    assert (b.onsite, b.hopping, b.ghz, b.total_2q) == (16, 104, 30, 254)


def test_built_circuit_three_plus_columns_has_larger_network():
    # uniform column swaps need more rounds than the closed form assumes once x >= 3
    lat = LatticeSpec(5, 5)
    c = build_loschmidt_circuit(neel_state(lat), lat, P, 1.0, 2, 0.0, absorb_first_onsite=True)
    b = count_built_gates(c)
    assert (b.onsite, b.ghz) == (25, 48)
    assert b.total_2q == 713
    assert b.total_2q > count_gates(lat).total_2q


# ---- swap network

@given(st.integers(2, 6), st.integers(1, 6))
@settings(deadline=None)
def test_network_visits_every_bond_once(x, y):
    lat = LatticeSpec(x, y)
    rounds = build_fswap_network(lat)
    seen = [b for r in rounds for b in r.bonds]
    assert sorted(seen) == sorted(lat.bonds())
    assert rounds[0].column_pairs == ()


@pytest.mark.parametrize("y", [2, 5, 8])
def test_two_column_fswap_count(y):
    lat = LatticeSpec(2, y)
    assert network_fswap_count(lat) == y * 2 * 1


def test_network_2x2():
    rounds = build_fswap_network(LatticeSpec(2, 2))
    assert len(rounds) == 2
    # two FSWAPs per spin register, then the second vertical bond is adjacent
    assert len(rounds[1].pairs) == 4
    assert rounds[1].bonds == (((0, 0), (1, 0)),)


def test_network_3x5_rounds():
    rounds = build_fswap_network(LatticeSpec(3, 5))
    assert [r.column_pairs for r in rounds] == [(), ((0, 1),), ((1, 2),), ((0, 1),), ((1, 2),)]
    assert network_fswap_count(LatticeSpec(3, 5)) == 40


# ---- Trotter step semantics

def _reference_apply(lat, step, dt, V):
    """Product of exponentials in the circuit's own bond order applied to ``V``,
    plus the FSWAP sign diagonal relating the circuit to the plain JW frame."""
    lay = build_snake_layout(lat)
    n = lat.n_qubits
    hint = pauli_sum_sparse(interaction_terms(lat, P, lay), n).diagonal().real
    idx = np.arange(2**n)
    out = np.exp(-1j * hint * dt)[:, None] * V
    D = np.ones(2**n)
    th = P.J * dt / 2
    for g in step.gates:
        if g.kind == "FSWAP":
            a, b = g.targets
            D *= 1 - 2 * (((idx >> (n - 1 - a)) & 1) & ((idx >> (n - 1 - b)) & 1))
        if g.kind in ("XXPhase", "YYPhase"):
            p, q = g.targets
            ops = ((p, g.kind[0]), *[(k, "Z") for k in range(p + 1, q)], (q, g.kind[0]))
            Pm = pauli_sum_sparse([PauliTerm(1.0, ops)], n)
            out = math.cos(th) * out - 1j * math.sin(th) * (Pm @ out)
    return out, D


@pytest.mark.parametrize("x,y", [(2, 2), (2, 3), (3, 2)])
@pytest.mark.parametrize("rev", [False, True])
def test_trotter_step_equals_product_formula(x, y, rev):
    lat = LatticeSpec(x, y)
    dt = 0.37
    step = build_trotter_step(lat, P, None, dt, reversed=rev)
    rng = np.random.default_rng(11)
    dim = 2**lat.n_qubits
    V = rng.normal(size=(dim, 6)) + 1j * rng.normal(size=(dim, 6))
    ref, D = _reference_apply(lat, step, dt, V)
    if rev:
        out = run_gates(D[:, None] * V, lat.n_qubits, step.gates)
    else:
        out = D[:, None] * run_gates(V, lat.n_qubits, step.gates)
    assert np.abs(out - ref).max() < 1e-11


def test_zero_time_even_steps_is_identity():
    lat = LatticeSpec(2, 2)
    evo = build_trotter_evolution(lat, P, 0.0, 2)
    np.testing.assert_allclose(circuit_unitary(evo), np.eye(2**8), atol=1e-12)
    assert evo.relabel == tuple(range(8))


def test_odd_steps_leave_permutation():
    lat = LatticeSpec(2, 2)
    evo = build_trotter_evolution(lat, P, 0.3, 1)
    assert sorted(evo.relabel) == list(range(8))
    assert evo.relabel != tuple(range(8))


def test_circuit_inverse():
    lat = LatticeSpec(2, 2)
    c = build_trotter_evolution(lat, P, 0.7, 2)
    u = circuit_unitary(c + c.inverse())
    np.testing.assert_allclose(u, np.eye(256), atol=1e-12)


# ---- GHZ prep

def test_ghz_prep_101():
    c = build_ghz_prep(ProductState.from_bitstring("101"), 0.4)
    assert [(g.kind, g.targets) for g in c.gates] == [("H", (0,)), ("Rz", (0,)), ("CNOT", (0, 2))]
    v = run_circuit(c).amplitudes
    ratio = v[0b101] / v[0]
    assert abs(abs(v[0]) ** 2 - 0.5) < 1e-12 and abs(ratio - np.exp(0.4j)) < 1e-12


def test_ghz_prep_single_qubit():
    c = build_ghz_prep(ProductState.from_bitstring("1"), 0.2)
    assert [g.kind for g in c.gates] == ["H", "Rz"]
    assert c.two_qubit_count == 0


def test_ghz_prep_2x8_count():
    c = build_ghz_prep(neel_state(LatticeSpec(2, 8)), 0.0)
    assert c.two_qubit_count == 15


def test_ghz_prep_vacuum_rejected():
    with pytest.raises(ContractError):
        build_ghz_prep(ProductState.from_bitstring("0000"), 0.0)


# ---- serialisation

def test_golden_text():
    step = build_trotter_step(LatticeSpec(2, 1), P, None, 0.25)
    assert step.to_text() == GOLDEN_STEP_2X1


def test_text_roundtrip_loschmidt():
    lat = LatticeSpec(2, 2)
    c = build_loschmidt_circuit(neel_state(lat), lat, P, 0.8, 2, 1.0)
    back = Circuit.from_text(c.to_text())
    assert back.n_qubits == c.n_qubits and len(back.gates) == len(c.gates)
    a = run_circuit(back).amplitudes
    b = run_circuit(Circuit(c.n_qubits, c.gates)).amplitudes
    assert np.abs(a - b).max() < 1e-10


def test_bad_step_count():
    with pytest.raises(ContractError):
        build_trotter_evolution(LatticeSpec(2, 2), P, 1.0, 0)
