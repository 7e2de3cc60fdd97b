from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from loschmidt.errors import ContractError
from loschmidt.model import (
    HubbardParams,
    LatticeSpec,
    PauliTerm,
    ProductState,
    build_snake_layout,
    diagonal_energy,
    hamiltonian_terms,
    hopping_terms,
    interaction_terms,
    neel_state,
)
from loschmidt.sim import hamiltonian_dense


def test_snake_2x2():
    lay = build_snake_layout(LatticeSpec(2, 2))
    assert list(lay.snake_order) == [(0, 0), (0, 1), (1, 1), (1, 0)]
    assert [lay.qubit(s, 0) for s in lay.snake_order] == [0, 1, 2, 3]
    assert [lay.qubit(s, 1) for s in lay.snake_order] == [4, 5, 6, 7]


def test_snake_2x8_registers():
    lat = LatticeSpec(2, 8)
    lay = build_snake_layout(lat)
    assert lat.n_qubits == 32
    assert sorted(lay.qubit(s, 0) for s in lat.sites()) == list(range(16))
    assert sorted(lay.qubit(s, 1) for s in lat.sites()) == list(range(16, 32))


@given(st.integers(1, 5), st.integers(1, 5))
def test_snake_matches_oracle(x, y):
    lay = build_snake_layout(LatticeSpec(x, y))
    assert list(lay.snake_order) == oracles.snake(x, y)
    # consecutive snake sites are lattice neighbours
    for a, b in zip(lay.snake_order, lay.snake_order[1:]):
        assert abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1


def test_vertical_bond_z_string_2x2():
    lat = LatticeSpec(2, 2)
    lay = build_snake_layout(lat)
    pairs = hopping_terms(lat, HubbardParams(), lay)
    strings = [xx.string for xx, _ in pairs]
    long = [s for s in strings if 0 in s and 3 in s]
    assert long and long[0][1] == "Z" and long[0][2] == "Z"


def test_neel():
    assert neel_state(LatticeSpec(2, 2)).bitstring == "10100101"
    psi = neel_state(LatticeSpec(2, 8))
    assert psi.n_up == psi.n_down == 8
    for x, y in [(2, 3), (3, 3), (4, 2)]:
        assert neel_state(LatticeSpec(x, y)).bitstring == oracles.neel_bits(x, y)


def test_product_state_roundtrip():
    psi = ProductState.from_bitstring("10100101")
    assert ProductState.from_index(psi.index, 8) == psi
    assert int(psi.hex, 16) == 0b10100101
    assert psi.double_occupancy() == 0.0
    assert ProductState.from_bitstring("11001100").double_occupancy() == 0.5


def test_diagonal_energy():
    p = HubbardParams(0.5, 2.0)
    assert diagonal_energy(ProductState.from_bitstring("10100101"), p) == 0.0
    assert diagonal_energy(ProductState.from_bitstring("11001100"), p) == 4.0


@pytest.mark.parametrize("x,y", [(1, 2), (2, 1), (2, 2), (3, 1)])
def test_hamiltonian_matches_fermionic_oracle(x, y):
    # Pauli form with +J/2 hopping equals the ladder-operator -J form at J -> -J
    lat, p = LatticeSpec(x, y), HubbardParams(0.5, 2.0)
    ref = oracles.fermi_hubbard(x, y, -p.J, p.U)
    assert np.abs(hamiltonian_dense(lat, p) - ref).max() < 1e-12


def test_gauge_equivalent_spectrum():
    lat, p = LatticeSpec(2, 2), HubbardParams(0.5, 2.0)
    ref = oracles.fermi_hubbard(2, 2, p.J, p.U)
    np.testing.assert_allclose(np.linalg.eigvalsh(hamiltonian_dense(lat, p)), np.linalg.eigvalsh(ref), atol=1e-10)


def test_term_counts():
    lat, p = LatticeSpec(2, 3), HubbardParams()
    lay = build_snake_layout(lat)
    assert len(hopping_terms(lat, p, lay)) == 2 * len(lat.bonds())
    assert len(interaction_terms(lat, p, lay)) >= lat.n_sites
    assert all(isinstance(t, PauliTerm) for t in hamiltonian_terms(lat, p))


@pytest.mark.parametrize("x,y", [(0, 2), (2, -1)])
def test_bad_lattice(x, y):
    with pytest.raises(ContractError):
        LatticeSpec(x, y)


def test_dense_cap():
    with pytest.raises(ContractError):
        LatticeSpec(2, 8).check_dense(26)
    LatticeSpec(2, 3).check_dense(26)
