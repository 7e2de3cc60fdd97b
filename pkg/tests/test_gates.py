from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loschmidt import gates as g
from loschmidt.errors import ContractError
from loschmidt.sim import circuit_unitary
from loschmidt.circuit import Circuit

angles = st.floats(-7, 7, allow_nan=False)


def _unitary(gate_list, n=2):
    return circuit_unitary(Circuit(n, tuple(gate_list)))


def test_rz_convention():
    th = 0.37
    np.testing.assert_allclose(g.gate_matrix(g.Rz(0, th)), np.diag([np.exp(-1j * th / 2), np.exp(1j * th / 2)]), atol=1e-15)


def test_zzphase_convention():
    a = 0.9
    d = np.exp(-1j * a / 2 * np.array([1, -1, -1, 1]))
    np.testing.assert_allclose(g.gate_matrix(g.ZZPhase(0, 1, a)), np.diag(d), atol=1e-15)


def test_cz_from_zzphase_and_rz():
    # CZ = e^{-i pi/4} ZZPhase(pi/2) Rz(-pi/2) Rz(-pi/2)
    lst = [g.ZZPhase(0, 1, np.pi / 2), g.Rz(0, -np.pi / 2), g.Rz(1, -np.pi / 2), g.GPhase(np.pi / 4)]
    np.testing.assert_allclose(_unitary(lst), np.diag([1, 1, 1, -1]), atol=1e-12)


def test_fswap_matrix():
    f = g.fswap_matrix()
    expect = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, -1]])
    np.testing.assert_allclose(f, expect, atol=1e-15)


@pytest.mark.parametrize(
    "gate",
    [g.H(0), g.X(1), g.CNOT(0, 1), g.CNOT(1, 0), g.CZ(0, 1), g.XXPhase(0, 1, 0.41), g.YYPhase(0, 1, -1.3), g.FSWAP(0, 1),
     g.Gate("Y", (0,)), g.Gate("Z", (1,))],
)
def test_lowering_exact(gate):
    low = g.lower_gate(gate)
    assert all(x.kind in g.NATIVE for x in low)
    np.testing.assert_allclose(_unitary(low), _unitary([gate]), atol=1e-12)


@given(angles, angles)
@settings(max_examples=30, deadline=None)
def test_u1q_unitary_and_inverse(th, ph):
    u = g.gate_matrix(g.U1q(0, th, ph))
    np.testing.assert_allclose(u @ u.conj().T, np.eye(2), atol=1e-12)
    inv = g.gate_matrix(g.U1q(0, th, ph).inverse())
    np.testing.assert_allclose(inv @ u, np.eye(2), atol=1e-12)


@given(angles)
@settings(max_examples=30, deadline=None)
def test_text_roundtrip(a):
    for gate in [g.Rz(3, a), g.ZZPhase(0, 5, a), g.U1q(2, a, -a), g.GPhase(a), g.CNOT(1, 4)]:
        back = g.Gate.from_text(gate.to_text())
        assert back.kind == gate.kind and back.targets == gate.targets
        np.testing.assert_allclose(back.params, gate.params, rtol=1e-11, atol=1e-12)


def test_bad_gate():
    with pytest.raises(ContractError):
        g.Gate("Rz", (0, 1), (0.1,))
    with pytest.raises(ContractError):
        g.Gate("FOO", (0,))
    with pytest.raises(ContractError):
        g.CNOT(2, 2)
