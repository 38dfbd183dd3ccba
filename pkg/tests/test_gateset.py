import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from catmap.gateset import (
    HADAMARD,
    PHASE,
    TOFFOLI,
    Gate,
    apply_gate,
    apply_hadamard,
    apply_packed,
    apply_phase_subset,
    apply_toffoli,
    gate_matrix,
    hadamard,
    pack,
    phase,
    toffoli,
)
from catmap.qstate import StateVector, fidelity

from conftest import random_state

H2 = np.array([[1, 1], [1, -1]]) / math.sqrt(2)


def single_qubit_op(op, q, n_q):
    """Dense operator acting with ``op`` on qubit q (bit 2**q of the index)."""
    out = np.eye(1)
    for j in reversed(range(n_q)):
        out = np.kron(out, op if j == q else np.eye(2))
    return out


def toffoli_perm(c1, c2, t, n_q):
    dim = 1 << n_q
    U = np.zeros((dim, dim))
    for i in range(dim):
        j = i ^ (1 << t) if (i >> c1) & 1 and (i >> c2) & 1 else i
        U[j, i] = 1
    return U


def rand_sv(rng, n_q):
    return StateVector(random_state(rng, 1 << n_q), n_q)


def test_phase_zero_is_identity(rng):
    s = rand_sv(rng, 5)
    before = s.amplitudes.copy()
    apply_phase_subset(s, {0, 2, 4}, 0.0)
    np.testing.assert_array_equal(s.amplitudes, before)


def test_phase_is_z():
    s = StateVector(np.array([1, 1]) / math.sqrt(2), 1)
    apply_phase_subset(s, {0}, math.pi)
    np.testing.assert_allclose(s.amplitudes, np.array([1, -1]) / math.sqrt(2), atol=1e-16)


@pytest.mark.parametrize("n_q", [4, 6, 8])
def test_phase_touches_only_selected(rng, n_q):
    s = rand_sv(rng, n_q)
    before = s.amplitudes.copy()
    apply_phase_subset(s, {0, 1, 2, 3}, 1.234)
    changed = np.flatnonzero(s.amplitudes != before)
    assert len(changed) == 2 ** (n_q - 4)
    assert all((i & 0b1111) == 0b1111 for i in changed)


@pytest.mark.parametrize("subset", [(1,), (0, 3), (4, 1, 2), (0, 2, 3, 5)])
def test_phase_against_diagonal(rng, subset):
    n_q, theta = 6, 0.77
    s = rand_sv(rng, n_q)
    ref = s.amplitudes.copy()
    for i in range(1 << n_q):
        if all((i >> q) & 1 for q in subset):
            ref[i] *= np.exp(1j * theta)
    apply_phase_subset(s, subset, theta)
    np.testing.assert_allclose(s.amplitudes, ref, atol=1e-15)


def test_hadamard_cases(rng):
    s = rand_sv(rng, 6)
    before = s.amplitudes.copy()
    apply_hadamard(apply_hadamard(s, 3), 3)
    np.testing.assert_allclose(s.amplitudes, before, atol=1e-15)

    z = StateVector.basis(6, 0)
    for q in range(6):
        apply_hadamard(z, q)
    np.testing.assert_allclose(z.amplitudes, 2 ** -3, atol=1e-15)

    s = rand_sv(rng, 7)
    apply_hadamard(s, 5)
    assert s.norm() == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("q", range(5))
def test_hadamard_against_kron(rng, q):
    s = rand_sv(rng, 5)
    ref = single_qubit_op(H2, q, 5) @ s.amplitudes
    apply_hadamard(s, q)
    np.testing.assert_allclose(s.amplitudes, ref, atol=1e-15)


def test_toffoli_cases(rng):
    s = StateVector.basis(3, 0b011)   # c1 = bit 0, c2 = bit 1 set, target bit 2 clear
    apply_toffoli(s, 0, 1, 2)
    assert s.amplitudes[0b111] == 1
    s = StateVector.basis(3, 0b010)
    apply_toffoli(s, 0, 1, 2)
    assert s.amplitudes[0b010] == 1

    s = rand_sv(rng, 6)
    before = s.amplitudes.copy()
    apply_toffoli(apply_toffoli(s, 4, 0, 2), 4, 0, 2)
    np.testing.assert_allclose(s.amplitudes, before, atol=1e-15)


@pytest.mark.parametrize("args", [(0, 1, 2), (2, 0, 1), (4, 3, 0), (1, 5, 3)])
def test_toffoli_against_permutation(rng, args):
    s = rand_sv(rng, 6)
    ref = toffoli_perm(*args, 6) @ s.amplitudes
    apply_toffoli(s, *args)
    np.testing.assert_allclose(s.amplitudes, ref, atol=0)


@pytest.mark.parametrize("bad", [(0, 0, 1), (0, 1, 7)])
def test_toffoli_rejects(bad):
    with pytest.raises(ValueError):
        apply_toffoli(StateVector.basis(3, 0), *bad)


def test_phase_rejects():
    s = StateVector.basis(4, 0)
    with pytest.raises(ValueError):
        apply_phase_subset(s, {4}, 0.1)
    with pytest.raises(ValueError):
        apply_phase_subset(s, set(), 0.1)
    with pytest.raises(ValueError):
        Gate(PHASE, (0, 1, 2, 3, 4), 0.1).validate(6)


def test_apply_gate_without_override_is_exact(rng):
    s = rand_sv(rng, 5)
    a, b = s.copy(), s.copy()
    apply_gate(a, toffoli(3, 1, 4))
    apply_toffoli(b, 3, 1, 4)
    np.testing.assert_array_equal(a.amplitudes, b.amplitudes)
    apply_gate(a, hadamard(2))
    apply_hadamard(b, 2)
    np.testing.assert_array_equal(a.amplitudes, b.amplitudes)


def test_rotation_path_at_pi_is_toffoli():
    # every basis state of three qubits through the rotation path
    U = np.zeros((8, 8), dtype=complex)
    for i in range(8):
        s = StateVector.basis(3, i)
        apply_gate(s, toffoli(0, 1, 2), angle_override=math.pi)
        U[:, i] = s.amplitudes
    np.testing.assert_allclose(U, toffoli_perm(0, 1, 2, 3), atol=1e-15)
    for i in range(8):
        a = StateVector(U[:, i], 3)
        b = apply_toffoli(StateVector.basis(3, i), 0, 1, 2)
        assert fidelity(a, b) == pytest.approx(1.0, abs=1e-12)


def test_rotation_path_at_pi_is_hadamard():
    U = np.zeros((4, 4), dtype=complex)
    for i in range(4):
        s = StateVector.basis(2, i)
        apply_gate(s, hadamard(1), angle_override=math.pi)
        U[:, i] = s.amplitudes
    np.testing.assert_allclose(U, single_qubit_op(H2, 1, 2), atol=1e-15)


@pytest.mark.parametrize("gate", [hadamard(4), toffoli(5, 0, 3), phase((1, 2), 0.4)])
def test_noisy_rotation_unitary(rng, gate):
    s = rand_sv(rng, 6)
    apply_gate(s, gate, angle_override=gate.angle + 0.3)
    assert s.norm() == pytest.approx(1.0, abs=1e-12)


def test_noisy_rotation_matches_exponential(rng):
    """exp(i theta P) equals the spectral formula for the projector of the gate."""
    theta = math.pi + 0.3
    for gate in (hadamard(1), toffoli(0, 2, 1)):
        M = gate_matrix(gate, 3, theta)
        G = gate_matrix(gate, 3, math.pi)           # involution I - 2P
        P = (np.eye(8) - G) / 2
        np.testing.assert_allclose(M, np.eye(8) + (np.exp(1j * theta) - 1) * P, atol=1e-14)
        np.testing.assert_allclose(M.conj().T @ M, np.eye(8), atol=1e-14)
        s = rand_sv(rng, 3)
        ref = M @ s.amplitudes
        apply_gate(s, gate, angle_override=theta)
        np.testing.assert_allclose(s.amplitudes, ref, atol=1e-14)


gate_strategy = st.one_of(
    st.builds(lambda qs, th: phase(qs, th),
              st.lists(st.integers(0, 4), min_size=1, max_size=4, unique=True),
              st.floats(-7, 7)),
    st.builds(lambda q: hadamard(q), st.integers(0, 4)),
    st.builds(lambda qs: toffoli(*qs),
              st.lists(st.integers(0, 4), min_size=3, max_size=3, unique=True)),
)


@settings(max_examples=60, deadline=None)
@given(st.lists(gate_strategy, min_size=1, max_size=12), st.lists(st.floats(-0.5, 0.5), min_size=12, max_size=12),
       st.integers(0, 2**32 - 1))
def test_packed_matches_dense(gates, jit, seed):
    rng = np.random.default_rng(seed)
    psi = random_state(rng, 32)
    ref = psi.copy()
    for g, d in zip(gates, jit):
        ref = gate_matrix(g, 5, g.angle + d) @ ref
    out = apply_packed(psi.copy(), pack(gates), np.array(jit[: len(gates)]))
    np.testing.assert_allclose(out, ref, atol=1e-12)
    assert np.linalg.norm(out) == pytest.approx(1.0, abs=1e-12)


def test_batched_matches_single(rng):
    gates = [hadamard(0), toffoli(0, 1, 2), phase((2, 3), 0.3), hadamard(3)]
    packed = pack(gates)
    states = np.stack([random_state(rng, 16) for _ in range(3)])
    jit = rng.uniform(-0.1, 0.1, size=(3, len(gates)))
    singles = [apply_packed(states[r].copy(), packed, jit[r]) for r in range(3)]
    apply_packed(states, packed, jit)
    np.testing.assert_array_equal(states, np.stack(singles))


def test_gate_metadata():
    g = toffoli(0, 1, 5)
    assert g.kind == TOFFOLI and g.targets == (5,) and g.name == "TOFFOLI"
    assert hadamard(2).kind == HADAMARD
    assert phase((3, 1), 0.2).qubits == (1, 3)
