import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from catmap.circuit import compile_map
from catmap.dynamics import MapParams
from catmap.noise import (
    NoiseModel,
    exact_iterate,
    gate_jitter,
    jitter_mask,
    jitter_stream,
    noisy_iterate,
    run_ensemble,
    sample_jitter,
)
from catmap.qstate import StateVector, fidelity, init_coherent

from conftest import random_state


@pytest.fixture(scope="module")
def circ6():
    return compile_map(MapParams(0.04, 1.6, 6))


def test_zero_epsilon_no_jitter(circ6):
    m = NoiseModel(0.0, seed=3)
    assert sample_jitter(m, jitter_stream(m, 0, 0)) == 0.0
    assert not gate_jitter(circ6, m, 0, 5).any()


def test_jitter_distribution():
    m = NoiseModel(0.02, seed=99)
    d = sample_jitter(m, jitter_stream(m, 0, 0), size=10**6)
    assert np.abs(d).max() < 0.01
    assert abs(d.mean()) < 3 * 0.01 / np.sqrt(3 * 10**6)
    # uniform variance eps^2 / 12
    assert d.var() == pytest.approx(0.02**2 / 12, rel=0.01)


def test_jitter_deterministic(circ6):
    m = NoiseModel(0.02, seed=7)
    a = gate_jitter(circ6, m, 2, 11)
    b = gate_jitter(circ6, m, 2, 11)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, gate_jitter(circ6, m, 3, 11))
    assert not np.array_equal(a, gate_jitter(circ6, m, 2, 12))
    assert not np.array_equal(a, gate_jitter(circ6, NoiseModel(0.02, seed=8), 2, 11))


# first three offsets of (seed=1, realization 0, iteration 0) at eps = 0.02,
# frozen from Philox4x64 output so a generator change is caught
FROZEN_JITTER = [-0.003928639313864827, 0.006974174993715541, -0.006877304439130537]


def test_frozen_jitter_values(circ6):
    m = NoiseModel(0.02, seed=1)
    d = gate_jitter(circ6, m, 0, 0)
    assert d.shape == (2065,)
    np.testing.assert_allclose(d[:3], FROZEN_JITTER, rtol=0, atol=1e-18)


def test_negative_epsilon():
    with pytest.raises(ValueError):
        NoiseModel(-0.1)


def test_exempt_mask(circ6):
    full = jitter_mask(circ6, NoiseModel(0.01))
    ex = jitter_mask(circ6, NoiseModel(0.01, exempt_work_qubit=True))
    assert full.all()
    # the Toffolis targeting the work qubit and the phases including it
    assert (~ex).sum() == 1240 + 620
    d = gate_jitter(circ6, NoiseModel(0.01, exempt_work_qubit=True), 0, 0)
    assert not d[~ex].any() and d[ex].all()
    ph = jitter_mask(circ6, NoiseModel(0.01, phase_only=True))
    assert ph.sum() == circ6.is_phase.sum()


def test_zero_noise_matches_exact(circ6):
    psi = init_coherent(circ6.params, -1.6)
    a = noisy_iterate(psi.copy(), circ6, NoiseModel(0.0))
    b = exact_iterate(psi.copy(), circ6)
    np.testing.assert_array_equal(a.amplitudes, b.amplitudes)
    assert fidelity(a, b) == pytest.approx(1.0, abs=1e-12)


def test_wrong_size_rejected(circ6):
    with pytest.raises(ValueError):
        noisy_iterate(StateVector.basis(5, 0), circ6, NoiseModel(0.01))


@settings(max_examples=15, deadline=None)
@given(st.floats(0.0, 0.5), st.integers(0, 2**63 - 1), st.integers(0, 1000))
def test_noisy_norm(eps, seed, it):
    circ = compile_map(MapParams(0.04, 1.6, 5))
    rng = np.random.default_rng(seed % 2**32)
    s = StateVector(random_state(rng, 32), 5)
    noisy_iterate(s, circ, NoiseModel(eps, seed=seed), iteration=it)
    assert s.norm() == pytest.approx(1.0, abs=1e-12)


def test_norm_drift_million_gates(circ6):
    s = init_coherent(circ6.params, -1.6)
    m = NoiseModel(0.02, seed=5)
    iters = -(-10**6 // len(circ6))
    for t in range(iters):
        noisy_iterate(s, circ6, m, iteration=t)
    assert abs(s.norm() - 1.0) < 1e-8


def _mean_infidelity(circ, eps, reps=64):
    psi = init_coherent(circ.params, -1.6)
    ref = exact_iterate(psi.copy(), circ)
    vals = []
    for r in range(reps):
        s = noisy_iterate(psi.copy(), circ, NoiseModel(eps, seed=17, realization_id=r))
        vals.append(1.0 - fidelity(s, ref))
    return float(np.mean(vals))


def test_infidelity_quadratic_in_epsilon(circ6):
    hi = _mean_infidelity(circ6, 0.02)
    lo = _mean_infidelity(circ6, 0.01)
    assert hi / lo == pytest.approx(4.0, rel=0.3)


def test_exemption_raises_fidelity(circ6):
    psi = init_coherent(circ6.params, -1.6)
    ref = exact_iterate(psi.copy(), circ6, 20)
    run_full = run_ensemble(circ6, psi, NoiseModel(0.02, seed=2), 20, realizations=16)
    run_ex = run_ensemble(circ6, psi, NoiseModel(0.02, seed=2, exempt_work_qubit=True), 20,
                          realizations=16)
    f_full = [abs(np.vdot(ref.amplitudes, s)) ** 2 for s in run_full.final_states]
    f_ex = [abs(np.vdot(ref.amplitudes, s)) ** 2 for s in run_ex.final_states]
    assert np.mean(f_ex) > np.mean(f_full)


def test_ensemble_matches_single_runs(circ6):
    psi = init_coherent(circ6.params, -1.6)
    m = NoiseModel(0.01, seed=4, realization_id=10)
    ens = run_ensemble(circ6, psi, m, 6, realizations=3, stride=4)
    assert ens.times.tolist() == [0, 4, 6]
    for r in range(3):
        s = psi.copy()
        mr = NoiseModel(0.01, seed=4, realization_id=10 + r)
        for t in range(6):
            noisy_iterate(s, circ6, mr, iteration=t)
        np.testing.assert_array_equal(ens.final_states[r], s.amplitudes)


def test_noise_damps_oscillation(circ6):
    psi = init_coherent(circ6.params, -1.6)
    ideal = run_ensemble(circ6, psi, NoiseModel(0.0), 180, realizations=1)
    noisy = run_ensemble(circ6, psi, NoiseModel(0.02, seed=3), 180, realizations=16)
    late = slice(150, 181)
    swing_ideal = np.ptp(ideal.mean_w_alive[late])
    swing_noisy = np.ptp(noisy.mean_w_alive[late])
    assert swing_noisy < 0.8 * swing_ideal


def test_ensemble_bad_args(circ6):
    psi = init_coherent(circ6.params, -1.6)
    with pytest.raises(ValueError):
        run_ensemble(circ6, psi, NoiseModel(0.01), 5, realizations=0)
