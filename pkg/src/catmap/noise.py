"""Noisy gates: uniform jitter of every gate's rotation angle.

Each application of a gate with canonical angle theta uses theta + delta with
delta uniform on (-eps/2, eps/2), drawn afresh for every gate and iteration.

Random numbers come from Philox4x64-10 (numpy's counter-based generator)
keyed by ``(seed, realization_id)`` with the 256-bit counter starting at
``iteration * 2**64``; the k-th raw 64-bit word of that block belongs to
gate k. Streams are therefore addressed by (seed, realization, iteration,
gate index) and independent of how realizations are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import Circuit
from .gateset import apply_packed
from .qstate import StateVector

_MASK64 = (1 << 64) - 1
_TWO_M53 = 2.0 ** -53


@dataclass(frozen=True)
class NoiseModel:
    epsilon: float = 0.0
    exempt_work_qubit: bool = False
    seed: int = 0
    realization_id: int = 0
    phase_only: bool = False  # jitter PHASE gates only, leave H/Toffoli exact

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")


def _open_uniform(raw: np.ndarray) -> np.ndarray:
    # top 53 bits, shifted half a step: strictly inside (0, 1)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53


def sample_jitter(model: NoiseModel, rng: np.random.Generator, size=None):
    """Uniform jitter on (-eps/2, eps/2) from ``rng``'s raw stream."""
    if model.epsilon == 0.0:
        return 0.0 if size is None else np.zeros(size)
    n = 1 if size is None else int(np.prod(size))
    u = _open_uniform(rng.bit_generator.random_raw(n))
    d = model.epsilon * (u - 0.5)
    return float(d[0]) if size is None else d.reshape(size)


def jitter_stream(model: NoiseModel, realization_id: int, iteration: int) -> np.random.Generator:
    key = (int(model.seed) & _MASK64) | ((int(realization_id) & _MASK64) << 64)
    return np.random.Generator(np.random.Philox(key=key, counter=int(iteration) << 64))


def jitter_mask(circuit: Circuit, model: NoiseModel) -> np.ndarray:
    """Gates that receive jitter under ``model``."""
    mask = np.ones(len(circuit), dtype=bool)
    if model.exempt_work_qubit:
        mask &= ~circuit.touches_work
    if model.phase_only:
        mask &= circuit.is_phase
    return mask


def gate_jitter(circuit: Circuit, model: NoiseModel, realization_id: int, iteration: int,
                mask=None) -> np.ndarray:
    """Per-gate angle offsets for one iteration of one realization."""
    n = len(circuit)
    if model.epsilon == 0.0:
        return np.zeros(n)
    raw = jitter_stream(model, realization_id, iteration).bit_generator.random_raw(n)
    d = model.epsilon * (_open_uniform(raw) - 0.5)
    if mask is None:
        mask = jitter_mask(circuit, model)
    if not mask.all():
        d[~mask] = 0.0
    return d


def noisy_iterate(state: StateVector, circuit: Circuit, model: NoiseModel,
                  iteration: int = 0) -> StateVector:
    """One map iteration with jittered gates, in place."""
    if state.n_q != circuit.params.n_q:
        raise ValueError(f"circuit compiled for n_q={circuit.params.n_q}, state has {state.n_q}")
    d = gate_jitter(circuit, model, model.realization_id, iteration)
    apply_packed(state.amplitudes, circuit.packed, d)
    return state


def exact_iterate(state: StateVector, circuit: Circuit, iterations: int = 1) -> StateVector:
    zero = np.zeros(len(circuit))
    for _ in range(iterations):
        apply_packed(state.amplitudes, circuit.packed, zero)
    return state


@dataclass
class EnsembleRun:
    times: np.ndarray
    w_alive: np.ndarray          # (realizations, samples)
    distribution: np.ndarray | None  # (samples, N), ensemble mean
    final_states: np.ndarray     # (realizations, 2**n_q)

    @property
    def mean_w_alive(self) -> np.ndarray:
        return self.w_alive.mean(axis=0)


def run_ensemble(circuit: Circuit, psi0, model: NoiseModel, iterations: int,
                 realizations: int = 16, stride: int = 1, record_distribution=False) -> EnsembleRun:
    """Evolve ``realizations`` noisy copies of ``psi0`` side by side.

    Realization r uses stream id ``model.realization_id + r``. Observables are
    recorded at t = 0, stride, 2 stride, ... and at the final iteration.
    """
    if iterations < 0 or realizations < 1 or stride < 1:
        raise ValueError("need iterations >= 0, realizations >= 1, stride >= 1")
    params = circuit.params
    N, dim = params.N, 1 << params.n_q
    psi0 = np.asarray(psi0.amplitudes if isinstance(psi0, StateVector) else psi0,
                      dtype=np.complex128)
    states = np.zeros((realizations, dim), dtype=np.complex128)
    states[:, : psi0.shape[0]] = psi0
    times = list(range(0, iterations + 1, stride))
    if times[-1] != iterations:
        times.append(iterations)
    record = set(times)
    wa = np.empty((realizations, len(times)))
    W = np.empty((len(times), N)) if record_distribution else None
    mask = jitter_mask(circuit, model)
    jit = np.zeros((realizations, len(circuit)))
    ids = [model.realization_id + r for r in range(realizations)]

    s = 0
    for t in range(iterations + 1):
        if t in record:
            prob = np.abs(states) ** 2
            Wt = prob[:, :N] + prob[:, N:]
            wa[:, s] = Wt[:, : N // 2].sum(axis=1)
            if W is not None:
                W[s] = Wt.mean(axis=0)
            s += 1
        if t == iterations:
            break
        if model.epsilon > 0.0:
            for r, rid in enumerate(ids):
                jit[r] = gate_jitter(circuit, model, rid, t, mask)
        apply_packed(states, circuit.packed, jit)
    return EnsembleRun(np.array(times), wa, W, states)
