"""Gate records and in-place statevector kernels.

Every gate is a rotation ``exp(i theta P)`` about a projector ``P``:

* PHASE on subset S: P projects on "all bits of S are 1"; theta is the phase.
* H on qubit q: P = (1 - H)/2; theta = pi gives the Hadamard exactly.
* TOFFOLI (c1, c2, t): P = |11><11|_c (x) |-><-|_t; theta = pi gives the
  Toffoli exactly.

so a perturbed angle ``pi + delta`` is a well defined noisy rotation for every
kind. Qubit j carries the bit 2**j of the basis index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

PHASE, HADAMARD, TOFFOLI = 0, 1, 2
KIND_NAMES = {PHASE: "PHASE", HADAMARD: "H", TOFFOLI: "TOFFOLI"}
KIND_CODES = {v: k for k, v in KIND_NAMES.items()}

_H = 1.0 / math.sqrt(2.0)
# projector entries (g00, g01, g11) of the non-diagonal gates; the Hadamard
# entry list also carries 1/sqrt(2) for the exact gate
_HADAMARD_PROJ = ((1.0 - _H) / 2.0, -_H / 2.0, (1.0 + _H) / 2.0, _H)
_TOFFOLI_PROJ = (0.5, -0.5, 0.5)


@dataclass(frozen=True)
class Gate:
    """One elementary gate.

    ``qubits`` is the subset S for PHASE, ``(q,)`` for H and
    ``(c1, c2, target)`` for TOFFOLI. ``stage`` labels where in the map
    iteration the gate sits (kick, qft, kinetic, iqft).
    """

    kind: int
    qubits: tuple
    angle: float = math.pi
    stage: str = ""

    @property
    def name(self) -> str:
        return KIND_NAMES[self.kind]

    @property
    def targets(self) -> tuple:
        if self.kind == TOFFOLI:
            return (self.qubits[2],)
        return self.qubits

    def validate(self, n_q: int) -> None:
        q = self.qubits
        if len(set(q)) != len(q):
            raise ValueError(f"duplicate qubit indices in {self}")
        if any(not 0 <= j < n_q for j in q):
            raise ValueError(f"qubit index out of range for n_q={n_q}: {self}")
        expected = {HADAMARD: (1,), TOFFOLI: (3,), PHASE: (1, 2, 3, 4)}[self.kind]
        if len(q) not in expected:
            raise ValueError(f"wrong number of qubits for {self.name}: {q}")


def phase(subset, theta: float, stage: str = "") -> Gate:
    return Gate(PHASE, tuple(sorted(subset)), float(theta), stage)


def hadamard(q: int, stage: str = "") -> Gate:
    return Gate(HADAMARD, (q,), math.pi, stage)


def toffoli(c1: int, c2: int, t: int, stage: str = "") -> Gate:
    return Gate(TOFFOLI, (c1, c2, t), math.pi, stage)


# --------------------------------------------------------------------------
# kernels

@njit(cache=True, inline="always")
def _insert_bit(i, pos, bit):
    low = i & ((1 << pos) - 1)
    return ((i >> pos) << (pos + 1)) | (bit << pos) | low


@njit(cache=True)
def _phase_kernel(amps, qubits, k, factor):
    # qubits[:k] sorted ascending; visits only the 2**(n-k) selected indices
    count = amps.shape[0] >> k
    if k == 1:
        q0 = qubits[0]
        for r in range(count):
            amps[_insert_bit(r, q0, 1)] *= factor
    elif k == 2:
        q0, q1 = qubits[0], qubits[1]
        for r in range(count):
            amps[_insert_bit(_insert_bit(r, q0, 1), q1, 1)] *= factor
    elif k == 3:
        q0, q1, q2 = qubits[0], qubits[1], qubits[2]
        for r in range(count):
            amps[_insert_bit(_insert_bit(_insert_bit(r, q0, 1), q1, 1), q2, 1)] *= factor
    else:
        for r in range(count):
            i = r
            for j in range(k):
                i = _insert_bit(i, qubits[j], 1)
            amps[i] *= factor


@njit(cache=True)
def _rotation1(amps, target, u00, u01, u10, u11):
    tk = 1 << target
    for r in range(amps.shape[0] >> 1):
        i0 = _insert_bit(r, target, 0)
        i1 = i0 | tk
        a0 = amps[i0]
        a1 = amps[i1]
        amps[i0] = u00 * a0 + u01 * a1
        amps[i1] = u10 * a0 + u11 * a1


@njit(cache=True)
def _sort3(c1, c2, t):
    # positions ascending with the bit value inserted there (controls 1, target 0)
    p0, b0, p1, b1, p2, b2 = c1, 1, c2, 1, t, 0
    if p0 > p1:
        p0, b0, p1, b1 = p1, b1, p0, b0
    if p1 > p2:
        p1, b1, p2, b2 = p2, b2, p1, b1
    if p0 > p1:
        p0, b0, p1, b1 = p1, b1, p0, b0
    return p0, b0, p1, b1, p2, b2


@njit(cache=True)
def _rotation3(amps, c1, c2, target, u00, u01, u10, u11):
    p0, b0, p1, b1, p2, b2 = _sort3(c1, c2, target)
    tk = 1 << target
    for r in range(amps.shape[0] >> 3):
        i0 = _insert_bit(_insert_bit(_insert_bit(r, p0, b0), p1, b1), p2, b2)
        i1 = i0 | tk
        a0 = amps[i0]
        a1 = amps[i1]
        amps[i0] = u00 * a0 + u01 * a1
        amps[i1] = u10 * a0 + u11 * a1


@njit(cache=True)
def _swap3(amps, c1, c2, target):
    p0, b0, p1, b1, p2, b2 = _sort3(c1, c2, target)
    tk = 1 << target
    for r in range(amps.shape[0] >> 3):
        i0 = _insert_bit(_insert_bit(_insert_bit(r, p0, b0), p1, b1), p2, b2)
        i1 = i0 | tk
        tmp = amps[i0]
        amps[i0] = amps[i1]
        amps[i1] = tmp


@njit(cache=True)
def _apply_one(amps, kind, qubits, nqb, theta, hproj, tproj):
    if kind == 0:
        _phase_kernel(amps, qubits, nqb, complex(math.cos(theta), math.sin(theta)))
        return
    if theta == math.pi:
        # exact gate: avoids the sin(pi) ~ 1e-16 leak of the rotation formula
        if kind == 1:
            _rotation1(amps, qubits[0], hproj[3], hproj[3], hproj[3], -hproj[3])
        else:
            _swap3(amps, qubits[0], qubits[1], qubits[2])
        return
    # exp(i theta P) = 1 + (e^{i theta} - 1) P
    e = complex(math.cos(theta) - 1.0, math.sin(theta))
    if kind == 1:
        _rotation1(amps, qubits[0], 1.0 + e * hproj[0], e * hproj[1], e * hproj[1],
                   1.0 + e * hproj[2])
    else:
        _rotation3(amps, qubits[0], qubits[1], qubits[2], 1.0 + e * tproj[0],
                   e * tproj[1], e * tproj[1], 1.0 + e * tproj[2])


@njit(cache=True)
def _apply_packed(amps, kinds, qubits, nqb, angles, jitter, hproj, tproj):
    for g in range(kinds.shape[0]):
        _apply_one(amps, kinds[g], qubits[g], nqb[g], angles[g] + jitter[g], hproj, tproj)


@njit(cache=True)
def _apply_packed_batch(states, kinds, qubits, nqb, angles, jitter, hproj, tproj):
    for r in range(states.shape[0]):
        _apply_packed(states[r], kinds, qubits, nqb, angles, jitter[r], hproj, tproj)


_HPROJ = np.array(_HADAMARD_PROJ)
_TPROJ = np.array(_TOFFOLI_PROJ)


# --------------------------------------------------------------------------
# packed circuits

@dataclass(frozen=True)
class PackedGates:
    """Array form of a gate list, the layout consumed by the kernels."""

    kinds: np.ndarray   # int64[n_g]
    qubits: np.ndarray  # int64[n_g, 4], sorted subset for PHASE, -1 padded
    nqb: np.ndarray     # int64[n_g]
    angles: np.ndarray  # float64[n_g]

    def __len__(self):
        return self.kinds.shape[0]


def pack(gates) -> PackedGates:
    n = len(gates)
    kinds = np.empty(n, dtype=np.int64)
    qubits = np.full((n, 4), -1, dtype=np.int64)
    nqb = np.empty(n, dtype=np.int64)
    angles = np.empty(n, dtype=np.float64)
    for g, gate in enumerate(gates):
        kinds[g] = gate.kind
        q = sorted(gate.qubits) if gate.kind == PHASE else gate.qubits
        qubits[g, : len(q)] = q
        nqb[g] = len(q)
        angles[g] = gate.angle
    return PackedGates(kinds, qubits, nqb, angles)


def apply_packed(amps: np.ndarray, packed: PackedGates, jitter=None) -> np.ndarray:
    """Apply every gate in order to a 1-D or (realizations, dim) array in place.

    ``jitter`` has the shape ``amps.shape[:-1] + (n_g,)`` and is added to the
    canonical angles.
    """
    if jitter is None:
        jitter = np.zeros(amps.shape[:-1] + (len(packed),))
    if amps.ndim == 1:
        _apply_packed(amps, packed.kinds, packed.qubits, packed.nqb, packed.angles,
                      jitter, _HPROJ, _TPROJ)
    else:
        _apply_packed_batch(amps, packed.kinds, packed.qubits, packed.nqb,
                            packed.angles, jitter, _HPROJ, _TPROJ)
    return amps


# --------------------------------------------------------------------------
# single-gate API on StateVector

def _check(n_q, qubits):
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"duplicate qubit indices: {qubits}")
    for q in qubits:
        if not 0 <= q < n_q:
            raise ValueError(f"qubit index {q} out of range for n_q={n_q}")


def apply_phase_subset(state, subset, theta: float):
    subset = sorted(subset)
    _check(state.n_q, subset)
    if not 1 <= len(subset) <= 4:
        raise ValueError(f"phase subset must hold 1..4 qubits, got {subset}")
    q = np.array(subset, dtype=np.int64)
    _phase_kernel(state.amplitudes, q, len(subset), complex(math.cos(theta), math.sin(theta)))
    return state


def apply_hadamard(state, q: int):
    _check(state.n_q, [q])
    a = state.amplitudes.reshape(-1, 2, 1 << q)
    lo, hi = a[:, 0, :].copy(), a[:, 1, :].copy()
    a[:, 0, :] = (lo + hi) * _H
    a[:, 1, :] = (lo - hi) * _H
    return state


def apply_toffoli(state, c1: int, c2: int, t: int):
    _check(state.n_q, [c1, c2, t])
    _swap3(state.amplitudes, c1, c2, t)
    return state


def apply_gate(state, gate: Gate, angle_override=None):
    """Apply ``gate``; with ``angle_override`` the gate is the rotation at that angle."""
    gate.validate(state.n_q)
    if angle_override is None:
        if gate.kind == HADAMARD and gate.angle == math.pi:
            return apply_hadamard(state, gate.qubits[0])
        if gate.kind == TOFFOLI and gate.angle == math.pi:
            return apply_toffoli(state, *gate.qubits)
        theta = gate.angle
    else:
        theta = float(angle_override)
    if gate.kind == PHASE:
        return apply_phase_subset(state, gate.qubits, theta)
    packed = pack([Gate(gate.kind, gate.qubits, theta, gate.stage)])
    apply_packed(state.amplitudes, packed)
    return state


def gate_matrix(gate: Gate, n_q: int, theta=None) -> np.ndarray:
    """Dense 2**n_q matrix of ``exp(i theta P)``, built from the projector.

    Independent of the kernels; used as a brute-force reference.
    """
    theta = gate.angle if theta is None else theta
    dim = 1 << n_q
    idx = np.arange(dim)
    if gate.kind == PHASE:
        sel = np.ones(dim, dtype=bool)
        for q in gate.qubits:
            sel &= ((idx >> q) & 1) == 1
        P = np.diag(sel.astype(complex))
    else:
        if gate.kind == HADAMARD:
            q = gate.qubits[0]
            h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
            local = (np.eye(2) - h) / 2
            ctrl = np.ones(dim, dtype=bool)
        else:
            c1, c2, q = gate.qubits
            local = np.array([[1, -1], [-1, 1]]) / 2
            ctrl = (((idx >> c1) & 1) == 1) & (((idx >> c2) & 1) == 1)
        P = np.zeros((dim, dim), dtype=complex)
        for i in range(dim):
            for j in range(dim):
                if not (ctrl[i] and ctrl[j]):
                    continue
                if (i ^ j) & ~(1 << q):
                    continue
                P[i, j] = local[(i >> q) & 1, (j >> q) & 1]
    return np.eye(dim) + (np.exp(1j * theta) - 1) * P
