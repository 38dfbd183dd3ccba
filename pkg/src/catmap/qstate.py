"""Statevector container, initial states and position observables.

Basis index ``i = m + N * w``: the low ``n_q - 1`` bits hold the grid index
``m`` of x_m = -pi + 2 pi m / N (little-endian), the top bit is the work qubit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import MapParams


@dataclass
class StateVector:
    amplitudes: np.ndarray
    n_q: int

    def __post_init__(self):
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (1 << self.n_q,):
            raise ValueError(
                f"expected {1 << self.n_q} amplitudes for n_q={self.n_q}, "
                f"got shape {self.amplitudes.shape}"
            )

    @classmethod
    def basis(cls, n_q: int, index: int) -> "StateVector":
        amps = np.zeros(1 << n_q, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps, n_q)

    @classmethod
    def from_register(cls, psi: np.ndarray, n_q: int) -> "StateVector":
        """Embed an N-component wave function with the work qubit in |0>."""
        amps = np.zeros(1 << n_q, dtype=np.complex128)
        amps[: 1 << (n_q - 1)] = psi
        return cls(amps, n_q)

    @property
    def N(self) -> int:
        return 1 << (self.n_q - 1)

    def register(self) -> np.ndarray:
        """Work-qubit-0 block of the amplitudes (a view)."""
        return self.amplitudes[: self.N]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy(), self.n_q)


def coherent_width2(params: MapParams) -> float:
    """Squared position width hbar / (2 omega) of the island ground state.

    omega = 2 a sqrt(2 K) is the small-oscillation frequency at x = +-a,
    since V''(+-a) = 8 a^2.
    """
    omega = 2.0 * params.a * math.sqrt(2.0 * params.K)
    if omega <= 0:
        raise ValueError("coherent state needs K > 0 (zero oscillation frequency)")
    return params.hbar / (2.0 * omega)


def coherent_register(params: MapParams, x0: float, p0: float = 0.0) -> np.ndarray:
    if not -math.pi < x0 <= math.pi:
        raise ValueError(f"x0={x0} outside (-pi, pi]")
    s2 = coherent_width2(params)
    x = params.grid()
    psi = np.zeros(params.N, dtype=np.complex128)
    for shift in (-1, 0, 1):
        xs = x + 2.0 * math.pi * shift
        psi += np.exp(-((xs - x0) ** 2) / (4.0 * s2) + 1j * p0 * xs / params.hbar)
    return psi / np.linalg.norm(psi)


def init_coherent(params: MapParams, x0: float, p0: float = 0.0) -> StateVector:
    """Periodized Gaussian packet centred at (x0, p0)."""
    return StateVector.from_register(coherent_register(params, x0, p0), params.n_q)


def step_register(params: MapParams) -> np.ndarray:
    psi = np.zeros(params.N, dtype=np.complex128)
    psi[: params.N // 2] = math.sqrt(2.0 / params.N)
    return psi


def init_step(params: MapParams) -> StateVector:
    """Uniform amplitude on the x < 0 half of the grid."""
    return StateVector.from_register(step_register(params), params.n_q)


def distribution(state: StateVector) -> np.ndarray:
    """W(x_m), with the work qubit traced out."""
    p = np.abs(state.amplitudes) ** 2
    return p[: state.N] + p[state.N :]


def w_alive(state: StateVector) -> float:
    """Total probability on x < 0, i.e. m < N/2."""
    return float(distribution(state)[: state.N // 2].sum())


def register_w_alive(psi: np.ndarray) -> float:
    """``w_alive`` for a bare N-component wave function."""
    return float(np.sum(np.abs(psi[: psi.shape[-1] // 2]) ** 2))


def overlap(s1: StateVector, s2: StateVector) -> complex:
    if s1.n_q != s2.n_q:
        raise ValueError(f"dimension mismatch: n_q={s1.n_q} vs n_q={s2.n_q}")
    return complex(np.vdot(s1.amplitudes, s2.amplitudes))


def fidelity(s1: StateVector, s2: StateVector) -> float:
    return abs(overlap(s1, s2)) ** 2


def write_wx_csv(rows, x: np.ndarray, path) -> None:
    """``rows`` is an iterable of (t, W) with W an array over the grid."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "m", "x", "W"])
        for t, W in rows:
            for m, (xm, wm) in enumerate(zip(x, W)):
                w.writerow([t, m, repr(float(xm)), repr(float(wm))])


def write_wa_csv(ts, was, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "W_a"])
        for t, v in zip(ts, was):
            w.writerow([int(t), repr(float(v))])
