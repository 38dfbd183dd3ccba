"""Split-operator propagator for the quantum double-well map.

psi -> F^-1 [ exp(-2 pi i k^2 / N) F [ exp(-i K V(x) / hbar) psi ] ]

with symmetric (1/sqrt N) discrete Fourier transforms. This is the classical
O(N log N) reference the gate circuit is checked against.
"""

from __future__ import annotations

import numpy as np

from .dynamics import MapParams
from .qstate import register_w_alive


def kick_phases(params: MapParams) -> np.ndarray:
    x = params.grid()
    return np.exp(-1j * params.K * params.potential(x) / params.hbar)


def kinetic_phases(params: MapParams) -> np.ndarray:
    k = np.arange(params.N, dtype=np.int64)
    # k^2 mod N keeps the argument small and exact
    return np.exp(-2j * np.pi * ((k * k) % params.N) / params.N)


# beyond this size strided runs step one iteration at a time
DENSE_MAX_N = 1024


class SplitOperator:
    """Precomputed diagonal factors for repeated steps at fixed parameters."""

    def __init__(self, params: MapParams):
        self.params = params
        self.kick = kick_phases(params)
        self.kinetic = kinetic_phases(params)

    def step(self, psi: np.ndarray) -> np.ndarray:
        if psi.shape[-1] != self.params.N:
            raise ValueError(f"expected {self.params.N} components, got {psi.shape[-1]}")
        phi = np.fft.fft(self.kick * psi, norm="ortho")
        return np.fft.ifft(self.kinetic * phi, norm="ortho")

    def matrix(self) -> np.ndarray:
        """Dense one-step propagator (columns are images of the grid basis)."""
        eye = np.eye(self.params.N, dtype=np.complex128)
        phi = np.fft.fft(self.kick[:, None] * eye, axis=0, norm="ortho")
        return np.fft.ifft(self.kinetic[:, None] * phi, axis=0, norm="ortho")


def split_operator_step(psi: np.ndarray, params: MapParams) -> np.ndarray:
    return SplitOperator(params).step(np.asarray(psi, dtype=np.complex128))


def evolve_oracle(psi, params: MapParams, t: int, stride: int = 1, keep_w=True):
    """Iterate ``t`` steps, recording at every ``stride``-th step (and t=0).

    Returns ``(times, W_a, W)`` where ``W`` is the (samples, N) array of
    position distributions, or None when ``keep_w`` is false. For strides
    above one the stride-step propagator is formed once as a dense matrix
    power, which makes very long runs cheap at small N.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    op = SplitOperator(params)
    psi = np.array(psi, dtype=np.complex128)
    times = list(range(0, t + 1, stride))
    if times[-1] != t:
        times.append(t)
    was = np.empty(len(times))
    W = np.empty((len(times), params.N)) if keep_w else None

    use_power = stride > 1 and params.N <= DENSE_MAX_N
    if use_power:
        U = np.linalg.matrix_power(op.matrix(), stride)

    now = 0
    for s, target in enumerate(times):
        while now < target:
            if use_power and target - now == stride:
                psi = U @ psi
                now += stride
            else:
                psi = op.step(psi)
                now += 1
        was[s] = register_w_alive(psi)
        if keep_w:
            W[s] = np.abs(psi) ** 2
    return np.array(times), was, W
