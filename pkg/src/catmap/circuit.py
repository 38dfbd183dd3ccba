"""Gate-level compilation of one map iteration.

One iteration in the x representation is

    kick  ->  QFT  ->  kinetic phase exp(-2 pi i k^2 / N)  ->  inverse QFT

The kick phase phi(m) = -K V(x_m) / hbar is a degree-4 polynomial in the
register value m = sum_j alpha_j 2^j. Expanding m^k over ordered bit tuples
turns it into products of bits, each realized by one controlled phase. Four-bit
products go through the work qubit: T(j1, j2, w) . C2(w, j3, j4) . T(j1, j2, w).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np
from numpy.polynomial import Polynomial

from . import gateset
from .dynamics import MapParams
from .gateset import HADAMARD, PHASE, TOFFOLI, Gate

EXPANSIONS = ("tuples", "subsets")

COUNT_KEYS = ("kick_toffoli", "kick_phase", "qft_h", "qft_cphase", "kinetic_phase", "total")


def reduce_angle(theta: float) -> float:
    """Reduce into (-pi, pi]."""
    r = math.fmod(theta, 2.0 * math.pi)
    if r <= -math.pi:
        r += 2.0 * math.pi
    elif r > math.pi:
        r -= 2.0 * math.pi
    return r


def kick_coefficients(params: MapParams) -> np.ndarray:
    """Coefficients c_0..c_4 of phi(m) = -K V(-pi + 2 pi m / N) / hbar in powers of m."""
    x = Polynomial([-math.pi, 2.0 * math.pi / params.N])
    phi = -(params.K / params.hbar) * (x * x - params.a ** 2) ** 2
    c = np.zeros(5)
    c[: len(phi.coef)] = phi.coef
    return c


@dataclass
class PhasePolynomial:
    """Multilinear form of the kick phase: phi(m) = sum over S subset of bits(m) of theta_S.

    ``theta`` maps sorted qubit tuples (1 to 4 physical qubits) to angles in
    (-pi, pi]; ``global_phase`` is theta of the empty set, which is dropped
    from the circuit.
    """

    n_phys: int
    theta: dict
    global_phase: float

    def evaluate(self, m: int) -> float:
        total = self.global_phase
        for S, th in self.theta.items():
            if all((m >> j) & 1 for j in S):
                total += th
        return total


def _tuple_terms(c: np.ndarray, n: int):
    # (degree, ordered bit tuple, angle) for every monomial of sum_k c_k m^k
    for k in range(1, 5):
        if c[k] == 0.0:
            continue
        for tup in itertools.product(range(n), repeat=k):
            yield k, tup, c[k] * float(1 << sum(tup))


def phase_polynomial(params: MapParams) -> PhasePolynomial:
    c = kick_coefficients(params)
    n = params.n_phys
    acc: dict = {}
    for _, tup, ang in _tuple_terms(c, n):
        S = tuple(sorted(set(tup)))
        acc[S] = acc.get(S, 0.0) + ang
    theta = {S: reduce_angle(v) for S, v in sorted(acc.items(), key=lambda kv: (len(kv[0]), kv[0]))}
    return PhasePolynomial(n, theta, reduce_angle(c[0]))


def _via_work_qubit(S, theta, w):
    # Toffoli controls are the two lowest indices; the rest join w on the phase
    c1, c2 = S[0], S[1]
    rest = tuple(S[2:])
    return [
        gateset.toffoli(c1, c2, w, "kick"),
        gateset.phase((w,) + rest, theta, "kick"),
        gateset.toffoli(c1, c2, w, "kick"),
    ]


def compile_kick(params: MapParams, expansion: str = "tuples"):
    """Return ``(PhasePolynomial, gates)`` for the kick exp(-i K V(x) / hbar).

    ``expansion="tuples"`` emits one gate group per ordered bit tuple of each
    monomial m^k, every degree-4 tuple with at least two distinct bits routed
    through the work qubit (about 3 (n_q - 1)^4 gates). ``"subsets"`` merges
    all tuples over the same bit set into one gate per nonzero theta_S.
    """
    if expansion not in EXPANSIONS:
        raise ValueError(f"unknown expansion {expansion!r}; choose from {EXPANSIONS}")
    poly = phase_polynomial(params)
    w = params.work_qubit
    gates: list[Gate] = []
    if expansion == "subsets":
        for S, th in poly.theta.items():
            if th == 0.0:
                continue
            if len(S) == 4:
                gates.extend(_via_work_qubit(S, th, w))
            else:
                gates.append(gateset.phase(S, th, "kick"))
        return poly, gates

    c = kick_coefficients(params)
    for k, tup, ang in _tuple_terms(c, params.n_phys):
        th = reduce_angle(ang)
        if th == 0.0:
            continue
        S = tuple(sorted(set(tup)))
        if k == 4 and len(S) >= 2:
            gates.extend(_via_work_qubit(S, th, w))
        else:
            gates.append(gateset.phase(S, th, "kick"))
    return poly, gates


def compile_qft(params: MapParams, inverse: bool = False) -> list[Gate]:
    """QFT with kernel exp(+2 pi i m k / N) on the physical register.

    No swaps: after the forward transform qubit j holds bit (n - 1 - j) of k.
    The inverse is the reversed sequence with conjugated phases.
    """
    n = params.n_phys
    fwd: list[Gate] = []
    for j in reversed(range(n)):
        fwd.append(gateset.hadamard(j, "qft"))
        for i in reversed(range(j)):
            fwd.append(gateset.phase((i, j), math.pi / (1 << (j - i)), "qft"))
    if not inverse:
        return fwd
    inv = []
    for g in reversed(fwd):
        if g.kind == PHASE:
            g = gateset.phase(g.qubits, reduce_angle(-g.angle))
        inv.append(Gate(g.kind, g.qubits, g.angle, "iqft"))
    return inv


def _phase_of_power(coef: int, exponent: int, N: int) -> float:
    # -2 pi * coef * 2^exponent / N reduced exactly before converting to float
    frac = Fraction(coef * (1 << exponent), N) % 1
    return reduce_angle(-2.0 * math.pi * float(frac))


def compile_kinetic(params: MapParams) -> list[Gate]:
    """exp(-i hbar k^2 / 2) = exp(-2 pi i k^2 / N) on the bit-reversed register.

    One singleton phase per bit and one pair phase per bit pair; gates whose
    angle is a multiple of 2 pi are kept so the count stays n + n(n-1)/2.
    """
    n, N = params.n_phys, params.N

    def q(j):
        return n - 1 - j

    gates = [gateset.phase((q(j),), _phase_of_power(1, 2 * j, N), "kinetic") for j in range(n)]
    for j1 in range(n):
        for j2 in range(j1 + 1, n):
            ang = _phase_of_power(2, j1 + j2, N)
            gates.append(gateset.phase((q(j1), q(j2)), ang, "kinetic"))
    return gates


@dataclass(frozen=True)
class Circuit:
    gates: tuple
    params: MapParams
    expansion: str = "tuples"
    counts: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.gates)

    @cached_property
    def packed(self) -> gateset.PackedGates:
        return gateset.pack(self.gates)

    @cached_property
    def touches_work(self) -> np.ndarray:
        """Boolean mask of gates whose target set includes the work qubit."""
        w = self.params.work_qubit
        return np.array([w in g.targets for g in self.gates], dtype=bool)

    @cached_property
    def is_phase(self) -> np.ndarray:
        return np.array([g.kind == PHASE for g in self.gates], dtype=bool)


def _tally(gates) -> dict:
    counts = dict.fromkeys(COUNT_KEYS, 0)
    for g in gates:
        if g.stage == "kick":
            counts["kick_toffoli" if g.kind == TOFFOLI else "kick_phase"] += 1
        elif g.stage in ("qft", "iqft"):
            counts["qft_h" if g.kind == HADAMARD else "qft_cphase"] += 1
        elif g.stage == "kinetic":
            counts["kinetic_phase"] += 1
    counts["total"] = len(gates)
    return counts


def make_circuit(gates, params: MapParams, expansion: str = "tuples") -> Circuit:
    gates = tuple(gates)
    for g in gates:
        g.validate(params.n_q)
    return Circuit(gates, params, expansion, _tally(gates))


def compile_map(params: MapParams, expansion: str = "tuples") -> Circuit:
    """One full iteration: kick, QFT, kinetic rotation, inverse QFT."""
    _, kick = compile_kick(params, expansion)
    gates = kick + compile_qft(params) + compile_kinetic(params) + compile_qft(params, inverse=True)
    return make_circuit(gates, params, expansion)


def gate_count(c: Circuit) -> dict:
    return dict(c.counts) if c.counts else dict.fromkeys(COUNT_KEYS, 0)


def dump(c: Circuit) -> str:
    """One gate per line: ``KIND q1,q2,... angle``."""
    lines = []
    for g in c.gates:
        qs = ",".join(str(q) for q in g.qubits)
        lines.append(f"{g.name} {qs} {g.angle:.17g}")
    return "\n".join(lines) + ("\n" if lines else "")


def bit_reverse(k: int, n: int) -> int:
    return int(format(k, f"0{n}b")[::-1], 2) if n else 0


def qft_output_order(n: int) -> np.ndarray:
    """Register index holding momentum k after the swap-free QFT, for each k."""
    return np.array([bit_reverse(k, n) for k in range(1 << n)])
