"""Classical double-well map and Poincare sections.

The map acts on (p, x) with x on the circle (-pi, pi]:

    p' = p - K dV/dx(x),   x' = x + p'  (mod 2 pi),   V(x) = (x^2 - a^2)^2

Momentum is left unbounded while iterating and only folded into (-pi, pi]
when a section is written out.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class MapParams:
    """Map constants shared by the classical, quantum and circuit code paths.

    ``n_q`` counts every qubit including the work qubit, so the physical
    register holds ``N = 2**(n_q - 1)`` levels and ``hbar = 4 pi / N``.
    """

    K: float
    a: float
    n_q: int = 6
    N: int = field(init=False)
    hbar: float = field(init=False)

    def __post_init__(self):
        if self.n_q < 2:
            raise ValueError(f"n_q must be >= 2, got {self.n_q}")
        if not 0.0 < self.a < math.pi:
            raise ValueError(f"well position a must lie in (0, pi), got {self.a}")
        if self.K < 0:
            raise ValueError(f"kick strength K must be >= 0, got {self.K}")
        object.__setattr__(self, "N", 1 << (self.n_q - 1))
        object.__setattr__(self, "hbar", 4.0 * math.pi / self.N)

    @property
    def n_phys(self) -> int:
        """Number of qubits in the physical register."""
        return self.n_q - 1

    @property
    def work_qubit(self) -> int:
        return self.n_q - 1

    def grid(self) -> np.ndarray:
        """Coordinates x_m = -pi + 2 pi m / N."""
        return -math.pi + TWO_PI * np.arange(self.N) / self.N

    def potential(self, x):
        return (x * x - self.a * self.a) ** 2


@dataclass(frozen=True)
class PhasePoint:
    p: float
    x: float


def wrap_angle(x):
    """Reduce into the half-open interval (-pi, pi]; -pi maps to +pi.

    Built on fmod, which is exact and odd, so in-range values pass through
    unchanged and wrap_angle(-x) == -wrap_angle(x) away from the boundary.
    """
    r = np.fmod(x, TWO_PI)
    r = np.where(r > math.pi, r - TWO_PI, r)
    r = np.where(r <= -math.pi, r + TWO_PI, r)
    if np.ndim(r) == 0:
        return float(r)
    return r


def force(x, a):
    """dV/dx for V = (x^2 - a^2)^2."""
    return 4.0 * x * (x * x - a * a)


def classical_step(pt: PhasePoint, params: MapParams) -> PhasePoint:
    p = pt.p - params.K * force(pt.x, params.a)
    return PhasePoint(p=p, x=wrap_angle(pt.x + p))


def iterate(p0: float, x0: float, params: MapParams, iters: int) -> tuple[np.ndarray, np.ndarray]:
    """Raw orbit: arrays of length ``iters + 1`` starting with the initial point."""
    ps = np.empty(iters + 1)
    xs = np.empty(iters + 1)
    p, x = float(p0), float(x0)
    K, a = params.K, params.a
    ps[0], xs[0] = p, x
    for t in range(1, iters + 1):
        p = p - K * 4.0 * x * (x * x - a * a)
        x = wrap_angle(x + p)
        ps[t], xs[t] = p, x
    return ps, xs


@dataclass
class Orbit:
    orbit_id: int
    start: PhasePoint
    p: np.ndarray
    x: np.ndarray


def poincare_section(starts: Sequence[PhasePoint], params: MapParams, iters: int) -> list[Orbit]:
    """Iterate each start ``iters`` times; both coordinates folded into (-pi, pi]."""
    if iters < 1:
        raise ValueError("iters must be >= 1")
    orbits = []
    for k, s in enumerate(starts):
        if not -math.pi < s.x <= math.pi:
            raise ValueError(f"start x={s.x} outside (-pi, pi]")
        ps, xs = iterate(s.p, s.x, params, iters)
        orbits.append(Orbit(k, s, wrap_angle(ps[1:]), xs[1:]))
    return orbits


# Starts used for the default section at K=0.04, a=1.6: two island orbits and
# one in the chaotic layer.
DEFAULT_STARTS = (
    PhasePoint(p=0.0, x=1.3),
    PhasePoint(p=0.0, x=-1.9),
    PhasePoint(p=0.0, x=0.05),
)


def write_section_csv(orbits: Iterable[Orbit], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["orbit_id", "t", "x", "p"])
        for orb in orbits:
            for t, (x, p) in enumerate(zip(orb.x, orb.p), start=1):
                w.writerow([orb.orbit_id, t, repr(float(x)), repr(float(p))])
