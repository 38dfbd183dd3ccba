"""Tunneling period and decoherence rate extraction.

W_a(t) = baseline + A exp(-Gamma t) cos(2 pi t / T_u + phi) is fitted by
nonlinear least squares; sweeps over (n_q, eps) are reduced to the power law
Gamma = c eps^alpha n_q^beta by linear regression in log space.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy.optimize import least_squares

from .circuit import compile_map
from .dynamics import MapParams
from .noise import NoiseModel, run_ensemble
from .oracle import evolve_oracle
from .qstate import coherent_register, step_register

log = logging.getLogger(__name__)

# spectral peak must exceed this multiple of the median magnitude
PEAK_FACTOR = 5.0
MAX_NFEV = 2000


class FitError(RuntimeError):
    status = "fit_error"


class NoOscillation(FitError):
    status = "no_oscillation"


class NonConvergence(FitError):
    status = "non_convergence"


class InsufficientSpread(ValueError):
    pass


@dataclass
class FitResult:
    T_u: float
    Gamma: float
    A: float
    phi: float
    baseline: float
    rms_residual: float
    n_samples: int = 0

    def model(self, t):
        return damped_cosine(np.asarray(t, dtype=float), self.baseline, self.A,
                             self.Gamma, self.T_u, self.phi)


def damped_cosine(t, baseline, A, gamma, period, phi):
    return baseline + A * np.exp(-gamma * t) * np.cos(2.0 * np.pi * t / period + phi)


def _spectral_period(t, y, dt):
    n = len(y)
    yd = y - y.mean()
    mag = np.abs(np.fft.rfft(yd))
    floor = np.median(mag[1:]) if len(mag) > 2 else 0.0
    k = int(np.argmax(mag[1:])) + 1
    peak = mag[k]
    # refine on a zero-padded spectrum around the coarse peak
    pad = 16
    fine = np.abs(np.fft.rfft(yd, n=pad * n))
    lo, hi = max(1, pad * k - pad), min(len(fine) - 1, pad * k + pad)
    kf = lo + int(np.argmax(fine[lo:hi + 1]))
    if 0 < kf < len(fine) - 1:
        a, b, c = fine[kf - 1], fine[kf], fine[kf + 1]
        den = a - 2 * b + c
        kf = kf + (0.5 * (a - c) / den if den != 0 else 0.0)
    return pad * n * dt / kf, peak, floor


def _envelope_guess(t, yd, period):
    """Decay rate from the log of half-period maxima of |y - mean|."""
    if period <= 0 or t[-1] - t[0] < 2 * period:
        return 0.0
    edges = np.arange(t[0], t[-1], period / 2.0)
    tc, env = [], []
    for lo in edges:
        sel = (t >= lo) & (t < lo + period / 2.0)
        if sel.sum() >= 2:
            j = np.argmax(np.abs(yd[sel]))
            tc.append(t[sel][j])
            env.append(abs(yd[sel][j]))
    env = np.asarray(env)
    if len(env) < 3 or np.any(env <= 0):
        return 0.0
    slope = np.polyfit(tc, np.log(env), 1)[0]
    return max(-slope, 0.0)


def fit_damped_cosine(t, y, *, period=None, hold_period=False, gamma=None,
                      check_oscillation=True) -> FitResult:
    """Least-squares fit of a damped cosine to a uniformly sampled series.

    ``period`` seeds the period (otherwise the dominant spectral peak does);
    ``hold_period`` keeps it fixed. ``gamma`` given as a number holds the
    decay rate at that value.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise ValueError("t and y must be 1-D arrays of equal length")
    if len(t) < 8:
        raise ValueError("need at least 8 samples")
    if not np.all(np.isfinite(y)):
        raise ValueError("series contains non-finite values")
    dt = np.diff(t)
    if not np.allclose(dt, dt[0], rtol=1e-9):
        raise ValueError("samples must be uniformly spaced")
    dt = dt[0]

    T_spec, peak, floor = _spectral_period(t, y, dt)
    if period is None:
        if check_oscillation and not peak > PEAK_FACTOR * floor:
            raise NoOscillation(f"spectral peak {peak:.3g} below {PEAK_FACTOR} x median {floor:.3g}")
        period = T_spec
    elif hold_period is False and check_oscillation and not peak > PEAK_FACTOR * floor:
        log.debug("weak spectral peak; relying on the supplied period %.6g", period)
    if hold_period and period is None:
        raise ValueError("hold_period needs a period")

    b0 = float(y.mean())
    yd = y - b0
    g0 = _envelope_guess(t, yd, period) if gamma is None else float(gamma)
    # first extremum within the first half period sets the amplitude
    first = t - t[0] <= max(period / 2.0, dt)
    A0 = float(yd[first][np.argmax(np.abs(yd[first]))])
    if A0 == 0.0:
        A0 = float(np.std(yd)) or 1e-3

    names = ["baseline", "A", "Gamma", "T_u", "phi"]
    start = {"baseline": b0, "A": A0, "Gamma": g0, "T_u": float(period), "phi": 0.0}
    held = {}
    if hold_period:
        held["T_u"] = float(period)
    if gamma is not None:
        held["Gamma"] = float(gamma)
    free = [n for n in names if n not in held]
    lower = {"baseline": -np.inf, "A": -np.inf, "Gamma": 0.0, "T_u": 2.0 * dt, "phi": -np.inf}

    def unpack(v):
        d = dict(held)
        d.update(zip(free, v))
        return d

    def residual(v, w):
        d = unpack(v)
        return w * (damped_cosine(t, d["baseline"], d["A"], d["Gamma"], d["T_u"], d["phi"]) - y)

    x0 = np.array([start[n] for n in free])
    x0 = np.maximum(x0, [lower[n] for n in free])
    bounds = ([lower[n] for n in free], [np.inf] * len(free))
    w = np.ones_like(y)
    res = least_squares(residual, x0, bounds=bounds, args=(w,), method="trf", x_scale="jac",
                        ftol=1e-15, xtol=1e-15, gtol=1e-15, max_nfev=MAX_NFEV)
    if res.status <= 0 and not _converged_enough(res):
        raise NonConvergence(res.message)

    # down-weight samples where the fitted envelope has sunk below twice the residual floor
    d = unpack(res.x)
    rms = float(np.sqrt(np.mean(res.fun ** 2)))
    env = abs(d["A"]) * np.exp(-d["Gamma"] * t)
    if "Gamma" in free and rms > 0 and np.any(env < 2.0 * rms):
        w = np.where(env < 2.0 * rms, 0.25, 1.0)
        res = least_squares(residual, res.x, bounds=bounds, args=(w,), method="trf",
                            x_scale="jac", ftol=1e-15, xtol=1e-15, gtol=1e-15, max_nfev=MAX_NFEV)
        if res.status <= 0 and not _converged_enough(res):
            raise NonConvergence(res.message)
        d = unpack(res.x)

    A, phi = d["A"], d["phi"]
    if A < 0:
        A, phi = -A, phi + math.pi
    phi = math.remainder(phi, 2.0 * math.pi)
    fitted = damped_cosine(t, d["baseline"], A, d["Gamma"], d["T_u"], phi)
    rms = float(np.sqrt(np.mean((fitted - y) ** 2)))
    return FitResult(T_u=float(d["T_u"]), Gamma=float(d["Gamma"]), A=float(A), phi=float(phi),
                     baseline=float(d["baseline"]), rms_residual=rms, n_samples=len(y))


def _converged_enough(res) -> bool:
    # max_nfev hit while already at machine-precision optimality
    return res.optimality < 1e-12


# --------------------------------------------------------------------------
# simulation drivers

def initial_register(params: MapParams, init: str = "coherent") -> np.ndarray:
    """Initial wave function on the grid: packet at x = -a, or the x < 0 step."""
    if init == "coherent":
        return coherent_register(params, -params.a, 0.0)
    if init == "step":
        return step_register(params)
    raise ValueError(f"unknown initial state {init!r}")


def tunneling_series(params: MapParams, iterations: int, *, backend="oracle", init="coherent",
                     stride=1, noise: NoiseModel | None = None, realizations=1,
                     expansion="tuples"):
    """(times, W_a) for one run; circuit runs average W_a over realizations."""
    psi0 = initial_register(params, init)
    if backend == "oracle":
        if noise is not None and noise.epsilon > 0:
            raise ValueError("the oracle backend has no gate noise")
        times, wa, _ = evolve_oracle(psi0, params, iterations, stride=stride, keep_w=False)
        return times, wa
    if backend == "circuit":
        circ = compile_map(params, expansion)
        run = run_ensemble(circ, psi0, noise or NoiseModel(), iterations, realizations, stride)
        return run.times, run.mean_w_alive
    raise ValueError(f"unknown backend {backend!r}")


# --------------------------------------------------------------------------
# decoherence sweep

@dataclass
class SweepCell:
    n_q: int
    K: float
    a: float
    epsilon: float
    seed: int = 0
    realizations: int = 16
    iterations: int = 1000
    exempt_work_qubit: bool = False
    init: str = "coherent"
    period_hint: float | None = None
    # apparent decay rate of the noiseless run over the same window
    gamma_ideal: float = 0.0


@dataclass
class SweepRecord:
    n_q: int
    K: float
    a: float
    epsilon: float
    seed: int
    realizations: int
    T_u: float = float("nan")
    gamma: float = float("nan")
    rms_residual: float = float("nan")
    status: str = "ok"
    exempt_work_qubit: bool = False
    iterations: int = 0
    gamma_raw: float = float("nan")
    period_held: bool = False

    @property
    def Gamma(self):
        return self.gamma


SWEEP_COLUMNS = ("n_q", "K", "a", "epsilon", "seed", "realizations", "T_u", "gamma",
                 "rms_residual", "status", "gamma_raw", "period_held", "exempt_work_qubit",
                 "iterations")


def noiseless_fit(params: MapParams, iterations: int, init="coherent") -> FitResult:
    """Damped-cosine fit of the ideal (oracle) run.

    Its Gamma is not zero: the exact W_a beats slowly between nearby tunneling
    frequencies, which a single damped cosine reads as weak decay.
    """
    t, wa = tunneling_series(params, iterations, init=init)
    return fit_damped_cosine(t, wa)


def run_cell(cell: SweepCell) -> SweepRecord:
    rec = SweepRecord(cell.n_q, cell.K, cell.a, cell.epsilon, cell.seed, cell.realizations,
                      exempt_work_qubit=cell.exempt_work_qubit, iterations=cell.iterations)
    try:
        params = MapParams(cell.K, cell.a, cell.n_q)
        model = NoiseModel(cell.epsilon, cell.exempt_work_qubit, cell.seed)
        t, wa = tunneling_series(params, cell.iterations, backend="circuit", init=cell.init,
                                 noise=model, realizations=cell.realizations)
        fit = fit_damped_cosine(t, wa, period=cell.period_hint)
        if cell.period_hint is not None and fit.Gamma * cell.period_hint > 1.0:
            # more than one e-fold per period: the period is not identifiable
            # from the data, so it is held at the noiseless value
            fit = fit_damped_cosine(t, wa, period=cell.period_hint, hold_period=True)
            rec.period_held = True
    except FitError as exc:
        rec.status = exc.status
        return rec
    except (ValueError, FloatingPointError) as exc:
        rec.status = f"error: {exc}"
        return rec
    rec.T_u, rec.rms_residual = fit.T_u, fit.rms_residual
    rec.gamma_raw = fit.Gamma
    rec.gamma = fit.Gamma - cell.gamma_ideal
    return rec


def _order(rec: SweepRecord):
    return (rec.n_q, rec.K, rec.a, rec.epsilon, rec.seed, rec.exempt_work_qubit)


def gamma_sweep(cells, workers: int = 1, reference=True) -> list[SweepRecord]:
    """Run every cell (ensemble-averaged W_a, damped-cosine fit).

    With ``reference`` each cell is paired with the noiseless oracle run over
    the same window: its period seeds the fit (strongly damped cells need no
    spectral peak) and its apparent decay rate is subtracted, so ``gamma`` is
    the decay rate added by gate noise and ``gamma_raw`` the bare fit value.
    Cells damped by more than one e-fold per reference period are refitted
    with the period held (``period_held``).
    Records come back in canonical order.
    """
    cells = list(cells)
    if reference:
        refs = {}
        for c in cells:
            key = (c.n_q, c.K, c.a, c.init, c.iterations)
            if key not in refs:
                try:
                    refs[key] = noiseless_fit(MapParams(c.K, c.a, c.n_q), c.iterations, c.init)
                except FitError:
                    refs[key] = None
        updated = []
        for c in cells:
            ref = refs[(c.n_q, c.K, c.a, c.init, c.iterations)]
            if ref is not None:
                hint = c.period_hint if c.period_hint is not None else ref.T_u
                c = SweepCell(**{**asdict(c), "period_hint": hint, "gamma_ideal": ref.Gamma})
            updated.append(c)
        cells = updated
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run_cell, cells))
    else:
        records = [run_cell(c) for c in cells]
    return sorted(records, key=_order)


# --------------------------------------------------------------------------
# scaling laws

@dataclass
class ScalingResult:
    exponent_eps: float
    exponent_nq: float
    prefactor: float
    stderr_eps: float
    stderr_nq: float
    stderr_log_prefactor: float
    # c with the exponents pinned at (2, 4): geometric mean of Gamma / (eps^2 n_q^4)
    prefactor_fixed: float
    n_records: int
    S_action: dict = field(default_factory=dict)


def fit_scaling(records) -> ScalingResult:
    """Regress log Gamma = log c + alpha log eps + beta log n_q."""
    rows = [r for r in records
            if r.status == "ok" and r.epsilon > 0 and np.isfinite(r.gamma) and r.gamma > 0]
    eps = np.array([r.epsilon for r in rows], dtype=float)
    nq = np.array([r.n_q for r in rows], dtype=float)
    gam = np.array([r.gamma for r in rows], dtype=float)
    if len(set(eps)) < 3 or len(set(nq)) < 2:
        raise InsufficientSpread(
            f"need >= 3 distinct eps and >= 2 distinct n_q, got {sorted(set(eps))}, {sorted(set(nq))}"
        )
    X = np.column_stack([np.ones_like(eps), np.log(eps), np.log(nq)])
    yv = np.log(gam)
    coef, *_ = np.linalg.lstsq(X, yv, rcond=None)
    resid = yv - X @ coef
    dof = len(yv) - 3
    if dof > 0:
        s2 = float(resid @ resid) / dof
        cov = s2 * np.linalg.inv(X.T @ X)
        se = np.sqrt(np.diag(cov))
    else:
        se = np.full(3, np.nan)
    fixed = float(np.exp(np.mean(yv - 2.0 * np.log(eps) - 4.0 * np.log(nq))))
    return ScalingResult(exponent_eps=float(coef[1]), exponent_nq=float(coef[2]),
                         prefactor=float(np.exp(coef[0])), stderr_eps=float(se[1]),
                         stderr_nq=float(se[2]), stderr_log_prefactor=float(se[0]),
                         prefactor_fixed=fixed, n_records=len(rows))


@dataclass
class PeriodRecord:
    n_q: int
    K: float
    a: float
    hbar: float
    T_u: float = float("nan")
    iterations: int = 0
    status: str = "ok"


def measure_period(params: MapParams, iterations: int | None = None, *, init="coherent",
                   samples: int = 4000, max_iterations: int = 20_000_000) -> PeriodRecord:
    """Ideal tunneling period from oracle runs with Gamma held at 0.

    Without ``iterations`` the run length starts at ``samples`` and grows
    eightfold until W_a has dropped below 1/2 (the packet has actually
    tunneled, so small fast wiggles inside the well are not mistaken for the
    tunneling oscillation) and at least three periods fit inside the run.
    """
    rec = PeriodRecord(params.n_q, params.K, params.a, params.hbar)
    length = iterations or samples
    while True:
        stride = max(1, length // samples)
        t, wa = tunneling_series(params, length, init=init, stride=stride)
        rec.iterations = length
        fit = None
        if wa.min() >= 0.5:
            ok = False
            rec.status = "no_tunneling"
        else:
            try:
                fit = fit_damped_cosine(t, wa, gamma=0.0)
                ok = fit.T_u * 3 <= length
            except FitError as exc:
                ok = False
                rec.status = exc.status
        if ok or iterations is not None or length * 8 > max_iterations:
            break
        length *= 8
    if fit is not None:
        rec.T_u = fit.T_u
        rec.status = "ok" if fit.T_u * 3 <= length else "period_exceeds_run"
    return rec


def period_scan(param_list, iterations=None, init="coherent"):
    """Periods for each parameter set plus S = d ln T_u / d(1/hbar) per (K, a)."""
    records = [measure_period(p, iterations, init=init) for p in param_list]
    S = {}
    groups: dict = {}
    for r in records:
        if r.status == "ok":
            groups.setdefault((r.K, r.a), []).append(r)
    for key, rs in groups.items():
        if len({r.hbar for r in rs}) >= 2:
            x = np.array([1.0 / r.hbar for r in rs])
            yv = np.log([r.T_u for r in rs])
            S[key] = float(np.polyfit(x, yv, 1)[0])
    return records, S


def record_dict(rec) -> dict:
    return {f.name: getattr(rec, f.name) for f in fields(rec)}
