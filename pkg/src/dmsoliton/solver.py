"""Minimization of H on the mass sphere ||f||_2^2 = lambda.

Three methods share one loop skeleton and stop on the tangential residual
|| grad H - omega f ||_2 rather than on energy stagnation.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import SpectralField, h1_semi_sq, read_field_csv
from .nonlinearity import (
    Problem,
    h_gradient,
    hamiltonian,
    kinetic_gradient,
    linf_cap,
    multiplier_estimate,
    n_value,
)
from .potentials import kappa_star

log = logging.getLogger(__name__)

METHODS = ("projected_gradient", "ekeland_fixed_point", "spectral_renormalization")
INITS = ("gaussian", "random_bandlimited", "file")


class DegenerateGradient(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    method: str = "projected_gradient"
    tol: float = 1e-9
    max_iter: int = 20000
    step: float = 1.0
    shrink: float = 0.5
    armijo: float = 1e-4
    grow: float = 1.5
    theta: float = 0.5
    seed: int = 0
    restarts: int = 1
    init: str = "gaussian"
    sigma0: float = 1.0
    init_file: str | None = None
    collapse_window: int = 200

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown solver method {self.method!r}")
        if self.init not in INITS:
            raise ValueError(f"unknown init {self.init!r}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not 0 < self.shrink < 1 or not 0 < self.armijo < 1:
            raise ValueError("shrink and armijo constants must lie in (0, 1)")
        if not 0 < self.theta <= 1:
            raise ValueError("theta must lie in (0, 1]")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if not self.sigma0 > 0:
            raise ValueError("sigma0 must be positive")
        if self.init == "file" and not self.init_file:
            raise ValueError("init=file needs init_file")


@dataclass
class SolveResult:
    field: SpectralField
    energy: float
    multiplier: float
    residual: float
    linf_cap: float
    kappa_star_at_cap: float
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)
    method: str = ""
    collapsed: bool = False


def _mass(s, dx):
    return float(dx * np.sum(np.abs(s) ** 2))


def _normalize(s, prob: Problem):
    m = _mass(s, prob.grid.dx)
    if m == 0:
        raise DegenerateGradient("iterate collapsed to the zero field")
    return s * math.sqrt(prob.lam / m)


def ekeland_normalized_map(f, prob: Problem) -> SpectralField:
    """v = -sqrt(lambda) grad H(f) / ||grad H(f)||_2."""
    g = h_gradient(f, prob).samples
    gn = math.sqrt(_mass(g, prob.grid.dx))
    if gn < 1e-14:
        raise DegenerateGradient("gradient of H vanishes")
    return SpectralField(prob.grid, -math.sqrt(prob.lam) * g / gn)


def coercivity_bound(prob: Problem) -> float:
    """Largest ||f'||_2 compatible with H(f) < 0 on the mass sphere, or inf.

    Uses ||T_r f||_inf^2 <= sqrt(lambda) ||f'||_2 and V(a) <= a^2 V(C)/C^2 for
    a <= C, so H(f) < 0 forces (d/2) t^2 < lambda V(C)/C^2 with C = (sqrt(lambda) t)^(1/2).
    """
    if prob.d_av == 0:
        return math.inf
    p = prob.potential

    def excess(t):
        c = math.sqrt(math.sqrt(prob.lam) * t)
        return 0.5 * prob.d_av * t * t - prob.lam * float(p.v(c)) / (c * c)

    if excess(1e12) <= 0:
        # the nonlinear term outgrows the kinetic one: no finite bound
        return math.inf
    hi = 1.0
    while excess(hi) <= 0:
        hi *= 2.0
    lo = hi
    while excess(lo) > 0:
        lo *= 0.5
        if lo < 1e-12:
            return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            hi = mid
        else:
            lo = mid
    return hi


def initial_field(prob: Problem, cfg: SolverConfig, restart: int = 0) -> np.ndarray:
    x = prob.grid.x
    if cfg.init == "file":
        f = read_field_csv(cfg.init_file)
        if f.grid != prob.grid:
            raise ValueError("initial field grid does not match the problem grid")
        s = np.array(f.samples)
    else:
        s = np.exp(-(x**2) / cfg.sigma0).astype(complex)
    if cfg.init == "random_bandlimited" or restart > 0:
        rng = np.random.default_rng([cfg.seed, restart])
        k = 2.0 * np.pi / math.sqrt(cfg.sigma0)
        c = rng.normal(size=(2, 4))
        pert = sum(c[0, j] * np.cos(j * k * x / 4) + c[1, j] * np.sin(j * k * x / 4) for j in range(4))
        s = s * (1.0 + 0.2 * pert)
    return _normalize(s, prob)


class _Step:
    """One method-specific update; returns (new samples, accepted)."""

    def __init__(self, prob: Problem, cfg: SolverConfig):
        self.prob = prob
        self.cfg = cfg
        self.eta = cfg.step
        self.t_max = coercivity_bound(prob)
        self.prev_res = math.inf

    def _kinetic_ok(self, s, energy):
        if energy >= 0 or math.isinf(self.t_max):
            return True
        return math.sqrt(h1_semi_sq(s, self.prob.grid)) <= self.t_max * (1 + 1e-6)

    def projected_gradient(self, s, energy, grad, omega):
        prob = self.prob
        dx = prob.grid.dx
        if prob.d_av > 0:
            # Riemannian gradient in the metric of M = a + d_av xi^2, a ~ |omega|.
            m = max(-omega, 1e-3) + prob.d_av * prob.grid.xi2
            pg = np.fft.ifft(np.fft.fft(grad) / m)
            pf = np.fft.ifft(np.fft.fft(s) / m)
            d = pg - (np.real(np.vdot(s, pg)) / np.real(np.vdot(s, pf))) * pf
            scale = 1.0
        else:
            d = grad - omega * s
            scale = 1.0 / max(-omega, 1e-3)
        slope = dx * np.real(np.vdot(grad, d))
        # Below this predicted decrease energy differences are roundoff; accept
        # the step unless it raises H by more than the trace slack.
        noise = 1e-13 * (abs(energy) + 2.0 * n_value(s, prob)) + 1e-300
        res = math.sqrt(_mass(grad - omega * s, dx))
        noisy = self.cfg.armijo * scale * slope <= noise
        if noisy and res > self.prev_res:
            self.eta *= self.cfg.shrink
        self.prev_res = res
        eta = self.eta
        for _ in range(60):
            trial = _normalize(s - eta * scale * d, prob)
            e_new = hamiltonian(trial, prob)
            drop = self.cfg.armijo * eta * scale * slope
            ok = e_new <= energy - drop if drop > noise else e_new <= energy + noise
            if ok and self._kinetic_ok(trial, e_new):
                self.eta = eta if noisy else min(eta * self.cfg.grow, 1e3)
                return trial, e_new
            eta *= self.cfg.shrink
        return s, energy

    def ekeland_fixed_point(self, s, energy, grad, omega):
        gn = math.sqrt(_mass(grad, self.prob.grid.dx))
        if gn < 1e-14:
            raise DegenerateGradient("gradient of H vanishes")
        v = -math.sqrt(self.prob.lam) * grad / gn
        th = self.cfg.theta
        new = _normalize((1 - th) * s + th * v, self.prob)
        return new, hamiltonian(new, self.prob)

    def spectral_renormalization(self, s, energy, grad, omega):
        prob = self.prob
        # (d_av xi^2 + c) f = grad N + (omega + c) f with a shift c > 0 that keeps
        # the zero mode bounded when omega is near zero or positive
        dn = kinetic_gradient(s, prob) - grad
        c = max(abs(omega), 1e-3)
        new = np.fft.ifft(np.fft.fft(dn + (omega + c) * s) / (prob.d_av * prob.grid.xi2 + c))
        new = _normalize(new, prob)
        return new, hamiltonian(new, prob)


def _check_method(prob: Problem, method: str):
    if method == "spectral_renormalization" and prob.d_av <= 0:
        raise ValueError("spectral_renormalization needs d_av > 0")
    if method == "ekeland_fixed_point" and prob.d_av != 0:
        raise ValueError("ekeland_fixed_point needs d_av = 0")


def is_flat(s, prob: Problem) -> bool:
    """Iterate is within 1% of the constant state of the box, the discrete image of vanishing."""
    return bool(np.abs(s).max() <= 1.01 * math.sqrt(prob.lam / prob.grid.length))


def _finish(prob, s, energy, omega, res, it, converged, trace, method, collapsed):
    collapsed = collapsed or is_flat(s, prob)
    c = linf_cap(s, prob)
    ks = kappa_star(prob.potential, c) if c > 0 else float("nan")
    return SolveResult(SpectralField(prob.grid, s), energy, omega, res, c, ks, it, converged,
                       trace, method, collapsed)


def _solve_from(prob: Problem, cfg: SolverConfig, s: np.ndarray) -> SolveResult:
    step = _Step(prob, cfg)
    update = getattr(step, cfg.method)
    dx = prob.grid.dx
    energy = hamiltonian(s, prob)
    trace = []
    falling = 0
    last_peak = np.abs(s).max()
    it = 0
    while True:
        grad = h_gradient(s, prob).samples
        omega = multiplier_estimate(s, prob, grad)
        res = math.sqrt(_mass(grad - omega * s, dx))
        trace.append((energy, res))
        if res <= cfg.tol:
            return _finish(prob, s, energy, omega, res, it, True, trace, cfg.method, False)
        if it >= cfg.max_iter:
            return _finish(prob, s, energy, omega, res, it, False, trace, cfg.method, False)
        new, e_new = update(s, energy, grad, omega)
        if new is s:
            log.info("line search stalled at iteration %d, residual %.3e", it, res)
            return _finish(prob, s, energy, omega, res, it, False, trace, cfg.method, False)
        s, energy = new, e_new
        it += 1
        peak = np.abs(s).max()
        falling = falling + 1 if (peak < last_peak and energy > -1e-8) else 0
        last_peak = peak
        if falling >= cfg.collapse_window:
            grad = h_gradient(s, prob).samples
            omega = multiplier_estimate(s, prob, grad)
            res = math.sqrt(_mass(grad - omega * s, dx))
            trace.append((energy, res))
            log.info("collapse detected after %d iterations, E = %.3e", it, energy)
            return _finish(prob, s, energy, omega, res, it, False, trace, cfg.method, True)


def _better(a: SolveResult, b: SolveResult) -> bool:
    if abs(a.energy - b.energy) < 1e-10:
        return a.residual < b.residual
    return a.energy < b.energy


def solve(prob: Problem, cfg: SolverConfig | None = None, init: SpectralField | np.ndarray | None = None) -> SolveResult:
    cfg = cfg or SolverConfig()
    _check_method(prob, cfg.method)
    best = None
    for k in range(cfg.restarts):
        if init is not None and k == 0:
            s0 = _normalize(np.array(init.samples if isinstance(init, SpectralField) else init, dtype=complex), prob)
        else:
            s0 = initial_field(prob, cfg, k)
        r = _solve_from(prob, cfg, s0)
        if best is None or _better(r, best):
            best = r
    return best


@dataclass(frozen=True)
class ScanRow:
    lam: float
    energy: float
    multiplier: float
    cap: float
    kappa_star: float
    residual: float
    converged: bool
    collapsed: bool = False


@dataclass
class ScanTable:
    rows: list
    monotone: bool
    violations: list
    results: list = field(default_factory=list, repr=False)

    def energy(self, lam: float) -> float:
        for row in self.rows:
            if abs(row.lam - lam) < 1e-12:
                return row.energy
        raise KeyError(lam)


def energy_scan(prob: Problem, lambdas, cfg: SolverConfig | None = None, warm: bool = True) -> ScanTable:
    """Solve along ascending masses, warm-starting each from the previous minimizer.

    Rows where the solver detected collapse record the energy upper bound
    min(H, 0), since the infimum is not attained there.
    """
    cfg = cfg or SolverConfig()
    lambdas = [float(v) for v in lambdas]
    if any(b <= a for a, b in zip(lambdas, lambdas[1:])):
        raise ValueError("lambdas must be strictly ascending")
    rows, results = [], []
    prev = None
    for lam in lambdas:
        p = prob.with_lambda(lam)
        init = None
        if warm and prev is not None and not prev.collapsed:
            init = prev.field.samples
        res = solve(p, cfg, init)
        if init is not None and cfg.restarts == 1:
            cold = solve(p, cfg)
            if _better(cold, res):
                res = cold
        e = min(res.energy, 0.0) if res.collapsed else res.energy
        rows.append(ScanRow(lam, e, res.multiplier, res.linf_cap, res.kappa_star_at_cap, res.residual,
                            res.converged, res.collapsed))
        results.append(res)
        prev = res
    violations = [(a.lam, b.lam) for a, b in zip(rows, rows[1:]) if b.energy > a.energy + 1e-8]
    return ScanTable(rows, not violations, violations, results)


def _energy_at(prob: Problem, lam: float, cfg: SolverConfig) -> float:
    r = solve(prob.with_lambda(lam), cfg)
    return min(r.energy, 0.0) if r.collapsed else r.energy


def threshold_estimate(prob: Problem, bracket, tol_lambda: float = 0.05, cfg: SolverConfig | None = None,
                       eps0: float = 1e-6) -> float:
    """Bisection on the indicator E_lambda < -eps0.

    Returns 0 when the energy at the lower end of the bracket is already below
    -eps0 (the threshold lies below every tested mass).
    """
    cfg = cfg or SolverConfig()
    lo, hi = float(bracket[0]), float(bracket[1])
    if not 0 < lo < hi:
        raise ValueError(f"invalid bracket [{lo}, {hi}]")
    if not tol_lambda > 0:
        raise ValueError("tol_lambda must be positive")
    if _energy_at(prob, lo, cfg) < -eps0:
        return 0.0
    if not _energy_at(prob, hi, cfg) < -eps0:
        raise ValueError(f"energy at lambda = {hi} is not below -{eps0}; bracket does not contain the threshold")
    while hi - lo > tol_lambda:
        mid = 0.5 * (lo + hi)
        if _energy_at(prob, mid, cfg) < -eps0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ProfileRow:
    t: float
    value: float


@dataclass
class ScalingProfile:
    rows: list
    c: float
    passed: bool
    worst_margin: float


def r_c_profile(f: SpectralField, prob: Problem, t_values) -> ScalingProfile:
    """A(t) = t^-2 N(t f) for unit-mass f, with the pairwise scaling check.

    For t >= t0 the check is A(t) >= (t/t0)^(kappa*(t sqrt(C)) - 2) A(t0) with
    C = ||f'||_2; margins are relative to A(t).
    """
    s = f.samples
    mass = _mass(s, prob.grid.dx)
    if abs(mass - 1.0) > 1e-10:
        raise ValueError("r_c_profile needs a unit-mass field")
    c = math.sqrt(h1_semi_sq(s, prob.grid))
    ts = [float(t) for t in t_values]
    rows = [ProfileRow(t, n_value(t * s, prob) / t**2) for t in ts]
    worst = math.inf
    for a in rows:
        for b in rows:
            if b.t < a.t:
                continue
            k = kappa_star(prob.potential, b.t * math.sqrt(c)) if c > 0 else prob.potential.kappa_at_zero
            rhs = (b.t / a.t) ** (k - 2) * a.value
            margin = (b.value - rhs) / max(abs(b.value), 1e-300)
            worst = min(worst, margin)
    return ScalingProfile(rows, c, bool(worst >= -1e-10), worst)


def scaled(result: SolveResult, prob: Problem) -> np.ndarray:
    """Samples of result.field rescaled to the mass of ``prob``."""
    return _normalize(np.array(result.field.samples), prob)


def with_method(cfg: SolverConfig, method: str) -> SolverConfig:
    return replace(cfg, method=method)
