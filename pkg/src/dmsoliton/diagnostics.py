"""Numerical verification of the inequalities behind the existence theory.

Each check yields a :class:`VerificationReport` with ``margin = rhs - lhs``;
a check passes iff ``margin >= -tol``. Energy-scale quantities use 1e-8
absolute tolerance, quadrature-limited quantities 1e-6 unless noted.
Inequalities that only hold up to an unspecified constant are checked as
finiteness or ratio stability, never against a made-up constant.
"""
from __future__ import annotations

import contextlib
import csv
import io
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import nonlinearity, propagator
from .averaging import AveragingMeasure
from .grid import Grid, SpectralField, inner, norm
from .nonlinearity import (
    STRICHARTZ_CONSTANT,
    Problem,
    directional_derivative,
    hamiltonian,
    linf_cap,
    n_gradient,
    n_value,
    sixth_power_integral,
)
from .potentials import Potential, kappa_star
from .propagator import GaussianPulse, gaussian_pulse, oracle_error

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class VerificationReport:
    name: str
    inputs: str
    lhs: float
    rhs: float
    tol: float
    margin: float = field(init=False)
    passed: bool = field(init=False)

    def __post_init__(self):
        lhs, rhs = float(self.lhs), float(self.rhs)
        if rhs == math.inf:
            # finiteness check: any finite lhs passes
            m = math.inf if math.isfinite(lhs) else math.nan
        else:
            m = rhs - lhs
        object.__setattr__(self, "margin", m)
        object.__setattr__(self, "passed", bool(m >= -self.tol))

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: lhs={self.lhs:.10g} rhs={self.rhs:.10g} margin={self.margin:.3e} tol={self.tol:.1e} [{self.inputs}]"


def _flag(name, inputs, ok: bool) -> VerificationReport:
    """Boolean check encoded as a report (margin 1 on success, -1 on failure)."""
    return VerificationReport(name, inputs, 0.0, 1.0 if ok else -1.0, 0.0)


@dataclass
class AggregateReport:
    reports: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    @property
    def failures(self) -> list:
        return [r for r in self.reports if not r.passed]

    def text(self) -> str:
        lines = [r.line() for r in self.reports]
        n_fail = len(self.failures)
        lines.append(f"{len(self.reports) - n_fail}/{len(self.reports)} checks passed")
        return "\n".join(lines) + "\n"

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "lhs", "rhs", "margin", "tol", "passed"])
        for r in self.reports:
            w.writerow([r.name, repr(float(r.lhs)), repr(float(r.rhs)), repr(float(r.margin)), repr(float(r.tol)),
                        int(r.passed)])
        return buf.getvalue()


# --- sample fields ----------------------------------------------------------

def localized_field(grid: Grid, rng: np.random.Generator, mass: float = 1.0, width: float | None = None,
                    modes: int = 5) -> SpectralField:
    """Gaussian envelope times a random low-frequency trigonometric polynomial."""
    w = width if width is not None else grid.length / 20.0
    x = grid.x
    c = rng.normal(size=modes) + 1j * rng.normal(size=modes)
    k = rng.uniform(-1.0, 1.0, size=modes) / w * 2.0
    s = np.exp(-(x - rng.uniform(-0.5, 0.5) * w) ** 2 / (2 * (w * rng.uniform(0.5, 1.0)) ** 2))
    s = s * sum(c[j] * np.exp(1j * k[j] * x) for j in range(modes))
    f = SpectralField(grid, s)
    return f * math.sqrt(mass) * (1.0 / norm(f))


# --- suites -----------------------------------------------------------------

def verify_propagator_oracle(n: int = 2048, length: float = 40.0, tol: float = 1e-10) -> list:
    grid = Grid(n, length)
    out = []
    for s0 in (1.0, 2.0):
        worst = max(oracle_error(s0, 1.0, r, grid) for r in (-1.0, -0.5, -0.1, 0.1, 0.5, 1.0))
        out.append(VerificationReport(f"propagator.gaussian_oracle[sigma0={s0:g}]", f"n={n} L={length:g}",
                                      worst, 0.0, tol))
    return out


def verify_strichartz(sample, radius: float = 1.0, nodes: int = 48, tol: float = 1e-6) -> list:
    """int_R ||T_r f||_6^6 dr <= 12^(-1/2) ||f||_2^6 for every field of ``sample``."""
    out = []
    for i, f in enumerate(sample):
        l2 = norm(f)
        if l2 == 0:
            raise ValueError("strichartz check needs nonzero fields")
        v = sixth_power_integral(f, radius, nodes)
        rhs = STRICHARTZ_CONSTANT * l2**6 + v.error
        out.append(VerificationReport(f"strichartz.sixth_power[{i}]", f"mass={l2**2:.6g} err={v.error:.1e}",
                                      v.value, rhs, tol * l2**6))
    return out


def kunze_ratio(f, prob: Problem, s_grid) -> float:
    """max_s ||T_s grad N(f)||_inf / (||f||^(gamma1-1) + ||f||^(gamma2-1))."""
    s = f.samples if isinstance(f, SpectralField) else np.asarray(f)
    l2 = math.sqrt(prob.grid.dx * np.sum(np.abs(s) ** 2))
    if l2 == 0:
        return 0.0
    g = n_gradient(s, prob).samples
    peak = np.abs(propagator.evolve_many(g, prob.grid, s_grid)).max()
    p = prob.potential
    return float(peak / (l2 ** (p.gamma1 - 1) + l2 ** (p.gamma2 - 1)))


def verify_kunze_bound(f, prob: Problem, s_grid=None, scales=None, tol: float = 1e-6) -> list:
    """Finiteness and scale stability of the sup-norm ratio for the gradient of N."""
    if prob.d_av != 0:
        raise ValueError("the sup-norm gradient bound is checked on the zero-dispersion branch only")
    p = prob.potential
    if not 3 <= p.gamma1 <= p.gamma2 < 5:
        raise ValueError("sup-norm gradient bound needs 3 <= gamma1 <= gamma2 < 5")
    if s_grid is None:
        lo, hi = prob.measure.support
        mid, half = 0.5 * (lo + hi), 1.5 * (hi - lo)
        s_grid = np.linspace(mid - half, mid + half, 61)
    if scales is None:
        scales = np.linspace(0.5, 2.0, 7)
    s = f.samples if isinstance(f, SpectralField) else np.asarray(f)
    if not np.any(s):
        return [VerificationReport("kunze.zero_field", "f = 0", 0.0, 0.0, 0.0)]
    ratios = np.array([kunze_ratio(c * s, prob, s_grid) for c in scales])
    out = [VerificationReport("kunze.ratio_finite", f"{len(scales)} scales", float(np.max(ratios)), math.inf, 0.0)]
    spread = float((ratios.max() - ratios.min()) / ratios.max())
    if p.kind == "power":
        out.append(VerificationReport("kunze.ratio_scale_stable", f"gamma={p.gamma:g}", spread, 0.0, tol))
    else:
        out.append(VerificationReport("kunze.ratio_spread", "informational", spread, math.inf, 0.0))
    return out


def verify_potential_suite(p: Potential, samples: int = 10_000, seed: int = 0, tol: float = 1e-9) -> list:
    """A2, the scaling inequality and the quadratic lower bound on random samples.

    Each family is reported by its worst relative sample, i.e. lhs/rhs
    against 1, with the offending inputs recorded.
    """
    rng = np.random.default_rng(seed)
    top = p.table_a[-1] if p.kind == "custom-tabulated" else 1e3
    lo = 1e-3 if p.kind != "custom-tabulated" else max(1e-3, p.table_a[1])
    a = np.exp(rng.uniform(math.log(lo), math.log(top), samples))
    big = np.minimum(a * np.exp(rng.uniform(0.0, math.log(100.0), samples)), top)
    s = rng.uniform(0.0, 1.0, samples)
    s = np.where(s == 0, 0.5, s)
    out = []
    va, dva = p.v(a), p.v_prime(a)
    ks_a = np.array([kappa_star(p, ai) for ai in a])
    kap = dva * a / va
    i = int(np.argmin(kap))
    out.append(VerificationReport(f"potential[{p.kind}].A2", f"kappa >= 2, worst a={a[i]:.6g}", 2.0, float(kap[i]), tol))
    ratio = ks_a * va / (dva * a)
    i = int(np.argmax(ratio))
    out.append(VerificationReport(f"potential[{p.kind}].A2_infimum", f"kappa* V <= V' a, worst a={a[i]:.6g}",
                                  float(ratio[i]), 1.0, tol))

    ks_big = np.array([kappa_star(p, b) for b in big])
    lhs = p.v(s * a)
    rhs = s**ks_big * va
    ratio = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0), np.where(lhs > 0, np.inf, 1.0))
    i = int(np.argmax(ratio))
    out.append(VerificationReport(f"potential[{p.kind}].scaling", f"worst s={s[i]:.6g} a={a[i]:.6g} A={big[i]:.6g}",
                                  float(ratio[i]), 1.0, tol))

    va_star = float(p.v(p.a_star))
    above = a >= p.a_star
    bound = (a[above] / p.a_star) ** 2 * va_star
    ratio = bound / va[above] if np.any(above) else np.array([0.0])
    i = int(np.argmax(ratio))
    witness = f"worst a={a[above][i]:.6g}" if np.any(above) else "no samples above a_star"
    out.append(VerificationReport(f"potential[{p.kind}].quadratic_lower_bound", witness, float(ratio[i]), 1.0, tol))
    return out


def _row_cap_kappa(row, potential: Potential) -> float:
    return kappa_star(potential, row.cap) if row.cap > 0 else potential.kappa_at_zero


def verify_subadditivity(table, potential: Potential, delta: float | None = None, mus=(0.25, 0.5, 0.75),
                         tol: float = 1e-8) -> list:
    """Quantitative and plain sub-additivity plus the mass-scaling bound on a scan table.

    kappa*(C) is taken at the cap C recorded on the row of the total mass.
    """
    rows = sorted(table.rows, key=lambda r: r.lam)
    lams = [r.lam for r in rows]
    if delta is None:
        delta = min(lams) / 2.0
    by_lam = {round(r.lam, 12): r for r in rows}

    def find(lam):
        return by_lam.get(round(lam, 12))

    out = []
    for big in rows:
        if big.energy > 0:
            continue
        ks = _row_cap_kappa(big, potential)
        if not delta < big.lam / 2:
            continue
        factor = 1.0 - (2.0 ** (ks / 2) - 2.0) * (delta / big.lam) ** (ks / 2)
        for i, r1 in enumerate(rows):
            for r2 in rows[i:]:
                if r1.lam < delta or r1.lam + r2.lam > big.lam + 1e-12:
                    continue
                out.append(VerificationReport(
                    f"subadditivity.quantitative[{r1.lam:g}+{r2.lam:g}<={big.lam:g}]",
                    f"delta={delta:g} kappa*={ks:.6g}", factor * big.energy, r1.energy + r2.energy, tol))
    for i, r1 in enumerate(rows):
        for r2 in rows[i:]:
            tot = find(r1.lam + r2.lam)
            if tot is None:
                continue
            out.append(VerificationReport(f"subadditivity.plain[{r1.lam:g}+{r2.lam:g}]", "non-strict",
                                          tot.energy, r1.energy + r2.energy, 1e-6))
            if tot.energy < -1e-4:
                # strict form: a positive margin is required
                out.append(VerificationReport(f"subadditivity.strict[{r1.lam:g}+{r2.lam:g}]", "tol<0 demands margin>0",
                                              tot.energy, r1.energy + r2.energy, -1e-12))
    for big in rows:
        ks = _row_cap_kappa(big, potential)
        for mu in mus:
            small = find(mu * big.lam)
            if small is None:
                continue
            out.append(VerificationReport(f"subadditivity.mass_scaling[mu={mu:g},lambda={big.lam:g}]",
                                          f"kappa*={ks:.6g}", mu ** (ks / 2) * big.energy, small.energy, tol))
    return out


def _gaussian_grid(sigma0: float, radius: float, n: int = 1024) -> Grid:
    spread = math.sqrt((sigma0**2 + 16.0 * radius**2) / sigma0)
    return Grid(n, 24.0 * max(math.sqrt(sigma0), spread))


def verify_gaussian_threshold_bounds(prob: Problem, sigma0_list, tol: float = 1e-8) -> list:
    """Amplitude formula, amplitude sandwich and a negative-energy witness for evolved Gaussians."""
    radius = prob.measure.radius
    nodes, _ = prob.quadrature()
    out = []
    energies = []
    for s0 in sigma0_list:
        g = _gaussian_grid(s0, radius)
        p = Problem(prob.lam, prob.d_av, prob.potential, prob.measure, g, prob.nodes)
        f = gaussian_pulse(s0, prob.lam, g)
        u = np.abs(p.evolved(f))
        a0 = GaussianPulse(s0, prob.lam).amplitude
        expect = a0 * np.max((s0**2 / (s0**2 + 16.0 * nodes**2)) ** 0.25)
        out.append(VerificationReport(f"gaussian.peak_formula[sigma0={s0:g}]", f"A0={a0:.6g}",
                                      abs(u.max() - expect), 0.0, tol * a0))
        if s0 > 4 * radius:
            # On |x| <= sqrt(sigma0) the amplitude and exponential factors give
            # A0 2^(-1/4) e^(-1); A0/2 itself holds on |x| <= sqrt(3 ln2 sigma0 / 4).
            inside = np.abs(g.x) <= math.sqrt(s0)
            core = np.abs(g.x) <= math.sqrt(0.75 * math.log(2.0) * s0)
            lo = float(u[:, inside].min())
            hi = float(u[:, inside].max())
            lo_core = float(u[:, core].min())
            floor = a0 * 2.0**-0.25 * math.exp(-1.0)
            out.append(VerificationReport(f"gaussian.sandwich_lower[sigma0={s0:g}]", "A0 2^(-1/4)/e <= |T_r g|, |x|<=sqrt(sigma0)",
                                          floor, lo, tol * a0))
            out.append(VerificationReport(f"gaussian.sandwich_half[sigma0={s0:g}]", "A0/2 <= |T_r g|, |x|<=sqrt(0.75 ln2 sigma0)",
                                          a0 / 2, lo_core, tol * a0))
            out.append(VerificationReport(f"gaussian.sandwich_upper[sigma0={s0:g}]", "|T_r g| <= A0", hi, a0, tol * a0))
        energies.append((s0, hamiltonian(f, p)))
    if prob.assumptions().threshold_is_zero and energies:
        s0, e = min(energies, key=lambda t: t[1])
        out.append(VerificationReport("gaussian.negative_energy_witness", f"sigma0={s0:g} lambda={prob.lam:g}",
                                      e, 0.0, 0.0))
    return out


# --- nonlinearity invariants --------------------------------------------------

def _probe_width(prob: Problem) -> float:
    return min(prob.grid.length / 20.0, 60.0 * prob.grid.dx) if prob.d_av else prob.grid.length / 20.0


def verify_nonlinearity(prob: Problem, pairs: int = 3, seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    grid = prob.grid
    out = []
    # independent oracle for N on a Gaussian: nested adaptive quadrature of the closed form
    s0 = (grid.length / 20.0) ** 2
    gp = GaussianPulse(s0, prob.lam)
    f = gaussian_pulse(s0, prob.lam, grid)
    b, vals = prob.measure.breakpoints, prob.measure.values

    def inner_x(r):
        return 2.0 * integrate.quad(lambda x: float(prob.potential.v(gp.evolved_abs(r, x))), 0, np.inf,
                                    epsabs=0, epsrel=1e-12, limit=200)[0]

    exact = 0.0
    for lo, hi, val in zip(b[:-1], b[1:], vals):
        if val == 0:
            continue
        exact += val * integrate.quad(inner_x, lo, hi, epsabs=0, epsrel=1e-12, limit=200)[0]
    got = n_value(f, prob)
    out.append(VerificationReport("nonlinearity.gaussian_oracle", f"sigma0={s0:.6g}", abs(got - exact) / exact, 0.0, 1e-8))

    width = _probe_width(prob)
    worst_fd = worst_riesz = worst_a2 = 0.0
    for _ in range(pairs):
        f = localized_field(grid, rng, prob.lam, width)
        h = localized_field(grid, rng, 1.0, width)
        d = [(n_value(f + t * h, prob) - n_value(f - t * h, prob)) / (2 * t) for t in (1e-3, 1e-4)]
        rich = (100 * d[1] - d[0]) / 99
        g = n_gradient(f, prob)
        gh = inner(g, h)
        worst_fd = max(worst_fd, abs(rich - gh) / max(abs(gh), 1e-300))
        dd = directional_derivative(f, h, prob)
        worst_riesz = max(worst_riesz, abs(dd - gh) / (1 + norm(h)))
        nf = n_value(f, prob)
        ks = kappa_star(prob.potential, linf_cap(f, prob))
        worst_a2 = max(worst_a2, (ks * nf - inner(g, f)) / nf)
    out.append(VerificationReport("nonlinearity.gradient_finite_difference", f"{pairs} pairs", worst_fd, 0.0, 1e-6))
    out.append(VerificationReport("nonlinearity.riesz_consistency", f"{pairs} pairs", worst_riesz, 0.0, 1e-12))
    out.append(VerificationReport("nonlinearity.integrated_A2", "D_f N - kappa*(C) N, relative", worst_a2, 0.0, 1e-10))

    f = localized_field(grid, rng, prob.lam, width)
    s = f.samples
    base_n, base_h = n_value(s, prob), hamiltonian(s, prob)
    moved = [np.roll(s, 7), s * np.exp(0.7j)]
    dev = max(max(abs(n_value(m, prob) - base_n), abs(hamiltonian(m, prob) - base_h)) for m in moved)
    out.append(VerificationReport("nonlinearity.shift_phase_invariance", "roll 7 cells, phase 0.7", dev, 0.0, 1e-10))
    if prob.d_av == 0:
        boost = np.exp(1j * 3 * (2 * np.pi / grid.length) * grid.x)
        dev = abs(n_value(s * boost, prob) - base_n)
        out.append(VerificationReport("nonlinearity.boost_invariance", "xi = 3 * 2pi/L", dev, 0.0, 1e-10))
    return out


def verify_quadrature(prob: Problem, tol: float = 1e-12) -> list:
    m: AveragingMeasure = prob.measure
    r, w = prob.quadrature()
    out = []
    for k in range(3):
        exact = m.moment(k)
        out.append(VerificationReport(f"averaging.moment[{k}]", f"nodes/piece={prob.nodes}",
                                      abs(float(w @ r**k) - exact), 0.0, tol * max(1.0, abs(exact))))
    return out


def verify_assumptions(prob: Problem) -> list:
    rep = prob.assumptions()
    return [_flag(f"assumptions.{name}", rep.branch, ok) for name, ok in rep.checks.items()]


def verify_solution(prob: Problem, cfg) -> list:
    from .solver import solve

    res = solve(prob, cfg)
    mass = norm(res.field, "l2sq")
    out = [
        _flag("solver.converged", f"method={res.method} iterations={res.iterations}", res.converged),
        VerificationReport("solver.residual", "tangential residual vs tol", res.residual, cfg.tol, 0.0),
        VerificationReport("solver.mass", f"lambda={prob.lam:g}", abs(mass - prob.lam), 0.0, 1e-10),
    ]
    if res.energy < 0:
        out.append(VerificationReport("solver.multiplier_bound", "omega < 2E/lambda", res.multiplier,
                                      2 * res.energy / prob.lam, 0.0))
    if prob.potential.kind == "power" and prob.d_av == 0:
        target = -prob.potential.gamma * n_value(res.field, prob) / prob.lam
        out.append(VerificationReport("solver.euler_identity", "omega = -gamma N / lambda",
                                      abs(res.multiplier - target), 0.0, 1e-8))
    return out


def verify_scan(prob: Problem, cfg, fractions=(0.25, 0.5, 0.75, 1.0)) -> list:
    from .solver import energy_scan

    table = energy_scan(prob, [prob.lam * q for q in fractions], cfg)
    out = [_flag("scan.monotone", f"violations={table.violations}", table.monotone)]
    out += verify_subadditivity(table, prob.potential)
    return out


def run_all(prob, cfg=None, include_solver: bool = True) -> AggregateReport:
    """Run every suite for one problem or a list of problems."""
    from .solver import SolverConfig

    probs = prob if isinstance(prob, (list, tuple)) else [prob]
    if not probs:
        warnings.warn("run_all called with no problems; vacuous pass", stacklevel=2)
        return AggregateReport([])
    cfg = cfg or SolverConfig()
    reports = verify_propagator_oracle()
    rng = np.random.default_rng(12345)
    sgrid = Grid(2048, 80.0)
    two_bumps = SpectralField(sgrid, np.exp(-(sgrid.x - 8) ** 2) + np.exp(-(sgrid.x + 8) ** 2))
    sample = [gaussian_pulse(1.0, 1.0, sgrid), two_bumps * (1.0 / norm(two_bumps))]
    sample += [localized_field(sgrid, rng, 1.0, 2.0) for _ in range(4)]
    reports += verify_strichartz(sample)
    for p in probs:
        reports += verify_assumptions(p)
        reports += verify_quadrature(p)
        reports += verify_nonlinearity(p)
        reports += verify_potential_suite(p.potential, samples=2000)
        if p.d_av == 0 and 3 <= p.potential.gamma1 <= p.potential.gamma2 < 5:
            width = p.grid.length / 20.0
            g = gaussian_pulse(width**2, p.lam, p.grid)
            reports += verify_kunze_bound(g, p)
        reports += verify_gaussian_threshold_bounds(p, [5.0, 10.0, 100.0, 1000.0, 10000.0])
        if include_solver:
            reports += verify_solution(p, cfg)
            reports += verify_scan(p, cfg)
    return AggregateReport(reports)


FAULTS = ("propagator_sign", "gradient_sign", "quadrature_weights")


@contextlib.contextmanager
def inject_fault(kind: str):
    """Temporarily corrupt one numerical ingredient (for suite sensitivity tests)."""
    if kind not in FAULTS:
        raise ValueError(f"unknown fault {kind!r}")
    saved = (propagator.PHASE_SIGN, nonlinearity.GRADIENT_SIGN, nonlinearity.WEIGHT_HOOK)
    try:
        if kind == "propagator_sign":
            propagator.PHASE_SIGN = -saved[0]
        elif kind == "gradient_sign":
            nonlinearity.GRADIENT_SIGN = -saved[1]
        else:
            nonlinearity.WEIGHT_HOOK = _corrupt_weights
        yield
    finally:
        propagator.PHASE_SIGN, nonlinearity.GRADIENT_SIGN, nonlinearity.WEIGHT_HOOK = saved


def _corrupt_weights(w):
    return w * (1.0 + 0.1 * np.linspace(-1.0, 1.0, w.size))
