"""The averaged nonlinearity N(f) = int int V(|T_r f|) dx psi(r) dr and the energy H.

Every r-integral reuses one forward FFT of f and a table of per-node phase
multipliers; reductions over nodes are fixed-order dot products so repeated
runs give identical bits.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import averaging, propagator
from .averaging import AveragingMeasure
from .grid import Grid, SpectralField, h1_semi_sq, inner
from .potentials import Potential, validate_assumptions

# Sign applied to the back-propagated nonlinearity in n_gradient.
GRADIENT_SIGN = 1.0
# Optional hook ``weights -> weights`` applied to every quadrature rule.
WEIGHT_HOOK = None

STRICHARTZ_CONSTANT = 12.0**-0.5
_ZERO = 1e-300


@dataclass(frozen=True)
class Problem:
    lam: float
    d_av: float
    potential: Potential
    measure: AveragingMeasure
    grid: Grid
    nodes: int = 32
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"mass must be positive, got {self.lam!r}")
        if not self.d_av >= 0:
            raise ValueError(f"average dispersion must be >= 0, got {self.d_av!r}")
        if self.nodes < 2:
            raise ValueError("need at least two quadrature nodes per piece")

    def with_lambda(self, lam: float) -> "Problem":
        return Problem(lam, self.d_av, self.potential, self.measure, self.grid, self.nodes)

    def assumptions(self, delta: float = 0.0):
        return validate_assumptions(self.potential, self.d_av, delta)

    def quadrature(self) -> tuple[np.ndarray, np.ndarray]:
        key = ("quad", WEIGHT_HOOK)
        if key not in self._cache:
            r, w = averaging.quadrature(self.measure, self.nodes)
            if WEIGHT_HOOK is not None:
                w = WEIGHT_HOOK(w)
            self._cache[key] = (r, w)
        return self._cache[key]

    def phases(self) -> np.ndarray:
        """Multipliers of T_r at every node, shape (m, n)."""
        key = ("phase", propagator.PHASE_SIGN, WEIGHT_HOOK)
        if key not in self._cache:
            self._cache[key] = propagator.phase_multipliers(self.grid, self.quadrature()[0])
        return self._cache[key]

    def evolved(self, f) -> np.ndarray:
        s = _samples(f)
        return np.fft.ifft(self.phases() * np.fft.fft(s), axis=-1)


def _samples(f):
    return f.samples if isinstance(f, SpectralField) else np.asarray(f, dtype=complex)


def _field(prob: Problem, s) -> SpectralField:
    return SpectralField(prob.grid, s)


def n_value(f, prob: Problem) -> float:
    u = prob.evolved(f)
    _, w = prob.quadrature()
    per_node = np.sum(prob.potential.v(np.abs(u)), axis=-1)
    return float(prob.grid.dx * (w @ per_node))


def _n_gradient_samples(s: np.ndarray, prob: Problem) -> np.ndarray:
    u = prob.evolved(s)
    _, w = prob.quadrature()
    a = np.abs(u)
    g = np.where(a > _ZERO, prob.potential.v_prime_over_a(a), 0.0) * u
    gh = w @ (np.conj(prob.phases()) * np.fft.fft(g, axis=-1))
    return GRADIENT_SIGN * np.fft.ifft(gh)


def n_gradient(f, prob: Problem) -> SpectralField:
    """Riesz representative of D N(f) for the real inner product Re<., .>."""
    return _field(prob, _n_gradient_samples(_samples(f), prob))


def directional_derivative(f, h, prob: Problem) -> float:
    """D_h N(f), computed node by node without forming the gradient."""
    u = prob.evolved(f)
    uh = prob.evolved(h)
    _, w = prob.quadrature()
    a = np.abs(u)
    g = np.where(a > _ZERO, prob.potential.v_prime_over_a(a), 0.0) * u
    per_node = np.sum(np.real(np.conj(g) * uh), axis=-1)
    return float(prob.grid.dx * (w @ per_node))


def linf_cap(f, prob: Problem) -> float:
    """C = max over quadrature nodes of ||T_r f||_inf."""
    return float(np.abs(prob.evolved(f)).max())


def hamiltonian(f, prob: Problem) -> float:
    s = _samples(f)
    kinetic = 0.5 * prob.d_av * h1_semi_sq(s, prob.grid) if prob.d_av else 0.0
    return kinetic - n_value(s, prob)


def kinetic_gradient(s: np.ndarray, prob: Problem) -> np.ndarray:
    if not prob.d_av:
        return np.zeros_like(s, dtype=complex)
    return prob.d_av * np.fft.ifft(prob.grid.xi2 * np.fft.fft(s))


def h_gradient(f, prob: Problem) -> SpectralField:
    s = _samples(f)
    return _field(prob, kinetic_gradient(s, prob) - _n_gradient_samples(s, prob))


def _nonzero(s: np.ndarray, dx: float) -> float:
    m = dx * np.sum(np.abs(s) ** 2)
    if m == 0:
        raise ValueError("operation needs a nonzero field")
    return float(m)


def multiplier_estimate(f, prob: Problem, grad=None) -> float:
    s = _samples(f)
    mass = _nonzero(s, prob.grid.dx)
    g = _samples(grad) if grad is not None else _samples(h_gradient(s, prob))
    return inner(s, g, prob.grid.dx) / mass


def tangential_residual(f, prob: Problem, grad=None) -> float:
    """|| grad H - <grad H, f/|f|> f/|f| ||_2."""
    s = _samples(f)
    _nonzero(s, prob.grid.dx)
    g = _samples(grad) if grad is not None else _samples(h_gradient(s, prob))
    om = multiplier_estimate(s, prob, g)
    t = g - om * s
    return float(np.sqrt(prob.grid.dx * np.sum(np.abs(t) ** 2)))


@dataclass(frozen=True)
class StrichartzValue:
    value: float
    error: float
    window: float


def _sixth_power_window(fh: np.ndarray, grid: Grid, radius: float, nodes: int) -> float:
    t, w = np.polynomial.legendre.leggauss(nodes)
    r = np.concatenate([0.5 * radius * (t - 1.0), 0.5 * radius * (t + 1.0)])
    wr = np.concatenate([w, w]) * 0.5 * radius
    u = np.fft.ifft(propagator.phase_multipliers(grid, r) * fh, axis=-1)
    return float(wr @ (grid.dx * np.sum(np.abs(u) ** 6, axis=-1)))


def _sixth_power_tail(s: np.ndarray, grid: Grid, radius: float, nodes: int) -> float:
    # |r| > R maps to |1/r| < 1/R; there ||T_r f||_6^6 dr becomes K(1/r) d(1/r) / (32 pi^3)
    # with K(s) the sixth power of the (non-unitary) transform of exp(i s y^2 / 4) f.
    t, w = np.polynomial.legendre.leggauss(nodes)
    h = 0.5 / radius
    sv = np.concatenate([h * (t - 1.0), h * (t + 1.0)])
    ws = np.concatenate([w, w]) * h
    chirp = np.exp(0.25j * np.multiply.outer(sv, grid.x**2))
    spec = grid.dx * np.fft.fft(chirp * s, axis=-1)
    k = (2.0 * np.pi / grid.length) * np.sum(np.abs(spec) ** 6, axis=-1)
    return float(ws @ k) / (32.0 * np.pi**3)


def strichartz_functional(f: SpectralField, q: float, mode: str = "lebesgue_line", prob: Problem | None = None,
                          radius: float = 1.0, nodes: int = 48) -> float:
    """Mixed space-time norm of T_r f.

    ``weighted_psi`` returns (int ||T_r f||_q^q psi dr)^(1/q) over the quadrature
    of ``prob``. ``lebesgue_line`` returns the q-th power form
    int_R int |T_r f|^q dx dr and is available for q = 6 only.
    """
    if not 2 <= q <= 6:
        raise ValueError(f"exponent q must lie in [2, 6], got {q!r}")
    if mode == "weighted_psi":
        if prob is None:
            raise ValueError("weighted_psi mode needs a problem for its measure")
        u = prob.evolved(f)
        _, w = prob.quadrature()
        return float((w @ (prob.grid.dx * np.sum(np.abs(u) ** q, axis=-1))) ** (1.0 / q))
    if mode == "lebesgue_line":
        return sixth_power_integral(f, radius, nodes).value if q == 6 else _reject_q(q)
    raise ValueError(f"unknown mode {mode!r}")


def _reject_q(q):
    raise ValueError(f"lebesgue_line mode supports only q = 6, got {q!r}")


def sixth_power_integral(f: SpectralField, radius: float = 1.0, nodes: int = 48) -> StrichartzValue:
    """int_R ||T_r f||_6^6 dr with the error estimated from a half-size rule."""
    s = f.samples
    fh = np.fft.fft(s)
    full = _sixth_power_window(fh, f.grid, radius, nodes) + _sixth_power_tail(s, f.grid, radius, nodes)
    half = nodes // 2
    coarse = _sixth_power_window(fh, f.grid, radius, half) + _sixth_power_tail(s, f.grid, radius, half)
    return StrichartzValue(full, abs(full - coarse), radius)
