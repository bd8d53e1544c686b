"""Free Schrodinger evolution T_r = exp(i r d^2/dx^2) and Gaussian oracles."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, SpectralField, norm

# T_r acts in frequency space as exp(PHASE_SIGN * i r xi^2).
PHASE_SIGN = -1.0


def phase_multipliers(grid: Grid, r) -> np.ndarray:
    """Fourier multipliers of T_r, shape ``(len(r), n)`` for array ``r``."""
    r = np.asarray(r, dtype=float)
    return np.exp(PHASE_SIGN * 1j * np.multiply.outer(r, grid.xi**2))


def evolve(f: SpectralField, r: float) -> SpectralField:
    fh = np.fft.fft(f.samples)
    return SpectralField(f.grid, np.fft.ifft(fh * phase_multipliers(f.grid, r)))


def evolve_many(samples: np.ndarray, grid: Grid, r) -> np.ndarray:
    """T_r applied for every r at once; returns an array of shape (len(r), n)."""
    fh = np.fft.fft(samples)
    return np.fft.ifft(phase_multipliers(grid, r) * fh, axis=-1)


@dataclass(frozen=True)
class GaussianPulse:
    """Centered Gaussian A0 exp(-x^2/sigma0) normalized to mass ``lam``."""

    sigma0: float
    lam: float

    def __post_init__(self):
        if not (self.sigma0 > 0 and self.lam > 0):
            raise ValueError("sigma0 and lam must be positive")

    @property
    def amplitude(self) -> float:
        return (2.0 * self.lam**2 / (np.pi * self.sigma0)) ** 0.25

    def sigma_of_r(self, r):
        return self.sigma0 + 4j * np.asarray(r)

    def evolved(self, r, x):
        """Closed-form T_r g(x)."""
        s = self.sigma_of_r(r)
        x = np.asarray(x)
        return self.amplitude * np.sqrt(self.sigma0 / s) * np.exp(-(x**2) / s)

    def evolved_abs(self, r, x):
        r = np.asarray(r, dtype=float)
        x = np.asarray(x, dtype=float)
        q = self.sigma0**2 + 16.0 * r**2
        return self.amplitude * (self.sigma0**2 / q) ** 0.25 * np.exp(-self.sigma0 * x**2 / q)


def gaussian_pulse(sigma0: float, lam: float, grid: Grid) -> SpectralField:
    g = GaussianPulse(sigma0, lam)
    return SpectralField(grid, g.amplitude * np.exp(-(grid.x**2) / sigma0))


def evolved_gaussian_exact(sigma0: float, lam: float, r, x):
    return GaussianPulse(sigma0, lam).evolved(r, x)


def evolved_gaussian_abs(sigma0: float, lam: float, r, x):
    return GaussianPulse(sigma0, lam).evolved_abs(r, x)


def oracle_error(sigma0: float, lam: float, r: float, grid: Grid) -> float:
    """Max-norm error of the spectral T_r against the closed form, relative to the evolved peak."""
    numeric = evolve(gaussian_pulse(sigma0, lam, grid), r).samples
    exact = evolved_gaussian_exact(sigma0, lam, r, grid.x)
    return float(np.max(np.abs(numeric - exact)) / np.max(np.abs(exact)))


@dataclass
class DecayReport:
    r: np.ndarray
    ratio: np.ndarray
    bound: float
    bounded: bool
    saturating_tail: bool
    notes: list


def dispersive_decay_check(g: SpectralField, r_values, bound: float = 1.0) -> DecayReport:
    """Tabulate ||T_r g||_inf |r|^(1/2) / ||g||_1.

    The ratio should stay below a uniform constant; the check records whether
    it stays below ``bound`` and whether its growth decelerates (slope in
    log|r| non-increasing) over the largest half of the sampled |r|.
    """
    r = np.asarray(r_values, dtype=float)
    if np.any(r == 0):
        raise ValueError("dispersive estimate is vacuous at r = 0")
    l1 = norm(g, "lp", 1)
    sup = np.abs(evolve_many(g.samples, g.grid, r)).max(axis=1)
    ratio = sup * np.sqrt(np.abs(r)) / l1
    notes = []
    small = np.abs(r) < 1e-2
    if np.any(small):
        notes.append("ratio near r = 0 is not controlled by the estimate")
    order = np.argsort(np.abs(r))
    tail = ratio[order][len(r) // 2:]
    logr = np.log(np.abs(r[order][len(r) // 2:]))
    steps = np.diff(tail) / np.diff(logr)
    saturating = bool(np.all(np.diff(steps) <= 1e-12 * max(1.0, tail.max())))
    return DecayReport(r, ratio, bound, bool(np.all(ratio <= bound)), saturating, notes)
