"""Averaging measures psi(r) dr and their quadrature.

Only bounded, piecewise-constant densities are represented: a sorted list of
breakpoints with one density value per interval. Pushforwards of
piecewise-constant dispersion profiles are exactly of this form.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class AveragingMeasure:
    kind: str
    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if b.ndim != 1 or b.size < 2 or v.shape != (b.size - 1,):
            raise ValueError("need k+1 breakpoints for k density values")
        if np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("density values must be finite and non-negative")
        b.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)
        if abs(self.total - 1.0) > 1e-10:
            warnings.warn(f"averaging measure has total mass {self.total:.12g}, not 1", stacklevel=3)

    @property
    def support(self) -> tuple[float, float]:
        nz = np.nonzero(self.values)[0]
        if nz.size == 0:
            return (float(self.breakpoints[0]), float(self.breakpoints[0]))
        return float(self.breakpoints[nz[0]]), float(self.breakpoints[nz[-1] + 1])

    @property
    def total(self) -> float:
        return float(np.sum(self.values * np.diff(self.breakpoints)))

    @property
    def radius(self) -> float:
        """Smallest R with supp psi inside [-R, R]."""
        lo, hi = self.support
        return max(abs(lo), abs(hi))

    def density(self, r):
        r = np.asarray(r, dtype=float)
        b = self.breakpoints
        idx = np.searchsorted(b, r, side="right") - 1
        inside = (r >= b[0]) & (r <= b[-1])
        idx = np.clip(idx, 0, self.values.size - 1)
        return np.where(inside, self.values[idx], 0.0)

    def moment(self, k: int) -> float:
        """Closed form of the integral of r^k psi(r) dr."""
        b = self.breakpoints
        return float(np.sum(self.values * (b[1:] ** (k + 1) - b[:-1] ** (k + 1)) / (k + 1)))


@dataclass(frozen=True)
class DispersionProfile:
    """Piecewise-constant mean-zero dispersion: ``pieces`` of (value, duration)."""

    pieces: tuple
    average: float = 0.0
    _d: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pieces = tuple((float(d), float(t)) for d, t in self.pieces)
        if not pieces:
            raise ValueError("dispersion profile needs at least one piece")
        if any(t <= 0 for _, t in pieces):
            raise ValueError("piece durations must be positive")
        d = np.array([p[0] for p in pieces])
        t = np.array([p[1] for p in pieces])
        if abs(np.sum(d * t)) > 1e-12 * max(1.0, np.sum(np.abs(d) * t)):
            raise ValueError("dispersion profile must have zero mean")
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "_d", d)

    @property
    def period(self) -> float:
        return float(sum(t for _, t in self.pieces))

    def knots(self) -> tuple[np.ndarray, np.ndarray]:
        """Times t_i and accumulated dispersion D(t_i) at piece boundaries."""
        t = np.concatenate([[0.0], np.cumsum([p[1] for p in self.pieces])])
        dd = np.concatenate([[0.0], np.cumsum([p[0] * p[1] for p in self.pieces])])
        return t, dd

    def accumulated(self, t):
        """D(t) = integral of d0 over [0, t], for t in [0, period]."""
        tk, dk = self.knots()
        return np.interp(t, tk, dk)

    def sign_changes(self) -> int:
        s = np.sign(self._d[self._d != 0])
        return int(np.sum(s[1:] != s[:-1]))


def uniform_density(r0: float, r1: float) -> AveragingMeasure:
    if not r0 < r1:
        raise ValueError("uniform density needs r0 < r1")
    return AveragingMeasure("uniform_interval", np.array([r0, r1]), np.array([1.0 / (r1 - r0)]))


def tabulated_density(breakpoints, values) -> AveragingMeasure:
    return AveragingMeasure("tabulated", np.asarray(breakpoints, float), np.asarray(values, float))


def density_from_profile(d: DispersionProfile) -> AveragingMeasure:
    """Pushforward of uniform time on [0, period] under D(t)."""
    if any(v == 0 for v, _ in d.pieces):
        raise ValueError("zero-dispersion pieces give a singular pushforward density")
    _, dk = d.knots()
    levels = np.unique(dk)
    if levels.size < 2:
        raise ValueError("profile has degenerate range")
    mids = 0.5 * (levels[1:] + levels[:-1])
    dens = np.zeros(mids.size)
    for (value, _), lo, hi in zip(d.pieces, dk[:-1], dk[1:]):
        a, b = min(lo, hi), max(lo, hi)
        dens += np.where((mids > a) & (mids < b), 1.0 / abs(value), 0.0)
    return AveragingMeasure("from_profile", levels, dens / d.period)


def density_lp_norm(m: AveragingMeasure, p: float) -> float:
    if not p >= 1:
        raise ValueError("Lp norm needs p >= 1")
    return float(np.sum(m.values**p * np.diff(m.breakpoints)) ** (1.0 / p))


def quadrature(m: AveragingMeasure, m_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule with ``m_nodes`` points on every nonzero piece; weights carry psi."""
    if m_nodes < 2:
        raise ValueError("need at least two quadrature nodes per piece")
    t, w = np.polynomial.legendre.leggauss(int(m_nodes))
    nodes, weights = [], []
    b = m.breakpoints
    for lo, hi, val in zip(b[:-1], b[1:], m.values):
        if val == 0:
            continue
        half = 0.5 * (hi - lo)
        nodes.append(lo + half * (t + 1.0))
        weights.append(val * half * w)
    return np.concatenate(nodes), np.concatenate(weights)
