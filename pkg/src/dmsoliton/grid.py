"""Uniform periodic grid, spectral transforms and norms.

Fields live on ``x_j = -L/2 + j*dx``; the transform is the unitary DFT so
that ``dx * sum|f|^2`` is preserved in both spaces.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class Grid:
    n: int
    length: float

    def __post_init__(self):
        n = self.n
        if isinstance(n, bool) or int(n) != n or n < 8 or (int(n) & (int(n) - 1)):
            raise ValueError(f"grid size must be a power of two >= 8, got {n!r}")
        if not np.isfinite(self.length) or self.length <= 0:
            raise ValueError(f"grid length must be positive, got {self.length!r}")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "length", float(self.length))

    @property
    def dx(self) -> float:
        return self.length / self.n

    @cached_property
    def x(self) -> np.ndarray:
        x = -0.5 * self.length + self.dx * np.arange(self.n)
        x.flags.writeable = False
        return x

    @cached_property
    def xi(self) -> np.ndarray:
        """Angular frequencies 2*pi*k/L in FFT order (0, 1, ..., -n/2, ..., -1)."""
        xi = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)
        xi.flags.writeable = False
        return xi

    @cached_property
    def xi_deriv(self) -> np.ndarray:
        """Frequencies used for derivatives: Nyquist mode zeroed."""
        xi = np.array(self.xi)
        xi[self.n // 2] = 0.0
        xi.flags.writeable = False
        return xi

    @cached_property
    def xi2(self) -> np.ndarray:
        """Symbol of -d^2/dx^2 with the Nyquist mode zeroed."""
        xi2 = self.xi_deriv**2
        xi2.flags.writeable = False
        return xi2


def make_grid(n: int, length: float) -> Grid:
    return Grid(n, length)


@dataclass(frozen=True)
class SpectralField:
    """Complex samples of a function on a :class:`Grid` (immutable)."""

    grid: Grid
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = np.array(self.samples, dtype=complex)
        if s.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("field contains NaN or Inf")
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)

    def with_samples(self, samples) -> "SpectralField":
        return SpectralField(self.grid, samples)

    def __mul__(self, c) -> "SpectralField":
        return SpectralField(self.grid, self.samples * c)

    __rmul__ = __mul__

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _same_grid(self, other)
        return SpectralField(self.grid, self.samples + other.samples)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _same_grid(self, other)
        return SpectralField(self.grid, self.samples - other.samples)


def _same_grid(f: SpectralField, g: SpectralField):
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")


def transform(f: SpectralField) -> SpectralField:
    """Unitary DFT. The result is indexed in FFT frequency order."""
    return SpectralField(f.grid, np.fft.fft(f.samples, norm="ortho"))


def inverse_transform(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, np.fft.ifft(f.samples, norm="ortho"))


def inner(f: SpectralField | np.ndarray, g: SpectralField | np.ndarray, dx: float | None = None) -> float:
    """Real inner product Re<f, g> = dx * Re sum(conj(f) g)."""
    if isinstance(f, SpectralField):
        dx = f.grid.dx
        f = f.samples
    if isinstance(g, SpectralField):
        g = g.samples
    return float(dx * np.real(np.vdot(f, g)))


def h1_semi_sq(samples: np.ndarray, grid: Grid) -> float:
    fh = np.fft.fft(samples, norm="ortho")
    return float(grid.dx * np.sum(grid.xi2 * np.abs(fh) ** 2))


def derivative(f: SpectralField, order: int = 1) -> SpectralField:
    """Spectral derivative; the Nyquist mode is dropped."""
    fh = np.fft.fft(f.samples)
    fh = fh * (1j * f.grid.xi_deriv) ** order
    return SpectralField(f.grid, np.fft.ifft(fh))


def norm(f: SpectralField, kind: str = "l2", p: float | None = None) -> float:
    """Discrete norms of a field.

    ``kind`` is one of ``l2``, ``l2sq``, ``lp`` (needs ``p``), ``linf`` or
    ``h1_semi_sq`` (the squared L2 norm of the derivative, computed spectrally).
    """
    s = f.samples
    dx = f.grid.dx
    if kind == "l2":
        return float(np.sqrt(dx * np.sum(np.abs(s) ** 2)))
    if kind == "l2sq":
        return float(dx * np.sum(np.abs(s) ** 2))
    if kind == "lp":
        if p is None or not p >= 1:
            raise ValueError(f"lp norm needs p >= 1, got {p!r}")
        return float((dx * np.sum(np.abs(s) ** p)) ** (1.0 / p))
    if kind == "linf":
        return float(np.max(np.abs(s)))
    if kind == "h1_semi_sq":
        return h1_semi_sq(s, f.grid)
    raise ValueError(f"unknown norm kind {kind!r}")


def sobolev_linf_check(f: SpectralField) -> bool:
    """Check ||f||_inf^2 <= ||f||_2 ||f'||_2.

    This is a whole-line inequality; periodic non-decaying inputs (e.g. a
    constant) can legitimately fail it.
    """
    if not np.any(f.samples):
        raise ValueError("sobolev check needs a nonzero field")
    lhs = norm(f, "linf") ** 2
    rhs = norm(f, "l2") * np.sqrt(norm(f, "h1_semi_sq"))
    return bool(lhs <= rhs * (1 + 1e-9))


def boundary_ratio(f: SpectralField, edge: int = 4) -> float:
    """Largest magnitude within ``edge`` cells of the box edge, relative to the peak."""
    a = np.abs(f.samples)
    peak = a.max()
    if peak == 0:
        return 0.0
    return float(max(a[:edge].max(), a[-edge:].max()) / peak)


def write_field_csv(f: SpectralField, path_or_buf, digits: int = 17):
    """Write columns x, re, im with ``digits`` significant digits."""
    fmt = f"{{:.{digits - 1}e}}"
    lines = ["x,re,im"]
    for x, z in zip(f.grid.x, f.samples):
        lines.append(",".join(fmt.format(v) for v in (x, z.real, z.imag)))
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        with open(path_or_buf, "w", newline="\n") as fh:
            fh.write(text)


def read_field_csv(path_or_buf) -> SpectralField:
    """Read a field written by :func:`write_field_csv`; the grid is inferred from x."""
    if hasattr(path_or_buf, "read"):
        text = path_or_buf.read()
    else:
        with open(path_or_buf) as fh:
            text = fh.read()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["x", "re", "im"]:
        raise ValueError("field CSV must start with header x,re,im")
    try:
        data = np.array([[float(c) for c in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise ValueError(f"malformed field CSV: {exc}") from None
    if data.ndim != 2 or data.shape[1] != 3:
        raise ValueError("field CSV rows must have three columns")
    n = data.shape[0]
    if n < 2:
        raise ValueError("field CSV needs at least two rows")
    grid = Grid(n, -2.0 * data[0, 0])
    if not np.allclose(data[:, 0], grid.x, rtol=0, atol=1e-9 * grid.length):
        raise ValueError("field CSV x column is not a centered uniform grid")
    return SpectralField(grid, data[:, 1] + 1j * data[:, 2])
