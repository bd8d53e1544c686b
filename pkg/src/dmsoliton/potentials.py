"""Nonlinearity potentials V and their super-quadraticity exponents.

kappa(a) is the sharp ratio V'(a) a / V(a); kappa_star(C) is its infimum over
(0, C]. The saturated kinds behave like a^4/4 near zero and like a^2 at
infinity, so kappa runs from 4 down to 2.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import minimize_scalar

KINDS = ("power", "saturated_log", "saturated_rational", "custom-tabulated")


def _u_minus_log1p(u):
    """u - log(1 + u) without cancellation for small u >= 0."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    small = u < 0.1
    us = u[small]
    acc = np.zeros_like(us)
    term = us.copy()
    for k in range(2, 26):
        term = term * us
        acc += (-1) ** k * term / k
    out[small] = acc
    ub = u[~small]
    out[~small] = ub - np.log1p(ub)
    return out


@dataclass(frozen=True)
class Potential:
    kind: str
    gamma: float | None = None
    sigma: float | None = None
    gamma1: float = 2.0
    gamma2: float = 2.0
    gamma0: float | None = None
    a_star: float = 1.0
    table_a: np.ndarray | None = field(default=None, repr=False, compare=False)
    table_v: np.ndarray | None = field(default=None, repr=False, compare=False)
    table_dv: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "power" and not (self.gamma is not None and self.gamma >= 2):
            raise ValueError("power potential needs gamma >= 2")
        if self.kind.startswith("saturated") and not (self.sigma is not None and self.sigma > 0):
            raise ValueError("saturated potentials need sigma > 0")
        if not 2 <= self.gamma1 <= self.gamma2 < np.inf:
            raise ValueError("growth exponents must satisfy 2 <= gamma1 <= gamma2 < inf")
        if not self.a_star > 0:
            raise ValueError("a_star must be positive")
        if self.kind == "custom-tabulated":
            a = np.asarray(self.table_a, dtype=float)
            if a.ndim != 1 or a.size < 4 or a[0] != 0 or np.any(np.diff(a) <= 0):
                raise ValueError("tabulated potential needs an increasing grid starting at 0")
            v = np.asarray(self.table_v, dtype=float)
            if v[0] != 0:
                raise ValueError("tabulated potential must satisfy V(0) = 0")
            object.__setattr__(self, "_v_interp", PchipInterpolator(a, v))
            object.__setattr__(self, "_dv_interp", PchipInterpolator(a, np.asarray(self.table_dv, float)))

    # -- evaluation -------------------------------------------------------
    def v(self, a):
        a = _nonneg(a)
        if self.kind == "power":
            return a**self.gamma / self.gamma
        if self.kind == "saturated_log":
            s = self.sigma
            return _u_minus_log1p(s * a * a) / (2 * s * s)
        if self.kind == "saturated_rational":
            a2 = a * a
            return a2 * a2 / (1 + self.sigma * a2)
        return self._v_interp(a)

    def v_prime(self, a):
        a = _nonneg(a)
        if self.kind == "power":
            return a ** (self.gamma - 1)
        if self.kind == "saturated_log":
            return a**3 / (1 + self.sigma * a * a)
        if self.kind == "saturated_rational":
            a2 = a * a
            q = 1 + self.sigma * a2
            return (4 * a2 * a + 2 * self.sigma * a2 * a2 * a) / (q * q)
        return self._dv_interp(a)

    def v_prime_over_a(self, a):
        """V'(a)/a, finite at a = 0 for the built-in kinds (gamma >= 2)."""
        a = _nonneg(a)
        if self.kind == "power":
            return a ** (self.gamma - 2)
        if self.kind == "saturated_log":
            return a * a / (1 + self.sigma * a * a)
        if self.kind == "saturated_rational":
            a2 = a * a
            q = 1 + self.sigma * a2
            return (4 * a2 + 2 * self.sigma * a2 * a2) / (q * q)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(a > 0, self._dv_interp(a) / np.where(a > 0, a, 1.0), 0.0)
        return out

    @property
    def kappa_at_zero(self) -> float | None:
        """Analytic limit of kappa as a -> 0+ (None for tabulated data)."""
        if self.kind == "power":
            return float(self.gamma)
        if self.kind in ("saturated_log", "saturated_rational"):
            return 4.0
        return None


def _nonneg(a):
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise ValueError("potential argument must be non-negative")
    return a


def power(gamma: float, a_star: float = 1.0) -> Potential:
    return Potential("power", gamma=gamma, gamma1=gamma, gamma2=gamma, gamma0=gamma, a_star=a_star)


def saturated_log(sigma: float, a_star: float = 1.0) -> Potential:
    # V'(a) = a^3/(1 + sigma a^2) <~ a^2 + a^3; V ~ a^4/4 near zero
    return Potential("saturated_log", sigma=sigma, gamma1=3.0, gamma2=4.0, gamma0=4.0, a_star=a_star)


def saturated_rational(sigma: float, a_star: float = 1.0) -> Potential:
    return Potential("saturated_rational", sigma=sigma, gamma1=3.0, gamma2=4.0, gamma0=4.0, a_star=a_star)


def tabulated(a, v, dv, gamma1=2.0, gamma2=2.0, gamma0=None, a_star=1.0) -> Potential:
    return Potential(
        "custom-tabulated", gamma1=gamma1, gamma2=gamma2, gamma0=gamma0, a_star=a_star,
        table_a=np.asarray(a, float), table_v=np.asarray(v, float), table_dv=np.asarray(dv, float),
    )


def v(p: Potential, a):
    return p.v(a)


def v_prime(p: Potential, a):
    return p.v_prime(a)


def kappa(p: Potential, a):
    """Sharp ratio V'(a) a / V(a)."""
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0):
        raise ValueError("kappa is defined for a > 0")
    if p.kind == "power":
        return np.full_like(a, float(p.gamma))
    if p.kind == "saturated_log":
        u = p.sigma * a * a
        return 2 * u * u / ((1 + u) * _u_minus_log1p(u))
    if p.kind == "saturated_rational":
        u = p.sigma * a * a
        return (4 + 2 * u) / (1 + u)
    va = p.v(a)
    if np.any(va <= 0):
        raise ValueError("kappa undefined where V(a) = 0")
    return p.v_prime(a) * a / va


def kappa_star(p: Potential, c: float, points: int = 512) -> float:
    """inf of kappa over (0, c], on a log grid refined around its minimum."""
    if not c > 0:
        raise ValueError("kappa_star needs c > 0")
    a = np.geomspace(1e-8 * c, c, points)
    if p.kind == "custom-tabulated":
        va = p.v(a)
        a = a[va > 0]
        if a.size == 0:
            raise ValueError("V vanishes on the whole sampled range")
    k = kappa(p, a)
    i = int(np.argmin(k))
    best = float(k[i])
    if 0 < i < a.size - 1:
        lo, hi = np.log(a[i - 1]), np.log(a[i + 1])
        res = minimize_scalar(lambda t: float(kappa(p, np.exp(t))), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        best = min(best, float(res.fun))
    if p.kappa_at_zero is not None:
        best = min(best, p.kappa_at_zero)
    return best


def scaling_inequality_check(p: Potential, s: float, a: float, big_a: float) -> bool:
    """V(s a) <= s^kappa*(A) V(a) for s in (0, 1], 0 < a <= A."""
    if not (0 < s <= 1 and 0 < a <= big_a):
        raise ValueError("need 0 < s <= 1 and 0 < a <= A")
    ks = kappa_star(p, big_a)
    return bool(p.v(s * a) <= s**ks * p.v(a) * (1 + 1e-9))


def lower_bound_check(p: Potential, a: float) -> bool:
    """V(a) >= (a/a*)^2 V(a*) for a >= a*, trivially true below a*."""
    if not a > 0:
        raise ValueError("lower bound check needs a > 0")
    va_star = float(p.v(p.a_star))
    if not va_star > 0:
        raise ValueError("a_star must satisfy V(a_star) > 0")
    rhs = (a / p.a_star) ** 2 * va_star if a >= p.a_star else 0.0
    return bool(p.v(a) >= rhs * (1 - 1e-9))


@dataclass
class AssumptionReport:
    potential: Potential
    d_av: float
    checks: dict = field(default_factory=dict)
    zero_threshold: dict = field(default_factory=dict)
    growth_constant: float = float("nan")
    psi_exponent: float = float("nan")
    branch: str = ""

    @property
    def passed(self) -> bool:
        """Hypotheses of the existence theorem for this branch (A1-A3 and exponents)."""
        return all(self.checks.values())

    @property
    def threshold_is_zero(self) -> bool:
        """A4 holds, so negative energy is expected for every mass."""
        return all(self.zero_threshold.values())

    def lines(self):
        yield f"branch: {self.branch}"
        for name, ok in self.checks.items():
            yield f"{'PASS' if ok else 'FAIL'} {name}"
        for name, ok in self.zero_threshold.items():
            yield f"{'HOLDS' if ok else 'FAILS'} {name} (threshold is zero iff this holds)"
        yield f"empirical growth constant: {self.growth_constant:.6g}"
        yield f"required psi integrability exponent (minus delta): {self.psi_exponent:.6g}"


def required_psi_exponent(gamma2: float, d_av: float, delta: float = 0.0) -> float:
    """L^p exponent demanded of psi by the existence theorems."""
    if d_av == 0:
        return 4.0 / (5.0 - gamma2) + delta if gamma2 < 5 else float("inf")
    return max(1.0, 4.0 / (10.0 - gamma2) + delta) if gamma2 < 10 else float("inf")


def validate_assumptions(p: Potential, d_av: float, delta: float = 0.0) -> AssumptionReport:
    """Empirical check of the growth, saturation, positivity and small-amplitude assumptions."""
    if d_av < 0:
        raise ValueError("d_av must be non-negative")
    rep = AssumptionReport(p, d_av)
    g1, g2 = p.gamma1, p.gamma2
    if d_av == 0:
        rep.branch = "zero average dispersion"
        rep.checks["exponents 3 <= gamma1 <= gamma2 < 5"] = 3 <= g1 <= g2 < 5
    else:
        rep.branch = "positive average dispersion"
        rep.checks["exponents 2 <= gamma1 <= gamma2 < 10"] = 2 <= g1 <= g2 < 10
    rep.psi_exponent = required_psi_exponent(g2, d_av, delta)

    a = np.geomspace(1e-6, 1e6, 2001)
    if p.kind == "custom-tabulated":
        a = a[a <= p.table_a[-1]]
    ratio = np.abs(p.v_prime(a)) / (a ** (g1 - 1) + a ** (g2 - 1))
    rep.growth_constant = float(np.max(ratio))
    # bounded: the ratio must not creep up at either end of the sampled range
    ends = np.concatenate([ratio[:20], ratio[-20:]])
    rep.checks["A1 growth bound (empirical)"] = bool(
        np.all(np.isfinite(ratio)) and ends.max() <= rep.growth_constant * (1 + 1e-9)
        and ratio[-1] <= ratio[-20] * (1 + 1e-6) and ratio[0] <= ratio[19] * (1 + 1e-6)
    )
    va = p.v(a)
    rep.checks["V(0) = 0 and V >= 0"] = bool(float(p.v(0.0)) == 0 and np.all(va >= 0))
    pos = va > 0
    kap = kappa(p, a[pos]) if np.any(pos) else np.array([])
    rep.checks["A2 kappa >= 2"] = bool(kap.size and np.all(kap >= 2 - 1e-9))
    rep.checks["A3 V(a_star) > 0"] = bool(float(p.v(p.a_star)) > 0)
    small = a[a <= 1e-2]
    if d_av == 0:
        rep.zero_threshold["A4 V > 0 near zero"] = bool(np.all(p.v(small) > 0))
    else:
        g0 = p.gamma0
        ok = g0 is not None and 2 < g0 < 6
        if ok:
            r0 = p.v(small) / small**g0
            ok = bool(np.all(r0 > 0) and r0.min() >= 1e-3 * r0.max())
        rep.zero_threshold["A4 V >~ a^gamma0 with 2 < gamma0 < 6"] = bool(ok)
    return rep
