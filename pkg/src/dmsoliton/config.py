"""Flat ``key = value`` run configuration with dotted keys."""
from __future__ import annotations

from dataclasses import dataclass, field

from . import averaging, potentials
from .grid import Grid
from .nonlinearity import Problem
from .solver import SolverConfig


class ConfigError(ValueError):
    pass


MODES = ("solve", "scan", "threshold", "verify", "density")

DEFAULTS = {
    "mode": "solve",
    "lambda": "2",
    "d_av": "0",
    "potential.kind": "power",
    "potential.gamma": "4",
    "potential.sigma": "1",
    "potential.a_star": "1",
    "psi.kind": "uniform_interval",
    "psi.r0": "0",
    "psi.r1": "1",
    "psi.profile": "1:1, -1:1",
    "grid.n": "1024",
    "grid.length": "40",
    "quadrature.nodes": "32",
    "solver.method": "projected_gradient",
    "solver.tol": "1e-9",
    "solver.max_iter": "20000",
    "solver.step": "1",
    "solver.theta": "0.5",
    "solver.restarts": "1",
    "solver.seed": "0",
    "solver.init": "gaussian",
    "solver.sigma0": "1",
    "solver.init_file": "",
    "threshold.lo": "0.5",
    "threshold.hi": "8",
    "threshold.tol": "0.05",
    "scan.lambdas": "",
}


def parse_text(text: str, source: str = "<config>") -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def parse_override(item: str) -> tuple[str, str]:
    if "=" not in item:
        raise ConfigError(f"override must be key=value, got {item!r}")
    key, value = (p.strip() for p in item.split("=", 1))
    if key not in DEFAULTS:
        raise ConfigError(f"unknown override key {key!r}")
    return key, value


def parse_lambda_spec(spec: str) -> list:
    """``x`` or an inclusive range ``start:stop:step``."""
    parts = spec.split(":")
    try:
        nums = [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"bad lambda value {spec!r}") from None
    if len(nums) == 1:
        return nums
    if len(nums) != 3 or nums[2] <= 0 or nums[1] < nums[0]:
        raise ConfigError(f"lambda range must be start:stop:step with step > 0, got {spec!r}")
    start, stop, step = nums
    count = int(round((stop - start) / step))
    vals = [start + k * step for k in range(count + 1)]
    if vals[-1] > stop + 1e-9 * step:
        vals.pop()
    return [float(f"{v:.12g}") for v in vals]


def parse_profile(text: str) -> tuple:
    pieces = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            value, duration = (float(p) for p in item.split(":"))
        except ValueError:
            raise ConfigError(f"profile pieces must be value:duration, got {item!r}") from None
        pieces.append((value, duration))
    return tuple(pieces)


@dataclass
class RunConfig:
    mode: str
    values: dict = field(default_factory=dict)
    lambdas: list = field(default_factory=list)

    def get(self, key: str, kind=str):
        raw = self.values[key]
        try:
            if kind is int:
                f = float(raw)
                if f != int(f):
                    raise ValueError
                return int(f)
            return kind(raw)
        except ValueError:
            raise ConfigError(f"{key}: cannot read {raw!r} as {kind.__name__}") from None

    def potential(self) -> potentials.Potential:
        kind = self.get("potential.kind")
        a_star = self.get("potential.a_star", float)
        if kind == "power":
            return potentials.power(self.get("potential.gamma", float), a_star)
        if kind == "saturated_log":
            return potentials.saturated_log(self.get("potential.sigma", float), a_star)
        if kind == "saturated_rational":
            return potentials.saturated_rational(self.get("potential.sigma", float), a_star)
        raise ConfigError(f"potential.kind must be power, saturated_log or saturated_rational, got {kind!r}")

    def measure(self) -> averaging.AveragingMeasure:
        kind = self.get("psi.kind")
        if kind == "uniform_interval":
            return averaging.uniform_density(self.get("psi.r0", float), self.get("psi.r1", float))
        if kind == "from_profile":
            profile = averaging.DispersionProfile(parse_profile(self.get("psi.profile")))
            return averaging.density_from_profile(profile)
        raise ConfigError(f"psi.kind must be uniform_interval or from_profile, got {kind!r}")

    def problem(self, lam: float | None = None) -> Problem:
        lam = self.lambdas[0] if lam is None else lam
        grid = Grid(self.get("grid.n", int), self.get("grid.length", float))
        return Problem(lam, self.get("d_av", float), self.potential(), self.measure(), grid,
                       self.get("quadrature.nodes", int))

    def solver(self) -> SolverConfig:
        init_file = self.get("solver.init_file") or None
        return SolverConfig(
            method=self.get("solver.method"),
            tol=self.get("solver.tol", float),
            max_iter=self.get("solver.max_iter", int),
            step=self.get("solver.step", float),
            theta=self.get("solver.theta", float),
            restarts=self.get("solver.restarts", int),
            seed=self.get("solver.seed", int),
            init=self.get("solver.init"),
            sigma0=self.get("solver.sigma0", float),
            init_file=init_file,
        )

    def validate(self):
        """Build every block once so that errors surface before any computation."""
        try:
            prob = self.problem()
            cfg = self.solver()
            self.get("threshold.lo", float), self.get("threshold.hi", float), self.get("threshold.tol", float)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        rep = prob.assumptions()
        if not rep.passed:
            failed = [name for name, ok in rep.checks.items() if not ok]
            raise ConfigError(f"potential violates the assumptions for the {rep.branch} branch: {', '.join(failed)}")
        if cfg.method == "spectral_renormalization" and prob.d_av <= 0:
            raise ConfigError("solver.method spectral_renormalization needs d_av > 0")
        if cfg.method == "ekeland_fixed_point" and prob.d_av != 0:
            raise ConfigError("solver.method ekeland_fixed_point needs d_av = 0")
        return self


def load(text: str | None = None, overrides=(), mode: str | None = None, lam: str | None = None,
         seed: int | None = None, source: str = "<config>") -> RunConfig:
    values = dict(DEFAULTS)
    if text is not None:
        values.update(parse_text(text, source))
    for item in overrides:
        k, v = parse_override(item)
        values[k] = v
    if lam is not None:
        values["lambda"] = lam
    if seed is not None:
        values["solver.seed"] = str(seed)
    if mode is not None:
        values["mode"] = mode
    if values["mode"] not in MODES:
        raise ConfigError(f"mode must be one of {', '.join(MODES)}, got {values['mode']!r}")
    spec = values["scan.lambdas"] if values["mode"] == "scan" and values["scan.lambdas"] and lam is None else values["lambda"]
    lambdas = parse_lambda_spec(spec)
    if any(v <= 0 for v in lambdas):
        raise ConfigError("lambda values must be positive")
    return RunConfig(values["mode"], values, lambdas)
