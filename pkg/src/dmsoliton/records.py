"""Text persistence: result records, CSV tables and atomic writes."""
from __future__ import annotations

import json
import math
import os
import tempfile

import numpy as np

from .grid import Grid, SpectralField, write_field_csv
from .solver import SolveResult

FORMAT_VERSION = 1


class ResultFormatError(ValueError):
    """Structured parse failure for a result record."""

    def __init__(self, path, reason, line=None, column=None):
        self.path = str(path)
        self.reason = reason
        self.line = line
        self.column = column
        where = f":{line}:{column}" if line is not None else ""
        super().__init__(f"{self.path}{where}: {reason}")


def atomic_write(path, text: str):
    """Write ``text`` to a temp file in the target directory, then rename over ``path``."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(v) -> str:
    """17 significant digits; booleans as 0/1."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.16e}"


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _num(v: float):
    # JSON has no inf/nan literals; keep them as strings
    v = float(v)
    return v if math.isfinite(v) else repr(v)


def _unnum(v) -> float:
    return float(v)


def result_record(res: SolveResult, extra: dict | None = None) -> dict:
    g = res.field.grid
    rec = {
        "format_version": FORMAT_VERSION,
        "method": res.method,
        "energy": _num(res.energy),
        "multiplier": _num(res.multiplier),
        "residual": _num(res.residual),
        "linf_cap": _num(res.linf_cap),
        "kappa_star_at_cap": _num(res.kappa_star_at_cap),
        "iterations": int(res.iterations),
        "converged": bool(res.converged),
        "collapsed": bool(res.collapsed),
        "grid": {"n": g.n, "length": g.length},
        "field": {"re": [float(v) for v in res.field.samples.real], "im": [float(v) for v in res.field.samples.imag]},
        "trace": [[_num(e), _num(r)] for e, r in res.trace],
    }
    if extra:
        rec["problem"] = extra
    return rec


def write_result(res: SolveResult, path, extra: dict | None = None):
    atomic_write(path, json.dumps(result_record(res, extra), sort_keys=True, indent=1) + "\n")


def read_result(path) -> SolveResult:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ResultFormatError(path, f"cannot read: {exc.strerror}") from None
    try:
        rec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ResultFormatError(path, f"malformed record ({exc.msg})", exc.lineno, exc.colno) from None
    if not isinstance(rec, dict) or "format_version" not in rec:
        raise ResultFormatError(path, "missing format_version")
    if rec["format_version"] != FORMAT_VERSION:
        raise ResultFormatError(path, f"unsupported format_version {rec['format_version']!r}, expected {FORMAT_VERSION}")
    try:
        grid = Grid(int(rec["grid"]["n"]), float(rec["grid"]["length"]))
        samples = np.array(rec["field"]["re"], dtype=float) + 1j * np.array(rec["field"]["im"], dtype=float)
        return SolveResult(
            field=SpectralField(grid, samples),
            energy=_unnum(rec["energy"]),
            multiplier=_unnum(rec["multiplier"]),
            residual=_unnum(rec["residual"]),
            linf_cap=_unnum(rec["linf_cap"]),
            kappa_star_at_cap=_unnum(rec["kappa_star_at_cap"]),
            iterations=int(rec["iterations"]),
            converged=bool(rec["converged"]),
            trace=[(_unnum(e), _unnum(r)) for e, r in rec["trace"]],
            method=str(rec["method"]),
            collapsed=bool(rec.get("collapsed", False)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ResultFormatError(path, f"invalid record content: {exc}") from None


def field_csv_text(f: SpectralField) -> str:
    import io

    buf = io.StringIO()
    write_field_csv(f, buf)
    return buf.getvalue()


def trace_csv_text(res: SolveResult) -> str:
    return csv_text(["iteration", "energy", "residual"], [(i, e, r) for i, (e, r) in enumerate(res.trace)])


SCAN_HEADER = ["lambda", "E", "omega", "C", "kappa_star", "residual", "converged"]


def scan_csv_text(table) -> str:
    return csv_text(SCAN_HEADER, [(r.lam, r.energy, r.multiplier, r.cap, r.kappa_star, r.residual, r.converged)
                                  for r in table.rows])
