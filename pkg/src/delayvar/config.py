"""Plain-text run configuration: ``key = value`` lines with dotted sections.

Example::

    # unit classical problem
    problem.name = classical_quadratic
    problem.n = 1
    problem.r = 0.5
    problem.T = 1
    history.kind = constant
    history.value = 0
    endpoint.zeta = 1
    solver.N = 64

Vectors are comma-separated. Blank lines and ``#`` comments are ignored.
"""

from __future__ import annotations

import csv
import inspect
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .problem import BUILTIN_PROBLEMS, make_problem
from .solver import SolveConfig
from .trajectory import GridError, HistoryFunction, commensurate_steps

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config"]


class ConfigError(ValueError):
    """Malformed or inconsistent configuration; ``line`` is 1-based when known."""

    def __init__(self, message, line=None, source="<config>"):
        self.line = line
        where = f"{source}:{line}: " if line else f"{source}: "
        super().__init__(where + message)


_SOLVER_KEYS = {f.name: f.type for f in fields(SolveConfig)}
_HISTORY_KEYS = {"kind", "value", "slope", "amplitude", "frequency", "phase", "offset", "file"}
_IDENTITY_KEYS = {"seed", "fubini_cases", "pairing_cases", "ibp_cases"}


@dataclass
class RunConfig:
    problem: str
    n: int
    r: float
    T: float
    coefficients: dict
    history: dict
    zeta: np.ndarray
    solver: SolveConfig
    threshold: float = 1e-5
    identity: dict = field(default_factory=dict)
    levels: tuple = (16, 32, 64)
    out_dir: Path = Path("out")
    source: str = "<config>"

    def build_problem(self):
        return make_problem(self.problem, self.n, self.r, self.T, **self.coefficients)

    def build_history(self):
        return build_history(self.history, self.n, self.r, self.source)


def _number(text, line, source):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}", line, source) from None


def _value(text, line, source):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) > 1:
        return np.array([float(_number(p, line, source)) for p in parts])
    return _number(parts[0], line, source)


def _vector(v, n, what, line, source):
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.size == 1:
        return np.full(n, float(arr[0]))
    if arr.size != n:
        raise ConfigError(f"{what} has {arr.size} components, expected n = {n}", line, source)
    return arr


def build_history(spec: dict, n, r, source="<config>") -> HistoryFunction:
    def get(key, default):
        return spec.get(key, (default, None))

    kind = get("kind", "constant")[0]
    if kind == "constant":
        v, ln = get("value", 0.0)
        return HistoryFunction.constant(r, _vector(v, n, "history.value", ln, source))
    if kind == "linear":
        v, ln = get("value", 0.0)
        s, ln2 = get("slope", 0.0)
        return HistoryFunction.linear(
            r, _vector(v, n, "history.value", ln, source), _vector(s, n, "history.slope", ln2, source)
        )
    if kind == "sinusoid":
        vals = {k: _vector(get(k, d)[0], n, f"history.{k}", get(k, d)[1], source)
                for k, d in (("amplitude", 1.0), ("frequency", 1.0), ("phase", 0.0), ("offset", 0.0))}
        return HistoryFunction.sinusoid(r, vals["amplitude"], vals["frequency"], vals["phase"], vals["offset"])
    if kind == "samples":
        path, ln = get("file", None)
        if path is None:
            raise ConfigError("history.kind = samples needs history.file", spec["kind"][1], source)
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"history file {str(path)!r} does not exist", ln, source)
        rows = _read_samples(path, ln, source)
        if rows.shape[1] != n + 1:
            raise ConfigError(f"history file has {rows.shape[1] - 1} components, expected {n}", ln, source)
        if abs(rows[0, 0] + r) > 1e-12 * r:
            raise ConfigError(f"history samples must start at theta = -r = {-r}", ln, source)
        return HistoryFunction.from_samples(rows[:, 0], rows[:, 1:])
    raise ConfigError(
        f"unknown history.kind {kind!r}; choose constant, linear, sinusoid or samples",
        spec["kind"][1],
        source,
    )


def _read_samples(path, line, source):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    try:
        data = np.array([[float(v) for v in r] for r in rows if not r[0].strip().isalpha()])
    except ValueError as exc:
        raise ConfigError(f"history file {str(path)!r}: {exc}", line, source) from None
    if data.ndim != 2 or data.shape[0] < 2:
        raise ConfigError(f"history file {str(path)!r} needs at least two rows", line, source)
    return data


def parse_config(text: str, source="<config>", base_dir=None) -> RunConfig:
    """Parse and validate; every error names the offending line."""
    entries = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", ln, source)
        key, val = (s.strip() for s in line.split("=", 1))
        if not key or not val:
            raise ConfigError(f"empty key or value in {raw.strip()!r}", ln, source)
        if "." not in key:
            raise ConfigError(f"key {key!r} needs a section prefix such as 'problem.'", ln, source)
        if key in entries:
            raise ConfigError(f"duplicate key {key!r} (first set on line {entries[key][1]})", ln, source)
        entries[key] = (val, ln)

    def take(key, default=None, required=False, kind=None):
        if key not in entries:
            if required:
                raise ConfigError(f"missing required key {key!r}", None, source)
            return default, None
        val, ln = entries[key]
        if kind is str:
            return val, ln
        return _value(val, ln, source), ln

    name, ln_name = take("problem.name", required=True, kind=str)
    if name not in BUILTIN_PROBLEMS:
        raise ConfigError(f"unknown problem {name!r}; choose from {sorted(BUILTIN_PROBLEMS)}", ln_name, source)
    n, ln_n = take("problem.n", 1)
    if not isinstance(n, int) or n < 1:
        raise ConfigError(f"problem.n must be a positive integer, got {n}", ln_n, source)
    r, ln_r = take("problem.r", required=True)
    T, ln_T = take("problem.T", required=True)
    r, T = float(r), float(T)
    if not (r > 0 and T > 0):
        raise ConfigError(f"need r > 0 and T > 0, got r={r}, T={T}", ln_r, source)
    if not r < T:
        raise ConfigError(f"the delay must be shorter than the horizon (r < T), got r={r}, T={T}", ln_r, source)

    coeffs = {}
    history = {}
    identity = {}
    solver = {}
    threshold = 1e-5
    levels = (16, 32, 64)
    out_dir = None
    zeta_raw = None
    for key, (val, ln) in entries.items():
        section, _, sub = key.partition(".")
        if key in ("problem.name", "problem.n", "problem.r", "problem.T"):
            continue
        if section == "problem":
            coeffs[sub] = (_value(val, ln, source), ln)
        elif section == "history":
            if sub not in _HISTORY_KEYS:
                raise ConfigError(f"unknown history key {key!r}", ln, source)
            if sub in ("kind", "file"):
                v = val
                if sub == "file" and base_dir is not None and not Path(v).is_absolute():
                    v = str(Path(base_dir) / v)
            else:
                v = _value(val, ln, source)
            history[sub] = (v, ln)
        elif key == "endpoint.zeta":
            zeta_raw = (_value(val, ln, source), ln)
        elif section == "solver":
            if sub not in _SOLVER_KEYS:
                raise ConfigError(f"unknown solver key {key!r}; known: {sorted(_SOLVER_KEYS)}", ln, source)
            solver[sub] = val if sub == "metric" else _value(val, ln, source)
            if sub in ("N", "max_iters", "seed", "subsamples") and not isinstance(solver[sub], int):
                raise ConfigError(f"{key} must be an integer, got {val!r}", ln, source)
        elif key == "verify.threshold":
            threshold = float(_value(val, ln, source))
        elif section == "identity":
            if sub not in _IDENTITY_KEYS:
                raise ConfigError(f"unknown identity key {key!r}", ln, source)
            v = _value(val, ln, source)
            if not isinstance(v, int) or v < 0:
                raise ConfigError(f"{key} must be a non-negative integer", ln, source)
            identity[sub] = v
        elif key == "converge.levels":
            v = np.atleast_1d(_value(val, ln, source))
            if np.any(v != np.round(v)) or np.any(v < 2):
                raise ConfigError("converge.levels must be integers >= 2", ln, source)
            levels = tuple(int(x) for x in v)
        elif key == "output.dir":
            out_dir = (val, ln)
        else:
            raise ConfigError(f"unknown key {key!r}", ln, source)

    if zeta_raw is None:
        raise ConfigError("missing required key 'endpoint.zeta'", None, source)
    zeta = _vector(zeta_raw[0], n, "endpoint.zeta", zeta_raw[1], source)

    factory = BUILTIN_PROBLEMS[name]
    allowed = set(inspect.signature(factory).parameters) - {"n", "r", "T"}
    clean = {}
    for sub, (v, ln) in coeffs.items():
        if sub not in allowed:
            raise ConfigError(f"problem {name!r} has no coefficient {sub!r}; known: {sorted(allowed)}", ln, source)
        clean[sub] = v.tolist() if isinstance(v, np.ndarray) else v

    try:
        cfg = SolveConfig(**solver)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid solver settings: {exc}", None, source) from None
    try:
        commensurate_steps(r, T, cfg.N)
        for N in levels:
            commensurate_steps(r, T, N)
    except GridError as exc:
        ln = entries.get("solver.N", (None, None))[1]
        raise ConfigError(str(exc), ln, source) from None

    out = Path(out_dir[0]) if out_dir else Path("out")
    run = RunConfig(name, n, r, T, clean, history, zeta, cfg, threshold, identity, levels, out, source)
    # fail early on bad history specs and coefficients
    run.build_history()
    try:
        run.build_problem()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"problem {name!r}: {exc}", ln_name, source) from None
    return run


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from None
    return parse_config(text, str(path), base_dir=path.parent)
