"""Run configuration: flat ``section.key = value`` files, strictly parsed.

Unknown keys are errors, never warnings; every numeric field must parse.
The format is deliberately line-oriented and dependency-free so configs
diff cleanly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError
from .model import LQModel
from .simulate import InitialLaw

_MODEL_KEYS = {"r", "b1", "b2", "b3", "b4", "A", "C"}
_LAW_KEYS = {"kind", "x0", "mean", "sd"}
_SIM_KEYS = {"T", "dt", "nPaths", "nParticles", "seed"}
_FP_KEYS = {"damping", "tol", "maxIter", "xLo", "xHi", "dx"}
_TOP_KEYS = {"output"}


@dataclass
class RunConfig:
    model: LQModel
    law0: InitialLaw
    T: float = 6.0
    dt: float = 1e-3
    n_paths: int = 10_000
    n_particles: int = 10_000
    seed: int = 0
    damping: float = 0.5
    tol: float = 1e-2
    max_iter: int = 30
    x_lo: float = -6.0
    x_hi: float = 6.0
    dx: float = 0.05
    output: str = "out"
    raw: dict = field(default_factory=dict)


def _parse_lines(text: str) -> dict[str, tuple[str, int]]:
    """key -> (value, line number); comments start with '#'."""
    out: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError("empty key or value", line=lineno)
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", line=lineno)
        out[key] = (value, lineno)
    return out


def _known(key: str) -> bool:
    if key in _TOP_KEYS:
        return True
    section, _, name = key.partition(".")
    return (
        (section == "model" and name in _MODEL_KEYS)
        or (section == "law0" and name in _LAW_KEYS)
        or (section == "sim" and name in _SIM_KEYS)
        or (section == "fixedPoint" and name in _FP_KEYS)
    )


def _as_float(entries, key: str) -> float | None:
    if key not in entries:
        return None
    value, lineno = entries[key]
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r} as a real number", line=lineno)


def _as_int(entries, key: str) -> int | None:
    if key not in entries:
        return None
    value, lineno = entries[key]
    try:
        return int(value, 0)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r} as an integer", line=lineno)


def parse_config(text: str) -> RunConfig:
    entries = _parse_lines(text)
    for key, (_, lineno) in entries.items():
        if not _known(key):
            raise ConfigError(f"unknown key {key!r}", line=lineno)

    model_vals = {}
    for name in _MODEL_KEYS:
        v = _as_float(entries, f"model.{name}")
        if v is None:
            raise ConfigError(f"missing required key model.{name}")
        model_vals[name] = v
    try:
        model = LQModel(**model_vals)
    except Exception as exc:
        raise ConfigError(f"invalid model: {exc}")

    kind_entry = entries.get("law0.kind", ("dirac", 0))
    kind = kind_entry[0]
    if kind == "dirac":
        law0 = InitialLaw.dirac(_as_float(entries, "law0.x0") or 0.0)
    elif kind == "gaussian":
        law0 = InitialLaw.gaussian(
            _as_float(entries, "law0.mean") or 0.0,
            _as_float(entries, "law0.sd") or 1.0,
        )
    else:
        raise ConfigError(f"law0.kind must be dirac or gaussian, got {kind!r}",
                          line=kind_entry[1])

    cfg = RunConfig(model=model, law0=law0, raw={k: v for k, (v, _) in entries.items()})
    if (v := _as_float(entries, "sim.T")) is not None:
        cfg.T = v
    if (v := _as_float(entries, "sim.dt")) is not None:
        cfg.dt = v
    if (v := _as_int(entries, "sim.nPaths")) is not None:
        cfg.n_paths = v
    if (v := _as_int(entries, "sim.nParticles")) is not None:
        cfg.n_particles = v
    if (v := _as_int(entries, "sim.seed")) is not None:
        cfg.seed = v
    if (v := _as_float(entries, "fixedPoint.damping")) is not None:
        cfg.damping = v
    if (v := _as_float(entries, "fixedPoint.tol")) is not None:
        cfg.tol = v
    if (v := _as_int(entries, "fixedPoint.maxIter")) is not None:
        cfg.max_iter = v
    if (v := _as_float(entries, "fixedPoint.xLo")) is not None:
        cfg.x_lo = v
    if (v := _as_float(entries, "fixedPoint.xHi")) is not None:
        cfg.x_hi = v
    if (v := _as_float(entries, "fixedPoint.dx")) is not None:
        cfg.dx = v
    if "output" in entries:
        cfg.output = entries["output"][0]
    if cfg.T <= 0 or cfg.dt <= 0 or cfg.n_paths < 1 or cfg.n_particles < 1:
        raise ConfigError("sim.T, sim.dt, sim.nPaths, sim.nParticles must be positive")
    return cfg


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}")
    return parse_config(text)
