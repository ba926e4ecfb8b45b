"""JSON run configuration and its validation."""

from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, field

from . import exterior as ext
from .flow import FLOW_KINDS

ANSATZE = ("zero", "random", "rank1", "kahler_slice", "abelian_mode", "bump", "commuting")

# key -> (default, description); --help prints this table
CONFIG_KEYS = {
    "name": ("run", "run label used in reports"),
    "geometry": (None, 'calibration label, e.g. "Kahler(2)", "G2", "Spin7"; null for none'),
    "flow": ("ym", "flow kind: ym | k3 | cy3 | g2mono"),
    "grid.shape": (None, "sites per axis (each >= 4); required"),
    "grid.periods": (None, "period per axis (default 1.0 each)"),
    "initial.ansatz": ("random", "one of " + ", ".join(ANSATZE)),
    "initial.seed": (0, "RNG seed (overridden by --seed)"),
    "initial.k_max": (2.0, "band limit |k| <= k_max for random data"),
    "initial.amplitude": (0.5, "bound on the summed mode amplitudes of A"),
    "initial.higgs_amplitude": (None, "same for the Higgs fields (default: amplitude)"),
    "initial.width": (0.08, "bump ansatz: Gaussian width"),
    "initial.center": (None, "bump ansatz: center (default: middle of the torus)"),
    "integrator.method": ("rk4", "rk4 | euler"),
    "integrator.c_cfl": (None, "CFL constant (default 0.1/n)"),
    "integrator.dt": (None, "fixed step; null selects the automatic step"),
    "duration.steps": (None, "number of accepted steps"),
    "duration.t_end": (None, "alternatively: final time"),
    "monitor.every": (1, "CSV row every k accepted steps"),
    "monitor.probes": ([], "list of {x, R} weighted-energy probes"),
    "monitor.cutoff": (None, "{center, radius} cutoff for the probes"),
    "monitor.beta": (0, "index of the distinguished eigen-component"),
    "monitor.eps0": (0.05, "singular-candidate threshold (diagnostic)"),
    "monitor.singular_R": (0.1, "scale R for singular candidates"),
    "monitor.hamilton_T": (None, "virtual horizon T (default 2 t_end)"),
    "monitor.monotonicity": (None, "{x, R1, R2, t1, t2} trace; t2 may be \"end\""),
    "output.csv": ("series.csv", "CSV time series file name"),
    "output.report": ("report.json", "JSON summary file name"),
    "output.snapshot": ("final.hflw", "final snapshot file name (null to skip)"),
}


class ConfigError(ValueError):
    """Validation failure; ``line`` points into the JSON text when known."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass
class RunConfig:
    name: str = "run"
    geometry: str | None = None
    flow: str = "ym"
    shape: tuple = ()
    periods: tuple = ()
    ansatz: str = "random"
    seed: int = 0
    k_max: float = 2.0
    amplitude: float = 0.5
    higgs_amplitude: float | None = None
    width: float = 0.08
    center: tuple | None = None
    method: str = "rk4"
    c_cfl: float | None = None
    dt: float | None = None
    steps: int | None = None
    t_end: float | None = None
    every: int = 1
    probes: list = field(default_factory=list)
    cutoff: dict | None = None
    beta: int = 0
    eps0: float = 0.05
    singular_R: float = 0.1
    hamilton_T: float | None = None
    monotonicity: dict | None = None
    csv: str = "series.csv"
    report: str = "report.json"
    snapshot: str | None = "final.hflw"

    @property
    def n(self) -> int:
        return len(self.shape)

    @property
    def spec(self):
        return None if self.geometry is None else ext.CalibrationSpec.parse(self.geometry)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["shape"] = list(self.shape)
        d["periods"] = list(self.periods)
        return d


def _line_of(text: str | None, key: str):
    if not text:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _positive(v, key, text, integer=False, allow_none=False):
    if v is None and allow_none:
        return None
    ok = isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) and v > 0
    if integer:
        ok = ok and float(v).is_integer()
    if not ok:
        kind = "a positive integer" if integer else "a positive number"
        raise ConfigError(f"{key} must be {kind}, got {v!r}", _line_of(text, key.split(".")[-1]))
    return int(v) if integer else float(v)


def parse_config(obj: dict, text: str | None = None) -> RunConfig:
    """Validate a decoded JSON document and build a RunConfig."""
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object", 1)
    known = {k.split(".")[0] for k in CONFIG_KEYS}
    for k in obj:
        if k not in known:
            raise ConfigError(f"unknown key {k!r}", _line_of(text, k))
    sections = {}
    for sec in ("grid", "initial", "integrator", "duration", "monitor", "output"):
        sub = obj.get(sec, {})
        if not isinstance(sub, dict):
            raise ConfigError(f"{sec} must be an object", _line_of(text, sec))
        allowed = {k.split(".", 1)[1] for k in CONFIG_KEYS if k.startswith(sec + ".")}
        for k in sub:
            if k not in allowed:
                raise ConfigError(f"unknown key {sec}.{k}", _line_of(text, k))
        sections[sec] = sub

    cfg = RunConfig()
    cfg.name = str(obj.get("name", cfg.name))
    cfg.flow = obj.get("flow", "ym")
    if cfg.flow not in FLOW_KINDS:
        raise ConfigError(f"flow must be one of {sorted(FLOW_KINDS)}", _line_of(text, "flow"))
    cfg.geometry = obj.get("geometry")
    if cfg.geometry is not None:
        try:
            spec = ext.CalibrationSpec.parse(cfg.geometry)
            ext.build_calibration(spec)
        except Exception as exc:
            raise ConfigError(f"bad geometry {cfg.geometry!r}: {exc}", _line_of(text, "geometry")) from None

    g = sections["grid"]
    shape = g.get("shape")
    if not isinstance(shape, list) or not shape:
        raise ConfigError("grid.shape must be a non-empty list", _line_of(text, "shape") or _line_of(text, "grid"))
    cfg.shape = tuple(_positive(s, "grid.shape", text, integer=True) for s in shape)
    if any(s < 4 for s in cfg.shape):
        raise ConfigError("grid.shape entries must be >= 4", _line_of(text, "shape"))
    periods = g.get("periods") or [1.0] * len(cfg.shape)
    if len(periods) != len(cfg.shape):
        raise ConfigError("grid.periods must match grid.shape", _line_of(text, "periods"))
    cfg.periods = tuple(_positive(p, "grid.periods", text) for p in periods)
    if cfg.geometry is not None and cfg.spec.n != cfg.n:
        raise ConfigError(f"geometry {cfg.geometry} lives in dimension {cfg.spec.n}, grid has {cfg.n}",
                          _line_of(text, "geometry"))
    need = FLOW_KINDS[cfg.flow][1]
    if need is not None and need != cfg.n:
        raise ConfigError(f"flow {cfg.flow} needs a {need}-dimensional grid", _line_of(text, "flow"))

    ini = sections["initial"]
    cfg.ansatz = ini.get("ansatz", cfg.ansatz)
    if cfg.ansatz not in ANSATZE:
        raise ConfigError(f"initial.ansatz must be one of {ANSATZE}", _line_of(text, "ansatz"))
    seed = ini.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise ConfigError("initial.seed must be an unsigned 64-bit integer", _line_of(text, "seed"))
    cfg.seed = seed
    cfg.k_max = _positive(ini.get("k_max", cfg.k_max), "initial.k_max", text)
    amp = ini.get("amplitude", cfg.amplitude)
    if not isinstance(amp, (int, float)) or amp < 0:
        raise ConfigError("initial.amplitude must be >= 0", _line_of(text, "amplitude"))
    cfg.amplitude = float(amp)
    cfg.higgs_amplitude = ini.get("higgs_amplitude")
    if cfg.higgs_amplitude is not None and (not isinstance(cfg.higgs_amplitude, (int, float)) or cfg.higgs_amplitude < 0):
        raise ConfigError("initial.higgs_amplitude must be >= 0", _line_of(text, "higgs_amplitude"))
    cfg.width = _positive(ini.get("width", cfg.width), "initial.width", text)
    c = ini.get("center")
    if c is not None and (not isinstance(c, list) or len(c) != cfg.n):
        raise ConfigError("initial.center must list one coordinate per axis", _line_of(text, "center"))
    cfg.center = None if c is None else tuple(float(v) for v in c)
    if cfg.ansatz == "kahler_slice" and cfg.n % 2:
        raise ConfigError("kahler_slice needs an even-dimensional grid", _line_of(text, "ansatz"))

    it = sections["integrator"]
    cfg.method = it.get("method", "rk4")
    if cfg.method not in ("rk4", "euler"):
        raise ConfigError("integrator.method must be rk4 or euler", _line_of(text, "method"))
    cfg.c_cfl = _positive(it.get("c_cfl"), "integrator.c_cfl", text, allow_none=True)
    cfg.dt = _positive(it.get("dt"), "integrator.dt", text, allow_none=True)

    du = sections["duration"]
    cfg.steps = _positive(du.get("steps"), "duration.steps", text, integer=True, allow_none=True)
    cfg.t_end = _positive(du.get("t_end"), "duration.t_end", text, allow_none=True)
    if (cfg.steps is None) == (cfg.t_end is None):
        raise ConfigError("give exactly one of duration.steps and duration.t_end", _line_of(text, "duration"))

    mo = sections["monitor"]
    cfg.every = _positive(mo.get("every", 1), "monitor.every", text, integer=True)
    cfg.probes = []
    for p in mo.get("probes", []):
        if not isinstance(p, dict) or set(p) != {"x", "R"} or len(p["x"]) != cfg.n:
            raise ConfigError("each probe needs x (one coordinate per axis) and R", _line_of(text, "probes"))
        cfg.probes.append({"x": [float(v) for v in p["x"]], "R": _positive(p["R"], "monitor.probes.R", text)})
    cut = mo.get("cutoff")
    if cut is not None:
        if not isinstance(cut, dict) or set(cut) != {"center", "radius"} or len(cut["center"]) != cfg.n:
            raise ConfigError("cutoff needs center (one coordinate per axis) and radius", _line_of(text, "cutoff"))
        r = _positive(cut["radius"], "monitor.cutoff.radius", text)
        if r > 0.5 * min(cfg.periods) + 1e-12:
            raise ConfigError("cutoff radius exceeds half the minimal period", _line_of(text, "cutoff"))
        cfg.cutoff = {"center": [float(v) for v in cut["center"]], "radius": r}
    beta = mo.get("beta", 0)
    if not isinstance(beta, int) or beta < 0:
        raise ConfigError("monitor.beta must be a non-negative integer", _line_of(text, "beta"))
    if cfg.geometry is not None and beta >= len(ext.geometry_split(cfg.spec)):
        raise ConfigError("monitor.beta exceeds the number of eigen-components", _line_of(text, "beta"))
    cfg.beta = beta
    cfg.eps0 = _positive(mo.get("eps0", cfg.eps0), "monitor.eps0", text)
    cfg.singular_R = _positive(mo.get("singular_R", cfg.singular_R), "monitor.singular_R", text)
    cfg.hamilton_T = _positive(mo.get("hamilton_T"), "monitor.hamilton_T", text, allow_none=True)
    mono = mo.get("monotonicity")
    if mono is not None:
        keys = {"x", "R1", "R2", "t1", "t2"}
        if not isinstance(mono, dict) or set(mono) != keys or len(mono["x"]) != cfg.n:
            raise ConfigError("monotonicity needs x, R1, R2, t1, t2", _line_of(text, "monotonicity"))
        line = _line_of(text, "monotonicity")
        R1 = _positive(mono["R1"], "monitor.monotonicity.R1", text)
        R2 = _positive(mono["R2"], "monitor.monotonicity.R2", text)
        if not R2 <= R1 <= 1.0:
            raise ConfigError("monotonicity needs R2 <= R1 <= 1", line)
        t1 = mono["t1"]
        if not isinstance(t1, (int, float)) or isinstance(t1, bool) or t1 < 0:
            raise ConfigError("monotonicity.t1 must be >= 0", line)
        t2 = mono["t2"]
        if t2 != "end":
            t2 = _positive(t2, "monitor.monotonicity.t2", text)
            if t2 <= t1:
                raise ConfigError("monotonicity needs t2 > t1", line)
        cfg.monotonicity = dict(x=[float(v) for v in mono["x"]], R1=R1, R2=R2, t1=float(t1), t2=t2)

    out = sections["output"]
    for key in ("csv", "report", "snapshot"):
        if key in out:
            val = out[key]
            if val is not None and (not isinstance(val, str) or not val or "/" in val):
                raise ConfigError(f"output.{key} must be a plain file name", _line_of(text, key))
            setattr(cfg, key, val)
    if cfg.csv is None or cfg.report is None:
        raise ConfigError("output.csv and output.report cannot be null", _line_of(text, "output"))
    return cfg


def load_config(path) -> RunConfig:
    with open(path) as fh:
        text = fh.read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    return parse_config(obj, text)


def keys_help() -> str:
    width = max(len(k) for k in CONFIG_KEYS)
    lines = ["config keys (JSON; dotted names are nested objects):"]
    for k, (default, desc) in CONFIG_KEYS.items():
        lines.append(f"  {k.ljust(width)}  default {json.dumps(default)}: {desc}")
    return "\n".join(lines)
