"""YAML run configuration with located diagnostics and a resolved echo.

Layout (units in comments)::

    seed: 0                     # unsigned 64-bit master seed
    model:
      alpha: 1.0                # activity decay rate, 1/time
      epsilon: 0.3              # connectivity, dimensionless
      horizon: 2.0              # time
    network:
      n_neurons: 200
      snapshot_grid: 100        # number of equally spaced snapshot times on [0, horizon]
      window: null              # thinning window (time); null = min(0.1/alpha, 1)
      max_events: 10000000
    g0: {kind: uniform, lo: 0.0, hi: 1.0}       # initial ages, time
    m0: {kind: dirac, value: 1.0}                # initial activity
    intensity: {family: pure_power, xi: 1.0}     # rate, 1/time
    delay: {kind: dirac, tau: 0.1}               # time
    pde: {dx: 0.001, dt: null, x_max: null, picard_tol: 1.0e-10, max_iters: 200, damping: 1.0, density_rows: 101}
    chaos: {n_list: [50, 200], replicas: null, three_times: false, workers: 1, snapshot_grid: 13}
    validate: {x_max: 10.0, m_max: 5.0, nx: 201, nm: 51}

Only ``model``, ``g0``, ``m0`` and ``intensity`` are required.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import yaml

from . import delays, engine, intensity, laws, pde


class ConfigError(ValueError):
    pass


SECTIONS = ("seed", "model", "network", "g0", "m0", "intensity", "delay", "pde", "chaos", "validate")
REQUIRED = ("model", "g0", "m0", "intensity")

NETWORK_DEFAULTS = {"n_neurons": 100, "snapshot_grid": 100, "window": None, "max_events": 10_000_000}
PDE_DEFAULTS = {f.name: f.default for f in dataclasses.fields(pde.PDEGrid)}
CHAOS_DEFAULTS = {"n_list": [50, 200, 800, 3200], "replicas": None, "three_times": False, "workers": 1,
                  "snapshot_grid": 13}
VALIDATE_DEFAULTS = {"x_max": 10.0, "m_max": 5.0, "nx": 201, "nm": 51}


@dataclass
class RunConfig:
    seed: int
    network: engine.NetworkConfig
    grid: pde.PDEGrid
    chaos: dict = field(default_factory=dict)
    validate: dict = field(default_factory=dict)

    def with_seed(self, seed: int) -> "RunConfig":
        return dataclasses.replace(self, seed=int(seed), network=dataclasses.replace(self.network, seed=int(seed)))

    def with_network(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, network=dataclasses.replace(self.network, **kw))

    def to_dict(self) -> dict:
        """Fully resolved echo; ``parse(yaml.safe_dump(cfg.to_dict()))`` gives an equal config."""
        n = self.network
        return {
            "seed": self.seed,
            "model": {"alpha": n.alpha, "epsilon": n.epsilon, "horizon": n.horizon},
            "network": {"n_neurons": n.n_neurons, "snapshot_grid": n.snapshot_grid, "window": n.window,
                        "max_events": n.max_events},
            "g0": laws.to_dict(n.g0),
            "m0": laws.to_dict(n.m0),
            "intensity": intensity.to_dict(n.intensity),
            "delay": delays.to_dict(n.delay),
            "pde": dataclasses.asdict(self.grid),
            "chaos": dict(self.chaos),
            "validate": dict(self.validate),
        }


def _lines(node, prefix=""):
    """Map dotted key paths to 1-based line numbers from a composed YAML tree."""
    out = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = f"{prefix}{k.value}"
            out[path] = k.start_mark.line + 1
            out.update(_lines(v, path + "."))
    return out


class _Located:
    def __init__(self, lines, source):
        self.lines = lines
        self.source = source

    def error(self, path, msg):
        line = self.lines.get(path)
        while line is None and "." in path:
            path = path.rsplit(".", 1)[0]
            line = self.lines.get(path)
        where = f"{self.source}:{line}" if line else self.source
        return ConfigError(f"{where}: {msg}")


def _section(raw, name, defaults, loc):
    got = raw.get(name) or {}
    if not isinstance(got, dict):
        raise loc.error(name, f"section {name!r} must be a mapping")
    unknown = sorted(set(got) - set(defaults))
    if unknown:
        raise loc.error(f"{name}.{unknown[0]}", f"unknown key {name}.{unknown[0]}")
    out = dict(defaults)
    out.update(got)
    return out


def _float_or_none(v):
    return None if v is None else float(v)


def parse(text: str, source: str = "<config>") -> RunConfig:
    try:
        tree = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f"{source}:{mark.line + 1}" if mark is not None else source
        raise ConfigError(f"{where}: YAML syntax error: {getattr(e, 'problem', e)}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    loc = _Located(_lines(tree), source)

    unknown = sorted(set(raw) - set(SECTIONS))
    if unknown:
        raise loc.error(unknown[0], f"unknown top-level key {unknown[0]!r}")
    for name in REQUIRED:
        if name not in raw:
            raise loc.error("", f"missing required key {name!r}")

    model = raw["model"]
    if not isinstance(model, dict):
        raise loc.error("model", "section 'model' must be a mapping")
    for key in ("alpha", "epsilon", "horizon"):
        if key not in model:
            raise loc.error("model", f"missing required key 'model.{key}'")
    net = _section(raw, "network", NETWORK_DEFAULTS, loc)
    grid_d = _section(raw, "pde", PDE_DEFAULTS, loc)
    chaos = _section(raw, "chaos", CHAOS_DEFAULTS, loc)
    val = _section(raw, "validate", VALIDATE_DEFAULTS, loc)

    def build(path, fn, arg):
        if not isinstance(arg, dict):
            raise loc.error(path, f"section {path!r} must be a mapping")
        try:
            return fn(arg)
        except KeyError as e:
            raise loc.error(path, f"missing key '{path}.{e.args[0]}'") from None
        except (ValueError, TypeError) as e:
            msg = str(e)
            if "family is required" in msg:
                msg = f"missing required key '{path}.family'"
            else:
                msg = f"{path}: {msg}"
            raise loc.error(path, msg) from None

    g0 = build("g0", laws.from_dict, raw["g0"])
    m0 = build("m0", laws.from_dict, raw["m0"])
    rate = build("intensity", intensity.from_dict, raw["intensity"])
    delay = build("delay", delays.from_dict, raw.get("delay") or {"kind": "dirac", "tau": 0.0})
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise loc.error("seed", f"seed must be an unsigned 64-bit integer, got {seed!r}")

    try:
        network = engine.NetworkConfig(
            n_neurons=int(net["n_neurons"]),
            alpha=float(model["alpha"]),
            epsilon=float(model["epsilon"]),
            horizon=float(model["horizon"]),
            g0=g0, m0=m0, intensity=rate, delay=delay, seed=seed,
            snapshot_grid=int(net["snapshot_grid"]),
            window=_float_or_none(net["window"]),
            max_events=int(net["max_events"]),
        )
    except (ValueError, TypeError) as e:
        raise loc.error("model", str(e)) from None
    try:
        grid = pde.PDEGrid(
            dx=float(grid_d["dx"]), dt=_float_or_none(grid_d["dt"]), x_max=_float_or_none(grid_d["x_max"]),
            picard_tol=float(grid_d["picard_tol"]), max_iters=int(grid_d["max_iters"]),
            damping=float(grid_d["damping"]), density_rows=int(grid_d["density_rows"]),
        )
    except (ValueError, TypeError) as e:
        raise loc.error("pde", str(e)) from None
    chaos["n_list"] = [int(n) for n in chaos["n_list"]]
    for k in ("x_max", "m_max"):
        val[k] = float(val[k])
    for k in ("nx", "nm"):
        val[k] = int(val[k])
    return RunConfig(seed=seed, network=network, grid=grid, chaos=chaos, validate=val)


def load(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    return parse(text, str(path))
