"""Flat dotted key-value configuration (``grid.nr = 256``)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .evolve import EvolveOptions
from .grid import GridError, GridSpec
from .profile import ProfileError, WaveParams, make_profile
from .solver import SolveOptions


class ConfigError(ValueError):
    pass


def _bool(s: str) -> bool:
    low = s.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _float_or_auto(s: str):
    return None if s.lower() == "auto" else float(s)


# key -> (parser, default)
SCHEMA = {
    "grid.nr": (int, 256),
    "grid.nz": (int, 256),
    "grid.Lr": (float, 20.0),
    "grid.Lz": (float, 20.0),
    "wave.c": (float, 1.0),
    "wave.k": (float, 0.1),
    "profile.kind": (str, "bump"),
    "profile.a": (float, 0.0),
    "profile.b": (float, 1.0),
    "profile.amp": (_float_or_auto, None),
    "solver.max_iters": (int, 5000),
    "solver.step0": (float, 1.0),
    "solver.backtrack": (float, 0.5),
    "solver.grad_tol": (float, 1e-5),
    "solver.residual_tol": (float, 1e-4),
    "solver.steiner_every": (int, 5),
    "init.r0": (float, 5.0),
    "init.A": (_float_or_auto, None),
    "init.sigma": (float, 2.0),
    "init.ladder": (int, 5),
    "evolve.T": (_float_or_auto, None),
    "evolve.cfl": (float, 0.5),
    "evolve.dealias": (_bool, True),
    "evolve.snapshot_every": (float, 0.25),
    "output.dir": (str, "sqgw_out"),
    "seed": (int, 0),
}


@dataclass
class Config:
    values: dict = field(default_factory=lambda: {k: d for k, (_, d) in SCHEMA.items()})
    source: str = "<defaults>"
    lines: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    @property
    def grid(self) -> GridSpec:
        v = self.values
        return GridSpec(v["grid.nr"], v["grid.nz"], v["grid.Lr"], v["grid.Lz"])

    @property
    def wave(self) -> WaveParams:
        return WaveParams(self.values["wave.c"], self.values["wave.k"])

    @property
    def profile(self):
        v = self.values
        return make_profile(v["profile.kind"], v["profile.a"], v["profile.b"], v["profile.amp"])

    @property
    def solve_options(self) -> SolveOptions:
        v = self.values
        return SolveOptions(max_iters=v["solver.max_iters"], step0=v["solver.step0"],
                            backtrack=v["solver.backtrack"], grad_tol=v["solver.grad_tol"],
                            residual_tol=v["solver.residual_tol"], steiner_every=v["solver.steiner_every"])

    def evolve_options(self, T: float | None = None, cfl: float | None = None) -> EvolveOptions:
        v = self.values
        T = T if T is not None else v["evolve.T"]
        if T is None:
            T = 2.0 / v["wave.c"]
        return EvolveOptions(T=T, cfl=cfl if cfl is not None else v["evolve.cfl"],
                             dealias=v["evolve.dealias"], snapshot_every=min(v["evolve.snapshot_every"], T))

    def resolved(self) -> dict:
        """Fully resolved values for report echo (auto entries replaced)."""
        out = dict(self.values)
        out["profile.amp"] = self.profile.amp
        if out["init.A"] is None:
            out["init.A"] = 3.0 * (out["wave.c"] * out["init.r0"] + out["wave.k"])
        if out["evolve.T"] is None:
            out["evolve.T"] = 2.0 / out["wave.c"]
        return out

    def _where(self, section: str) -> str:
        """Source position of the first key of a section (or just the source for defaults)."""
        hits = sorted(n for k, n in self.lines.items() if k.startswith(section + "."))
        return f"{self.source}:{hits[0]}" if hits else self.source

    def _init_check(self) -> None:
        v = self.values
        if not (v["init.r0"] > 0 and v["init.sigma"] > 0):
            raise ValueError("init.r0 and init.sigma must be positive")
        if v["init.ladder"] < 0:
            raise ValueError("init.ladder must be non-negative")

    def validate(self) -> None:
        checks = (("grid", lambda: self.grid.validate()), ("wave", lambda: self.wave),
                  ("profile", lambda: self.profile), ("solver", lambda: self.solve_options),
                  ("evolve", lambda: self.evolve_options()), ("init", self._init_check))
        for section, check in checks:
            try:
                check()
            except (GridError, ProfileError, ValueError) as exc:
                raise ConfigError(f"{self._where(section)}: [{section}] {exc}") from exc


def parse_config(text: str, source: str = "<string>") -> Config:
    cfg = Config(source=source)
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r} (first set on line {seen[key]})")
        parser = SCHEMA[key][0]
        try:
            val = parser(value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
        if isinstance(val, float) and not math.isfinite(val):
            raise ConfigError(f"{source}:{lineno}: {key} must be finite")
        cfg.values[key] = val
        seen[key] = lineno
    cfg.lines = dict(seen)
    cfg.validate()
    return cfg


def load_config(path) -> Config:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))


def dump_config(values: dict) -> str:
    return "".join(f"{k} = {'auto' if v is None else v}\n" for k, v in values.items())
