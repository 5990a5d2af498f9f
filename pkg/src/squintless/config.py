"""Experiment configuration with INI (de)serialization.

All parameters live in one flat dataclass; each field belongs to an INI
section (``geometry``, ``array``, ``band``, ``run``, ``sgda``, ``pso``).
Floats are written with ``repr`` so a save/load cycle is exact. Optional
step sizes use the literal ``auto`` for "derive from the problem".
"""

from __future__ import annotations

import configparser
import dataclasses
import io
import math
from dataclasses import dataclass, field, fields

from .alg_sgda import InnerStop, SgdaParams
from .alg_sv import StoppingRule
from .baselines import PsoParams
from .channel import SPEED_OF_LIGHT, ArrayConfig, FrequencyGrid, UserGeometry

ALGORITHMS = ("sv", "sgda", "pso", "fpa")
SV_BACKENDS = ("conic", "slsqp")
AUTO = "auto"

_F0 = 58.92e9
_FL = 61.08e9
_FC = 60e9


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending parameter."""

    def __init__(self, field_name: str, msg: str):
        super().__init__(f"{field_name}: {msg}")
        self.field = field_name


def _f(section, default, **kw):
    return field(default=default, metadata={"section": section, **kw})


@dataclass(frozen=True)
class ExperimentConfig:
    theta0: float = _f("geometry", math.pi / 6)
    phi0: float = _f("geometry", math.pi / 4)
    r0: float = _f("geometry", 10.0)

    m_count: int = _f("array", 16)
    aperture: float = _f("array", 100 * SPEED_OF_LIGHT / _FC)
    d_min: float = _f("array", SPEED_OF_LIGHT / (2 * _F0))

    f_lo: float = _f("band", _F0)
    f_hi: float = _f("band", _FL)
    l_count: int = _f("band", 256)
    f_center: float = _f("band", _FC)

    algorithm: str = _f("run", "sv")
    seed: int = _f("run", 0)
    out: str = _f("run", "out")
    max_iters: int = _f("run", 200)
    rel_tol: float = _f("run", 1e-6)
    sv_backend: str = _f("run", "conic")

    p_s: float = _f("sgda", 2.0)
    eta_t: float | None = _f("sgda", None)
    eta_f: float | None = _f("sgda", None)
    eta_alpha: float = _f("sgda", 0.5)
    inner_step_tol: float | None = _f("sgda", None)
    inner_patience: int = _f("sgda", 10)
    inner_max_iters: int = _f("sgda", 2000)

    swarm_size: int = _f("pso", 50)
    inertia: float = _f("pso", 0.7)
    cognitive: float = _f("pso", 1.5)
    social: float = _f("pso", 1.5)
    pso_max_iters: int = _f("pso", 500)
    penalty_weight: float = _f("pso", 1e6)
    pso_init: str = _f("pso", "random")

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float) and not math.isfinite(v) and f.name != "rel_tol":
                raise ConfigError(f.name, f"must be finite, got {v!r}")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError("algorithm", f"must be one of {', '.join(ALGORITHMS)}, got {self.algorithm!r}")
        if self.sv_backend not in SV_BACKENDS:
            raise ConfigError("sv_backend", f"must be one of {', '.join(SV_BACKENDS)}, got {self.sv_backend!r}")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")
        if self.max_iters < 1:
            raise ConfigError("max_iters", "must be >= 1")
        if self.inner_patience < 1:
            raise ConfigError("inner_patience", "must be >= 1")
        if self.inner_max_iters < 1:
            raise ConfigError("inner_max_iters", "must be >= 1")
        if self.pso_max_iters < 0:
            raise ConfigError("pso_max_iters", "must be >= 0")
        if self.inner_step_tol is not None and not self.inner_step_tol > 0:
            raise ConfigError("inner_step_tol", "must be positive")
        if not self.f_lo <= self.f_center <= self.f_hi:
            raise ConfigError("f_center", "must lie inside [f_lo, f_hi]")
        # delegate the remaining checks to the domain objects
        for names, build in (
            (("theta0", "phi0", "r0"), lambda: self.geometry()),
            (("m_count", "aperture", "d_min"), lambda: self.array()),
            (("f_lo", "f_hi", "l_count"), lambda: self.grid()),
            (("p_s", "eta_t", "eta_f", "eta_alpha"), lambda: self.sgda_params()),
            (("swarm_size", "inertia", "cognitive", "social", "penalty_weight", "pso_init"),
             lambda: self.pso_params()),
        ):
            try:
                build()
            except ValueError as exc:
                msg = str(exc)
                named = [n for n in names if n in msg]
                raise ConfigError(named[0] if named else "/".join(names), msg) from None

    # domain objects

    def geometry(self) -> UserGeometry:
        return UserGeometry(self.theta0, self.phi0, self.r0)

    def array(self) -> ArrayConfig:
        return ArrayConfig(self.m_count, self.aperture, self.d_min)

    def grid(self) -> FrequencyGrid:
        return FrequencyGrid(self.f_lo, self.f_hi, self.l_count, self.f_center)

    def stopping_rule(self) -> StoppingRule:
        return StoppingRule(self.rel_tol, self.max_iters)

    def sgda_params(self) -> SgdaParams:
        return SgdaParams(
            p_s=self.p_s, eta_t=self.eta_t, eta_f=self.eta_f, eta_alpha=self.eta_alpha,
            inner_stop=InnerStop(self.inner_step_tol, self.inner_patience, self.inner_max_iters),
            seed=self.seed,
        )

    def pso_params(self) -> PsoParams:
        return PsoParams(
            swarm_size=self.swarm_size, inertia=self.inertia, cognitive=self.cognitive,
            social=self.social, max_iters=self.pso_max_iters,
            penalty_weight=self.penalty_weight, seed=self.seed, init=self.pso_init,
        )

    # serialization

    def replace(self, **changes) -> "ExperimentConfig":
        unknown = set(changes) - {f.name for f in fields(self)}
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown parameter")
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        for f in fields(self):
            sec = f.metadata["section"]
            if not cp.has_section(sec):
                cp.add_section(sec)
            cp.set(sec, f.name, _format(getattr(self, f.name)))
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str, base: "ExperimentConfig | None" = None) -> "ExperimentConfig":
        """Parse INI text; keys absent from ``text`` keep the ``base`` values."""
        cp = configparser.ConfigParser(interpolation=None)
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError("<file>", f"malformed config: {exc}") from None
        by_name = {f.name: f for f in fields(cls)}
        changes = {}
        for sec in cp.sections():
            for key, raw in cp.items(sec):
                f = by_name.get(key)
                if f is None or f.metadata["section"] != sec:
                    raise ConfigError(f"{sec}.{key}", "unknown parameter")
                changes[key] = parse_value(f, raw)
        return (base or cls()).replace(**changes)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_ini(fh.read())

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_ini())


def _format(v) -> str:
    if v is None:
        return AUTO
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _kind(f: dataclasses.Field):
    t = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
    return t.split(" ")[0], "None" in t


def parse_value(f: dataclasses.Field, raw: str):
    """Convert the string ``raw`` to the type of field ``f``."""
    kind, optional = _kind(f)
    raw = raw.strip()
    if optional and raw.lower() in (AUTO, "none", ""):
        return None
    try:
        if kind == "int":
            return int(raw, 0)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f.name, f"expected {kind}, got {raw!r}") from None
    return raw


def field_by_name(name: str) -> dataclasses.Field:
    for f in fields(ExperimentConfig):
        if f.name == name:
            return f
    raise KeyError(name)
