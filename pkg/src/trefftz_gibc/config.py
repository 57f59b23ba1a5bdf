"""Run configuration stored as an INI file.

Schema (section.key = default)::

    [problem]  k = 8.0, a = 0.5, R = 1.0, p = 7,
               incident_angle = 0.0, amplitude = (1+0j), M_exact = 40
    [mesh]     h = 0.1, n_theta = 0, n_r = 0   (explicit counts win when > 0)
    [gamma]    mode = dirichlet | gibc
               beta_kind = constant | two-constant piecewise
               beta = (1-0.5j), beta2 = (1-0.5j), lam = 1j, lam2 = 1j,
               split0 = 0.0, split1 = 3.14159...
               representation = fem | trig, H = 0.0245..., P = 1, M_gamma = 40
    [sigma]    kind = ExactNtD | ABC0 | ABC1 | ABC2 | ABC3, M = 13
    [flux]     alpha1 = 0.5, alpha2 = 0.5, delta = 0.5, tau = 0.5, tau_d = 0.5
    [output]   csv, field_csv, metadata  (empty = not written)
               field_nr = 20, field_ntheta = 128
    [sweep]    h_list = 0.4, 0.2, 0.1, 0.05
               variants = ABC0, ABC1, ABC2, ABC3, ExactNtD
    [run]      seed = 0

Floats are written with ``repr`` so that parsing an emitted file gives back
exactly the same configuration.
"""

import configparser
import dataclasses
import io
import math
from dataclasses import dataclass, field, fields

from .boundary import ABC_VARIANTS

__all__ = ["RunConfig", "ConfigError", "SIGMA_KINDS", "GAMMA_MODES"]

SIGMA_KINDS = ABC_VARIANTS + ("ExactNtD",)
GAMMA_MODES = ("dirichlet", "gibc")
BETA_KINDS = ("constant", "two-constant piecewise")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # problem
    k: float = field(default=8.0, metadata={"section": "problem"})
    a: float = field(default=0.5, metadata={"section": "problem"})
    R: float = field(default=1.0, metadata={"section": "problem"})
    p: int = field(default=7, metadata={"section": "problem"})
    incident_angle: float = field(default=0.0, metadata={"section": "problem"})
    amplitude: complex = field(default=1 + 0j, metadata={"section": "problem"})
    M_exact: int = field(default=40, metadata={"section": "problem"})
    # mesh
    h: float = field(default=0.1, metadata={"section": "mesh"})
    n_theta: int = field(default=0, metadata={"section": "mesh"})
    n_r: int = field(default=0, metadata={"section": "mesh"})
    # inner circle
    mode: str = field(default="dirichlet", metadata={"section": "gamma"})
    beta_kind: str = field(default="constant", metadata={"section": "gamma"})
    beta: complex = field(default=1 - 0.5j, metadata={"section": "gamma"})
    beta2: complex = field(default=1 - 0.5j, metadata={"section": "gamma"})
    lam: complex = field(default=1j, metadata={"section": "gamma"})
    lam2: complex = field(default=1j, metadata={"section": "gamma"})
    split0: float = field(default=0.0, metadata={"section": "gamma"})
    split1: float = field(default=math.pi, metadata={"section": "gamma"})
    representation: str = field(default="fem", metadata={"section": "gamma"})
    H: float = field(default=2 * math.pi * 0.5 / 128, metadata={"section": "gamma"})
    P: int = field(default=1, metadata={"section": "gamma"})
    M_gamma: int = field(default=40, metadata={"section": "gamma"})
    # outer circle
    kind: str = field(default="ABC3", metadata={"section": "sigma"})
    M: int = field(default=13, metadata={"section": "sigma"})
    # flux
    alpha1: float = field(default=0.5, metadata={"section": "flux"})
    alpha2: float = field(default=0.5, metadata={"section": "flux"})
    delta: float = field(default=0.5, metadata={"section": "flux"})
    tau: float = field(default=0.5, metadata={"section": "flux"})
    tau_d: float = field(default=0.5, metadata={"section": "flux"})
    # output
    csv: str = field(default="", metadata={"section": "output"})
    field_csv: str = field(default="", metadata={"section": "output"})
    metadata: str = field(default="", metadata={"section": "output"})
    field_nr: int = field(default=20, metadata={"section": "output"})
    field_ntheta: int = field(default=128, metadata={"section": "output"})
    # sweep
    h_list: tuple = field(default=(0.4, 0.2, 0.1, 0.05), metadata={"section": "sweep"})
    variants: tuple = field(default=SIGMA_KINDS, metadata={"section": "sweep"})
    # run
    seed: int = field(default=0, metadata={"section": "run"})

    def __post_init__(self):
        self.validate()

    # ------------------------------------------------------------------
    def validate(self):
        if not (self.R > self.a > 0):
            raise ConfigError(f"need R > a > 0 (a={self.a}, R={self.R})")
        if not self.k > 0:
            raise ConfigError("k must be positive")
        if int(self.p) != self.p or self.p < 4:
            raise ConfigError("p must be an integer >= 4")
        if self.n_theta == 0 and not self.h > 0:
            raise ConfigError("give a positive h or explicit n_theta/n_r")
        if (self.n_theta > 0) != (self.n_r > 0):
            raise ConfigError("n_theta and n_r must be given together")
        if self.mode not in GAMMA_MODES:
            raise ConfigError(f"gamma mode must be one of {GAMMA_MODES}")
        if self.beta_kind not in BETA_KINDS:
            raise ConfigError(f"beta_kind must be one of {BETA_KINDS}")
        if self.representation not in ("fem", "trig"):
            raise ConfigError("representation must be fem or trig")
        if self.kind not in SIGMA_KINDS:
            raise ConfigError(f"sigma kind must be one of {SIGMA_KINDS}")
        for v in self.variants:
            if v not in SIGMA_KINDS:
                raise ConfigError(f"unknown sweep variant {v!r}")
        for name in ("alpha1", "alpha2", "delta", "tau", "tau_d"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"flux parameter {name} must be positive")
        if self.M < 0 or self.M_exact < 0 or self.P < 1 or self.H <= 0:
            raise ConfigError("M, M_exact >= 0, P >= 1 and H > 0 required")
        if any(h <= 0 for h in self.h_list):
            raise ConfigError("h_list entries must be positive")

    def grid(self, h=None):
        """(n_theta, n_r) for the structured mesh."""
        if h is None and self.n_theta > 0:
            return self.n_theta, self.n_r
        h = self.h if h is None else h
        n_theta = max(8, math.ceil(2 * math.pi * self.R / h - 1e-9))
        n_r = max(2, math.ceil((self.R - self.a) / h - 1e-9))
        return n_theta, n_r

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    # INI round trip ------------------------------------------------------
    def to_ini(self):
        cp = configparser.ConfigParser()
        cp.optionxform = str
        for f in fields(self):
            sec = f.metadata["section"]
            if not cp.has_section(sec):
                cp.add_section(sec)
            cp.set(sec, f.name, _emit(getattr(self, f.name)))
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_ini())

    @classmethod
    def from_ini(cls, text, overrides=None):
        cp = configparser.ConfigParser()
        cp.optionxform = str
        cp.read_string(text)
        values = {}
        known = {f.name: f for f in fields(cls)}
        for sec in cp.sections():
            for key, raw in cp.items(sec):
                if key not in known:
                    raise ConfigError(f"unknown key [{sec}] {key}")
                if known[key].metadata["section"] != sec:
                    raise ConfigError(f"key {key} belongs in [{known[key].metadata['section']}]")
                values[key] = raw
        for item in overrides or ():
            key, _, raw = item.partition("=")
            key = key.strip().split(".")[-1]
            if key not in known:
                raise ConfigError(f"unknown override key {key!r}")
            values[key] = raw.strip()
        parsed = {}
        for key, raw in values.items():
            parsed[key] = _parse(known[key], raw)
        return cls(**parsed)

    @classmethod
    def read(cls, path, overrides=None):
        with open(path) as fh:
            return cls.from_ini(fh.read(), overrides)

    def as_dict(self):
        return {f.name: _jsonable(getattr(self, f.name)) for f in fields(self)}


def _emit(v):
    if isinstance(v, tuple):
        return ", ".join(x if isinstance(x, str) else repr(x) for x in v)
    if isinstance(v, str):
        return v
    return repr(v)


def _parse(f, raw):
    typ = f.type if isinstance(f.type, type) else {"float": float, "int": int, "complex": complex,
                                                     "str": str, "tuple": tuple}[f.type]
    try:
        if typ is tuple:
            items = [x.strip() for x in raw.split(",") if x.strip()]
            if f.name == "h_list":
                return tuple(float(x) for x in items)
            return tuple(items)
        if typ is complex:
            return complex(raw.replace(" ", ""))
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"cannot parse {f.name} = {raw!r}: {exc}") from exc


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, tuple):
        return list(v)
    return v
