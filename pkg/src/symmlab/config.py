"""Case configuration: a flat TOML table of scalar keys.

Keys (all dimensionless):

    case            case identifier used for output file names
    domain          disk | ellipse | perturbed_ball | square | mesh_file
    radius          disk / perturbed-ball radius
    a, b            ellipse semi-axes (or give ``eccentricity`` e: a = e, b = 1/e)
    amplitude, mode perturbed-ball boundary r = radius (1 + amplitude cos(mode theta))
    side            square side length
    mesh_file       path of a mesh file (implies N = 2)
    n_boundary      vertices of the boundary polygon
    p, N            exponent and dimension (meshes are planar: N = 2)
    f               nonlinearity, e.g. "const:1.0", "step:2.0@0:1.0@0.1", "affine:1,0.5"
    phi, s          optional comparison pair for p < N
    trace_constant  optional user-supplied trace constant
    h               target mesh size; a second solve at h/sqrt(2) gives the consistency delta
    tol_solver      outer fixed-point tolerance (max norm)
    tol_D           floor for the D tolerance
    eps_pipeline    bound-check slack as a multiple of M (absolute slack = eps_pipeline * M)
    tol_diag        relative tolerance for the divergence and Pohozaev identities
    n_levels        number of levels in the reported level curves
    omega           fixed-point damping
    output_dir      directory for mesh, solution, profile and report files
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from typing import Optional

import tomli
import tomli_w

DOMAIN_KINDS = ("disk", "ellipse", "perturbed_ball", "square", "mesh_file")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CaseConfig:
    case: str = "case"
    domain: str = "disk"
    radius: float = 1.0
    a: Optional[float] = None
    b: Optional[float] = None
    eccentricity: Optional[float] = None
    amplitude: float = 0.0
    mode: int = 3
    side: float = 1.0
    mesh_file: Optional[str] = None
    n_boundary: int = 4096
    p: float = 2.0
    N: int = 2
    f: str = "const:1.0"
    phi: Optional[str] = None
    s: Optional[float] = None
    trace_constant: Optional[float] = None
    h: float = 0.05
    tol_solver: float = 1e-9
    tol_D: float = 1e-6
    eps_pipeline: float = 1e-3
    tol_diag: float = 0.25
    n_levels: int = 256
    omega: float = 0.5
    output_dir: Optional[str] = None

    def __post_init__(self):
        if self.domain not in DOMAIN_KINDS:
            raise ConfigError(f"domain must be one of {DOMAIN_KINDS}, got {self.domain!r}")
        if self.domain == "mesh_file" and not self.mesh_file:
            raise ConfigError("domain = 'mesh_file' needs the mesh_file key")
        if self.domain == "ellipse" and self.eccentricity is None and (self.a is None or self.b is None):
            raise ConfigError("ellipse needs a and b, or eccentricity")
        if not self.p > 1:
            raise ConfigError("p must exceed 1")
        if self.N != 2:
            raise ConfigError("meshes are planar: N must be 2")
        for key in ("h", "tol_solver", "tol_D", "eps_pipeline", "tol_diag", "omega"):
            val = getattr(self, key)
            if not (isinstance(val, (int, float)) and val > 0 and math.isfinite(val)):
                raise ConfigError(f"{key} must be a positive number")
        if self.omega > 1:
            raise ConfigError("omega must lie in (0, 1]")
        if self.n_levels < 64:
            raise ConfigError("n_levels must be at least 64")
        if (self.phi is None) != (self.s is None):
            raise ConfigError("phi and s must be given together")

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self) if getattr(self, f.name) is not None}

    def dumps(self):
        return tomli_w.dumps(self.to_dict())


_FIELDS = {f.name: f for f in fields(CaseConfig)}
_INT_KEYS = {"mode", "n_boundary", "N", "n_levels"}
_STR_KEYS = {"case", "domain", "mesh_file", "f", "phi", "output_dir"}


def _coerce(key, val):
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    if isinstance(val, (dict, list)):
        raise ConfigError(f"config key {key!r} must be a scalar")
    if key in _STR_KEYS:
        return str(val)
    if key in _INT_KEYS:
        if isinstance(val, float) and not val.is_integer():
            raise ConfigError(f"{key} must be an integer")
        return int(val)
    if isinstance(val, bool) or not isinstance(val, (int, float, str)):
        raise ConfigError(f"{key} must be numeric")
    try:
        return float(val)
    except ValueError as exc:
        raise ConfigError(f"{key} must be numeric") from exc


def from_dict(d):
    return CaseConfig(**{k: _coerce(k, v) for k, v in d.items()})


def loads(text):
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"invalid config: {exc}") from exc
    return from_dict(data)


def load(path):
    with open(path, "rb") as fh:
        try:
            data = tomli.load(fh)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return from_dict(data)


def parse_sweep(spec):
    """``key=v1,v2,...`` -> (key, [values]) with values coerced to the key's type."""
    key, sep, body = spec.partition("=")
    key = key.strip()
    if not sep:
        raise ConfigError("sweep must look like key=v1,v2,...")
    items = [x.strip() for x in body.split(",") if x.strip()]
    if not items:
        raise ConfigError("empty sweep list")
    vals = []
    for item in items:
        if key in _STR_KEYS:
            vals.append(item)
        else:
            try:
                num = float(item)
            except ValueError as exc:
                raise ConfigError(f"sweep value {item!r} is not numeric") from exc
            vals.append(_coerce(key, num))
    return key, vals
