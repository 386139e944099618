"""Vehicle parameters and their on-disk format.

Parameter files are YAML documents with a ``format``/``version`` header, scalar
physical constants and a list of surface blocks.  See
``data/edge540-24in.params`` for the annotated default.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError
from .rotations import euler_to_rotation

FORMAT_NAME = "poststall-params"
FORMAT_VERSION = 1
DEFAULT_PARAMS = "edge540-24in.params"

# Channel names for the four deflection states, in state order.
ACTUATORS = ("aileron_right", "aileron_left", "elevator", "rudder")


def _frozen_array(values, shape=None) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if shape is not None and arr.shape != shape:
        raise ConfigError(f"expected shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class AeroSurface:
    """One flat-plate aerodynamic surface.

    ``mount`` holds the z-y-x Euler angles of the surface frame relative to the
    body frame.  ``chord_offset`` is the signed distance from the hinge to the
    centre of pressure along the surface chord (negative = behind the hinge).
    """

    name: str
    area: float
    mount: tuple = (0.0, 0.0, 0.0)
    hinge: tuple = (0.0, 0.0, 0.0)
    chord_offset: float = 0.0
    backwash_gain: float = 0.0
    actuation: int | None = None

    def __post_init__(self):
        if not self.area > 0:
            raise ConfigError(f"surface {self.name!r}: area must be positive")
        if self.backwash_gain < 0:
            raise ConfigError(f"surface {self.name!r}: backwash_gain must be >= 0")
        if self.actuation is not None and self.actuation not in range(4):
            raise ConfigError(f"surface {self.name!r}: actuation index out of range")
        object.__setattr__(self, "mount", tuple(float(a) for a in self.mount))
        object.__setattr__(self, "hinge", tuple(float(a) for a in self.hinge))

    @property
    def mount_rotation(self) -> np.ndarray:
        """Rotation taking body-frame vectors into the (undeflected) surface frame."""
        return euler_to_rotation(np.array(self.mount)).T

    @property
    def hinge_offset(self) -> np.ndarray:
        return np.array(self.hinge)


@dataclass(frozen=True, eq=False)
class AircraftParams:
    mass: float
    inertia: np.ndarray
    surfaces: tuple
    rho: float = 1.225
    disk_area: float = 0.0249
    thrust_mount: tuple = (0.0, 0.0, 0.0)
    thrust_a: float = -4.9167
    thrust_b: float = 9.6466
    gravity: float = 9.81
    prop_offset: tuple = (0.0, 0.0, 0.0)
    illustrative_geometry: bool = field(default=True, compare=False)

    def __post_init__(self):
        inertia = _frozen_array(self.inertia, (3, 3))
        object.__setattr__(self, "inertia", inertia)
        object.__setattr__(self, "surfaces", tuple(self.surfaces))
        object.__setattr__(self, "thrust_mount", tuple(map(float, self.thrust_mount)))
        object.__setattr__(self, "prop_offset", tuple(map(float, self.prop_offset)))
        if not self.mass > 0:
            raise ConfigError("mass must be positive")
        if not self.rho > 0 or not self.disk_area > 0:
            raise ConfigError("rho and disk_area must be positive")
        if not np.allclose(inertia, inertia.T, atol=1e-12):
            raise ConfigError("inertia must be symmetric")
        if np.any(np.linalg.eigvalsh(inertia) <= 0):
            raise ConfigError("inertia must be positive definite")
        if not self.surfaces:
            raise ConfigError("at least one surface is required")

    @property
    def thrust_axis(self) -> np.ndarray:
        """Unit thrust direction in body coordinates."""
        return euler_to_rotation(np.array(self.thrust_mount))[:, 0]

    @property
    def max_thrust(self) -> float:
        """Steady-state thrust at full throttle, ``-b/a``."""
        return -self.thrust_b / self.thrust_a

    def surface(self, name: str) -> AeroSurface:
        for s in self.surfaces:
            if s.name == name:
                return s
        raise KeyError(name)

    def replace(self, **changes) -> AircraftParams:
        return dataclasses.replace(self, **changes)

    def scale_surfaces(self, factors: dict) -> AircraftParams:
        """Copy with the named surfaces' areas multiplied by ``factors[name]``."""
        unknown = set(factors) - {s.name for s in self.surfaces}
        if unknown:
            raise ConfigError(f"unknown surfaces: {sorted(unknown)}")
        surfaces = [
            dataclasses.replace(s, area=s.area * factors.get(s.name, 1.0))
            for s in self.surfaces
        ]
        return self.replace(surfaces=surfaces)

    def without(self, names) -> AircraftParams:
        names = set(names)
        return self.replace(surfaces=[s for s in self.surfaces if s.name not in names])

    @cached_property
    def packed(self) -> PackedParams:
        return PackedParams.from_params(self)

    # -- serialisation ---------------------------------------------------

    def to_dict(self) -> dict:
        surfaces = []
        for s in self.surfaces:
            d = {
                "name": s.name,
                "area": s.area,
                "mount": list(s.mount),
                "hinge": list(s.hinge),
                "chord_offset": s.chord_offset,
                "backwash_gain": s.backwash_gain,
            }
            if s.actuation is not None:
                d["actuation"] = s.actuation
            surfaces.append(d)
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "illustrative_geometry": self.illustrative_geometry,
            "mass": self.mass,
            "inertia": self.inertia.tolist(),
            "rho": self.rho,
            "gravity": self.gravity,
            "disk_area": self.disk_area,
            "thrust_a": self.thrust_a,
            "thrust_b": self.thrust_b,
            "thrust_mount": list(self.thrust_mount),
            "prop_offset": list(self.prop_offset),
            "surfaces": surfaces,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> AircraftParams:
        if not isinstance(doc, dict):
            raise ConfigError("parameter document must be a mapping")
        if doc.get("format") != FORMAT_NAME:
            raise ConfigError(f"not a {FORMAT_NAME} file")
        if doc.get("version") != FORMAT_VERSION:
            raise ConfigError(f"unsupported params version {doc.get('version')!r}")
        try:
            surfaces = [AeroSurface(**s) for s in doc["surfaces"]]
            kwargs = {
                k: doc[k]
                for k in (
                    "mass", "inertia", "rho", "gravity", "disk_area", "thrust_a",
                    "thrust_b", "thrust_mount", "prop_offset", "illustrative_geometry",
                )
                if k in doc
            }
            return cls(surfaces=surfaces, **kwargs)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad parameter document: {exc}") from exc

    def save(self, path) -> None:
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=False))


def load_params(path=None) -> AircraftParams:
    """Load a parameter file; ``None`` gives the packaged Edge 540 default."""
    if path is None:
        text = resources.files("poststall.data").joinpath(DEFAULT_PARAMS).read_text()
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read params file {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"params file is not valid YAML: {exc}") from exc
    return AircraftParams.from_dict(doc)


# Area corrections found during flight identification.  The uncorrected
# model is what an engineer would build from geometry alone.
IDENTIFIED_AREA_SCALE = {"wing": 2.0, "fuselage_horizontal": 2.0, "rudder": 0.75}


def uncorrected(params: AircraftParams) -> AircraftParams:
    """Undo the identified area corrections (the pre-identification model)."""
    present = {s.name for s in params.surfaces}
    return params.scale_surfaces(
        {k: 1.0 / v for k, v in IDENTIFIED_AREA_SCALE.items() if k in present}
    )


def perturbed(params: AircraftParams, rng, area_frac=0.15, inertia_frac=0.10):
    """Random multiplicative perturbation of every surface area and the inertia diagonal."""
    factors = {s.name: 1.0 + rng.uniform(-area_frac, area_frac) for s in params.surfaces}
    scale = 1.0 + rng.uniform(-inertia_frac, inertia_frac, size=3)
    inertia = params.inertia * np.sqrt(np.outer(scale, scale))
    return params.scale_surfaces(factors).replace(inertia=inertia)


@dataclass(frozen=True)
class PackedParams:
    """Surface data stacked into arrays for the vectorised dynamics."""

    mass: float
    inertia: np.ndarray
    inertia_inv: np.ndarray
    rho: float
    gravity: float
    disk_area: float
    thrust_a: float
    thrust_b: float
    thrust_axis: np.ndarray
    prop_offset: np.ndarray
    mount: np.ndarray  # (ns, 3, 3) body -> surface
    hinge: np.ndarray  # (ns, 3)
    chord: np.ndarray  # (ns,)
    area: np.ndarray
    gamma: np.ndarray
    act_index: np.ndarray  # (ns,) int, -1 when fixed
    actuated: np.ndarray  # (ns,) bool

    @classmethod
    def from_params(cls, p: AircraftParams) -> PackedParams:
        idx = np.array([-1 if s.actuation is None else s.actuation for s in p.surfaces])
        return cls(
            mass=float(p.mass),
            inertia=np.array(p.inertia),
            inertia_inv=np.linalg.inv(p.inertia),
            rho=float(p.rho),
            gravity=float(p.gravity),
            disk_area=float(p.disk_area),
            thrust_a=float(p.thrust_a),
            thrust_b=float(p.thrust_b),
            thrust_axis=p.thrust_axis,
            prop_offset=np.array(p.prop_offset),
            mount=np.stack([s.mount_rotation for s in p.surfaces]),
            hinge=np.stack([s.hinge_offset for s in p.surfaces]),
            chord=np.array([s.chord_offset for s in p.surfaces]),
            area=np.array([s.area for s in p.surfaces]),
            gamma=np.array([s.backwash_gain for s in p.surfaces]),
            act_index=np.where(idx < 0, 0, idx),
            actuated=idx >= 0,
        )
