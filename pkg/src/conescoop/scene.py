"""Static scene: tilted spherical-cap container, granular material, sheet material.

Units are millimetres, grams and seconds, so forces come out in g*mm/s^2
and gravity is 9810 mm/s^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels

GRAVITY = 9810.0  # mm/s^2


@dataclass(frozen=True)
class ContainerSpec:
    """Spherical bowl seen in the vertical plane through its centre.

    ``tilt_angle`` rotates the mouth axis away from vertical towards +x, so
    the lower rim sits on the +x side.  ``rim_depth`` is the cap depth
    measured from the deepest point of the sphere along the mouth axis.
    """

    inner_diameter_D: float
    tilt_angle: float = math.radians(45.0)
    rim_depth: float | None = None
    center: tuple[float, float] = (0.0, 0.0)
    wall_thickness: float = 3.0

    def __post_init__(self) -> None:
        if not self.inner_diameter_D > 0:
            raise ValueError("container diameter must be positive")
        if not 0.0 <= self.tilt_angle < math.pi / 2:
            raise ValueError("tilt angle must lie in [0, 90) degrees")
        if self.rim_depth is None:
            object.__setattr__(self, "rim_depth", self.inner_diameter_D / 2)
        if not 0.0 < self.rim_depth <= self.inner_diameter_D / 2 + 1e-12:
            raise ValueError("rim depth must lie in (0, D/2]")
        if not self.wall_thickness > 0:
            raise ValueError("wall thickness must be positive")

    @property
    def radius(self) -> float:
        return self.inner_diameter_D / 2

    @property
    def axis(self) -> np.ndarray:
        """Unit vector pointing out of the mouth."""
        return np.array([math.sin(self.tilt_angle), math.cos(self.tilt_angle)])

    @property
    def cos_beta(self) -> float:
        return (self.radius - self.rim_depth) / self.radius

    def kernel_params(self) -> np.ndarray:
        ax, ay = self.axis
        half_t = self.wall_thickness / 2
        return np.array(
            [self.center[0], self.center[1], ax, ay, self.radius + half_t, half_t, self.cos_beta]
        )

    def rim_points(self) -> tuple[np.ndarray, np.ndarray]:
        """(lower rim, upper rim) on the inner surface."""
        beta = math.acos(self.cos_beta)
        down = -self.axis
        c = np.asarray(self.center, dtype=float)
        out = []
        for sgn in (1.0, -1.0):
            ca, sa = math.cos(sgn * beta), math.sin(sgn * beta)
            d = np.array([down[0] * ca - down[1] * sa, down[0] * sa + down[1] * ca])
            out.append(c + self.radius * d)
        lo, hi = sorted(out, key=lambda p: p[1])
        return lo, hi

    @property
    def rim_height(self) -> float:
        """Height of the highest rim point."""
        return float(self.rim_points()[1][1])

    @property
    def lowest_point(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float) + np.array([0.0, -self.radius])

    def inside_bowl(self, pts: np.ndarray) -> np.ndarray:
        """Mask of points inside the cap's free volume."""
        pts = np.atleast_2d(pts)
        q = pts - np.asarray(self.center)
        r = np.hypot(q[:, 0], q[:, 1])
        along = q @ self.axis
        return (r < self.radius) & (along <= self.rim_depth - self.radius)

    def fill_depth(self, volume_mm3: float) -> float:
        """Depth of a horizontal pool of the given 3D volume in the sphere."""
        return cap_depth_for_volume(self.radius, volume_mm3)


def cap_depth_for_volume(radius: float, volume: float) -> float:
    if volume <= 0:
        return 0.0
    full = 4.0 / 3.0 * math.pi * radius**3
    if volume >= full:
        return 2 * radius
    lo, hi = 0.0, 2 * radius
    for _ in range(100):
        h = 0.5 * (lo + hi)
        if math.pi * h * h * (3 * radius - h) / 3 < volume:
            lo = h
        else:
            hi = h
    return 0.5 * (lo + hi)


def container_sdf(spec: ContainerSpec, point) -> tuple[float, np.ndarray]:
    """Signed distance to the container wall and its unit gradient.

    Positive in free space (in particular throughout the bowl interior),
    zero on the inner surface, negative inside the wall.  Inside the bowl
    the gradient points towards the centre, i.e. into the bowl.
    """
    p = np.asarray(point, dtype=float)
    d, gx, gy = _kernels.arc_sdf(float(p[0]), float(p[1]), *spec.kernel_params())
    return d, np.array([gx, gy])


@dataclass(frozen=True)
class GranularSpec:
    """Particle material.

    ``contact_frequency`` sets the normal stiffness as
    ``k_n = mean_mass * contact_frequency**2``, which fixes how far grains
    sink into each other and into walls on impact.  ``bulk_density``
    converts the configured mass to a 3D pour volume, which fixes the fill
    depth in each bowl.
    """

    material_name: str
    particle_radius_mean: float
    particle_radius_spread: float
    particle_density: float  # g/mm^2, informational; masses are rescaled to total_mass
    friction_coefficient: float
    restitution_damping: float
    total_mass: float
    bulk_density: float = 0.55  # g/cm^3
    contact_frequency: float = 7000.0  # rad/s
    packing_fraction: float = 0.8
    air_drag: float = 0.0  # 1/s; terminal speed is g / air_drag

    def __post_init__(self) -> None:
        if not self.particle_radius_mean > 0:
            raise ValueError("particle radius must be positive")
        if not 0.0 <= self.particle_radius_spread < 0.5:
            raise ValueError("radius spread must lie in [0, 0.5)")
        if self.friction_coefficient < 0:
            raise ValueError("friction must be non-negative")
        if self.total_mass < 0:
            raise ValueError("total mass must be non-negative")
        if not self.bulk_density > 0:
            raise ValueError("bulk density must be positive")

    @property
    def pour_volume(self) -> float:
        """3D volume in mm^3."""
        return self.total_mass / self.bulk_density * 1000.0

    @property
    def grain_diameter(self) -> float:
        return 2.0 * self.particle_radius_mean


@dataclass(frozen=True)
class SheetSpec:
    """Sheet material of the end-effector.

    Bending stiffness is per unit width (``E t^3 / 12``) times the in-plane
    ``section_width``.  A rigid sheet has its stiffness raised to at least
    ``rigid_floor`` times the reference polypropylene value; the solver still
    integrates it like any other rod.
    """

    material_name: str
    thickness: float  # mm
    elastic_modulus: float  # g/(mm s^2)  (1 GPa = 1e9)
    rigid: bool = False
    friction_coefficient: float = 0.3
    section_width: float = 100.0
    rigid_floor: float = 300.0
    areal_mass: float = 1.5e-4  # g/mm^2
    compliant_tip_fraction: float = 0.0
    fixed_width: float | None = None  # tools that cannot resize, e.g. a ladle

    def __post_init__(self) -> None:
        if not self.thickness > 0:
            raise ValueError("sheet thickness must be positive")
        if not self.elastic_modulus > 0:
            raise ValueError("elastic modulus must be positive")

    @property
    def material_EI(self) -> float:
        return self.elastic_modulus * self.thickness**3 / 12.0 * self.section_width

    @property
    def base_bending_stiffness_EI(self) -> float:
        ei = self.material_EI
        if self.rigid:
            ei = max(ei, self.rigid_floor * PP_SHEET.material_EI)
        return ei


GRANULAR_PRESETS: dict[str, GranularSpec] = {
    "flour": GranularSpec(
        material_name="flour",
        particle_radius_mean=0.5,
        particle_radius_spread=0.2,
        particle_density=1.0e-3,
        friction_coefficient=0.5,
        restitution_damping=0.6,
        total_mass=10.0,
        bulk_density=0.55,
        contact_frequency=10000.0,
        air_drag=15.0,
    ),
    "coffee": GranularSpec(
        material_name="coffee",
        particle_radius_mean=0.8,
        particle_radius_spread=0.2,
        particle_density=1.0e-3,
        friction_coefficient=0.55,
        restitution_damping=0.6,
        total_mass=10.0,
        bulk_density=0.38,
        contact_frequency=7000.0,
        air_drag=12.0,
    ),
    "rice": GranularSpec(
        material_name="rice",
        particle_radius_mean=1.5,
        particle_radius_spread=0.1,
        particle_density=1.0e-3,
        friction_coefficient=0.4,
        restitution_damping=0.6,
        total_mass=10.0,
        bulk_density=0.80,
        contact_frequency=8000.0,
    ),
}

PP_SHEET = SheetSpec(material_name="pp", thickness=0.2, elastic_modulus=1.5e9)

SHEET_PRESETS: dict[str, SheetSpec] = {
    "pp_sheet": PP_SHEET,
    "sus304_sheet": SheetSpec(
        material_name="sus304",
        thickness=0.1,
        elastic_modulus=193e9,
        rigid=True,
        areal_mass=8.0e-4,
    ),
    "silicone_ladle": SheetSpec(
        material_name="silicone_ladle",
        thickness=2.0,
        elastic_modulus=5e6,
        rigid=True,
        friction_coefficient=0.6,
        compliant_tip_fraction=0.1,
        fixed_width=70.0,
        areal_mass=1.0e-3,
    ),
}

# short tool names used by the experiment presets
EFFECTOR_SHEETS = {"pp": "pp_sheet", "sus304": "sus304_sheet", "ladle": "silicone_ladle"}


def resolve_preset(table: dict, name: str, kind: str):
    try:
        return table[name]
    except KeyError:
        known = ", ".join(sorted(table))
        raise KeyError(f"unknown {kind} preset {name!r}; choose one of: {known}") from None


def granular_preset(name: str, **overrides) -> GranularSpec:
    spec = resolve_preset(GRANULAR_PRESETS, name, "granular")
    return replace(spec, **overrides) if overrides else spec


def sheet_preset(name: str, **overrides) -> SheetSpec:
    if name not in EFFECTOR_SHEETS and name not in SHEET_PRESETS:
        known = ", ".join([*EFFECTOR_SHEETS, *sorted(SHEET_PRESETS)])
        raise KeyError(f"unknown sheet preset {name!r}; choose one of: {known}")
    spec = SHEET_PRESETS[EFFECTOR_SHEETS.get(name, name)]
    return replace(spec, **overrides) if overrides else spec
