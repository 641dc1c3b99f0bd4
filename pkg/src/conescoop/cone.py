"""Reconfigurable conical sheet geometry.

A circular sheet of radius ``R`` whose edge is slid over itself by an angle
``theta`` closes into a cone.  The slant length stays ``R``; the open bottom
circle shrinks linearly with the slide angle and the apex sharpens.

Angles are radians throughout; lengths are millimetres.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi
DEFAULT_PHI_MIN = math.pi / 2


class ConeDomainError(ValueError):
    """Raised when a cone parameter lies outside its physical domain."""


def _check_radius(R: float) -> None:
    if not R > 0:
        raise ConeDomainError(f"sheet radius must be positive, got {R!r}")


def bottom_diameter(R: float, theta: float) -> float:
    """Bottom-circle diameter after sliding the sheet edge by ``theta``."""
    _check_radius(R)
    if not 0.0 <= theta < TWO_PI:
        raise ConeDomainError(f"slide angle must lie in [0, 2pi), got {theta!r}")
    return 2.0 * R * (1.0 - theta / TWO_PI)


def slide_angle_for_diameter(R: float, d: float) -> float:
    """Inverse of :func:`bottom_diameter`."""
    _check_radius(R)
    if not 0.0 < d <= 2.0 * R:
        raise ConeDomainError(f"diameter must lie in (0, 2R], got d={d!r}, R={R!r}")
    return TWO_PI * (1.0 - d / (2.0 * R))


def vertex_angle(R: float, d: float) -> float:
    """Full opening angle at the apex, ``2 asin(d / 2R)``.

    The flat sheet (``d == 2R``) gives pi.
    """
    _check_radius(R)
    if not 0.0 < d <= 2.0 * R:
        raise ConeDomainError(f"diameter must lie in (0, 2R], got d={d!r}, R={R!r}")
    return 2.0 * math.asin(min(1.0, d / (2.0 * R)))


def min_insertion_angle(R: float, D: float) -> float:
    """Smallest slide angle at which the cone enters a container of diameter ``D``.

    Any angle strictly greater than the returned value gives ``d < D``.  The
    result is clamped at zero when even the flat sheet is narrower than the
    container.  Containers with ``D <= R`` cannot be served by any
    configuration of this sheet.
    """
    _check_radius(R)
    if not D > 0:
        raise ConeDomainError(f"container diameter must be positive, got {D!r}")
    if D <= R:
        raise ConeDomainError(
            f"container diameter {D} mm is not larger than the sheet radius {R} mm; "
            "no cone made from this sheet can enter it"
        )
    return max(0.0, TWO_PI * (1.0 - D / (2.0 * R)))


def min_practical_diameter(R: float, phi_min: float = DEFAULT_PHI_MIN) -> float:
    """Bottom diameter at which the vertex angle reaches ``phi_min``."""
    _check_radius(R)
    if not 0.0 < phi_min <= math.pi:
        raise ConeDomainError(f"phi_min must lie in (0, pi], got {phi_min!r}")
    return 2.0 * R * math.sin(phi_min / 2.0)


@dataclass(frozen=True)
class ConeConfig:
    """Geometry state of the reconfigured cone (mm, radians)."""

    sheet_radius_R: float
    slide_angle_theta: float
    bottom_diameter_d: float
    vertex_angle_phi: float

    def __post_init__(self) -> None:
        R, theta, d, phi = (
            self.sheet_radius_R,
            self.slide_angle_theta,
            self.bottom_diameter_d,
            self.vertex_angle_phi,
        )
        _check_radius(R)
        if not 0.0 <= theta < TWO_PI:
            raise ConeDomainError(f"slide angle must lie in [0, 2pi), got {theta!r}")
        if not 0.0 < d <= 2.0 * R:
            raise ConeDomainError(f"diameter must lie in (0, 2R], got {d!r}")
        if not 0.0 < phi <= math.pi:
            raise ConeDomainError(f"vertex angle must lie in (0, pi], got {phi!r}")
        if abs(d - 2.0 * R * (1.0 - theta / TWO_PI)) > 1e-9 * max(1.0, R):
            raise ConeDomainError("diameter and slide angle are inconsistent")

    @classmethod
    def from_slide_angle(cls, R: float, theta: float) -> "ConeConfig":
        d = bottom_diameter(R, theta)
        return cls(R, theta, d, vertex_angle(R, d))

    @classmethod
    def from_diameter(cls, R: float, d: float) -> "ConeConfig":
        return cls(R, slide_angle_for_diameter(R, d), d, vertex_angle(R, d))

    @property
    def slant_length(self) -> float:
        return self.sheet_radius_R


@dataclass(frozen=True)
class InsertabilityVerdict:
    rigid_insertable: bool
    min_slide_angle: float
    deformation_required: bool


def insertability(config: ConeConfig, D: float) -> InsertabilityVerdict:
    """Can the cone enter a container of diameter ``D`` without deforming?

    A cone that is too wide can still be pushed in by bending the sheet,
    which is reported through ``deformation_required``.  The minimum slide
    angle is reported without the ``D > R`` restriction so that the verdict
    is defined for every positive ``D``.
    """
    if not D > 0:
        raise ConeDomainError(f"container diameter must be positive, got {D!r}")
    R = config.sheet_radius_R
    rigid = config.bottom_diameter_d < D
    return InsertabilityVerdict(
        rigid_insertable=rigid,
        min_slide_angle=max(0.0, TWO_PI * (1.0 - D / (2.0 * R))),
        deformation_required=not rigid,
    )


@dataclass(frozen=True)
class DesignRow:
    d: float
    theta_deg: float
    phi_deg: float
    rigid_insertable: bool | None
    min_slide_angle_deg: float | None


def design_table(
    R: float,
    container_D: float | None = None,
    phi_min: float = DEFAULT_PHI_MIN,
    slide_angles_deg: tuple[float, ...] = (0.0, 36.0, 72.0, 105.0),
) -> list[DesignRow]:
    """Rows for the ``cone`` calculator.

    One row per requested slide angle plus, when a container is given, the
    configuration at the minimum insertion angle and at the practical floor.
    """
    _check_radius(R)
    d_floor = min_practical_diameter(R, phi_min)
    min_angle = None
    if container_D is not None:
        min_angle = min_insertion_angle(R, container_D)

    configs = [ConeConfig.from_slide_angle(R, math.radians(a)) for a in slide_angles_deg]
    if min_angle is not None and not any(
        abs(c.slide_angle_theta - min_angle) < 1e-9 for c in configs
    ):
        configs.append(ConeConfig.from_slide_angle(R, min_angle))
    configs.append(ConeConfig.from_diameter(R, d_floor))

    rows = []
    for c in configs:
        if c.bottom_diameter_d < d_floor - 1e-9:
            continue
        verdict = insertability(c, container_D) if container_D is not None else None
        rows.append(
            DesignRow(
                d=c.bottom_diameter_d,
                theta_deg=math.degrees(c.slide_angle_theta),
                phi_deg=math.degrees(c.vertex_angle_phi),
                rigid_insertable=None if verdict is None else verdict.rigid_insertable,
                min_slide_angle_deg=None if min_angle is None else math.degrees(min_angle),
            )
        )
    return rows
