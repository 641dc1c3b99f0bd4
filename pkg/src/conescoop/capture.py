"""Out-of-plane correction for the in-plane simulation.

The particle model resolves one vertical slice through the bowl.  What it
cannot see is how much of the bowl's cross-width the tool edge spans, or
whether a stiff edge leaves a gap against the curved wall.  Both are folded
into a single lateral coverage factor that scales the captured mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .cone import ConeConfig
from .scene import ContainerSpec, GranularSpec


@dataclass(frozen=True)
class CoverageModel:
    """Calibration constants of the lateral coverage factor.

    ``press_reference`` is the press depth (mm) at which an edge counts as
    fully compliant.  Oversized tools lose coverage as ``(D/d)**p`` where
    ``p`` slides from ``oversize_exponent_rigid`` to
    ``oversize_exponent_flexible`` with compliance.  ``depth_factor`` scales
    the settled fill depth to the depth swept by the spreading pile.
    """

    widening_gain: float = 2.0
    coverage_exponent: float = 1.0
    press_reference: float = 1.0
    oversize_exponent_rigid: float = 2.0
    oversize_exponent_flexible: float = 0.5
    conform_scale: float = 1.5  # mm
    conform_loss: float = 0.4
    depth_factor: float = 3.0

    def __post_init__(self) -> None:
        if self.widening_gain < 0:
            raise ValueError("widening gain must be non-negative")
        if not self.coverage_exponent > 0:
            raise ValueError("coverage exponent must be positive")
        if not self.press_reference > 0 or not self.conform_scale > 0:
            raise ValueError("press and conformance scales must be positive")
        if not 0.0 <= self.conform_loss <= 1.0:
            raise ValueError("conformance loss must lie in [0, 1]")
        if not self.depth_factor > 0:
            raise ValueError("depth factor must be positive")


def effective_width(cone: ConeConfig | float, press_depth: float,
                    model: CoverageModel | None = None,
                    max_width: float | None = None) -> float:
    """Edge width after pressing; a bare number is taken as a fixed tool width."""
    model = model or CoverageModel()
    if press_depth < 0:
        raise ValueError("press depth must be non-negative")
    if isinstance(cone, ConeConfig):
        d = cone.bottom_diameter_d
        cap = 2.0 * cone.sheet_radius_R
    else:
        d = float(cone)
        cap = math.inf
    if max_width is not None:
        cap = min(cap, max_width)
    return min(max(cap, d), d + model.widening_gain * press_depth)


def cross_width(container: ContainerSpec, sweep_depth: float) -> float:
    """Chord of the bowl at ``sweep_depth`` below the rim plane."""
    r = container.radius
    if not 0 < sweep_depth <= container.rim_depth + 1e-12:
        raise ValueError("sweep depth must lie in (0, rim depth]")
    h = min(sweep_depth, r)
    return 2.0 * math.sqrt(max(r * r - (r - h) ** 2, 0.0))


def sweep_depth_for(container: ContainerSpec, granular: GranularSpec,
                    model: CoverageModel | None = None) -> float:
    model = model or CoverageModel()
    pile = container.fill_depth(granular.pour_volume)
    return min(container.rim_depth, max(model.depth_factor * pile, 1e-6))


def compliance(press_depth: float, model: CoverageModel) -> float:
    return min(1.0, max(press_depth, 0.0) / model.press_reference)


def oversize_factor(container_D: float, tool_width: float, press_depth: float,
                    model: CoverageModel | None = None) -> float:
    """Penalty for a tool wider than the bowl; 1 when it fits."""
    model = model or CoverageModel()
    if tool_width <= container_D:
        return 1.0
    k = compliance(press_depth, model)
    p = model.oversize_exponent_rigid - (
        model.oversize_exponent_rigid - model.oversize_exponent_flexible) * k
    return (container_D / tool_width) ** p


def conformance(press_depth: float, grain_diameter: float,
                model: CoverageModel | None = None) -> float:
    """How well the edge seals against the wall, relative to the grain size.

    A stiff edge leaves a gap that fine grains slip through; large grains
    bridge it.
    """
    model = model or CoverageModel()
    c = compliance(press_depth, model) + grain_diameter / model.conform_scale
    return min(1.0, c)


def lateral_coverage(width: float, container: ContainerSpec, sweep_depth: float,
                     model: CoverageModel | None = None, *, tool_width: float | None = None,
                     press_depth: float = 0.0, grain_diameter: float | None = None) -> float:
    """Fraction of the in-plane capture that survives in 3D.

    Without ``tool_width`` and ``grain_diameter`` this is the plain chord
    ratio ``min(1, width / W_c) ** exponent``.
    """
    model = model or CoverageModel()
    if width < 0:
        raise ValueError("width must be non-negative")
    wc = cross_width(container, sweep_depth)
    cov = min(1.0, width / wc) ** model.coverage_exponent
    if tool_width is not None:
        cov *= oversize_factor(container.inner_diameter_D, tool_width, press_depth, model)
    if grain_diameter is not None:
        cov *= 1.0 - model.conform_loss * (1.0 - conformance(press_depth, grain_diameter, model))
    return min(1.0, max(0.0, cov))


def scoop_fraction(in_plane_retained: float, coverage: float) -> float:
    for v in (in_plane_retained, coverage):
        if not -1e-12 <= v <= 1 + 1e-12:
            raise ValueError("fractions must lie in [0, 1]")
    return min(1.0, max(0.0, in_plane_retained * coverage))
