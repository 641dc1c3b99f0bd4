"""In-plane mechanics of the conical sheet.

The sheet is cut by the sweep plane along one generator of the cone, which
is modelled as a discrete elastic rod of the slant length, clamped at the
apex end to the tool.  The closed cone resists bending far more than the
flat sheet it is made of, so the flat-sheet stiffness is scaled by a factor
that grows as the bottom circle tightens.

The opposite generator (the "roof" of the scoop) is carried as a rigid
segment attached to the tool.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .cone import ConeConfig
from .scene import ContainerSpec, SheetSpec


class SheetInstability(RuntimeError):
    """Raised when a rod node exceeds the blow-up speed."""


def stiffness_multiplier(cone: ConeConfig, c_aniso: float = 1.0) -> float:
    """Cross-section stiffening of the closed cone, ``1 + c (2R/d - 1)``."""
    R = cone.sheet_radius_R
    d = cone.bottom_diameter_d
    return 1.0 + c_aniso * (2.0 * R / d - 1.0)


@dataclass
class SheetState:
    """Dynamic state of the sheet rod.

    ``base_pose`` is (x, y, angle); the angle points from the clamped apex
    towards the free lip.
    """

    base_pose: np.ndarray
    nodes: np.ndarray
    node_velocities: np.ndarray
    segment_rest_length: np.ndarray
    effective_EI: np.ndarray  # per node hinge, node 0 is the clamp
    node_mass: float
    k_stretch: float
    k_bend: np.ndarray
    rest_turn: np.ndarray
    internal_damping: float
    drag: float
    vertex_angle: float
    roof_length: float
    friction_coefficient: float
    k_wall: float = 2.0e5
    blowup_speed: float = 5.0e4
    base_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @property
    def n_segments(self) -> int:
        return len(self.segment_rest_length)

    @property
    def length(self) -> float:
        return float(self.segment_rest_length.sum())

    @property
    def lip(self) -> np.ndarray:
        return self.nodes[-1]

    def copy(self) -> "SheetState":
        return SheetState(
            **{
                k: (v.copy() if isinstance(v, np.ndarray) else v)
                for k, v in self.__dict__.items()
            }
        )

    def undeformed_nodes(self, pose=None) -> np.ndarray:
        """Node positions of the unloaded rod for the given (or current) pose."""
        x, y, a = self.base_pose if pose is None else pose
        s = np.concatenate([[0.0], np.cumsum(self.segment_rest_length)])
        turn = np.cumsum(self.rest_turn)
        ang = a + turn
        pts = np.zeros((len(s), 2))
        pts[0] = (x, y)
        for i in range(1, len(s)):
            pts[i] = pts[i - 1] + self.segment_rest_length[i - 1] * np.array(
                [math.cos(ang[i - 1]), math.sin(ang[i - 1])]
            )
        return pts

    def roof_segment(self) -> tuple[np.ndarray, np.ndarray]:
        """Rigid opposite generator: from the apex, rotated by the vertex angle."""
        x, y, a = self.base_pose
        ang = a - self.vertex_angle
        p0 = np.array([x, y])
        return p0, p0 + self.roof_length * np.array([math.cos(ang), math.sin(ang)])

    def strain(self) -> np.ndarray:
        seg = np.diff(self.nodes, axis=0)
        return np.hypot(seg[:, 0], seg[:, 1]) / self.segment_rest_length - 1.0

    def elastic_energy(self) -> float:
        work = np.zeros_like(self.nodes)
        return _kernels.rod_forces(
            self.nodes, self.node_velocities, self.segment_rest_length, self.rest_turn,
            self.k_stretch, self.k_bend, 0.0, float(self.base_pose[2]), work,
        )

    def kinetic_energy(self) -> float:
        v = self.node_velocities[1:]
        return 0.5 * self.node_mass * float((v * v).sum())

    def substeps_for(self, dt: float) -> int:
        l = float(self.segment_rest_length.min())
        m = self.node_mass
        w2 = max(
            4.0 * self.k_stretch / m,
            16.0 * float(self.k_bend.max()) / (m * l * l),
            self.k_wall / m,
        )
        h = 0.5 / math.sqrt(w2)
        return max(1, int(math.ceil(dt / h)))


def build_sheet(
    sheet: SheetSpec,
    cone: ConeConfig,
    segments: int = 20,
    base_pose=(0.0, 0.0, 0.0),
    c_aniso: float = 1.0,
    roof_fraction: float = 0.5,
    strain_limit: float = 0.002,
    design_load: float = 2.0e5,
    internal_damping: float | None = None,
    drag: float = 50.0,
) -> SheetState:
    """Straight rod of the slant length, clamped at ``base_pose``.

    The stretch spring is sized so that ``design_load`` (g*mm/s^2) produces
    at most ``strain_limit`` strain.  Hinges use the trapezoid weighting:
    the clamp hinge is twice as stiff as interior hinges, which makes the
    discrete cantilever converge at second order.
    """
    if segments < 8:
        raise ValueError("at least 8 segments are needed to bend against a bowl")
    L = cone.slant_length
    l = L / segments
    mult = stiffness_multiplier(cone, c_aniso) if not sheet.rigid else 1.0
    ei = sheet.base_bending_stiffness_EI * mult
    EI = np.full(segments, ei)
    if sheet.compliant_tip_fraction > 0:
        n_tip = max(1, int(round(sheet.compliant_tip_fraction * segments)))
        EI[-n_tip:] = sheet.material_EI
    k_bend = EI / l
    k_bend[0] *= 2.0
    m_node = sheet.areal_mass * sheet.section_width * l
    k_stretch = design_load / (strain_limit * l)
    if internal_damping is None:
        internal_damping = 0.2 * math.sqrt(k_stretch * m_node)
    x, y, a = (float(v) for v in base_pose)
    s = np.arange(segments + 1) * l
    nodes = np.column_stack([x + s * math.cos(a), y + s * math.sin(a)])
    return SheetState(
        base_pose=np.array([x, y, a]),
        nodes=nodes,
        node_velocities=np.zeros_like(nodes),
        segment_rest_length=np.full(segments, l),
        effective_EI=EI,
        node_mass=m_node,
        k_stretch=k_stretch,
        k_bend=k_bend,
        rest_turn=np.zeros(segments),
        internal_damping=internal_damping,
        drag=drag,
        vertex_angle=cone.vertex_angle_phi,
        roof_length=roof_fraction * L,
        friction_coefficient=sheet.friction_coefficient,
    )


def set_base_pose(state: SheetState, pose, dt: float | None = None) -> None:
    """Move the clamp; velocities come from the finite difference over ``dt``."""
    pose = np.asarray(pose, dtype=float)
    if dt:
        dp = pose - state.base_pose
        dp[2] = (dp[2] + math.pi) % (2 * math.pi) - math.pi
        state.base_velocity = dp / dt
    state.base_pose = pose.copy()


def place_undeformed(state: SheetState, pose) -> None:
    """Teleport the whole rod, unloaded, to ``pose``."""
    state.base_pose = np.asarray(pose, dtype=float).copy()
    state.nodes[:] = state.undeformed_nodes()
    state.node_velocities[:] = 0.0
    state.base_velocity = np.zeros(3)


def solve_deformation_step(
    state: SheetState,
    external_forces: np.ndarray,
    dt: float,
    container: ContainerSpec | None = None,
    gravity=(0.0, 0.0),
    wall_friction: float = 0.3,
    nsub: int | None = None,
) -> tuple[float, np.ndarray]:
    """Advance the rod in place by ``dt``.

    Bending, near-inextensible stretch springs, internal damping and (when a
    container is given) penalty contact of the nodes with the bowl wall.
    Returns the peak node speed and the reaction force on the clamp.
    """
    if nsub is None:
        nsub = state.substeps_for(dt)
    ext = np.ascontiguousarray(external_forces, dtype=float)
    if container is not None:
        cparams = container.kernel_params()
        wall_on = True
    else:
        cparams = np.zeros(7)
        wall_on = False
    x, y, a = state.base_pose
    vx, vy, _ = state.base_velocity
    work = np.zeros_like(state.nodes)
    vpeak, rx, ry, blew = _kernels.rod_substeps(
        state.nodes, state.node_velocities, state.node_mass,
        state.segment_rest_length, state.rest_turn, state.k_stretch, state.k_bend,
        state.internal_damping, state.drag,
        float(x), float(y), float(vx), float(vy), float(a),
        ext, float(gravity[0]), float(gravity[1]),
        cparams, state.k_wall, wall_friction, wall_on,
        dt, nsub, state.blowup_speed, work,
    )
    if blew:
        raise SheetInstability(
            f"sheet node speed {vpeak:.3g} mm/s exceeded {state.blowup_speed:.3g} mm/s"
        )
    return vpeak, np.array([rx, ry])


def lip_deflection(state: SheetState) -> float:
    """Distance between the actual lip and the unloaded lip for the current pose."""
    return float(np.hypot(*(state.nodes[-1] - state.undeformed_nodes()[-1])))


def relax(
    state: SheetState,
    external_forces: np.ndarray,
    dt: float,
    container: ContainerSpec | None = None,
    max_steps: int = 200_000,
    tol: float = 1e-3,
    min_steps: int = 200,
) -> int:
    """Step with fixed loads until node speeds fall below ``tol`` (mm/s)."""
    for k in range(max_steps):
        vpeak, _ = solve_deformation_step(state, external_forces, dt, container)
        if k >= min_steps and vpeak < tol:
            return k + 1
    raise RuntimeError("rod did not come to rest")
