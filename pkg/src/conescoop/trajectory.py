"""Open-loop scooping motion for the sheet clamp.

The clamp pose is (x, y, angle) with the angle pointing from the apex to
the free lip.  The sweep is built from the lip: it runs just inside the
wall (pressed in by ``delta``) from the lower rim, through the bottom, to
the upper rim, with the rod trailing behind it at a fixed attack angle.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .cone import ConeConfig
from .scene import ContainerSpec


class PlanningError(ValueError):
    """The tool cannot follow the requested motion in this bowl."""


@dataclass(frozen=True)
class TrajectoryParams:
    penetration_offset_delta: float = 1.0  # mm
    sweep_speed: float = 160.0  # mm/s, also the cap for every other phase
    angular_speed: float = math.radians(180.0)  # rad/s for in-place rotations
    tool_angle: float = math.radians(45.0)
    attack_margin: float = math.radians(2.0)
    sweep_waypoints: int = 37
    exit_axis_angle: float = math.radians(60.0)  # cup axis elevation when leaving the upper rim
    clearance: float = 8.0  # mm above the highest rim
    retract_gap: float = 2.0  # mm clearance from the wall before lifting
    lift_clear: float = 6.0  # straight rise off the wall before re-orienting
    frame_offset: float = 12.0  # mm of tool frame behind the apex
    max_squeeze: float = 0.25  # largest (d - D)/D a deforming cone can be pushed in with
    plate_gap: float = 15.0
    plate_width: float = 110.0
    plate_wall: float = 10.0
    plate_drop: float = 6.0  # plate floor sits this far below the highest rim
    pour_height: float = 6.0  # lip height above the plate floor when pouring
    pour_spread: float = 40.0  # mm the tool slides along the plate while rocking
    pour_lip_position: float = 0.3  # lip x as a fraction across the plate
    # rod below horizontal at the end of the pour; None means the sheet's
    # friction angle plus pour_margin, just steep enough for powder to slide
    pour_declination: float | None = None
    pour_margin: float = math.radians(10.0)
    pour_speed: float = math.radians(120.0)  # rad/s
    dump_hold: float = 0.5  # s
    shake_amplitude: float = math.radians(6.0)
    shake_cycles: int = 6

    def __post_init__(self) -> None:
        if self.penetration_offset_delta < 0:
            raise ValueError("penetration offset must be non-negative")
        if self.sweep_speed <= 0 or self.angular_speed <= 0:
            raise ValueError("speeds must be positive")
        if self.sweep_waypoints < 3:
            raise ValueError("need at least 3 sweep waypoints")


@dataclass(frozen=True)
class Plate:
    x0: float
    x1: float
    floor_y: float
    wall: float

    def segments(self) -> np.ndarray:
        y, h = self.floor_y, self.wall
        return np.array([
            [self.x0, y, self.x1, y],
            [self.x0, y, self.x0, y + h],
            [self.x1, y, self.x1, y + h],
        ])

    def box(self) -> tuple[float, float, float, float]:
        return (self.x0, self.floor_y - 1.0, self.x1, self.floor_y + 4 * self.wall)


@dataclass(frozen=True)
class Phase:
    label: str
    waypoints: np.ndarray  # (k, 3) poses
    times: np.ndarray  # (k,) absolute times, first equals the end of the previous phase

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])


@dataclass(frozen=True)
class TrajectoryPlan:
    phases: tuple[Phase, ...]
    penetration_offset_delta: float
    sweep_speed: float
    dump_pose: np.ndarray
    plate: Plate
    sweep_lip: np.ndarray  # commanded undeformed lip points of the sweep

    @property
    def total_duration(self) -> float:
        return float(self.phases[-1].times[-1])

    def waypoints(self) -> list[tuple[float, np.ndarray, str]]:
        """Flat (t, pose, phase) list; shared phase boundaries appear once."""
        out = []
        for ph in self.phases:
            start = 0 if not out else 1
            for t, p in zip(ph.times[start:], ph.waypoints[start:]):
                out.append((float(t), p.copy(), ph.label))
        return out

    def phase_at(self, t: float) -> str:
        for ph in self.phases:
            if t <= ph.times[-1]:
                return ph.label
        return self.phases[-1].label


def _wrap(a: float) -> float:
    return (a + math.pi) % (2 * math.pi) - math.pi


def attack_angle(container: ContainerSpec, cone: ConeConfig, params: TrajectoryParams) -> float:
    """Angle between the rod and the wall tangent at the lip.

    At least the tool's mounting angle, and steep enough that a rod of the
    slant length pivoting on the wall keeps its apex inside the sphere.
    """
    ratio = cone.slant_length / (2 * container.radius)
    a_min = math.asin(min(1.0, ratio)) + params.attack_margin
    return max(params.tool_angle, a_min)


def sweep_pose(container: ContainerSpec, cone: ConeConfig, psi: float, alpha: float, delta: float):
    """Clamp pose with the undeformed lip at polar angle ``psi``, ``delta`` into the wall."""
    c = np.asarray(container.center, dtype=float)
    er = np.array([math.cos(psi), math.sin(psi)])
    tb = np.array([-math.sin(psi), math.cos(psi)])
    lip = c + (container.radius + delta) * er
    u = math.cos(alpha) * tb - math.sin(alpha) * er
    base = lip + cone.slant_length * u
    ang = math.atan2(-u[1], -u[0])
    return np.array([base[0], base[1], ang]), lip


def _frame_point(pose, cone: ConeConfig, offset: float) -> np.ndarray:
    axis = pose[2] - cone.vertex_angle_phi / 2
    return pose[:2] - offset * np.array([math.cos(axis), math.sin(axis)])


def make_plate(container: ContainerSpec, params: TrajectoryParams) -> Plate:
    cx = container.center[0]
    right = cx - container.radius - container.wall_thickness - params.plate_gap
    return Plate(
        x0=right - params.plate_width,
        x1=right,
        floor_y=container.rim_height - params.plate_drop,
        wall=params.plate_wall,
    )


def _timed(label: str, poses: list, t0: float, params: TrajectoryParams, angular_speed=None) -> Phase:
    speed = params.sweep_speed
    w = params.angular_speed if angular_speed is None else angular_speed
    times = [t0]
    for a, b in zip(poses[:-1], poses[1:]):
        lin = float(np.hypot(*(b[:2] - a[:2]))) / speed
        rot = abs(_wrap(b[2] - a[2])) / w
        times.append(times[-1] + max(lin, rot, 1e-6))
    return Phase(label, np.array(poses, dtype=float), np.array(times))


def plan_scoop(
    container: ContainerSpec,
    cone: ConeConfig,
    params: TrajectoryParams | None = None,
    sheet_friction: float = 0.3,
) -> TrajectoryPlan:
    """Approach, insert, sweep, lift and dump phases for one scoop."""
    p = params or TrajectoryParams()
    D = container.inner_diameter_D
    d = cone.bottom_diameter_d
    if d >= D and (d - D) / D > p.max_squeeze:
        raise PlanningError(
            f"a {d:.1f} mm cone cannot be squeezed into a {D:.1f} mm bowl "
            f"(limit {100 * p.max_squeeze:.0f}% oversize)"
        )
    alpha = attack_angle(container, cone, p)
    delta = p.penetration_offset_delta
    beta = math.acos(container.cos_beta)
    down = math.atan2(-container.axis[1], -container.axis[0])
    # lower rim on the +x side, then clockwise through the bottom
    psi0 = down + beta
    psi1 = down - beta
    psis = np.linspace(psi0, psi1, p.sweep_waypoints)
    # past the bottom the rod is turned steeper so the cup leaves the rim upright
    axis_exit = _wrap(psi1 - math.pi / 2 + alpha - cone.vertex_angle_phi / 2)
    alpha_exit = alpha + max(0.0, p.exit_axis_angle - axis_exit)
    psi_bottom = -math.pi / 2
    sweep, lips = [], []
    for psi in psis:
        s = 0.0
        if psi < psi_bottom:
            s = min(1.0, (psi_bottom - psi) / (psi_bottom - psi1))
        pose, lip = sweep_pose(container, cone, psi, alpha + s * (alpha_exit - alpha), delta)
        sweep.append(pose)
        lips.append(lip)
    # frame collision where the tool reaches deepest
    params_k = container.kernel_params()
    i_bot = int(np.argmin([pt[1] for pt in lips]))
    fp = _frame_point(sweep[i_bot], cone, p.frame_offset)
    if _kernels.arc_sdf(fp[0], fp[1], *params_k)[0] < 0:
        raise PlanningError(
            f"tool frame hits the bowl wall at the bottom (vertex angle "
            f"{math.degrees(cone.vertex_angle_phi):.1f} deg is too sharp for this bowl)"
        )

    rim_h = container.rim_height
    top = rim_h + p.clearance
    first = sweep[0]
    above = first.copy()
    above[1] = max(first[1], top)
    start = above.copy()
    start[0] += 5.0
    start[1] += 5.0

    last = sweep[-1]
    # back the lip off the wall before rising past the rim
    e1 = np.array([math.cos(psi1), math.sin(psi1)])
    retract = last.copy()
    retract[:2] -= (delta + p.retract_gap) * e1
    rise = retract.copy()
    rise[1] += p.lift_clear
    cup_up = math.pi / 2 + cone.vertex_angle_phi / 2
    plate = make_plate(container, p)
    # cup upright, apex high enough that the whole V clears the rim
    lifted = np.array([rise[0], max(rise[1], top + 2.0), cup_up])
    # pour: turn about the apex until the rod slopes down onto the plate,
    # with the lip just above the floor
    decl = p.pour_declination
    if decl is None:
        decl = math.atan(sheet_friction) + p.pour_margin
    rod_final = math.pi + decl
    R = cone.slant_length
    lip = np.array([plate.x0 + p.pour_lip_position * (plate.x1 - plate.x0), plate.floor_y + p.pour_height])
    base = lip - R * np.array([math.cos(rod_final), math.sin(rod_final)])
    if base[1] <= top:
        raise PlanningError("pour pose would put the tool below the rim clearance")
    carry = np.array([base[0], base[1], cup_up])
    dump = np.array([base[0], base[1], cup_up + _wrap(rod_final - cup_up)])
    t = 0.0
    phases = [_timed("approach", [start, above], t, p)]
    t = phases[-1].times[-1]
    phases.append(_timed("insert", [above, first], t, p))
    t = phases[-1].times[-1]
    phases.append(_timed("sweep", sweep, t, p))
    t = phases[-1].times[-1]
    phases.append(_timed("lift", [last, retract, rise, lifted, carry], t, p))
    t = phases[-1].times[-1]
    shake = []
    for k in range(p.shake_cycles):
        # rock back towards level and return (never tips the lip lower),
        # backing away from the heap so the lip never digs into it
        for frac, tilt in ((k + 0.5, -p.shake_amplitude), (k + 1.0, 0.0)):
            q = dump.copy()
            q[0] += p.pour_spread * frac / p.shake_cycles
            q[2] += tilt
            shake.append(q)
    turn = _timed("dump", [carry, dump], t, p, angular_speed=p.pour_speed)
    hold = turn.times[-1] + np.linspace(0.0, p.dump_hold, len(shake) + 1)[1:]
    dump_phase = Phase(
        "dump", np.vstack([turn.waypoints, shake]), np.concatenate([turn.times, hold])
    )
    phases.append(dump_phase)
    return TrajectoryPlan(
        phases=tuple(phases),
        penetration_offset_delta=delta,
        sweep_speed=p.sweep_speed,
        dump_pose=dump.copy(),
        plate=plate,
        sweep_lip=np.array(lips),
    )


def pose_at(plan: TrajectoryPlan, t: float) -> np.ndarray:
    """Clamp pose at time ``t``: linear in position, shortest arc in angle."""
    T = plan.total_duration
    if not 0.0 <= t <= T:
        raise ValueError(f"t={t!r} outside the plan duration [0, {T}]")
    for ph in plan.phases:
        if t <= ph.times[-1]:
            break
    i = int(np.searchsorted(ph.times, t, side="right")) - 1
    i = min(max(i, 0), len(ph.times) - 2)
    t0, t1 = ph.times[i], ph.times[i + 1]
    s = 0.0 if t1 <= t0 else (t - t0) / (t1 - t0)
    a, b = ph.waypoints[i], ph.waypoints[i + 1]
    out = a + s * (b - a)
    out[2] = a[2] + s * _wrap(b[2] - a[2])
    return out


def sample_poses(plan: TrajectoryPlan, dt: float, t_start: float = 0.0, t_end: float | None = None) -> np.ndarray:
    """Poses at ``t_start + dt, t_start + 2 dt, ...`` up to ``t_end``.

    Same interpolation as :func:`pose_at`, vectorised; angles come out
    unwrapped so consecutive samples never jump by 2 pi.
    """
    T = plan.total_duration
    t_end = T if t_end is None else min(t_end, T)
    n = int(math.floor((t_end - t_start) / dt + 1e-9))
    ts = t_start + dt * np.arange(1, n + 1)
    wps = plan.waypoints()
    times = np.array([w[0] for w in wps])
    poses = np.array([w[1] for w in wps])
    ang = poses[0, 2] + np.concatenate([[0.0], np.cumsum([_wrap(x) for x in np.diff(poses[:, 2])])])
    out = np.empty((n, 3))
    out[:, 0] = np.interp(ts, times, poses[:, 0])
    out[:, 1] = np.interp(ts, times, poses[:, 1])
    out[:, 2] = np.interp(ts, times, ang)
    return out


def roof_length_limit(
    plan: TrajectoryPlan, container: ContainerSpec, cone: ConeConfig, margin: float = 1.0
) -> float:
    """Longest roof (opposite generator) that stays ``margin`` clear of the
    wall at every sweep waypoint, capped at the slant length."""
    params = container.kernel_params()
    sweep = next(ph for ph in plan.phases if ph.label == "sweep")
    R = cone.slant_length
    s = np.linspace(0.0, R, 201)
    best = R
    for pose in sweep.waypoints:
        a = pose[2] - cone.vertex_angle_phi
        for si in s[1:]:
            x = pose[0] + si * math.cos(a)
            y = pose[1] + si * math.sin(a)
            if _kernels.arc_sdf(x, y, *params)[0] < margin:
                best = min(best, si - R / 200)
                break
    return max(best, 0.0)


def export_plan_csv(plan: TrajectoryPlan, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x_mm", "y_mm", "angle_deg", "phase"])
        for t, pose, label in plan.waypoints():
            w.writerow([f"{t:.6f}", f"{pose[0]:.6f}", f"{pose[1]:.6f}", f"{math.degrees(pose[2]):.6f}", label])
