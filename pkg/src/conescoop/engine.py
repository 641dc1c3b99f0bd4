"""2D discrete-element world: particles, the sheet rod, the bowl and a plate.

Contacts are linear spring-dashpots with regularised Coulomb friction.  The
rod is co-stepped with the particles: every particle step feeds the contact
reactions to the rod nodes, which then advance through a few stable
substeps.  All loops are compiled and accumulate forces in particle-index
order, so a given world always evolves the same way.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .scene import GRAVITY, ContainerSpec, GranularSpec
from .sheet import SheetInstability, SheetState


class ParticleInstability(RuntimeError):
    """A particle exceeded the blow-up speed."""


class SettleError(RuntimeError):
    """Particles did not come to rest within the step budget."""


STAT_NAMES = ("max_penetration_ratio", "max_particle_speed", "max_node_speed",
              "max_strain", "max_clamp_force", "worst_particle", "worst_boundary")


@dataclass
class ContactParams:
    """Contact law constants.

    Boundaries (bowl, plate, tool segments) use ``boundary_ratio * kn``: a
    particle hitting a wall, or a rod node much heavier than itself, brings
    its full mass rather than the halved pair mass, so a ratio of 2 gives both kinds of contact the same
    frequency and the same stability margin.  ``air_drag`` (1/s) is a
    linear drag on particle velocity; fine powders settle slowly in air.
    """

    kn: float  # g/s^2
    zeta: float = 0.6  # damping ratio of the normal dashpot
    ct_ratio: float = 1.0  # tangential viscosity relative to the normal one
    mu: float = 0.5
    mu_wall: float = 0.5
    boundary_ratio: float = 2.0
    air_drag: float = 0.0

    def packed(self) -> np.ndarray:
        return np.array([self.kn, self.zeta, self.ct_ratio, self.mu, self.mu_wall,
                         self.boundary_ratio, self.air_drag])


def stability_bound(mass: np.ndarray, kn: float) -> float:
    """Largest admissible step, ``0.2 sqrt(m_min / k_n)``."""
    if len(mass) == 0:
        return math.inf
    return 0.2 * math.sqrt(float(np.min(mass)) / kn)


@dataclass
class ParticleWorld:
    pos: np.ndarray
    vel: np.ndarray
    radius: np.ndarray
    mass: np.ndarray
    container: ContainerSpec
    contact: ContactParams
    dt: float
    active: np.ndarray | None = None
    sheet: SheetState | None = None
    static_segments: np.ndarray = field(default_factory=lambda: np.zeros((0, 4)))
    static_mu: np.ndarray = field(default_factory=lambda: np.zeros(0))
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, -GRAVITY]))
    sim_time: float = 0.0
    rng_seed: int = 0
    kill_box: np.ndarray | None = None
    speed_limit: float = 2.0e4
    sheet_wall_friction: float = 0.3
    stats: np.ndarray = field(default_factory=lambda: np.zeros(len(STAT_NAMES)))
    # the clock is origin + steps * dt so it does not depend on how steps are batched
    step_count: int = field(default=0, init=False)
    time_origin: float = field(default=0.0, init=False)

    def __post_init__(self) -> None:
        self.time_origin = self.sim_time
        n = len(self.radius)
        self.pos = np.ascontiguousarray(self.pos, dtype=float).reshape(n, 2)
        self.vel = np.ascontiguousarray(self.vel, dtype=float).reshape(n, 2)
        self.radius = np.ascontiguousarray(self.radius, dtype=float)
        self.mass = np.ascontiguousarray(self.mass, dtype=float)
        if len(self.mass) != n:
            raise ValueError("particle arrays must have equal length")
        if n and (self.radius.min() <= 0 or self.mass.min() <= 0):
            raise ValueError("particle radii and masses must be positive")
        if self.active is None:
            self.active = np.ones(n, dtype=bool)
        self.gravity = np.asarray(self.gravity, dtype=float)
        self.static_segments = np.ascontiguousarray(self.static_segments, dtype=float).reshape(-1, 4)
        self.static_mu = np.ascontiguousarray(self.static_mu, dtype=float)
        if self.kill_box is None:
            D = self.container.inner_diameter_D
            cx, cy = self.container.center
            self.kill_box = np.array([cx - 6 * D, cy - 3 * D, cx + 6 * D, cy + 6 * D])
        bound = stability_bound(self.mass, self.contact.kn)
        if self.dt > bound * (1 + 1e-12):
            raise ValueError(f"dt={self.dt:.3g} s exceeds the stability bound {bound:.3g} s")

    def reset_clock(self, t: float = 0.0) -> None:
        self.time_origin = t
        self.step_count = 0
        self.sim_time = t

    @property
    def n_particles(self) -> int:
        return len(self.radius)

    def total_mass(self) -> float:
        return float(self.mass.sum())

    def kinetic_energy(self) -> float:
        v2 = (self.vel[self.active] ** 2).sum(axis=1)
        return 0.5 * float((self.mass[self.active] * v2).sum())

    def momentum(self) -> np.ndarray:
        return (self.mass[self.active, None] * self.vel[self.active]).sum(axis=0)

    def copy(self) -> "ParticleWorld":
        out = ParticleWorld.__new__(ParticleWorld)
        for k, v in self.__dict__.items():
            if isinstance(v, np.ndarray):
                v = v.copy()
            elif isinstance(v, SheetState):
                v = v.copy()
            out.__dict__[k] = v
        return out


def advance(world: ParticleWorld, poses: np.ndarray | None = None, n_steps: int | None = None) -> ParticleWorld:
    """Run several steps in one compiled call.

    With a sheet, ``poses`` gives the commanded clamp pose at the end of
    each step.  Without one, ``n_steps`` sets the count.
    """
    sh = world.sheet
    if poses is None:
        if n_steps is None:
            raise ValueError("give either poses or n_steps")
        base = sh.base_pose if sh is not None else np.zeros(3)
        poses = np.tile(base, (n_steps, 1))
    poses = np.ascontiguousarray(poses, dtype=float).reshape(-1, 3)
    if len(poses) == 0:
        return world
    c = world.contact
    if sh is not None:
        sheet_args = (
            True, sh.nodes, sh.node_velocities, sh.node_mass, sh.segment_rest_length,
            sh.rest_turn, sh.k_stretch, sh.k_bend, sh.internal_damping, sh.drag,
            sh.k_wall, world.sheet_wall_friction, sh.friction_coefficient,
            sh.roof_length, sh.vertex_angle, poses, float(sh.base_pose[2]), world.dt,
            sh.substeps_for(world.dt),
            sh.blowup_speed,
        )
        prev = sh.base_pose.copy()
    else:
        dummy = np.zeros((2, 2))
        sheet_args = (
            False, dummy, dummy.copy(), 1.0, np.ones(1), np.zeros(1), 0.0, np.zeros(1),
            0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, poses, 0.0, world.dt, 1, 1e300,
        )
    code = _kernels.cosim_steps(
        world.pos, world.vel, world.radius, world.mass, world.active,
        float(world.gravity[0]), float(world.gravity[1]),
        c.packed(), world.container.kernel_params(),
        world.static_segments, world.static_mu,
        *sheet_args,
        world.kill_box, world.speed_limit, world.stats,
    )
    world.step_count += len(poses)
    world.sim_time = world.time_origin + world.step_count * world.dt
    if sh is not None:
        last = poses[-1]
        d = last - (poses[-2] if len(poses) > 1 else prev)
        d[2] = (d[2] + math.pi) % (2 * math.pi) - math.pi
        sh.base_velocity = d / world.dt
        sh.base_pose = last.copy()
    if code == 1:
        raise ParticleInstability(
            f"particle speed {world.stats[1]:.3g} mm/s exceeded {world.speed_limit:.3g} mm/s "
            f"at t={world.sim_time:.4f} s"
        )
    if code == 2:
        raise SheetInstability(
            f"sheet node speed {world.stats[2]:.3g} mm/s exceeded the blow-up threshold "
            f"at t={world.sim_time:.4f} s"
        )
    return world


def step(world: ParticleWorld, pose=None) -> ParticleWorld:
    """One integration step; the sheet clamp moves to ``pose`` if given."""
    if world.sheet is not None:
        p = world.sheet.base_pose if pose is None else pose
        return advance(world, np.asarray(p, dtype=float).reshape(1, 3))
    return advance(world, n_steps=1)


def contact_forces(world: ParticleWorld) -> tuple[np.ndarray, np.ndarray]:
    """Net force on each particle and its boundary normal load, without stepping."""
    n = world.n_particles
    c = world.contact
    cell = max(2.0 * float(world.radius.max()), 1e-6) if n else 1.0
    x0, y0, nx, ny = _kernels.grid_dims(world.pos, world.active, cell)
    order = np.empty(n, dtype=np.int64)
    cs = np.empty(nx * ny, dtype=np.int64)
    cc = np.empty(nx * ny, dtype=np.int64)
    keys = _kernels.build_cells(world.pos, world.active, cell, order, cs, cc, x0, y0, nx, ny)
    bforce = np.zeros(n)
    pen = np.zeros(n)
    nseg = len(world.static_segments)
    f = _kernels.particle_forces(
        world.pos, world.vel, world.radius, world.mass, world.active,
        float(world.gravity[0]), float(world.gravity[1]),
        c.packed(), world.container.kernel_params(),
        world.static_segments, np.zeros((nseg, 4)), np.full((nseg, 2), -1, dtype=np.int64),
        world.static_mu, np.zeros((1, 2)), bforce, pen, np.full(n, -1, dtype=np.int64),
        cell, nx, ny, order, cs, cc, keys,
    )
    return f, bforce


# ---------------------------------------------------------------- filling

def _segment_area(radius: float, h: float) -> float:
    c = radius - h
    return radius * radius * math.acos(c / radius) - c * math.sqrt(max(0.0, radius * radius - c * c))


def fill_level(container: ContainerSpec, granular: GranularSpec, lip_margin: float = 0.85) -> float:
    """2D pool depth for the fill: the 3D cap depth of the pour volume, kept
    below the lower rim so the settled pool does not overflow in the plane."""
    h3 = container.fill_depth(granular.pour_volume)
    lo, _ = container.rim_points()
    h_lip = lo[1] - container.lowest_point[1]
    return min(h3, lip_margin * h_lip)


def particle_count(container: ContainerSpec, granular: GranularSpec) -> int:
    h = fill_level(container, granular)
    r = granular.particle_radius_mean
    s = granular.particle_radius_spread
    mean_area = math.pi * r * r * (1 + s * s / 3)  # uniform spread in radius
    return max(1, int(round(granular.packing_fraction * _segment_area(container.radius, h) / mean_area)))


def contact_params_for(granular: GranularSpec, mean_mass: float) -> ContactParams:
    return ContactParams(
        kn=mean_mass * granular.contact_frequency**2,
        zeta=granular.restitution_damping,
        ct_ratio=1.0,
        mu=granular.friction_coefficient,
        mu_wall=granular.friction_coefficient,
        air_drag=granular.air_drag,
    )


def auto_dt(mass: np.ndarray, kn: float, safety: float = 0.95) -> float:
    return safety * stability_bound(mass, kn)


def fill_and_settle(
    container: ContainerSpec,
    granular: GranularSpec,
    seed: int,
    max_particles: int = 5000,
    settle_threshold: float = 5.0,
    max_settle_steps: int = 200_000,
    shake_time: float = 0.08,
    shake_amplitude: float = 0.15,
    shake_frequency: float = 25.0,
    chunk: int = 500,
) -> ParticleWorld:
    """Deposit the powder in the bowl, shake it level, and let it come to rest.

    Particles start on a jittered lattice filling the bottom of the bowl,
    fall under gravity, are levelled by a short sideways oscillation of
    gravity, and are then stepped until the fastest one moves slower than
    ``settle_threshold`` (mm/s).
    """
    rng = np.random.default_rng(seed)
    n = particle_count(container, granular) if granular.total_mass > 0 else 0
    if n > max_particles:
        raise ValueError(f"{n} particles needed, more than max_particles={max_particles}")
    r_mean = granular.particle_radius_mean
    s = granular.particle_radius_spread
    radius = r_mean * (1 + s * rng.uniform(-1.0, 1.0, n))
    r_max = r_mean * (1 + s)

    # lattice slots inside the bowl, lowest first
    spacing = 2.05 * r_max
    R = container.radius
    cx, cy = container.center
    xs = np.arange(cx - R, cx + R, spacing)
    ys = np.arange(cy - R, cy + R, spacing)
    gx, gy = np.meshgrid(xs, ys)
    cand = np.column_stack([gx.ravel(), gy.ravel()])
    cand += rng.uniform(-0.02, 0.02, cand.shape) * spacing
    params = container.kernel_params()
    ok = np.array([_kernels.arc_sdf(p[0], p[1], *params)[0] > 1.05 * r_max for p in cand], dtype=bool)
    ok &= container.inside_bowl(cand)
    cand = cand[ok]
    cand = cand[np.lexsort((cand[:, 0], cand[:, 1]))]
    if len(cand) < n:
        raise ValueError("the bowl cannot hold the requested powder at this grain size")
    pos = cand[:n].copy()

    mass = radius**2
    if n:
        mass *= granular.total_mass / mass.sum()
    contact = contact_params_for(granular, float(mass.mean()) if n else 1.0)
    dt = auto_dt(mass, contact.kn) if n else 1e-5
    world = ParticleWorld(
        pos=pos, vel=np.zeros((n, 2)), radius=radius, mass=mass, container=container,
        contact=contact, dt=dt, rng_seed=seed,
    )
    if n == 0:
        return world

    # shake: gravity tilts back and forth
    n_shake = int(round(shake_time / dt))
    k = 0
    while k < n_shake:
        m = min(chunk, n_shake - k)
        t = world.sim_time
        world.gravity = np.array([GRAVITY * shake_amplitude * math.sin(2 * math.pi * shake_frequency * t), -GRAVITY])
        advance(world, n_steps=m)
        k += m
    world.gravity = np.array([0.0, -GRAVITY])

    steps = 0
    while True:
        advance(world, n_steps=chunk)
        steps += chunk
        speed = np.hypot(world.vel[:, 0], world.vel[:, 1])[world.active]
        if speed.size == 0 or speed.max() < settle_threshold:
            break
        if steps >= max_settle_steps:
            raise SettleError(
                f"max particle speed {speed.max():.3g} mm/s after {steps} settle steps"
            )

    # anything that escaped the bowl while settling is discarded
    keep = world.active & container.inside_bowl(world.pos)
    if not keep.all():
        world.pos = np.ascontiguousarray(world.pos[keep])
        world.vel = np.ascontiguousarray(world.vel[keep])
        world.radius = np.ascontiguousarray(world.radius[keep])
        world.mass = np.ascontiguousarray(world.mass[keep] * granular.total_mass / world.mass[keep].sum())
        world.active = np.ones(len(world.radius), dtype=bool)
    world.vel[:] = 0.0
    world.reset_clock()
    world.stats[:] = 0.0
    return world


def free_surface_heights(world: ParticleWorld, bins: int = 8) -> np.ndarray:
    """Top particle height in equal-width columns across the pile."""
    p = world.pos[world.active]
    if len(p) == 0:
        return np.zeros(0)
    edges = np.linspace(p[:, 0].min(), p[:, 0].max(), bins + 1)
    idx = np.clip(np.searchsorted(edges, p[:, 0], side="right") - 1, 0, bins - 1)
    tops = np.full(bins, -np.inf)
    np.maximum.at(tops, idx, p[:, 1] + world.radius[world.active])
    return tops[np.isfinite(tops)]


# ---------------------------------------------------------------- accounting

@dataclass(frozen=True)
class Regions:
    """Zones used by :func:`measure`.

    ``plate_box`` is (x0, y0, x1, y1).  A particle counts as carried when it
    sits inside the V between the rod and the roof, or within
    ``capture_distance`` of the rod.
    """

    container: ContainerSpec
    plate_box: tuple[float, float, float, float]
    capture_distance: float = 2.0


@dataclass(frozen=True)
class MassAccount:
    delivered: float
    carried: float
    residue: float
    spilled: float

    @property
    def total(self) -> float:
        return self.delivered + self.carried + self.residue + self.spilled


def _points_in_polygon(pts: np.ndarray, poly: np.ndarray) -> np.ndarray:
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    j = len(poly) - 1
    for i in range(len(poly)):
        xi, yi = poly[i]
        xj, yj = poly[j]
        cross = (yi > y) != (yj > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = (xj - xi) * (y - yi) / (yj - yi) + xi
        inside ^= cross & (x < xint)
        j = i
    return inside


def _dist_to_polyline(pts: np.ndarray, line: np.ndarray) -> np.ndarray:
    best = np.full(len(pts), np.inf)
    for a, b in zip(line[:-1], line[1:]):
        e = b - a
        ee = float(e @ e)
        t = np.clip(((pts - a) @ e) / ee, 0.0, 1.0) if ee > 0 else np.zeros(len(pts))
        q = a + t[:, None] * e
        best = np.minimum(best, np.hypot(*(pts - q).T))
    return best


def carried_mask(world: ParticleWorld, capture_distance: float) -> np.ndarray:
    sh = world.sheet
    if sh is None or world.n_particles == 0:
        return np.zeros(world.n_particles, dtype=bool)
    p0, p1 = sh.roof_segment()
    poly = np.vstack([sh.nodes, p1])
    mask = _points_in_polygon(world.pos, poly)
    mask |= _dist_to_polyline(world.pos, sh.nodes) < capture_distance
    return mask


def measure(world: ParticleWorld, regions: Regions) -> MassAccount:
    """Split the particle mass into delivered / carried / residue / spilled.

    Precedence is plate, then sheet, then bowl; everything else, including
    particles that left the simulation domain, is spilled.  Fractions are
    of the total mass and sum to one (all zero for an empty world).
    """
    total = world.total_mass()
    if total <= 0:
        return MassAccount(0.0, 0.0, 0.0, 0.0)
    p = world.pos
    x0, y0, x1, y1 = regions.plate_box
    act = world.active
    on_plate = act & (p[:, 0] >= x0) & (p[:, 0] <= x1) & (p[:, 1] >= y0) & (p[:, 1] <= y1)
    carried = act & ~on_plate & carried_mask(world, regions.capture_distance)
    in_bowl = act & ~on_plate & ~carried & regions.container.inside_bowl(p)
    m = world.mass
    delivered = float(m[on_plate].sum()) / total
    carried_f = float(m[carried].sum()) / total
    residue = float(m[in_bowl].sum()) / total
    spilled = max(0.0, 1.0 - delivered - carried_f - residue)
    return MassAccount(delivered, carried_f, residue, spilled)


# ---------------------------------------------------------------- traces

class TraceWriter:
    """CSV frames: one row per particle and per sheet node.

    Columns: ``time, kind, index, x_mm, y_mm``; ``kind`` is ``p`` for a
    particle (inactive ones are skipped) and ``s`` for a sheet node.
    """

    def __init__(self, path):
        self._fh = open(path, "w", newline="")
        self._w = csv.writer(self._fh)
        self._w.writerow(["time", "kind", "index", "x_mm", "y_mm"])

    def frame(self, world: ParticleWorld) -> None:
        t = f"{world.sim_time:.6f}"
        for i in np.flatnonzero(world.active):
            self._w.writerow([t, "p", int(i), f"{world.pos[i, 0]:.4f}", f"{world.pos[i, 1]:.4f}"])
        if world.sheet is not None:
            for i, (x, y) in enumerate(world.sheet.nodes):
                self._w.writerow([t, "s", i, f"{x:.4f}", f"{y:.4f}"])

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
