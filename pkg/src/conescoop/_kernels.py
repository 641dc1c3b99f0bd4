"""Compiled inner loops for the particle and rod solvers.

Everything here works on flat float64 arrays so that numba can compile it
in nopython mode.  Force accumulation always runs in ascending particle
index order, which keeps trajectories bit-identical between runs.
"""

import math

import numpy as np
from numba import njit

# container tuple layout: (cx, cy, ax, ay, rm, half_t, cos_beta)
#   a      unit vector pointing out of the bowl mouth
#   rm     mid-radius of the wall (inner radius + half thickness)
#   beta   half-angle of the wall arc measured from -a


@njit(cache=True, error_model="numpy")
def _unit(x, y, r):
    # subnormal offsets round in hypot; rescale before dividing
    if r < 1e-150:
        x *= 1e300
        y *= 1e300
        r = math.hypot(x, y)
    return x / r, y / r


@njit(cache=True, error_model="numpy")
def arc_sdf(px, py, cx, cy, ax, ay, rm, half_t, cos_beta):
    """Signed distance from a point to the rounded wall arc.

    Returns (distance, gx, gy) where (gx, gy) is the unit gradient.
    Negative inside the wall material.
    """
    qx = px - cx
    qy = py - cy
    r = math.hypot(qx, qy)
    # cosine of the angle between q and the bottom direction (-a)
    if r > 0.0:
        c = -(qx * ax + qy * ay) / r
    else:
        c = 1.0
    if c >= cos_beta:
        if r > 0.0:
            ux, uy = _unit(qx, qy, r)
        else:
            ux = -ax
            uy = -ay
        s = r - rm
        if s >= 0.0:
            return s - half_t, ux, uy
        return -s - half_t, -ux, -uy
    # outside the angular span: nearest arc endpoint
    sb = math.sqrt(max(0.0, 1.0 - cos_beta * cos_beta))
    # endpoints are -a rotated by +/- beta
    bx = -ax
    by = -ay
    e1x = rm * (bx * cos_beta - by * sb)
    e1y = rm * (bx * sb + by * cos_beta)
    e2x = rm * (bx * cos_beta + by * sb)
    e2y = rm * (-bx * sb + by * cos_beta)
    d1x = qx - e1x
    d1y = qy - e1y
    d2x = qx - e2x
    d2y = qy - e2y
    n1 = math.hypot(d1x, d1y)
    n2 = math.hypot(d2x, d2y)
    if n1 <= n2:
        if n1 > 0.0:
            u1x, u1y = _unit(d1x, d1y, n1)
            return n1 - half_t, u1x, u1y
        return -half_t, ax, ay
    if n2 > 0.0:
        u2x, u2y = _unit(d2x, d2y, n2)
        return n2 - half_t, u2x, u2y
    return -half_t, ax, ay


@njit(cache=True, error_model="numpy")
def _closest_on_segment(px, py, x0, y0, x1, y1):
    ex = x1 - x0
    ey = y1 - y0
    ee = ex * ex + ey * ey
    if ee <= 0.0:
        return 0.0, x0, y0
    t = ((px - x0) * ex + (py - y0) * ey) / ee
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    return t, x0 + t * ex, y0 + t * ey


@njit(cache=True, error_model="numpy")
def _contact_force(nx, ny, overlap, rvx, rvy, kn, cn, ct, mu):
    """Spring-dashpot normal force plus regularised Coulomb friction.

    (nx, ny) points from the other body towards this particle; (rvx, rvy) is
    this particle's velocity relative to the other body.  Returns the force
    on this particle and the normal magnitude.
    """
    vn = rvx * nx + rvy * ny
    fn = kn * overlap - cn * vn
    if fn < 0.0:
        fn = 0.0
    tvx = rvx - vn * nx
    tvy = rvy - vn * ny
    vt = math.sqrt(tvx * tvx + tvy * tvy)
    fx = fn * nx
    fy = fn * ny
    if vt > 1e-12 and fn > 0.0:
        ft = ct * vt
        cap = mu * fn
        if ft > cap:
            ft = cap
        fx -= ft * tvx / vt
        fy -= ft * tvy / vt
    return fx, fy, fn


@njit(cache=True, error_model="numpy")
def grid_dims(pos, active, cell):
    """Origin and size of a dense grid covering the active particles."""
    n = pos.shape[0]
    x0 = 1e300
    y0 = 1e300
    x1 = -1e300
    y1 = -1e300
    for i in range(n):
        if not active[i]:
            continue
        x0 = min(x0, pos[i, 0])
        x1 = max(x1, pos[i, 0])
        y0 = min(y0, pos[i, 1])
        y1 = max(y1, pos[i, 1])
    if x1 < x0:
        return 0.0, 0.0, 1, 1
    return x0, y0, int((x1 - x0) / cell) + 1, int((y1 - y0) / cell) + 1


@njit(cache=True, error_model="numpy")
def build_cells(pos, active, cell, order, cell_start, cell_count, x0, y0, nx, ny):
    """Counting-sort active particles into a uniform grid (deterministic).

    Returns the cell of every particle (-1 when inactive).
    """
    n = pos.shape[0]
    ncell = nx * ny
    for c in range(ncell):
        cell_count[c] = 0
    keys = np.empty(n, dtype=np.int64)
    for i in range(n):
        if not active[i]:
            keys[i] = -1
            continue
        ix = min(max(int((pos[i, 0] - x0) / cell), 0), nx - 1)
        iy = min(max(int((pos[i, 1] - y0) / cell), 0), ny - 1)
        k = iy * nx + ix
        keys[i] = k
        cell_count[k] += 1
    acc = 0
    for c in range(ncell):
        cell_start[c] = acc
        acc += cell_count[c]
    fill = cell_start[:ncell].copy()
    for i in range(n):
        k = keys[i]
        if k >= 0:
            order[fill[k]] = i
            fill[k] += 1
    return keys


@njit(cache=True, error_model="numpy")
def particle_forces(
    pos, vel, rad, mass, active, gx, gy,
    cp,
    container,
    seg, seg_vel, seg_node, seg_mu,
    node_force,
    bforce, pen_ratio, pen_src,
    cell, nx, ny, order, cell_start, cell_count, keys,
):
    """Total force on every active particle.

    ``seg`` holds line segments (x0, y0, x1, y1) that particles collide with;
    ``seg_node`` maps each segment end to a sheet node index (-1 when the
    segment is static or kinematic), and reaction forces land in
    ``node_force``.  ``bforce`` receives the normal force each particle takes
    from rigid boundaries and ``pen_ratio`` the deepest penetration into the
    wall or any segment as a fraction of the radius; ``pen_src`` names the
    culprit (-1 for the wall, else the segment index).
    """
    n = pos.shape[0]
    kn = cp[0]
    zeta = cp[1]
    ct_ratio = cp[2]
    mu = cp[3]
    mu_wall = cp[4]
    kb = cp[5] * kn  # wall and tool segments
    drag = cp[6]
    f = np.zeros((n, 2))
    buckets = np.empty(9, dtype=np.int64)
    cx, cy, ax, ay, rm, half_t, cos_beta = container
    nseg = seg.shape[0]
    # bounding boxes of groups of segments, for a cheap far-field reject
    G = 4
    ngrp = (nseg + G - 1) // G
    gbox = np.empty((ngrp, 4))
    for g in range(ngrp):
        gbox[g, 0] = 1e300
        gbox[g, 1] = 1e300
        gbox[g, 2] = -1e300
        gbox[g, 3] = -1e300
        for s in range(g * G, min(nseg, (g + 1) * G)):
            gbox[g, 0] = min(gbox[g, 0], seg[s, 0], seg[s, 2])
            gbox[g, 1] = min(gbox[g, 1], seg[s, 1], seg[s, 3])
            gbox[g, 2] = max(gbox[g, 2], seg[s, 0], seg[s, 2])
            gbox[g, 3] = max(gbox[g, 3], seg[s, 1], seg[s, 3])
    for i in range(n):
        bforce[i] = 0.0
        pen_ratio[i] = 0.0
        if not active[i]:
            continue
        f[i, 0] += mass[i] * (gx - drag * vel[i, 0])
        f[i, 1] += mass[i] * (gy - drag * vel[i, 1])

    for i in range(n):
        if not active[i]:
            continue
        xi = pos[i, 0]
        yi = pos[i, 1]
        ri = rad[i]
        mi = mass[i]
        k = keys[i]
        ix = k % nx
        iy = k // nx
        nb = 0
        for dy in range(-1, 2):
            jy = iy + dy
            if jy < 0 or jy >= ny:
                continue
            for dx in range(-1, 2):
                jx = ix + dx
                if jx < 0 or jx >= nx:
                    continue
                buckets[nb] = jy * nx + jx
                nb += 1
        for q in range(nb):
            c = buckets[q]
            s = cell_start[c]
            for m in range(s, s + cell_count[c]):
                j = order[m]
                if j <= i or not active[j]:
                    continue
                ddx = xi - pos[j, 0]
                ddy = yi - pos[j, 1]
                dist2 = ddx * ddx + ddy * ddy
                rs = ri + rad[j]
                if dist2 >= rs * rs or dist2 <= 0.0:
                    continue
                dist = math.sqrt(dist2)
                nxv = ddx / dist
                nyv = ddy / dist
                meff = mi * mass[j] / (mi + mass[j])
                cn = 2.0 * zeta * math.sqrt(kn * meff)
                fx, fy, fn = _contact_force(
                    nxv, nyv, rs - dist,
                    vel[i, 0] - vel[j, 0], vel[i, 1] - vel[j, 1],
                    kn, cn, ct_ratio * cn, mu,
                )
                f[i, 0] += fx
                f[i, 1] += fy
                f[j, 0] -= fx
                f[j, 1] -= fy

        # container wall
        d, ngx, ngy = arc_sdf(xi, yi, cx, cy, ax, ay, rm, half_t, cos_beta)
        if d < ri:
            overlap = ri - d
            cn = 2.0 * zeta * math.sqrt(kb * mi)
            fx, fy, fn = _contact_force(
                ngx, ngy, overlap, vel[i, 0], vel[i, 1], kb, cn, ct_ratio * cn, mu_wall
            )
            f[i, 0] += fx
            f[i, 1] += fy
            bforce[i] += fn
            pr = overlap / ri
            if pr > pen_ratio[i]:
                pen_ratio[i] = pr
                pen_src[i] = -1

        # segments: sheet, roof, plate
        for g in range(ngrp):
            if (xi + ri < gbox[g, 0] or xi - ri > gbox[g, 2]
                    or yi + ri < gbox[g, 1] or yi - ri > gbox[g, 3]):
                continue
            for s in range(g * G, min(nseg, (g + 1) * G)):
                sx0 = seg[s, 0]
                sy0 = seg[s, 1]
                sx1 = seg[s, 2]
                sy1 = seg[s, 3]
                if xi + ri < min(sx0, sx1) or xi - ri > max(sx0, sx1):
                    continue
                if yi + ri < min(sy0, sy1) or yi - ri > max(sy0, sy1):
                    continue
                t, qx, qy = _closest_on_segment(xi, yi, sx0, sy0, sx1, sy1)
                ddx = xi - qx
                ddy = yi - qy
                dist2 = ddx * ddx + ddy * ddy
                if dist2 >= ri * ri or dist2 <= 0.0:
                    continue
                dist = math.sqrt(dist2)
                nxv = ddx / dist
                nyv = ddy / dist
                svx = (1.0 - t) * seg_vel[s, 0] + t * seg_vel[s, 2]
                svy = (1.0 - t) * seg_vel[s, 1] + t * seg_vel[s, 3]
                a = seg_node[s, 0]
                b = seg_node[s, 1]
                cn = 2.0 * zeta * math.sqrt(kb * mi)
                fx, fy, fn = _contact_force(
                    nxv, nyv, ri - dist, vel[i, 0] - svx, vel[i, 1] - svy,
                    kb, cn, ct_ratio * cn, seg_mu[s],
                )
                f[i, 0] += fx
                f[i, 1] += fy
                if a >= 0:
                    node_force[a, 0] -= (1.0 - t) * fx
                    node_force[a, 1] -= (1.0 - t) * fy
                if b >= 0:
                    node_force[b, 0] -= t * fx
                    node_force[b, 1] -= t * fy
                if a < 0 and b < 0:
                    bforce[i] += fn
                pr = (ri - dist) / ri
                if pr > pen_ratio[i]:
                    pen_ratio[i] = pr
                    pen_src[i] = s
    return f


@njit(cache=True, error_model="numpy")
def integrate_particles(pos, vel, mass, active, f, dt):
    n = pos.shape[0]
    vmax = 0.0
    for i in range(n):
        if not active[i]:
            continue
        vel[i, 0] += dt * f[i, 0] / mass[i]
        vel[i, 1] += dt * f[i, 1] / mass[i]
        pos[i, 0] += dt * vel[i, 0]
        pos[i, 1] += dt * vel[i, 1]
        v = vel[i, 0] * vel[i, 0] + vel[i, 1] * vel[i, 1]
        if v > vmax:
            vmax = v
    return math.sqrt(vmax)


@njit(cache=True, error_model="numpy")
def _angle(ex, ey):
    return math.atan2(ey, ex)


@njit(cache=True, error_model="numpy")
def _wrap(a):
    while a > math.pi:
        a -= 2.0 * math.pi
    while a < -math.pi:
        a += 2.0 * math.pi
    return a


@njit(cache=True, error_model="numpy")
def rod_forces(x, v, rest_len, rest_turn, k_stretch, k_bend, c_int, base_angle, out):
    """Internal forces of a planar discrete rod.

    Node 0 is the clamp.  ``k_bend[i]`` acts on the turning angle at node i;
    at node 0 the turning angle is measured from ``base_angle``.  Returns the
    elastic energy.
    """
    n = x.shape[0]
    for i in range(n):
        out[i, 0] = 0.0
        out[i, 1] = 0.0
    energy = 0.0
    for s in range(n - 1):
        ex = x[s + 1, 0] - x[s, 0]
        ey = x[s + 1, 1] - x[s, 1]
        L = math.sqrt(ex * ex + ey * ey)
        dl = L - rest_len[s]
        energy += 0.5 * k_stretch * dl * dl
        fx = k_stretch * dl * ex / L
        fy = k_stretch * dl * ey / L
        out[s, 0] += fx
        out[s, 1] += fy
        out[s + 1, 0] -= fx
        out[s + 1, 1] -= fy
        dvx = v[s + 1, 0] - v[s, 0]
        dvy = v[s + 1, 1] - v[s, 1]
        out[s, 0] += c_int * dvx
        out[s, 1] += c_int * dvy
        out[s + 1, 0] -= c_int * dvx
        out[s + 1, 1] -= c_int * dvy
    for i in range(n - 1):
        e2x = x[i + 1, 0] - x[i, 0]
        e2y = x[i + 1, 1] - x[i, 1]
        l2 = e2x * e2x + e2y * e2y
        g2x = -e2y / l2
        g2y = e2x / l2
        if i == 0:
            psi = _wrap(_angle(e2x, e2y) - base_angle) - rest_turn[0]
            tq = k_bend[0] * psi
            energy += 0.5 * k_bend[0] * psi * psi
            out[1, 0] -= tq * g2x
            out[1, 1] -= tq * g2y
            out[0, 0] += tq * g2x
            out[0, 1] += tq * g2y
            continue
        e1x = x[i, 0] - x[i - 1, 0]
        e1y = x[i, 1] - x[i - 1, 1]
        l1 = e1x * e1x + e1y * e1y
        g1x = -e1y / l1
        g1y = e1x / l1
        psi = _wrap(_angle(e2x, e2y) - _angle(e1x, e1y)) - rest_turn[i]
        tq = k_bend[i] * psi
        energy += 0.5 * k_bend[i] * psi * psi
        out[i + 1, 0] -= tq * g2x
        out[i + 1, 1] -= tq * g2y
        out[i, 0] += tq * (g2x + g1x)
        out[i, 1] += tq * (g2y + g1y)
        out[i - 1, 0] -= tq * g1x
        out[i - 1, 1] -= tq * g1y
    return energy


@njit(cache=True, error_model="numpy")
def rod_substeps(
    x, v, m_node, rest_len, rest_turn, k_stretch, k_bend, c_int, c_abs,
    base_x, base_y, base_vx, base_vy, base_angle,
    ext, gx, gy, container, k_wall, mu_wall, wall_on,
    dt, nsub, vmax_abort, work,
):
    """Advance the rod by ``nsub`` symplectic-Euler substeps of ``dt/nsub``.

    Node 0 follows the base kinematically.  External forces ``ext`` are held
    constant over the substeps.  Returns (max node speed, reaction force on
    the clamp (fx, fy), blew_up flag).
    """
    n = x.shape[0]
    h = dt / nsub
    cx, cy, ax, ay, rm, half_t, cos_beta = container
    vpeak = 0.0
    rx = 0.0
    ry = 0.0
    for _ in range(nsub):
        x[0, 0] = base_x
        x[0, 1] = base_y
        v[0, 0] = base_vx
        v[0, 1] = base_vy
        rod_forces(x, v, rest_len, rest_turn, k_stretch, k_bend, c_int, base_angle, work)
        rx = work[0, 0] + ext[0, 0]
        ry = work[0, 1] + ext[0, 1]
        for i in range(1, n):
            fx = work[i, 0] + ext[i, 0] + m_node * gx - c_abs * m_node * (v[i, 0] - base_vx)
            fy = work[i, 1] + ext[i, 1] + m_node * gy - c_abs * m_node * (v[i, 1] - base_vy)
            if wall_on:
                d, ngx, ngy = arc_sdf(x[i, 0], x[i, 1], cx, cy, ax, ay, rm, half_t, cos_beta)
                if d < 0.0:
                    fn = -k_wall * d
                    vn = v[i, 0] * ngx + v[i, 1] * ngy
                    fn -= 2.0 * math.sqrt(k_wall * m_node) * vn
                    if fn > 0.0:
                        fx += fn * ngx
                        fy += fn * ngy
                        tvx = v[i, 0] - vn * ngx
                        tvy = v[i, 1] - vn * ngy
                        vt = math.sqrt(tvx * tvx + tvy * tvy)
                        if vt > 1e-12:
                            ft = min(mu_wall * fn, 2.0 * math.sqrt(k_wall * m_node) * vt)
                            fx -= ft * tvx / vt
                            fy -= ft * tvy / vt
            v[i, 0] += h * fx / m_node
            v[i, 1] += h * fy / m_node
        for i in range(1, n):
            x[i, 0] += h * v[i, 0]
            x[i, 1] += h * v[i, 1]
            sp = math.sqrt(v[i, 0] * v[i, 0] + v[i, 1] * v[i, 1])
            if sp > vpeak:
                vpeak = sp
        if vpeak > vmax_abort:
            return vpeak, rx, ry, True
    return vpeak, rx, ry, False


@njit(cache=True, error_model="numpy")
def cosim_steps(
    pos, vel, rad, mass, active,
    gx, gy, cp, container,
    static_seg, static_mu,
    has_sheet, nodes, nvel, m_node, rest_len, rest_turn, k_stretch, k_bend,
    c_int, c_abs, k_wall_sheet, mu_sheet_wall, sheet_mu, roof_len, vertex_angle,
    poses, angle0, dt, nsub, sheet_blowup,
    kill_box, speed_abort,
    stats,
):
    """Run ``poses.shape[0]`` coupled particle/rod steps.

    ``poses[k]`` is the commanded clamp pose (x, y, angle) at the end of
    step k and ``angle0`` the clamp angle before the first step.  ``stats`` is updated in place:
        0 max container/plate penetration ratio
        1 max particle speed
        2 max sheet node speed
        3 max segment strain (absolute)
        4 max clamp reaction magnitude
        5 particle index of the worst penetration
        6 its boundary: -1 bowl wall, else the segment index (rod, roof,
          then static segments)
    Returns 0 on success, 1 on particle blow-up, 2 on sheet blow-up.
    """
    n = pos.shape[0]
    nn = nodes.shape[0]
    nrod = nn - 1 if has_sheet else 0
    nstat = static_seg.shape[0]
    nroof = 1 if (has_sheet and roof_len > 0.0) else 0
    nseg = nrod + nroof + nstat
    seg = np.zeros((nseg, 4))
    seg_vel = np.zeros((nseg, 4))
    seg_node = np.full((nseg, 2), -1, dtype=np.int64)
    seg_mu = np.zeros(nseg)
    for s in range(nstat):
        k = nrod + nroof + s
        for c in range(4):
            seg[k, c] = static_seg[s, c]
        seg_mu[k] = static_mu[s]
    for s in range(nrod):
        seg_node[s, 0] = s
        seg_node[s, 1] = s + 1
        seg_mu[s] = sheet_mu
    if nroof:
        seg_mu[nrod] = sheet_mu

    rmax = 0.0
    for i in range(n):
        if rad[i] > rmax:
            rmax = rad[i]
    cell = max(2.0 * rmax, 1e-6)
    order = np.empty(n, dtype=np.int64)
    cell_start = np.empty(4 * n + 64, dtype=np.int64)
    cell_count = np.empty(4 * n + 64, dtype=np.int64)
    bforce = np.zeros(n)
    pen = np.zeros(n)
    pen_src = np.full(n, -1, dtype=np.int64)
    node_force = np.zeros((nn, 2))
    work = np.zeros((nn, 2))

    px = nodes[0, 0]
    py = nodes[0, 1]
    pa = angle0
    bx = px
    by = py
    ba = pa
    bvx = 0.0
    bvy = 0.0
    for k in range(poses.shape[0]):
        if has_sheet:
            bx = poses[k, 0]
            by = poses[k, 1]
            ba = poses[k, 2]
            bvx = (bx - px) / dt
            bvy = (by - py) / dt
            da = _wrap(ba - pa)
            bw = da / dt
            # roof segment (rigid, attached at the apex)
            if nroof:
                ra = ba - vertex_angle
                seg[nrod, 0] = bx
                seg[nrod, 1] = by
                seg[nrod, 2] = bx + roof_len * math.cos(ra)
                seg[nrod, 3] = by + roof_len * math.sin(ra)
                seg_vel[nrod, 0] = bvx
                seg_vel[nrod, 1] = bvy
                seg_vel[nrod, 2] = bvx - bw * (seg[nrod, 3] - by)
                seg_vel[nrod, 3] = bvy + bw * (seg[nrod, 2] - bx)
            for s in range(nrod):
                seg[s, 0] = nodes[s, 0]
                seg[s, 1] = nodes[s, 1]
                seg[s, 2] = nodes[s + 1, 0]
                seg[s, 3] = nodes[s + 1, 1]
                seg_vel[s, 0] = nvel[s, 0]
                seg_vel[s, 1] = nvel[s, 1]
                seg_vel[s, 2] = nvel[s + 1, 0]
                seg_vel[s, 3] = nvel[s + 1, 1]
            for i in range(nn):
                node_force[i, 0] = 0.0
                node_force[i, 1] = 0.0

        x0, y0, gnx, gny = grid_dims(pos, active, cell)
        ncell = gnx * gny
        if ncell > cell_start.shape[0]:
            cell_start = np.empty(2 * ncell, dtype=np.int64)
            cell_count = np.empty(2 * ncell, dtype=np.int64)
        keys = build_cells(pos, active, cell, order, cell_start, cell_count, x0, y0, gnx, gny)
        f = particle_forces(
            pos, vel, rad, mass, active, gx, gy,
            cp, container,
            seg, seg_vel, seg_node, seg_mu, node_force, bforce, pen, pen_src,
            cell, gnx, gny, order, cell_start, cell_count, keys,
        )
        vmax = integrate_particles(pos, vel, mass, active, f, dt)
        for i in range(n):
            if pen[i] > stats[0]:
                stats[0] = pen[i]
                stats[5] = i
                # -1 container wall, otherwise index among roof/static segments
                stats[6] = pen_src[i]
            if active[i]:
                if (pos[i, 1] < kill_box[1] or pos[i, 1] > kill_box[3]
                        or pos[i, 0] < kill_box[0] or pos[i, 0] > kill_box[2]):
                    active[i] = False
                    vel[i, 0] = 0.0
                    vel[i, 1] = 0.0
        if vmax > stats[1]:
            stats[1] = vmax
        if vmax > speed_abort:
            return 1

        if has_sheet:
            vpeak, rx, ry, blew = rod_substeps(
                nodes, nvel, m_node, rest_len, rest_turn, k_stretch, k_bend, c_int, c_abs,
                bx, by, bvx, bvy, ba, node_force, gx, gy, container,
                k_wall_sheet, mu_sheet_wall, True, dt, nsub, sheet_blowup, work,
            )
            if vpeak > stats[2]:
                stats[2] = vpeak
            rmag = math.sqrt(rx * rx + ry * ry)
            if rmag > stats[4]:
                stats[4] = rmag
            for s in range(nrod):
                ex = nodes[s + 1, 0] - nodes[s, 0]
                ey = nodes[s + 1, 1] - nodes[s, 1]
                st = abs(math.sqrt(ex * ex + ey * ey) / rest_len[s] - 1.0)
                if st > stats[3]:
                    stats[3] = st
            if blew:
                return 2
            px = bx
            py = by
            pa = ba
    return 0
