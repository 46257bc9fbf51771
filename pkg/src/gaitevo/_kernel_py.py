"""Pure-Python evaluation loop.

Mirrors ``_kernel_c.pyx`` statement for statement; any change here must be
made there as well (``tests/test_kernel.py`` compares the two).
"""

import math

from .cpg import TWO_PI, phase_warp, swing_stance_shape
from .physics import quat_integrate, quat_rotate, quat_rotate_inv, up_angle

N_COLS = 29


def simulate(glob, desired, leg_mu, shifts, cpg0, body, hips, sides, limits,
             state0, joints0, n_steps, sample_every):
    """Run controller and physics in lockstep.

    Returns ``(rows, fell, diverged_step)`` where ``rows`` is a list of
    ``N_COLS``-long lists and ``diverged_step`` is ``-1`` on success.
    """
    omega, gamma, duty, mode, w, alpha, dt = [float(v) for v in glob[:7]]
    closed = mode > 0.5
    (mass, ix, iy, iz, l0, l1, l2, sgain, k, c, mu, bt, gravity,
     fall_height) = [float(v) for v in body[:14]]
    freq = TWO_PI * omega

    desired = [float(v) for v in desired]
    target = [[TWO_PI * (desired[j] - desired[i]) for j in range(4)] for i in range(4)]
    mu_rows = [[float(v) for v in row] for row in leg_mu]
    shift_rows = [[float(v) for v in row] for row in shifts]
    hips = [[float(v) for v in row] for row in hips]
    sides = [float(v) for v in sides]
    lim = [[float(v) for v in row] for row in limits]

    # oscillator state per leg: phase, a0, a1, o0, o1, o2, swing, stance
    st = [[float(v) for v in row] for row in cpg0]
    pos = tuple(float(v) for v in state0[0:3])
    quat = tuple(float(v) for v in state0[3:7])
    vel = tuple(float(v) for v in state0[7:10])
    omg = tuple(float(v) for v in state0[10:13])
    joints = [[float(v) for v in row] for row in joints0]
    grf = [0.0, 0.0, 0.0, 0.0]

    def foot_body(i, q0, q1, q2):
        knee = q1 - q2
        y = -(l1 * math.sin(q1) + l2 * math.sin(knee))
        z = -(l0 + l1 * math.cos(q1) + l2 * math.cos(knee))
        return (hips[i][0] + (-sides[i] * z * math.sin(q0)),
                hips[i][1] + y,
                hips[i][2] + z * math.cos(q0))

    prev_feet = [foot_body(i, *joints[i]) for i in range(4)]

    def row(t):
        r = [t, pos[0], pos[1], pos[2], quat[0], quat[1], quat[2], quat[3], up_angle(quat)]
        for i in range(4):
            r.extend(joints[i])
        r.extend(grf)
        r.extend(s[0] for s in st)
        return r

    rows = [row(0.0)]
    forces = [(0.0, 0.0, 0.0)] * 4
    points = [(0.0, 0.0, 0.0)] * 4

    for step in range(1, n_steps + 1):
        # --- oscillators
        if closed:
            for i in range(4):
                ph = st[i][0]
                st[i][0] = ph + dt * (freq - alpha * grf[i] * math.cos(ph))
        else:
            old = [s[0] for s in st]
            for i in range(4):
                acc = 0.0
                for j in range(4):
                    if j != i:
                        acc += math.sin(old[j] - old[i] - target[i][j])
                st[i][0] = old[i] + dt * (freq + w * acc)
        for i in range(4):
            s = st[i]
            m = mu_rows[i]
            for n in range(1, 8):
                s[n] = s[n] + dt * (gamma * (m[n - 1] - s[n]))

        # --- joint targets and servos
        for i in range(4):
            s = st[i]
            p0 = s[0]
            p1 = p0 + shift_rows[i][0]
            p2 = p0 + shift_rows[i][1]
            t0 = s[1] * math.cos(phase_warp(p0, duty)) + s[3]
            t1 = s[2] * math.cos(phase_warp(p1, duty)) + s[4]
            warped = phase_warp(p2, duty)
            a2 = s[6] if warped < math.pi else s[7]
            t2 = a2 * swing_stance_shape(2.0 * ((warped / TWO_PI) % 0.5)) + s[5]
            for jn, tg in ((0, t0), (1, t1), (2, t2)):
                a = joints[i][jn]
                a = a + (tg - a) * sgain
                if a < lim[jn][0]:
                    a = lim[jn][0]
                elif a > lim[jn][1]:
                    a = lim[jn][1]
                joints[i][jn] = a

        # --- feet and contact
        for i in range(4):
            fb = foot_body(i, *joints[i])
            pf = prev_feet[i]
            # body-frame foot velocity: w x r + leg motion
            lvx = (fb[0] - pf[0]) / dt + (omg[1] * fb[2] - omg[2] * fb[1])
            lvy = (fb[1] - pf[1]) / dt + (omg[2] * fb[0] - omg[0] * fb[2])
            lvz = (fb[2] - pf[2]) / dt + (omg[0] * fb[1] - omg[1] * fb[0])
            prev_feet[i] = fb
            rw = quat_rotate(quat, fb)
            vw = quat_rotate(quat, (lvx, lvy, lvz))
            px = pos[0] + rw[0]
            py = pos[1] + rw[1]
            pz = pos[2] + rw[2]
            points[i] = (px, py, pz)
            fx = fy = fz = 0.0
            if pz < 0.0:
                vx = vel[0] + vw[0]
                vy = vel[1] + vw[1]
                vz = vel[2] + vw[2]
                normal = k * (-pz) - c * vz
                if normal > 0.0:
                    fx = -bt * vx
                    fy = -bt * vy
                    ft = math.sqrt(fx * fx + fy * fy)
                    limit = mu * normal
                    if ft > limit:
                        scale = limit / ft
                        fx = fx * scale
                        fy = fy * scale
                    fz = normal
            forces[i] = (fx, fy, fz)
            grf[i] = math.sqrt(fx * fx + fy * fy + fz * fz)

        # --- rigid body
        fsx = fsy = fsz = 0.0
        tx = ty = tz = 0.0
        for i in range(4):
            f0, f1, f2 = forces[i]
            fsx += f0
            fsy += f1
            fsz += f2
            rx = points[i][0] - pos[0]
            ry = points[i][1] - pos[1]
            rz = points[i][2] - pos[2]
            tx += ry * f2 - rz * f1
            ty += rz * f0 - rx * f2
            tz += rx * f1 - ry * f0
        vel = (vel[0] + (fsx / mass) * dt,
               vel[1] + (fsy / mass) * dt,
               vel[2] + (fsz / mass - gravity) * dt)
        bx, by, bz = quat_rotate_inv(quat, (tx, ty, tz))
        # same momentum-conserving rotation update as physics.rigid_body_update
        lx = ix * omg[0] + bx * dt
        ly = iy * omg[1] + by * dt
        lz = iz * omg[2] + bz * dt
        lw = quat_rotate(quat, (lx, ly, lz))
        quat = quat_integrate(quat, (lx / ix, ly / iy, lz / iz), dt)
        lx, ly, lz = quat_rotate_inv(quat, lw)
        wx = lx / ix
        wy = ly / iy
        wz = lz / iz
        omg = (wx, wy, wz)
        pos = (pos[0] + vel[0] * dt, pos[1] + vel[1] * dt, pos[2] + vel[2] * dt)

        if not (math.isfinite(pos[0]) and math.isfinite(pos[1]) and math.isfinite(pos[2])
                and math.isfinite(vel[0]) and math.isfinite(vel[1]) and math.isfinite(vel[2])
                and math.isfinite(wx) and math.isfinite(wy) and math.isfinite(wz)):
            return rows, False, step

        t = step * dt
        if pos[2] < fall_height or up_angle(quat) > 0.5 * math.pi:
            rows.append(row(t))
            return rows, True, -1
        if step % sample_every == 0:
            rows.append(row(t))

    return rows, False, -1


def body_rollout(state0, forces, points_body, body, dt, n_steps):
    """Integrate the bare rigid body ``n_steps`` times with fixed body-frame
    force application points.  Returns the final 13-vector state."""
    mass, ix, iy, iz = [float(v) for v in body[:4]]
    gravity = float(body[12])
    pos = tuple(float(v) for v in state0[0:3])
    quat = tuple(float(v) for v in state0[3:7])
    vel = tuple(float(v) for v in state0[7:10])
    omg = tuple(float(v) for v in state0[10:13])
    forces = [tuple(float(c) for c in f) for f in forces]
    pts = [tuple(float(c) for c in p) for p in points_body]
    for _ in range(n_steps):
        fsx = fsy = fsz = 0.0
        tx = ty = tz = 0.0
        for f, pb in zip(forces, pts):
            r = quat_rotate(quat, pb)
            fsx += f[0]
            fsy += f[1]
            fsz += f[2]
            tx += r[1] * f[2] - r[2] * f[1]
            ty += r[2] * f[0] - r[0] * f[2]
            tz += r[0] * f[1] - r[1] * f[0]
        vel = (vel[0] + (fsx / mass) * dt,
               vel[1] + (fsy / mass) * dt,
               vel[2] + (fsz / mass - gravity) * dt)
        bx, by, bz = quat_rotate_inv(quat, (tx, ty, tz))
        # same momentum-conserving rotation update as physics.rigid_body_update
        lx = ix * omg[0] + bx * dt
        ly = iy * omg[1] + by * dt
        lz = iz * omg[2] + bz * dt
        lw = quat_rotate(quat, (lx, ly, lz))
        quat = quat_integrate(quat, (lx / ix, ly / iy, lz / iz), dt)
        lx, ly, lz = quat_rotate_inv(quat, lw)
        wx = lx / ix
        wy = ly / iy
        wz = lz / iz
        omg = (wx, wy, wz)
        pos = (pos[0] + vel[0] * dt, pos[1] + vel[1] * dt, pos[2] + vel[2] * dt)
    return list(pos) + list(quat) + list(vel) + list(omg)
