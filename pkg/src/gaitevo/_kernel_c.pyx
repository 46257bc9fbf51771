# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled evaluation loop.

Statement-for-statement port of ``_kernel_py.py``.  Floating-point
expressions keep the same operand order so both backends agree to the last
bit on the same libm.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, sqrt, fmod, atan2, pow, nextafter, isfinite, M_PI

cnp.import_array()

cdef double TWO_PI = 2.0 * M_PI
N_COLS = 29


cdef inline double wrap_phase(double phi) nogil:
    cdef double p = fmod(phi, TWO_PI)
    if p != 0.0 and p < 0.0:
        p += TWO_PI
    if p >= TWO_PI:
        p = 0.0
    return p


cdef inline double phase_warp(double phi, double d) nogil:
    cdef double p = wrap_phase(phi)
    cdef double knee = TWO_PI * d
    cdef double out
    if p < knee:
        out = p / (2.0 * d)
    else:
        out = M_PI + (p - knee) / (2.0 * (1.0 - d))
    if out >= TWO_PI:
        out = nextafter(TWO_PI, 0.0)
    return out


cdef inline double swing_stance_shape(double phi_n) nogil:
    cdef double s
    if phi_n < 0.5:
        return -16.0 * pow(phi_n, 3.0) + 12.0 * pow(phi_n, 2.0)
    s = phi_n - 0.5
    return 16.0 * pow(s, 3.0) - 12.0 * pow(s, 2.0) + 1.0


cdef inline void quat_rotate(double* q, double vx, double vy, double vz, double* out) nogil:
    cdef double w = q[0], x = q[1], y = q[2], z = q[3]
    cdef double tx = 2.0 * (y * vz - z * vy)
    cdef double ty = 2.0 * (z * vx - x * vz)
    cdef double tz = 2.0 * (x * vy - y * vx)
    out[0] = vx + w * tx + (y * tz - z * ty)
    out[1] = vy + w * ty + (z * tx - x * tz)
    out[2] = vz + w * tz + (x * ty - y * tx)


cdef inline void quat_rotate_inv(double* q, double vx, double vy, double vz, double* out) nogil:
    cdef double qi[4]
    qi[0] = q[0]
    qi[1] = -q[1]
    qi[2] = -q[2]
    qi[3] = -q[3]
    quat_rotate(qi, vx, vy, vz, out)


cdef inline void quat_integrate(double* q, double wx, double wy, double wz, double dt) nogil:
    cdef double rate = sqrt(wx * wx + wy * wy + wz * wz)
    cdef double half = 0.5 * rate * dt
    cdef double s, dw, dx, dy, dz
    cdef double aw = q[0], ax = q[1], ay = q[2], az = q[3]
    cdef double w, x, y, z, n
    if rate > 0.0:
        s = sin(half) / rate
        dw = cos(half)
        dx = wx * s
        dy = wy * s
        dz = wz * s
    else:
        dw = 1.0
        dx = 0.0
        dy = 0.0
        dz = 0.0
    w = aw * dw - ax * dx - ay * dy - az * dz
    x = aw * dx + ax * dw + ay * dz - az * dy
    y = aw * dy - ax * dz + ay * dw + az * dx
    z = aw * dz + ax * dy - ay * dx + az * dw
    n = sqrt(w * w + x * x + y * y + z * z)
    q[0] = w / n
    q[1] = x / n
    q[2] = y / n
    q[3] = z / n


cdef inline double up_angle(double* q) nogil:
    cdef double w = q[0], x = q[1], y = q[2], z = q[3]
    cdef double r02 = 2.0 * (x * z + w * y)
    cdef double r12 = 2.0 * (y * z - w * x)
    cdef double r22 = 1.0 - 2.0 * (x * x + y * y)
    return atan2(sqrt(r02 * r02 + r12 * r12), r22)


cdef inline void foot_body(double[:, ::1] hips, double[::1] sides, double l0, double l1, double l2,
                           int i, double q0, double q1, double q2, double* out) nogil:
    cdef double knee = q1 - q2
    cdef double y = -(l1 * sin(q1) + l2 * sin(knee))
    cdef double z = -(l0 + l1 * cos(q1) + l2 * cos(knee))
    out[0] = hips[i, 0] + (-sides[i] * z * sin(q0))
    out[1] = hips[i, 1] + y
    out[2] = hips[i, 2] + z * cos(q0)


cdef void write_row(double[:, ::1] rows, Py_ssize_t r, double t, double* pos, double* quat,
                    double[:, ::1] joints, double* grf, double[:, ::1] st) nogil:
    cdef int i, j
    rows[r, 0] = t
    rows[r, 1] = pos[0]
    rows[r, 2] = pos[1]
    rows[r, 3] = pos[2]
    for j in range(4):
        rows[r, 4 + j] = quat[j]
    rows[r, 8] = up_angle(quat)
    for i in range(4):
        for j in range(3):
            rows[r, 9 + 3 * i + j] = joints[i, j]
    for i in range(4):
        rows[r, 21 + i] = grf[i]
    for i in range(4):
        rows[r, 25 + i] = st[i, 0]


def simulate(glob, desired, leg_mu, shifts, cpg0, body, hips, sides, limits,
             state0, joints0, long n_steps, long sample_every):
    cdef double[::1] g = np.ascontiguousarray(glob, dtype=np.float64)
    cdef double[::1] des = np.ascontiguousarray(desired, dtype=np.float64)
    cdef double[:, ::1] mu_rows = np.ascontiguousarray(leg_mu, dtype=np.float64)
    cdef double[:, ::1] shift_rows = np.ascontiguousarray(shifts, dtype=np.float64)
    cdef double[:, ::1] st = np.array(cpg0, dtype=np.float64, order="C")
    cdef double[::1] b = np.ascontiguousarray(body, dtype=np.float64)
    cdef double[:, ::1] hp = np.ascontiguousarray(hips, dtype=np.float64)
    cdef double[::1] sd = np.ascontiguousarray(sides, dtype=np.float64)
    cdef double[:, ::1] lim = np.ascontiguousarray(limits, dtype=np.float64)
    cdef double[::1] s0 = np.ascontiguousarray(state0, dtype=np.float64)
    cdef double[:, ::1] joints = np.array(joints0, dtype=np.float64, order="C")

    cdef Py_ssize_t max_rows = n_steps // sample_every + 2
    out = np.zeros((max_rows, 29), dtype=np.float64)
    cdef double[:, ::1] rows = out

    cdef double omega = g[0], gamma = g[1], duty = g[2], w = g[4], alpha = g[5], dt = g[6]
    cdef bint closed = g[3] > 0.5
    cdef double mass = b[0], ix = b[1], iy = b[2], iz = b[3]
    cdef double l0 = b[4], l1 = b[5], l2 = b[6], sgain = b[7]
    cdef double k = b[8], c = b[9], mu = b[10], bt = b[11], gravity = b[12], fall_height = b[13]
    cdef double freq = TWO_PI * omega

    cdef double target[4][4]
    cdef double pos[3]
    cdef double quat[4]
    cdef double vel[3]
    cdef double omg[3]
    cdef double grf[4]
    cdef double old[4]
    cdef double prev_feet[4][3]
    cdef double forces[4][3]
    cdef double points[4][3]
    cdef double fb[3]
    cdef double rw[3]
    cdef double vw[3]
    cdef double bt3[3]
    cdef double lw3[3]
    cdef double tg[3]

    cdef int i, j, n, jn
    cdef long step
    cdef Py_ssize_t nrow = 0
    cdef double ph, acc, p0, p1, p2, warped, a2, a, lvx, lvy, lvz
    cdef double px, py, pz, vx, vy, vz, normal, fx, fy, fz, ft, limit, scale
    cdef double fsx, fsy, fsz, tx, ty, tz, rx, ry, rz
    cdef double wx, wy, wz, lx, ly, lz, t
    cdef bint fell = False
    cdef long diverged = -1

    for i in range(4):
        for j in range(4):
            target[i][j] = TWO_PI * (des[j] - des[i])
    for j in range(3):
        pos[j] = s0[j]
        vel[j] = s0[7 + j]
        omg[j] = s0[10 + j]
    for j in range(4):
        quat[j] = s0[3 + j]
        grf[j] = 0.0

    with nogil:
        for i in range(4):
            foot_body(hp, sd, l0, l1, l2, i, joints[i, 0], joints[i, 1], joints[i, 2], prev_feet[i])
            for j in range(3):
                forces[i][j] = 0.0
                points[i][j] = 0.0
        write_row(rows, nrow, 0.0, pos, quat, joints, grf, st)
        nrow += 1

        for step in range(1, n_steps + 1):
            # --- oscillators
            if closed:
                for i in range(4):
                    ph = st[i, 0]
                    st[i, 0] = ph + dt * (freq - alpha * grf[i] * cos(ph))
            else:
                for i in range(4):
                    old[i] = st[i, 0]
                for i in range(4):
                    acc = 0.0
                    for j in range(4):
                        if j != i:
                            acc += sin(old[j] - old[i] - target[i][j])
                    st[i, 0] = old[i] + dt * (freq + w * acc)
            for i in range(4):
                for n in range(1, 8):
                    st[i, n] = st[i, n] + dt * (gamma * (mu_rows[i, n - 1] - st[i, n]))

            # --- joint targets and servos
            for i in range(4):
                p0 = st[i, 0]
                p1 = p0 + shift_rows[i, 0]
                p2 = p0 + shift_rows[i, 1]
                tg[0] = st[i, 1] * cos(phase_warp(p0, duty)) + st[i, 3]
                tg[1] = st[i, 2] * cos(phase_warp(p1, duty)) + st[i, 4]
                warped = phase_warp(p2, duty)
                if warped < M_PI:
                    a2 = st[i, 6]
                else:
                    a2 = st[i, 7]
                tg[2] = a2 * swing_stance_shape(2.0 * fmod(warped / TWO_PI, 0.5)) + st[i, 5]
                for jn in range(3):
                    a = joints[i, jn]
                    a = a + (tg[jn] - a) * sgain
                    if a < lim[jn, 0]:
                        a = lim[jn, 0]
                    elif a > lim[jn, 1]:
                        a = lim[jn, 1]
                    joints[i, jn] = a

            # --- feet and contact
            for i in range(4):
                foot_body(hp, sd, l0, l1, l2, i, joints[i, 0], joints[i, 1], joints[i, 2], fb)
                lvx = (fb[0] - prev_feet[i][0]) / dt + (omg[1] * fb[2] - omg[2] * fb[1])
                lvy = (fb[1] - prev_feet[i][1]) / dt + (omg[2] * fb[0] - omg[0] * fb[2])
                lvz = (fb[2] - prev_feet[i][2]) / dt + (omg[0] * fb[1] - omg[1] * fb[0])
                prev_feet[i][0] = fb[0]
                prev_feet[i][1] = fb[1]
                prev_feet[i][2] = fb[2]
                quat_rotate(quat, fb[0], fb[1], fb[2], rw)
                quat_rotate(quat, lvx, lvy, lvz, vw)
                px = pos[0] + rw[0]
                py = pos[1] + rw[1]
                pz = pos[2] + rw[2]
                points[i][0] = px
                points[i][1] = py
                points[i][2] = pz
                fx = 0.0
                fy = 0.0
                fz = 0.0
                if pz < 0.0:
                    vx = vel[0] + vw[0]
                    vy = vel[1] + vw[1]
                    vz = vel[2] + vw[2]
                    normal = k * (-pz) - c * vz
                    if normal > 0.0:
                        fx = -bt * vx
                        fy = -bt * vy
                        ft = sqrt(fx * fx + fy * fy)
                        limit = mu * normal
                        if ft > limit:
                            scale = limit / ft
                            fx = fx * scale
                            fy = fy * scale
                        fz = normal
                forces[i][0] = fx
                forces[i][1] = fy
                forces[i][2] = fz
                grf[i] = sqrt(fx * fx + fy * fy + fz * fz)

            # --- rigid body
            fsx = 0.0
            fsy = 0.0
            fsz = 0.0
            tx = 0.0
            ty = 0.0
            tz = 0.0
            for i in range(4):
                fsx += forces[i][0]
                fsy += forces[i][1]
                fsz += forces[i][2]
                rx = points[i][0] - pos[0]
                ry = points[i][1] - pos[1]
                rz = points[i][2] - pos[2]
                tx += ry * forces[i][2] - rz * forces[i][1]
                ty += rz * forces[i][0] - rx * forces[i][2]
                tz += rx * forces[i][1] - ry * forces[i][0]
            vel[0] = vel[0] + (fsx / mass) * dt
            vel[1] = vel[1] + (fsy / mass) * dt
            vel[2] = vel[2] + (fsz / mass - gravity) * dt
            quat_rotate_inv(quat, tx, ty, tz, bt3)
            lx = ix * omg[0] + bt3[0] * dt
            ly = iy * omg[1] + bt3[1] * dt
            lz = iz * omg[2] + bt3[2] * dt
            quat_rotate(quat, lx, ly, lz, lw3)
            quat_integrate(quat, lx / ix, ly / iy, lz / iz, dt)
            quat_rotate_inv(quat, lw3[0], lw3[1], lw3[2], bt3)
            wx = bt3[0] / ix
            wy = bt3[1] / iy
            wz = bt3[2] / iz
            omg[0] = wx
            omg[1] = wy
            omg[2] = wz
            pos[0] = pos[0] + vel[0] * dt
            pos[1] = pos[1] + vel[1] * dt
            pos[2] = pos[2] + vel[2] * dt

            if not (isfinite(pos[0]) and isfinite(pos[1]) and isfinite(pos[2])
                    and isfinite(vel[0]) and isfinite(vel[1]) and isfinite(vel[2])
                    and isfinite(wx) and isfinite(wy) and isfinite(wz)):
                diverged = step
                break

            t = step * dt
            if pos[2] < fall_height or up_angle(quat) > 0.5 * M_PI:
                write_row(rows, nrow, t, pos, quat, joints, grf, st)
                nrow += 1
                fell = True
                break
            if step % sample_every == 0:
                write_row(rows, nrow, t, pos, quat, joints, grf, st)
                nrow += 1

    return out[:nrow], fell, diverged


def body_rollout(state0, forces, points_body, body, double dt, long n_steps):
    cdef double[::1] s0 = np.ascontiguousarray(state0, dtype=np.float64)
    cdef double[:, ::1] f = np.ascontiguousarray(forces, dtype=np.float64)
    cdef double[:, ::1] pb = np.ascontiguousarray(points_body, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(body, dtype=np.float64)
    cdef double mass = b[0], ix = b[1], iy = b[2], iz = b[3], gravity = b[12]
    cdef double pos[3]
    cdef double quat[4]
    cdef double vel[3]
    cdef double omg[3]
    cdef double r[3]
    cdef double bt3[3]
    cdef double lw3[3]
    cdef Py_ssize_t nf = f.shape[0]
    cdef Py_ssize_t i
    cdef long step
    cdef double fsx, fsy, fsz, tx, ty, tz, wx, wy, wz, lx, ly, lz
    for i in range(3):
        pos[i] = s0[i]
        vel[i] = s0[7 + i]
        omg[i] = s0[10 + i]
    for i in range(4):
        quat[i] = s0[3 + i]
    with nogil:
        for step in range(n_steps):
            fsx = 0.0
            fsy = 0.0
            fsz = 0.0
            tx = 0.0
            ty = 0.0
            tz = 0.0
            for i in range(nf):
                quat_rotate(quat, pb[i, 0], pb[i, 1], pb[i, 2], r)
                fsx += f[i, 0]
                fsy += f[i, 1]
                fsz += f[i, 2]
                tx += r[1] * f[i, 2] - r[2] * f[i, 1]
                ty += r[2] * f[i, 0] - r[0] * f[i, 2]
                tz += r[0] * f[i, 1] - r[1] * f[i, 0]
            vel[0] = vel[0] + (fsx / mass) * dt
            vel[1] = vel[1] + (fsy / mass) * dt
            vel[2] = vel[2] + (fsz / mass - gravity) * dt
            quat_rotate_inv(quat, tx, ty, tz, bt3)
            lx = ix * omg[0] + bt3[0] * dt
            ly = iy * omg[1] + bt3[1] * dt
            lz = iz * omg[2] + bt3[2] * dt
            quat_rotate(quat, lx, ly, lz, lw3)
            quat_integrate(quat, lx / ix, ly / iy, lz / iz, dt)
            quat_rotate_inv(quat, lw3[0], lw3[1], lw3[2], bt3)
            wx = bt3[0] / ix
            wy = bt3[1] / iy
            wz = bt3[2] / iz
            omg[0] = wx
            omg[1] = wy
            omg[2] = wz
            pos[0] = pos[0] + vel[0] * dt
            pos[1] = pos[1] + vel[1] * dt
            pos[2] = pos[2] + vel[2] * dt
    return [pos[0], pos[1], pos[2], quat[0], quat[1], quat[2], quat[3],
            vel[0], vel[1], vel[2], omg[0], omg[1], omg[2]]
