"""Hot numeric kernels: FK frame propagation, analytic Jacobians, and the
dense active-set QP iteration.

Every kernel is plain numpy code compiled with numba unless the numpy
backend is forced (see ``_backend``). Layouts are flat arrays so that both
backends run the same source:

- ``parent``: per-DOF parent index, -1 for the root.
- ``kind``: 0 translational, 1 revolute.
- ``off_v``/``off_s``: up to two scaled offset parts per DOF, each a
  3-vector plus a slot into the bone-scale vector (-1 = unscaled).
- keypoints carry the same two-part offset encoding.
"""

import numpy as np

from ._backend import jit_kernel

QP_OPTIMAL = 0
QP_MAX_ITERATIONS = 1


def _fk_frames_impl(parent, kind, axis, off_v, off_s, q, scales):
    """Propagate world rotation, origin and world joint axis per DOF."""
    n = parent.shape[0]
    R = np.empty((n, 3, 3))
    org = np.empty((n, 3))
    wax = np.empty((n, 3))
    for i in range(n):
        p = parent[i]
        ox = 0.0
        oy = 0.0
        oz = 0.0
        for part in range(2):
            slot = off_s[i, part]
            s = 1.0 if slot < 0 else scales[slot]
            ox += s * off_v[i, part, 0]
            oy += s * off_v[i, part, 1]
            oz += s * off_v[i, part, 2]
        if p < 0:
            pr00 = 1.0; pr01 = 0.0; pr02 = 0.0
            pr10 = 0.0; pr11 = 1.0; pr12 = 0.0
            pr20 = 0.0; pr21 = 0.0; pr22 = 1.0
            px = 0.0; py = 0.0; pz = 0.0
        else:
            pr00 = R[p, 0, 0]; pr01 = R[p, 0, 1]; pr02 = R[p, 0, 2]
            pr10 = R[p, 1, 0]; pr11 = R[p, 1, 1]; pr12 = R[p, 1, 2]
            pr20 = R[p, 2, 0]; pr21 = R[p, 2, 1]; pr22 = R[p, 2, 2]
            px = org[p, 0]; py = org[p, 1]; pz = org[p, 2]
        # world-frame joint axis and offset
        ax = axis[i, 0]; ay = axis[i, 1]; az = axis[i, 2]
        wx = pr00 * ax + pr01 * ay + pr02 * az
        wy = pr10 * ax + pr11 * ay + pr12 * az
        wz = pr20 * ax + pr21 * ay + pr22 * az
        wax[i, 0] = wx; wax[i, 1] = wy; wax[i, 2] = wz
        gx = px + pr00 * ox + pr01 * oy + pr02 * oz
        gy = py + pr10 * ox + pr11 * oy + pr12 * oz
        gz = pz + pr20 * ox + pr21 * oy + pr22 * oz
        if kind[i] == 0:
            org[i, 0] = gx + wx * q[i]
            org[i, 1] = gy + wy * q[i]
            org[i, 2] = gz + wz * q[i]
            R[i, 0, 0] = pr00; R[i, 0, 1] = pr01; R[i, 0, 2] = pr02
            R[i, 1, 0] = pr10; R[i, 1, 1] = pr11; R[i, 1, 2] = pr12
            R[i, 2, 0] = pr20; R[i, 2, 1] = pr21; R[i, 2, 2] = pr22
        else:
            org[i, 0] = gx; org[i, 1] = gy; org[i, 2] = gz
            c = np.cos(q[i])
            s = np.sin(q[i])
            cc = 1.0 - c
            # local Rodrigues rotation about the (unit) joint axis
            l00 = c + ax * ax * cc
            l01 = ax * ay * cc - az * s
            l02 = ax * az * cc + ay * s
            l10 = ay * ax * cc + az * s
            l11 = c + ay * ay * cc
            l12 = ay * az * cc - ax * s
            l20 = az * ax * cc - ay * s
            l21 = az * ay * cc + ax * s
            l22 = c + az * az * cc
            R[i, 0, 0] = pr00 * l00 + pr01 * l10 + pr02 * l20
            R[i, 0, 1] = pr00 * l01 + pr01 * l11 + pr02 * l21
            R[i, 0, 2] = pr00 * l02 + pr01 * l12 + pr02 * l22
            R[i, 1, 0] = pr10 * l00 + pr11 * l10 + pr12 * l20
            R[i, 1, 1] = pr10 * l01 + pr11 * l11 + pr12 * l21
            R[i, 1, 2] = pr10 * l02 + pr11 * l12 + pr12 * l22
            R[i, 2, 0] = pr20 * l00 + pr21 * l10 + pr22 * l20
            R[i, 2, 1] = pr20 * l01 + pr21 * l11 + pr22 * l21
            R[i, 2, 2] = pr20 * l02 + pr21 * l12 + pr22 * l22
    return R, org, wax


def _fk_points_impl(R, org, kp_dof, kp_v, kp_s, scales):
    m = kp_dof.shape[0]
    pos = np.empty((m, 3))
    for k in range(m):
        d = kp_dof[k]
        ox = 0.0
        oy = 0.0
        oz = 0.0
        for part in range(2):
            slot = kp_s[k, part]
            s = 1.0 if slot < 0 else scales[slot]
            ox += s * kp_v[k, part, 0]
            oy += s * kp_v[k, part, 1]
            oz += s * kp_v[k, part, 2]
        pos[k, 0] = org[d, 0] + R[d, 0, 0] * ox + R[d, 0, 1] * oy + R[d, 0, 2] * oz
        pos[k, 1] = org[d, 1] + R[d, 1, 0] * ox + R[d, 1, 1] * oy + R[d, 1, 2] * oz
        pos[k, 2] = org[d, 2] + R[d, 2, 0] * ox + R[d, 2, 1] * oy + R[d, 2, 2] * oz
    return pos


def _jacobian_impl(org, wax, kind, ancestors, kp_pos, sel):
    """Positional Jacobian rows for the selected keypoints.

    Revolute columns are w x (p - o); translational columns the world axis.
    Columns off the root-to-keypoint chain stay zero.
    """
    n = kind.shape[0]
    m = sel.shape[0]
    J = np.zeros((3 * m, n))
    for si in range(m):
        k = sel[si]
        px = kp_pos[k, 0]; py = kp_pos[k, 1]; pz = kp_pos[k, 2]
        r = 3 * si
        for j in range(n):
            if not ancestors[k, j]:
                continue
            if kind[j] == 0:
                J[r, j] = wax[j, 0]
                J[r + 1, j] = wax[j, 1]
                J[r + 2, j] = wax[j, 2]
            else:
                dx = px - org[j, 0]
                dy = py - org[j, 1]
                dz = pz - org[j, 2]
                J[r, j] = wax[j, 1] * dz - wax[j, 2] * dy
                J[r + 1, j] = wax[j, 2] * dx - wax[j, 0] * dz
                J[r + 2, j] = wax[j, 0] * dy - wax[j, 1] * dx
    return J


def _qp_active_set_impl(H, g, A, b, lb, ub, x0, max_iter):
    """Primal active-set iteration for min 1/2 x'Hx + g'x with H SPD,
    optional equalities Ax = b and box bounds.

    Requires a feasible x0 (within bounds; satisfying Ax=b when equalities
    are present). Bound activity is tracked per variable: -1 at lower,
    0 free, +1 at upper. Returns (x, status, iterations, objective trace).
    """
    n = H.shape[0]
    me = A.shape[0]
    x = x0.copy()
    state = np.zeros(n, dtype=np.int64)
    for i in range(n):
        if x[i] <= lb[i]:
            x[i] = lb[i]
            state[i] = -1
        elif x[i] >= ub[i]:
            x[i] = ub[i]
            state[i] = 1
    trace = np.empty(max_iter + 1)
    n_trace = 0
    status = QP_MAX_ITERATIONS
    it = 0
    while it < max_iter:
        it += 1
        obj = 0.5 * np.dot(x, H @ x) + np.dot(g, x)
        trace[n_trace] = obj
        n_trace += 1

        free = np.empty(n, dtype=np.int64)
        nf = 0
        for i in range(n):
            if state[i] == 0:
                free[nf] = i
                nf += 1
        grad = H @ x + g

        # direction on the free block, keeping Ax = b
        p = np.zeros(n)
        if nf > 0:
            if me == 0:
                Hff = np.empty((nf, nf))
                rhs = np.empty(nf)
                for a in range(nf):
                    ia = free[a]
                    rhs[a] = -grad[ia]
                    for c in range(nf):
                        Hff[a, c] = H[ia, free[c]]
                pf = np.linalg.solve(Hff, rhs)
                for a in range(nf):
                    p[free[a]] = pf[a]
            else:
                K = np.zeros((nf + me, nf + me))
                rhs = np.zeros(nf + me)
                for a in range(nf):
                    ia = free[a]
                    rhs[a] = -grad[ia]
                    for c in range(nf):
                        K[a, c] = H[ia, free[c]]
                    for e in range(me):
                        K[a, nf + e] = A[e, ia]
                        K[nf + e, a] = A[e, ia]
                req = A @ x - b
                for e in range(me):
                    rhs[nf + e] = -req[e]
                    K[nf + e, nf + e] = -1e-12  # keeps the KKT system nonsingular
                sol = np.linalg.solve(K, rhs)
                for a in range(nf):
                    p[free[a]] = sol[a]

        pmax = 0.0
        for i in range(n):
            if abs(p[i]) > pmax:
                pmax = abs(p[i])

        if pmax <= 1e-11:
            # at the working-set optimum: check bound multipliers
            red = grad.copy()
            if me > 0:
                # equality multipliers from the free-block stationarity
                Af = np.empty((me, nf))
                gf = np.empty(nf)
                for a in range(nf):
                    gf[a] = grad[free[a]]
                    for e in range(me):
                        Af[e, a] = A[e, free[a]]
                M = Af @ Af.T
                for e in range(me):
                    M[e, e] += 1e-12
                nu = np.linalg.solve(M, Af @ gf)
                red = grad - A.T @ nu
            worst = -1e-9
            worst_i = -1
            for i in range(n):
                if state[i] == 0 or lb[i] == ub[i]:
                    continue
                mu = red[i] if state[i] == -1 else -red[i]
                if mu < worst:
                    worst = mu
                    worst_i = i
            if worst_i < 0:
                status = QP_OPTIMAL
                break
            state[worst_i] = 0
            continue

        # ratio test against the inactive bounds
        alpha = 1.0
        blk = -1
        blk_dir = 0
        for a in range(nf):
            i = free[a]
            pi = p[i]
            if pi > 1e-14:
                if ub[i] < np.inf:
                    room = (ub[i] - x[i]) / pi
                    if room < alpha:
                        alpha = room
                        blk = i
                        blk_dir = 1
            elif pi < -1e-14:
                if lb[i] > -np.inf:
                    room = (lb[i] - x[i]) / pi
                    if room < alpha:
                        alpha = room
                        blk = i
                        blk_dir = -1
        if alpha > 0.0:
            for a in range(nf):
                i = free[a]
                x[i] += alpha * p[i]
        if blk >= 0 and alpha < 1.0:
            x[blk] = lb[blk] if blk_dir == -1 else ub[blk]
            state[blk] = blk_dir

    obj = 0.5 * np.dot(x, H @ x) + np.dot(g, x)
    trace[n_trace] = obj
    n_trace += 1
    # snap rounding-level bound violations
    for i in range(n):
        if x[i] < lb[i]:
            x[i] = lb[i]
        elif x[i] > ub[i]:
            x[i] = ub[i]
    return x, status, it, trace[:n_trace].copy()


fk_frames = jit_kernel(_fk_frames_impl)
fk_points = jit_kernel(_fk_points_impl)
jacobian_kernel = jit_kernel(_jacobian_impl)
qp_active_set = jit_kernel(_qp_active_set_impl)
