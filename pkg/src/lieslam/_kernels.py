"""Per-sample update kernels for the observers, written on plain arrays.

Each function advances one measurement interval: classical RK4 over the
continuous correction laws with the interval's measurements held fixed,
optionally split into equal substeps.  The public step functions in
:mod:`lieslam.filter_basic`, :mod:`lieslam.filter_imu` and
:mod:`lieslam.quaternion` unwrap their dataclasses, call these, and wrap
the results back up.

Everything is spelled out as scalar loops so numba compiles tight code
without BLAS round-trips, and so the interpreted fallback performs the
same float operations in the same order when numba is unavailable.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a hard install dep
    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        return wrap

# Mirrors of the guard constants in filter_imu / liegroup; kernels cannot
# import them without dragging dataclass modules into compilation.
_TAU_FLOOR = 1e-6
_PI_COND_LIMIT = 1e8
_ROTATION_DRIFT_TOL = 1e-9


@njit(cache=True)
def _mat3_mul(a, b):
    out = np.empty((3, 3))
    for r in range(3):
        for c in range(3):
            out[r, c] = a[r, 0] * b[0, c] + a[r, 1] * b[1, c] + a[r, 2] * b[2, c]
    return out


@njit(cache=True)
def _rot_apply(r, x):
    """r @ x for a 3-vector."""
    out = np.empty(3)
    for i in range(3):
        out[i] = r[i, 0] * x[0] + r[i, 1] * x[1] + r[i, 2] * x[2]
    return out


@njit(cache=True)
def _rot_apply_t(r, x):
    """r.T @ x for a 3-vector."""
    out = np.empty(3)
    for i in range(3):
        out[i] = r[0, i] * x[0] + r[1, i] * x[1] + r[2, i] * x[2]
    return out


@njit(cache=True)
def _cross(a, b, out):
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]


@njit(cache=True)
def _renormalize(r):
    """Conditional modified Gram-Schmidt over rows, as in liegroup."""
    drift = 0.0
    for i in range(3):
        for j in range(3):
            g = r[0, i] * r[0, j] + r[1, i] * r[1, j] + r[2, i] * r[2, j]
            if i == j:
                g -= 1.0
            drift += g * g
    if np.sqrt(drift) <= _ROTATION_DRIFT_TOL:
        return r
    out = r.copy()
    s = np.sqrt(out[0, 0] ** 2 + out[0, 1] ** 2 + out[0, 2] ** 2)
    for c in range(3):
        out[0, c] /= s
    d = out[1, 0] * out[0, 0] + out[1, 1] * out[0, 1] + out[1, 2] * out[0, 2]
    for c in range(3):
        out[1, c] -= d * out[0, c]
    s = np.sqrt(out[1, 0] ** 2 + out[1, 1] ** 2 + out[1, 2] ** 2)
    for c in range(3):
        out[1, c] /= s
    d0 = out[2, 0] * out[0, 0] + out[2, 1] * out[0, 1] + out[2, 2] * out[0, 2]
    d1 = out[2, 0] * out[1, 0] + out[2, 1] * out[1, 1] + out[2, 2] * out[1, 2]
    for c in range(3):
        out[2, c] -= d0 * out[0, c] + d1 * out[1, c]
    s = np.sqrt(out[2, 0] ** 2 + out[2, 1] ** 2 + out[2, 2] ** 2)
    for c in range(3):
        out[2, c] /= s
    return out


@njit(cache=True)
def _gain_divisor(a_mat, b_mat, lam_min):
    """lambda_min * (1 + tr(a b^-1)), floored as in attitude_gain_divisor."""
    det = (
        b_mat[0, 0] * (b_mat[1, 1] * b_mat[2, 2] - b_mat[1, 2] * b_mat[2, 1])
        - b_mat[0, 1] * (b_mat[1, 0] * b_mat[2, 2] - b_mat[1, 2] * b_mat[2, 0])
        + b_mat[0, 2] * (b_mat[1, 0] * b_mat[2, 1] - b_mat[1, 1] * b_mat[2, 0])
    )
    if det == 0.0 or not np.isfinite(det):
        return _TAU_FLOOR
    inv = np.empty((3, 3))
    inv[0, 0] = (b_mat[1, 1] * b_mat[2, 2] - b_mat[1, 2] * b_mat[2, 1]) / det
    inv[0, 1] = (b_mat[0, 2] * b_mat[2, 1] - b_mat[0, 1] * b_mat[2, 2]) / det
    inv[0, 2] = (b_mat[0, 1] * b_mat[1, 2] - b_mat[0, 2] * b_mat[1, 1]) / det
    inv[1, 0] = (b_mat[1, 2] * b_mat[2, 0] - b_mat[1, 0] * b_mat[2, 2]) / det
    inv[1, 1] = (b_mat[0, 0] * b_mat[2, 2] - b_mat[0, 2] * b_mat[2, 0]) / det
    inv[1, 2] = (b_mat[0, 2] * b_mat[1, 0] - b_mat[0, 0] * b_mat[1, 2]) / det
    inv[2, 0] = (b_mat[1, 0] * b_mat[2, 1] - b_mat[1, 1] * b_mat[2, 0]) / det
    inv[2, 1] = (b_mat[0, 1] * b_mat[2, 0] - b_mat[0, 0] * b_mat[2, 1]) / det
    inv[2, 2] = (b_mat[0, 0] * b_mat[1, 1] - b_mat[0, 1] * b_mat[1, 0]) / det
    nb = 0.0
    ni = 0.0
    for r in range(3):
        for c in range(3):
            nb += b_mat[r, c] ** 2
            ni += inv[r, c] ** 2
    if np.sqrt(nb) * np.sqrt(ni) >= _PI_COND_LIMIT:
        return _TAU_FLOOR
    pi = 0.0
    for r in range(3):
        for c in range(3):
            pi += a_mat[r, c] * inv[c, r]
    tau = lam_min * (1.0 + pi)
    if not np.isfinite(tau) or tau < _TAU_FLOOR:
        return _TAU_FLOOR
    return tau


@njit(cache=True)
def _imu_rates(r, p, lm, b, y, refs, body, w, lam_min, om_m, v_m,
               k_w, k_1, k_2, g1, g2, inv_alpha, scale):
    """Continuous rates of the IMU-aided observer at one state."""
    n = lm.shape[0]
    m = refs.shape[0]

    half = np.zeros(3)
    a_mat = np.zeros((3, 3))
    b_mat = np.zeros((3, 3))
    cr = np.empty(3)
    for j in range(m):
        vh = _rot_apply_t(r, refs[j])
        _cross(vh, body[j], cr)
        for c in range(3):
            half[c] += 0.5 * w[j] * cr[c]
            for rr in range(3):
                a_mat[rr, c] += w[j] * body[j, rr] * refs[j, c]
                b_mat[rr, c] += w[j] * vh[rr] * refs[j, c]
    tau = _gain_divisor(a_mat, b_mat, lam_min)

    w_om = np.empty(3)
    for c in range(3):
        w_om[c] = scale * (k_w / tau) * half[c]

    e = np.empty((n, 3))
    w_v = np.zeros(3)
    se = np.zeros(3)   # sum of inv_alpha * e_body
    sc = np.zeros(3)   # sum of inv_alpha * (y x e_body)
    for i in range(n):
        ry = _rot_apply(r, y[i])
        for c in range(3):
            e[i, c] = lm[i, c] - ry[c] - p[c]
        ebi = _rot_apply_t(r, e[i])
        for c in range(3):
            se[c] += inv_alpha[i] * ebi[c]
        _cross(y[i], ebi, cr)
        for c in range(3):
            sc[c] += inv_alpha[i] * cr[c]
    for c in range(3):
        w_v[c] = -k_2 * se[c]

    om = np.empty(3)
    v = np.empty(3)
    for c in range(3):
        om[c] = om_m[c] - b[c] - w_om[c]
        v[c] = v_m[c] - b[3 + c] - w_v[c]

    r_dot = np.empty((3, 3))
    for rr in range(3):
        r_dot[rr, 0] = r[rr, 1] * om[2] - r[rr, 2] * om[1]
        r_dot[rr, 1] = r[rr, 2] * om[0] - r[rr, 0] * om[2]
        r_dot[rr, 2] = r[rr, 0] * om[1] - r[rr, 1] * om[0]
    p_dot = _rot_apply(r, v)

    lm_dot = np.empty((n, 3))
    for i in range(n):
        _cross(y[i], w_om, cr)
        rc = _rot_apply(r, cr)
        for c in range(3):
            lm_dot[i, c] = -k_1 * e[i, c] + rc[c]

    b_dot = np.empty(6)
    for c in range(3):
        b_dot[c] = scale * 0.5 * g1[c] * half[c] - g1[c] * sc[c]
        b_dot[3 + c] = -g2[c] * se[c]
    return r_dot, p_dot, lm_dot, b_dot


@njit(cache=True)
def imu_sample(r, p, lm, b, y, refs, body, w, lam_min, om_m, v_m,
               k_w, k_1, k_2, g1, g2, inv_alpha, scale, dt, nsub):
    """One measurement interval of the IMU-aided observer (RK4)."""
    r = r.copy()
    p = p.copy()
    lm = lm.copy()
    b = b.copy()
    h = dt / nsub
    for _ in range(nsub):
        r1, p1, l1, b1 = _imu_rates(r, p, lm, b, y, refs, body, w, lam_min,
                                    om_m, v_m, k_w, k_1, k_2, g1, g2,
                                    inv_alpha, scale)
        r2, p2, l2, b2 = _imu_rates(r + 0.5 * h * r1, p + 0.5 * h * p1,
                                    lm + 0.5 * h * l1, b + 0.5 * h * b1,
                                    y, refs, body, w, lam_min, om_m, v_m,
                                    k_w, k_1, k_2, g1, g2, inv_alpha, scale)
        r3, p3, l3, b3 = _imu_rates(r + 0.5 * h * r2, p + 0.5 * h * p2,
                                    lm + 0.5 * h * l2, b + 0.5 * h * b2,
                                    y, refs, body, w, lam_min, om_m, v_m,
                                    k_w, k_1, k_2, g1, g2, inv_alpha, scale)
        r4, p4, l4, b4 = _imu_rates(r + h * r3, p + h * p3,
                                    lm + h * l3, b + h * b3,
                                    y, refs, body, w, lam_min, om_m, v_m,
                                    k_w, k_1, k_2, g1, g2, inv_alpha, scale)
        s = h / 6.0
        r = r + s * (r1 + 2.0 * r2 + 2.0 * r3 + r4)
        p = p + s * (p1 + 2.0 * p2 + 2.0 * p3 + p4)
        lm = lm + s * (l1 + 2.0 * l2 + 2.0 * l3 + l4)
        b = b + s * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
    return _renormalize(r), p, lm, b


@njit(cache=True)
def _basic_rates(r, p, lm, b, y, om_m, v_m, k_w, k_1, gamma, inv_alpha):
    """Continuous rates of the feature-only observer at one state."""
    n = lm.shape[0]

    e = np.empty((n, 3))
    zr = np.zeros(3)    # sum g_i x e_i
    zv = np.zeros(3)    # sum e_i
    zwr = np.zeros(3)   # weighted sums for the bias drive
    zwv = np.zeros(3)
    cr = np.empty(3)
    gi = np.empty(3)
    for i in range(n):
        ry = _rot_apply(r, y[i])
        for c in range(3):
            e[i, c] = lm[i, c] - ry[c] - p[c]
            gi[c] = lm[i, c] - e[i, c]
        _cross(gi, e[i], cr)
        for c in range(3):
            zr[c] += cr[c]
            zv[c] += e[i, c]
            zwr[c] += inv_alpha[i] * cr[c]
            zwv[c] += inv_alpha[i] * e[i, c]

    # pose correction -k_w Ad(T^-1) [zr; zv] with T^-1 = (R^T, -R^T P)
    rzr = _rot_apply_t(r, zr)
    rzv = _rot_apply_t(r, zv)
    rp = _rot_apply_t(r, p)
    _cross(rp, rzr, cr)
    w_r = np.empty(3)
    w_v = np.empty(3)
    for c in range(3):
        w_r[c] = -k_w * rzr[c]
        w_v[c] = -k_w * (rzv[c] - cr[c])

    om = np.empty(3)
    v = np.empty(3)
    for c in range(3):
        om[c] = om_m[c] - b[c] - w_r[c]
        v[c] = v_m[c] - b[3 + c] - w_v[c]

    r_dot = np.empty((3, 3))
    for rr in range(3):
        r_dot[rr, 0] = r[rr, 1] * om[2] - r[rr, 2] * om[1]
        r_dot[rr, 1] = r[rr, 2] * om[0] - r[rr, 0] * om[2]
        r_dot[rr, 2] = r[rr, 0] * om[1] - r[rr, 1] * om[0]
    p_dot = _rot_apply(r, v)

    lm_dot = np.empty((n, 3))
    for i in range(n):
        for c in range(3):
            lm_dot[i, c] = -k_1 * e[i, c]

    # bias drive Ad(T)^T [zwr; zwv] = [R^T (zwr - P x zwv); R^T zwv]
    _cross(p, zwv, cr)
    for c in range(3):
        cr[c] = zwr[c] - cr[c]
    dr = _rot_apply_t(r, cr)
    dv = _rot_apply_t(r, zwv)
    b_dot = np.empty(6)
    for c in range(3):
        b_dot[c] = -gamma[c] * dr[c]
        b_dot[3 + c] = -gamma[3 + c] * dv[c]
    return r_dot, p_dot, lm_dot, b_dot


@njit(cache=True)
def basic_sample(r, p, lm, b, y, om_m, v_m, k_w, k_1, gamma, inv_alpha,
                 dt, nsub):
    """One measurement interval of the feature-only observer (RK4)."""
    r = r.copy()
    p = p.copy()
    lm = lm.copy()
    b = b.copy()
    h = dt / nsub
    for _ in range(nsub):
        r1, p1, l1, b1 = _basic_rates(r, p, lm, b, y, om_m, v_m,
                                      k_w, k_1, gamma, inv_alpha)
        r2, p2, l2, b2 = _basic_rates(r + 0.5 * h * r1, p + 0.5 * h * p1,
                                      lm + 0.5 * h * l1, b + 0.5 * h * b1,
                                      y, om_m, v_m, k_w, k_1, gamma, inv_alpha)
        r3, p3, l3, b3 = _basic_rates(r + 0.5 * h * r2, p + 0.5 * h * p2,
                                      lm + 0.5 * h * l2, b + 0.5 * h * b2,
                                      y, om_m, v_m, k_w, k_1, gamma, inv_alpha)
        r4, p4, l4, b4 = _basic_rates(r + h * r3, p + h * p3,
                                      lm + h * l3, b + h * b3,
                                      y, om_m, v_m, k_w, k_1, gamma, inv_alpha)
        s = h / 6.0
        r = r + s * (r1 + 2.0 * r2 + 2.0 * r3 + r4)
        p = p + s * (p1 + 2.0 * p2 + 2.0 * p3 + p4)
        lm = lm + s * (l1 + 2.0 * l2 + 2.0 * l3 + l4)
        b = b + s * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
    return _renormalize(r), p, lm, b


@njit(cache=True)
def _exp_step(r, p, om, v, h, r_out, p_out):
    """Advance (r, p) by the twist (om, v) held for h seconds.

    Same closed Rodrigues / left-Jacobian forms as liegroup.se3_exp,
    written on w w^T - theta^2 I instead of an explicit skew square.
    """
    w0 = om[0] * h
    w1 = om[1] * h
    w2 = om[2] * h
    t2 = w0 * w0 + w1 * w1 + w2 * w2
    theta = np.sqrt(t2)
    if theta < 1e-6:
        a = 1.0
        b = 0.5
        jc = 1.0 / 6.0
    else:
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / t2
        jc = (theta - np.sin(theta)) / (t2 * theta)
    w = (w0, w1, w2)
    ex = np.empty((3, 3))
    jl = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            ww = w[i] * w[j]
            ex[i, j] = b * ww
            jl[i, j] = jc * ww
        ex[i, i] += 1.0 - b * t2
        jl[i, i] += 1.0 - jc * t2
    ex[0, 1] -= a * w2
    ex[0, 2] += a * w1
    ex[1, 0] += a * w2
    ex[1, 2] -= a * w0
    ex[2, 0] -= a * w1
    ex[2, 1] += a * w0
    jl[0, 1] -= b * w2
    jl[0, 2] += b * w1
    jl[1, 0] += b * w2
    jl[1, 2] -= b * w0
    jl[2, 0] -= b * w1
    jl[2, 1] += b * w0
    for i in range(3):
        for j in range(3):
            r_out[i, j] = r[i, 0] * ex[0, j] + r[i, 1] * ex[1, j] + r[i, 2] * ex[2, j]
    for i in range(3):
        ti = h * (jl[i, 0] * v[0] + jl[i, 1] * v[1] + jl[i, 2] * v[2])
        p_out[i] = ti  # temporarily the body-frame translation
    t0 = p_out[0]
    t1 = p_out[1]
    t2b = p_out[2]
    for i in range(3):
        p_out[i] = p[i] + r[i, 0] * t0 + r[i, 1] * t1 + r[i, 2] * t2b


@njit(cache=True)
def world_trace(r0, p0, lm, refs, om_c, om_s, v_c, v_s, bias_om, bias_v,
                std_om, std_v, std_feat, vel_noise, feat_noise, dt, k_steps,
                rotations, positions, u_m, y, imu_body, mid_rot, mid_pos):
    """Fill a full ground-truth trace plus midpoint-sampled measurements.

    Per interval, exactly what the single-step samplers in worldsim
    produce: measured twist from the interval-midpoint truth plus bias
    and scaled noise, features/directions from the midpoint pose, truth
    advanced by the midpoint twist.  Noise comes pre-drawn so the caller
    owns the RNG.
    """
    n = lm.shape[0]
    m = refs.shape[0]
    r = r0.copy()
    p = p0.copy()
    r_mid = np.empty((3, 3))
    p_mid = np.empty(3)
    r_next = np.empty((3, 3))
    p_next = np.empty(3)
    om_true = np.empty(3)
    v_true = np.empty(3)
    om_q = np.empty(3)
    v_q = np.empty(3)
    third = np.empty(3)
    for k in range(k_steps):
        for i in range(3):
            for j in range(3):
                rotations[k, i, j] = r[i, j]
            positions[k, i] = p[i]

        t_mid = (k + 0.5) * dt
        t_quarter = (k + 0.25) * dt
        for c in range(3):
            om_true[c] = om_c[c] + om_s[c] * t_mid
            v_true[c] = v_c[c] + v_s[c] * t_mid
            om_q[c] = om_c[c] + om_s[c] * t_quarter
            v_q[c] = v_c[c] + v_s[c] * t_quarter
            u_m[k, c] = om_true[c] + bias_om[c] + std_om * vel_noise[k, c]
            u_m[k, 3 + c] = v_true[c] + bias_v[c] + std_v * vel_noise[k, 3 + c]

        _exp_step(r, p, om_q, v_q, 0.5 * dt, r_mid, p_mid)
        for i in range(3):
            for j in range(3):
                mid_rot[k, i, j] = r_mid[i, j]
            mid_pos[k, i] = p_mid[i]

        for i in range(n):
            d0 = lm[i, 0] - p_mid[0]
            d1 = lm[i, 1] - p_mid[1]
            d2 = lm[i, 2] - p_mid[2]
            for c in range(3):
                y[k, i, c] = d0 * r_mid[0, c] + d1 * r_mid[1, c] + d2 * r_mid[2, c]
                if std_feat > 0.0:
                    y[k, i, c] += std_feat * feat_noise[k, i, c]

        for j in range(m - 1):
            for c in range(3):
                imu_body[k, j, c] = (refs[j, 0] * r_mid[0, c]
                                     + refs[j, 1] * r_mid[1, c]
                                     + refs[j, 2] * r_mid[2, c])
        _cross(imu_body[k, 0], imu_body[k, 1], third)
        tn = np.sqrt(third[0] ** 2 + third[1] ** 2 + third[2] ** 2)
        for c in range(3):
            imu_body[k, m - 1, c] = third[c] / tn

        _exp_step(r, p, om_true, v_true, dt, r_next, p_next)
        for i in range(3):
            for j in range(3):
                r[i, j] = r_next[i, j]
            p[i] = p_next[i]

    for i in range(3):
        for j in range(3):
            rotations[k_steps, i, j] = r[i, j]
        positions[k_steps, i] = p[i]


@njit(cache=True)
def _quat_rotate(q, x, out):
    """Conjugation q (x) (0, x) (x) q^-1 in expanded form."""
    tx = q[2] * x[2] - q[3] * x[1]
    ty = q[3] * x[0] - q[1] * x[2]
    tz = q[1] * x[1] - q[2] * x[0]
    out[0] = x[0] + 2.0 * (q[0] * tx + q[2] * tz - q[3] * ty)
    out[1] = x[1] + 2.0 * (q[0] * ty + q[3] * tx - q[1] * tz)
    out[2] = x[2] + 2.0 * (q[0] * tz + q[1] * ty - q[2] * tx)


@njit(cache=True)
def _quat_rates(q, p, lm, b, y, refs, body, w, lam_min, om_m, v_m,
                k_w, k_1, k_2, g1, g2, inv_alpha, scale):
    """Continuous rates of the quaternion build of the IMU observer."""
    n = lm.shape[0]
    m = refs.shape[0]
    qc = np.empty(4)
    qc[0] = q[0]
    qc[1] = -q[1]
    qc[2] = -q[2]
    qc[3] = -q[3]

    half = np.zeros(3)
    a_mat = np.zeros((3, 3))
    b_mat = np.zeros((3, 3))
    vh = np.empty(3)
    cr = np.empty(3)
    for j in range(m):
        _quat_rotate(qc, refs[j], vh)
        _cross(vh, body[j], cr)
        for c in range(3):
            half[c] += 0.5 * w[j] * cr[c]
            for rr in range(3):
                a_mat[rr, c] += w[j] * body[j, rr] * refs[j, c]
                b_mat[rr, c] += w[j] * vh[rr] * refs[j, c]
    tau = _gain_divisor(a_mat, b_mat, lam_min)

    # carried to the inertial frame and straight back by conjugation,
    # matching the matrix filter's body-frame innovation
    tmp = np.empty(3)
    innov = np.empty(3)
    _quat_rotate(q, half, tmp)
    _quat_rotate(qc, tmp, innov)

    w_om = np.empty(3)
    for c in range(3):
        w_om[c] = scale * (k_w / tau) * innov[c]

    e = np.empty((n, 3))
    w_v = np.zeros(3)
    se = np.zeros(3)
    sc = np.zeros(3)
    ebi = np.empty(3)
    ry = np.empty(3)
    for i in range(n):
        _quat_rotate(q, y[i], ry)
        for c in range(3):
            e[i, c] = lm[i, c] - ry[c] - p[c]
        _quat_rotate(qc, e[i], ebi)
        for c in range(3):
            se[c] += inv_alpha[i] * ebi[c]
        _cross(y[i], ebi, cr)
        for c in range(3):
            sc[c] += inv_alpha[i] * cr[c]
    for c in range(3):
        w_v[c] = -k_2 * se[c]

    chi = np.empty(3)
    v = np.empty(3)
    for c in range(3):
        chi[c] = om_m[c] - b[c] - w_om[c]
        v[c] = v_m[c] - b[3 + c] - w_v[c]

    # dq/dt = 0.5 q (x) (0, chi)
    q_dot = np.empty(4)
    q_dot[0] = 0.5 * (-q[1] * chi[0] - q[2] * chi[1] - q[3] * chi[2])
    q_dot[1] = 0.5 * (q[0] * chi[0] + q[2] * chi[2] - q[3] * chi[1])
    q_dot[2] = 0.5 * (q[0] * chi[1] + q[3] * chi[0] - q[1] * chi[2])
    q_dot[3] = 0.5 * (q[0] * chi[2] + q[1] * chi[1] - q[2] * chi[0])

    p_dot = np.empty(3)
    _quat_rotate(q, v, p_dot)

    lm_dot = np.empty((n, 3))
    for i in range(n):
        _cross(y[i], w_om, cr)
        _quat_rotate(q, cr, tmp)
        for c in range(3):
            lm_dot[i, c] = -k_1 * e[i, c] + tmp[c]

    b_dot = np.empty(6)
    for c in range(3):
        b_dot[c] = scale * 0.5 * g1[c] * innov[c] - g1[c] * sc[c]
        b_dot[3 + c] = -g2[c] * se[c]
    return q_dot, p_dot, lm_dot, b_dot


@njit(cache=True)
def quat_sample(q, p, lm, b, y, refs, body, w, lam_min, om_m, v_m,
                k_w, k_1, k_2, g1, g2, inv_alpha, scale, dt, nsub):
    """One measurement interval of the quaternion observer (RK4)."""
    q = q.copy()
    p = p.copy()
    lm = lm.copy()
    b = b.copy()
    h = dt / nsub
    for _ in range(nsub):
        q1, p1, l1, b1 = _quat_rates(q, p, lm, b, y, refs, body, w, lam_min,
                                     om_m, v_m, k_w, k_1, k_2, g1, g2,
                                     inv_alpha, scale)
        q2, p2, l2, b2 = _quat_rates(q + 0.5 * h * q1, p + 0.5 * h * p1,
                                     lm + 0.5 * h * l1, b + 0.5 * h * b1,
                                     y, refs, body, w, lam_min, om_m, v_m,
                                     k_w, k_1, k_2, g1, g2, inv_alpha, scale)
        q3, p3, l3, b3 = _quat_rates(q + 0.5 * h * q2, p + 0.5 * h * p2,
                                     lm + 0.5 * h * l2, b + 0.5 * h * b2,
                                     y, refs, body, w, lam_min, om_m, v_m,
                                     k_w, k_1, k_2, g1, g2, inv_alpha, scale)
        q4, p4, l4, b4 = _quat_rates(q + h * q3, p + h * p3,
                                     lm + h * l3, b + h * b3,
                                     y, refs, body, w, lam_min, om_m, v_m,
                                     k_w, k_1, k_2, g1, g2, inv_alpha, scale)
        s = h / 6.0
        q = q + s * (q1 + 2.0 * q2 + 2.0 * q3 + q4)
        p = p + s * (p1 + 2.0 * p2 + 2.0 * p3 + p4)
        lm = lm + s * (l1 + 2.0 * l2 + 2.0 * l3 + l4)
        b = b + s * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        qn = np.sqrt(q[0] ** 2 + q[1] ** 2 + q[2] ** 2 + q[3] ** 2)
        for c in range(4):
            q[c] /= qn
    return q, p, lm, b
