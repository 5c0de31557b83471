"""Pure-numpy reference kernels for the hybrid closed-loop flow.

Same call signatures and the same arithmetic, operation for operation, as
kernels_numba; the equivalence test holds the two paths together. This path is
selected with SOCPACK_BACKEND=numpy and is the fallback when numba is absent.

State layout per call: plant vectors urc/soc of length N, estimator scalars
u_bar/soc_hat, 0-based selected-cell index sig0, constant pack current u.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "numpy"

# flow_segment status codes
SEG_DONE = 0
SEG_TRIGGER = 1
SEG_NONFINITE = 2


def ocv_eval_one(xs, ys, ms, s):
    """Scalar cubic-Hermite evaluation with linear extension outside the knots."""
    n = xs.shape[0]
    if s <= xs[0]:
        return ys[0] + ms[0] * (s - xs[0])
    if s >= xs[n - 1]:
        return ys[n - 1] + ms[n - 1] * (s - xs[n - 1])
    lo = 0
    hi = n - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if xs[mid] <= s:
            lo = mid
        else:
            hi = mid
    h = xs[lo + 1] - xs[lo]
    t = (s - xs[lo]) / h
    t2 = t * t
    t3 = t2 * t
    h00 = 2.0 * t3 - 3.0 * t2 + 1.0
    h10 = t3 - 2.0 * t2 + t
    h01 = -2.0 * t3 + 3.0 * t2
    h11 = t3 - t2
    return h00 * ys[lo] + h10 * h * ms[lo] + h01 * ys[lo + 1] + h11 * h * ms[lo + 1]


def ocv_eval_vec(xs, ys, ms, s):
    s = np.asarray(s, dtype=float)
    idx = np.clip(np.searchsorted(xs, s, side="right") - 1, 0, xs.size - 2)
    x0 = xs[idx]
    h = xs[idx + 1] - x0
    t = (s - x0) / h
    t2 = t * t
    t3 = t2 * t
    h00 = 2.0 * t3 - 3.0 * t2 + 1.0
    h10 = t3 - 2.0 * t2 + t
    h01 = -2.0 * t3 + 3.0 * t2
    h11 = t3 - t2
    v = h00 * ys[idx] + h10 * h * ms[idx] + h01 * ys[idx + 1] + h11 * h * ms[idx + 1]
    v = np.where(s <= xs[0], ys[0] + ms[0] * (s - xs[0]), v)
    v = np.where(s >= xs[-1], ys[-1] + ms[-1] * (s - xs[-1]), v)
    return v


def _est_rhs(ubar, soc_hat, urc_sig, soc_sig, u,
             inv_tau_est, ell, inv_cd_sig, inv_q36_sig, r_int_sig, xs, ys, ms):
    # Observer flow: dU_bar = -U_bar/tau_d + u;
    # dSOC_hat = -u/(3600 Q_sigma) + ell*(y_sigma - y_hat),
    # y_hat = -U_hat_sigma + D_sigma*u + V_OCV(SOC_hat) with D_sigma = -R_int_sigma.
    d_ubar = -ubar * inv_tau_est + u
    y_sig = -urc_sig - r_int_sig * u + ocv_eval_one(xs, ys, ms, soc_sig)
    u_hat_sig = ubar * inv_cd_sig
    y_hat = -u_hat_sig + (-r_int_sig) * u + ocv_eval_one(xs, ys, ms, soc_hat)
    d_soc_hat = -(u * inv_q36_sig) + ell * (y_sig - y_hat)
    return d_ubar, d_soc_hat


def rk4_step(urc, soc, ubar, soc_hat, sig0, u, h,
             inv_tau, inv_cd, inv_q36, r_int, inv_tau_est, ell, xs, ys, ms):
    """One classical RK4 step of the full (2N+2)-dimensional flow.

    Returns (urc_new, soc_new, ubar_new, soc_hat_new); sigma does not flow.
    """
    hh = 0.5 * h
    r_sig = r_int[sig0]
    icd_sig = inv_cd[sig0]
    iq_sig = inv_q36[sig0]

    k1u = -urc * inv_tau + u * inv_cd
    k1s = -(u * inv_q36)
    k1b, k1h = _est_rhs(ubar, soc_hat, urc[sig0], soc[sig0], u,
                        inv_tau_est, ell, icd_sig, iq_sig, r_sig, xs, ys, ms)

    au = urc + hh * k1u
    as_ = soc + hh * k1s
    ab = ubar + hh * k1b
    ah = soc_hat + hh * k1h
    k2u = -au * inv_tau + u * inv_cd
    k2s = -(u * inv_q36)
    k2b, k2h = _est_rhs(ab, ah, au[sig0], as_[sig0], u,
                        inv_tau_est, ell, icd_sig, iq_sig, r_sig, xs, ys, ms)

    au = urc + hh * k2u
    as_ = soc + hh * k2s
    ab = ubar + hh * k2b
    ah = soc_hat + hh * k2h
    k3u = -au * inv_tau + u * inv_cd
    k3s = -(u * inv_q36)
    k3b, k3h = _est_rhs(ab, ah, au[sig0], as_[sig0], u,
                        inv_tau_est, ell, icd_sig, iq_sig, r_sig, xs, ys, ms)

    au = urc + h * k3u
    as_ = soc + h * k3s
    ab = ubar + h * k3b
    ah = soc_hat + h * k3h
    k4u = -au * inv_tau + u * inv_cd
    k4s = -(u * inv_q36)
    k4b, k4h = _est_rhs(ab, ah, au[sig0], as_[sig0], u,
                        inv_tau_est, ell, icd_sig, iq_sig, r_sig, xs, ys, ms)

    s6 = h / 6.0
    urc_new = urc + s6 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
    soc_new = soc + s6 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
    ubar_new = ubar + s6 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
    soc_hat_new = soc_hat + s6 * (k1h + 2.0 * k2h + 2.0 * k3h + k4h)
    return urc_new, soc_new, ubar_new, soc_hat_new


def z_flags(urc, soc, ubar, soc_hat, sig0, u, inv_cd, r_int, xs, ys, ms,
            sign, eps, mu_eps):
    """Per-cell OCV estimates z and exact C/D membership at one state.

    Returns (z, in_c, in_d, rel_min) where rel_min is the signed window
    position min_{i != sigma} (sign*z_i - sign*V_OCV(soc_hat)); the flow set
    requires rel >= -eps for all i != sigma, the jump set some
    rel in [-eps, -mu*eps].
    """
    w_hat = sign * ocv_eval_one(xs, ys, ms, soc_hat)
    v = -urc - r_int * u + ocv_eval_vec(xs, ys, ms, soc)
    z = v + ubar * inv_cd + r_int * u
    rel = sign * z - w_hat
    if z.shape[0] == 1:
        return z, True, False, math.inf
    rel_others = np.delete(rel, sig0)
    in_c = bool(np.all(rel_others >= -eps))
    in_d = bool(np.any((rel_others >= -eps) & (rel_others <= -mu_eps)))
    rel_min = float(np.min(rel_others))
    return z, in_c, in_d, rel_min


def flow_segment(urc, soc, ubar, soc_hat, sig0, u, h, n_steps,
                 inv_tau, inv_cd, inv_q36, r_int, inv_tau_est, ell,
                 xs, ys, ms, sign, eps, mu_eps, trig_level,
                 out_urc, out_soc, out_ubar, out_soc_hat, out_z,
                 out_in_c, out_in_d, offset):
    """Integrate up to n_steps grid steps, recording each post-step sample.

    Writes rows offset .. offset+k-1 and stops early with SEG_TRIGGER when the
    post-step state satisfies rel_min <= -trig_level (candidate jump), or with
    SEG_NONFINITE on integrator blow-up. Returns (steps_done, status).
    """
    for k in range(n_steps):
        urc, soc, ubar, soc_hat = rk4_step(
            urc, soc, ubar, soc_hat, sig0, u, h,
            inv_tau, inv_cd, inv_q36, r_int, inv_tau_est, ell, xs, ys, ms)
        row = offset + k
        if not (math.isfinite(ubar) and math.isfinite(soc_hat)):
            return k + 1, SEG_NONFINITE
        z, in_c, in_d, rel_min = z_flags(
            urc, soc, ubar, soc_hat, sig0, u, inv_cd, r_int, xs, ys, ms,
            sign, eps, mu_eps)
        out_urc[row] = urc
        out_soc[row] = soc
        out_ubar[row] = ubar
        out_soc_hat[row] = soc_hat
        out_z[row] = z
        out_in_c[row] = in_c
        out_in_d[row] = in_d
        if rel_min <= -trig_level:
            return k + 1, SEG_TRIGGER
    return n_steps, SEG_DONE
