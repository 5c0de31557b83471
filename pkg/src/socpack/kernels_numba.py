"""numba-compiled hot kernels for the hybrid closed-loop flow.

Twin of kernels_numpy (same signatures, same arithmetic per element); the
per-step loops are explicit so the whole segment integration runs compiled.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

BACKEND_NAME = "numba"

SEG_DONE = 0
SEG_TRIGGER = 1
SEG_NONFINITE = 2


@njit(cache=True)
def ocv_eval_one(xs, ys, ms, s):
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


@njit(cache=True)
def ocv_eval_vec(xs, ys, ms, s):
    out = np.empty(s.shape[0])
    for i in range(s.shape[0]):
        out[i] = ocv_eval_one(xs, ys, ms, s[i])
    return out


@njit(cache=True)
def _est_rhs(ubar, soc_hat, urc_sig, soc_sig, u,
             inv_tau_est, ell, inv_cd_sig, inv_q36_sig, r_int_sig, xs, ys, ms):
    d_ubar = -ubar * inv_tau_est + u
    y_sig = -urc_sig - r_int_sig * u + ocv_eval_one(xs, ys, ms, soc_sig)
    u_hat_sig = ubar * inv_cd_sig
    y_hat = -u_hat_sig + (-r_int_sig) * u + ocv_eval_one(xs, ys, ms, soc_hat)
    d_soc_hat = -(u * inv_q36_sig) + ell * (y_sig - y_hat)
    return d_ubar, d_soc_hat


@njit(cache=True)
def _rk4_core(urc, soc, ubar, soc_hat, sig0, u, h,
              inv_tau, inv_cd, inv_q36, r_int, inv_tau_est, ell, xs, ys, ms,
              urc_new, soc_new, au, k1u, k2u, k3u):
    """RK4 step writing the plant into urc_new/soc_new (buffers provided).

    Returns (ubar_new, soc_hat_new). The SOC stage derivative is the same
    constant -u*inv_q36 at every stage, so only the U_RC stages are stored.
    """
    n = urc.shape[0]
    hh = 0.5 * h
    r_sig = r_int[sig0]
    icd_sig = inv_cd[sig0]
    iq_sig = inv_q36[sig0]

    for i in range(n):
        k1u[i] = -urc[i] * inv_tau[i] + u * inv_cd[i]
    k1s_sig = -(u * inv_q36[sig0])
    k1b, k1h = _est_rhs(ubar, soc_hat, urc[sig0], soc[sig0], u,
                        inv_tau_est, ell, icd_sig, iq_sig, r_sig, xs, ys, ms)

    for i in range(n):
        au[i] = urc[i] + hh * k1u[i]
    as_sig = soc[sig0] + hh * k1s_sig
    ab = ubar + hh * k1b
    ah = soc_hat + hh * k1h
    for i in range(n):
        k2u[i] = -au[i] * inv_tau[i] + u * inv_cd[i]
    k2b, k2h = _est_rhs(ab, ah, au[sig0], as_sig, u,
                        inv_tau_est, ell, icd_sig, iq_sig, r_sig, xs, ys, ms)

    for i in range(n):
        au[i] = urc[i] + hh * k2u[i]
    as_sig = soc[sig0] + hh * k1s_sig
    ab = ubar + hh * k2b
    ah = soc_hat + hh * k2h
    for i in range(n):
        k3u[i] = -au[i] * inv_tau[i] + u * inv_cd[i]
    k3b, k3h = _est_rhs(ab, ah, au[sig0], as_sig, u,
                        inv_tau_est, ell, icd_sig, iq_sig, r_sig, xs, ys, ms)

    for i in range(n):
        au[i] = urc[i] + h * k3u[i]
    as_sig = soc[sig0] + h * k1s_sig
    ab = ubar + h * k3b
    ah = soc_hat + h * k3h
    s6 = h / 6.0
    for i in range(n):
        k4u_i = -au[i] * inv_tau[i] + u * inv_cd[i]
        urc_new[i] = urc[i] + s6 * (k1u[i] + 2.0 * k2u[i] + 2.0 * k3u[i] + k4u_i)
        ks = -(u * inv_q36[i])
        soc_new[i] = soc[i] + s6 * (ks + 2.0 * ks + 2.0 * ks + ks)
    k4b, k4h = _est_rhs(ab, ah, au[sig0], as_sig, u,
                        inv_tau_est, ell, icd_sig, iq_sig, r_sig, xs, ys, ms)
    ubar_new = ubar + s6 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
    soc_hat_new = soc_hat + s6 * (k1h + 2.0 * k2h + 2.0 * k3h + k4h)
    return ubar_new, soc_hat_new


@njit(cache=True)
def rk4_step(urc, soc, ubar, soc_hat, sig0, u, h,
             inv_tau, inv_cd, inv_q36, r_int, inv_tau_est, ell, xs, ys, ms):
    n = urc.shape[0]
    urc_new = np.empty(n)
    soc_new = np.empty(n)
    au = np.empty(n)
    k1u = np.empty(n)
    k2u = np.empty(n)
    k3u = np.empty(n)
    ubar_new, soc_hat_new = _rk4_core(
        urc, soc, ubar, soc_hat, sig0, u, h,
        inv_tau, inv_cd, inv_q36, r_int, inv_tau_est, ell, xs, ys, ms,
        urc_new, soc_new, au, k1u, k2u, k3u)
    return urc_new, soc_new, ubar_new, soc_hat_new


@njit(cache=True)
def _z_flags_core(urc, soc, ubar, soc_hat, sig0, u, inv_cd, r_int, xs, ys, ms,
                  sign, eps, mu_eps, z_out):
    w_hat = sign * ocv_eval_one(xs, ys, ms, soc_hat)
    n = urc.shape[0]
    in_c = True
    in_d = False
    rel_min = math.inf
    for i in range(n):
        v_i = -urc[i] - r_int[i] * u + ocv_eval_one(xs, ys, ms, soc[i])
        z_i = v_i + ubar * inv_cd[i] + r_int[i] * u
        z_out[i] = z_i
        if i == sig0:
            continue
        r = sign * z_i - w_hat
        if r < rel_min:
            rel_min = r
        if r < -eps:
            in_c = False
        elif r <= -mu_eps:
            in_d = True
    return in_c, in_d, rel_min


@njit(cache=True)
def z_flags(urc, soc, ubar, soc_hat, sig0, u, inv_cd, r_int, xs, ys, ms,
            sign, eps, mu_eps):
    z = np.empty(urc.shape[0])
    in_c, in_d, rel_min = _z_flags_core(
        urc, soc, ubar, soc_hat, sig0, u, inv_cd, r_int, xs, ys, ms,
        sign, eps, mu_eps, z)
    return z, in_c, in_d, rel_min


@njit(cache=True)
def flow_segment(urc, soc, ubar, soc_hat, sig0, u, h, n_steps,
                 inv_tau, inv_cd, inv_q36, r_int, inv_tau_est, ell,
                 xs, ys, ms, sign, eps, mu_eps, trig_level,
                 out_urc, out_soc, out_ubar, out_soc_hat, out_z,
                 out_in_c, out_in_d, offset):
    n = urc.shape[0]
    cur_u = urc.copy()
    cur_s = soc.copy()
    new_u = np.empty(n)
    new_s = np.empty(n)
    au = np.empty(n)
    k1u = np.empty(n)
    k2u = np.empty(n)
    k3u = np.empty(n)
    for k in range(n_steps):
        ubar, soc_hat = _rk4_core(
            cur_u, cur_s, ubar, soc_hat, sig0, u, h,
            inv_tau, inv_cd, inv_q36, r_int, inv_tau_est, ell, xs, ys, ms,
            new_u, new_s, au, k1u, k2u, k3u)
        tmp = cur_u
        cur_u = new_u
        new_u = tmp
        tmp = cur_s
        cur_s = new_s
        new_s = tmp
        row = offset + k
        if not (math.isfinite(ubar) and math.isfinite(soc_hat)):
            return k + 1, SEG_NONFINITE
        in_c, in_d, rel_min = _z_flags_core(
            cur_u, cur_s, ubar, soc_hat, sig0, u, inv_cd, r_int, xs, ys, ms,
            sign, eps, mu_eps, out_z[row])
        for i in range(n):
            out_urc[row, i] = cur_u[i]
            out_soc[row, i] = cur_s[i]
        out_ubar[row] = ubar
        out_soc_hat[row] = soc_hat
        out_in_c[row] = in_c
        out_in_d[row] = in_d
        if rel_min <= -trig_level:
            return k + 1, SEG_TRIGGER
    return n_steps, SEG_DONE
