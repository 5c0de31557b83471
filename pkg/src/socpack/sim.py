"""Hybrid executor: integrates flows, localizes and applies jumps, records the
solution on a hybrid time domain.

Execution semantics: fixed-step RK4 on a grid aligned with the (cadlag,
piecewise-constant) current profile, so no step straddles an input
discontinuity. Candidate jumps are detected at step endpoints and the first
entry of the jump window is then localized by bisection inside the step to a
time tolerance of 1e-6 of the step. Under the default jump-priority policy a
jump fires as soon as the jump set is entered; under the boundary policy the
solution flows through the jump set and jumps at the flow-set boundary.

Grid samples always carry the plant state of the *unsplit* grid RK4 step:
the plant flow is autonomous with respect to the estimator, so this keeps the
recorded plant trajectory independent of estimator parameters (and therefore
of jump times); only the estimator is re-integrated over the post-jump
remainder of a step.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .estimator import EstimatorParams, EstimatorState, HybridState, jump_map
from .pack import PackConfig, PlantState, pack_arrays

__all__ = ["CurrentProfile", "HybridTrace", "SimulationError", "ZenoError",
           "InfeasibleInitError", "IntegrationError", "flow_step",
           "event_refine", "run"]

_BISECT_ITERS = 21  # 2^-21 < 1e-6 of the step
_SAMPLE_FIELDS = ("t", "j", "sigma", "u", "u_rc", "soc", "u_bar", "soc_hat",
                  "z", "in_c", "in_d")


class SimulationError(RuntimeError):
    pass


class ZenoError(SimulationError):
    """Jump-rate or chained-jump guard tripped."""


class InfeasibleInitError(SimulationError):
    """Initial condition lies outside the flow and jump sets."""


class IntegrationError(SimulationError):
    """Integrator produced a non-finite state."""


@dataclass(frozen=True)
class CurrentProfile:
    """Piecewise-constant, right-continuous pack current (cadlag).

    u(t) = values[k] on [times[k], times[k+1]) and values[-1] after the last
    breakpoint. times must be strictly increasing and start at 0.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        v = np.array(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size == 0:
            raise ValueError("times and values must be equal-length 1-D arrays")
        if t[0] != 0.0:
            raise ValueError("profile must start at t = 0")
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("profile times must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueError("profile entries must be finite")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, i_pack_a: float) -> "CurrentProfile":
        return cls(np.array([0.0]), np.array([float(i_pack_a)]))

    def value_at(self, t: float) -> float:
        if t < 0.0:
            raise ValueError("profile is defined for t >= 0")
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        return float(self.values[k])

    def sup_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def segments(self, t_end: float):
        """Constant-u intervals [(t_start, t_stop, u), ...] covering [0, t_end]."""
        if t_end <= 0.0:
            raise ValueError("t_end must be positive")
        cuts = [0.0] + [float(t) for t in self.times if 0.0 < t < t_end] + [t_end]
        return [(cuts[k], cuts[k + 1], self.value_at(cuts[k]))
                for k in range(len(cuts) - 1)]

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("t_s,i_pack_a\n")
            for t, v in zip(self.times, self.values):
                f.write(f"{t:.17g},{v:.17g}\n")

    @classmethod
    def from_csv(cls, path) -> "CurrentProfile":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1])


@dataclass
class JumpTable:
    """Per-jump records; j is the pre-jump jump counter (sample (t, j) exists
    before the jump and (t, j+1) after)."""

    t: np.ndarray = field(default_factory=lambda: np.empty(0))
    j: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    sigma_before: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    sigma_after: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    soc_hat_before: np.ndarray = field(default_factory=lambda: np.empty(0))
    soc_hat_after: np.ndarray = field(default_factory=lambda: np.empty(0))
    soc_sigma_before: np.ndarray = field(default_factory=lambda: np.empty(0))
    soc_sigma_after: np.ndarray = field(default_factory=lambda: np.empty(0))
    v1: np.ndarray = field(default_factory=lambda: np.empty(0))
    forced: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=bool))

    @property
    def n_jumps(self) -> int:
        return self.t.size


@dataclass
class HybridTrace:
    """Recorded hybrid solution: one row per sample on the hybrid time domain.

    Flow samples advance t at fixed j; each jump contributes two rows with the
    same t and j incremented by one. sigma is 1-based.
    """

    t: np.ndarray
    j: np.ndarray
    sigma: np.ndarray
    u: np.ndarray
    u_rc: np.ndarray      # (n_samples, N)
    soc: np.ndarray       # (n_samples, N)
    u_bar: np.ndarray
    soc_hat: np.ndarray
    z: np.ndarray         # (n_samples, N)
    in_c: np.ndarray
    in_d: np.ndarray
    jumps: JumpTable
    meta: dict

    @property
    def n_samples(self) -> int:
        return self.t.size

    @property
    def n_cells(self) -> int:
        return self.u_rc.shape[1]

    def state_at(self, row: int) -> HybridState:
        return HybridState(
            plant=PlantState(self.u_rc[row], self.soc[row]),
            est=EstimatorState(u_bar_rc=float(self.u_bar[row]),
                               soc_hat=float(self.soc_hat[row]),
                               sigma=int(self.sigma[row])),
        )

    def final_state(self) -> HybridState:
        return self.state_at(self.n_samples - 1)

    def validate(self) -> None:
        """Hybrid-time-domain and switching invariants; raises on violation."""
        t, j = self.t, self.j
        dt = np.diff(t)
        dj = np.diff(j)
        flow_ok = (dt > 0.0) & (dj == 0)
        jump_ok = (dt == 0.0) & (dj == 1)
        bad = np.flatnonzero(~(flow_ok | jump_ok))
        if bad.size:
            k = int(bad[0])
            raise SimulationError(
                f"invalid hybrid time domain at rows {k},{k + 1}: "
                f"t {t[k]!r}->{t[k + 1]!r}, j {j[k]}->{j[k + 1]}")
        sig_changed = np.diff(self.sigma) != 0
        if np.any(sig_changed & ~jump_ok):
            k = int(np.flatnonzero(sig_changed & ~jump_ok)[0])
            raise SimulationError(f"sigma changed along a flow at row {k}")
        if np.any(self.in_d & ~self.in_c):
            k = int(np.flatnonzero(self.in_d & ~self.in_c)[0])
            raise SimulationError(
                f"encountered a state in D but not in C at row {k} "
                f"(t={t[k]!r}): D subset-of C violated")
        if int(np.sum(jump_ok)) != self.jumps.n_jumps:
            raise SimulationError("jump rows and jump table disagree")


def _kernel_args(cfg: PackConfig, params: EstimatorParams):
    p = pack_arrays(cfg)
    c = cfg.ocv
    return (p.inv_tau_d, p.inv_c_d, p.inv_q3600, p.r_int,
            1.0 / params.tau_d_s, params.ell, c.xs, c.ys, c.ms)


def flow_step(cfg: PackConfig, params: EstimatorParams, q: HybridState,
              u: float, h: float) -> HybridState:
    """One classical RK4 step of the full (2N+2)-dimensional flow; sigma fixed."""
    if not h > 0.0:
        raise ValueError("step size must be positive")
    kern = backend.kernels()
    urc, soc, ubar, soc_hat = kern.rk4_step(
        q.plant.u_rc, q.plant.soc, q.est.u_bar_rc, q.est.soc_hat,
        q.est.sigma - 1, float(u), float(h), *_kernel_args(cfg, params))
    if not (math.isfinite(ubar) and math.isfinite(soc_hat)
            and np.all(np.isfinite(urc))):
        raise IntegrationError(f"integrator blow-up within a step of h={h}")
    return HybridState(plant=PlantState(urc, soc),
                       est=EstimatorState(u_bar_rc=float(ubar),
                                          soc_hat=float(soc_hat),
                                          sigma=q.est.sigma))


def _z_flags_state(kern, cfg_arrays, curve, params, urc, soc, ubar, soc_hat, sig0, u):
    eps = params.epsilon_v
    return kern.z_flags(urc, soc, ubar, soc_hat, sig0, u,
                        cfg_arrays.inv_c_d, cfg_arrays.r_int,
                        curve.xs, curve.ys, curve.ms,
                        params.sign, eps, params.mu * eps)


def event_refine(cfg: PackConfig, params: EstimatorParams,
                 q_before: HybridState, q_after: HybridState,
                 u: float, h: float):
    """Localize the first jump-window entry within one step by bisection.

    Returns (t_offset, q_star) with t_offset in [0, h] relative to q_before
    and q_star inside the jump window (time tolerance 1e-6 * h). If q_before
    is already in the window, returns (0.0, q_before). Raises ValueError when
    neither end of the step has entered the window.
    """
    kern = backend.kernels()
    p = pack_arrays(cfg)
    curve = cfg.ocv
    sig0 = q_before.est.sigma - 1
    level = params.mu * params.epsilon_v

    def g_of(urc, soc, ubar, soc_hat):
        _, _, _, rel_min = _z_flags_state(kern, p, curve, params,
                                          urc, soc, ubar, soc_hat, sig0, u)
        return rel_min + level

    lo = (q_before.plant.u_rc, q_before.plant.soc,
          q_before.est.u_bar_rc, q_before.est.soc_hat)
    if g_of(*lo) <= 0.0:
        return 0.0, q_before
    if g_of(q_after.plant.u_rc, q_after.plant.soc,
            q_after.est.u_bar_rc, q_after.est.soc_hat) > 0.0:
        raise ValueError("no jump-window entry within the step")
    kargs = _kernel_args(cfg, params)
    th_lo, th_hi = 0.0, 1.0
    st_hi = None
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (th_lo + th_hi)
        st = kern.rk4_step(*lo, sig0, float(u), mid * h, *kargs)
        if g_of(*st) <= 0.0:
            th_hi, st_hi = mid, st
        else:
            th_lo = mid
    if st_hi is None:
        st_hi = kern.rk4_step(*lo, sig0, float(u), h, *kargs)
        th_hi = 1.0
    q_star = HybridState(plant=PlantState(st_hi[0], st_hi[1]),
                         est=EstimatorState(u_bar_rc=float(st_hi[2]),
                                            soc_hat=float(st_hi[3]),
                                            sigma=q_before.est.sigma))
    return th_hi * h, q_star


class _TraceBuilder:
    def __init__(self, n_cells):
        self.n_cells = n_cells
        self.chunks = []

    def add_row(self, t, j, sigma1, u, urc, soc, ubar, soc_hat, z, in_c, in_d):
        self.chunks.append({
            "t": np.array([t]), "j": np.array([j], dtype=np.int64),
            "sigma": np.array([sigma1], dtype=np.int64), "u": np.array([u]),
            "u_rc": np.array(urc, dtype=float).reshape(1, -1),
            "soc": np.array(soc, dtype=float).reshape(1, -1),
            "u_bar": np.array([ubar]), "soc_hat": np.array([soc_hat]),
            "z": np.array(z, dtype=float).reshape(1, -1),
            "in_c": np.array([in_c], dtype=bool),
            "in_d": np.array([in_d], dtype=bool),
        })

    def add_arrays(self, **arrays):
        self.chunks.append(arrays)

    def concat(self):
        return {f: np.concatenate([c[f] for c in self.chunks]) for f in _SAMPLE_FIELDS}


def run(cfg: PackConfig, params: EstimatorParams, q0: HybridState,
        profile: CurrentProfile, t_end: float, h: float, seed: int = 0, *,
        auto_init: bool = False, max_jumps_per_second: float = 1000.0) -> HybridTrace:
    """Execute the closed loop over [0, t_end] and record a HybridTrace.

    q0 must lie in the union of the flow and jump sets; with auto_init=True an
    infeasible estimator initialization is replaced by
    soc_hat = V_OCV^-1(extreme_i z_i(0)), sigma = arg-extreme_i z_i(0).
    Raises ZenoError when more than N-1 jumps chain at one instant or the
    jumps-per-second guard trips, and IntegrationError on a non-finite state.
    """
    n = cfg.n_cells
    if q0.plant.n_cells != n:
        raise ValueError("initial state size does not match the pack")
    if not h > 0.0:
        raise ValueError("step size must be positive")
    kern = backend.kernels()
    p = pack_arrays(cfg)
    curve = cfg.ocv
    eps = params.epsilon_v
    trig_level = params.mu * eps if params.jump_priority else eps
    kargs = _kernel_args(cfg, params)
    rng = np.random.default_rng(seed)

    urc = np.array(q0.plant.u_rc, dtype=float)
    soc = np.array(q0.plant.soc, dtype=float)
    ubar = float(q0.est.u_bar_rc)
    soc_hat = float(q0.est.soc_hat)
    sig0 = q0.est.sigma - 1
    j = 0

    builder = _TraceBuilder(n)
    jump_rows = []
    recent_jumps = deque()
    same_instant = {"t": None, "count": 0}
    diag = {"forced_jumps": 0, "max_chain": 0, "n_refinements": 0}

    def flags_at(urc_, soc_, ubar_, soc_hat_, sig0_, u_):
        return _z_flags_state(kern, p, curve, params,
                              urc_, soc_, ubar_, soc_hat_, sig0_, u_)

    def v1_of(urc_, ubar_):
        e = urc_ - ubar_ * p.inv_c_d
        return float(np.max(e * e))

    def jumpable(in_c_, in_d_, rel_min_):
        if params.jump_priority:
            return in_d_ or not in_c_
        return rel_min_ <= -eps

    def do_jump(t, urc_, soc_, ubar_, soc_hat_, sig0_, z_, forced):
        nonlocal j
        # each jump excludes the current sigma, so more than N-1 re-selections
        # at one instant is a livelock
        if same_instant["t"] == t:
            same_instant["count"] += 1
        else:
            same_instant["t"] = t
            same_instant["count"] = 1
        if same_instant["count"] > n - 1:
            raise ZenoError(f"more than N-1={n - 1} chained jumps at t={t:g}")
        diag["max_chain"] = max(diag["max_chain"], same_instant["count"])
        recent_jumps.append(t)
        while recent_jumps and t - recent_jumps[0] > 1.0:
            recent_jumps.popleft()
        if len(recent_jumps) > max_jumps_per_second:
            raise ZenoError(
                f"more than {max_jumps_per_second:g} jumps within 1 s near t={t:g}")
        est = EstimatorState(u_bar_rc=ubar_, soc_hat=soc_hat_, sigma=sig0_ + 1)
        est_new = jump_map(cfg, params, est, z_, rng)
        jump_rows.append({
            "t": t, "j": j, "sigma_before": sig0_ + 1, "sigma_after": est_new.sigma,
            "soc_hat_before": soc_hat_, "soc_hat_after": est_new.soc_hat,
            "soc_sigma_before": float(soc_[sig0_]),
            "soc_sigma_after": float(soc_[est_new.sigma - 1]),
            "v1": v1_of(urc_, ubar_), "forced": bool(forced),
        })
        if forced:
            diag["forced_jumps"] += 1
        j += 1
        return est_new.sigma - 1, est_new.soc_hat

    def chain_jumps_at_sample(t, u_, z_, in_c_, in_d_, rel_min_, record_rows=True):
        """Apply jumps at an exactly-sampled state until it is no longer
        jumpable; returns the final (z, flags). Rows for post-jump states are
        appended when record_rows (the pre state is assumed already recorded)."""
        nonlocal sig0, soc_hat
        while jumpable(in_c_, in_d_, rel_min_):
            sig0, soc_hat = do_jump(t, urc, soc, ubar, soc_hat, sig0, z_,
                                    forced=not in_d_)
            z_, in_c_, in_d_, rel_min_ = flags_at(urc, soc, ubar, soc_hat, sig0, u_)
            if record_rows:
                builder.add_row(t, j, sig0 + 1, u_, urc, soc, ubar, soc_hat,
                                z_, in_c_, in_d_)
        return z_, in_c_, in_d_, rel_min_

    # --- initial sample (and possible jumps at t = 0) ---
    u0 = profile.value_at(0.0)
    z0, ic0, id0, rm0 = flags_at(urc, soc, ubar, soc_hat, sig0, u0)
    if not (ic0 or id0):
        if not auto_init:
            worst = float(np.min(params.sign * z0 - params.sign * curve.eval(soc_hat)))
            raise InfeasibleInitError(
                "q(0,0) lies outside C u D (worst window position "
                f"{worst:.6g} V vs -epsilon={-eps:g}); enable auto_init or "
                "re-initialize soc_hat/sigma from the measured voltages")
        w = params.sign * z0
        best = int(np.flatnonzero(w == w.min())[0])
        sig0 = best
        soc_hat = curve.inverse(float(z0[best]))
        z0, ic0, id0, rm0 = flags_at(urc, soc, ubar, soc_hat, sig0, u0)
    builder.add_row(0.0, j, sig0 + 1, u0, urc, soc, ubar, soc_hat, z0, ic0, id0)
    chain_jumps_at_sample(0.0, u0, z0, ic0, id0, rm0)

    # --- refinement helper used when a grid step triggers ---
    def resolve_trigger(lo_state, t_lo, t_hi, grid_urc_hi, grid_soc_hi, u_):
        """Localize/apply jumps in (t_lo, t_hi]; returns the merged state at
        t_hi as (urc, soc, ubar, soc_hat, z, in_c, in_d, chunk_rows)."""
        nonlocal sig0, soc_hat, ubar
        chunk = _TraceBuilder(n)
        lo_urc, lo_soc, lo_ubar, lo_sh = lo_state
        guard = 0
        while True:
            guard += 1
            if guard > 4 * n + 8:
                raise ZenoError(f"jump resolution did not settle within a step at t~{t_hi:g}")
            diag["n_refinements"] += 1
            dt_full = t_hi - t_lo
            th_lo, th_hi = 0.0, 1.0
            st_lo = (lo_urc, lo_soc, lo_ubar, lo_sh)
            st_hi = None
            for _ in range(_BISECT_ITERS):
                mid = 0.5 * (th_lo + th_hi)
                st = kern.rk4_step(lo_urc, lo_soc, lo_ubar, lo_sh, sig0,
                                   u_, mid * dt_full, *kargs)
                _, _, _, rm = flags_at(st[0], st[1], st[2], st[3], sig0, u_)
                if rm <= -trig_level:
                    th_hi, st_hi = mid, st
                else:
                    th_lo, st_lo = mid, st
            if st_hi is None:
                st_hi = kern.rk4_step(lo_urc, lo_soc, lo_ubar, lo_sh, sig0,
                                      u_, dt_full, *kargs)
                th_hi = 1.0
            if params.jump_priority:
                theta, st = th_hi, st_hi
            else:
                # jump from just inside C (the state is still in D there)
                theta, st = th_lo, st_lo
            if theta == 0.0:
                t_star = t_lo
            elif theta == 1.0:
                t_star = t_hi
            else:
                t_star = t_lo + theta * dt_full
            s_urc, s_soc = np.asarray(st[0]), np.asarray(st[1])
            s_ubar, s_sh = float(st[2]), float(st[3])
            z_s, ic_s, id_s, rm_s = flags_at(s_urc, s_soc, s_ubar, s_sh, sig0, u_)
            if t_star != t_lo:
                chunk.add_row(t_star, j, sig0 + 1, u_, s_urc, s_soc,
                              s_ubar, s_sh, z_s, ic_s, id_s)
            # first jump (unconditional: this is the localized crossing),
            # then chain until no longer jumpable
            while True:
                new_sig0, new_sh = do_jump(t_star, s_urc, s_soc, s_ubar, s_sh,
                                           sig0, z_s, forced=not id_s)
                sig0, s_sh = new_sig0, new_sh
                z_s, ic_s, id_s, rm_s = flags_at(s_urc, s_soc, s_ubar, s_sh, sig0, u_)
                if not jumpable(ic_s, id_s, rm_s):
                    break
                chunk.add_row(t_star, j, sig0 + 1, u_, s_urc, s_soc,
                              s_ubar, s_sh, z_s, ic_s, id_s)
            soc_hat = s_sh
            # flow the estimator over the remainder; keep the grid plant
            if t_star == t_hi:
                m_urc, m_soc = grid_urc_hi, grid_soc_hi
                m_ubar, m_sh = s_ubar, s_sh
            else:
                chunk.add_row(t_star, j, sig0 + 1, u_, s_urc, s_soc,
                              s_ubar, s_sh, z_s, ic_s, id_s)
                stm = kern.rk4_step(s_urc, s_soc, s_ubar, s_sh, sig0,
                                    u_, t_hi - t_star, *kargs)
                m_urc, m_soc = grid_urc_hi, grid_soc_hi
                m_ubar, m_sh = float(stm[2]), float(stm[3])
            if not (math.isfinite(m_ubar) and math.isfinite(m_sh)):
                raise IntegrationError(f"integrator blow-up near t={t_hi:g}")
            z_m, ic_m, id_m, rm_m = flags_at(m_urc, m_soc, m_ubar, m_sh, sig0, u_)
            if rm_m <= -trig_level or jumpable(ic_m, id_m, rm_m):
                # entered the window again within the remainder: refine there
                lo_urc, lo_soc = s_urc, s_soc
                lo_ubar, lo_sh = s_ubar, s_sh
                t_lo = t_star
                continue
            ubar = m_ubar
            soc_hat = m_sh
            return m_urc, m_soc, z_m, ic_m, id_m, chunk

    # --- main loop over constant-current segments ---
    for ts, te, u in profile.segments(t_end):
        m_real = (te - ts) / h
        n_steps = int(round(m_real))
        if n_steps < 1 or abs(m_real - n_steps) > 1e-9 * max(1.0, n_steps):
            raise ValueError(
                f"step h={h!r} does not divide the segment [{ts!r}, {te!r}] "
                "(profile breakpoints must be multiples of h)")
        # input switches move z by rounding only, but re-check membership
        z0, ic0, id0, rm0 = flags_at(urc, soc, ubar, soc_hat, sig0, u)
        chain_jumps_at_sample(ts, u, z0, ic0, id0, rm0)

        t_grid = ts + h * np.arange(1, n_steps + 1)
        t_grid[-1] = te
        seg = {
            "t": t_grid,
            "j": np.empty(n_steps, dtype=np.int64),
            "sigma": np.empty(n_steps, dtype=np.int64),
            "u": np.full(n_steps, u),
            "u_rc": np.empty((n_steps, n)),
            "soc": np.empty((n_steps, n)),
            "u_bar": np.empty(n_steps),
            "soc_hat": np.empty(n_steps),
            "z": np.empty((n_steps, n)),
            "in_c": np.empty(n_steps, dtype=bool),
            "in_d": np.empty(n_steps, dtype=bool),
        }
        inserts = []
        k = 0
        while k < n_steps:
            k_done, status = kern.flow_segment(
                urc, soc, ubar, soc_hat, sig0, u, h, n_steps - k,
                *kargs, params.sign, eps, params.mu * eps, trig_level,
                seg["u_rc"], seg["soc"], seg["u_bar"], seg["soc_hat"],
                seg["z"], seg["in_c"], seg["in_d"], k)
            r = k + k_done - 1
            seg["j"][k:k + k_done] = j
            seg["sigma"][k:k + k_done] = sig0 + 1
            if status == kern.SEG_NONFINITE:
                raise IntegrationError(
                    f"integrator blow-up near t={float(seg['t'][r]):g}")
            if status == kern.SEG_DONE:
                urc = seg["u_rc"][n_steps - 1].copy()
                soc = seg["soc"][n_steps - 1].copy()
                ubar = float(seg["u_bar"][n_steps - 1])
                soc_hat = float(seg["soc_hat"][n_steps - 1])
                k = n_steps
                continue
            # SEG_TRIGGER at row r
            if r == k:
                lo_state = (urc, soc, ubar, soc_hat)
            else:
                lo_state = (seg["u_rc"][r - 1].copy(), seg["soc"][r - 1].copy(),
                            float(seg["u_bar"][r - 1]), float(seg["soc_hat"][r - 1]))
            t_hi = float(seg["t"][r])
            t_lo = ts + h * r if r > 0 else ts
            m_urc, m_soc, z_m, ic_m, id_m, chunk = resolve_trigger(
                lo_state, t_lo, t_hi, seg["u_rc"][r].copy(), seg["soc"][r].copy(), u)
            if chunk.chunks:
                inserts.append((r, chunk.concat()))
            urc, soc = m_urc.copy(), m_soc.copy()
            seg["u_rc"][r] = urc
            seg["soc"][r] = soc
            seg["u_bar"][r] = ubar
            seg["soc_hat"][r] = soc_hat
            seg["z"][r] = z_m
            seg["in_c"][r] = ic_m
            seg["in_d"][r] = id_m
            seg["j"][r] = j
            seg["sigma"][r] = sig0 + 1
            k = r + 1
        # interleave kernel rows with jump chunks
        prev = 0
        for r, ch in inserts:
            if r > prev:
                builder.add_arrays(**{f: seg[f][prev:r] for f in _SAMPLE_FIELDS})
            builder.add_arrays(**ch)
            prev = r
        builder.add_arrays(**{f: seg[f][prev:n_steps] for f in _SAMPLE_FIELDS})

    data = builder.concat()
    jt = JumpTable()
    if jump_rows:
        jt = JumpTable(
            t=np.array([r["t"] for r in jump_rows]),
            j=np.array([r["j"] for r in jump_rows], dtype=np.int64),
            sigma_before=np.array([r["sigma_before"] for r in jump_rows], dtype=np.int64),
            sigma_after=np.array([r["sigma_after"] for r in jump_rows], dtype=np.int64),
            soc_hat_before=np.array([r["soc_hat_before"] for r in jump_rows]),
            soc_hat_after=np.array([r["soc_hat_after"] for r in jump_rows]),
            soc_sigma_before=np.array([r["soc_sigma_before"] for r in jump_rows]),
            soc_sigma_after=np.array([r["soc_sigma_after"] for r in jump_rows]),
            v1=np.array([r["v1"] for r in jump_rows]),
            forced=np.array([r["forced"] for r in jump_rows], dtype=bool),
        )
    meta = {
        "seed": int(seed),
        "h": float(h),
        "t_end": float(t_end),
        "n_cells": int(n),
        "mode": params.mode,
        "jump_priority": bool(params.jump_priority),
        "ell": params.ell,
        "tau_d_s": params.tau_d_s,
        "epsilon_v": params.epsilon_v,
        "mu": params.mu,
        "backend": backend.active_backend(),
        "max_jumps_per_second": float(max_jumps_per_second),
        "n_jumps": int(jt.n_jumps),
        "diagnostics": dict(diag),
    }
    trace = HybridTrace(jumps=jt, meta=meta, **data)
    trace.validate()
    return trace
