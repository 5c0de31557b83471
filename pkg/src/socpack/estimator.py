"""Two-state hybrid estimator of the pack's extreme (min or max) SOC.

One observer runs for the cell selected by the logic variable sigma. The
intermediate variable U_bar generates R-C voltage estimates for *every* cell
(U_hat_i = U_bar / C_d_i), which feed the per-cell OCV estimates z_i used by
the switching logic. sigma is constant along flows and only changes at jumps.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .pack import PackConfig, PlantState, ConfigError, pack_arrays

__all__ = ["EstimatorParams", "EstimatorState", "HybridState",
           "select_tau_d", "compute_z", "estimator_flow",
           "in_flow_set", "in_jump_set", "jump_map"]


@dataclass(frozen=True)
class EstimatorParams:
    """Design parameters. Per-cell constants (R_int_i, C_d_i, Q_i and
    D_i = -R_int_i) are assumed known and are read from the pack config.

    jump_priority=True jumps as soon as the jump set is entered; False flows
    through the jump set and only jumps at the flow-set boundary.
    """

    ell: float                 # output-injection gain (1/(V*s)), > 0
    tau_d_s: float             # shared diffusion constant of the observer (s)
    epsilon_v: float = 1e-3    # switching regularization (V), > 0
    mu: float = 0.95           # jump-window width factor, in (0, 1]
    mode: str = "min"          # which SOC extreme is estimated
    jump_priority: bool = True

    def __post_init__(self):
        if not (np.isfinite(self.ell) and self.ell > 0.0):
            raise ConfigError(f"ell must be > 0, got {self.ell!r}")
        if not (np.isfinite(self.tau_d_s) and self.tau_d_s > 0.0):
            raise ConfigError(f"tau_d_s must be > 0, got {self.tau_d_s!r}")
        if not (np.isfinite(self.epsilon_v) and self.epsilon_v > 0.0):
            raise ConfigError(f"epsilon_v must be > 0, got {self.epsilon_v!r}")
        if not (np.isfinite(self.mu) and 0.0 < self.mu <= 1.0):
            raise ConfigError(f"mu must be in (0, 1], got {self.mu!r}")
        if self.mode not in ("min", "max"):
            raise ConfigError(f"mode must be 'min' or 'max', got {self.mode!r}")

    @property
    def sign(self) -> float:
        """+1 for min mode, -1 for max mode (the two are argmin-duals)."""
        return 1.0 if self.mode == "min" else -1.0


@dataclass(frozen=True)
class EstimatorState:
    """(U_bar, SOC_hat, sigma); sigma is the 1-based selected-cell index."""

    u_bar_rc: float  # intermediate R-C variable; U_hat_i = u_bar_rc / C_d_i (A*s)
    soc_hat: float   # estimate of SOC_sigma / of the extreme SOC (unit fraction)
    sigma: int

    def __post_init__(self):
        if not (np.isfinite(self.u_bar_rc) and np.isfinite(self.soc_hat)):
            raise ConfigError("estimator state must be finite")
        if self.sigma < 1:
            raise ConfigError(f"sigma must be a 1-based index, got {self.sigma}")


@dataclass(frozen=True)
class HybridState:
    """Full state q = (plant, estimator) of the closed loop."""

    plant: PlantState
    est: EstimatorState

    def __post_init__(self):
        if self.est.sigma > self.plant.n_cells:
            raise ConfigError(
                f"sigma={self.est.sigma} exceeds pack size {self.plant.n_cells}")


def select_tau_d(cfg: PackConfig, strategy="mean") -> float:
    """Observer tau_d from the cell constants.

    "mean": arithmetic mean of tau_d_i. "minimax": the a > 0 minimizing
    max_i |1/a - 1/tau_d_i| (midpoint of the reciprocals). A number (or
    numeric string) is taken as an explicit value.
    """
    tau = pack_arrays(cfg).tau_d
    if isinstance(strategy, str):
        s = strategy.strip().lower()
        if s == "mean":
            return float(np.mean(tau))
        if s == "minimax":
            inv = 1.0 / tau
            return float(2.0 / (inv.min() + inv.max()))
        try:
            value = float(s)
        except ValueError:
            raise ConfigError(f"unknown tau_d strategy {strategy!r}") from None
    else:
        value = float(strategy)
    if not (np.isfinite(value) and value > 0.0):
        raise ConfigError(f"explicit tau_d must be > 0, got {value!r}")
    return value


def compute_z(cfg: PackConfig, params: EstimatorParams, est: EstimatorState,
              v: np.ndarray, u: float) -> np.ndarray:
    """Per-cell OCV estimates z_i = V_i + U_hat_i + R_int_i * u."""
    p = pack_arrays(cfg)
    v = np.asarray(v, dtype=float)
    if v.shape != (cfg.n_cells,):
        raise ValueError(f"expected {cfg.n_cells} cell voltages, got shape {v.shape}")
    return v + est.u_bar_rc * p.inv_c_d + p.r_int * u


def estimator_flow(cfg: PackConfig, params: EstimatorParams, est: EstimatorState,
                   y_sigma: float, u: float):
    """Flow derivative (dU_bar, dSOC_hat); sigma does not flow.

    dU_bar = -U_bar/tau_d + u
    dSOC_hat = -u/(3600*Q_sigma) + ell*(y_sigma - y_hat) with
    y_hat = -U_hat_sigma + D_sigma*u + V_OCV(SOC_hat), D_sigma = -R_int_sigma.
    """
    cell = cfg.cells[est.sigma - 1]
    d_u_bar = -est.u_bar_rc / params.tau_d_s + u
    u_hat_sigma = est.u_bar_rc / cell.c_d_f
    d_sigma = -cell.r_int_ohm
    y_hat = -u_hat_sigma + d_sigma * u + cfg.ocv.eval(est.soc_hat)
    d_soc_hat = -u / (3600.0 * cell.q_ah) + params.ell * (y_sigma - y_hat)
    return d_u_bar, d_soc_hat


def _windows(cfg, params, est, z):
    """Signed relative positions w_i - w_hat of every other cell's OCV estimate.

    In the min/max-unified sign convention (w = sign*z, w_hat = sign*V_OCV):
    flow set requires rel_i >= -eps for all i != sigma; jump set requires
    some rel_i in [-eps, -mu*eps].
    """
    z = np.asarray(z, dtype=float)
    sign = params.sign
    w_hat = sign * cfg.ocv.eval(est.soc_hat)
    rel = sign * z - w_hat
    mask = np.ones(z.size, dtype=bool)
    mask[est.sigma - 1] = False
    return rel[mask]


def in_flow_set(cfg: PackConfig, params: EstimatorParams, est: EstimatorState,
                z: np.ndarray) -> bool:
    """q in C: no other cell's z_i lies beyond the eps window."""
    rel = _windows(cfg, params, est, z)
    if rel.size == 0:
        return True
    return bool(np.all(rel >= -params.epsilon_v))


def in_jump_set(cfg: PackConfig, params: EstimatorParams, est: EstimatorState,
                z: np.ndarray) -> bool:
    """q in D: some other cell's z_i lies inside [-eps, -mu*eps] of V_OCV(SOC_hat)."""
    rel = _windows(cfg, params, est, z)
    if rel.size == 0:
        return False
    eps = params.epsilon_v
    return bool(np.any((rel >= -eps) & (rel <= -params.mu * eps)))


def jump_map(cfg: PackConfig, params: EstimatorParams, est: EstimatorState,
             z: np.ndarray, rng: np.random.Generator) -> EstimatorState:
    """Switch to the extreme cell among i != sigma and reset SOC_hat.

    sigma+ = arg-extreme of z_i over i != sigma (uniform random tie-break
    from the seeded source); U_bar is unchanged; SOC_hat+ is the OCV inverse
    of the extreme z, so V_OCV(SOC_hat+) reproduces it to 1e-10 V.
    """
    n = cfg.n_cells
    if n < 2:
        raise ConfigError("jump set is unreachable for a single-cell pack")
    z = np.asarray(z, dtype=float)
    w = params.sign * z
    w_masked = w.copy()
    w_masked[est.sigma - 1] = np.inf
    w_best = w_masked.min()
    ties = np.flatnonzero(w_masked == w_best)
    pick = int(ties[0]) if ties.size == 1 else int(ties[rng.integers(ties.size)])
    z_best = params.sign * w_best
    soc_plus = cfg.ocv.inverse(z_best)
    return replace(est, soc_hat=soc_plus, sigma=pick + 1)
