"""Scenario construction: dispersed packs around nominal cell constants and
synthetic PHEV-like pulse-train current profiles, all reproducible from seeds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .estimator import EstimatorParams, EstimatorState, HybridState, select_tau_d
from .ocv import OCVCurve, default_ocv_curve
from .pack import CellParams, ConfigError, PackConfig, PlantState
from .sim import CurrentProfile, HybridTrace, run

__all__ = ["PackSpec", "generate_pack", "pulse_train_profile", "Scenario",
           "benchmark_scenario", "NOMINAL_CELL"]

# nominal cell constants: tau_d 12 s, R_d 0.5 mOhm, R_int 0.5 mOhm, Q 6 Ah
NOMINAL_CELL = CellParams.make(tau_d_s=12.0, r_d_ohm=5e-4, r_int_ohm=5e-4, q_ah=6.0)

_RESAMPLE_CAP = 1000


@dataclass(frozen=True)
class PackSpec:
    """Generated-pack description: per-cell parameters are drawn as
    nominal*(1 + dispersion*N(0,1)), resampled until strictly positive;
    initial SOC is uniform in soc0_center +/- soc0_spread."""

    n_cells: int = 200
    dispersion: float = 0.10
    soc0_center: float = 0.5
    soc0_spread: float = 0.02
    seed: int = 0
    nominal: CellParams = NOMINAL_CELL
    ocv: OCVCurve = field(default_factory=default_ocv_curve)

    def __post_init__(self):
        if self.n_cells < 1:
            raise ConfigError("n_cells must be >= 1")
        if not 0.0 <= self.dispersion < 1.0:
            raise ConfigError("dispersion_fraction must lie in [0, 1)")
        lo = self.soc0_center - self.soc0_spread
        hi = self.soc0_center + self.soc0_spread
        if not (0.0 <= lo and hi <= 1.0):
            raise ConfigError("soc0_center +/- soc0_spread must stay within [0, 1]")


def _draw_positive(rng, nominal: float, dispersion: float) -> float:
    if dispersion == 0.0:
        return nominal
    for _ in range(_RESAMPLE_CAP):
        v = nominal * (1.0 + dispersion * rng.standard_normal())
        if v > 0.0:
            return float(v)
    raise ConfigError(
        f"could not draw a positive parameter around {nominal!r} "
        f"(dispersion {dispersion!r}) after {_RESAMPLE_CAP} resamples")


def generate_pack(spec: PackSpec) -> tuple[PackConfig, PlantState]:
    """Seed-reproducible dispersed pack plus its initial plant state."""
    rng = np.random.default_rng(spec.seed)
    nom = spec.nominal
    cells = []
    for _ in range(spec.n_cells):
        cells.append(CellParams.make(
            tau_d_s=_draw_positive(rng, nom.tau_d_s, spec.dispersion),
            r_d_ohm=_draw_positive(rng, nom.r_d_ohm, spec.dispersion),
            r_int_ohm=_draw_positive(rng, nom.r_int_ohm, spec.dispersion),
            q_ah=_draw_positive(rng, nom.q_ah, spec.dispersion)))
    soc0 = rng.uniform(spec.soc0_center - spec.soc0_spread,
                       spec.soc0_center + spec.soc0_spread, spec.n_cells)
    cfg = PackConfig(cells=tuple(cells), ocv=spec.ocv)
    x0 = PlantState.initial(np.zeros(spec.n_cells), soc0)
    return cfg, x0


def pulse_train_profile(t_end: float, seed: int = 0,
                        amplitudes_a=(0.0, 8.0, 20.0, 36.0, 60.0, -12.0, -30.0),
                        min_pulse_s: int = 2, max_pulse_s: int = 20) -> CurrentProfile:
    """Synthetic PHEV-like load: random-amplitude pulses of whole-second
    length (so any h dividing 1 s never straddles a discontinuity)."""
    if min_pulse_s < 1 or max_pulse_s < min_pulse_s:
        raise ValueError("pulse lengths must satisfy 1 <= min <= max")
    rng = np.random.default_rng(seed)
    amplitudes_a = np.asarray(amplitudes_a, dtype=float)
    times = [0.0]
    values = [float(rng.choice(amplitudes_a))]
    t = 0.0
    while t < t_end:
        t += float(rng.integers(min_pulse_s, max_pulse_s + 1))
        if t >= t_end:
            break
        nxt = float(rng.choice(amplitudes_a))
        if nxt == values[-1]:
            continue
        times.append(t)
        values.append(nxt)
    return CurrentProfile(np.array(times), np.array(values))


@dataclass
class Scenario:
    """A runnable bundle: pack, initial states, estimator, input, grid."""

    cfg: PackConfig
    x0: PlantState
    params: EstimatorParams
    profile: CurrentProfile
    t_end: float
    h: float
    seed: int
    sigma0: int
    soc_hat0: float
    u_bar0: float = 0.0
    auto_init: bool = False

    def initial_state(self) -> HybridState:
        return HybridState(plant=self.x0,
                           est=EstimatorState(u_bar_rc=self.u_bar0,
                                              soc_hat=self.soc_hat0,
                                              sigma=self.sigma0))

    def run(self, **kwargs) -> HybridTrace:
        return run(self.cfg, self.params, self.initial_state(), self.profile,
                   self.t_end, self.h, seed=self.seed,
                   auto_init=self.auto_init, **kwargs)


def benchmark_scenario(seed: int = 0, n_cells: int = 200, t_end: float = 600.0,
                   h: float = 0.01, ell: float = 2.0, tau_d="12",
                   epsilon_v: float = 1e-3, mu: float = 0.95, mode: str = "min",
                   jump_priority: bool = True, dispersion: float = 0.10,
                   soc0_spread: float = 0.02) -> Scenario:
    """The benchmark setup: N cells at 10% dispersion around the nominal
    constants, ell=2, tau_d=12 s, eps=1e-3, mu=0.95, sigma(0,0) at 3N/4 and
    SOC_hat(0,0) at the far end of the SOC range."""
    spec = PackSpec(n_cells=n_cells, dispersion=dispersion,
                    soc0_spread=soc0_spread, seed=seed)
    cfg, x0 = generate_pack(spec)
    params = EstimatorParams(ell=ell, tau_d_s=select_tau_d(cfg, tau_d),
                             epsilon_v=epsilon_v, mu=mu, mode=mode,
                             jump_priority=jump_priority)
    sigma0 = max(1, int(round(0.75 * n_cells)))
    soc_hat0 = 0.0 if mode == "min" else 1.0
    profile = pulse_train_profile(t_end, seed=seed + 1)
    return Scenario(cfg=cfg, x0=x0, params=params, profile=profile,
                    t_end=t_end, h=h, seed=seed, sigma0=sigma0,
                    soc_hat0=soc_hat0)
