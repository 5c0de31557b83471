import numpy as np
import pytest

from socpack import (CellParams, EstimatorParams, EstimatorState, HybridState,
                     PackConfig, PlantState, default_ocv_curve)


@pytest.fixture(scope="session")
def curve():
    return default_ocv_curve()


def make_pack(taus, r_ds, r_ints, q_ahs, ocv=None):
    cells = tuple(
        CellParams.make(tau_d_s=t, r_d_ohm=rd, r_int_ohm=ri, q_ah=q)
        for t, rd, ri, q in zip(taus, r_ds, r_ints, q_ahs))
    return PackConfig(cells=cells, ocv=ocv or default_ocv_curve())


def dispersed_pack(n, seed, tau_disp=0.1, homogeneous_tau=False):
    """Nominal tau=12 s, R_d=R_int=0.5 mOhm, Q=6 Ah with 10% dispersion."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, 4))
    taus = np.full(n, 12.0) if homogeneous_tau else np.abs(12.0 * (1 + tau_disp * g[:, 0]))
    r_ds = np.abs(5e-4 * (1 + 0.1 * g[:, 1]))
    r_ints = np.abs(5e-4 * (1 + 0.1 * g[:, 2]))
    q_ahs = np.abs(6.0 * (1 + 0.1 * g[:, 3]))
    return make_pack(taus, r_ds, r_ints, q_ahs)


def feasible_state(cfg, soc, sigma=1, soc_hat=0.0, u_bar=0.0, u_rc=None):
    n = cfg.n_cells
    plant = PlantState.initial(np.zeros(n) if u_rc is None else u_rc, soc)
    return HybridState(plant=plant,
                       est=EstimatorState(u_bar_rc=u_bar, soc_hat=soc_hat,
                                          sigma=sigma))


@pytest.fixture
def small_cfg():
    return dispersed_pack(3, seed=11)


@pytest.fixture
def bench_params():
    """The benchmark estimator settings: ell=2, tau_d=12 s, eps=1e-3, mu=0.95."""
    return EstimatorParams(ell=2.0, tau_d_s=12.0, epsilon_v=1e-3, mu=0.95)
