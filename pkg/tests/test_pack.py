"""Plant model: cell parameters, flow derivative, voltages, SOC extremes,
config JSON round trip."""

import json

import numpy as np
import pytest

from socpack import (CellParams, ConfigError, PackConfig, PlantState,
                     cell_voltage, load_pack_json, pack_voltage, plant_flow,
                     save_pack_json, true_extreme_soc)
from conftest import make_pack


class TestCellParams:
    def test_derives_c_d(self):
        c = CellParams.make(tau_d_s=12.0, r_d_ohm=5e-4, r_int_ohm=5e-4, q_ah=6.0)
        assert c.c_d_f == pytest.approx(24000.0, rel=1e-12)

    def test_derives_tau(self):
        c = CellParams.make(r_d_ohm=5e-4, c_d_f=24000.0, r_int_ohm=5e-4, q_ah=6.0)
        assert c.tau_d_s == pytest.approx(12.0, rel=1e-12)

    def test_derives_r_d(self):
        c = CellParams.make(tau_d_s=12.0, c_d_f=24000.0, r_int_ohm=5e-4, q_ah=6.0)
        assert c.r_d_ohm == pytest.approx(5e-4, rel=1e-12)

    def test_all_three_consistent_ok(self):
        CellParams(tau_d_s=12.0, r_d_ohm=5e-4, c_d_f=12.0 / 5e-4,
                   r_int_ohm=5e-4, q_ah=6.0)

    def test_all_three_inconsistent_rejected(self):
        with pytest.raises(ConfigError, match="inconsistent"):
            CellParams(tau_d_s=12.0, r_d_ohm=5e-4, c_d_f=25000.0,
                       r_int_ohm=5e-4, q_ah=6.0)

    def test_positivity_enforced(self):
        with pytest.raises(ConfigError):
            CellParams.make(tau_d_s=-12.0, r_d_ohm=5e-4, r_int_ohm=5e-4, q_ah=6.0)
        with pytest.raises(ConfigError):
            CellParams.make(tau_d_s=12.0, r_d_ohm=5e-4, r_int_ohm=5e-4, q_ah=0.0)

    def test_underdetermined_rejected(self):
        with pytest.raises(ConfigError):
            CellParams.make(tau_d_s=12.0, r_int_ohm=5e-4, q_ah=6.0)


class TestPlantFlow:
    def test_rest_equilibrium(self):
        cfg = make_pack([12.0] * 3, [5e-4] * 3, [5e-4] * 3, [6.0] * 3)
        x = PlantState(np.zeros(3), np.full(3, 0.5))
        du, ds = plant_flow(cfg, x, 0.0)
        assert np.all(du == 0.0) and np.all(ds == 0.0)

    def test_full_discharge_rate(self):
        # Q = 6 Ah at 6 A: exactly one hour to empty
        cfg = make_pack([12.0], [5e-4], [5e-4], [6.0])
        x = PlantState(np.zeros(1), np.array([0.9]))
        _, ds = plant_flow(cfg, x, 6.0)
        assert ds[0] == pytest.approx(-1.0 / 3600.0, rel=1e-14)

    def test_u_rc_derivative_hand_arithmetic(self):
        # tau=12 s, R_d=0.5 mOhm => C_d = 24000 F; u_rc=10 mV, u=10 A
        cfg = make_pack([12.0], [5e-4], [5e-4], [6.0])
        x = PlantState(np.array([0.01]), np.array([0.5]))
        du, _ = plant_flow(cfg, x, 10.0)
        expected = -0.01 / 12.0 + 10.0 * 5e-4 / 12.0
        assert du[0] == pytest.approx(expected, rel=1e-12)

    def test_no_state_mutation(self):
        cfg = make_pack([12.0] * 2, [5e-4] * 2, [5e-4] * 2, [6.0] * 2)
        x = PlantState(np.array([0.01, 0.02]), np.array([0.4, 0.6]))
        before = (x.u_rc.copy(), x.soc.copy())
        plant_flow(cfg, x, 25.0)
        assert np.array_equal(x.u_rc, before[0]) and np.array_equal(x.soc, before[1])


class TestCellVoltage:
    def test_open_circuit_rest(self, curve):
        cfg = make_pack([12.0] * 2, [5e-4] * 2, [5e-4] * 2, [6.0] * 2)
        x = PlantState(np.zeros(2), np.array([0.3, 0.7]))
        assert cell_voltage(cfg, x, 0.0, 1) == pytest.approx(curve.eval(0.3))
        assert cell_voltage(cfg, x, 0.0, 2) == pytest.approx(curve.eval(0.7))

    def test_direct_substitution(self, curve):
        # V = 3.70 - 0.02 - 0.005 = 3.675 V at U_RC=20 mV, R_int=0.5 mOhm, 10 A
        soc = curve.inverse(3.70)
        cfg = make_pack([12.0], [5e-4], [5e-4], [6.0])
        x = PlantState(np.array([0.02]), np.array([soc]))
        assert cell_voltage(cfg, x, 10.0, 1) == pytest.approx(3.675, abs=1e-9)

    def test_pack_voltage_is_sum(self):
        rng = np.random.default_rng(3)
        cfg = make_pack(12 * (1 + 0.1 * rng.standard_normal(3)),
                        5e-4 * (1 + 0.1 * rng.standard_normal(3)),
                        5e-4 * (1 + 0.1 * rng.standard_normal(3)),
                        6 * (1 + 0.1 * rng.standard_normal(3)))
        x = PlantState(0.01 * rng.standard_normal(3), rng.uniform(0.2, 0.8, 3))
        u = 14.0
        total = sum(cell_voltage(cfg, x, u, i) for i in (1, 2, 3))
        assert pack_voltage(cfg, x, u) == pytest.approx(total, rel=1e-12)

    def test_index_out_of_range(self):
        cfg = make_pack([12.0], [5e-4], [5e-4], [6.0])
        x = PlantState(np.zeros(1), np.array([0.5]))
        with pytest.raises(IndexError):
            cell_voltage(cfg, x, 0.0, 0)
        with pytest.raises(IndexError):
            cell_voltage(cfg, x, 0.0, 2)

    def test_ocv_relation_identity(self, curve):
        # V_OCV(SOC_i) == V_i + U_RC_i + R_int_i * I for every cell
        rng = np.random.default_rng(9)
        cfg = make_pack([10.0, 12.0, 14.0], [4e-4, 5e-4, 6e-4],
                        [5e-4] * 3, [6.0] * 3)
        x = PlantState(0.02 * rng.standard_normal(3), rng.uniform(0.1, 0.9, 3))
        u = -8.0
        for i in range(1, 4):
            v = cell_voltage(cfg, x, u, i)
            lhs = curve.eval(x.soc[i - 1])
            rhs = v + x.u_rc[i - 1] + cfg.cells[i - 1].r_int_ohm * u
            assert lhs == pytest.approx(rhs, rel=1e-12)


class TestTrueExtreme:
    def test_direct_minimum(self):
        x = PlantState(np.zeros(3), np.array([0.5, 0.4, 0.6]))
        assert true_extreme_soc(x, "min") == (0.4, (2,))

    def test_all_tied(self):
        x = PlantState(np.zeros(4), np.full(4, 0.5))
        value, idx = true_extreme_soc(x, "min")
        assert value == 0.5 and idx == (1, 2, 3, 4)

    def test_max_mirrors_min(self):
        soc = np.array([0.5, 0.4, 0.6])
        x = PlantState(np.zeros(3), soc)
        x_neg = PlantState(np.zeros(3), 1.0 - soc)
        vmax, imax = true_extreme_soc(x, "max")
        vmin, imin = true_extreme_soc(x_neg, "min")
        assert vmax == pytest.approx(1.0 - vmin) and imax == imin

    def test_bad_mode(self):
        x = PlantState(np.zeros(1), np.array([0.5]))
        with pytest.raises(ValueError):
            true_extreme_soc(x, "median")


class TestPlantState:
    def test_initial_soc_range_enforced(self):
        with pytest.raises(ConfigError):
            PlantState.initial(np.zeros(2), np.array([0.5, 1.2]))
        PlantState(np.zeros(2), np.array([0.5, 1.2]))  # drifted states allowed

    def test_finite_required(self):
        with pytest.raises(ConfigError):
            PlantState(np.array([np.nan]), np.array([0.5]))


class TestPackJson:
    def test_round_trip(self, tmp_path):
        cfg = make_pack([10.0, 14.0], [4e-4, 6e-4], [5e-4, 5e-4], [5.5, 6.5])
        x0 = PlantState.initial(np.array([0.0, 0.001]), np.array([0.45, 0.55]))
        path = tmp_path / "pack.json"
        save_pack_json(path, cfg, x0)
        cfg2, x02 = load_pack_json(path)
        assert cfg2 == cfg
        np.testing.assert_array_equal(x02.soc, x0.soc)
        np.testing.assert_array_equal(x02.u_rc, x0.u_rc)

    def test_missing_field_rejected(self, tmp_path):
        doc = {"cells": [{"tau_d_s": 12.0, "r_d_ohm": 5e-4, "q_ah": 6.0,
                          "soc0": 0.5}]}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ConfigError, match="r_int_ohm"):
            load_pack_json(path)

    def test_default_curve_when_ocv_missing(self, tmp_path, curve):
        doc = {"cells": [{"tau_d_s": 12.0, "r_d_ohm": 5e-4, "r_int_ohm": 5e-4,
                          "q_ah": 6.0, "soc0": 0.5, "u_rc0_v": 0.0}]}
        path = tmp_path / "min.json"
        path.write_text(json.dumps(doc))
        cfg, _ = load_pack_json(path)
        assert cfg.ocv == curve
