"""socpack: hybrid estimation of the extreme (min/max) state of charge of a
series-connected battery pack, with numerical verification of the estimator's
stability bounds and Zeno-freedom diagnostics."""

from .analysis import (BoundConstants, BoundReport, CheckResult, DwellStats,
                       OracleBank, TraceSeries, check_lyapunov_inequalities,
                       check_prop1, check_prop2, check_structure, check_thm1,
                       compute_constants, dwell_time_stats, lyapunov_v1,
                       lyapunov_v2, observer_bank_oracle, reduce_trace,
                       verify_series, verify_trace)
from .backend import active_backend, set_backend
from .estimator import (EstimatorParams, EstimatorState, HybridState,
                        compute_z, estimator_flow, in_flow_set, in_jump_set,
                        jump_map, select_tau_d)
from .ocv import (DEFAULT_OCV_KNOTS, OCVCurve, OCVCurveError,
                  default_ocv_curve, ocv_eval, ocv_inverse)
from .pack import (CellParams, ConfigError, PackConfig, PlantState,
                   cell_voltage, load_pack_json, pack_voltage, plant_flow,
                   save_pack_json, true_extreme_soc)
from .scenario import (PackSpec, Scenario, generate_pack, benchmark_scenario,
                       pulse_train_profile)
from .sim import (CurrentProfile, HybridTrace, InfeasibleInitError,
                  IntegrationError, SimulationError, ZenoError, event_refine,
                  flow_step, run)

__version__ = "0.1.0"
