"""Ground-truth plant: per-cell first-order ECM, series pack, true SOC extremes.

Each cell is one R-C diffusion branch (R_d, C_d), a series resistance R_int
and an OCV source shared by all cells. Positive pack current discharges.
All types are immutable after construction; the evaluation functions are pure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from types import SimpleNamespace

import numpy as np

from .ocv import OCVCurve, default_ocv_curve

__all__ = ["CellParams", "PackConfig", "PlantState", "ConfigError",
           "plant_flow", "cell_voltage", "pack_voltage", "true_extreme_soc",
           "load_pack_json", "save_pack_json", "pack_arrays"]

SECONDS_PER_HOUR = 3600.0
_TAU_CONSISTENCY_RTOL = 1e-12


class ConfigError(ValueError):
    """Invalid cell/pack configuration."""


@dataclass(frozen=True)
class CellParams:
    """Constant, known ECM parameters of one cell."""

    tau_d_s: float    # diffusion time constant tau_d = R_d * C_d (s)
    r_d_ohm: float    # diffusion resistance (ohm)
    c_d_f: float      # diffusion capacitance (F)
    r_int_ohm: float  # ohmic series resistance (ohm)
    q_ah: float       # nominal capacity (Ah)

    def __post_init__(self):
        for name in ("tau_d_s", "r_d_ohm", "c_d_f", "r_int_ohm", "q_ah"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0.0):
                raise ConfigError(f"{name} must be strictly positive, got {v!r}")
        if abs(self.tau_d_s - self.r_d_ohm * self.c_d_f) > _TAU_CONSISTENCY_RTOL * self.tau_d_s:
            raise ConfigError(
                f"inconsistent diffusion branch: tau_d={self.tau_d_s!r} != "
                f"r_d*c_d={self.r_d_ohm * self.c_d_f!r}"
            )

    @classmethod
    def make(cls, *, r_int_ohm: float, q_ah: float, tau_d_s: float | None = None,
             r_d_ohm: float | None = None, c_d_f: float | None = None) -> "CellParams":
        """Build from any two of (tau_d, r_d, c_d); the third is derived.

        Supplying all three triggers the consistency check in __post_init__.
        """
        given = sum(v is not None for v in (tau_d_s, r_d_ohm, c_d_f))
        if given < 2:
            raise ConfigError("need at least two of tau_d_s, r_d_ohm, c_d_f")
        if tau_d_s is None:
            tau_d_s = r_d_ohm * c_d_f
        elif c_d_f is None:
            c_d_f = tau_d_s / r_d_ohm
        elif r_d_ohm is None:
            r_d_ohm = tau_d_s / c_d_f
        return cls(tau_d_s=tau_d_s, r_d_ohm=r_d_ohm, c_d_f=c_d_f,
                   r_int_ohm=r_int_ohm, q_ah=q_ah)


@dataclass(frozen=True)
class PackConfig:
    """N cells in series sharing one OCV curve."""

    cells: tuple[CellParams, ...]
    ocv: OCVCurve

    def __post_init__(self):
        if len(self.cells) < 1:
            raise ConfigError("pack needs at least one cell")
        object.__setattr__(self, "cells", tuple(self.cells))

    @property
    def n_cells(self) -> int:
        return len(self.cells)


@lru_cache(maxsize=128)
def pack_arrays(cfg: PackConfig) -> SimpleNamespace:
    """Read-only per-cell parameter vectors for vectorized/compiled paths."""
    def vec(attr):
        a = np.array([getattr(c, attr) for c in cfg.cells])
        a.setflags(write=False)
        return a

    tau_d = vec("tau_d_s")
    c_d = vec("c_d_f")
    q_ah = vec("q_ah")
    out = SimpleNamespace(
        tau_d=tau_d,
        r_d=vec("r_d_ohm"),
        c_d=c_d,
        r_int=vec("r_int_ohm"),
        q_ah=q_ah,
        inv_tau_d=1.0 / tau_d,
        inv_c_d=1.0 / c_d,
        inv_q3600=1.0 / (SECONDS_PER_HOUR * q_ah),
    )
    for a in (out.inv_tau_d, out.inv_c_d, out.inv_q3600):
        a.setflags(write=False)
    return out


@dataclass(frozen=True)
class PlantState:
    """Pack state x = (U_RC, SOC) as two length-N vectors."""

    u_rc: np.ndarray  # R-C branch voltages (V)
    soc: np.ndarray   # unit fractions; flow may drift slightly outside [0,1]

    def __post_init__(self):
        u_rc = np.array(self.u_rc, dtype=float)
        soc = np.array(self.soc, dtype=float)
        if u_rc.shape != soc.shape or u_rc.ndim != 1:
            raise ConfigError("u_rc and soc must be 1-D vectors of equal length")
        if not (np.all(np.isfinite(u_rc)) and np.all(np.isfinite(soc))):
            raise ConfigError("plant state must be finite")
        u_rc.setflags(write=False)
        soc.setflags(write=False)
        object.__setattr__(self, "u_rc", u_rc)
        object.__setattr__(self, "soc", soc)

    @classmethod
    def initial(cls, u_rc, soc) -> "PlantState":
        """Constructor for t=0 states: additionally requires SOC in [0, 1]."""
        st = cls(u_rc, soc)
        if np.any(st.soc < 0.0) or np.any(st.soc > 1.0):
            raise ConfigError("initial SOC entries must lie in [0, 1]")
        return st

    @property
    def n_cells(self) -> int:
        return self.u_rc.size


def plant_flow(cfg: PackConfig, x: PlantState, u: float):
    """Time derivative (dU_RC, dSOC) of the series pack under pack current u.

    Every cell carries the pack current. Positive u discharges:
    dU_RC_i = -U_RC_i/tau_d_i + u/C_d_i,  dSOC_i = -u/(3600*Q_i).
    """
    p = pack_arrays(cfg)
    du_rc = -x.u_rc * p.inv_tau_d + u * p.inv_c_d
    dsoc = -(u * p.inv_q3600)
    return du_rc, dsoc


def cell_voltage(cfg: PackConfig, x: PlantState, u: float, i: int) -> float:
    """Terminal voltage V_i = -U_RC_i - R_int_i*u + V_OCV(SOC_i); i is 1-based."""
    if not 1 <= i <= cfg.n_cells:
        raise IndexError(f"cell index {i} out of range 1..{cfg.n_cells}")
    k = i - 1
    cell = cfg.cells[k]
    return float(-x.u_rc[k] - cell.r_int_ohm * u + cfg.ocv.eval(x.soc[k]))


def pack_voltage(cfg: PackConfig, x: PlantState, u: float) -> float:
    """Series law: V_pack = sum of all cell voltages."""
    p = pack_arrays(cfg)
    v = -x.u_rc - p.r_int * u + cfg.ocv.eval(x.soc)
    return float(np.sum(v))


def true_extreme_soc(x: PlantState, mode: str = "min"):
    """(extreme value, tuple of attaining 1-based indices). Ties keep all."""
    if mode == "min":
        value = float(np.min(x.soc))
    elif mode == "max":
        value = float(np.max(x.soc))
    else:
        raise ValueError(f"mode must be 'min' or 'max', got {mode!r}")
    idx = np.flatnonzero(x.soc == value) + 1
    return value, tuple(int(i) for i in idx)


def load_pack_json(path) -> tuple[PackConfig, PlantState]:
    """Read a pack configuration file.

    Schema: {"cells": [{"tau_d_s", "r_d_ohm", "r_int_ohm", "q_ah",
    "soc0", "u_rc0_v"}, ...], "ocv": {"knots": [[soc, volts], ...]}}.
    C_d is derived from tau_d and R_d. "ocv" may be omitted to use the
    default curve.
    """
    with open(path) as f:
        doc = json.load(f)
    try:
        cell_docs = doc["cells"]
        cells = tuple(
            CellParams.make(tau_d_s=c["tau_d_s"], r_d_ohm=c["r_d_ohm"],
                            r_int_ohm=c["r_int_ohm"], q_ah=c["q_ah"])
            for c in cell_docs
        )
        soc0 = [c["soc0"] for c in cell_docs]
        u_rc0 = [c.get("u_rc0_v", 0.0) for c in cell_docs]
    except KeyError as e:
        raise ConfigError(f"pack config missing field {e}") from None
    if "ocv" in doc:
        curve = OCVCurve(tuple((k[0], k[1]) for k in doc["ocv"]["knots"]))
    else:
        curve = default_ocv_curve()
    cfg = PackConfig(cells=cells, ocv=curve)
    x0 = PlantState.initial(u_rc0, soc0)
    return cfg, x0


def save_pack_json(path, cfg: PackConfig, x0: PlantState) -> None:
    doc = {
        "cells": [
            {
                "tau_d_s": c.tau_d_s,
                "r_d_ohm": c.r_d_ohm,
                "r_int_ohm": c.r_int_ohm,
                "q_ah": c.q_ah,
                "soc0": float(x0.soc[i]),
                "u_rc0_v": float(x0.u_rc[i]),
            }
            for i, c in enumerate(cfg.cells)
        ],
        "ocv": {"knots": [[s, v] for s, v in cfg.ocv.knots]},
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")
