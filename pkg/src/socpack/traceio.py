"""On-disk trace and report formats (the CLI contract).

A simulation directory holds:
  trace.csv   t_s,j,sigma,soc_hat,soc_min_true,soc_sigma_true,err_abs,u_bar_rc,in_D
  jumps.csv   t_s,j,sigma_before,sigma_after,soc_hat_before,soc_hat_after
  aux.csv     per-sample reduced quantities (|U_RC|, |U_RC-U_hat|, V1 and its
              kink-branch values, in_C, true extreme index) so bounds can be
              re-verified from files alone
  meta.json   seed, step, estimator parameters, bound constants, jump sidecar

All floats are written with 17 significant digits, so a read-back reproduces
the exact doubles and re-verification yields a byte-identical report.
For a max-mode run the soc_min_true column carries the maximum (meta "mode"
says which extreme it is).
"""

from __future__ import annotations

import json
import os
import warnings

import numpy as np

from .analysis import BoundConstants, BoundReport, TraceSeries

__all__ = ["write_trace_dir", "read_series", "write_report", "TRACE_CSV",
           "JUMPS_CSV", "AUX_CSV", "META_JSON", "REPORT_CSV", "REPORT_JSON"]

TRACE_CSV = "trace.csv"
JUMPS_CSV = "jumps.csv"
AUX_CSV = "aux.csv"
META_JSON = "meta.json"
REPORT_CSV = "report.csv"
REPORT_JSON = "report.json"

_TRACE_HEADER = "t_s,j,sigma,soc_hat,soc_min_true,soc_sigma_true,err_abs,u_bar_rc,in_D"
_JUMPS_HEADER = ("t_s,j,sigma_before,sigma_after,soc_hat_before,soc_hat_after")
_AUX_HEADER = ("t_s,j,u_a,urc_norm,urc_err_norm,v1,v1_argmax,v1_hold,v1_pre,"
               "in_C,argext_true")
_REPORT_HEADER = "t_s,j,lhs,rhs,margin,check_name"


def _save_csv(path, header, columns):
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=header, comments="")


def write_trace_dir(outdir, series: TraceSeries) -> dict:
    """Write trace/jumps/aux/meta for one run; returns the file paths."""
    os.makedirs(outdir, exist_ok=True)
    paths = {name: os.path.join(outdir, fname) for name, fname in
             [("trace", TRACE_CSV), ("jumps", JUMPS_CSV),
              ("aux", AUX_CSV), ("meta", META_JSON)]}
    err_abs = np.abs(series.soc_hat - series.soc_extreme)
    _save_csv(paths["trace"], _TRACE_HEADER, [
        series.t, series.j, series.sigma, series.soc_hat, series.soc_extreme,
        series.soc_sigma, err_abs, series.u_bar, series.in_d.astype(float)])
    jmp = series.jumps
    _save_csv(paths["jumps"], _JUMPS_HEADER, [
        jmp["t"], jmp["j"], jmp["sigma_before"], jmp["sigma_after"],
        jmp["soc_hat_before"], jmp["soc_hat_after"]])
    _save_csv(paths["aux"], _AUX_HEADER, [
        series.t, series.j, series.u, series.urc_norm, series.urc_err_norm,
        series.v1, series.v1_argmax, series.v1_hold, series.v1_pre,
        series.in_c.astype(float), series.argext])
    meta = dict(series.meta)
    meta["jumps_aux"] = {
        "soc_sigma_before": list(jmp["soc_sigma_before"]),
        "soc_sigma_after": list(jmp["soc_sigma_after"]),
        "v1": list(jmp["v1"]),
        "forced": [bool(x) for x in jmp["forced"]],
    }
    with open(paths["meta"], "w") as f:
        json.dump(meta, f, indent=1, sort_keys=True)
        f.write("\n")
    return paths


def _load_csv(path, n_cols):
    with warnings.catch_warnings():
        # a header-only file (e.g. no jumps) is a normal, empty table
        warnings.filterwarnings("ignore", message=".*no data.*")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        return [np.empty(0) for _ in range(n_cols)]
    return [data[:, k] for k in range(n_cols)]


def read_series(outdir) -> TraceSeries:
    """Reconstruct the reduced series from an exported directory."""
    with open(os.path.join(outdir, META_JSON)) as f:
        meta = json.load(f)
    constants = BoundConstants(**meta["constants"])
    t, j, sigma, soc_hat, soc_ext, soc_sig, _err, u_bar, in_d = _load_csv(
        os.path.join(outdir, TRACE_CSV), 9)
    (t_a, j_a, u_a, urc_norm, urc_err, v1, v1_arg, v1_hold, v1_pre,
     in_c, argext) = _load_csv(os.path.join(outdir, AUX_CSV), 11)
    if t_a.size != t.size or not np.array_equal(t_a, t):
        raise ValueError("aux.csv does not match trace.csv")
    jt, jj, sb, sa, shb, sha = _load_csv(os.path.join(outdir, JUMPS_CSV), 6)
    aux = meta.pop("jumps_aux", {})
    jumps = {
        "t": jt, "j": jj.astype(np.int64),
        "sigma_before": sb.astype(np.int64), "sigma_after": sa.astype(np.int64),
        "soc_hat_before": shb, "soc_hat_after": sha,
        "soc_sigma_before": np.asarray(aux.get("soc_sigma_before", []), dtype=float),
        "soc_sigma_after": np.asarray(aux.get("soc_sigma_after", []), dtype=float),
        "v1": np.asarray(aux.get("v1", []), dtype=float),
        "forced": np.asarray(aux.get("forced", []), dtype=bool),
    }
    return TraceSeries(
        t=t, j=j.astype(np.int64), sigma=sigma.astype(np.int64),
        soc_hat=soc_hat, soc_sigma=soc_sig, soc_extreme=soc_ext,
        argext=argext.astype(np.int64), urc_norm=urc_norm, urc_err_norm=urc_err,
        v1=v1, v1_argmax=v1_arg.astype(np.int64), v1_hold=v1_hold, v1_pre=v1_pre,
        in_c=in_c.astype(bool), in_d=in_d.astype(bool), u=u_a, u_bar=u_bar,
        jumps=jumps, meta=meta, constants=constants)


def write_report(outdir, report: BoundReport) -> dict:
    """Per-sample lhs/rhs CSV plus a JSON summary {check: {pass, ...}}."""
    os.makedirs(outdir, exist_ok=True)
    csv_path = os.path.join(outdir, REPORT_CSV)
    json_path = os.path.join(outdir, REPORT_JSON)
    with open(csv_path, "w") as f:
        f.write(_REPORT_HEADER + "\n")
        for c in report.checks:
            if c.lhs is None or c.t is None:
                continue
            jcol = c.j if c.j is not None else np.zeros(c.t.size)
            for k in range(c.t.size):
                margin = c.rhs[k] - c.lhs[k]
                f.write(f"{c.t[k]:.17g},{jcol[k]:.17g},{c.lhs[k]:.17g},"
                        f"{c.rhs[k]:.17g},{margin:.17g},{c.name}\n")
    with open(json_path, "w") as f:
        json.dump({"pass": report.passed, "checks": report.summary()},
                  f, indent=1, sort_keys=True)
        f.write("\n")
    return {"csv": csv_path, "json": json_path}
