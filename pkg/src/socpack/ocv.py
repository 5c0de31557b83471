"""Open-circuit-voltage curve: monotone C1 knot interpolation with a certified inverse.

The curve is a cubic Hermite interpolant with Fritsch-Carlson (PCHIP) tangent
limiting, extended over all of R by linear pieces at the boundary tangents.
That gives a strictly increasing, continuously differentiable map whose
derivative is bounded between measured extremes a1 and a2 (the derivative of
each cubic piece is a quadratic, so the extremes are computed exactly, not
sampled).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["OCVCurve", "OCVCurveError", "DEFAULT_OCV_KNOTS", "default_ocv_curve",
           "ocv_eval", "ocv_inverse"]


class OCVCurveError(ValueError):
    """Raised for malformed knot tables or a non-converging inverse."""


# Default graphite/NCA-shaped table. Calibrated so the interpolant's measured
# derivative extremes are 0.23 V/unit-SOC (plateau) and 61.66 V/unit-SOC
# (low-SOC knee): 2.3 mV/% and 616.6 mV/%.
DEFAULT_OCV_KNOTS = (
    (0.0, 2.6),
    (0.004, 2.688),
    (0.008, 2.848),
    (0.012, 3.0767539),
    (0.016, 3.3055078),
    (0.02, 3.4473352),
    (0.025, 3.5273352),
    (0.031, 3.5753352),
    (0.04, 3.6113352),
    (0.052, 3.6377352),
    (0.07, 3.6602352),
    (0.1, 3.6818352),
    (0.14, 3.7002352),
    (0.19, 3.7169852),
    (0.24, 3.7305852),
    (0.29, 3.7430305),
    (0.34, 3.7546616),
    (0.39, 3.7662927),
    (0.44, 3.7779238),
    (0.49, 3.7895549),
    (0.54, 3.8020002),
    (0.59, 3.8170002),
    (0.64, 3.8380002),
    (0.69, 3.8670002),
    (0.74, 3.9070002),
    (0.79, 3.9595002),
    (0.84, 4.0245002),
    (0.9, 4.1175002),
    (0.95, 4.2075002),
    (1.0, 4.3100002),
)


def _edge_tangent(h0, h1, m0, m1):
    # One-sided three-point estimate with the standard PCHIP clamps.
    d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1)
    if np.sign(d) != np.sign(m0):
        return 0.0
    if (np.sign(m0) != np.sign(m1)) and (abs(d) > 3.0 * abs(m0)):
        return 3.0 * m0
    return d


def _pchip_tangents(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Fritsch-Carlson limited tangents (weighted harmonic mean of secants)."""
    h = np.diff(x)
    mk = np.diff(y) / h
    n = x.size
    if n == 2:
        return np.array([mk[0], mk[0]])
    dk = np.zeros(n)
    smk = np.sign(mk)
    cond = (smk[1:] != smk[:-1]) | (mk[1:] == 0.0) | (mk[:-1] == 0.0)
    w1 = 2.0 * h[1:] + h[:-1]
    w2 = h[1:] + 2.0 * h[:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        whmean = (w1 / mk[:-1] + w2 / mk[1:]) / (w1 + w2)
        interior = np.where(cond, 0.0, 1.0 / whmean)
    dk[1:-1] = interior
    dk[0] = _edge_tangent(h[0], h[1], mk[0], mk[1])
    dk[-1] = _edge_tangent(h[-1], h[-2], mk[-1], mk[-2])
    return dk


def _piece_slope_extremes(xs, ys, ms):
    """Exact per-piece derivative extremes (the derivative is quadratic in t)."""
    h = np.diff(xs)
    delta = np.diff(ys) / h
    m0 = ms[:-1]
    m1 = ms[1:]
    # p'(t) = A t^2 + B t + C on each piece, t in [0, 1]
    a = -6.0 * delta + 3.0 * m0 + 3.0 * m1
    b = 6.0 * delta - 4.0 * m0 - 2.0 * m1
    c = m0
    ends = np.stack([c, a + b + c], axis=0)
    lo = ends.min(axis=0)
    hi = ends.max(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_star = np.where(a != 0.0, -b / (2.0 * a), -1.0)
    inside = (t_star > 0.0) & (t_star < 1.0)
    v_star = a * t_star * t_star + b * t_star + c
    lo = np.where(inside, np.minimum(lo, v_star), lo)
    hi = np.where(inside, np.maximum(hi, v_star), hi)
    return float(lo.min()), float(hi.max())


@dataclass(frozen=True)
class OCVCurve:
    """Shared V_OCV map for all cells in a pack.

    knots: ordered (soc, voltage) pairs, strictly increasing in both
    coordinates, covering the SOC range of interest (typically [0, 1]).
    Beyond the knot span the curve continues linearly at the boundary
    tangents, so it is defined, strictly increasing and C1 on all of R.
    """

    knots: tuple[tuple[float, float], ...] = DEFAULT_OCV_KNOTS
    xs: np.ndarray = field(init=False, repr=False, compare=False)
    ys: np.ndarray = field(init=False, repr=False, compare=False)
    ms: np.ndarray = field(init=False, repr=False, compare=False)
    a1: float = field(init=False, compare=False)
    a2: float = field(init=False, compare=False)

    def __post_init__(self):
        knots = tuple((float(s), float(v)) for s, v in self.knots)
        if len(knots) < 2:
            raise OCVCurveError("need at least two OCV knots")
        xs = np.array([k[0] for k in knots])
        ys = np.array([k[1] for k in knots])
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise OCVCurveError("OCV knots must be finite")
        if np.any(np.diff(xs) <= 0.0):
            raise OCVCurveError("knot SOC values must be strictly increasing")
        if np.any(np.diff(ys) <= 0.0):
            raise OCVCurveError("knot voltages must be strictly increasing")
        ms = _pchip_tangents(xs, ys)
        a1, a2 = _piece_slope_extremes(xs, ys, ms)
        # extrapolation slopes are the boundary tangents
        a1 = min(a1, float(ms[0]), float(ms[-1]))
        a2 = max(a2, float(ms[0]), float(ms[-1]))
        if a1 <= 0.0:
            raise OCVCurveError(f"curve is not strictly increasing (min slope {a1:g})")
        for arr in (xs, ys, ms):
            arr.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "ms", ms)
        object.__setattr__(self, "a1", a1)
        object.__setattr__(self, "a2", a2)

    @property
    def slope_left(self) -> float:
        return float(self.ms[0])

    @property
    def slope_right(self) -> float:
        return float(self.ms[-1])

    def eval(self, soc):
        """Voltage at soc (scalar or array); total on R, strictly increasing."""
        s = np.asarray(soc, dtype=float)
        xs, ys, ms = self.xs, self.ys, self.ms
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
        return float(v) if v.ndim == 0 else v

    __call__ = eval

    def derivative(self, soc):
        """dV/dSOC at soc (scalar or array). Always within [a1, a2]."""
        s = np.asarray(soc, dtype=float)
        xs, ys, ms = self.xs, self.ys, self.ms
        idx = np.clip(np.searchsorted(xs, s, side="right") - 1, 0, xs.size - 2)
        x0 = xs[idx]
        h = xs[idx + 1] - x0
        t = (s - x0) / h
        t2 = t * t
        d = (
            (6.0 * t2 - 6.0 * t) * ys[idx]
            + (3.0 * t2 - 4.0 * t + 1.0) * h * ms[idx]
            + (-6.0 * t2 + 6.0 * t) * ys[idx + 1]
            + (3.0 * t2 - 2.0 * t) * h * ms[idx + 1]
        ) / h
        d = np.where(s <= xs[0], ms[0], d)
        d = np.where(s >= xs[-1], ms[-1], d)
        return float(d) if d.ndim == 0 else d

    def inverse(self, v: float, tol_v: float = 1e-10, max_iter: int = 100) -> float:
        """SOC with |eval(soc) - v| <= tol_v; unique by strict monotonicity.

        Safeguarded Newton (bisection fallback). Raises OCVCurveError if the
        iteration cap is hit, which signals a malformed curve.
        """
        v = float(v)
        if not np.isfinite(v):
            raise OCVCurveError("inverse target voltage must be finite")
        xs, ys, ms = self.xs, self.ys, self.ms
        if v <= ys[0]:
            return float(xs[0] + (v - ys[0]) / ms[0])
        if v >= ys[-1]:
            return float(xs[-1] + (v - ys[-1]) / ms[-1])
        k = int(np.clip(np.searchsorted(ys, v, side="right") - 1, 0, ys.size - 2))
        lo, hi = float(xs[k]), float(xs[k + 1])
        s = 0.5 * (lo + hi)
        for _ in range(max_iter):
            f = self.eval(s) - v
            if abs(f) <= tol_v:
                return float(s)
            if f > 0.0:
                hi = s
            else:
                lo = s
            step = f / self.derivative(s)
            s_new = s - step
            if not (lo < s_new < hi):
                s_new = 0.5 * (lo + hi)
            s = s_new
        raise OCVCurveError(f"inverse did not converge to {tol_v:g} V in {max_iter} iterations")

    def mirrored(self, offset: float = 0.0) -> "OCVCurve":
        """The curve s -> offset - V(1 - s): the max-SOC dual of this map."""
        knots = tuple((1.0 - s, offset - v) for s, v in reversed(self.knots))
        return OCVCurve(knots)


def default_ocv_curve() -> OCVCurve:
    return _DEFAULT_CURVE


def ocv_eval(curve: OCVCurve, soc):
    return curve.eval(soc)


def ocv_inverse(curve: OCVCurve, v: float) -> float:
    return curve.inverse(v)


_DEFAULT_CURVE = OCVCurve(DEFAULT_OCV_KNOTS)
