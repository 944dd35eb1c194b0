"""Summary metrics of a scenario log and threshold checks against them."""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..so3 import euler_to_rotmat

ERROR_COLUMNS = ("e_u", "e_f_1", "e_f_2", "e_f_3", "e_f_4", "e_f_5")


def _finite_or_none(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _thrust_direction_error(row, normal):
    """Angle between the world thrust direction of ``row`` and ``-normal``."""
    R = euler_to_rotmat((row["phi_1"], row["phi_2"], row["phi_3"]))
    d = R @ np.array([math.sin(row["eta"]), 0.0, math.cos(row["eta"])])
    return math.degrees(math.acos(min(1.0, max(-1.0, float(-d @ normal)))))


def scenario_metrics(log, scenario, params):
    """Scalar summary of a closed-loop run.

    Tracking metrics only use free-flight samples; steady-state metrics skip
    the first ``scenario.settle_time`` seconds.
    """
    t = log["t"]
    free = log["attach_flag"] == 0
    steady = free & (t >= t[0] + scenario.settle_time)
    F = log.columns("F_1", "F_2", "F_3", "F_4")
    pos_err = np.linalg.norm(
        log.columns("p_x", "p_y", "p_z") - log.columns("p_ref_x", "p_ref_y", "p_ref_z"), axis=1)
    errors = np.abs(log.columns(*ERROR_COLUMNS))
    last_free = int(np.flatnonzero(free)[-1])
    eta_free = log["eta"][free]

    m = {
        "duration": float(t[-1] - t[0]),
        "samples": len(log),
        "saturation_count": int(np.count_nonzero(log["sat_flag"])),
        "max_thrust": float(F.max()),
        "min_thrust": float(F.min()),
        "max_thrust_fraction": float(F.max() / params.F_max),
        "terminal_error": float(errors[last_free].max()),
        "terminal_errors": {c: float(errors[last_free, j]) for j, c in enumerate(ERROR_COLUMNS)},
        "max_error": float(errors[free].max()),
        "max_position_error": float(pos_err[free].max()),
        "max_position_error_steady": float(pos_err[steady].max()) if steady.any() else None,
        "max_abs_pitch_deg": float(np.degrees(np.abs(log["phi_2"][free]).max())),
        "max_abs_pitch_deg_steady": (float(np.degrees(np.abs(log["phi_2"][steady]).max()))
                                     if steady.any() else None),
        "tilt_range_deg": float(np.degrees(eta_free.max() - eta_free.min())),
    }
    attached = ~free
    if scenario.perch is not None:
        m["attached"] = bool(attached.any())
        m["attach_time"] = _finite_or_none(log.metadata.get("attach_time") or math.nan)
        m["cart_displacement"] = float(log.metadata.get("cart_displacement", 0.0))
        m["thrust_normal_error_deg"] = (
            _thrust_direction_error(log.row(len(log) - 1), scenario.perch.site.normal)
            if attached.any() else None
        )
        m["pwm_final"] = (F[-1] / params.F_max).tolist()
    return m


@dataclass(frozen=True)
class Bound:
    """Strict bound on one metric: ``min < value < max`` for whichever ends are set."""

    min: Optional[float] = None
    max: Optional[float] = None


def check_thresholds(metrics, thresholds):
    """Compare metrics against ``{name: Bound}``.

    Returns ``(passed, records)``; each record carries the metric value and
    the limit on both sides of the comparison.
    """
    records = []
    for name, bound in thresholds.items():
        value = metrics.get(name)
        for op, limit in (("<", bound.max), (">", bound.min)):
            if limit is None:
                continue
            if isinstance(value, bool):
                value = float(value)
            ok = value is not None and (value < limit if op == "<" else value > limit)
            records.append({"metric": name, "value": value, "op": op, "limit": limit,
                            "passed": bool(ok)})
    return all(r["passed"] for r in records), records
