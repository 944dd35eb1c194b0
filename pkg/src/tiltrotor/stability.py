"""Stability analysis helpers.

* :func:`b_matrix` / :func:`det_b`: input matrix of the naive ``[p1, p3]``
  configuration, which is singular at ``yaw = +-pi/2`` with zero roll or pitch.
* :func:`routh_hurwitz_cubic` and :func:`cubic_roots`: two independent routes
  to the stability of ``l^3 + k_d l^2 + k_p l + k_i``.
* :func:`certify_cascade`: empirical convergence certificate from a log.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InvalidLog
from .so3 import sincos


class CubicGains(NamedTuple):
    """Coefficients of the monic cubic ``l^3 + k_d l^2 + k_p l + k_i``."""

    k_d: float
    k_p: float
    k_i: float


def b_matrix(phi):
    """Map ``(f_x, f_z) -> m [p1'', p3'' + g]`` for the untransformed position."""
    s1, c1 = sincos(phi[0])
    s2, c2 = sincos(phi[1])
    s3, c3 = sincos(phi[2])
    return np.array([[c2 * c3, s1 * s3 + c1 * s2 * c3], [-s2, c1 * c2]])


def det_b(phi):
    """Closed-form determinant ``c1 c3 + s1 s2 s3`` of :func:`b_matrix`."""
    s1, c1 = sincos(phi[0])
    s2, _ = sincos(phi[1])
    s3, c3 = sincos(phi[2])
    return c1 * c3 + s1 * s2 * s3


def routh_hurwitz_cubic(g):
    """True iff every root of ``l^3 + k_d l^2 + k_p l + k_i`` has negative real part."""
    k_d, k_p, k_i = g
    return k_d > 0.0 and k_i > 0.0 and k_d * k_p > k_i


def _solve_monic_quadratic(b, c):
    """Roots of ``x^2 + b x + c`` without catastrophic cancellation."""
    disc = b * b - 4.0 * c
    if disc >= 0.0:
        sq = math.sqrt(disc)
        q = -0.5 * (b + math.copysign(sq, b))
        if q == 0.0:
            return [complex(0.0), complex(0.0)]
        return [complex(q), complex(c / q)]
    sq = math.sqrt(-disc)
    return [complex(-0.5 * b, 0.5 * sq), complex(-0.5 * b, -0.5 * sq)]


def _polish(r, a, b, c):
    """One Newton step on a real root, skipped near multiple roots."""
    p = ((r + a) * r + b) * r + c
    dp = (3.0 * r + 2.0 * a) * r + b
    if abs(dp) > 1e-8 * (1.0 + abs(a) + abs(b)):
        return r - p / dp
    return r


def cubic_roots(g):
    """Roots of ``l^3 + k_d l^2 + k_p l + k_i`` in closed form.

    Uses the trigonometric form when all roots are real and Cardano's formula
    plus deflation otherwise. Returned sorted by (real, imag).
    """
    a, b, c = (float(x) for x in g)
    shift = a / 3.0
    p = b - a * a / 3.0
    q = 2.0 * a ** 3 / 27.0 - a * b / 3.0 + c
    disc = (0.5 * q) ** 2 + (p / 3.0) ** 3
    if disc <= 0.0:
        if p == 0.0:
            xs = [0.0, 0.0, 0.0]
        else:
            r = 2.0 * math.sqrt(-p / 3.0)
            arg = 3.0 * q / (p * r)
            theta = math.acos(min(1.0, max(-1.0, arg))) / 3.0
            xs = [r * math.cos(theta - 2.0 * math.pi * k / 3.0) for k in range(3)]
        roots = [complex(_polish(x - shift, a, b, c)) for x in xs]
    else:
        A = -math.copysign(abs(0.5 * q) + math.sqrt(disc), q)
        A = math.copysign(abs(A) ** (1.0 / 3.0), A)
        B = -p / (3.0 * A) if A != 0.0 else 0.0
        r1 = _polish(A + B - shift, a, b, c)
        beta = a + r1
        gamma = -c / r1 if r1 != 0.0 else b + beta * r1
        roots = [complex(r1)] + _solve_monic_quadratic(beta, gamma)
    return sorted(roots, key=lambda z: (z.real, z.imag))


def max_real_part(g):
    return max(z.real for z in cubic_roots(g))


# --------------------------------------------------------------------------
# Empirical convergence certificate
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CertificationTolerances:
    terminal: float = 1e-3  # SI, every e_u / e_f component at the final sample
    coupling: float = 1e-3  # N, |(tan phi1 - tan phi1_d) f_z_bar| at the final sample
    residual: float = 0.1  # RMS of the log-linear fit, natural-log units
    window_fraction: float = 0.6  # trailing fraction of the run used for the fit
    noise_floor: float = 1e-11  # samples below this are integration noise
    envelope_chunks: int = 5


class DecayFit(NamedTuple):
    rate: float  # fitted exponential decay rate (positive = decaying), nan if invalid
    residual: float  # RMS residual of log|e| about the fitted line
    n_samples: int
    valid: bool  # residual below threshold and enough samples


def fit_log_linear(t, err, residual_threshold=0.1, noise_floor=1e-11):
    """Least-squares fit of ``log|err| = c - rate * t`` on samples above the noise floor."""
    t = np.asarray(t, float)
    err = np.abs(np.asarray(err, float))
    mask = err > noise_floor
    n = int(np.count_nonzero(mask))
    if n < 3:
        return DecayFit(math.nan, math.nan, n, False)
    tt, y = t[mask], np.log(err[mask])
    slope, intercept = np.polyfit(tt, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * tt + intercept)) ** 2)))
    valid = residual < residual_threshold
    return DecayFit(float(-slope) if valid else math.nan, residual, n, valid)


def envelope_is_monotone(err, chunks=5, noise_floor=1e-11):
    """True if the per-chunk maxima of ``|err|`` strictly decrease (chunks under the floor are ignored)."""
    err = np.abs(np.asarray(err, float))
    peaks = [float(np.max(part)) for part in np.array_split(err, chunks) if part.size]
    peaks = [pk for pk in peaks if pk > noise_floor]
    return all(b < a for a, b in zip(peaks, peaks[1:]))


def slowest_pole_rate(gains):
    """Smallest ``-Re(root)`` over every axis' closed-loop cubic."""
    rates = [-max_real_part(CubicGains(kd, kp, ki)) for _, kd, kp, ki in gains.axis_triples()]
    return min(rates)


def _finite(x):
    return float(x) if math.isfinite(x) else None


@dataclass
class ConvergenceReport:
    terminal_e_u: float
    terminal_e_f: list
    terminal_coupling: float
    fit: DecayFit
    decay_rate: float  # nan unless the fit is valid
    slowest_pole_rate: float
    monotone_envelope: bool
    passed: bool
    reasons: list = field(default_factory=list)

    def to_dict(self):
        """JSON-ready record; non-finite numbers become ``None``."""
        return {
            "passed": self.passed,
            "terminal_e_u": _finite(self.terminal_e_u),
            "terminal_e_f": [_finite(e) for e in self.terminal_e_f],
            "terminal_coupling": _finite(self.terminal_coupling),
            "decay_rate": _finite(self.decay_rate),
            "fit_residual": _finite(self.fit.residual),
            "fit_samples": self.fit.n_samples,
            "slowest_pole_rate": self.slowest_pole_rate,
            "monotone_envelope": self.monotone_envelope,
            "reasons": list(self.reasons),
        }

    def render(self):
        lines = [
            "Cascade convergence certificate",
            "-------------------------------",
            f"result:              {'PASS' if self.passed else 'FAIL'}",
            f"terminal |e_u|:      {abs(self.terminal_e_u):.3e}",
            "terminal |e_f|:      " + ", ".join(f"{abs(e):.3e}" for e in self.terminal_e_f),
            f"terminal coupling:   {abs(self.terminal_coupling):.3e}",
            f"fit residual:        {self.fit.residual:.4f} over {self.fit.n_samples} samples",
            f"fitted decay rate:   {self.decay_rate:.4f} 1/s",
            f"slowest pole rate:   {self.slowest_pole_rate:.4f} 1/s",
            f"monotone envelope:   {self.monotone_envelope}",
        ]
        lines += [f"  - {r}" for r in self.reasons]
        return "\n".join(lines) + "\n"


def coupling_term(log):
    """``(tan phi1 - tan phi1_d) f_z_bar`` along a log, the drive of the underactuated error."""
    phi1 = log["phi_1"]
    return (np.tan(phi1) - np.tan(log["phi_ref_1"])) * np.cos(phi1) * log["f_z"]


def certify_cascade(log, gains, tolerances=CertificationTolerances()):
    """Check a disturbance-free log for the convergence behaviour predicted by the gains.

    Passes when ``|e_f|`` decays log-linearly at a positive rate with a
    monotone envelope, and ``e_u``, ``e_f`` and the roll coupling term end
    below the terminal tolerances.

    Only free-flight rows are used; after a perch latch the feedback loop is
    no longer running.

    Raises
    ------
    InvalidLog
        If any actuator saturation occurred during free flight, or fewer than
        two free-flight samples exist.
    """
    free = np.asarray(log["attach_flag"]) == 0
    sat = np.asarray(log["sat_flag"])[free]
    if np.any(sat != 0):
        raise InvalidLog(f"{int(np.count_nonzero(sat))} saturated control cycles in log")
    t = np.asarray(log["t"], float)[free]
    if t.size < 2:
        raise InvalidLog("log has fewer than two free-flight samples")
    e_u = np.asarray(log["e_u"], float)[free]
    e_f = np.column_stack([log[f"e_f_{j}"] for j in range(1, 6)])[free]
    coupling = coupling_term(log)[free]

    start = t[0] + (1.0 - tolerances.window_fraction) * (t[-1] - t[0])
    window = t >= start
    norm_f = np.linalg.norm(e_f, axis=1)
    fit = fit_log_linear(t[window], norm_f[window], tolerances.residual, tolerances.noise_floor)
    monotone = envelope_is_monotone(norm_f[window], tolerances.envelope_chunks,
                                    tolerances.noise_floor)
    quiet = bool(np.all(norm_f[window] <= tolerances.noise_floor))

    reasons = []
    if not quiet:
        if not fit.valid:
            reasons.append(f"e_f is not log-linear (residual {fit.residual:.3g} >= "
                           f"{tolerances.residual})")
        elif not fit.rate > 0.0:
            reasons.append(f"e_f envelope grows (fitted rate {fit.rate:.3g})")
        if not monotone:
            reasons.append("e_f envelope is not monotone")
    if not abs(e_u[-1]) < tolerances.terminal:
        reasons.append(f"terminal |e_u| = {abs(e_u[-1]):.3g} >= {tolerances.terminal}")
    for j, e in enumerate(e_f[-1], start=1):
        if not abs(e) < tolerances.terminal:
            reasons.append(f"terminal |e_f_{j}| = {abs(e):.3g} >= {tolerances.terminal}")
    if not abs(coupling[-1]) < tolerances.coupling:
        reasons.append(f"terminal coupling {abs(coupling[-1]):.3g} >= {tolerances.coupling}")

    return ConvergenceReport(
        terminal_e_u=float(e_u[-1]),
        terminal_e_f=[float(e) for e in e_f[-1]],
        terminal_coupling=float(coupling[-1]),
        fit=fit,
        decay_rate=fit.rate,
        slowest_pole_rate=slowest_pole_rate(gains),
        monotone_envelope=monotone or quiet,
        passed=not reasons,
        reasons=reasons,
    )
