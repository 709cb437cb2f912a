"""Frequent-detection asymptotics, the factor-four anomaly, and protocols.

For small tau the detection density splits into a fast transient carrying
the launch-state overlap and a slow part governed by the absorption
channels (omega_l, lambda_l, theta_l).  The slow return-problem density of
the stroboscopic protocol is exactly four times its non-Hermitian
counterpart; the correction map 4P - 3 transfers statistics between the
frameworks.  Also here: perturbed launch states with uniform-in-epsilon
moments, the shifted probe grid, and the scaled-time envelope collapse.
"""
from __future__ import annotations

import math
import warnings

import numpy as np

from .core import (
    CollapseReport,
    CorrectionInvalidError,
    DetectionSeries,
    FdtlabError,
    FirstDetectionStats,
    InsufficientDataError,
    RegimeWarning,
    ZenoData,
    ZenoPdf,
)

__all__ = [
    "zeno_pdf",
    "zeno_stats",
    "correction_map",
    "perturbed_return_moments",
    "shifted_protocol_mean",
    "shifted_moment_scale",
    "envelope_collapse",
]


def _slow_sum(zd: ZenoData, tau: float, t: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """sum_l weights_l * exp(-t (lambda_l tau + i omega_l)) on a grid."""
    decay = zd.rates * tau + 1j * zd.omega
    return (weights[None, :] * np.exp(-np.outer(t, decay))).sum(axis=1)


def _check_regime(zd: ZenoData, tau: float) -> None:
    if tau > 0.5 * zd.tau_zeno:
        warnings.warn("tau is not small against the Zeno time", RegimeWarning, stacklevel=3)


def zeno_pdf(
    zd: ZenoData,
    tau: float,
    t: np.ndarray,
    kind: str,
    problem: str,
    overlap: complex,
) -> ZenoPdf:
    """Limiting first-detection density on a time grid.

    kind is "nhh" or "strobo"; problem is "return" (launch equals detected
    state) or "transition" (orthogonal launch).  The stroboscopic first
    probe carries a point mass |overlap|^2 at t = tau, reported separately
    and never folded into the density.
    """
    if kind not in ("nhh", "strobo"):
        raise FdtlabError(f"unknown framework {kind!r}")
    if problem not in ("return", "transition"):
        raise FdtlabError(f"unknown problem {problem!r}")
    _check_regime(zd, tau)
    tarr = np.asarray(t, dtype=float)
    ov2 = abs(overlap) ** 2

    if problem == "transition":
        slow = 4.0 * tau * np.abs(_slow_sum(zd, tau, tarr, zd.rates * zd.theta)) ** 2
    else:
        amp = np.abs(_slow_sum(zd, tau, tarr, zd.rates.astype(complex))) ** 2
        slow = (4.0 * tau**3 if kind == "strobo" else tau**3) * amp

    if kind == "nhh":
        fast = (4.0 / tau) * ov2 * np.exp(-4.0 * tarr / tau)
        return ZenoPdf(t=tarr, density=fast + slow, point_masses=())
    masses = ((tau, ov2),) if ov2 > 0 else ()
    return ZenoPdf(t=tarr, density=slow, point_masses=masses)


def zeno_stats(
    zd: ZenoData,
    tau: float,
    m_max: int,
    kind: str,
    problem: str,
    overlap: complex,
) -> FirstDetectionStats:
    """Limiting detection probability and moments.

    Transition: both frameworks share P = |ov|^2 + sum 2 lambda |theta|^2
    and <T^m> = (m!/P) sum 2 lambda |theta|^2 / (2 lambda tau)^m.
    Return: P = 1; the stroboscopic moments are four times the absorbing
    ones apart from the first-probe shift delta_{m,1} tau / 4 (resp. tau).
    """
    if kind not in ("nhh", "strobo"):
        raise FdtlabError(f"unknown framework {kind!r}")
    if problem not in ("return", "transition"):
        raise FdtlabError(f"unknown problem {problem!r}")
    if m_max < 1:
        raise FdtlabError("m_max must be at least 1")
    _check_regime(zd, tau)
    two_lam = 2.0 * zd.rates

    if problem == "transition":
        wgt = two_lam * np.abs(zd.theta) ** 2
        p_det = abs(overlap) ** 2 + float(wgt.sum())
        moments = np.empty(m_max)
        for m in range(1, m_max + 1):
            moments[m - 1] = math.factorial(m) / p_det * float(np.sum(wgt / (two_lam * tau) ** m))
        return FirstDetectionStats(p_det=p_det, moments=moments)

    factor = 4.0 if kind == "strobo" else 1.0
    moments = np.empty(m_max)
    for m in range(1, m_max + 1):
        slow = (math.factorial(m) / (4.0 * tau ** (m - 2))) * float(np.sum(two_lam / two_lam**m))
        first = tau / 4.0 if m == 1 else 0.0
        moments[m - 1] = factor * (first + slow)
    return FirstDetectionStats(p_det=1.0, moments=moments)


def correction_map(p_det_nhh: float, moments_nhh: np.ndarray):
    """Map absorbing-frame return statistics to stroboscopic ones.

    P -> 4P - 3 and <T^m> -> (4P / (4P - 3)) <T^m>.  Only meaningful for
    full-overlap launch states with P > 3/4; values barely above the
    threshold are allowed but warned about, since the image blows up.
    """
    denom = 4.0 * p_det_nhh - 3.0
    if denom <= 0.0:
        raise CorrectionInvalidError(
            f"correction map needs P > 3/4, got {p_det_nhh:.6g}"
        )
    if denom < 1e-3:
        warnings.warn(
            "correction map close to its P = 3/4 singularity; mapped values are unstable",
            RegimeWarning,
            stacklevel=2,
        )
    scale = 4.0 * p_det_nhh / denom
    return denom, np.asarray(moments_nhh, dtype=float) * scale


# ---------------------------------------------------------------------------
# perturbed launch states


def perturbed_return_moments(
    zd: ZenoData,
    tau: float,
    epsilon: float,
    m: int,
    mode: str = "uniform",
):
    """Moments for the nearly-returning launch state, stroboscopic frame.

    The launch state is sqrt(1 - eps^2) |psi_d> + eps |perp>, and zd must
    be built with |perp> as the initial state (theta_l then refer to the
    orthogonal component).

    mode "uniform" returns the matched expression valid across all eps.
    mode "state" returns the pair of raw branch values (tau << eps branch,
    tau ~ eps branch); choosing between them is left to the caller.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise FdtlabError("epsilon must lie in [0, 1]")
    if m < 1:
        raise FdtlabError("moment order must be at least 1")
    if mode not in ("uniform", "state"):
        raise FdtlabError(f"unknown mode {mode!r}")
    _check_regime(zd, tau)
    two_lam = 2.0 * zd.rates
    th2 = np.abs(zd.theta) ** 2
    ov2 = 1.0 - epsilon**2
    denom = ov2 + epsilon**2 * float(np.sum(two_lam * th2))
    fact = float(math.factorial(m))

    # deep-perturbation branch: conditioned transition-like moments
    small_tau = (epsilon**2 * fact / tau**m) * float(np.sum(two_lam * th2 / two_lam**m)) / denom
    # comparable-scales branch: shifted return series
    mixed = np.abs(1.0 + 1j * (epsilon / tau) * zd.theta) ** 2
    comparable = tau**m + (fact / tau ** (m - 2)) * float(np.sum(two_lam * mixed / two_lam**m))

    if mode == "state":
        return small_tau, comparable

    # asymptotic matching: comparable-scales branch plus the deep branch
    # minus their common eps^2/tau^2 overlap
    inner = mixed + (epsilon**2 * th2 / tau**2) * (1.0 / denom - 1.0)
    return tau**m + (fact / tau ** (m - 2)) * float(np.sum(two_lam * inner / two_lam**m))


def shifted_protocol_mean(tau: float, epsilon: float, w: int) -> float:
    """Mean detection time when every probe is advanced by epsilon tau.

    Probes fire at (n - epsilon) tau; to leading order the conditioned
    return-problem mean is (1 - eps)(eps + w (1 - eps)) tau.
    """
    if not 0.0 <= epsilon < 1.0:
        raise FdtlabError("epsilon must lie in [0, 1)")
    return (1.0 - epsilon) * (epsilon + w * (1.0 - epsilon)) * tau


def shifted_moment_scale(epsilon: float) -> float:
    """Slow-part rescaling (1 - eps)^2 of higher moments on the shifted grid."""
    if not 0.0 <= epsilon < 1.0:
        raise FdtlabError("epsilon must lie in [0, 1)")
    return (1.0 - epsilon) ** 2


# ---------------------------------------------------------------------------
# envelope collapse


def _local_maxima(y: np.ndarray) -> np.ndarray:
    """Indices of strict 3-point local maxima; endpoints excluded."""
    return np.nonzero((y[1:-1] > y[:-2]) & (y[1:-1] > y[2:]))[0] + 1


def envelope_collapse(
    series_a: DetectionSeries,
    series_b: DetectionSeries,
    problem: str,
) -> CollapseReport:
    """Overlay the slow-density envelopes of two tau values in scaled time.

    The local-average density |phi_n|^2 / tau scales like tau f(t tau) for
    transition problems and tau^3 f(t tau) for return problems.  Envelope
    points are the 3-point local maxima refined by a second maxima pass
    (outer hull); each series is rescaled by its own tau power,
    interpolated (linearly in log) onto the overlapping t*tau range, and
    compared by the largest pointwise relative deviation.
    """
    if problem not in ("return", "transition"):
        raise FdtlabError(f"unknown problem {problem!r}")
    power = 3 if problem == "return" else 1

    def envelope(series: DetectionSeries):
        dens = series.probabilities / series.tau
        idx = _local_maxima(dens)
        x = series.times[idx] * series.tau
        y = dens[idx] / series.tau**power
        # commensurate level spacings interleave a high and a low peak
        # family; a second maxima pass keeps the outer hull only
        hull = _local_maxima(y)
        if hull.size >= 5:
            x, y = x[hull], y[hull]
        if x.size < 5:
            raise InsufficientDataError("fewer than 5 envelope maxima")
        return x, y

    xa, ya = envelope(series_a)
    xb, yb = envelope(series_b)
    lo = max(xa[0], xb[0])
    hi = min(xa[-1], xb[-1])
    if hi <= lo:
        raise InsufficientDataError("envelopes do not overlap in scaled time")
    grid = np.linspace(lo, hi, 200)
    fa = np.exp(np.interp(grid, xa, np.log(ya)))
    fb = np.exp(np.interp(grid, xb, np.log(yb)))
    dev = float(np.max(np.abs(fa - fb) / np.maximum(fa, fb)))
    return CollapseReport(x=grid, envelope_a=fa, envelope_b=fb, max_rel_dev=dev)
