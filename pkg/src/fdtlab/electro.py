"""Charge-potential picture, absorption frequencies, and limiting regimes.

The detection weights act as point charges: on the unit circle (positions
exp(-i tau E_l)) for stroboscopic detection, on the imaginary axis
(heights E_l) with a uniform background field tau/2 for the non-Hermitian
evolution.  Stationary points of the potentials reproduce the decay poles.
Between adjacent levels the weight resolvent changes sign exactly once;
those zeros are the absorption frequencies of the frequent-detection limit.
"""
from __future__ import annotations

import math
import warnings

import numpy as np

from .core import (
    FdtlabError,
    FirstDetectionStats,
    PoleSet,
    QuantumModel,
    RegimeWarning,
    SingularEvaluationError,
    SpectralChargeData,
    ZenoData,
)
from . import model as _model

__all__ = [
    "potential_strobo",
    "potential_nhh",
    "potential_grid",
    "absorption_frequencies",
    "zeno_data",
    "lazy_limit",
]

_NEAR = 1e-12


def potential_strobo(data: SpectralChargeData, tau: float, x: float, y: float):
    """Logarithmic potential of circle charges and its gradient at (x, y).

    Returns (V, (dV/dx, dV/dy)).  Raises SingularEvaluationError on a charge.
    """
    cx = np.cos(tau * data.levels)
    cy = -np.sin(tau * data.levels)
    dx = x - cx
    dy = y - cy
    r2 = dx * dx + dy * dy
    if np.min(r2) < _NEAR**2:
        raise SingularEvaluationError("potential evaluated on a charge")
    v = float(0.5 * np.sum(data.weights * np.log(r2)))
    gx = float(np.sum(data.weights * dx / r2))
    gy = float(np.sum(data.weights * dy / r2))
    return v, (gx, gy)


def potential_nhh(data: SpectralChargeData, tau: float, x: float, y: float):
    """Axis-charge potential with uniform field tau/2; value and gradient."""
    dx = x
    dy = y - data.levels
    r2 = dx * dx + dy * dy
    if np.min(r2) < _NEAR**2:
        raise SingularEvaluationError("potential evaluated on a charge")
    v = float(0.5 * tau * x + 0.5 * np.sum(data.weights * np.log(r2)))
    gx = float(0.5 * tau + np.sum(data.weights * dx / r2))
    gy = float(np.sum(data.weights * dy / r2))
    return v, (gx, gy)


def potential_grid(data: SpectralChargeData, tau: float, kind: str,
                   xs: np.ndarray, ys: np.ndarray):
    """Evaluate one of the potentials on a rectangular grid.

    Returns (V, Gx, Gy) arrays of shape (len(ys), len(xs)); grid nodes that
    sit on a charge are filled with nan.
    """
    fn = {"strobo": potential_strobo, "nhh": potential_nhh}.get(kind)
    if fn is None:
        raise FdtlabError(f"unknown potential kind {kind!r}")
    V = np.empty((len(ys), len(xs)))
    Gx = np.empty_like(V)
    Gy = np.empty_like(V)
    for i, y in enumerate(ys):
        for j, x in enumerate(xs):
            try:
                v, (gx, gy) = fn(data, tau, float(x), float(y))
            except SingularEvaluationError:
                v = gx = gy = np.nan
            V[i, j], Gx[i, j], Gy[i, j] = v, gx, gy
    return V, Gx, Gy


# ---------------------------------------------------------------------------
# absorption frequencies and Zeno data


def absorption_frequencies(data: SpectralChargeData) -> np.ndarray:
    """The w-1 zeros of sum p_l / (omega - E_l), one per spectral gap.

    The resolvent decreases monotonically across each gap, so a sign-change
    bracket always exists; bisection gets close and Newton polishes.
    """
    e = data.levels
    p = data.weights
    out = np.empty(data.w - 1)

    def f(w: float) -> float:
        return float(np.sum(p / (w - e)))

    def fprime(w: float) -> float:
        return float(-np.sum(p / (w - e) ** 2))

    for g in range(data.w - 1):
        lo, hi = float(e[g]), float(e[g + 1])
        gap = hi - lo
        d = 1e-3 * gap
        # f -> +inf at lo+, -inf at hi-; shrink offsets until signs bracket
        while f(lo + d) < 0 or f(hi - d) > 0:
            d *= 0.5
            if d < 1e-300:
                raise FdtlabError("failed to bracket an absorption frequency")
        a, b = lo + d, hi - d
        for _ in range(200):
            mid = 0.5 * (a + b)
            if f(mid) > 0:
                a = mid
            else:
                b = mid
            if b - a < 1e-13 * max(1.0, abs(mid)):
                break
        root = 0.5 * (a + b)
        for _ in range(8):  # Newton polish
            fp = fprime(root)
            step = f(root) / fp
            new = root - step
            if not lo < new < hi:
                break
            root = new
            if abs(step) < 1e-15 * max(1.0, abs(root)):
                break
        out[g] = root
    return out


def zeno_data(data: SpectralChargeData, model: QuantumModel | None = None) -> ZenoData:
    """Absorption frequencies, rates, transition times, and fast-mode scales.

    With a model supplied, omega_fast and tau_zeno come from the matrix
    route; otherwise they are rebuilt from the charge data (identical
    numbers: sum p E and sum p E^2 reproduce the detected-state moments).
    """
    omegas = absorption_frequencies(data)
    e, p = data.levels, data.weights
    rates = np.empty_like(omegas)
    theta = np.empty(omegas.size, dtype=complex)
    for k, w in enumerate(omegas):
        rates[k] = 1.0 / (2.0 * np.sum(p / (e - w) ** 2))
        theta[k] = 1j * _model.v_psi(data, -1j * w)
    if model is not None:
        tz, w0 = _model.zeno_time(model)
    else:
        w0 = float(np.sum(p * e))
        var = float(np.sum(p * e**2)) - w0**2
        if var <= 0:
            from .core import InfiniteZenoTimeError

            raise InfiniteZenoTimeError("single detectable level; Zeno time diverges")
        tz = 1.0 / np.sqrt(var)
    zd = ZenoData(omega=omegas, rates=rates, theta=theta, omega_fast=w0, tau_zeno=tz)
    _check_zeno(data, zd)
    return zd


def _check_zeno(data: SpectralChargeData, zd: ZenoData) -> None:
    # interlacing E_l < omega_l < E_{l+1} and rate consistency with u'_Psi
    e = data.levels
    for k, w in enumerate(zd.omega):
        if not e[k] < w < e[k + 1]:
            raise FdtlabError("absorption frequency escaped its gap")
    for k, w in enumerate(zd.omega):
        du = _model.u_psi_prime(data, -1j * w)
        if abs(zd.rates[k] * du - 0.5) > 1e-10 * max(1.0, abs(du)):
            raise FdtlabError("rate inconsistent with the resolvent derivative")


# ---------------------------------------------------------------------------
# sparse-detection (large tau) limit


def lazy_limit(data: SpectralChargeData, tau: float, m_max: int = 2):
    """Leading large-tau poles and statistics.

    Poles sit at -2 p_l / tau - i E_l; the stored residue ingredients are
    the leading-order values v -> -tau q_l / 2 and u' -> -tau^2 / (4 p_l),
    chosen so the standard residue formula reproduces the limiting
    amplitude sum p_l q_l exp(-t (2 p_l / tau + i E_l)).
    """
    if tau * max(data.spread, 1.0 / tau) < 10.0:
        warnings.warn("lazy limit requested at moderate tau", RegimeWarning, stacklevel=2)
    p, q, e = data.weights, data.amplitudes, data.levels
    poles = -2.0 * p / tau - 1j * e
    pset = PoleSet(
        framework="nhh",
        tau=tau,
        poles=poles,
        v_at_pole=(-0.5 * tau) * q,
        u_prime=-(tau**2) / (4.0 * p),
    )
    pq2 = p * np.abs(q) ** 2
    p_det = float(np.sum(pq2))
    moments = []
    if p_det > 0:
        for m in range(1, m_max + 1):
            num = float(np.sum(pq2 * p ** (-float(m))))
            moments.append(math.factorial(m) * (tau / 4.0) ** m * num / p_det)
    return pset, FirstDetectionStats(p_det=p_det, moments=np.array(moments))
