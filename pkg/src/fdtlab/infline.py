"""Analytics for detection on the infinite tight-binding line.

Free propagation on the line has Bessel amplitudes, so everything here
reduces to Bessel evaluation plus quadrature: the absorbing wave function
as a one-dimensional integral (launch on the detection site) or as a
convolution against it (launch xi sites away), the closed forms for the
detection probability and the conditional mean, and the small-tau series
comparison between the corrected absorbing result and the stroboscopic
sum.  Bessel J is implemented in-repo (ascending series plus Miller
recurrence) so the numeric contract is self-contained.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline

from .core import DetectionSeries, QuadratureError
from .strobo import renewal_from_moments

__all__ = [
    "bessel_j",
    "branch_root",
    "line_amplitude",
    "line_psi",
    "pdet_closed",
    "mean_t_closed",
    "line_strobo_series",
    "series_comparison",
    "SeriesComparison",
]

_MAX_ORDER = 200
_MAX_ARG = 1.0e4
_SERIES_CUT = 12.0


# ---------------------------------------------------------------------------
# Bessel J


def _bessel_series(order: int, x: np.ndarray) -> np.ndarray:
    """Ascending series; reliable for |x| <= 12 at any order <= 200."""
    half = x / 2.0
    # leading coefficient (x/2)^n / n! in log space to dodge under/overflow
    out = np.zeros_like(x)
    nz = x != 0.0
    if order == 0:
        term = np.ones_like(x)
    else:
        term = np.zeros_like(x)
        lead = order * np.log(np.abs(half[nz])) - math.lgamma(order + 1)
        term[nz] = np.exp(lead)
    total = term.copy()
    x24 = half * half
    for k in range(1, 80):
        term = -term * x24 / (k * (order + k))
        total += term
        if np.all(np.abs(term) <= 1e-17 * (1.0 + np.abs(total))):
            break
    out = total
    if order > 0:
        out = np.where(nz, out, 0.0)
    return out


def _bessel_miller(order: int, x: np.ndarray) -> np.ndarray:
    """Downward recurrence with the even-order normalization, |x| > 12."""
    res = np.empty_like(x)
    top = float(np.max(x))
    m = int(max(order, math.ceil(top))) + 15 + 10 * int(math.ceil(top ** (1.0 / 3.0)))
    if m % 2:
        m += 1
    fk1 = np.zeros_like(x)          # f_{k+1}
    fk = np.full_like(x, 1e-30)     # f_k at k = m
    norm = np.zeros_like(x)
    kept = np.zeros_like(x)
    for k in range(m, 0, -1):
        fk1, fk = fk, (2.0 * k / x) * fk - fk1
        if k - 1 == order:
            kept = fk.copy()
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * fk
        big = np.abs(fk) > 1e250
        if np.any(big):
            s = np.where(big, 1e-250, 1.0)
            fk *= s
            fk1 *= s
            norm *= s
            kept *= s
    norm += fk  # J_0 contribution
    res = kept / norm
    return res


def bessel_j(order: int, x):
    """Bessel function of the first kind, J_order(x).

    order must be an integer in [0, 200]; |x| <= 1e4.  x may be a scalar
    or an array.  Absolute accuracy 1e-12 over the whole domain.
    """
    if order != int(order) or order < 0 or order > _MAX_ORDER:
        raise ValueError(f"order must be an integer in [0, {_MAX_ORDER}], got {order!r}")
    order = int(order)
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if not np.all(np.isfinite(arr)) or np.any(np.abs(arr) > _MAX_ARG):
        raise ValueError(f"argument out of range, need |x| <= {_MAX_ARG:g}")
    sign = np.where((arr < 0) & (order % 2 == 1), -1.0, 1.0)
    ax = np.abs(arr)
    out = np.empty_like(ax)
    small = ax <= _SERIES_CUT
    if np.any(small):
        out[small] = _bessel_series(order, ax[small])
    if np.any(~small):
        big = ax[~small]
        # geometric argument bins keep the recurrence start index tight
        vals = np.empty_like(big)
        lo = _SERIES_CUT
        while lo < _MAX_ARG:
            hi = lo * 2.0
            sel = (big > lo) & (big <= hi)
            if np.any(sel):
                vals[sel] = _bessel_miller(order, big[sel])
            lo = hi
        out[~small] = vals
    out *= sign
    return float(out[0]) if scalar else out


def branch_root(omega):
    """Continuation of sqrt(4 + s^2) onto s = 0+ + i omega.

    Gives i sign(omega) sqrt(omega^2 - 4) on |omega| > 2 and the plain
    real root sqrt(4 - omega^2) inside the band.
    """
    w = np.asarray(omega, dtype=float)
    inside = np.abs(w) <= 2.0
    root = np.where(
        inside,
        np.sqrt(np.clip(4.0 - w * w, 0.0, None)) + 0.0j,
        1j * np.sign(w) * np.sqrt(np.clip(w * w - 4.0, 0.0, None)),
    )
    return complex(root) if np.ndim(omega) == 0 else root


def line_amplitude(xi: int, t):
    """Free transition amplitude between sites xi apart: i^xi J_xi(2t)."""
    if xi != int(xi) or xi < 0:
        raise ValueError("xi must be a nonnegative integer")
    return (1j ** int(xi)) * bessel_j(int(xi), 2.0 * np.asarray(t, dtype=float))


# ---------------------------------------------------------------------------
# absorbing wave function by quadrature

_GL_CACHE: dict = {}


def _gl(npts: int):
    if npts not in _GL_CACHE:
        _GL_CACHE[npts] = np.polynomial.legendre.leggauss(npts)
    return _GL_CACHE[npts]


def _panel_eval(f, edges: np.ndarray, npts: int):
    """Integrate f over each [edges[i], edges[i+1]] with npts-point GL; sum."""
    x0, w0 = _gl(npts)
    a = edges[:-1]
    b = edges[1:]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    nodes = (mid[:, None] + half[:, None] * x0[None, :]).ravel()
    vals = f(nodes)
    vals = vals.reshape(vals.shape[:-1] + (a.size, npts))
    return ((vals * w0).sum(axis=-1) * half).sum(axis=-1)


def _theta_edges(tau: float, t_max: float, refine: int = 0) -> np.ndarray:
    """Panels on [0, pi/2]: uniform against the oscillation, graded into
    the e^{-Gamma t cos(theta)} boundary layer at pi/2.

    The layer width shrinks like 1/(Gamma t), so the geometric grading
    depth follows t_max."""
    n_uni = max(8, int(math.ceil(t_max / 2.0))) * (1 + refine)
    edges = list(np.linspace(0.0, 0.5 * math.pi, n_uni + 1))
    layer = 0.125 * tau / ((1 + refine) * max(1.0, t_max))
    width = edges[-1] - edges[-2]
    extra = []
    while width > layer:
        width *= 0.5
        extra.append(edges[-1] - width)
    edges = np.unique(np.concatenate([edges, extra]))
    return edges


def _j1_evaluator(x_max: float, n_evals: int):
    """Direct J_1 for small workloads, dense-grid spline for large ones.

    The spline grid step 0.004 keeps interpolation error near 3e-12,
    well under the quadrature tolerance.
    """
    if n_evals < 200000:
        return lambda x: bessel_j(1, x)
    grid = np.linspace(0.0, x_max * (1.0 + 1e-12), int(x_max / 0.004) + 9)
    sp = CubicSpline(grid, bessel_j(1, grid))
    return sp


def _psi0_grid(tau: float, t: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Psi_0 on a time grid: e^{-Gamma t} minus the boundary integral."""
    gamma = 2.0 / tau
    t = np.atleast_1d(np.asarray(t, dtype=float))
    t_max = float(np.max(t)) if t.size else 1.0

    edges0 = _theta_edges(tau, t_max, 0)
    j1 = _j1_evaluator(2.0 * t_max, t.size * edges0.size * 24)

    def integrand(theta):
        # shape (t, nodes); the decay scale in theta tightens as t grows
        s = np.sin(theta)
        c = np.cos(theta)
        vals = j1(np.outer(2.0 * t, s).ravel()).reshape(t.size, theta.size)
        return vals * np.exp(-gamma * np.outer(t, c)) * c[None, :]

    err = np.inf
    for refine in range(3):
        edges = _theta_edges(tau, t_max, refine)
        val = _panel_eval(integrand, edges, 16)
        chk = _panel_eval(integrand, edges, 24)
        err = float(np.max(np.abs(val - chk)))
        if err <= tol:
            return np.exp(-gamma * t) - 2.0 * t * chk
    raise QuadratureError(
        f"launch-site quadrature stalled at error {err:.2e} (target {tol:.0e})"
    )


def _kernel_over_x(xi: int, u: np.ndarray) -> np.ndarray:
    """J_xi(2u)/(2u) * 2 == J_xi(2u)/u with the small-argument limit."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    tiny = np.abs(u) < 0.05
    if np.any(~tiny):
        uu = u[~tiny]
        out[~tiny] = bessel_j(xi, 2.0 * uu) / uu
    if np.any(tiny):
        uu = u[tiny]
        # J_xi(2u)/u = sum_k (-1)^k u^(xi+2k-1) / (k! (xi+k)!)
        acc = np.zeros_like(uu)
        for k in range(4):
            c = (-1.0) ** k / (math.factorial(k) * math.factorial(xi + k))
            with np.errstate(divide="ignore", invalid="ignore"):
                acc += c * uu ** (xi + 2 * k - 1)
        if xi == 1:
            acc = np.where(uu == 0.0, 1.0, acc)
        else:
            acc = np.where(uu == 0.0, 0.0, acc)
        out[tiny] = acc
    return out


def line_psi(xi: int, t, tau: float, tol: float = 1e-10):
    """Absorbing-evolution amplitude at the detection site, line launch.

    xi = 0 is the launch-on-detector integral; xi > 0 convolves the
    xi-step free kernel against it.  t may be a scalar or an array.
    """
    if xi != int(xi) or xi < 0:
        raise ValueError("xi must be a nonnegative integer")
    if tau <= 0:
        raise ValueError("tau must be positive")
    xi = int(xi)
    tarr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(tarr < 0):
        raise ValueError("t must be nonnegative")
    scalar = np.ndim(t) == 0

    if xi == 0:
        res = _psi0_grid(tau, tarr, tol).astype(complex)
        return complex(res[0]) if scalar else res

    gamma = 2.0 / tau
    t_max = float(np.max(tarr))
    # slow part of Psi_0 on a spline; the e^{-Gamma t} transient is kept
    # analytic, but a residual layer of width ~tau and height ~tau^2/2
    # survives the subtraction, so the step must resolve tau as well
    h = min(0.02, t_max / 64.0, 0.5 * tau) if t_max > 0 else 0.02
    grid = np.linspace(0.0, max(t_max, h), max(int(math.ceil(t_max / h)) + 1, 9))
    slow = _psi0_grid(tau, grid, tol) - np.exp(-gamma * grid)
    slow_sp = CubicSpline(grid, slow)

    out = np.zeros(tarr.size, dtype=complex)
    phase = 1j**xi
    for i, tv in enumerate(tarr):
        if tv == 0.0:
            out[i] = 0.0
            continue

        def integrand(tp, tv=tv):
            psi0 = np.exp(-gamma * tp) + slow_sp(tp)
            return _kernel_over_x(xi, tv - tp) * psi0

        base = max(6, int(math.ceil(tv / 0.25)))
        for refine in range(3):
            edges = list(np.linspace(0.0, tv, base * (1 + refine) + 1))
            width = edges[1] - edges[0]
            layer = 0.125 * tau
            extra = []
            while width > layer:
                width *= 0.5
                extra.append(edges[0] + width)
            edges = np.unique(np.concatenate([edges, extra]))
            val = _panel_eval(integrand, edges, 16)
            chk = _panel_eval(integrand, edges, 24)
            if abs(val - chk) <= tol * max(1.0, abs(chk)):
                out[i] = phase * xi * chk
                break
            if refine == 2:
                raise QuadratureError(
                    f"convolution quadrature stalled at error {abs(val - chk):.2e}"
                )
    return complex(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# closed forms


def _arccos_ratio(tau_c):
    """A(tau) = arccos(tau)/sqrt(1-tau^2) as a series in 1 - tau^2.

    Equals arcsin(u)/u with u^2 = 1 - tau^2, so it is analytic through
    tau = 1 and real on the whole physical range.
    """
    beta = 1.0 - tau_c * tau_c
    if np.all(np.abs(beta) < 0.7):
        term = np.ones_like(beta)
        acc = np.ones_like(beta)
        for k in range(1, 120):
            term = term * beta * (2 * k - 1) * (2 * k - 1) / (2 * k * (2 * k + 1))
            acc = acc + term
            if np.all(np.abs(term) < 1e-16):
                break
        return acc
    # past tau = 1 the joint continuation is arcsinh(y)/y with y^2 = -beta;
    # independent principal branches of arccos and sqrt flip its sign there
    tau_c = np.asarray(tau_c, dtype=complex)
    below = np.arccos(np.where(tau_c.real <= 1.0, tau_c, 0.0)) / np.sqrt(
        1.0 - np.where(tau_c.real <= 1.0, tau_c, 0.0) ** 2
    )
    y = np.sqrt(np.where(tau_c.real > 1.0, tau_c, 2.0) ** 2 - 1.0)
    above = np.arcsinh(y) / y
    out = np.where(tau_c.real <= 1.0, below, above)
    return out if out.ndim else out[()]


def _pdet_raw(tau_c, xi: int):
    """Closed-form detection probability, complex-analytic in tau."""
    a = _arccos_ratio(tau_c)
    if xi == 0:
        return (2.0 * tau_c / (np.pi * (1.0 - tau_c**2))) * (
            1.0 + (1.0 - 2.0 * tau_c**2) / tau_c * a
        )
    return (2.0 / (np.pi * tau_c**2 * (1.0 - tau_c**2))) * (
        (np.pi - 2.0 * tau_c) * (1.0 - tau_c**2)
        + tau_c**3
        - (2.0 * (1.0 - tau_c**2) ** 2 + tau_c**2) * a
    )


def _mean_raw(tau_c, xi: int):
    """Closed-form P_det * <T>, complex-analytic in tau.

    The launch-on-detector value tau/4 equals the first moment of the
    leading e^{-2 Gamma t} transient and holds at every tau; both branches
    were validated against direct frequency-domain quadrature.
    """
    a = _arccos_ratio(tau_c)
    if xi == 0:
        return tau_c / 4.0 + 0.0 * a
    return (
        tau_c * (a - tau_c) / (np.pi * (1.0 - tau_c**2))
        + (2.0 + tau_c**2) / (4.0 * tau_c)
        - 1.0 / np.pi
        - a / (np.pi * tau_c)
    )


_TAYLOR_CACHE: dict = {}


def _taylor_at_one(func, xi: int, n_terms: int = 4):
    """Taylor coefficients of func around tau = 1 via a Cauchy ring.

    The singularity there is removable, so the function is analytic on a
    small disc and an FFT around a circle recovers the expansion.
    """
    key = (func.__name__, xi)
    if key not in _TAYLOR_CACHE:
        n = 256
        r = 0.25
        th = 2.0 * np.pi * np.arange(n) / n
        ring = 1.0 + r * np.exp(1j * th)
        vals = func(ring, xi)
        coef = np.fft.fft(vals)[:n_terms] / n
        coef *= r ** -np.arange(n_terms)
        _TAYLOR_CACHE[key] = coef.real
    return _TAYLOR_CACHE[key]


def _closed_eval(func, tau: float, xi: int) -> float:
    if tau <= 0:
        raise ValueError("tau must be positive")
    if xi not in (0, 1):
        raise ValueError("closed forms are available for xi in {0, 1} only")
    if abs(tau - 1.0) < 1e-4:
        coef = _taylor_at_one(func, xi)
        d = tau - 1.0
        return float(sum(c * d**k for k, c in enumerate(coef)))
    val = func(complex(tau, 0.0), xi)
    return float(np.real(val))


def pdet_closed(tau: float, xi: int) -> float:
    """Total detection probability of the absorbing line problem."""
    return _closed_eval(_pdet_raw, tau, xi)


def mean_t_closed(tau: float, xi: int) -> float:
    """Conditional mean detection time of the absorbing line problem."""
    return _closed_eval(_mean_raw, tau, xi) / _closed_eval(_pdet_raw, tau, xi)


# ---------------------------------------------------------------------------
# stroboscopic series and the order-six gap


def line_strobo_series(xi: int, tau: float, n_max: int) -> DetectionSeries:
    """First-detection amplitudes on the line from the renewal recursion."""
    if xi != int(xi) or xi < 0:
        raise ValueError("xi must be a nonnegative integer")
    if tau <= 0:
        raise ValueError("tau must be positive")
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    n = np.arange(1, n_max + 1, dtype=float)
    returns = bessel_j(0, 2.0 * tau * n).astype(complex)
    if xi == 0:
        transfer = returns.copy()
    else:
        transfer = (1j ** int(xi)) * bessel_j(int(xi), 2.0 * tau * n).astype(complex)
    amps = renewal_from_moments(transfer, returns)
    return DetectionSeries(tau=tau, amplitudes=amps)


class SeriesComparison(NamedTuple):
    tau: np.ndarray
    strobo: np.ndarray
    corrected: np.ndarray
    delta: np.ndarray
    exponent: float


def series_comparison(tau_list, n_max: int = 20000) -> SeriesComparison:
    """Gap between the strobo detection probability and 4 P_det - 3.

    Sums the renewal series at each tau, evaluates the corrected closed
    form, and fits the scaling exponent of the gap from consecutive
    log-ratios.  The gap closes at sixth order for the line launch.
    """
    taus = np.asarray(tau_list, dtype=float)
    if taus.size < 2:
        raise ValueError("need at least two tau values to fit an exponent")
    strobo = np.empty(taus.size)
    corr = np.empty(taus.size)
    for i, tv in enumerate(taus):
        ser = line_strobo_series(0, float(tv), n_max)
        strobo[i] = float(ser.probabilities.sum())
        corr[i] = 4.0 * pdet_closed(float(tv), 0) - 3.0
    delta = np.abs(strobo - corr)
    order = np.argsort(taus)[::-1]
    ts, ds = taus[order], delta[order]
    fits = [
        math.log(ds[i] / ds[i + 1]) / math.log(ts[i] / ts[i + 1])
        for i in range(taus.size - 1)
    ]
    return SeriesComparison(
        tau=taus, strobo=strobo, corrected=corr, delta=delta,
        exponent=float(np.mean(fits)),
    )
