"""Stroboscopic detection: amplitudes three ways, poles, and statistics.

phi_n is the amplitude of first detection at the n-th probe.  It can be
computed by direct projected evolution, by the renewal recursion driven by
free-propagator moments, or (for long series) from the decay poles of the
generating function, which are the roots of u_phi(z) = 0 outside the unit
circle.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .core import (
    DetectionSeries,
    FdtlabError,
    FirstDetectionStats,
    PoleSet,
    PoleSearchError,
    QuantumModel,
    ResonanceError,
    SpectralChargeData,
    UndefinedMomentsError,
    ZenoData,
)
from . import electro as _electro
from . import model as _model

__all__ = [
    "direct_amplitudes",
    "shifted_direct_amplitudes",
    "renewal_amplitudes",
    "renewal_from_moments",
    "check_resonance",
    "strobo_poles",
    "pole_amplitudes",
    "convergence_rate",
    "stats",
    "converged_stats",
]


# ---------------------------------------------------------------------------
# amplitudes


def _evolution_operator(model: QuantumModel, tau: float) -> np.ndarray:
    evals, evecs = np.linalg.eigh(model.hamiltonian)
    return (evecs * np.exp(-1j * tau * evals)) @ evecs.conj().T


def direct_amplitudes(model: QuantumModel, tau: float, n_max: int) -> DetectionSeries:
    """First-detection amplitudes by projected repeated evolution.

    phi_n = <psi_d| U (Q U)^{n-1} |psi_in> with Q = 1 - |psi_d><psi_d|.
    Cost O(n_max dim^2); the reference implementation the fast routes are
    tested against.
    """
    if n_max < 1:
        raise FdtlabError("n_max must be at least 1")
    u = _evolution_operator(model, tau)
    d = model.psi_detect
    state = model.psi_init.copy()
    amps = np.empty(n_max, dtype=complex)
    for n in range(n_max):
        state = u @ state
        amp = np.vdot(d, state)
        amps[n] = amp
        state = state - amp * d
    return DetectionSeries(tau=tau, amplitudes=amps)


def shifted_direct_amplitudes(
    model: QuantumModel, tau: float, epsilon: float, n_max: int
) -> DetectionSeries:
    """Amplitudes for the shifted protocol probing at t_n = (n - epsilon) tau.

    The first stretch of free flight lasts (1 - epsilon) tau; all later
    gaps keep length tau.  Detection times are (n - epsilon) tau.
    """
    if not 0.0 <= epsilon < 1.0:
        raise FdtlabError("shift epsilon must lie in [0, 1)")
    u_first = _evolution_operator(model, (1.0 - epsilon) * tau)
    u = _evolution_operator(model, tau)
    d = model.psi_detect
    state = u_first @ model.psi_init
    amps = np.empty(n_max, dtype=complex)
    for n in range(n_max):
        if n > 0:
            state = u @ state
        amp = np.vdot(d, state)
        amps[n] = amp
        state = state - amp * d
    return DetectionSeries(tau=tau, amplitudes=amps)


def renewal_from_moments(transfer: np.ndarray, returns: np.ndarray) -> np.ndarray:
    """Solve the renewal convolution phi_n = a_n - sum_m b_m phi_{n-m}.

    `transfer` holds a_n = <psi_d|U^n|psi_in> for n = 1..N, `returns`
    holds b_m = <psi_d|U^m|psi_d> for m = 1..N-1 (only N-1 are used).
    """
    n = transfer.size
    phi = np.empty(n, dtype=complex)
    phi[0] = transfer[0]
    for k in range(1, n):
        phi[k] = transfer[k] - np.dot(returns[:k], phi[k - 1 :: -1])
    return phi


def renewal_amplitudes(data: SpectralChargeData, tau: float, n_max: int) -> DetectionSeries:
    """Renewal-recursion amplitudes from spectral propagator moments."""
    if n_max < 1:
        raise FdtlabError("n_max must be at least 1")
    n = np.arange(1, n_max + 1)
    phase = np.exp(-1j * tau * np.outer(n, data.levels))
    transfer = phase @ (data.weights * data.amplitudes)
    returns = phase[:-1] @ data.weights if n_max > 1 else np.empty(0, dtype=complex)
    return DetectionSeries(tau=tau, amplitudes=renewal_from_moments(transfer, returns))


# ---------------------------------------------------------------------------
# poles of the generating function


def check_resonance(data: SpectralChargeData, tau: float, tol: float = 1e-8) -> None:
    """Raise ResonanceError when two detection phases nearly coincide."""
    phases = np.exp(-1j * tau * data.levels)
    for i in range(phases.size):
        d = np.abs(phases[i + 1 :] - phases[i])
        if d.size and d.min() < tol:
            raise ResonanceError(
                f"detection phases collide at tau={tau:.6g}; pole structure degenerates"
            )


def _newton_z(data: SpectralChargeData, tau: float, z0: complex) -> complex:
    z = z0
    for _ in range(80):
        f = _model.u_phi(data, z, tau)
        df = _model.u_phi_prime(data, z, tau)
        if df == 0:
            break
        step = f / df
        z = z - step
        if abs(step) < 1e-14 * max(1.0, abs(z)):
            return z
    f = _model.u_phi(data, z, tau)
    if abs(f) < 1e-10:
        return z
    raise PoleSearchError(f"generating-function root refinement stalled near {z0:.6g}")


def strobo_poles(
    data: SpectralChargeData, tau: float, zdata: ZenoData | None = None
) -> PoleSet:
    """The w-1 roots of u_phi(z) = 0 outside the unit circle.

    Seeded from the frequent-detection asymptotics z = exp(lambda tau^2 +
    i omega tau) at a small tau and continued geometrically up to the
    requested tau; log-tracked so the winding stays on one branch.
    """
    check_resonance(data, tau)
    w = data.w
    if w == 1:
        return PoleSet("strobo", tau, np.empty(0, complex), np.empty(0, complex), np.empty(0, complex))
    if zdata is None:
        zdata = _electro.zeno_data(data)

    spread = max(data.spread, 1e-12)
    tau0 = min(tau, 0.32 / spread)
    steps = [tau0]
    while steps[-1] < tau:
        steps.append(min(tau, steps[-1] * 1.2))
    # nudge intermediate waypoints off near-resonances; the target was vetted
    for i in range(len(steps) - 1):
        try:
            check_resonance(data, steps[i], tol=1e-6)
        except ResonanceError:
            steps[i] = min(steps[i] * 1.003, 0.5 * (steps[i] + tau))

    logs = zdata.rates * tau0**2 + 1j * zdata.omega * tau0
    prev_tau = tau0
    for tk in steps:
        r = tk / prev_tau
        logs = logs.real * r**2 + 1j * logs.imag * r
        roots = np.empty(w - 1, dtype=complex)
        for k in range(w - 1):
            z = _newton_z(data, tk, np.exp(logs[k]))
            lg = np.log(z)
            # re-anchor the branch closest to the predicted winding
            two_pi = 2.0 * np.pi
            kwind = np.round((logs[k].imag - lg.imag) / two_pi)
            logs[k] = lg.real + 1j * (lg.imag + two_pi * kwind)
            roots[k] = z
        prev_tau = tk

    _assert_distinct(roots, "stroboscopic")
    if np.abs(roots).min() <= 1.0:
        raise PoleSearchError("a stroboscopic pole crossed into the unit disk")
    v = np.array([_model.v_phi(data, z, tau) for z in roots])
    du = np.array([_model.u_phi_prime(data, z, tau) for z in roots])
    return PoleSet("strobo", tau, roots, v, du)


def _assert_distinct(roots: np.ndarray, label: str) -> None:
    for i in range(roots.size):
        d = np.abs(roots[i + 1 :] - roots[i])
        if d.size and d.min() < 1e-8 * max(1.0, abs(roots[i])):
            raise PoleSearchError(f"{label} poles collided during refinement")


def pole_amplitudes(poles: PoleSet, data: SpectralChargeData, n) -> np.ndarray:
    """Amplitudes phi_n rebuilt from the pole decomposition.

    phi_n = ov/c * delta_{n,1} - sum_l (v_phi(z_l) - ov) / u_phi'(z_l) *
    z_l^{-n-1}, with c = sum p_l exp(i tau E_l).  The first-probe term is
    the constant part of the generating function divided by z; it vanishes
    for orthogonal launch states but is required for exactness otherwise.
    """
    if poles.framework != "strobo":
        raise FdtlabError("pole_amplitudes expects stroboscopic poles")
    narr = np.atleast_1d(np.asarray(n, dtype=int))
    if np.any(narr < 1):
        raise FdtlabError("probe index n starts at 1")
    ov = data.overlap
    res = (poles.v_at_pole - ov) / poles.u_prime
    # z^{-n-1} for all poles and indices, summed over poles
    out = -(res[None, :] * poles.poles[None, :] ** (-(narr[:, None] + 1))).sum(axis=1)
    c = complex(np.sum(data.weights * np.exp(1j * poles.tau * data.levels)))
    if abs(ov) > 0:
        out = out + np.where(narr == 1, ov / c, 0.0)
    return out if np.ndim(n) else complex(out[0])


def convergence_rate(poles: PoleSet) -> float:
    """Slowest geometric decay factor: |phi_n| shrinks like rate^-n."""
    if poles.count == 0:
        return np.inf
    return float(np.abs(poles.poles).min())


# ---------------------------------------------------------------------------
# statistics


def stats(series: DetectionSeries, m_max: int = 2) -> FirstDetectionStats:
    """Truncated detection probability and conditioned moments <T^m>."""
    if m_max < 1:
        raise FdtlabError("m_max must be at least 1")
    prob = series.probabilities
    p_det = float(prob.sum())
    # a trailing stretch can sit in an interference null (even a wide one,
    # when a beat goes stationary during an envelope crossing); gauge the
    # tail over the last eighth of the series so full beat periods fit
    tail = float(prob[-max(32, prob.size // 8):].max())
    if p_det < 1e-12:
        raise UndefinedMomentsError("detection probability below 1e-12")
    narr = np.arange(1, series.n_max + 1, dtype=float)
    moments = np.empty(m_max)
    for m in range(1, m_max + 1):
        moments[m - 1] = (series.tau**m) * float(np.dot(narr**m, prob)) / p_det
    return FirstDetectionStats(
        p_det=p_det, moments=moments, truncation_n=series.n_max, tail_estimate=tail
    )


def converged_stats(
    make_series: Callable[[int], DetectionSeries],
    m_max: int = 2,
    n_start: int = 256,
    tail_tol: float = 1e-10,
    n_cap: int = 10**6,
) -> FirstDetectionStats:
    """Double the truncation until the trailing weight drops below tail_tol.

    `make_series(n)` must rebuild the series at truncation n.  Raises
    FdtlabError when the cap is hit before the tail condition.
    """
    n = n_start
    while True:
        series = make_series(n)
        result = stats(series, m_max)
        if result.tail_estimate < tail_tol:
            return result
        if n >= n_cap:
            raise FdtlabError(
                f"series tail {result.tail_estimate:.3g} still above {tail_tol:.3g} at n={n}"
            )
        n = min(2 * n, n_cap)
