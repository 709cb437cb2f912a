"""Non-Hermitian (optical potential) detection framework.

Removing the measured population continuously is modelled by the complex
Hamiltonian H - i Gamma |psi_d><psi_d| with Gamma = 2/tau, matched so that
its detection statistics shadow the stroboscopic protocol.  The detector
amplitude Psi(t) is a finite sum of decaying exponentials whose rates are
the w roots of 1 + (2/tau) u_Psi(s) = 0, all in the left half plane.
"""
from __future__ import annotations

import math
import warnings

import numpy as np
import scipy.linalg

from .core import (
    FdtlabError,
    FirstDetectionStats,
    NhhEvolution,
    PoleSet,
    PoleSearchError,
    QuantumModel,
    RegimeWarning,
    SpectralChargeData,
    StabilityWarning,
    UndefinedMomentsError,
    ZenoData,
)
from . import electro as _electro
from . import model as _model

__all__ = [
    "evolve_nhh",
    "nhh_poles",
    "pole_wavefunction",
    "nhh_stats",
    "fast_mode",
    "adiabatic_hamiltonian",
    "adiabatic_survival",
    "FastMode",
    "AdiabaticModel",
]

_COND_LIMIT = 1e12


def evolve_nhh(
    model: QuantumModel,
    tau: float,
    t_grid: np.ndarray,
    gamma: float | None = None,
) -> NhhEvolution:
    """Integrate the absorbing Schrodinger equation on a time grid.

    gamma defaults to the matched value 2/tau; passing another value (the
    hbar/tau variant, or 0 to switch absorption off) is for exploration.
    Eigendecomposition is used unless the eigenvector matrix is too ill
    conditioned, in which case a stepping matrix-exponential fallback with
    step tau/20 takes over (warned).
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or np.any(np.diff(t) < 0) or t[0] < 0:
        raise FdtlabError("t_grid must be nondecreasing and nonnegative")
    g = 2.0 / tau if gamma is None else float(gamma)
    if g < 0:
        raise FdtlabError("absorption strength must be nonnegative")
    d = model.psi_detect
    h_nh = model.hamiltonian - 1j * g * np.outer(d, d.conj())

    used_fallback = False
    evals, evecs = scipy.linalg.eig(h_nh)
    cond = np.linalg.cond(evecs)
    if cond < _COND_LIMIT:
        coeff = np.linalg.solve(evecs, model.psi_init)
        phases = np.exp(-1j * np.outer(evals, t))
        states = evecs @ (phases * coeff[:, None])
    else:
        warnings.warn(
            f"defective absorbing Hamiltonian (cond {cond:.2g}); "
            "falling back to stepped matrix exponentials",
            StabilityWarning,
            stacklevel=2,
        )
        used_fallback = True
        states = np.empty((model.dim, t.size), dtype=complex)
        step = tau / 20.0
        state = model.psi_init.astype(complex)
        now = 0.0
        u_step = scipy.linalg.expm(-1j * step * h_nh)
        for k, tk in enumerate(t):
            while now + step <= tk + 1e-15:
                state = u_step @ state
                now += step
            if tk - now > 1e-15:
                state = scipy.linalg.expm(-1j * (tk - now) * h_nh) @ state
                now = tk
            states[:, k] = state

    amp = d.conj() @ states
    surv = np.sum(np.abs(states) ** 2, axis=0)
    dens = 2.0 * g * np.abs(amp) ** 2
    return NhhEvolution(t=t, amplitude=amp, survival=surv, density=dens,
                        used_fallback=used_fallback)


# ---------------------------------------------------------------------------
# poles


def _newton_s(data: SpectralChargeData, tau: float, s0: complex) -> complex:
    s = s0
    for _ in range(100):
        f = 1.0 + (2.0 / tau) * _model.u_psi(data, s)
        df = (2.0 / tau) * _model.u_psi_prime(data, s)
        if df == 0:
            break
        step = f / df
        s = s - step
        if abs(step) < 1e-14 * max(1.0, abs(s)):
            return s
    if abs(1.0 + (2.0 / tau) * _model.u_psi(data, s)) < 1e-9:
        return s
    raise PoleSearchError(f"absorbing-pole refinement stalled near {s0:.6g}")


def nhh_poles(
    data: SpectralChargeData, tau: float, zdata: ZenoData | None = None
) -> PoleSet:
    """All w roots of 1 + (2/tau) u_Psi(s) = 0.

    Small tau: w-1 slow poles seeded at -lambda_l tau - i omega_l plus one
    fast pole near -2/tau - i omega_0, continued up from a tiny tau.
    Large tau: seeds -2 p_l / tau - i E_l, continued down from a very
    sparse-probing value.  Both walks refine with Newton at every step.
    """
    w = data.w
    spread = max(data.spread, 1e-12)
    if w == 1:
        # single level: exact single root
        p, e = data.weights[0], data.levels[0]
        s = -2.0 * p / tau - 1j * e
        return PoleSet("nhh", tau, np.array([s]),
                       np.array([_model.v_psi(data, s)]),
                       np.array([_model.u_psi_prime(data, s)]))

    lazy_branch = tau > 8.0 / spread
    if lazy_branch:
        start = max(tau, 200.0 / spread)
        steps = [start]
        while steps[-1] > tau:
            steps.append(max(tau, steps[-1] / 1.2))
        roots = -2.0 * data.weights / steps[0] - 1j * data.levels
        kinds = ["lazy"] * w
    else:
        if zdata is None:
            zdata = _electro.zeno_data(data)
        start = min(tau, 0.08 / spread)
        steps = [start]
        while steps[-1] < tau:
            steps.append(min(tau, steps[-1] * 1.2))
        roots = np.concatenate([
            -zdata.rates * start - 1j * zdata.omega,
            [-2.0 / start - 1j * zdata.omega_fast],
        ])
        kinds = ["slow"] * (w - 1) + ["fast"]

    prev = steps[0]
    for tk in steps:
        r = tk / prev
        refined = np.empty(w, dtype=complex)
        for k in range(w):
            # slow poles scale with tau; fast and lazy ones with 1/tau
            seed = roots[k].real * (r if kinds[k] == "slow" else 1.0 / r) + 1j * roots[k].imag
            refined[k] = _newton_s(data, tk, seed)
        roots = refined
        prev = tk

    _assert_distinct_s(roots)
    if roots.real.max() >= 0:
        raise PoleSearchError("an absorbing pole crossed into the right half plane")
    v = np.array([_model.v_psi(data, s) for s in roots])
    du = np.array([_model.u_psi_prime(data, s) for s in roots])
    return PoleSet("nhh", tau, roots, v, du)


def _assert_distinct_s(roots: np.ndarray) -> None:
    for i in range(roots.size):
        d = np.abs(roots[i + 1 :] - roots[i])
        if d.size and d.min() < 1e-8 * max(1.0, abs(roots[i])):
            raise PoleSearchError("absorbing poles collided during refinement")


def pole_wavefunction(poles: PoleSet, t) -> np.ndarray:
    """Detector amplitude rebuilt from residues:

    Psi(t) = (tau/2) sum_l v_Psi(s_l) / u_Psi'(s_l) * exp(s_l t).
    """
    if poles.framework != "nhh":
        raise FdtlabError("pole_wavefunction expects absorbing-frame poles")
    tarr = np.atleast_1d(np.asarray(t, dtype=float))
    res = 0.5 * poles.tau * poles.v_at_pole / poles.u_prime
    out = (res[None, :] * np.exp(np.outer(tarr, poles.poles))).sum(axis=1)
    return out if np.ndim(t) else complex(out[0])


def nhh_stats(poles: PoleSet, m_max: int = 2) -> FirstDetectionStats:
    """Exact detection probability and moments from the pole double sum.

    With c_l = v/u' and D = s_l + conj(s_l'), the density 2 Gamma |Psi|^2
    integrates in closed form: each moment picks up the kernel
    m! / (-D)^{m+1}.
    """
    if poles.framework != "nhh":
        raise FdtlabError("nhh_stats expects absorbing-frame poles")
    if poles.count == 0:
        raise FdtlabError("empty pole set")
    c = poles.v_at_pole / poles.u_prime
    pair = np.outer(c, c.conj())
    dsum = poles.poles[:, None] + poles.poles.conj()[None, :]
    tau = poles.tau
    p_det = float(np.real(tau * np.sum(pair / (-dsum))))
    if p_det < 1e-12:
        raise UndefinedMomentsError("detection probability below 1e-12")
    moments = np.empty(m_max)
    for m in range(1, m_max + 1):
        val = tau * np.sum(pair * math.factorial(m) / (-dsum) ** (m + 1))
        moments[m - 1] = float(np.real(val)) / p_det
    return FirstDetectionStats(p_det=p_det, moments=moments)


# ---------------------------------------------------------------------------
# fast mode and adiabatic elimination


class FastMode:
    """Short-lived detector-hugging eigenmode of the absorbing Hamiltonian."""

    def __init__(self, eigenvalue: complex, vector: np.ndarray,
                 survival_nhh: float, survival_strobo: float):
        self.eigenvalue = eigenvalue
        self.vector = vector
        self.survival_nhh = survival_nhh
        self.survival_strobo = survival_strobo

    @property
    def survival_ratio(self) -> float:
        return self.survival_strobo / self.survival_nhh


def fast_mode(model: QuantumModel, tau: float) -> FastMode:
    """First-order fast eigenmode and the post-transient survival scales.

    The mode is |psi_d> + (i/Gamma) Q H |psi_d> with eigenvalue
    omega_0 - i Gamma + O(1/Gamma); applying the absorbing Hamiltonian
    leaves a residual of order 1/Gamma.  survival_nhh is the weight left
    in the slow sector after the fast transient, survival_strobo the
    weight surviving the first probe; their ratio tends to exactly 4.
    """
    g = 2.0 / tau
    h = model.hamiltonian
    d = model.psi_detect
    hd = h @ d
    omega0 = float(np.real(np.vdot(d, hd)))
    leak_vec = hd - omega0 * d          # Q H |psi_d>
    leak = float(np.real(np.vdot(leak_vec, leak_vec)))
    spread = float(np.abs(np.linalg.eigvalsh(h)).max())
    if g < 4.0 * spread:
        warnings.warn("absorption not deep in the fast regime", RegimeWarning, stacklevel=2)
    vec = d + (1j / g) * leak_vec
    s_nhh = leak / g**2
    s_strobo = tau**2 * leak
    return FastMode(eigenvalue=omega0 - 1j * g, vector=vec,
                    survival_nhh=s_nhh, survival_strobo=s_strobo)


class AdiabaticModel:
    """Effective slow-sector generator after eliminating the detected state."""

    def __init__(self, matrix: np.ndarray, basis: np.ndarray, psi_init: np.ndarray):
        self.matrix = matrix      # (dim-1, dim-1) non-Hermitian generator
        self.basis = basis        # columns span the complement of psi_d
        self.psi_init = psi_init  # initial state in the reduced basis


def adiabatic_hamiltonian(model: QuantumModel, tau: float) -> AdiabaticModel:
    """Eliminate the strongly absorbed state for orthogonal launch states.

    Valid when <psi_d|psi_in> = 0.  The reduced generator is
    Q H Q - i (tau/2) Q H D H Q projected onto the (dim-1)-dimensional
    complement of psi_d; its anti-Hermitian part is rank one.
    """
    d = model.psi_detect
    if abs(np.vdot(d, model.psi_init)) > 1e-10:
        raise FdtlabError("adiabatic elimination needs an initial state orthogonal to psi_d")
    n = model.dim
    # Householder frame: first column = psi_d, the rest span its complement
    basis_full = np.eye(n, dtype=complex)
    v = d - basis_full[:, 0]
    if np.linalg.norm(v) > 1e-14:
        v = v / np.linalg.norm(v)
        basis_full = basis_full - 2.0 * np.outer(v, v.conj() @ basis_full)
    else:
        basis_full[:, 0] = d
    # ensure exact first column
    basis_full[:, 0] = d
    b = basis_full[:, 1:]
    # re-orthonormalize against psi_d (Householder is already unitary; cheap polish)
    b = b - np.outer(d, d.conj() @ b)
    b, _ = np.linalg.qr(b)

    h = model.hamiltonian
    hd = h @ d
    h_eff = b.conj().T @ h @ b - 1j * (tau / 2.0) * np.outer(b.conj().T @ hd, hd.conj() @ b)
    psi0 = b.conj().T @ model.psi_init
    return AdiabaticModel(matrix=h_eff, basis=b, psi_init=psi0)


def adiabatic_survival(adb: AdiabaticModel, t_grid: np.ndarray) -> np.ndarray:
    """Squared norm of the reduced state along the effective evolution."""
    t = np.asarray(t_grid, dtype=float)
    evals, evecs = scipy.linalg.eig(adb.matrix)
    coeff = np.linalg.solve(evecs, adb.psi_init)
    states = evecs @ (np.exp(-1j * np.outer(evals, t)) * coeff[:, None])
    return np.sum(np.abs(states) ** 2, axis=0)
