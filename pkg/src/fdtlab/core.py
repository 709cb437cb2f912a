"""Shared data containers, error types and warning categories.

Units: hbar = 1 and the hopping scale gamma = 1 throughout.  Energies are
angular frequencies, times are inverse energies.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


# ---------------------------------------------------------------------------
# errors


class FdtlabError(Exception):
    """Base class for all domain errors raised by this package."""


class InvalidModelError(FdtlabError):
    """Hamiltonian not Hermitian, states not normalized, or corrupt file."""


class EmptySpectrumError(FdtlabError):
    """Every spectral weight fell below the drop threshold."""


class SingularEvaluationError(FdtlabError):
    """Resolvent evaluated at (or too close to) one of its poles."""


class ResonanceError(FdtlabError):
    """Two detection-phase factors coincide; the pole count drops."""


class PoleSearchError(FdtlabError):
    """Root refinement failed to produce the expected distinct poles."""


class UndefinedMomentsError(FdtlabError):
    """Detection probability too small to condition moments on."""


class CorrectionInvalidError(FdtlabError):
    """Measurement correction map applied outside its validity range."""


class InsufficientDataError(FdtlabError):
    """Not enough sample points for the requested reduction."""


class QuadratureError(FdtlabError):
    """Adaptive integration failed to reach the requested accuracy."""


class InfiniteZenoTimeError(FdtlabError):
    """Detected state is an eigenstate; no coherent leakage out of it."""


class ConfigError(FdtlabError):
    """Malformed or inconsistent run configuration."""


class RegimeWarning(UserWarning):
    """An asymptotic formula is being used outside its comfort zone."""


class StabilityWarning(UserWarning):
    """A numerically delicate branch was taken; results may lose digits."""


# ---------------------------------------------------------------------------
# data containers


@dataclass(frozen=True)
class QuantumModel:
    """Finite Hermitian system with a detected state and an initial state.

    hamiltonian : (dim, dim) complex Hermitian matrix
    psi_detect  : unit vector probed by the detector
    psi_init    : unit vector the evolution starts from
    """

    hamiltonian: np.ndarray
    psi_detect: np.ndarray
    psi_init: np.ndarray

    def __post_init__(self) -> None:
        h = np.asarray(self.hamiltonian, dtype=complex)
        d = np.asarray(self.psi_detect, dtype=complex).ravel()
        s = np.asarray(self.psi_init, dtype=complex).ravel()
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise InvalidModelError("hamiltonian must be a square matrix")
        n = h.shape[0]
        if d.shape != (n,) or s.shape != (n,):
            raise InvalidModelError("state vectors must match the matrix dimension")
        scale = max(1.0, float(np.abs(h).max()))
        if np.abs(h - h.conj().T).max() > 1e-12 * scale:
            raise InvalidModelError("hamiltonian is not Hermitian to 1e-12")
        for name, v in (("psi_detect", d), ("psi_init", s)):
            if abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise InvalidModelError(f"{name} is not normalized to 1e-12")
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "psi_detect", d)
        object.__setattr__(self, "psi_init", s)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]


@dataclass(frozen=True)
class SpectralChargeData:
    """Distinct levels with their detection weights and transition amplitudes.

    levels     : (w,) strictly increasing real energies E_l
    weights    : (w,) detection weights p_l > 0, summing to 1
    amplitudes : (w,) complex q_l with p_l * q_l = <psi_d|P_l|psi_in>
    overlap    : <psi_d|psi_in>
    """

    levels: np.ndarray
    weights: np.ndarray
    amplitudes: np.ndarray
    overlap: complex

    def __post_init__(self) -> None:
        e = np.asarray(self.levels, dtype=float)
        p = np.asarray(self.weights, dtype=float)
        q = np.asarray(self.amplitudes, dtype=complex)
        if not (e.shape == p.shape == q.shape) or e.ndim != 1 or e.size == 0:
            raise EmptySpectrumError("levels, weights, amplitudes must be equal-length 1d arrays")
        if np.any(np.diff(e) <= 0):
            raise FdtlabError("levels must be strictly increasing")
        if np.any(p <= 0):
            raise FdtlabError("weights must be positive after dropping")
        if abs(p.sum() - 1.0) > 1e-10:
            raise FdtlabError("weights must sum to 1 within 1e-10")
        if abs(np.sum(p * q) - self.overlap) > 1e-10:
            raise FdtlabError("sum p_l q_l must equal the overlap within 1e-10")
        object.__setattr__(self, "levels", e)
        object.__setattr__(self, "weights", p)
        object.__setattr__(self, "amplitudes", q)
        object.__setattr__(self, "overlap", complex(self.overlap))

    @property
    def w(self) -> int:
        """Number of distinct detectable levels."""
        return self.levels.size

    @property
    def spread(self) -> float:
        """Spectral width max(E) - min(E); zero for a single level."""
        return float(self.levels[-1] - self.levels[0])


@dataclass(frozen=True)
class DetectionSeries:
    """First-detection amplitudes phi_n on the grid t_n = n * tau, n >= 1."""

    tau: float
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.ndim != 1 or a.size == 0:
            raise FdtlabError("amplitudes must be a nonempty 1d array")
        if self.tau <= 0:
            raise FdtlabError("tau must be positive")
        c = np.cumsum(np.abs(a) ** 2)
        if c[-1] > 1.0 + 1e-9:
            raise FdtlabError("cumulative detection probability exceeds 1")
        object.__setattr__(self, "amplitudes", a)

    @property
    def n_max(self) -> int:
        return self.amplitudes.size

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def times(self) -> np.ndarray:
        return self.tau * np.arange(1, self.n_max + 1)


@dataclass(frozen=True)
class FirstDetectionStats:
    """Total detection probability and conditioned moments of the detection time.

    moments[m-1] holds <T^m>, conditioned on detection.
    """

    p_det: float
    moments: np.ndarray
    truncation_n: int = 0
    tail_estimate: float = 0.0

    def __post_init__(self) -> None:
        m = np.asarray(self.moments, dtype=float)
        if self.p_det > 0 and m.size and not np.all(np.isfinite(m) & (m > 0)):
            raise FdtlabError("moments must be finite and positive when p_det > 0")
        object.__setattr__(self, "moments", m)

    @property
    def mean(self) -> float:
        return float(self.moments[0])

    @property
    def variance(self) -> float:
        if self.moments.size < 2:
            raise FdtlabError("variance requires moments up to order 2")
        return float(self.moments[1] - self.moments[0] ** 2)


@dataclass(frozen=True)
class PoleSet:
    """Decay poles of one detection framework at fixed tau.

    framework     : "strobo" (poles in z, all |z| > 1) or
                    "nhh"    (poles in s, all Re s < 0)
    poles         : (k,) complex pole locations
    v_at_pole     : transition resolvent evaluated at each pole
    u_prime       : derivative of the weight resolvent at each pole
    """

    framework: str
    tau: float
    poles: np.ndarray
    v_at_pole: np.ndarray
    u_prime: np.ndarray

    def __post_init__(self) -> None:
        z = np.asarray(self.poles, dtype=complex)
        v = np.asarray(self.v_at_pole, dtype=complex)
        du = np.asarray(self.u_prime, dtype=complex)
        if self.framework not in ("strobo", "nhh"):
            raise FdtlabError("framework must be 'strobo' or 'nhh'")
        if not (z.shape == v.shape == du.shape) or z.ndim != 1:
            raise FdtlabError("pole arrays must share one shape")
        if self.framework == "strobo" and z.size and np.abs(z).min() <= 1.0:
            raise PoleSearchError("stroboscopic poles must lie outside the unit circle")
        if self.framework == "nhh" and z.size and z.real.max() >= 0.0:
            raise PoleSearchError("non-Hermitian poles must have negative real part")
        object.__setattr__(self, "poles", z)
        object.__setattr__(self, "v_at_pole", v)
        object.__setattr__(self, "u_prime", du)

    @property
    def count(self) -> int:
        return self.poles.size


@dataclass(frozen=True)
class ZenoData:
    """Frequent-detection asymptotics of a model.

    omega      : (w-1,) absorption frequencies, one per spectral gap
    rates      : (w-1,) dimensionless decay rates lambda_l
    theta      : (w-1,) complex transition times theta_l
    omega_fast : detected-state energy expectation
    tau_zeno   : Zeno time of the detected state
    """

    omega: np.ndarray
    rates: np.ndarray
    theta: np.ndarray
    omega_fast: float
    tau_zeno: float

    def __post_init__(self) -> None:
        w = np.asarray(self.omega, dtype=float)
        r = np.asarray(self.rates, dtype=float)
        t = np.asarray(self.theta, dtype=complex)
        if not (w.shape == r.shape == t.shape) or w.ndim != 1:
            raise FdtlabError("zeno arrays must share one shape")
        if r.size and np.any(r <= 0):
            raise FdtlabError("absorption rates must be positive")
        object.__setattr__(self, "omega", w)
        object.__setattr__(self, "rates", r)
        object.__setattr__(self, "theta", t)

    @property
    def count(self) -> int:
        return self.omega.size


@dataclass(frozen=True)
class NhhEvolution:
    """Non-Hermitian wave function data on a time grid."""

    t: np.ndarray
    amplitude: np.ndarray     # detector-state amplitude Psi(t)
    survival: np.ndarray      # squared norm of the decaying state
    density: np.ndarray       # first-detection density 2*Gamma*|Psi|^2
    used_fallback: bool = False


@dataclass(frozen=True)
class ZenoPdf:
    """Zeno-limit detection density plus separately carried point masses."""

    t: np.ndarray
    density: np.ndarray
    point_masses: tuple = field(default_factory=tuple)  # ((time, mass), ...)


@dataclass(frozen=True)
class CollapseReport:
    """Envelope comparison of two detection series in scaled time."""

    x: np.ndarray             # common scaled-time grid t*tau
    envelope_a: np.ndarray
    envelope_b: np.ndarray
    max_rel_dev: float
