"""Model builders, spectral reduction, and resolvent evaluation.

The detection problem only sees the Hamiltonian through its distinct levels
E_l, the detection weights p_l = <psi_d|P_l|psi_d>, and the amplitudes q_l
defined by p_l q_l = <psi_d|P_l|psi_in>.  `spectral_charges` performs that
reduction; everything downstream consumes the resulting data.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .core import (
    EmptySpectrumError,
    InfiniteZenoTimeError,
    InvalidModelError,
    QuantumModel,
    SingularEvaluationError,
    SpectralChargeData,
)

__all__ = [
    "build_ring",
    "build_gue",
    "site_state",
    "uniform_state",
    "perturbed_state",
    "with_initial_state",
    "spectral_charges",
    "u_psi",
    "v_psi",
    "u_psi_prime",
    "u_phi",
    "v_phi",
    "u_phi_prime",
    "zeno_time",
    "save_model",
    "load_model",
    "ZenoTime",
]


# ---------------------------------------------------------------------------
# builders


def site_state(dim: int, index: int) -> np.ndarray:
    """Basis vector |index> of a dim-dimensional lattice."""
    if not 0 <= index < dim:
        raise InvalidModelError(f"site index {index} outside [0, {dim})")
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def uniform_state(dim: int) -> np.ndarray:
    """Equal-amplitude superposition over all sites."""
    return np.full(dim, 1.0 / np.sqrt(dim), dtype=complex)


def perturbed_state(psi_detect: np.ndarray, psi_orth: np.ndarray, epsilon: float) -> np.ndarray:
    """sqrt(1-eps^2)|psi_d> + eps|psi_orth> with <psi_d|psi_orth> = 0."""
    if not 0.0 <= epsilon <= 1.0:
        raise InvalidModelError("epsilon must lie in [0, 1]")
    d = np.asarray(psi_detect, dtype=complex)
    o = np.asarray(psi_orth, dtype=complex)
    if abs(np.vdot(d, o)) > 1e-12:
        raise InvalidModelError("perturbation direction must be orthogonal to psi_detect")
    return np.sqrt(1.0 - epsilon**2) * d + epsilon * o


def with_initial_state(model: QuantumModel, psi_init: np.ndarray) -> QuantumModel:
    """Same system, different launch state."""
    return QuantumModel(model.hamiltonian, model.psi_detect, psi_init)


def build_ring(sites: int, gamma: float = 1.0, detect_site: int = 0) -> QuantumModel:
    """Tight-binding ring with nearest-neighbour hopping -gamma.

    The detector sits on `detect_site`; the initial state defaults to the
    same site (return problem) and can be replaced with `with_initial_state`.
    """
    if sites < 3:
        raise InvalidModelError("a ring needs at least 3 sites")
    if gamma <= 0:
        raise InvalidModelError("hopping gamma must be positive")
    h = np.zeros((sites, sites), dtype=complex)
    for x in range(sites):
        h[x, (x + 1) % sites] = -gamma
        h[x, (x - 1) % sites] = -gamma
    d = site_state(sites, detect_site)
    return QuantumModel(h, d, d.copy())


def build_gue(dim: int, seed: int, gamma: float = 1.0, detect_site: int = 0) -> QuantumModel:
    """Random Hermitian matrix, rescaled so the spectrum spans [-2g, 2g].

    Sampling is deterministic in `seed`.  The raw matrix is (A + A^dag)/2
    with iid standard complex Gaussian entries in A; the affine rescale
    H -> (4g / (Emax - Emin)) (H - (Emax + Emin)/2) pins the extreme
    eigenvalues at exactly -2g and +2g.
    """
    if dim < 2:
        raise InvalidModelError("dim must be at least 2")
    if gamma <= 0:
        raise InvalidModelError("gamma must be positive")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = 0.5 * (a + a.conj().T)
    evals = np.linalg.eigvalsh(h)
    lo, hi = float(evals[0]), float(evals[-1])
    h = (4.0 * gamma / (hi - lo)) * (h - 0.5 * (hi + lo) * np.eye(dim))
    h = 0.5 * (h + h.conj().T)  # kill rescaling round-off
    d = site_state(dim, detect_site)
    return QuantumModel(h, d, d.copy())


# ---------------------------------------------------------------------------
# spectral reduction


def spectral_charges(
    model: QuantumModel,
    merge_tol: float | None = None,
    drop_tol: float = 1e-12,
) -> SpectralChargeData:
    """Collapse the eigendecomposition onto detectable levels.

    Eigenvalues closer than `merge_tol` (default 1e-9 times the spectral
    width) are treated as one degenerate level; levels whose weight p_l
    falls below `drop_tol` are discarded.  Raises EmptySpectrumError if
    nothing survives.
    """
    evals, evecs = np.linalg.eigh(model.hamiltonian)
    spread = float(evals[-1] - evals[0])
    if merge_tol is None:
        merge_tol = 1e-9 * max(spread, 1.0)

    # <psi_d|E_m> and <E_m|psi_in> per eigenvector
    d_proj = evecs.conj().T @ model.psi_detect
    s_proj = evecs.conj().T @ model.psi_init

    levels: list[float] = []
    weights: list[float] = []
    cross: list[complex] = []
    i = 0
    n = evals.size
    while i < n:
        j = i + 1
        while j < n and evals[j] - evals[j - 1] < merge_tol:
            j += 1
        block = slice(i, j)
        p = float(np.sum(np.abs(d_proj[block]) ** 2))
        pq = complex(np.sum(np.conj(d_proj[block]) * s_proj[block]))
        if p > drop_tol:
            levels.append(float(np.mean(evals[block])))
            weights.append(p)
            cross.append(pq)
        i = j

    if not levels:
        raise EmptySpectrumError("all spectral weights below the drop threshold")

    p_arr = np.array(weights)
    pq_arr = np.array(cross)
    overlap = complex(np.vdot(model.psi_detect, model.psi_init))
    return SpectralChargeData(
        levels=np.array(levels),
        weights=p_arr,
        amplitudes=pq_arr / p_arr,
        overlap=overlap,
    )


# ---------------------------------------------------------------------------
# resolvents

_SING = 1e-12


def u_psi(data: SpectralChargeData, s: complex) -> complex:
    """Weight resolvent sum p_l / (s + i E_l)."""
    den = s + 1j * data.levels
    _check_singular(den)
    return complex(np.sum(data.weights / den))


def v_psi(data: SpectralChargeData, s: complex) -> complex:
    """Transition resolvent sum p_l q_l / (s + i E_l)."""
    den = s + 1j * data.levels
    _check_singular(den)
    return complex(np.sum(data.weights * data.amplitudes / den))


def u_psi_prime(data: SpectralChargeData, s: complex) -> complex:
    """d/ds of the weight resolvent."""
    den = s + 1j * data.levels
    _check_singular(den)
    return complex(-np.sum(data.weights / den**2))


def u_phi(data: SpectralChargeData, z: complex, tau: float) -> complex:
    """Generating-variable resolvent sum p_l / (1 - z exp(-i tau E_l))."""
    den = 1.0 - z * np.exp(-1j * tau * data.levels)
    _check_singular(den, scale=1.0 + abs(z))
    return complex(np.sum(data.weights / den))


def v_phi(data: SpectralChargeData, z: complex, tau: float) -> complex:
    """Generating-variable transition resolvent sum p_l q_l / (1 - z e^{-i tau E_l})."""
    den = 1.0 - z * np.exp(-1j * tau * data.levels)
    _check_singular(den, scale=1.0 + abs(z))
    return complex(np.sum(data.weights * data.amplitudes / den))


def u_phi_prime(data: SpectralChargeData, z: complex, tau: float) -> complex:
    """d/dz of u_phi."""
    phase = np.exp(-1j * tau * data.levels)
    den = 1.0 - z * phase
    _check_singular(den, scale=1.0 + abs(z))
    return complex(np.sum(data.weights * phase / den**2))


def _check_singular(den: np.ndarray, scale: float = 1.0) -> None:
    if np.min(np.abs(den)) < _SING * scale:
        raise SingularEvaluationError("resolvent evaluated at a pole")


# ---------------------------------------------------------------------------
# Zeno time


class ZenoTime(NamedTuple):
    tau_zeno: float
    omega_fast: float


def zeno_time(model: QuantumModel) -> ZenoTime:
    """Zeno time 1/sqrt(<H Q H>) of the detected state, Q = 1 - |d><d|.

    Also returns the detected-state energy expectation.  Raises
    InfiniteZenoTimeError when psi_d is an eigenstate (no leakage).
    """
    h = model.hamiltonian
    d = model.psi_detect
    hd = h @ d
    omega0 = float(np.real(np.vdot(d, hd)))
    leak = float(np.real(np.vdot(hd, hd))) - omega0**2
    scale = max(1.0, float(np.abs(h).max()) ** 2)
    if leak <= 1e-24 * scale:
        raise InfiniteZenoTimeError("detected state is an eigenstate; Zeno time diverges")
    return ZenoTime(1.0 / np.sqrt(leak), omega0)


# ---------------------------------------------------------------------------
# model file format
#
#   # fdtlab model v1
#   dim <n>
#   hamiltonian          (n rows of n whitespace-separated "re,im" pairs)
#   psi_detect           (one row of n pairs)
#   psi_init             (one row of n pairs)


def save_model(model: QuantumModel, path: str) -> None:
    """Write the model in the documented plain-text format."""
    n = model.dim

    def pair(x: complex) -> str:
        return f"{x.real:.17g},{x.imag:.17g}"

    lines = ["# fdtlab model v1", f"dim {n}", "hamiltonian"]
    for row in model.hamiltonian:
        lines.append(" ".join(pair(x) for x in row))
    lines.append("psi_detect")
    lines.append(" ".join(pair(x) for x in model.psi_detect))
    lines.append("psi_init")
    lines.append(" ".join(pair(x) for x in model.psi_init))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path: str) -> QuantumModel:
    """Read a model file and validate all invariants."""
    with open(path, encoding="utf-8") as fh:
        raw = [ln.strip() for ln in fh]
    lines = [ln for ln in raw if ln and not ln.startswith("#")]

    def parse_row(text: str, n: int, where: str) -> np.ndarray:
        parts = text.split()
        if len(parts) != n:
            raise InvalidModelError(f"{where}: expected {n} entries, got {len(parts)}")
        out = np.empty(n, dtype=complex)
        for k, tok in enumerate(parts):
            try:
                re_s, im_s = tok.split(",")
                out[k] = complex(float(re_s), float(im_s))
            except ValueError as exc:
                raise InvalidModelError(f"{where}: bad complex pair {tok!r}") from exc
        return out

    try:
        if not lines or not lines[0].startswith("dim "):
            raise InvalidModelError("missing 'dim' header")
        n = int(lines[0].split()[1])
        if n < 1:
            raise InvalidModelError("dim must be positive")
        idx = lines.index("hamiltonian") + 1
        h = np.vstack([parse_row(lines[idx + r], n, f"hamiltonian row {r}") for r in range(n)])
        idx = lines.index("psi_detect") + 1
        d = parse_row(lines[idx], n, "psi_detect")
        idx = lines.index("psi_init") + 1
        s = parse_row(lines[idx], n, "psi_init")
    except (ValueError, IndexError) as exc:
        raise InvalidModelError(f"malformed model file {path}: {exc}") from exc
    return QuantumModel(h, d, s)
