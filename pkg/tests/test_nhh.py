"""Absorbing non-Hermitian evolution, its poles, and framework agreement."""
import numpy as np
import pytest

from fdtlab import FdtlabError
from fdtlab import model as mm
from fdtlab import nhh, strobo


def test_density_accounts_for_norm_loss(trans1):
    """Integrated detection density equals the lost survival probability."""
    tau = 0.25
    t = np.linspace(0.0, 400.0, 40001)
    res = nhh.evolve_nhh(trans1, tau, t)
    dt = np.diff(t)
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (res.density[1:] + res.density[:-1]) * dt)))
    assert np.max(np.abs(cum - (1.0 - res.survival))) < 1e-5


def test_stats_match_numeric_moments(trans1, trans1_data):
    tau = 0.25
    poles = nhh.nhh_poles(trans1_data, tau)
    st = nhh.nhh_stats(poles, m_max=2)
    # detection probability is the lazy sum p|q|^2 = 1/2 here, and the
    # conditioned mean came out rational on this ring
    assert st.p_det == pytest.approx(0.5, abs=1e-10)
    assert st.mean == pytest.approx(101.0 / 16.0, rel=1e-8)
    # cross-check the mean against direct quadrature of the density
    t = np.linspace(0.0, 400.0, 40001)
    res = nhh.evolve_nhh(trans1, tau, t)
    p_num = np.trapezoid(res.density, t)
    mean_num = np.trapezoid(t * res.density, t) / p_num
    assert st.mean == pytest.approx(mean_num, rel=1e-5)


def test_pole_condition_and_count(trans1_data):
    for tau in (0.1, 0.5):
        ps = nhh.nhh_poles(trans1_data, tau)
        assert ps.count == trans1_data.w
        assert np.all(ps.poles.real < 0)
        for s in ps.poles:
            assert abs(1.0 + (2.0 / tau) * mm.u_psi(trans1_data, s)) < 1e-9


def test_fast_pole_small_tau(ring_data):
    # one pole sits near -Gamma - i omega_0, the rest decay slowly
    tau = 0.02
    ps = nhh.nhh_poles(ring_data, tau)
    rates = -ps.poles.real
    fast = rates.max()
    assert fast == pytest.approx(2.0 / tau, rel=0.05)
    slow = np.sort(rates)[:-1]
    assert np.all(slow < 1.0)  # slow rates are O(lambda tau)


def test_lazy_poles_sparse_probing(ring_data):
    """tau much longer than every Rabi period: poles near -2 p/tau - iE."""
    tau = 300.0
    ps = nhh.nhh_poles(ring_data, tau)
    want = -2.0 * ring_data.weights / tau - 1j * ring_data.levels
    # match by imaginary part
    order = np.argsort(ps.poles.imag)
    worder = np.argsort(want.imag)
    err = np.abs(ps.poles[order] - want[worder])
    assert np.max(err) < 1e-4


def test_pole_wavefunction_matches_evolution(trans1, trans1_data):
    tau = 0.1
    t = np.linspace(0.5, 60.0, 600)
    ps = nhh.nhh_poles(trans1_data, tau)
    approx = nhh.pole_wavefunction(ps, t)
    exact = nhh.evolve_nhh(trans1, tau, t).amplitude
    assert np.max(np.abs(approx - exact)) < 1e-8


def test_gamma_override_switches_absorption_off(ring6):
    t = np.linspace(0.0, 5.0, 101)
    res = nhh.evolve_nhh(ring6, 0.25, t, gamma=0.0)
    assert np.max(np.abs(res.survival - 1.0)) < 1e-10
    assert np.max(res.density) == 0.0


def test_fast_mode_structure(ring6):
    tau = 0.05
    fm = nhh.fast_mode(ring6, tau)
    # eigenvalue omega_0 - i Gamma to leading order; omega_0 = 0 on the ring
    assert fm.eigenvalue == pytest.approx(-2j / tau, abs=0.1)
    assert fm.survival_ratio == pytest.approx(4.0, abs=1e-9)
    # residual of the eigenpair is O(1/Gamma)
    g = 2.0 / tau
    h_nh = ring6.hamiltonian - 1j * g * np.outer(ring6.psi_detect, ring6.psi_detect.conj())
    resid = h_nh @ fm.vector - fm.eigenvalue * fm.vector
    assert np.linalg.norm(resid) / np.linalg.norm(fm.vector) < 3.0 / g


def test_measured_survival_ratio(ring6):
    """After the fast transient the probed system holds 4x the norm."""
    tau = 0.02
    t_star = 0.5
    n_star = int(round(t_star / tau))
    ser = strobo.direct_amplitudes(ring6, tau, n_star)
    surv_strobo = 1.0 - float(ser.probabilities.sum())
    surv_nhh = float(nhh.evolve_nhh(ring6, tau, np.array([0.0, t_star])).survival[-1])
    assert 3.6 < surv_strobo / surv_nhh < 4.4


def test_frameworks_track_in_zeno_regime(trans1, trans1_data):
    """Small tau: the two detection densities agree pointwise to 5 percent.

    Past t of about 15 the comparison is dominated by interference nulls
    where both densities all but vanish, so the window stops at t = 10
    (two decades of decay).
    """
    tau = 0.1
    n = np.arange(2, 101)  # t from 2 tau to 10
    ser = strobo.renewal_amplitudes(trans1_data, tau, 100)
    dens_s = ser.probabilities[1:] / tau
    dens_n = nhh.evolve_nhh(trans1, tau, n * tau).density
    rel = np.abs(dens_s - dens_n) / dens_n
    assert np.max(rel) < 0.05


def test_frameworks_agree_at_moderate_tau(trans1, trans1_data):
    """tau = 0.5: same detected mass, same envelope, O(tau) pointwise shifts.

    Pointwise agreement genuinely degrades to tens of percent near the
    nulls here, so the check is on the two robust summaries instead: the
    cumulative detected mass and the beat-averaged densities.
    """
    tau = 0.5
    nmax = 40
    ser = strobo.renewal_amplitudes(trans1_data, tau, nmax)
    n = np.arange(1, nmax + 1)
    dens_s = ser.probabilities / tau
    dens_n = nhh.evolve_nhh(trans1, tau, n * tau).density

    t_fine = np.linspace(0.0, 20.0, 8001)
    d_fine = nhh.evolve_nhh(trans1, tau, t_fine).density
    mass_n = np.trapezoid(d_fine, t_fine)
    mass_s = ser.probabilities.sum()
    assert abs(mass_s - mass_n) / mass_n < 0.02

    # one beat period of the sqrt(3) absorption splitting is ~7 probes
    k = int(round(2 * np.pi / np.sqrt(3.0) / tau)) | 1
    ker = np.ones(k) / k
    sm_s = np.convolve(dens_s, ker, mode="valid")
    sm_n = np.convolve(dens_n, ker, mode="valid")
    assert np.max(np.abs(sm_s - sm_n) / sm_n) < 0.30


def test_adiabatic_survival_tracks_full_evolution(trans3):
    tau = 0.05
    t = np.linspace(tau, 20.0, 400)
    adb = nhh.adiabatic_hamiltonian(trans3, tau)
    slow = nhh.adiabatic_survival(adb, t)
    full = nhh.evolve_nhh(trans3, tau, t).survival
    assert np.max(np.abs(slow - full) / full) < 0.02


def test_evolution_grid_validation(ring6):
    with pytest.raises(FdtlabError):
        nhh.evolve_nhh(ring6, 0.25, np.array([1.0, 0.5]))
    with pytest.raises(FdtlabError):
        nhh.evolve_nhh(ring6, 0.25, np.array([0.5]), gamma=-1.0)
