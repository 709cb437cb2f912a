"""Frequent-detection limit: densities, moments, corrections, perturbed launches."""
import numpy as np
import pytest

from fdtlab import CorrectionInvalidError, FdtlabError, RegimeWarning
from fdtlab import electro
from fdtlab import model as mm
from fdtlab import nhh, strobo, zeno


@pytest.fixture(scope="module")
def zd_return(ring_data):
    return electro.zeno_data(ring_data)


@pytest.fixture(scope="module")
def zd_trans(trans1_data):
    return electro.zeno_data(trans1_data)


pytestmark = pytest.mark.filterwarnings("ignore::fdtlab.core.RegimeWarning")


def test_return_moments_closed_form(zd_return):
    """Stroboscopic return moments carry the factor four; absorbing ones do not."""
    tau = 0.1
    st_s = zeno.zeno_stats(zd_return, tau, 2, "strobo", "return", 1.0)
    st_n = zeno.zeno_stats(zd_return, tau, 2, "nhh", "return", 1.0)
    assert st_s.p_det == 1.0 and st_n.p_det == 1.0
    assert st_s.mean == pytest.approx(4 * tau, abs=1e-14)
    assert st_n.mean == pytest.approx(tau, abs=1e-14)
    # second moment: (2 / 4) sum 1/(2 lambda) = 3.375, tau-independent
    assert st_n.moments[1] == pytest.approx(3.375, abs=1e-10)
    assert st_s.moments[1] == pytest.approx(13.5, abs=1e-10)


def test_transition_moments_match_pole_statistics(trans1_data, zd_trans):
    # deep in the frequent-probing regime the limit formula meets the poles
    tau = 0.02
    st = zeno.zeno_stats(zd_trans, tau, 1, "nhh", "transition", 0.0)
    full = nhh.nhh_stats(nhh.nhh_poles(trans1_data, tau), m_max=1)
    assert st.p_det == pytest.approx(full.p_det, rel=1e-6)
    assert st.mean == pytest.approx(full.mean, rel=0.02)


def test_opposite_launch_sure_detection(trans3):
    zd3 = electro.zeno_data(mm.spectral_charges(trans3))
    st = zeno.zeno_stats(zd3, 0.05, 1, "strobo", "transition", 0.0)
    st_n = zeno.zeno_stats(zd3, 0.05, 1, "nhh", "transition", 0.0)
    assert st.p_det == pytest.approx(1.0, abs=1e-9)
    # conditioned mean is kind-independent for transitions
    assert st.mean == pytest.approx(45.0, rel=1e-9)
    assert st_n.mean == pytest.approx(45.0, rel=1e-9)


def test_zeno_pdf_point_mass_and_fast_term(zd_return):
    tau = 0.1
    t = np.linspace(0.0, 3.0, 30001)
    zp_s = zeno.zeno_pdf(zd_return, tau, t, "strobo", "return", 1.0)
    zp_n = zeno.zeno_pdf(zd_return, tau, t, "nhh", "return", 1.0)
    assert zp_s.point_masses == ((tau, 1.0),)
    assert zp_n.point_masses == ()
    # absorbing fast transient carries the overlap weight
    assert zp_n.density[0] == pytest.approx(4.0 / tau, rel=0.05)
    fast_mass = np.trapezoid(zp_n.density - zp_s.density / 4.0, t)
    assert fast_mass == pytest.approx(1.0, abs=0.01)


def test_zeno_pdf_transition_no_point_mass(zd_trans):
    t = np.linspace(0.0, 2.0, 101)
    zp = zeno.zeno_pdf(zd_trans, 0.1, t, "strobo", "transition", 0.0)
    assert zp.point_masses == ()
    assert np.all(zp.density >= 0)


def test_zeno_pdf_approaches_exact_series(ring_data, zd_return):
    """Window mass (1, 3] of the limit density against the exact series.

    The ratio climbs to one as tau shrinks; the values are frozen from a
    quadrature of this exact construction.
    """
    t = np.linspace(1.0, 3.0, 20001)
    frozen = {0.5: 0.7164, 0.25: 0.9103, 0.1: 0.9839, 0.05: 0.9959}
    ratios = []
    for tau in (0.5, 0.25, 0.1, 0.05):
        nmax = int(round(3 / tau))
        ser = strobo.renewal_amplitudes(ring_data, tau, nmax)
        lo, hi = int(np.floor(1 / tau)), int(np.floor(3 / tau))
        exact = float(ser.probabilities[lo:hi].sum())
        zp = zeno.zeno_pdf(zd_return, tau, t, "strobo", "return", 1.0)
        r = float(np.trapezoid(zp.density, t)) / exact
        assert r == pytest.approx(frozen[tau], abs=5e-4)
        ratios.append(r)
    assert np.all(np.diff(ratios) > 0) and ratios[-1] < 1.0


def test_regime_warning_fires(zd_return):
    # tau above half the Zeno time is outside the expansion's comfort zone
    with pytest.warns(RegimeWarning):
        zeno.zeno_stats(zd_return, 0.5, 1, "strobo", "return", 1.0)


def test_correction_map_arithmetic():
    p, moments = 0.9, np.array([2.0, 10.0])
    pc, mc = zeno.correction_map(p, moments)
    assert pc == pytest.approx(0.6, abs=1e-15)
    assert np.allclose(mc, moments * (3.6 / 0.6))
    with pytest.raises(CorrectionInvalidError):
        zeno.correction_map(0.75, moments)
    with pytest.warns(RegimeWarning):
        zeno.correction_map(0.75 + 1e-5, moments)


def test_perturbed_moments_limits(zd_trans):
    tau = 1 / 16
    base = zeno.perturbed_return_moments(zd_trans, tau, 0.0, 1, mode="uniform")
    assert base == pytest.approx(4 * tau, abs=1e-14)
    grid = [zeno.perturbed_return_moments(zd_trans, tau, e, 1, mode="uniform")
            for e in (0.0, 0.05, 0.1, 0.2, 0.4, 0.7, 1.0)]
    assert np.all(np.diff(grid) > 0)  # deeper perturbation, later detection
    deep, comparable = zeno.perturbed_return_moments(zd_trans, tau, 1e-3, 1, mode="state")
    uni = zeno.perturbed_return_moments(zd_trans, tau, 1e-3, 1, mode="uniform")
    assert uni == pytest.approx(comparable, rel=5e-3)
    with pytest.raises(FdtlabError):
        zeno.perturbed_return_moments(zd_trans, tau, 1.5, 1)


def test_shifted_protocol_formulas():
    assert zeno.shifted_protocol_mean(0.1, 0.0, 4) == pytest.approx(0.4, abs=1e-15)
    # (1 - e)(e + w (1 - e)) tau at e = 1/2, w = 4
    assert zeno.shifted_protocol_mean(0.1, 0.5, 4) == pytest.approx(0.125, abs=1e-15)
    assert zeno.shifted_moment_scale(0.3) == pytest.approx(0.49, abs=1e-15)
    with pytest.raises(FdtlabError):
        zeno.shifted_protocol_mean(0.1, 1.0, 4)


def test_envelope_collapse_scaled_overlay(ring_data, trans1_data):
    """Slow envelopes at different tau collapse in t tau coordinates."""
    for data, problem in ((ring_data, "return"), (trans1_data, "transition")):
        a = strobo.renewal_amplitudes(data, 0.1, 4000)
        b = strobo.renewal_amplitudes(data, 0.05, 8000)
        rep = zeno.envelope_collapse(a, b, problem)
        assert rep.max_rel_dev < 0.05
        assert rep.x.size > 10
