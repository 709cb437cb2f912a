"""Infinite chain: Bessel kernels, absorbing wave function, closed forms."""
import numpy as np
import pytest

from fdtlab import infline

# reference value of the order-zero kernel at argument 1, summed by hand
# from the alternating factorial series to 16 digits
J0_AT_1 = 0.7651976865579666


def test_bessel_reference_value():
    assert infline.bessel_j(0, 1.0) == pytest.approx(J0_AT_1, abs=1e-14)


def test_bessel_against_power_series(rng):
    # 30 terms of sum (-1)^k (x/2)^(2k+n) / (k! (k+n)!) cover |x| <= 6
    from math import factorial

    for _ in range(20):
        n = int(rng.integers(0, 6))
        x = float(rng.uniform(-6.0, 6.0))
        ref = sum((-1) ** k * (x / 2.0) ** (2 * k + n) / (factorial(k) * factorial(k + n))
                  for k in range(30))
        assert infline.bessel_j(n, x) == pytest.approx(ref, abs=1e-12)


def test_bessel_recurrence(rng):
    # J_{n-1} + J_{n+1} = (2n/x) J_n
    for _ in range(30):
        n = int(rng.integers(1, 60))
        x = float(rng.uniform(0.5, 80.0))
        lhs = infline.bessel_j(n - 1, x) + infline.bessel_j(n + 1, x)
        rhs = 2.0 * n / x * infline.bessel_j(n, x)
        assert lhs == pytest.approx(rhs, abs=1e-10)


def test_bessel_sum_rule():
    # J_0^2 + 2 sum_{k>=1} J_k^2 = 1 at any argument
    for x in (0.7, 3.0, 12.0):
        total = infline.bessel_j(0, x) ** 2
        total += 2.0 * sum(infline.bessel_j(k, x) ** 2 for k in range(1, 60))
        assert total == pytest.approx(1.0, abs=1e-12)


def test_bessel_vectorized_and_domain():
    x = np.linspace(-5.0, 5.0, 11)
    out = infline.bessel_j(2, x)
    assert out.shape == x.shape
    with pytest.raises(ValueError):
        infline.bessel_j(201, 1.0)
    with pytest.raises(ValueError):
        infline.bessel_j(0, 2.0e4)


def test_free_amplitude_unitarity():
    t = 2.0
    total = abs(infline.line_amplitude(0, t)) ** 2
    total += 2.0 * sum(abs(infline.line_amplitude(x, t)) ** 2 for x in range(1, 41))
    assert total == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        infline.line_amplitude(-1, t)


def test_branch_root_both_sides():
    """root^2 = 4 - omega^2 with the absorption-decay sign choices."""
    for om in (-3.0, -1.7, 0.0, 0.3, 1.99, 2.01, 5.0):
        z = infline.branch_root(om)
        assert z * z == pytest.approx(4.0 - om * om, abs=1e-12)
        if abs(om) <= 2.0:
            assert z.real >= 0.0 and abs(z.imag) < 1e-15
        else:
            assert abs(z.real) < 1e-15 and np.sign(z.imag) == np.sign(om)


def test_absorbing_wavefunction_frozen_point():
    # independently cross-checked against a finite-lattice absorbing run
    v = infline.line_psi(3, np.array([5.0]), 0.01)[0]
    assert v.real == pytest.approx(0.0, abs=1e-9)
    assert v.imag == pytest.approx(-1.769645369e-4, abs=1e-9)


def test_absorbing_density_integrates_to_closed_form():
    """Time-domain mass equals the closed detection probability at tau = 0.5."""
    tau = 0.5
    early = np.linspace(0.0, 4.0, 8001)
    late = np.linspace(4.0, 60.0, 8001)
    de = (4.0 / tau) * np.abs(infline.line_psi(0, early, tau)) ** 2
    dl = (4.0 / tau) * np.abs(infline.line_psi(0, late, tau)) ** 2
    val = np.trapezoid(de, early) + np.trapezoid(dl, late)
    m = late >= 40.0
    # t^-3 tail continuation past the grid
    val += float(np.mean(dl[m] * late[m] ** 3)) / (2 * 60.0**2)
    assert val == pytest.approx(infline.pdet_closed(tau, 0), abs=1e-4)


def test_absorbing_wavefunction_envelope_decay():
    # |Psi_3| envelope falls off as t^(-3/2); window maxima fix the power
    tau = 0.25
    tg = np.linspace(12.5, 100.0, 701)
    a3 = np.abs(infline.line_psi(3, tg, tau))
    edges = [12.5, 25.0, 50.0, 100.0]
    mids, maxima = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (tg >= lo) & (tg <= hi)
        mids.append(np.sqrt(lo * hi))
        maxima.append(a3[sel].max())
    slope = np.polyfit(np.log(mids), np.log(maxima), 1)[0]
    assert -1.65 < slope < -1.35


def test_closed_forms_frozen_values():
    """Values pinned from an independent quadrature of the defining integrals."""
    assert infline.pdet_closed(0.1, 1) == pytest.approx(0.073753020729, abs=1e-9)
    assert infline.mean_t_closed(0.1, 1) == pytest.approx(0.627194485, abs=1e-8)
    assert infline.pdet_closed(0.25, 0) == pytest.approx(0.97864679875, abs=1e-9)
    assert infline.pdet_closed(0.5, 0) == pytest.approx(0.93761342086, abs=1e-9)
    assert infline.pdet_closed(1.5, 0) == pytest.approx(0.77049458, abs=1e-7)


def test_detected_origin_mean_times_probability():
    # <T> P = tau / 4 exactly for the detected-site launch
    for tau in (0.1, 0.5, 0.99, 1.0, 1.01, 1.5):
        got = infline.mean_t_closed(tau, 0) * infline.pdet_closed(tau, 0)
        assert got == pytest.approx(tau / 4.0, rel=1e-9)


def test_closed_forms_continuous_at_band_edge():
    # the arccos and arcsinh continuations meet smoothly at tau = 1
    for xi in (0, 1):
        pm = infline.pdet_closed(1.0 - 1e-6, xi)
        p0 = infline.pdet_closed(1.0, xi)
        pp = infline.pdet_closed(1.0 + 1e-6, xi)
        assert abs(pm - p0) < 1e-5 and abs(pp - p0) < 1e-5
        mm_ = infline.mean_t_closed(1.0 - 1e-6, xi)
        m0 = infline.mean_t_closed(1.0, xi)
        mp = infline.mean_t_closed(1.0 + 1e-6, xi)
        assert abs(mm_ - m0) < 1e-5 and abs(mp - m0) < 1e-5


def test_neighbor_probability_small_tau():
    # P(tau, 1) = (8 / 3 pi) tau - (5/4) tau^2 + O(tau^3)
    for tau, tol in ((0.02, 0.04), (0.05, 0.1)):
        lead = 8.0 / (3.0 * np.pi) * tau
        c2 = (infline.pdet_closed(tau, 1) - lead) / tau**2
        assert c2 == pytest.approx(-1.25, abs=tol)


def test_neighbor_mean_small_tau():
    assert infline.mean_t_closed(1e-3, 1) == pytest.approx(3 * np.pi / 16, rel=5e-3)


def test_strobo_series_first_amplitudes():
    for tau in (0.1, 0.5):
        ser = infline.line_strobo_series(0, tau, 3)
        assert ser.amplitudes[0] == pytest.approx(infline.bessel_j(0, 2 * tau), abs=1e-12)
    # phi_2 = -tau J_1(4 tau) + O(tau^4)
    ser = infline.line_strobo_series(0, 0.1, 3)
    approx = -0.1 * infline.bessel_j(1, 0.4)
    assert abs(ser.amplitudes[1] - approx) < 0.01 * abs(approx)


def test_strobo_sum_matches_polynomial():
    """Return-sum expansion 1 - 2 t^2 + 32 t^3 / 3 pi - ... of the detected site."""

    def poly(tau):
        return (1.0 - 2.0 * tau**2 + 32.0 * tau**3 / (3.0 * np.pi)
                - 4.5 * tau**4 + 256.0 * tau**5 / (15.0 * np.pi)
                - 50.0 * tau**6 / 9.0)

    for tau, tol in ((0.05, 1e-8), (0.1, 1e-7), (0.25, 1e-3)):
        s = float(infline.line_strobo_series(0, tau, 20000).probabilities.sum())
        assert abs(s - poly(tau)) < tol


def test_strobo_sum_tracks_corrected_closed_form():
    # sum |phi|^2 follows 4P - 3 well past the expansion's native range
    for tau, tol in ((0.35, 1e-4), (0.5, 5e-4)):
        n = int(5000 / tau)
        s = float(infline.line_strobo_series(0, tau, n).probabilities.sum())
        assert abs(s - (4.0 * infline.pdet_closed(tau, 0) - 3.0)) < tol


def test_corrected_form_departs_at_large_tau():
    # past tau ~ pi/2 the map leaves its validity window and goes negative
    tau = 1.7
    s = float(infline.line_strobo_series(0, tau, 2900).probabilities.sum())
    corrected = 4.0 * infline.pdet_closed(tau, 0) - 3.0
    assert corrected < 0.0 < s


def test_series_comparison_exponent():
    cmpres = infline.series_comparison((0.2, 0.1, 0.05), n_max=20000)
    assert 5.5 < cmpres.exponent < 6.5
    d = np.asarray(cmpres.delta)
    assert np.all(d > 0)
    ratios = d[:-1] / d[1:]
    assert np.all((ratios > 40.0) & (ratios < 90.0))


def test_line_series_argument_cap():
    with pytest.raises(ValueError):
        infline.line_strobo_series(0, 1.0, 5001)
