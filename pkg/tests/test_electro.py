"""Electrostatic picture: potentials, absorption frequencies, Zeno reduction."""
import warnings

import numpy as np
import pytest

from fdtlab import RegimeWarning, SingularEvaluationError
from fdtlab import electro
from fdtlab import model as mm
from fdtlab import nhh


def test_potential_gradient_is_derivative(ring_data, rng):
    h = 1e-6
    for kind, fn in (("strobo", electro.potential_strobo), ("nhh", electro.potential_nhh)):
        for _ in range(6):
            x = rng.uniform(0.3, 2.0)
            y = rng.uniform(-3.0, 3.0)
            v, (gx, gy) = fn(ring_data, 0.4, x, y)
            vxp, _ = fn(ring_data, 0.4, x + h, y)
            vxm, _ = fn(ring_data, 0.4, x - h, y)
            vyp, _ = fn(ring_data, 0.4, x, y + h)
            vym, _ = fn(ring_data, 0.4, x, y - h)
            assert gx == pytest.approx((vxp - vxm) / (2 * h), abs=1e-5)
            assert gy == pytest.approx((vyp - vym) / (2 * h), abs=1e-5)


def test_potential_raises_on_charge(ring_data):
    # nhh charges sit at (0, E_l)
    with pytest.raises(SingularEvaluationError):
        electro.potential_nhh(ring_data, 0.3, 0.0, float(ring_data.levels[0]))


def test_potential_grid_marks_charges_nan(ring_data):
    xs = np.array([-0.5, 0.0, 0.5])
    ys = ring_data.levels.copy()
    V, Gx, Gy = electro.potential_grid(ring_data, 0.3, "nhh", xs, ys)
    assert V.shape == (len(ys), len(xs))
    assert np.all(np.isnan(V[:, 1]))  # the x = 0 column hits every charge
    assert np.all(np.isfinite(V[:, [0, 2]]))
    assert np.all(np.isfinite(Gx[:, [0, 2]])) and np.all(np.isfinite(Gy[:, [0, 2]]))


def test_absorption_frequencies_ring(ring_data):
    om = electro.absorption_frequencies(ring_data)
    assert np.allclose(om, [-np.sqrt(3.0), 0.0, np.sqrt(3.0)], atol=1e-9)


def test_absorption_frequencies_are_resolvent_zeros(ring_data):
    for w in electro.absorption_frequencies(ring_data):
        assert abs(np.sum(ring_data.weights / (w - ring_data.levels))) < 1e-9


def test_absorption_frequencies_interlace(rng):
    for k in range(12):
        m = mm.build_gue(3 + int(rng.integers(0, 8)), seed=500 + k)
        d = mm.spectral_charges(m)
        om = electro.absorption_frequencies(d)
        assert om.size == d.w - 1
        assert np.all(om > d.levels[:-1]) and np.all(om < d.levels[1:])


def test_zeno_data_ring(ring_data):
    zd = electro.zeno_data(ring_data)
    assert np.allclose(zd.rates, [1 / 6, 2 / 3, 1 / 6], atol=1e-10)
    assert np.allclose(zd.omega, [-np.sqrt(3.0), 0.0, np.sqrt(3.0)], atol=1e-9)
    assert zd.tau_zeno == pytest.approx(1 / np.sqrt(2.0), abs=1e-12)
    assert abs(zd.omega_fast) < 1e-12
    # rates sum to the detected-state weight balance: sum 2 lambda = w - 1
    assert np.sum(2 * zd.rates) == pytest.approx(2.0, abs=1e-10)


def test_zeno_theta_weights(trans1_data, trans3):
    zd = electro.zeno_data(trans1_data)
    # transition weight sum 2 lambda |theta|^2 for the one-off launch
    assert np.sum(2 * zd.rates * np.abs(zd.theta) ** 2) == pytest.approx(0.5, abs=1e-9)
    zd3 = electro.zeno_data(mm.spectral_charges(trans3))
    assert np.sum(2 * zd3.rates * np.abs(zd3.theta) ** 2) == pytest.approx(1.0, abs=1e-9)


def test_lazy_limit_matches_full_poles(ring_data):
    tau = 200.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        pset, st = electro.lazy_limit(ring_data, tau)
    full = nhh.nhh_stats(nhh.nhh_poles(ring_data, tau), m_max=2)
    assert st.p_det == pytest.approx(1.0, abs=1e-10)  # return launch: sum p |q|^2 = 1
    assert st.mean == pytest.approx(full.mean, rel=0.02)
    # lazy pole locations
    want = -2.0 * ring_data.weights / tau - 1j * ring_data.levels
    assert np.max(np.abs(np.sort_complex(pset.poles) - np.sort_complex(want))) < 1e-12


def test_lazy_limit_warns_at_moderate_tau(ring_data):
    with pytest.warns(RegimeWarning):
        electro.lazy_limit(ring_data, 1.0)
